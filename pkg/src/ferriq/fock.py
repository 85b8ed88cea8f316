"""Dense Fock-space operators in the identity Jordan-Wigner ordering.

Qubit 0 is the most significant tensor factor, matching :meth:`PauliString.to_matrix`.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = ["annihilators", "majoranas", "number_sector_basis", "single_particle_states"]

_Z = np.diag([1.0, -1.0]).astype(complex)
_I = np.eye(2, dtype=complex)
_LOWER = np.array([[0, 1], [0, 0]], dtype=complex)  # |1> -> |0>


@lru_cache(maxsize=32)
def _annihilators(n: int) -> tuple[np.ndarray, ...]:
    ops = []
    for i in range(n):
        out = np.array([[1.0 + 0j]])
        for q in range(n):
            f = _Z if q < i else (_LOWER if q == i else _I)
            out = np.kron(out, f)
        out.setflags(write=False)
        ops.append(out)
    return tuple(ops)


def annihilators(n: int) -> list[np.ndarray]:
    """The ``n`` annihilation operators ``c_i`` as dense ``2^n`` matrices."""
    return [np.array(c) for c in _annihilators(n)]


def majoranas(n: int) -> list[np.ndarray]:
    """``chi_{2i} = c_i + c_i^+`` and ``chi_{2i+1} = i (c_i^+ - c_i)``."""
    out = []
    for c in _annihilators(n):
        cd = c.conj().T
        out.append(c + cd)
        out.append(1j * (cd - c))
    return out


def single_particle_states(n: int) -> np.ndarray:
    """Columns ``c_x^+ |vac>`` for ``x = 0..n-1`` (shape ``2^n x n``)."""
    out = np.zeros((1 << n, n), dtype=complex)
    for x in range(n):
        out[1 << (n - 1 - x), x] = 1.0
    return out


def number_sector_basis(n: int, k: int) -> list[int]:
    """Computational basis indices with exactly ``k`` occupied modes."""
    return [b for b in range(1 << n) if bin(b).count("1") == k]
