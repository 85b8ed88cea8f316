"""Jordan-Wigner orderings, Pauli strings and the translation of adjacent fermionic gates.

Conventions used throughout the package:

* Majoranas are unnormalised and square to the identity:
  ``chi_{2i} = X_{m(i)} prod Z``, ``chi_{2i+1} = Y_{m(i)} prod Z`` with the Z string
  on every qubit to the left of ``m(i)``.
* ``c_i = (chi_{2i} + i chi_{2i+1}) / 2`` and ``n_i = (1 - Z_{m(i)}) / 2``, so qubit
  state ``|1>`` means the mode is occupied.
* Pauli strings are always qubit-indexed; an :class:`OrderingMap` is applied when a
  string is built.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .f2core import bits_of, popcount

__all__ = [
    "OrderingMap",
    "Permutation",
    "PauliString",
    "left_set",
    "jw_majorana",
    "encode_tunneling",
    "encode_interaction",
    "operator_weight",
    "tunneling_matrix",
]


def _check_bijection(values: Sequence[int], what: str) -> tuple[int, ...]:
    vals = tuple(int(v) for v in values)
    n = len(vals)
    if sorted(vals) != list(range(n)):
        raise ValueError(f"{what} is not a bijection on 0..{n - 1}: {list(vals)}")
    return vals


@dataclass(frozen=True)
class Permutation:
    """A bijection ``i -> p[i]`` on ``{0..n-1}``.

    Composition follows function notation: ``(p @ q)(i) = p(q(i))``.
    """

    p: tuple[int, ...]

    def __init__(self, p: Iterable[int]):
        object.__setattr__(self, "p", _check_bijection(list(p), "permutation"))

    @classmethod
    def identity(cls, n: int) -> Permutation:
        return cls(range(n))

    @classmethod
    def from_string(cls, text: str) -> Permutation:
        parts = [s for s in text.replace(" ", "").split(",") if s]
        try:
            return cls(int(s) for s in parts)
        except ValueError as exc:
            raise ValueError(f"malformed permutation {text!r}: {exc}") from exc

    @property
    def n(self) -> int:
        return len(self.p)

    def __len__(self) -> int:
        return len(self.p)

    def __call__(self, i: int) -> int:
        return self.p[i]

    def __getitem__(self, i: int) -> int:
        return self.p[i]

    def __iter__(self):
        return iter(self.p)

    def __matmul__(self, other: Permutation) -> Permutation:
        if other.n != self.n:
            raise ValueError("permutation sizes differ")
        return Permutation(self.p[j] for j in other.p)

    def compose(self, other: Permutation) -> Permutation:
        return self @ other

    def inverse(self) -> Permutation:
        inv = [0] * self.n
        for i, v in enumerate(self.p):
            inv[v] = i
        return Permutation(inv)

    def is_identity(self) -> bool:
        return all(i == v for i, v in enumerate(self.p))

    def inversions(self) -> int:
        n, p = self.n, self.p
        return sum(1 for i in range(n) for j in range(i + 1, n) if p[i] > p[j])

    def to_array(self) -> np.ndarray:
        return np.array(self.p, dtype=np.int64)

    def __str__(self) -> str:
        return ",".join(map(str, self.p))


@dataclass(frozen=True)
class OrderingMap:
    """Assignment of fermionic mode ``i`` to qubit position ``m[i]``."""

    m: tuple[int, ...]

    def __init__(self, m: Iterable[int]):
        object.__setattr__(self, "m", _check_bijection(list(m), "ordering"))

    @classmethod
    def identity(cls, n: int) -> OrderingMap:
        return cls(range(n))

    @property
    def n(self) -> int:
        return len(self.m)

    @property
    def inverse(self) -> tuple[int, ...]:
        inv = [0] * self.n
        for i, q in enumerate(self.m):
            inv[q] = i
        return tuple(inv)

    def __call__(self, i: int) -> int:
        return self.m[i]

    def __getitem__(self, i: int) -> int:
        return self.m[i]

    def permuted(self, p: Permutation) -> OrderingMap:
        """The ordering ``p o m`` reached after the qubit permutation ``p``."""
        return OrderingMap(p[q] for q in self.m)

    def transition(self, other: OrderingMap) -> Permutation:
        """The qubit permutation ``p = m1 o m0^{-1}`` taking ``self`` to ``other``."""
        if other.n != self.n:
            raise ValueError("orderings have different sizes")
        inv = self.inverse
        return Permutation(other.m[inv[q]] for q in range(self.n))


# ---------------------------------------------------------------------------
# Pauli strings

_LETTER = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_PHASE_TEXT = {0: "+", 1: "+i", 2: "-", 3: "-i"}


def pauli_product_phase(x1: int, z1: int, x2: int, z2: int) -> int:
    """Power of ``i`` picked up when multiplying Hermitian-letter strings.

    ``P(x1,z1) P(x2,z2) = i^k P(x1^x2, z1^z2)`` with the letters X, Y, Z.
    """
    y1 = x1 & z1
    xo1 = x1 & ~z1
    zo1 = z1 & ~x1
    y2 = x2 & z2
    xo2 = x2 & ~z2
    zo2 = z2 & ~x2
    plus = (xo1 & y2) | (y1 & zo2) | (zo1 & xo2)
    minus = (xo1 & zo2) | (y1 & xo2) | (zo1 & y2)
    return (popcount(plus) - popcount(minus)) & 3


@dataclass(frozen=True)
class PauliString:
    """The operator ``i^phase * prod_q P_q`` with letters ``P_q`` in {I, X, Y, Z}.

    Attributes:
        n: Number of qubits.
        x: Bit mask of qubits whose letter is X or Y.
        z: Bit mask of qubits whose letter is Z or Y.
        phase: Power of ``i`` in 0..3.
    """

    n: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self) -> None:
        if (self.x | self.z) >> self.n:
            raise ValueError("Pauli support exceeds qubit count")
        object.__setattr__(self, "phase", self.phase & 3)

    @classmethod
    def identity(cls, n: int) -> PauliString:
        return cls(n)

    @classmethod
    def single(cls, n: int, q: int, letter: str) -> PauliString:
        letter = letter.upper()
        bit = 1 << q
        x = bit if letter in "XY" else 0
        z = bit if letter in "YZ" else 0
        if letter not in "IXYZ":
            raise ValueError(f"unknown Pauli letter {letter!r}")
        return cls(n, x, z, 0)

    @classmethod
    def from_text(cls, text: str) -> PauliString:
        """Parse the text form, e.g. ``"+XZIY"`` or ``"-iZZ"``; ``1`` is accepted for I."""
        s = text.strip()
        phase = 0
        # lowercase i is the phase; uppercase I is the identity letter
        for prefix, ph in (("+i", 1), ("-i", 3), ("+", 0), ("-", 2)):
            if s.startswith(prefix):
                phase, s = ph, s[len(prefix):]
                break
        x = z = 0
        for q, ch in enumerate(s):
            if ch in "I1":
                continue
            if ch not in "XYZ":
                raise ValueError(f"bad Pauli text {text!r}")
            if ch in "XY":
                x |= 1 << q
            if ch in "YZ":
                z |= 1 << q
        return cls(len(s), x, z, phase)

    def letters(self) -> str:
        return "".join(_LETTER[((self.x >> q) & 1, (self.z >> q) & 1)] for q in range(self.n))

    def __str__(self) -> str:
        return _PHASE_TEXT[self.phase] + self.letters()

    def __repr__(self) -> str:
        return f"PauliString({str(self)!r})"

    def __mul__(self, other: PauliString) -> PauliString:
        if other.n != self.n:
            raise ValueError("Pauli strings act on different qubit counts")
        k = pauli_product_phase(self.x, self.z, other.x, other.z)
        return PauliString(self.n, self.x ^ other.x, self.z ^ other.z, self.phase + other.phase + k)

    def commutes(self, other: PauliString) -> bool:
        return (popcount(self.x & other.z) + popcount(self.z & other.x)) % 2 == 0

    @property
    def weight(self) -> int:
        return popcount(self.x | self.z)

    def support(self) -> list[int]:
        return bits_of(self.x | self.z)

    def adjoint(self) -> PauliString:
        return PauliString(self.n, self.x, self.z, -self.phase)

    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    def with_phase(self, phase: int) -> PauliString:
        return PauliString(self.n, self.x, self.z, phase)

    def same_letters(self, other: PauliString) -> bool:
        return self.n == other.n and self.x == other.x and self.z == other.z

    def to_matrix(self) -> np.ndarray:
        """Dense matrix; qubit 0 is the most significant tensor factor."""
        mats = {
            "I": np.eye(2, dtype=complex),
            "X": np.array([[0, 1], [1, 0]], dtype=complex),
            "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
            "Z": np.array([[1, 0], [0, -1]], dtype=complex),
        }
        out = np.array([[1.0 + 0j]])
        for ch in self.letters():
            out = np.kron(out, mats[ch])
        return (1j**self.phase) * out


def left_set(m: OrderingMap, i: int) -> frozenset[int]:
    """Modes placed to the left of mode ``i``: ``{j : m(j) < m(i)}``."""
    if not 0 <= i < m.n:
        raise IndexError(f"mode {i} out of range for {m.n} modes")
    qi = m[i]
    return frozenset(j for j in range(m.n) if m[j] < qi)


def jw_majorana(m: OrderingMap, mu: int) -> PauliString:
    """Pauli image of Majorana ``mu`` under the ordering ``m``."""
    if not 0 <= mu < 2 * m.n:
        raise IndexError(f"Majorana index {mu} out of range")
    q = m[mu // 2]
    x = 1 << q
    z = (1 << q) - 1
    if mu % 2:
        z |= 1 << q
    return PauliString(m.n, x, z, 0)


def operator_weight(m: OrderingMap, i: int, j: int) -> int:
    """Weight of the JW image of ``c_i^dagger c_j``."""
    if i == j:
        raise ValueError("operator_weight needs two distinct modes")
    return abs(m[j] - m[i]) + 1


# ---------------------------------------------------------------------------
# gate translation


@lru_cache(maxsize=4096)
def _tunneling_matrix_cached(alpha: complex, beta: complex, i_left: bool) -> np.ndarray:
    from scipy.linalg import expm

    from .fock import annihilators

    c = annihilators(2)
    ci, cj = (c[0], c[1]) if i_left else (c[1], c[0])
    h = alpha * ci.conj().T @ cj + beta * ci.conj().T @ cj.conj().T
    h = h + h.conj().T
    u = expm(-1j * h)
    u.setflags(write=False)
    return u


def tunneling_matrix(alpha: complex, beta: complex = 0.0, i_left: bool = True) -> np.ndarray:
    """4x4 qubit matrix of ``exp[-i(alpha c_i^+ c_j + beta c_i^+ c_j^+ + h.c.)]``.

    Derived from the two-mode Fock-space operators rather than transcribed.  The
    basis is that of the two adjacent qubits in increasing position order; mode
    ``i`` sits on the left qubit when ``i_left``.
    """
    return np.array(_tunneling_matrix_cached(complex(alpha), complex(beta), bool(i_left)))


def encode_tunneling(m: OrderingMap, g):
    """Translate an adjacent tunneling gate into one two-qubit instruction."""
    from .ir import FermionicGate, QubitInstruction

    if not isinstance(g, FermionicGate) or g.kind != "tunneling":
        raise ValueError("encode_tunneling expects a tunneling gate")
    i, j = g.modes
    qi, qj = m[i], m[j]
    if abs(qi - qj) != 1:
        raise ValueError(f"modes {i} and {j} are not adjacent under the ordering (qubits {qi}, {qj})")
    alpha, beta = g.params
    mat = tunneling_matrix(alpha, beta, qi < qj)
    lo = min(qi, qj)
    return QubitInstruction.u2((lo, lo + 1), mat, label=f"tunneling({alpha},{beta})")


def encode_interaction(m: OrderingMap, g):
    """Translate a density-density interaction into a diagonal two-qubit instruction."""
    from .ir import FermionicGate, QubitInstruction

    if not isinstance(g, FermionicGate) or g.kind != "interaction":
        raise ValueError("encode_interaction expects an interaction gate")
    i, j = g.modes
    gamma, di, dj = (float(v) for v in g.params)
    diag = []
    for bi in (0, 1):
        for bj in (0, 1):
            diag.append(np.exp(-1j * (gamma * bi * bj + di * bi + dj * bj)))
    return QubitInstruction.u2((m[i], m[j]), np.diag(diag), label=f"interaction({gamma},{di},{dj})")
