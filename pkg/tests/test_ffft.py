from __future__ import annotations

from decimal import Decimal
from fractions import Fraction

import numpy as np
import pytest

from ferriq.ffft import (
    build_ffft_1d,
    build_ffft_2d,
    catalysis_ccz_count,
    catalysis_report,
    ccz_cost_rz,
    compile_momentum_pairing,
    dft_matrix,
    f2_gate,
    momentum_pairing_permutation,
    plan_ffft_1d,
)
from ferriq.jw import OrderingMap
from ferriq.verify import mode_transfer, verify_permutation_circuit


def test_f2_gate_is_two_point_dft():
    # single-particle block of the gate, acting on the (left, right) pair
    g = f2_gate()
    assert np.allclose(g @ g.conj().T, np.eye(4))


def test_dft_matrix_frozen():
    assert np.allclose(dft_matrix(2), np.array([[1, 1], [1, -1]]) / np.sqrt(2))
    w = np.exp(2j * np.pi / 4)
    assert np.isclose(dft_matrix(4)[1, 3], w**3 / 2)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_ffft_1d_transfer(n):
    c, plan = build_ffft_1d(n)
    assert plan.n_modes == 2**n
    assert np.allclose(mode_transfer(c).U, dft_matrix(2**n), atol=1e-10)


def test_ffft_2d_rectangular():
    c, _ = build_ffft_2d((2, 4))
    assert np.allclose(mode_transfer(c).U, np.kron(dft_matrix(2), dft_matrix(4)), atol=1e-10)


def test_ffft_ancilla_method():
    c, _ = build_ffft_1d(3, interleave_method="ancilla_cz")
    assert np.allclose(mode_transfer(c).U, dft_matrix(8), atol=1e-10)


def test_catalysis_recursion():
    for n in range(1, 10):
        outer = plan_ffft_1d(n).levels[-1]
        assert sum(catalysis_ccz_count([a for _, a in outer.twiddles])) == ccz_cost_rz(n)
    assert ccz_cost_rz(4) == 4
    assert catalysis_report(5).rz_per_mode == Decimal("0.344")


def test_catalysis_angle_classes():
    # 1/8 and 3/8 turns are one class up to Paulis; 1/16 demands a 1/8 rotation
    assert catalysis_ccz_count([Fraction(1, 8), Fraction(3, 8)]) == [1]
    assert catalysis_ccz_count([Fraction(1, 16)]) == [1, 1]
    assert catalysis_ccz_count([Fraction(1, 4)]) == []


@pytest.mark.parametrize("spec", ["kx_negate", "full_k_negate", "spin_split"])
@pytest.mark.parametrize("L", [2, 4])
def test_momentum_pairing(L, spec):
    c = compile_momentum_pairing(L, spec)
    p = momentum_pairing_permutation(L, spec)
    assert verify_permutation_circuit(c, None, OrderingMap(list(p))).passed


def test_kx_negate_frozen():
    # row-major 4x4 grid, column c -> -c mod 4 in every row
    p = list(momentum_pairing_permutation(4, "kx_negate"))
    assert p[:4] == [0, 3, 2, 1]
