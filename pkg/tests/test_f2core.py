from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ferriq.f2core import (
    CzSpec,
    DimensionError,
    F2Matrix,
    F2RowVector,
    SingularMatrixError,
    conjugate_cz,
    kron,
    lower_triangular_ones,
    mat_mul,
)


@st.composite
def matrices(draw, rows=None, cols=None):
    r = draw(st.integers(1, 8)) if rows is None else rows
    c = draw(st.integers(1, 8)) if cols is None else cols
    data = draw(st.lists(st.integers(0, (1 << c) - 1), min_size=r, max_size=r))
    return F2Matrix.from_rows(data, c)


@st.composite
def invertible(draw, n):
    m = F2Matrix.identity(n)
    for _ in range(draw(st.integers(0, 3 * n))):
        i, j = draw(st.integers(0, n - 1)), draw(st.integers(0, n - 1))
        if i != j:
            m = m.with_row_added(i, j)
    return m


@given(matrices(), st.data())
def test_mat_mul_matches_dense(a, data):
    b = data.draw(matrices(rows=a.cols))
    assert np.array_equal(mat_mul(a, b).to_dense(), (a.to_dense() @ b.to_dense()) % 2)


@given(matrices(), matrices())
def test_kron_matches_dense(a, b):
    assert np.array_equal(kron(a, b).to_dense(), np.kron(a.to_dense(), b.to_dense()) % 2)


@given(st.integers(1, 9).flatmap(lambda n: invertible(n)))
def test_inverse(p):
    n = p.rows
    assert p.is_invertible() and p.rank() == n
    assert mat_mul(p, p.inverse()) == F2Matrix.identity(n)


def test_singular_inverse_raises():
    with pytest.raises(SingularMatrixError):
        F2Matrix.from_dense([[1, 1], [1, 1]]).inverse()


def test_shape_mismatch():
    with pytest.raises(DimensionError):
        mat_mul(F2Matrix.identity(2), F2Matrix.identity(3))


def test_lower_triangular_ones_frozen():
    assert lower_triangular_ones(3).to_dense().tolist() == [[0, 0, 0], [1, 0, 0], [1, 1, 0]]


def test_row_vector():
    v = F2RowVector.from_indices(5, [0, 3])
    assert v.weight == 2 and v.support() == [0, 3]
    assert (v ^ v).weight == 0


@given(matrices())
def test_json_round_trip(a):
    assert F2Matrix.from_json(a.to_json()) == a


def _phase(spec: CzSpec, x: int) -> int:
    bits = [(x >> k) & 1 for k in range(spec.n)]
    s = sum(bits[i] * bits[j] for i, j in spec.edges())
    s += sum(bits[k] for k in range(spec.n) if (spec.zmask >> k) & 1)
    return s & 1


@settings(max_examples=60)
@given(st.integers(2, 6).flatmap(lambda n: st.tuples(st.just(n), invertible(n), st.data())))
def test_conjugate_cz_is_phase_composition(args):
    n, p, data = args
    edges = data.draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda e: e[0] != e[1])))
    zs = data.draw(st.lists(st.integers(0, n - 1)))
    a = CzSpec.from_edges(n, edges, zs)
    b = conjugate_cz(a, p)
    for x in range(1 << n):
        assert _phase(b, x) == _phase(a, p.apply(x))
