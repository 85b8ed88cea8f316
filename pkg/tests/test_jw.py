from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ferriq.fock import majoranas
from ferriq.ir import FermionicGate
from ferriq.jw import (
    OrderingMap,
    PauliString,
    Permutation,
    encode_tunneling,
    jw_majorana,
    left_set,
    operator_weight,
    tunneling_matrix,
)

perms = st.integers(1, 8).flatmap(lambda n: st.permutations(list(range(n))))


def test_frozen_tunneling_matrix():
    a = 0.3
    expected = np.array(
        [[1, 0, 0, 0], [0, np.cos(a), -1j * np.sin(a), 0], [0, -1j * np.sin(a), np.cos(a), 0], [0, 0, 0, 1]]
    )
    assert np.allclose(tunneling_matrix(a), expected, atol=1e-12)
    assert np.allclose(tunneling_matrix(a, i_left=False), expected, atol=1e-12)


def test_frozen_pairing_sign():
    b = 0.2
    s, c = np.sin(b), np.cos(b)
    left = np.array([[c, 0, 0, -1j * s], [0, 1, 0, 0], [0, 0, 1, 0], [-1j * s, 0, 0, c]])
    assert np.allclose(tunneling_matrix(0.0, b), left, atol=1e-12)
    right = left.copy()
    right[0, 3] = right[3, 0] = 1j * s
    assert np.allclose(tunneling_matrix(0.0, b, i_left=False), right, atol=1e-12)


@given(perms, perms)
def test_composition_convention(p, q):
    if len(p) != len(q):
        return
    P, Q = Permutation(p), Permutation(q)
    assert list(P @ Q) == [p[q[i]] for i in range(len(p))]
    assert (P @ P.inverse()).is_identity()


def test_rejects_non_bijection():
    with pytest.raises(ValueError):
        Permutation([0, 0, 1])
    with pytest.raises(ValueError):
        Permutation.from_string("1,2")


def test_majorana_strings_frozen():
    m = OrderingMap.identity(3)
    assert jw_majorana(m, 0).letters() == "XII"
    assert jw_majorana(m, 5).letters() == "ZZY"
    m2 = OrderingMap([2, 0, 1])
    assert left_set(m2, 0) == frozenset({1, 2})
    assert jw_majorana(m2, 0).letters() == "ZZX"


def test_majorana_strings_match_fock_operators():
    n = 3
    chis = majoranas(n)
    m = OrderingMap.identity(n)
    for mu in range(2 * n):
        assert np.allclose(jw_majorana(m, mu).to_matrix(), chis[mu])


@given(perms)
def test_majoranas_anticommute(p):
    m = OrderingMap(p)
    n = len(p)
    strings = [jw_majorana(m, mu) for mu in range(2 * n)]
    for a in range(2 * n):
        for b in range(a + 1, 2 * n):
            assert not strings[a].commutes(strings[b])


def test_operator_weight():
    m = OrderingMap([0, 3, 1, 2])
    assert operator_weight(m, 0, 1) == 4
    assert operator_weight(m, 2, 3) == 2


def test_encode_tunneling_requires_adjacency():
    m = OrderingMap([0, 2, 1])
    ins = encode_tunneling(m, FermionicGate.tunneling(0, 2, 0.4))
    assert ins.qubits == (0, 1)
    with pytest.raises(ValueError):
        encode_tunneling(m, FermionicGate.tunneling(0, 1, 0.4))


def test_pauli_identity():
    assert PauliString.identity(2).letters() == "II"
