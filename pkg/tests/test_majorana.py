from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ferriq.ir import cost_report
from ferriq.majorana import MajoranaPermutation, compile_majorana_permutation, u_lms_layer, verify_majorana_permutation
from ferriq.verify import channel_matches, majorana_permutation_unitary, pauli_conjugate
from ferriq.jw import OrderingMap, jw_majorana

mperms = st.sampled_from([2, 4, 6, 8]).flatmap(lambda m: st.permutations(list(range(m))))


def test_u_lms_moves_odd_majorana():
    c = u_lms_layer(1)
    m = OrderingMap.identity(2)
    img = pauli_conjugate(c, jw_majorana(m, 1))
    assert img.base.same_letters(jw_majorana(m, 2))
    assert pauli_conjugate(c, jw_majorana(m, 0)).base.same_letters(jw_majorana(m, 0))


def test_odd_length_rejected():
    with pytest.raises(ValueError):
        MajoranaPermutation([0, 2, 1])


@settings(max_examples=40, deadline=None)
@given(mperms)
def test_symbolic_images_with_signs(p):
    c = compile_majorana_permutation(p)
    assert verify_majorana_permutation(c, p).passed
    assert cost_report(c).clifford_count - c.metadata["inner_clifford_count"] <= len(p)


@settings(max_examples=15, deadline=None)
@given(st.sampled_from([2, 4]).flatmap(lambda m: st.permutations(list(range(m)))))
def test_dense_channel(p):
    c = compile_majorana_permutation(p, cascade_mode="serial")
    assert channel_matches(c, majorana_permutation_unitary(p))


def test_frozen_single_mode_swap():
    c = compile_majorana_permutation([1, 0])
    assert c.n_system == 1 and cost_report(c).ancilla_peak >= 1
    assert verify_majorana_permutation(c, [1, 0]).passed
