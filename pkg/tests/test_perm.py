from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ferriq.f2core import CzSpec
from ferriq.ir import cost_report
from ferriq.jw import OrderingMap, Permutation
from ferriq.perm import (
    InterleavePerm,
    ModeMap,
    NotAnInterleaveError,
    StructuredPerm,
    apply_deformation,
    compile_permutation,
    crossing_spec,
    interleave_as_deformation,
    synth_axis_swap,
    synth_fswap_network,
    synth_interleave,
    synth_reflection_2d,
)
from ferriq.verify import channel_matches, fock_unitary, verify_permutation_circuit


def ok(c, p) -> bool:
    return verify_permutation_circuit(c, None, OrderingMap(list(p))).passed


@st.composite
def interleaves(draw, max_n=24):
    n = draw(st.integers(1, max_n))
    mask = draw(st.lists(st.booleans(), min_size=n, max_size=n))
    a = [pos for pos, m in enumerate(mask) if not m]
    b = [pos for pos, m in enumerate(mask) if m]
    return a + b


def test_crossing_spec_frozen():
    spec = crossing_spec([2, 0, 1])
    assert spec == CzSpec.from_edges(3, [(0, 1), (0, 2)])
    assert spec.cz_count == Permutation([2, 0, 1]).inversions()


def test_fswap_network_cz_count_is_inversions():
    p = [3, 1, 0, 2]
    assert cost_report(synth_fswap_network(p)).cz_count == Permutation(p).inversions()


@settings(max_examples=60, deadline=None)
@given(interleaves(), st.sampled_from(["cascade", "ancilla_cz"]))
def test_interleave_correct_and_bounded(p, method):
    n = len(p)
    c = synth_interleave(p, method)
    r = cost_report(c)
    assert ok(c, p)
    assert r.cnot_count <= 4 * n and r.cz_count <= n and r.ancilla_peak <= n


def test_not_an_interleave():
    assert InterleavePerm.detect([2, 0, 3, 1, 4][::-1]) is None
    with pytest.raises(NotAnInterleaveError):
        InterleavePerm(Permutation([1, 0, 2]), 3)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 7).flatmap(lambda n: st.permutations(list(range(n)))))
def test_compile_matches_fswap_oracle(p):
    c = compile_permutation(p)
    assert ok(c, p)
    if len(p) <= 4:
        assert channel_matches(c, fock_unitary(synth_fswap_network(p)))


@pytest.mark.parametrize("lr,lc", [(2, 3), (3, 3), (4, 4)])
def test_reflection_2d(lr, lc):
    c = synth_reflection_2d(lr, lc)
    assert ok(c, StructuredPerm.reflect2d(lr, lc).permutation())


@settings(max_examples=30, deadline=None)
@given(interleaves(max_n=10))
def test_interleave_as_deformation(p):
    base, mm = interleave_as_deformation(p)
    assert list(mm.deformed(base.permutation())) == p
    assert ok(apply_deformation(base, mm), p)


def test_deletion_of_reflection():
    base = StructuredPerm.reflect1d(4)
    mm = ModeMap(4, [0, 1, 3])
    assert list(mm.deformed(base.permutation())) == [2, 1, 0]
    assert ok(apply_deformation(base, mm), [2, 1, 0])


@pytest.mark.parametrize("dims,d", [((2, 2, 2), 1), ((2, 3, 2), 2), ((4, 4), 1)])
def test_axis_swap(dims, d):
    sp = StructuredPerm.axis_swap(dims, d)
    assert ok(synth_axis_swap(dims, d), sp.permutation())


@pytest.mark.parametrize("strategy", ["auto", "mergesort", "structured", "fswap"])
def test_strategies(strategy):
    p = StructuredPerm.reflect1d(6).permutation()
    c = compile_permutation(p, strategy)
    assert ok(c, p)
    assert c.metadata["perm"] == list(p)
