from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from ferriq.syk import (
    SffResult,
    SykCapError,
    SykInstance,
    SykTerm,
    class_hamiltonians,
    color_interactions,
    compile_trotter_cycle,
    interleave_schedule,
    quartic_sign,
    sample_complete_syk,
    sample_interleave_syk,
    sample_sparse_syk,
    spectral_form_factor,
    syk_hamiltonian,
)
from ferriq.verify import channel_matches


def test_quartic_sign_frozen():
    # chi0 chi1 chi2 chi3 = -Z0 Z1
    h = syk_hamiltonian(SykInstance(4, (SykTerm((0, 1, 2, 3), 1.0),)))
    assert np.allclose(h, -np.diag([1, -1, -1, 1]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([8, 12, 16]), st.integers(1, 4))
def test_sparse_instances(seed, n, d):
    inst = sample_sparse_syk(n, d, seed=seed)
    quads = [t.indices for t in inst.terms]
    assert len(set(quads)) == len(quads)
    assert all(len(set(q)) == 4 for q in quads)
    assert max(inst.degrees()) <= d


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([8, 12, 16]), st.integers(1, 4))
def test_coloring_is_proper(seed, n, d):
    sched = color_interactions(sample_sparse_syk(n, d, seed=seed))
    terms = sched.instance.terms
    for cls in sched.classes:
        used = [i for t in cls for i in terms[t].indices]
        assert len(used) == len(set(used))
    assert sum(len(c) for c in sched.classes) == len(sched.instance.terms)


def test_classes_sum_to_hamiltonian():
    inst = sample_interleave_syk(8, 3, seed=1)
    sched = interleave_schedule(inst)
    assert np.allclose(sum(class_hamiltonians(sched)), syk_hamiltonian(inst))


def test_trotter_cycle_dense():
    sched = color_interactions(sample_sparse_syk(8, 2, seed=4))
    dt = 0.2
    c = compile_trotter_cycle(sched, dt, cascade_mode="serial")
    u = np.eye(16, dtype=complex)
    for h in class_hamiltonians(sched):
        u = expm(-1j * dt * h) @ u
    assert channel_matches(c, u, tol=1e-8)


def test_quartic_sign_parity():
    placement = [0, 1, 2, 3]
    assert quartic_sign((0, 1, 2, 3), placement) == 1
    assert quartic_sign((0, 1, 2, 3), [1, 0, 2, 3]) == -1


def test_instance_round_trip():
    inst = sample_interleave_syk(8, 2, seed=3)
    assert SykInstance.from_dict(inst.to_dict()) == inst


def test_cap():
    with pytest.raises(SykCapError):
        syk_hamiltonian(sample_sparse_syk(20, 1, seed=0))


def test_sff_starts_at_one():
    times = np.array([0.0, 1.0, 10.0])
    res = spectral_form_factor([sample_complete_syk(8, seed=s) for s in range(3)], times)
    assert isinstance(res, SffResult)
    assert np.isclose(res.mean[0], 1.0)
    assert res.to_csv().startswith("t,mean,stderr\n")
