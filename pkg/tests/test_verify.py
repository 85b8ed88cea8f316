from __future__ import annotations

import numpy as np
import pytest

from ferriq.ffft import dft_matrix
from ferriq.fock import annihilators, single_particle_states
from ferriq.ir import CircuitBuilder
from ferriq.jw import OrderingMap
from ferriq.perm import synth_cnot_cascade
from ferriq.verify import (
    ChannelTableau,
    OracleCapError,
    channel_branches,
    gaussian_unitary,
    unitary_equal_up_to_phase,
    verify_permutation_circuit,
)


def test_gaussian_unitary_single_particle_block():
    t = dft_matrix(4)
    g = gaussian_unitary(t)
    states = single_particle_states(4)
    block = states.conj().T @ g @ states
    assert np.allclose(block, t)
    c = annihilators(4)
    for x in range(4):
        rhs = sum(t[k, x] * c[k].conj().T for k in range(4))
        assert np.allclose(g @ c[x].conj().T @ g.conj().T, rhs)


def test_wrong_ordering_fails():
    b = CircuitBuilder(2)
    b.swap(0, 1)
    c = b.build()
    assert not verify_permutation_circuit(c, None, OrderingMap([1, 0])).passed


def test_tableau_tracks_outcomes():
    c = synth_cnot_cascade(range(4), "constant_depth")
    assert ChannelTableau(c) is not None


def test_oracle_cap(monkeypatch):
    monkeypatch.setenv("FERRIQ_ORACLE_CAP", "3")
    with pytest.raises(OracleCapError):
        channel_branches(CircuitBuilder(4).build())


def test_phase_equality():
    u = np.eye(2)
    assert unitary_equal_up_to_phase(u, 1j * u)
    assert not unitary_equal_up_to_phase(u, np.diag([1, -1]))
