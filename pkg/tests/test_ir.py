from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ferriq.ir import (
    Angle,
    CircuitBuilder,
    CircuitFormatError,
    FermionicCircuit,
    FermionicGate,
    cost_report,
    depth,
    deserialize,
    serialize,
    validate,
)
from ferriq.jw import OrderingMap
from ferriq.perm import compile_permutation
from ferriq.verify import fock_unitary, verify_permutation_circuit

FIXTURE = Path(__file__).parent / "fixtures" / "fswap.json"


def test_fixture_counts_and_semantics():
    c = deserialize(FIXTURE.read_text())
    r = cost_report(c)
    assert (r.cz_count, r.swap_count, r.cnot_count, r.clifford_count) == (1, 1, 0, 2)
    assert verify_permutation_circuit(c, None, OrderingMap([1, 0])).passed
    expected = np.diag([1, 1, 1, -1]).astype(complex)[[0, 2, 1, 3]]
    assert np.allclose(fock_unitary(c), expected)


def test_fixture_round_trip_is_stable():
    c = deserialize(FIXTURE.read_text())
    assert serialize(deserialize(serialize(c))) == serialize(c)


def test_malformed_json():
    obj = json.loads(FIXTURE.read_text())
    del obj["version"]
    with pytest.raises(CircuitFormatError):
        deserialize(json.dumps(obj))


@given(st.permutations(list(range(6))))
def test_serialization_round_trip(p):
    c = compile_permutation(p)
    text = serialize(c)
    back = deserialize(text)
    assert serialize(back) == text
    assert cost_report(back) == cost_report(c)


def test_angle_arithmetic():
    assert Angle.turns(2, 8) == Angle.turns(1, 4)
    assert Angle.turns(1, 4).quarter_turns() == 1
    assert Angle.turns(1, 8).quarter_turns() is None
    assert np.isclose(Angle.turns(1, 2).to_radians(), np.pi)


def test_quarter_turn_rotation_counts_as_clifford():
    b = CircuitBuilder(2)
    b.rxx(0, 1, Angle.turns(1, 4))
    b.rz(0, Angle.turns(1, 8))
    r = cost_report(b.build())
    assert r.clifford_count == 1 and r.rotation_count == 1


def test_depth_layers():
    b = CircuitBuilder(3)
    b.cnot(0, 1)
    b.cnot(1, 2)
    b.h(0)
    c = b.build()
    assert depth(c, "clifford") == 2


def test_validate_flags_reuse():
    fc = FermionicCircuit(3, [[FermionicGate.tunneling(0, 1, 0.1), FermionicGate.tunneling(1, 2, 0.1)]])
    v = validate(fc)
    assert v and v[0].mode == 1
    assert validate(FermionicCircuit(3, [[FermionicGate.tunneling(0, 1, 0.1)]])) == []
