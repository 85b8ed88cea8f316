"""Intermediate representations: fermionic input circuits and compiled qubit circuits.

A compiled circuit lives on ``n_system + n_ancilla`` wires.  Wires ``0..n_system-1``
carry the encoded fermionic modes at the start and at the end of every circuit;
ancilla wires start in ``|0>`` and must be returned to ``|0>``.

``RELABEL`` moves the content of wire ``qubits[k]`` to wire ``targets[k]`` at no
cost, which models free qubit moves in a reconfigurable array.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Iterable, Iterator, Sequence
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction

import numpy as np

__all__ = [
    "Angle",
    "Condition",
    "QubitInstruction",
    "Block",
    "CompiledCircuit",
    "CircuitBuilder",
    "CircuitFormatError",
    "CostReport",
    "FermionicGate",
    "FermionicCircuit",
    "Violation",
    "validate",
    "depth",
    "cost_report",
    "serialize",
    "deserialize",
    "circuit_to_json",
    "circuit_from_json",
    "OPCODES",
]


class CircuitFormatError(ValueError):
    """Raised for malformed, inconsistent or unknown circuit content."""


# ---------------------------------------------------------------------------
# angles


@dataclass(frozen=True)
class Angle:
    """A rotation angle, exact (``2*pi*num/den``) when ``den`` is set, else ``value`` radians."""

    num: int = 0
    den: int | None = 1
    value: float = 0.0

    @classmethod
    def turns(cls, num: int, den: int) -> Angle:
        """The angle ``2*pi*num/den`` reduced to lowest terms."""
        if den == 0:
            raise ValueError("zero denominator")
        f = Fraction(num, den)
        return cls(f.numerator, f.denominator, 0.0)

    @classmethod
    def radians(cls, value: float) -> Angle:
        return cls(0, None, float(value))

    @property
    def is_exact(self) -> bool:
        return self.den is not None

    def to_radians(self) -> float:
        if self.den is None:
            return self.value
        return 2.0 * math.pi * self.num / self.den

    def quarter_turns(self) -> int | None:
        """``k`` such that the angle is ``k * pi/2`` (mod 2*pi), or None."""
        if self.den is None:
            return None
        if (4 * self.num) % self.den:
            return None
        return (4 * self.num // self.den) % 4

    def __neg__(self) -> Angle:
        if self.den is None:
            return Angle.radians(-self.value)
        return Angle.turns(-self.num, self.den)


@dataclass(frozen=True)
class Condition:
    """Parity condition ``parity XOR (sum of listed outcomes) == 1``."""

    outcomes: tuple[int, ...]
    parity: int = 0

    def __init__(self, outcomes: Iterable[int], parity: int = 0):
        counts: dict[int, int] = {}
        for o in outcomes:
            counts[int(o)] = counts.get(int(o), 0) ^ 1
        object.__setattr__(self, "outcomes", tuple(sorted(o for o, c in counts.items() if c)))
        object.__setattr__(self, "parity", int(parity) & 1)

    def evaluate(self, values: dict[int, int]) -> int:
        acc = self.parity
        for o in self.outcomes:
            acc ^= values[o]
        return acc & 1


# ---------------------------------------------------------------------------
# instructions

# name -> (arity, category)
OPCODES: dict[str, tuple[int, str]] = {
    "CNOT": (2, "clifford2"),
    "CZ": (2, "clifford2"),
    "SWAP": (2, "clifford2"),
    "H": (1, "clifford1"),
    "S": (1, "clifford1"),
    "SDG": (1, "clifford1"),
    "X": (1, "pauli"),
    "Y": (1, "pauli"),
    "Z": (1, "pauli"),
    "RZ": (1, "rotation1"),
    "RZZ": (2, "rotation2"),
    "RXX": (2, "rotation2"),
    "U2": (2, "unitary2"),
    "MEASURE_Z": (1, "measure"),
    "MEASURE_X": (1, "measure"),
    "RESET": (1, "reset"),
    "PREP_X": (1, "prep"),
    "RELABEL": (-1, "relabel"),
}


def _matrix_tuple(m) -> tuple[tuple[complex, ...], ...]:
    arr = np.asarray(m, dtype=complex)
    return tuple(tuple(complex(v) for v in row) for row in arr)


@dataclass(frozen=True)
class QubitInstruction:
    """One instruction of a compiled circuit.

    Attributes:
        op: Opcode from :data:`OPCODES`.
        qubits: Wires acted on (control first for CNOT).
        angle: Rotation angle for RZ/RZZ/RXX.
        matrix: 4x4 unitary for U2, basis ordered with ``qubits[0]`` most significant.
        label: Free-form tag; U2 gates carry their physical meaning here.
        outcome_id: Identifier of the classical bit a measurement records.
        cond: Parity condition; only Pauli gates may be conditioned.
        targets: Destination wires of a RELABEL.
        layer: Advisory layer tag from the emitting pass.
        provenance: Name of the synthesis pass that emitted the instruction.
    """

    op: str
    qubits: tuple[int, ...]
    angle: Angle | None = None
    matrix: tuple[tuple[complex, ...], ...] | None = None
    label: str | None = None
    outcome_id: int | None = None
    cond: Condition | None = None
    targets: tuple[int, ...] | None = None
    layer: int = 0
    provenance: str = ""

    def __post_init__(self) -> None:
        if self.op not in OPCODES:
            raise CircuitFormatError(f"unknown opcode {self.op!r}")
        arity, cat = OPCODES[self.op]
        q = tuple(int(v) for v in self.qubits)
        object.__setattr__(self, "qubits", q)
        if arity >= 0 and len(q) != arity:
            raise CircuitFormatError(f"{self.op} expects {arity} qubits, got {len(q)}")
        if len(set(q)) != len(q):
            raise CircuitFormatError(f"{self.op} repeats a qubit: {q}")
        if cat in ("rotation1", "rotation2") and self.angle is None:
            raise CircuitFormatError(f"{self.op} needs an angle")
        if cat == "unitary2":
            if self.matrix is None:
                raise CircuitFormatError("U2 needs a matrix")
            mat = np.array(self.matrix, dtype=complex)
            if mat.shape != (4, 4):
                raise CircuitFormatError("U2 matrix must be 4x4")
            if np.max(np.abs(mat.conj().T @ mat - np.eye(4))) > 1e-12:
                raise CircuitFormatError("U2 matrix is not unitary to 1e-12")
        if cat == "measure" and self.outcome_id is None:
            raise CircuitFormatError("measurement needs an outcome id")
        if self.cond is not None and cat != "pauli":
            raise CircuitFormatError("only Pauli gates may be classically conditioned")
        if cat == "relabel":
            if self.targets is None or sorted(self.targets) != sorted(q):
                raise CircuitFormatError("RELABEL targets must permute its qubits")
            object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))

    # factories -----------------------------------------------------------
    @classmethod
    def gate(cls, op: str, *qubits: int, **kw) -> QubitInstruction:
        return cls(op, tuple(qubits), **kw)

    @classmethod
    def u2(cls, qubits: Sequence[int], matrix, label: str | None = None) -> QubitInstruction:
        return cls("U2", tuple(qubits), matrix=_matrix_tuple(matrix), label=label)

    @property
    def category(self) -> str:
        return OPCODES[self.op][1]

    @property
    def is_conditioned(self) -> bool:
        return self.cond is not None

    def matrix_array(self) -> np.ndarray | None:
        return None if self.matrix is None else np.array(self.matrix, dtype=complex)

    def is_clifford_gate(self) -> bool:
        """True for unitary Clifford gates that count towards Clifford cost."""
        cat = self.category
        if cat in ("clifford1", "clifford2"):
            return True
        if cat in ("rotation1", "rotation2"):
            return self.angle.quarter_turns() not in (None, 0)
        return False

    def remapped(self, wire_map: Sequence[int] | dict, outcome_map: dict[int, int] | None = None) -> QubitInstruction:
        wm = wire_map
        q = tuple(wm[w] for w in self.qubits)
        t = tuple(wm[w] for w in self.targets) if self.targets is not None else None
        oid = self.outcome_id
        cond = self.cond
        if outcome_map is not None:
            if oid is not None:
                oid = outcome_map[oid]
            if cond is not None:
                cond = Condition((outcome_map[o] for o in cond.outcomes), cond.parity)
        return replace(self, qubits=q, targets=t, outcome_id=oid, cond=cond)


@dataclass(frozen=True)
class Block:
    """A contiguous instruction range with a known action, e.g. a fermionic permutation."""

    kind: str
    start: int
    stop: int
    perm: tuple[int, ...] | None = None
    label: str = ""

    def shifted(self, offset: int, wire_map: Sequence[int] | None = None) -> Block:
        return replace(self, start=self.start + offset, stop=self.stop + offset)


@dataclass(frozen=True)
class CompiledCircuit:
    """A qubit circuit with ancillas, measurements and classical feedforward."""

    n_system: int
    n_ancilla: int = 0
    instructions: tuple[QubitInstruction, ...] = ()
    blocks: tuple[Block, ...] = ()
    metadata: dict = field(default_factory=dict)

    __hash__ = None  # type: ignore[assignment]

    @property
    def n_wires(self) -> int:
        return self.n_system + self.n_ancilla

    def __len__(self) -> int:
        return len(self.instructions)

    def __iter__(self) -> Iterator[QubitInstruction]:
        return iter(self.instructions)

    def outcome_ids(self) -> list[int]:
        return [ins.outcome_id for ins in self.instructions if ins.outcome_id is not None]

    def check(self) -> None:
        """Raise :class:`CircuitFormatError` if structural invariants fail."""
        seen: set[int] = set()
        last_layer = -1
        for k, ins in enumerate(self.instructions):
            for w in ins.qubits:
                if not 0 <= w < self.n_wires:
                    raise CircuitFormatError(f"instruction {k}: wire {w} out of range")
            if ins.cond is not None:
                for o in ins.cond.outcomes:
                    if o not in seen:
                        raise CircuitFormatError(f"instruction {k}: outcome {o} used before it is recorded")
            if ins.outcome_id is not None:
                if ins.outcome_id in seen:
                    raise CircuitFormatError(f"duplicate outcome id {ins.outcome_id}")
                seen.add(ins.outcome_id)
            if ins.layer < last_layer:
                raise CircuitFormatError(f"instruction {k}: layer tags decrease")
            last_layer = ins.layer
        for b in self.blocks:
            if not 0 <= b.start <= b.stop <= len(self.instructions):
                raise CircuitFormatError(f"block {b.label!r} out of range")

    def with_metadata(self, **kw) -> CompiledCircuit:
        md = dict(self.metadata)
        md.update(kw)
        return replace(self, metadata=md)

    def without(self, index: int) -> CompiledCircuit:
        """Copy with one instruction removed (used for mutation tests)."""
        ins = self.instructions[:index] + self.instructions[index + 1 :]
        return replace(self, instructions=ins, blocks=())

    def concat(self, other: CompiledCircuit) -> CompiledCircuit:
        """Sequential composition; outcome ids of ``other`` are renumbered."""
        if other.n_system != self.n_system:
            raise ValueError("circuits act on different system sizes")
        b = CircuitBuilder(self.n_system)
        b.embed(self, list(range(self.n_system)), share_ancillas=True)
        b.embed(other, list(range(self.n_system)), share_ancillas=True)
        return b.build(metadata=dict(self.metadata))

    def __add__(self, other: CompiledCircuit) -> CompiledCircuit:
        return self.concat(other)

    def materialize_swaps(self) -> CompiledCircuit:
        """Replace every RELABEL by explicit SWAP gates."""
        out = []
        for ins in self.instructions:
            if ins.op != "RELABEL":
                out.append(ins)
                continue
            # content at wire src must end at dst; realise with transpositions
            pos = {w: w for w in ins.qubits}  # wire -> content origin currently there
            where = {w: w for w in ins.qubits}  # content origin -> wire
            for src, dst in zip(ins.qubits, ins.targets):
                cur = where[src]
                if cur == dst:
                    continue
                other = pos[dst]
                out.append(replace(ins, op="SWAP", qubits=(cur, dst), targets=None, label=None))
                pos[cur], pos[dst] = other, src
                where[src], where[other] = dst, cur
        return replace(self, instructions=tuple(out), blocks=())


# ---------------------------------------------------------------------------
# builder


class CircuitBuilder:
    """Single-owner mutable builder producing a frozen :class:`CompiledCircuit`.

    Ancilla wires are recycled: :meth:`release` returns a wire (which the caller
    has reset) to the pool and :meth:`ancilla` hands out the lowest free wire.
    """

    def __init__(self, n_system: int, provenance: str = ""):
        self.n_system = n_system
        self._n_wires = n_system
        self._free: list[int] = []
        self._ins: list[QubitInstruction] = []
        self._blocks: list[Block] = []
        self._next_outcome = 0
        self._prov: list[str] = [provenance] if provenance else []
        self.layer = 0

    # ancillas --------------------------------------------------------------
    def ancilla(self) -> int:
        if self._free:
            self._free.sort()
            return self._free.pop(0)
        w = self._n_wires
        self._n_wires += 1
        return w

    def ancillas(self, k: int) -> list[int]:
        return [self.ancilla() for _ in range(k)]

    def release(self, *wires: int) -> None:
        for w in wires:
            if w < self.n_system:
                raise ValueError(f"wire {w} is a system wire and cannot be released")
            if w in self._free:
                raise ValueError(f"wire {w} released twice")
            self._free.append(w)

    # provenance and blocks -------------------------------------------------------
    @contextmanager
    def provenance(self, name: str):
        self._prov.append(name)
        try:
            yield
        finally:
            self._prov.pop()

    @contextmanager
    def block(self, kind: str, perm: Sequence[int] | None = None, label: str = ""):
        start = len(self._ins)
        yield
        self._blocks.append(Block(kind, start, len(self._ins), tuple(perm) if perm is not None else None, label))

    def next_layer(self) -> None:
        self.layer += 1

    # emission ----------------------------------------------------------------------
    def emit(self, ins: QubitInstruction) -> QubitInstruction:
        ins = replace(ins, layer=max(ins.layer, self.layer), provenance="/".join(self._prov))
        self._ins.append(ins)
        return ins

    def _g(self, op: str, *q: int, **kw) -> None:
        self.emit(QubitInstruction(op, tuple(q), **kw))

    def cnot(self, c: int, t: int) -> None:
        self._g("CNOT", c, t)

    def cz(self, a: int, b: int) -> None:
        self._g("CZ", a, b)

    def swap(self, a: int, b: int) -> None:
        self._g("SWAP", a, b)

    def h(self, q: int) -> None:
        self._g("H", q)

    def s(self, q: int) -> None:
        self._g("S", q)

    def sdg(self, q: int) -> None:
        self._g("SDG", q)

    def pauli(self, axis: str, q: int) -> None:
        self._g(axis.upper(), q)

    def rz(self, q: int, angle: Angle) -> None:
        self._g("RZ", q, angle=angle)

    def rzz(self, a: int, b: int, angle: Angle) -> None:
        self._g("RZZ", a, b, angle=angle)

    def rxx(self, a: int, b: int, angle: Angle) -> None:
        self._g("RXX", a, b, angle=angle)

    def u2(self, a: int, b: int, matrix, label: str | None = None) -> None:
        self._g("U2", a, b, matrix=_matrix_tuple(matrix), label=label)

    def _new_outcome(self) -> int:
        o = self._next_outcome
        self._next_outcome += 1
        return o

    def measure_z(self, q: int) -> int:
        o = self._new_outcome()
        self._g("MEASURE_Z", q, outcome_id=o)
        return o

    def measure_x(self, q: int) -> int:
        o = self._new_outcome()
        self._g("MEASURE_X", q, outcome_id=o)
        return o

    def reset(self, q: int) -> None:
        self._g("RESET", q)

    def prep_x(self, q: int) -> None:
        self._g("PREP_X", q)

    def cond_pauli(self, axis: str, q: int, outcomes: Iterable[int], parity: int = 0) -> None:
        cond = Condition(outcomes, parity)
        if not cond.outcomes:
            if cond.parity:
                self.pauli(axis, q)
            return
        self._g(axis.upper(), q, cond=cond)

    def relabel(self, mapping: dict[int, int] | Sequence[tuple[int, int]]) -> None:
        items = mapping.items() if isinstance(mapping, dict) else mapping
        pairs = [(int(s), int(d)) for s, d in items if int(s) != int(d)]
        if not pairs:
            return
        src = tuple(s for s, _ in pairs)
        dst = tuple(d for _, d in pairs)
        self._g("RELABEL", *src, targets=dst)

    # composition ----------------------------------------------------------------------
    def embed(
        self,
        circuit: CompiledCircuit,
        wire_map: Sequence[int],
        share_ancillas: bool = False,
        prefix: str | None = None,
        release: bool = True,
    ) -> list[int]:
        """Append ``circuit`` with its system wire ``k`` placed on ``wire_map[k]``.

        Inner ancillas are drawn from this builder's pool and, unless ``release``
        is false, returned to it afterwards.  Keeping them lets several embedded
        circuits run on disjoint ancillas in parallel.  With ``share_ancillas`` the
        inner ancilla ``k`` maps to this builder's wire ``n_system + k`` (plain
        concatenation).

        Returns:
            The ancilla wires drawn from the pool.
        """
        if len(wire_map) != circuit.n_system:
            raise ValueError("wire map length must equal the embedded system size")
        full = list(wire_map)
        if share_ancillas:
            for k in range(circuit.n_ancilla):
                w = self.n_system + k
                while self._n_wires <= w:
                    self._n_wires += 1
                full.append(w)
            anc = []
        else:
            anc = self.ancillas(circuit.n_ancilla)
            full.extend(anc)
        omap = {o: self._new_outcome() for o in circuit.outcome_ids()}
        offset = len(self._ins)
        base_prov = "/".join(self._prov)
        for ins in circuit.instructions:
            new = ins.remapped(full, omap)
            prov = "/".join(p for p in (base_prov, prefix, ins.provenance) if p)
            self._ins.append(replace(new, layer=max(new.layer, self.layer), provenance=prov))
        if all(w < self.n_system for w in wire_map):
            for b in circuit.blocks:
                perm = None
                if b.perm is not None:
                    outer = list(range(self.n_system))
                    for q, t in enumerate(b.perm):
                        outer[wire_map[q]] = wire_map[t]
                    perm = tuple(outer)
                self._blocks.append(Block(b.kind, b.start + offset, b.stop + offset, perm, b.label))
        if anc and release:
            self.release(*anc)
        return anc

    def build(self, metadata: dict | None = None) -> CompiledCircuit:
        # layer tags must be non-decreasing; embedded circuits may carry smaller tags
        ins = []
        cur = 0
        for i in self._ins:
            cur = max(cur, i.layer)
            ins.append(replace(i, layer=cur) if i.layer != cur else i)
        c = CompiledCircuit(
            self.n_system,
            self._n_wires - self.n_system,
            tuple(ins),
            tuple(sorted(self._blocks, key=lambda b: (b.start, -b.stop))),
            dict(metadata or {}),
        )
        c.check()
        return c


# ---------------------------------------------------------------------------
# depth and cost


def _schedule(c: CompiledCircuit, cost) -> int:
    wt = [0] * c.n_wires
    ot: dict[int, int] = {}
    best = 0
    for ins in c.instructions:
        if ins.op == "RELABEL":
            old = {w: wt[w] for w in ins.qubits}
            for s, d in zip(ins.qubits, ins.targets):
                wt[d] = old[s]
            continue
        start = max((wt[w] for w in ins.qubits), default=0)
        if ins.cond is not None:
            start = max([start] + [ot[o] for o in ins.cond.outcomes])
        end = start + cost(ins)
        for w in ins.qubits:
            wt[w] = end
        if ins.outcome_id is not None:
            ot[ins.outcome_id] = end
        best = max(best, end)
    return best


def _total_cost(ins: QubitInstruction) -> int:
    return 0 if ins.cond is not None else 1


def _total_cost_free_measure(ins: QubitInstruction) -> int:
    if ins.cond is not None or ins.category in ("measure", "reset", "prep"):
        return 0
    return 1


def _clifford_cost(ins: QubitInstruction) -> int:
    if ins.cond is not None:
        return 0
    if ins.category == "pauli":
        return 1
    return 1 if ins.is_clifford_gate() else 0


def depth(c: CompiledCircuit, kind: str = "total") -> int:
    """As-soon-as-possible depth.

    Args:
        c: Circuit to schedule.
        kind: ``"total"`` counts every instruction as one layer except conditioned
            Paulis and relabels, which are free; ``"clifford"`` counts only unitary
            Clifford gates; ``"total_free_measure"`` also makes measurements,
            resets and preparations free.
    """
    costs = {"total": _total_cost, "clifford": _clifford_cost, "total_free_measure": _total_cost_free_measure}
    if kind not in costs:
        raise ValueError(f"unknown depth kind {kind!r}")
    return _schedule(c, costs[kind])


def ancilla_peak(c: CompiledCircuit) -> int:
    """Largest number of simultaneously live wires beyond the system register."""
    live = [True] * c.n_system + [False] * c.n_ancilla
    peak = 0
    for ins in c.instructions:
        if ins.op == "RELABEL":
            old = {w: live[w] for w in ins.qubits}
            for s, d in zip(ins.qubits, ins.targets):
                live[d] = old[s]
            continue
        if ins.op == "RESET":
            live[ins.qubits[0]] = False
            continue
        for w in ins.qubits:
            live[w] = True
        peak = max(peak, sum(live) - c.n_system)
    return peak


@dataclass(frozen=True)
class CostReport:
    """Exact gate recount of a compiled circuit."""

    n_system: int
    cnot_count: int
    cz_count: int
    swap_count: int
    clifford_1q_count: int
    clifford_2q_count: int
    clifford_count: int
    pauli_count: int
    rotation_count: int
    two_qubit_unitary_count: int
    measurements: int
    resets: int
    preparations: int
    conditioned_paulis: int
    ancilla_peak: int
    clifford_depth: int
    total_depth: int
    total_depth_free_measure: int

    @property
    def per_mode(self) -> dict[str, float]:
        n = max(self.n_system, 1)
        keys = ("cnot_count", "cz_count", "clifford_2q_count", "clifford_count", "rotation_count")
        return {k: getattr(self, k) / n for k in keys}

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_mode"] = self.per_mode
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        d = asdict(self)
        for k, v in self.per_mode.items():
            d[f"per_mode_{k}"] = f"{v:.6f}"
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(d), lineterminator="\n")
        w.writeheader()
        w.writerow(d)
        return buf.getvalue()


def cost_report(c: CompiledCircuit) -> CostReport:
    counts = dict(cnot=0, cz=0, swap=0, c1=0, c2=0, pauli=0, rot=0, u2=0, meas=0, reset=0, prep=0, cond=0)
    for ins in c.instructions:
        cat = ins.category
        if ins.cond is not None:
            counts["cond"] += 1
            continue
        if ins.op == "CNOT":
            counts["cnot"] += 1
        elif ins.op == "CZ":
            counts["cz"] += 1
        elif ins.op == "SWAP":
            counts["swap"] += 1
        if cat == "clifford1":
            counts["c1"] += 1
        elif cat == "clifford2":
            counts["c2"] += 1
        elif cat == "pauli":
            counts["pauli"] += 1
        elif cat in ("rotation1", "rotation2"):
            qt = ins.angle.quarter_turns()
            if qt is None:
                counts["rot"] += 1
            elif qt != 0:
                counts["c1" if cat == "rotation1" else "c2"] += 1
        elif cat == "unitary2":
            counts["u2"] += 1
        elif cat == "measure":
            counts["meas"] += 1
        elif cat == "reset":
            counts["reset"] += 1
        elif cat == "prep":
            counts["prep"] += 1
    return CostReport(
        n_system=c.n_system,
        cnot_count=counts["cnot"],
        cz_count=counts["cz"],
        swap_count=counts["swap"],
        clifford_1q_count=counts["c1"],
        clifford_2q_count=counts["c2"],
        clifford_count=counts["c1"] + counts["c2"],
        pauli_count=counts["pauli"],
        rotation_count=counts["rot"],
        two_qubit_unitary_count=counts["u2"],
        measurements=counts["meas"],
        resets=counts["reset"],
        preparations=counts["prep"],
        conditioned_paulis=counts["cond"],
        ancilla_peak=ancilla_peak(c),
        clifford_depth=depth(c, "clifford"),
        total_depth=depth(c, "total"),
        total_depth_free_measure=depth(c, "total_free_measure"),
    )


# ---------------------------------------------------------------------------
# serialization

FORMAT_VERSION = 1


def _instr_to_json(ins: QubitInstruction) -> dict:
    a = ins.angle
    d = {
        "op": ins.op,
        "qubits": list(ins.qubits),
        "theta_num": None if a is None or a.den is None else a.num,
        "theta_den": None if a is None else a.den,
        "matrix": None
        if ins.matrix is None
        else [[v.real, v.imag] for row in ins.matrix for v in row],
        "outcome_id": ins.outcome_id,
        "cond": None if ins.cond is None else {"outcomes": list(ins.cond.outcomes), "parity": ins.cond.parity},
        "layer": ins.layer,
    }
    if a is not None and a.den is None:
        d["theta"] = a.value
    if ins.targets is not None:
        d["targets"] = list(ins.targets)
    if ins.label is not None:
        d["label"] = ins.label
    if ins.provenance:
        d["provenance"] = ins.provenance
    return d


def _instr_from_json(d: dict) -> QubitInstruction:
    if not isinstance(d, dict) or "op" not in d or "qubits" not in d:
        raise CircuitFormatError(f"malformed instruction: {d!r}")
    op = d["op"]
    if op not in OPCODES:
        raise CircuitFormatError(f"unknown opcode {op!r}")
    angle = None
    if d.get("theta_den") is not None:
        angle = Angle(int(d["theta_num"]), int(d["theta_den"]), 0.0)
    elif d.get("theta") is not None:
        angle = Angle.radians(float(d["theta"]))
    matrix = None
    if d.get("matrix") is not None:
        flat = d["matrix"]
        if len(flat) != 16:
            raise CircuitFormatError("U2 matrix must have 16 entries")
        vals = [complex(float(re), float(im)) for re, im in flat]
        matrix = tuple(tuple(vals[4 * r : 4 * r + 4]) for r in range(4))
    cond = None
    if d.get("cond") is not None:
        cd = d["cond"]
        cond = Condition(cd["outcomes"], cd.get("parity", 0))
    targets = tuple(d["targets"]) if d.get("targets") is not None else None
    return QubitInstruction(
        op,
        tuple(d["qubits"]),
        angle=angle,
        matrix=matrix,
        label=d.get("label"),
        outcome_id=d.get("outcome_id"),
        cond=cond,
        targets=targets,
        layer=int(d.get("layer", 0)),
        provenance=d.get("provenance", ""),
    )


def circuit_to_json(c: CompiledCircuit) -> dict:
    return {
        "version": FORMAT_VERSION,
        "n_system": c.n_system,
        "n_ancilla": c.n_ancilla,
        "instructions": [_instr_to_json(i) for i in c.instructions],
        "blocks": [
            {"kind": b.kind, "start": b.start, "stop": b.stop, "perm": None if b.perm is None else list(b.perm), "label": b.label}
            for b in c.blocks
        ],
        "metadata": c.metadata,
    }


def circuit_from_json(obj: dict) -> CompiledCircuit:
    if not isinstance(obj, dict):
        raise CircuitFormatError("circuit JSON must be an object")
    try:
        version = obj["version"]
        n_system = int(obj["n_system"])
        n_ancilla = int(obj["n_ancilla"])
        raw = obj["instructions"]
    except (KeyError, TypeError, ValueError) as exc:
        raise CircuitFormatError(f"malformed circuit JSON: {exc}") from exc
    if version != FORMAT_VERSION:
        raise CircuitFormatError(f"unsupported format version {version}")
    ins = tuple(_instr_from_json(d) for d in raw)
    blocks = tuple(
        Block(b["kind"], int(b["start"]), int(b["stop"]), None if b.get("perm") is None else tuple(b["perm"]), b.get("label", ""))
        for b in obj.get("blocks", [])
    )
    c = CompiledCircuit(n_system, n_ancilla, ins, blocks, dict(obj.get("metadata", {})))
    c.check()
    return c


def serialize(c: CompiledCircuit) -> str:
    return json.dumps(circuit_to_json(c), sort_keys=True, separators=(",", ":"))


def deserialize(text: str) -> CompiledCircuit:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitFormatError(f"malformed JSON: {exc}") from exc
    return circuit_from_json(obj)


# ---------------------------------------------------------------------------
# fermionic input circuits

_FERMION_KINDS = ("tunneling", "interaction", "majorana_quartic")


@dataclass(frozen=True)
class FermionicGate:
    """A gate of the input fermionic computation.

    ``tunneling`` params are ``(alpha, beta)`` of
    ``exp[-i(alpha c_i^+ c_j + beta c_i^+ c_j^+ + h.c.)]``; ``interaction`` params are
    ``(gamma, delta_i, delta_j)``; ``majorana_quartic`` has four Majorana indices and
    params ``(J, dt)`` for ``exp(-i J dt chi_a chi_b chi_c chi_d)``.
    """

    kind: str
    modes: tuple[int, ...]
    params: tuple = ()

    def __post_init__(self) -> None:
        if self.kind not in _FERMION_KINDS:
            raise ValueError(f"unknown fermionic gate kind {self.kind!r}")
        want = 4 if self.kind == "majorana_quartic" else 2
        if len(self.modes) != want:
            raise ValueError(f"{self.kind} acts on {want} indices")

    @classmethod
    def tunneling(cls, i: int, j: int, alpha: complex, beta: complex = 0.0) -> FermionicGate:
        return cls("tunneling", (i, j), (complex(alpha), complex(beta)))

    @classmethod
    def interaction(cls, i: int, j: int, gamma: float, delta_i: float = 0.0, delta_j: float = 0.0) -> FermionicGate:
        return cls("interaction", (i, j), (float(gamma), float(delta_i), float(delta_j)))

    @classmethod
    def majorana_quartic(cls, a: int, b: int, c: int, d: int, coupling: float, dt: float = 1.0) -> FermionicGate:
        return cls("majorana_quartic", (a, b, c, d), (float(coupling), float(dt)))


@dataclass(frozen=True)
class FermionicCircuit:
    """Layers of fermionic gates on ``n_modes`` modes."""

    n_modes: int
    layers: tuple[tuple[FermionicGate, ...], ...] = ()

    def __init__(self, n_modes: int, layers: Iterable[Iterable[FermionicGate]] = ()):
        object.__setattr__(self, "n_modes", int(n_modes))
        object.__setattr__(self, "layers", tuple(tuple(layer) for layer in layers))

    @property
    def T(self) -> int:
        return len(self.layers)


@dataclass(frozen=True)
class Violation:
    layer: int
    mode: int | None
    message: str


def validate(c: FermionicCircuit) -> list[Violation]:
    """Check index bounds and the per-layer cap of one tunneling and one interaction per mode."""
    out: list[Violation] = []
    for t, layer in enumerate(c.layers):
        used: dict[str, dict[int, int]] = {k: {} for k in _FERMION_KINDS}
        for g in layer:
            bound = 2 * c.n_modes if g.kind == "majorana_quartic" else c.n_modes
            if len(set(g.modes)) != len(g.modes):
                out.append(Violation(t, None, f"{g.kind} repeats an index: {g.modes}"))
            for i in g.modes:
                if not 0 <= i < bound:
                    out.append(Violation(t, i, f"{g.kind} index {i} out of range"))
                    continue
                used[g.kind][i] = used[g.kind].get(i, 0) + 1
        for kind, counts in used.items():
            for i, k in sorted(counts.items()):
                if k > 1:
                    what = "Majorana" if kind == "majorana_quartic" else "mode"
                    out.append(Violation(t, i, f"{what} {i} appears in {k} {kind} gates in layer {t}"))
    return out
