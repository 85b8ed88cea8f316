"""Correctness engines for compiled circuits.

Three independent checks are provided:

* A stabilizer tableau over the circuit wires plus one reference qubit per system
  wire.  The references hold half of a maximally entangled state, so the final
  tableau encodes the whole channel and every Pauli image can be read off with
  its sign written as a GF(2) affine function of the measurement outcomes.
* A dense state-vector oracle that enumerates measurement branches.
* A single-particle tracker for number-conserving Gaussian circuits.
"""

from __future__ import annotations

import os
import time
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .f2core import bits_of, popcount
from .ir import CompiledCircuit, FermionicCircuit, FermionicGate, QubitInstruction
from .jw import OrderingMap, PauliString, jw_majorana, pauli_product_phase

__all__ = [
    "NonCliffordError",
    "OracleCapError",
    "NonGaussianError",
    "SymbolicPauli",
    "ChannelTableau",
    "pauli_conjugate",
    "VerificationReport",
    "verify_majorana_images",
    "verify_permutation_circuit",
    "Branch",
    "channel_branches",
    "fock_unitary",
    "channel_matches",
    "unitary_equal_up_to_phase",
    "ModeTransfer",
    "mode_transfer",
    "fermionic_circuit_unitary",
    "majorana_permutation_unitary",
    "gaussian_unitary",
    "oracle_cap",
]


class NonCliffordError(ValueError):
    """The symbolic engine met an instruction outside Clifford + feedforward."""


class OracleCapError(ValueError):
    """The dense oracle was asked to simulate more qubits than the cap allows."""


class NonGaussianError(ValueError):
    """The mode tracker met a gate that does not conserve particle number."""


# ---------------------------------------------------------------------------
# symbolic tableau


@dataclass(frozen=True)
class SymbolicPauli:
    """``(-1)^(outcomes . sign_mask) * base``.

    ``sign_mask`` bit ``o`` is set when the sign depends on measurement outcome
    ``o`` (after feedforward has been taken into account).
    """

    base: PauliString
    sign_mask: int = 0

    @property
    def outcome_dependent(self) -> bool:
        return self.sign_mask != 0

    def outcome_ids(self) -> list[int]:
        return bits_of(self.sign_mask)

    def __str__(self) -> str:
        if not self.sign_mask:
            return str(self.base)
        vs = "+".join(f"m{o}" for o in self.outcome_ids())
        return f"(-1)^({vs}) {self.base}"


def _quarter_turns(ins: QubitInstruction) -> int:
    qt = ins.angle.quarter_turns()
    if qt is None:
        raise NonCliffordError(f"{ins.op} with angle {ins.angle} is not Clifford")
    return qt


class ChannelTableau:
    """Stabilizer tableau of the circuit's Choi state.

    Rows are stored as bit-packed Pauli letters over ``n_wires + n_system`` qubits.
    Stabilizer signs are ``const XOR (mask . m)`` with ``m`` the vector of free
    measurement variables.  Destabilizer signs are never needed and not tracked.
    """

    def __init__(self, c: CompiledCircuit):
        self.circuit = c
        self.n = c.n_system
        self.w = c.n_wires
        total = self.w + self.n
        self.total = total
        self.sx = [0] * total
        self.sz = [0] * total
        self.sc = [0] * total
        self.sm = [0] * total
        self.dx = [0] * total
        self.dz = [0] * total
        for q in range(self.n):
            r = self.w + q
            # stabilizers X_q X_r and Z_q Z_r; destabilizers Z_q and X_r
            self.sx[q] = (1 << q) | (1 << r)
            self.dz[q] = 1 << q
        for q in range(self.n):
            r = k = self.w + q
            self.sz[k] = (1 << q) | (1 << r)
            self.dx[k] = 1 << r
        for a in range(self.n, self.w):
            self.sz[a] = 1 << a
            self.dx[a] = 1 << a
        self.col = list(range(self.w))
        self.outcome_expr: dict[int, tuple[int, int]] = {}
        self._next_var = 0
        self._run()

    # ------------------------------------------------------------------ helpers
    def _fresh_var(self) -> int:
        v = self._next_var
        self._next_var += 1
        return v

    def _rowmul_stab(self, src: int, dst: int) -> None:
        """stab[dst] <- stab[src] * stab[dst] (commuting rows)."""
        k = pauli_product_phase(self.sx[src], self.sz[src], self.sx[dst], self.sz[dst])
        self.sx[dst] ^= self.sx[src]
        self.sz[dst] ^= self.sz[src]
        self.sc[dst] ^= self.sc[src] ^ ((k >> 1) & 1)
        self.sm[dst] ^= self.sm[src]

    def _cond_vector(self, ins: QubitInstruction) -> tuple[int, int]:
        const = ins.cond.parity
        mask = 0
        for o in ins.cond.outcomes:
            c0, m0 = self.outcome_expr[o]
            const ^= c0
            mask ^= m0
        return const, mask

    # gates on tableau bit positions ---------------------------------------------
    def _h(self, b: int) -> None:
        bit = 1 << b
        for rows in ((self.sx, self.sz, True), (self.dx, self.dz, False)):
            xs, zs, signed = rows
            for i in range(self.total):
                x, z = xs[i] & bit, zs[i] & bit
                if signed and x and z:
                    self.sc[i] ^= 1
                if x != z:
                    xs[i] ^= bit
                    zs[i] ^= bit

    def _s(self, b: int, dagger: bool = False) -> None:
        bit = 1 << b
        for i in range(self.total):
            x = self.sx[i] & bit
            if x:
                z = self.sz[i] & bit
                if (z and not dagger) or (not z and dagger):
                    self.sc[i] ^= 1
                self.sz[i] ^= bit
            if self.dx[i] & bit:
                self.dz[i] ^= bit

    def _pauli(self, axis: str, b: int, const: int = 1, mask: int = 0) -> None:
        bit = 1 << b
        for i in range(self.total):
            x, z = bool(self.sx[i] & bit), bool(self.sz[i] & bit)
            anti = z if axis == "X" else (x if axis == "Z" else x != z)
            if anti:
                self.sc[i] ^= const
                self.sm[i] ^= mask

    def _cnot(self, c: int, t: int) -> None:
        cb, tb = 1 << c, 1 << t
        for i in range(self.total):
            xc = (self.sx[i] >> c) & 1
            zt = (self.sz[i] >> t) & 1
            if xc or zt:
                xt = (self.sx[i] >> t) & 1
                zc = (self.sz[i] >> c) & 1
                if xc and zt and (xt ^ zc ^ 1):
                    self.sc[i] ^= 1
                if xc:
                    self.sx[i] ^= tb
                if zt:
                    self.sz[i] ^= cb
            if self.dx[i] & cb:
                self.dx[i] ^= tb
            if self.dz[i] & tb:
                self.dz[i] ^= cb

    def _cz(self, a: int, b: int) -> None:
        self._h(b)
        self._cnot(a, b)
        self._h(b)

    def col_swap_bits(self, a: int, b: int) -> None:
        ab, bb = 1 << a, 1 << b
        for arr in (self.sx, self.sz, self.dx, self.dz):
            for i in range(self.total):
                v = arr[i]
                if bool(v & ab) != bool(v & bb):
                    arr[i] = v ^ ab ^ bb

    def _measure_z(self, b: int) -> tuple[int, int]:
        """Measure Z on bit ``b``; returns the outcome as an affine expression."""
        bit = 1 << b
        p = next((i for i in range(self.total) if self.sx[i] & bit), None)
        if p is not None:
            for i in range(self.total):
                if i != p and self.sx[i] & bit:
                    self._rowmul_stab(p, i)
                if self.dx[i] & bit:
                    # destabilizer rows: letters only
                    self.dx[i] ^= self.sx[p]
                    self.dz[i] ^= self.sz[p]
            self.dx[p], self.dz[p] = self.sx[p], self.sz[p]
            v = self._fresh_var()
            self.sx[p], self.sz[p], self.sc[p], self.sm[p] = 0, bit, 0, 1 << v
            return 0, 1 << v
        # deterministic outcome: product of stabilizers whose destabilizer anticommutes
        ax = az = 0
        ph = 0
        const = mask = 0
        for i in range(self.total):
            if self.dx[i] & bit:
                ph += pauli_product_phase(ax, az, self.sx[i], self.sz[i])
                ax ^= self.sx[i]
                az ^= self.sz[i]
                const ^= self.sc[i]
                mask ^= self.sm[i]
        return const ^ ((ph >> 1) & 1), mask

    # ------------------------------------------------------------------ driver
    def _run(self) -> None:
        for k, ins in enumerate(self.circuit.instructions):
            try:
                self._apply(ins)
            except NonCliffordError as exc:
                raise NonCliffordError(f"instruction {k}: {exc}") from None

    def _apply(self, ins: QubitInstruction) -> None:
        op = ins.op
        q = [self.col[w] for w in ins.qubits]
        if op == "RELABEL":
            old = {w: self.col[w] for w in ins.qubits}
            for s, d in zip(ins.qubits, ins.targets):
                self.col[d] = old[s]
            return
        if ins.cond is not None:
            const, mask = self._cond_vector(ins)
            if const or mask:
                self._pauli(op, q[0], const, mask)
            return
        if op == "H":
            self._h(q[0])
        elif op == "S":
            self._s(q[0])
        elif op == "SDG":
            self._s(q[0], dagger=True)
        elif op in ("X", "Y", "Z"):
            self._pauli(op, q[0])
        elif op == "CNOT":
            self._cnot(q[0], q[1])
        elif op == "CZ":
            self._cz(q[0], q[1])
        elif op == "SWAP":
            self.col_swap_bits(q[0], q[1])
        elif op == "RZ":
            for _ in range(_quarter_turns(ins)):
                self._s(q[0])
        elif op == "RZZ":
            k = _quarter_turns(ins)
            if k:
                self._cnot(q[0], q[1])
                for _ in range(k):
                    self._s(q[1])
                self._cnot(q[0], q[1])
        elif op == "RXX":
            k = _quarter_turns(ins)
            if k:
                self._h(q[0])
                self._h(q[1])
                self._cnot(q[0], q[1])
                for _ in range(k):
                    self._s(q[1])
                self._cnot(q[0], q[1])
                self._h(q[0])
                self._h(q[1])
        elif op == "MEASURE_Z":
            self.outcome_expr[ins.outcome_id] = self._measure_z(q[0])
        elif op == "MEASURE_X":
            self._h(q[0])
            self.outcome_expr[ins.outcome_id] = self._measure_z(q[0])
            self._h(q[0])
        elif op in ("RESET", "PREP_X"):
            const, mask = self._measure_z(q[0])
            if const or mask:
                self._pauli("X", q[0], const, mask)
            if op == "PREP_X":
                self._h(q[0])
        else:
            raise NonCliffordError(f"{op} is not a Clifford instruction")

    # ------------------------------------------------------------------ readout
    def _member_sign(self, x: int, z: int) -> tuple[int, int] | None:
        """Sign of the Pauli (x, z) if it lies in the stabilizer group, else None."""
        for i in range(self.total):
            if (popcount(x & self.sz[i]) + popcount(z & self.sx[i])) & 1:
                return None
        ax = az = 0
        ph = 0
        const = mask = 0
        for i in range(self.total):
            if (popcount(x & self.dz[i]) + popcount(z & self.dx[i])) & 1:
                ph += pauli_product_phase(ax, az, self.sx[i], self.sz[i])
                ax ^= self.sx[i]
                az ^= self.sz[i]
                const ^= self.sc[i]
                mask ^= self.sm[i]
        if (ax, az) != (x, z):
            return None
        return const ^ ((ph >> 1) & 1), mask

    def ancilla_problems(self) -> list[str]:
        """Ancilla wires that are not deterministically back in ``|0>``."""
        out = []
        for a in range(self.n, self.w):
            sign = self._member_sign(0, 1 << self.col[a])
            if sign is None:
                out.append(f"ancilla {a} is not in a Z eigenstate")
            elif sign[1]:
                out.append(f"ancilla {a} final state depends on outcomes {bits_of(sign[1])}")
            elif sign[0]:
                out.append(f"ancilla {a} ends in |1>")
        return out

    def _reference_basis(self):
        if hasattr(self, "_ref_cache"):
            return self._ref_cache
        refmask = ((1 << self.n) - 1) << self.w
        piv: list[tuple[int, int, int]] = []  # (pivot bit, projection, combination)
        for i in range(self.total):
            v = ((self.sx[i] & refmask) >> self.w) | (((self.sz[i] & refmask) >> self.w) << self.n)
            comb = 1 << i
            for pb, pv, pc in piv:
                if (v >> pb) & 1:
                    v ^= pv
                    comb ^= pc
            if v:
                piv.append((v.bit_length() - 1, v, comb))
        self._ref_cache = piv
        return piv

    def image(self, p: PauliString) -> SymbolicPauli | None:
        """Image ``U p U^dagger`` of a system Pauli, or None if the channel is not unitary."""
        if p.n != self.n:
            raise ValueError("Pauli acts on a different number of system qubits")
        target = p.x | (p.z << self.n)
        comb = 0
        for pb, pv, pc in self._reference_basis():
            if (target >> pb) & 1:
                target ^= pv
                comb ^= pc
        if target:
            return None
        ax = az = 0
        ph = 0
        const = mask = 0
        for i in bits_of(comb):
            ph += pauli_product_phase(ax, az, self.sx[i], self.sz[i])
            ax ^= self.sx[i]
            az ^= self.sz[i]
            const ^= self.sc[i]
            mask ^= self.sm[i]
        const ^= (ph >> 1) & 1
        # ancilla part must be Z-type; strip it with the +Z_a stabilizers
        anc_bits = 0
        for a in range(self.n, self.w):
            anc_bits |= 1 << self.col[a]
        if ax & anc_bits:
            return None
        az &= ~anc_bits
        # read the system part in wire order
        x = z = 0
        for q in range(self.n):
            b = self.col[q]
            x |= ((ax >> b) & 1) << q
            z |= ((az >> b) & 1) << q
        ny = popcount(p.x & p.z)
        phase = 2 * (const ^ (ny & 1)) + p.phase
        return SymbolicPauli(PauliString(self.n, x, z, phase), mask)


def pauli_conjugate(c: CompiledCircuit, p: PauliString) -> SymbolicPauli:
    """Push ``p`` through ``c``, returning ``U p U^dagger`` with an outcome-dependent sign.

    Raises:
        NonCliffordError: the circuit contains a non-Clifford instruction.
        ValueError: the circuit does not act as a unitary channel on the system.
    """
    img = ChannelTableau(c).image(p)
    if img is None:
        raise ValueError("circuit does not act unitarily on the system register")
    return img


@dataclass
class VerificationReport:
    """Outcome of checking the images of all Majorana operators."""

    passed: bool
    checked: int
    failures: list[dict] = field(default_factory=list)
    strategy: str = "symbolic-tableau"
    timings: dict = field(default_factory=dict)
    phases: list[int] = field(default_factory=list)
    problems: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "checked": self.checked,
            "failures": self.failures,
            "strategy": self.strategy,
            "timings": self.timings,
            "phases": self.phases,
            "problems": self.problems,
        }

    def __bool__(self) -> bool:
        return self.passed


def verify_majorana_images(
    c: CompiledCircuit,
    sources: Sequence[PauliString],
    targets: Sequence[PauliString],
    allow_sign: bool = False,
) -> VerificationReport:
    """Check ``U sources[k] U^dagger == targets[k]`` for every ``k``.

    With ``allow_sign`` a constant ``-1`` is accepted and recorded in ``phases``;
    an outcome-dependent sign is always a failure.
    """
    t0 = time.perf_counter()
    report = VerificationReport(True, 0)
    try:
        tab = ChannelTableau(c)
    except NonCliffordError as exc:
        report.passed = False
        report.problems.append(str(exc))
        return report
    t1 = time.perf_counter()
    report.problems.extend(tab.ancilla_problems())
    if report.problems:
        report.passed = False
    for k, (src, tgt) in enumerate(zip(sources, targets)):
        report.checked += 1
        img = tab.image(src)
        if img is None:
            report.passed = False
            report.failures.append({"majorana": k, "expected": str(tgt), "got": None, "outcome_dependent": False})
            report.phases.append(0)
            continue
        same = img.base.same_letters(tgt)
        rel = (img.base.phase - tgt.phase) & 3
        ok = same and not img.outcome_dependent and (rel == 0 or (allow_sign and rel == 2))
        report.phases.append(1 if rel == 0 else -1 if rel == 2 else 0)
        if not ok:
            report.passed = False
            report.failures.append(
                {"majorana": k, "expected": str(tgt), "got": str(img), "outcome_dependent": img.outcome_dependent}
            )
    report.timings = {"simulate_s": t1 - t0, "readout_s": time.perf_counter() - t1}
    return report


def _as_ordering(m, n: int) -> OrderingMap:
    if m is None:
        return OrderingMap.identity(n)
    if isinstance(m, OrderingMap):
        return m
    return OrderingMap(list(m))


def verify_permutation_circuit(c: CompiledCircuit, m0=None, m1=None, allow_sign: bool = False) -> VerificationReport:
    """PASS iff every ``jw_majorana(m0, mu)`` maps to ``jw_majorana(m1, mu)`` with a fixed ``+`` sign."""
    n = c.n_system
    a, b = _as_ordering(m0, n), _as_ordering(m1, n)
    if a.n != n or b.n != n:
        raise ValueError("ordering size does not match the circuit")
    src = [jw_majorana(a, mu) for mu in range(2 * n)]
    tgt = [jw_majorana(b, mu) for mu in range(2 * n)]
    return verify_majorana_images(c, src, tgt, allow_sign=allow_sign)


# ---------------------------------------------------------------------------
# dense oracle


def oracle_cap() -> int:
    """Qubit cap of the dense oracle (``FERRIQ_ORACLE_CAP`` overrides the default 14)."""
    raw = os.environ.get("FERRIQ_ORACLE_CAP")
    if raw is None:
        return 14
    cap = int(raw)
    if cap <= 0:
        raise ValueError("FERRIQ_ORACLE_CAP must be positive")
    return cap


_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_P = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1, -1]).astype(complex),
}
_FIXED1 = {
    "H": _H,
    "S": np.diag([1, 1j]),
    "SDG": np.diag([1, -1j]),
    **_P,
}
_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
_CZ = np.diag([1, 1, 1, -1]).astype(complex)
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
_ZZ = np.diag([1, -1, -1, 1]).astype(complex)
_XX = np.kron(_P["X"], _P["X"])


def instruction_matrix(ins: QubitInstruction) -> np.ndarray:
    """Dense matrix of a unitary instruction (qubits[0] most significant)."""
    op = ins.op
    if op in _FIXED1:
        return _FIXED1[op]
    if op == "CNOT":
        return _CNOT
    if op == "CZ":
        return _CZ
    if op == "SWAP":
        return _SWAP
    if op == "U2":
        return ins.matrix_array()
    if op == "RZ":
        t = ins.angle.to_radians()
        return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])
    if op in ("RZZ", "RXX"):
        t = ins.angle.to_radians()
        g = _ZZ if op == "RZZ" else _XX
        return np.cos(t / 2) * np.eye(4) - 1j * np.sin(t / 2) * g
    raise ValueError(f"{op} has no unitary matrix")


def _apply(state: np.ndarray, mat: np.ndarray, wires: Sequence[int]) -> np.ndarray:
    k = len(wires)
    m = mat.reshape((2,) * (2 * k))
    out = np.tensordot(m, state, axes=(list(range(k, 2 * k)), list(wires)))
    return np.moveaxis(out, list(range(k)), list(wires))


def _project(state: np.ndarray, wire: int, bit: int) -> np.ndarray:
    out = state.copy()
    idx = [slice(None)] * state.ndim
    idx[wire] = 1 - bit
    out[tuple(idx)] = 0
    return out


@dataclass
class Branch:
    """One measurement branch: outcome record and the system-to-system operator."""

    outcomes: dict
    kraus: np.ndarray
    ancilla_state: int = 0


def _initial_state(n: int, w: int, inputs: np.ndarray) -> np.ndarray:
    na = w - n
    psi = np.zeros((1 << w, inputs.shape[1]), dtype=complex)
    psi[np.arange(1 << n) << na, :] = inputs
    return psi.reshape((2,) * w + (inputs.shape[1],))


def channel_branches(
    c: CompiledCircuit,
    inputs: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
    max_branches: int = 1 << 16,
    cap: int | None = None,
) -> list[Branch]:
    """Simulate ``c`` densely, enumerating (or sampling with ``rng``) measurement branches.

    Args:
        c: Circuit to simulate.
        inputs: Input vectors of the system register as columns; defaults to the
            identity, giving Kraus operators.
        rng: When given, a single branch is sampled with Born probabilities.
        max_branches: Abort if enumeration exceeds this many live branches.
        cap: Qubit cap; defaults to :func:`oracle_cap`.

    Returns:
        Branches whose ``kraus`` maps inputs to the final system state, after the
        ancilla factor is checked to be a computational basis state.
    """
    cap = oracle_cap() if cap is None else cap
    if c.n_wires > cap:
        raise OracleCapError(f"{c.n_wires} qubits exceed the dense oracle cap of {cap}")
    n, w = c.n_system, c.n_wires
    if inputs is None:
        inputs = np.eye(1 << n, dtype=complex)
    inputs = np.asarray(inputs, dtype=complex)
    if inputs.shape[0] != 1 << n:
        raise ValueError("input vectors do not match the system size")
    branches: list[tuple[dict, np.ndarray]] = [({}, _initial_state(n, w, inputs))]
    hidden = 0
    tol = 1e-24

    def split(state: np.ndarray, wire: int):
        parts = []
        for bit in (0, 1):
            s = _project(state, wire, bit)
            nrm = float(np.vdot(s, s).real)
            if nrm > tol:
                parts.append((bit, s, nrm))
        if rng is not None and len(parts) == 2:
            p1 = parts[1][2] / (parts[0][2] + parts[1][2])
            keep = parts[1] if rng.random() < p1 else parts[0]
            bit, s, nrm = keep
            total = parts[0][2] + parts[1][2]
            parts = [(bit, s * np.sqrt(total / nrm), nrm)]
        return parts

    for ins in c.instructions:
        op = ins.op
        new: list[tuple[dict, np.ndarray]] = []
        if op == "RELABEL":
            axes = list(range(w + 1))
            for s, d in zip(ins.qubits, ins.targets):
                axes[d] = s
            branches = [(o, np.transpose(st, axes)) for o, st in branches]
            continue
        if ins.cond is not None:
            for o, st in branches:
                if ins.cond.evaluate(o):
                    st = _apply(st, _P[op], ins.qubits)
                new.append((o, st))
            branches = new
            continue
        if op in ("MEASURE_Z", "MEASURE_X", "RESET", "PREP_X"):
            q = ins.qubits[0]
            for o, st in branches:
                if op == "MEASURE_X":
                    st = _apply(st, _H, [q])
                for bit, s, _ in split(st, q):
                    o2 = dict(o)
                    if op in ("MEASURE_Z", "MEASURE_X"):
                        o2[ins.outcome_id] = bit
                        if op == "MEASURE_X":
                            s = _apply(s, _H, [q])
                    else:
                        o2[("hidden", hidden)] = bit
                        if bit:
                            s = _apply(s, _P["X"], [q])
                        if op == "PREP_X":
                            s = _apply(s, _H, [q])
                    new.append((o2, s))
            if op in ("RESET", "PREP_X"):
                hidden += 1
            branches = new
            if len(branches) > max_branches:
                raise OracleCapError(f"more than {max_branches} measurement branches")
            continue
        mat = instruction_matrix(ins)
        branches = [(o, _apply(st, mat, ins.qubits)) for o, st in branches]

    out = []
    na = w - n
    for o, st in branches:
        flat = st.reshape(1 << n, 1 << na, -1)
        weight = np.sum(np.abs(flat) ** 2, axis=(0, 2))
        nz = np.flatnonzero(weight > 1e-20 * max(weight.max(), 1e-300))
        if len(nz) != 1:
            raise ValueError(f"branch {o}: ancilla register is not in a computational basis state")
        out.append(Branch(o, flat[:, nz[0], :], int(nz[0])))
    return out


def fock_unitary(c: CompiledCircuit | FermionicCircuit, n_qubits: int | None = None) -> np.ndarray:
    """Dense unitary of a measurement-free (single-branch) circuit or of a fermionic circuit."""
    if isinstance(c, FermionicCircuit):
        return fermionic_circuit_unitary(c)
    if n_qubits is not None and n_qubits != c.n_system:
        raise ValueError("n_qubits does not match the circuit")
    br = channel_branches(c)
    if len(br) != 1:
        raise ValueError(f"circuit has {len(br)} measurement branches; use channel_branches")
    return br[0].kraus


def unitary_equal_up_to_phase(u: np.ndarray, v: np.ndarray, tol: float = 1e-9) -> bool:
    """True iff ``max|u - e^{i phi} v| <= tol`` with ``phi`` from the largest entry of ``v``."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != v.shape:
        raise ValueError(f"shape mismatch {u.shape} vs {v.shape}")
    if u.size == 0:
        return True
    idx = np.unravel_index(np.argmax(np.abs(v)), v.shape)
    if abs(v[idx]) == 0:
        return bool(np.max(np.abs(u)) <= tol)
    ratio = u[idx] / v[idx]
    if abs(ratio) == 0:
        return False
    phase = ratio / abs(ratio)
    return bool(np.max(np.abs(u - phase * v)) <= tol)


def channel_matches(
    c: CompiledCircuit,
    target: np.ndarray,
    tol: float = 1e-9,
    inputs: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
) -> bool:
    """Every branch equals ``target`` (restricted to ``inputs``) up to phase and weights sum to one."""
    branches = channel_branches(c, inputs=inputs, rng=rng)
    ref = target if inputs is None else target @ inputs
    total = 0.0
    for b in branches:
        nrm2 = float(np.sum(np.abs(b.kraus) ** 2)) / ref.shape[1]
        total += nrm2
        if nrm2 <= 0:
            return False
        if b.ancilla_state != 0:
            return False
        if not unitary_equal_up_to_phase(b.kraus / np.sqrt(nrm2), ref, tol):
            return False
    if rng is not None:
        return True
    return abs(total - 1.0) <= max(tol, 1e-9)


# ---------------------------------------------------------------------------
# fermionic reference unitaries


def fermionic_circuit_unitary(fc: FermionicCircuit) -> np.ndarray:
    """Dense Fock-space unitary of a fermionic circuit in the identity ordering."""
    from scipy.linalg import expm

    from .fock import annihilators, majoranas

    n = fc.n_modes
    if n > oracle_cap():
        raise OracleCapError(f"{n} modes exceed the dense oracle cap")
    cs = annihilators(n)
    chis = majoranas(n) if any(g.kind == "majorana_quartic" for layer in fc.layers for g in layer) else None
    u = np.eye(1 << n, dtype=complex)
    for layer in fc.layers:
        for g in layer:
            u = _gate_unitary(g, cs, chis, expm) @ u
    return u


def _gate_unitary(g: FermionicGate, cs, chis, expm) -> np.ndarray:
    if g.kind == "tunneling":
        i, j = g.modes
        alpha, beta = g.params
        ci, cj = cs[i], cs[j]
        h = alpha * ci.conj().T @ cj + beta * ci.conj().T @ cj.conj().T
        return expm(-1j * (h + h.conj().T))
    if g.kind == "interaction":
        i, j = g.modes
        gamma, di, dj = g.params
        ni = cs[i].conj().T @ cs[i]
        nj = cs[j].conj().T @ cs[j]
        return expm(-1j * (gamma * ni @ nj + di * ni + dj * nj))
    a, b, c, d = g.modes
    coupling, dt = g.params
    h = chis[a] @ chis[b] @ chis[c] @ chis[d]
    return expm(-1j * coupling * dt * h)


def majorana_permutation_unitary(p: Sequence[int]) -> np.ndarray:
    """A unitary ``U`` with ``U chi_mu U^dagger = chi_{p(mu)}`` for all ``mu`` (identity ordering)."""
    from .fock import majoranas

    m = len(p)
    if m % 2:
        raise ValueError("Majorana count must be even")
    chis = majoranas(m // 2)
    dim = chis[0].shape[0]
    u = np.eye(dim, dtype=complex)
    # images so far: chi_mu -> sign[mu] * chi_{cur[mu]}
    cur = list(range(m))
    sign = [1] * m
    pos = {v: k for k, v in enumerate(cur)}
    target = list(p)
    for mu in range(m):
        if cur[mu] == target[mu]:
            continue
        a, b = cur[mu], target[mu]
        t = (chis[a] + chis[b]) / np.sqrt(2)
        u = t @ u
        nu = pos[b]
        for k in range(m):
            if k == mu:
                cur[k] = b
            elif k == nu:
                cur[k] = a
            else:
                sign[k] = -sign[k]
        pos[a], pos[b] = nu, mu
    flips = {cur[k] for k in range(m) if sign[k] < 0}
    tset = flips if len(flips) % 2 == 0 else set(range(m)) - flips
    fix = np.eye(dim, dtype=complex)
    for c in sorted(tset):
        fix = fix @ chis[c]
    return fix @ u


def gaussian_unitary(transfer: np.ndarray) -> np.ndarray:
    """Number-conserving Fock unitary with ``c_x^+ -> sum_k T[k, x] c_k^+`` and fixed vacuum."""
    from scipy.linalg import expm, logm

    from .fock import annihilators

    t = np.asarray(transfer, dtype=complex)
    n = t.shape[0]
    k = logm(t)
    cs = annihilators(n)
    gen = sum(k[a, b] * cs[a].conj().T @ cs[b] for a in range(n) for b in range(n))
    return expm(gen)


# ---------------------------------------------------------------------------
# single-particle tracker


@dataclass(frozen=True)
class ModeTransfer:
    """Single-particle transfer ``U[k, x]``: ``c_x^+ -> sum_k U[k, x] c_k^+`` over qubit positions."""

    U: np.ndarray

    @property
    def n(self) -> int:
        return self.U.shape[0]

    def is_unitary(self, tol: float = 1e-10) -> bool:
        return bool(np.max(np.abs(self.U.conj().T @ self.U - np.eye(self.n))) <= tol)


def _u2_transfer(mat: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    m = np.asarray(mat, dtype=complex)
    for r in range(4):
        for c in range(4):
            same_sector = popcount(r) == popcount(c)
            if not same_sector and abs(m[r, c]) > tol:
                raise NonGaussianError("two-qubit gate does not conserve particle number")
    m00 = m[0, 0]
    if abs(m00) < tol:
        raise NonGaussianError("two-qubit gate annihilates the vacuum")
    t = np.array([[m[2, 2], m[2, 1]], [m[1, 2], m[1, 1]]]) / m00
    if abs(m[3, 3] / m00 - np.linalg.det(t)) > 1e-8:
        raise NonGaussianError("two-qubit gate is not Gaussian")
    return t


def mode_transfer(c: CompiledCircuit, n: int | None = None) -> ModeTransfer:
    """Single-particle transfer matrix of a Gaussian circuit.

    Instructions inside blocks tagged ``fermionic_permutation`` are replaced by
    the block's permutation.  Outside blocks only number-conserving two-qubit
    unitaries, ``RZ``, ``Z`` and relabels are allowed.
    """
    n = c.n_system if n is None else n
    u = np.eye(n, dtype=complex)
    starts: dict[int, list] = {}
    for b in c.blocks:
        if b.kind == "fermionic_permutation":
            starts.setdefault(b.start, []).append(b)
    k = 0
    ins = c.instructions
    while k < len(ins):
        if k in starts:
            b = max(starts[k], key=lambda bl: bl.stop)
            if b.stop > k:
                perm = np.zeros((n, n))
                for q, t in enumerate(b.perm):
                    perm[t, q] = 1.0
                u = perm @ u
                k = b.stop
                continue
        i = ins[k]
        k += 1
        if i.op == "RELABEL":
            perm = np.eye(n)
            for s, d in zip(i.qubits, i.targets):
                if s >= n or d >= n:
                    raise NonGaussianError("relabel touches ancilla wires outside a permutation block")
                perm[:, s] = 0
            for s, d in zip(i.qubits, i.targets):
                perm[d, s] = 1.0
            u = perm @ u
        elif i.op == "U2":
            q0, q1 = i.qubits
            t = _u2_transfer(i.matrix_array())
            step = np.eye(n, dtype=complex)
            step[np.ix_([q0, q1], [q0, q1])] = t
            u = step @ u
        elif i.op == "RZ":
            step = np.eye(n, dtype=complex)
            step[i.qubits[0], i.qubits[0]] = np.exp(1j * i.angle.to_radians())
            u = step @ u
        elif i.op == "Z" and i.cond is None:
            step = np.eye(n, dtype=complex)
            step[i.qubits[0], i.qubits[0]] = -1.0
            u = step @ u
        else:
            raise NonGaussianError(f"{i.op} outside a permutation block has no single-particle action")
    return ModeTransfer(u)
