"""Fermionic fast Fourier transform and its fault-tolerant cost formulas.

Conventions:
    The transform sends a particle on position ``x`` to ``sum_k w^{kx} / sqrt(N)``
    on position ``k`` with ``w = exp(2 pi i / N)``.  Each recursion level riffles
    the two halves of a block (low half on the left of every pair), applies the
    twiddle ``RZ(2 pi a / M)`` to the right qubit and mixes the pair with ``F_2``.
    ``F_2`` is emitted with its first tensor factor on the right qubit, which makes
    its single-particle action exactly ``DFT_2`` in left-to-right order.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction

import numpy as np

from .ir import Angle, CircuitBuilder, CompiledCircuit
from .jw import Permutation
from .perm import (
    InterleaveLayer,
    ModeMap,
    StructuredPerm,
    apply_deformation,
    synth_interleave_layer,
    synth_inverse_interleave,
    synth_reflection_1d,
    synth_reflection_2d,
)

__all__ = [
    "f2_gate",
    "FfftLevel",
    "FfftPlan",
    "plan_ffft_1d",
    "build_ffft_1d",
    "build_ffft_2d",
    "dft_matrix",
    "ccz_cost_rz",
    "fswap_interleave_cost",
    "djw_interleave_cost",
    "CatalysisReport",
    "catalysis_report",
    "catalysis_ccz_count",
    "momentum_pairing_factors",
    "momentum_pairing_permutation",
    "compile_momentum_pairing",
]

_S = 1 / math.sqrt(2)


def f2_gate() -> np.ndarray:
    """The two-mode mixing gate ``F_2`` (basis ``|00>, |01>, |10>, |11>``)."""
    return np.array(
        [[1, 0, 0, 0], [0, _S, _S, 0], [0, _S, -_S, 0], [0, 0, 0, -1]],
        dtype=complex,
    )


def dft_matrix(n_modes: int) -> np.ndarray:
    """``T[k, x] = exp(2 pi i k x / N) / sqrt(N)``."""
    k = np.arange(n_modes)
    return np.exp(2j * np.pi * np.outer(k, k) / n_modes) / math.sqrt(n_modes)


def _check_pow2(n_modes: int, what: str) -> int:
    if n_modes < 1 or n_modes & (n_modes - 1):
        raise ValueError(f"{what} must be a power of two, got {n_modes}")
    return n_modes.bit_length() - 1


# ---------------------------------------------------------------------------
# plan


def _riffle(n: int, m: int) -> Permutation:
    """Blockwise riffle: in every block of size ``m``, ``k -> 2k`` and ``m/2 + k -> 2k + 1``."""
    h = m // 2
    out = []
    for start in range(0, n, m):
        out += [start + 2 * k for k in range(h)] + [start + 2 * k + 1 for k in range(h)]
    return Permutation(out)


@dataclass(frozen=True)
class FfftLevel:
    """One recursion level acting on blocks of ``block`` modes.

    Attributes:
        block: Block size ``M`` at this level.
        riffle: Interleave pairing ``k`` with ``M/2 + k`` on adjacent positions.
        separation: Even/odd separation, the inverse of ``riffle``.
        twiddles: ``(wire, a/M)`` phase placements in turns.
        gates: ``(left, right)`` wires of the ``F_2`` gates.
    """

    block: int
    riffle: Permutation
    separation: Permutation
    twiddles: tuple[tuple[int, Fraction], ...]
    gates: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class FfftPlan:
    """Schedule of an FFFT on ``N = 2^n`` modes (1D) or on an ``L_r x L_c`` grid (2D)."""

    n: int
    dims: tuple[int, ...]
    levels: tuple[FfftLevel, ...] = field(default=())

    @property
    def n_modes(self) -> int:
        return math.prod(self.dims)

    def angles(self) -> list[Fraction]:
        return [a for lv in self.levels for _, a in lv.twiddles]


def plan_ffft_1d(n: int) -> FfftPlan:
    """Levels of the 1D FFFT on ``2^n`` modes, smallest block first."""
    if n < 0:
        raise ValueError("n must be non-negative")
    big = 1 << n
    levels = []
    for lvl in range(1, n + 1):
        m = 1 << lvl
        h = m // 2
        rif = _riffle(big, m)
        tw, gates = [], []
        for start in range(0, big, m):
            for k in range(h):
                left, right = start + 2 * k, start + 2 * k + 1
                gates.append((left, right))
                if k:
                    tw.append((right, Fraction(k, m)))
        levels.append(FfftLevel(m, rif, rif.inverse(), tuple(tw), tuple(gates)))
    return FfftPlan(n, (big,), tuple(levels))


# ---------------------------------------------------------------------------
# circuits


def _blocks(n: int, m: int) -> tuple[tuple[int, int, int], ...]:
    return tuple((s, s + m // 2, s + m) for s in range(0, n, m))


def _separation_layer(b: CircuitBuilder, lv: FfftLevel, n: int, method: str, mode: str) -> None:
    if lv.block <= 2:
        return
    held: list[int] = []
    with b.block("fermionic_permutation", tuple(lv.separation), label="separation"):
        for start in range(0, n, lv.block):
            local = [lv.separation[q] - start for q in range(start, start + lv.block)]
            sub = synth_inverse_interleave(local, method, mode)
            held += b.embed(sub, list(range(start, start + lv.block)), release=False)
    if held:
        b.release(*held)


def _emit_1d(b: CircuitBuilder, plan: FfftPlan, wires: Sequence[int], method: str, mode: str) -> None:
    n = plan.n_modes
    sub = CircuitBuilder(n, provenance="ffft")
    for lv in reversed(plan.levels):
        with sub.provenance(f"separate[{lv.block}]"):
            _separation_layer(sub, lv, n, method, mode)
    for lv in plan.levels:
        with sub.provenance(f"level[{lv.block}]"):
            if lv.block > 2:
                sub.embed(synth_interleave_layer(InterleaveLayer(lv.riffle, _blocks(n, lv.block)), method, mode), list(range(n)))
            for w, a in lv.twiddles:
                sub.rz(w, Angle.turns(a.numerator, a.denominator))
            for left, right in lv.gates:
                sub.u2(right, left, f2_gate(), label="F2")
            _separation_layer(sub, lv, n, method, mode)
    b.embed(sub.build(), list(wires), release=False)


def build_ffft_1d(
    n: int, interleave_method: str = "cascade", cascade_mode: str = "constant_depth"
) -> tuple[CompiledCircuit, FfftPlan]:
    """FFFT on ``2^n`` modes; returns the circuit and its plan."""
    plan = plan_ffft_1d(n)
    b = CircuitBuilder(plan.n_modes, provenance="ffft1d")
    _emit_1d(b, plan, range(plan.n_modes), interleave_method, cascade_mode)
    c = b.build(metadata={"kind": "ffft_1d", "n": n, "interleave_method": interleave_method, "cascade_mode": cascade_mode})
    return c, plan


def _parallel_1d(b: CircuitBuilder, plan: FfftPlan, rows: int, method: str, mode: str) -> None:
    held: list[int] = []
    width = plan.n_modes
    for r in range(rows):
        sub = CircuitBuilder(width)
        _emit_1d(sub, plan, range(width), method, mode)
        held += b.embed(sub.build(), list(range(r * width, (r + 1) * width)), release=False)
    if held:
        b.release(*held)


def build_ffft_2d(
    L: int | Sequence[int], interleave_method: str = "cascade", cascade_mode: str = "constant_depth"
) -> tuple[CompiledCircuit, FfftPlan]:
    """2D FFFT on an ``L_r x L_c`` grid stored row-major.

    Row transforms run in parallel, a 2D reflection makes columns contiguous, the
    column transforms run in parallel and a second reflection restores row-major
    order.  The single-particle action is ``DFT_{L_r} (x) DFT_{L_c}``.
    """
    lr, lc = (L, L) if isinstance(L, int) else tuple(L)
    nr, nc = _check_pow2(lr, "L_r"), _check_pow2(lc, "L_c")
    if lr < 2 or lc < 2:
        raise ValueError("both sides must be at least 2")
    row_plan, col_plan = plan_ffft_1d(nc), plan_ffft_1d(nr)
    n = lr * lc
    b = CircuitBuilder(n, provenance="ffft2d")
    with b.provenance("rows"):
        _parallel_1d(b, row_plan, lr, interleave_method, cascade_mode)
    with b.provenance("reflect"):
        b.embed(synth_reflection_2d(lr, lc), list(range(n)))
    with b.provenance("columns"):
        _parallel_1d(b, col_plan, lc, interleave_method, cascade_mode)
    with b.provenance("reflect_back"):
        b.embed(synth_reflection_2d(lc, lr), list(range(n)))
    plan = FfftPlan(nr + nc, (lr, lc), row_plan.levels + col_plan.levels)
    c = b.build(metadata={"kind": "ffft_2d", "dims": [lr, lc], "interleave_method": interleave_method})
    return c, plan


# ---------------------------------------------------------------------------
# fault-tolerant counting


def ccz_cost_rz(n: int) -> int:
    """CCZ gates for the twiddle rotations of the outermost level of ``FFFT_{2^n}``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    total = 0
    for k in range(3, n + 1):
        total += (1 << (k - 2)) - 1
    return total


def fswap_interleave_cost(n: int) -> int:
    """Gates of the three FSWAP-network interleaves of one level (three per crossing)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if n == 1:
        return 0
    return 3 * ((1 << (2 * n - 3)) - (1 << (n - 2)))


def djw_interleave_cost(n: int) -> int:
    """Clifford gates of the three dynamical-JW interleaves of one level."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if n == 1:
        return 0
    return 3 * ((1 << (n + 1)) - 6)


def _angle_class(a: Fraction) -> Fraction:
    """Representative of ``a`` (turns) up to Paulis: ``a ~ -a ~ a + 1/2``."""
    a = a % Fraction(1, 2)
    return min(a, (Fraction(1, 2) - a) % Fraction(1, 2))


def _is_clifford_angle(a: Fraction) -> bool:
    return (a * 4).denominator == 1


def catalysis_ccz_count(angles: Iterable[Fraction]) -> list[int]:
    """Per-round CCZ counts of the cascaded catalysis for a multiset of rotations.

    Rotations equal up to Paulis are produced in pairs by one CCZ that consumes
    one rotation of twice the angle; doubling continues until every remaining
    rotation is Clifford.
    """
    demand = Counter(_angle_class(Fraction(a)) for a in angles)
    rounds = []
    while True:
        demand = Counter({a: m for a, m in demand.items() if not _is_clifford_angle(a)})
        if not demand:
            return rounds
        nxt: Counter = Counter()
        cost = 0
        for a, m in demand.items():
            pairs = -(-m // 2)
            cost += pairs
            nxt[_angle_class(2 * a)] += pairs
        rounds.append(cost)
        demand = nxt


def _per_mode(count: int, n_modes: int) -> Decimal:
    return (Decimal(count) / Decimal(n_modes)).quantize(Decimal("0.001"), rounding=ROUND_HALF_UP)


@dataclass(frozen=True)
class CatalysisReport:
    """CCZ counts for one FFFT level of ``N = 2^n`` modes.

    Attributes:
        n: ``log2 N``.
        f2_ccz: CCZ gates for the fixed ``F_2`` parts (``N/2``).
        rz_rounds: CCZ gates per catalysis round, outermost first.
        rz_total: Sum of ``rz_rounds``.
        rz_per_mode: ``rz_total / N`` rounded half-up to three decimals.
    """

    n: int
    f2_ccz: int
    rz_rounds: tuple[int, ...]
    rz_total: int
    rz_per_mode: Decimal

    @property
    def n_modes(self) -> int:
        return 1 << self.n

    @property
    def total(self) -> int:
        return self.f2_ccz + self.rz_total

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "N": self.n_modes,
            "f2_ccz": self.f2_ccz,
            "rz_rounds": list(self.rz_rounds),
            "rz_total": self.rz_total,
            "rz_per_mode": str(self.rz_per_mode),
            "total": self.total,
        }


def catalysis_report(n: int) -> CatalysisReport:
    """Counts derived from the twiddle angles of the outermost level of the plan."""
    plan = plan_ffft_1d(n)
    top = [a for _, a in plan.levels[-1].twiddles] if plan.levels else []
    # k = 0 twiddles are omitted from the circuit but belong to the angle set
    top += [Fraction(0)] * (len(plan.levels[-1].gates) - len(top) if plan.levels else 0)
    rounds = tuple(catalysis_ccz_count(top))
    total = sum(rounds)
    big = 1 << n
    return CatalysisReport(n, big // 2, rounds, total, _per_mode(total, big))


# ---------------------------------------------------------------------------
# momentum pairing


def _kx_negate(L: int) -> Permutation:
    out = []
    for r in range(L):
        out += [r * L + ((-c) % L) for c in range(L)]
    return Permutation(out)


def _ky_negate(L: int) -> Permutation:
    out = []
    for r in range(L):
        out += [((-r) % L) * L + c for c in range(L)]
    return Permutation(out)


def _spin_split(L: int) -> Permutation:
    """Pairs ``(k up, k down)`` stored adjacently are split into two contiguous halves."""
    n = L * L
    return Permutation([(q // 2) + (q % 2) * n for q in range(2 * n)])


def momentum_pairing_factors(L: int, spec: str) -> list[Permutation]:
    """Factors, in application order, of a ``k -> -k`` reordering on an ``L x L`` grid.

    Modes sit row-major with row ``k_y`` and column ``k_x``.  Kinds:
        ``kx_negate``: ``k_x -> -k_x mod L`` in every row.
        ``full_k_negate``: ``k -> -k mod L`` on both axes.
        ``spin_split``: ``2 L^2`` modes with spins adjacent; separates the spins and
            negates ``k`` of the down half.
    """
    _check_pow2(L, "L")
    if spec == "kx_negate":
        return [_kx_negate(L)]
    if spec == "full_k_negate":
        return [_kx_negate(L), _ky_negate(L)]
    if spec == "spin_split":
        n = L * L
        ident = list(range(n))
        down = [[*ident, *(n + v for v in f)] for f in (_kx_negate(L), _ky_negate(L))]
        return [_spin_split(L), *(Permutation(d) for d in down)]
    raise ValueError(f"unknown momentum pairing {spec!r}")


def momentum_pairing_permutation(L: int, spec: str) -> Permutation:
    """Composite permutation of :func:`momentum_pairing_factors`."""
    factors = momentum_pairing_factors(L, spec)
    total = Permutation(range(factors[0].n))
    for f in factors:
        total = f @ total
    return total


def _negate_circuit(L: int, axis: str) -> CompiledCircuit:
    """``k -> -k`` along one axis: ``L`` reflections of length ``L - 1`` or one duplicated reflection."""
    n = L * L
    p = _kx_negate(L) if axis == "x" else _ky_negate(L)
    b = CircuitBuilder(n, provenance=f"negate_k{axis}")
    with b.block("fermionic_permutation", tuple(p), label=f"negate_k{axis}"):
        if L > 2:
            if axis == "x":
                held: list[int] = []
                sub = synth_reflection_1d(L - 1)
                for r in range(L):
                    held += b.embed(sub, list(range(r * L + 1, (r + 1) * L)), release=False)
                if held:
                    b.release(*held)
            else:
                mm = ModeMap(L - 1, [i // L for i in range((L - 1) * L)])
                b.embed(apply_deformation(StructuredPerm.reflect1d(L - 1), mm), list(range(L, n)))
    return b.build()


def compile_momentum_pairing(L: int, spec: str, interleave_method: str = "cascade") -> CompiledCircuit:
    """Circuit for :func:`momentum_pairing_permutation` from reflections and interleaves."""
    p = momentum_pairing_permutation(L, spec)
    n = p.n
    b = CircuitBuilder(n, provenance="momentum_pairing")
    with b.block("fermionic_permutation", tuple(p), label=spec):
        if spec == "kx_negate":
            b.embed(_negate_circuit(L, "x"), list(range(n)))
        elif spec == "full_k_negate":
            b.embed(_negate_circuit(L, "x"), list(range(n)))
            b.embed(_negate_circuit(L, "y"), list(range(n)))
        else:
            half = L * L
            b.embed(synth_inverse_interleave(_spin_split(L), interleave_method), list(range(n)))
            down = list(range(half, n))
            b.embed(_negate_circuit(L, "x"), down)
            b.embed(_negate_circuit(L, "y"), down)
    return b.build(metadata={"kind": "momentum_pairing", "L": L, "spec": spec})
