"""Synthesis of fermionic permutation circuits.

A fermionic permutation ``F_p`` moves the mode on qubit ``q`` to qubit ``p(q)``
while fixing the abstract fermionic state.  It equals a diagonal CZ circuit on the
crossing pairs (``q < q'`` with ``p(q) > p(q')``) followed by a free relabel, so
every construction here is a way of applying that CZ circuit cheaply.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from .f2core import CzSpec, F2Matrix, F2RowVector, InfeasibleError, bits_of, min_weight_row_solve
from .ir import CircuitBuilder, CompiledCircuit
from .jw import OrderingMap, Permutation

__all__ = [
    "NotAnInterleaveError",
    "InterleavePerm",
    "InterleaveLayer",
    "StructuredPerm",
    "ModeMap",
    "AncillaRow",
    "cz_parity_matrix",
    "crossing_spec",
    "decompose_into_interleaves",
    "synth_cnot_cascade",
    "synth_interleave",
    "synth_interleave_layer",
    "synth_inverse_interleave",
    "algorithm_s2",
    "synth_via_ancilla_cz",
    "synth_reflection_1d",
    "synth_reflection_2d",
    "apply_deformation",
    "interleave_as_deformation",
    "synth_axis_swap",
    "synth_fswap_network",
    "synth_structured",
    "recognize_structured",
    "compile_permutation",
]


class NotAnInterleaveError(ValueError):
    """The permutation is not order preserving on both groups."""


def _perm(p) -> Permutation:
    return p if isinstance(p, Permutation) else Permutation(p)


# ---------------------------------------------------------------------------
# permutation structure


def crossing_spec(p: Permutation | Sequence[int]) -> CzSpec:
    """CZ pairs ``(q, q')`` with ``q < q'`` and ``p(q) > p(q')`` (positions before the move)."""
    p = _perm(p)
    n = p.n
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if p[i] > p[j]]
    return CzSpec.from_edges(n, edges)


def cz_parity_matrix(m0: OrderingMap, m1: OrderingMap) -> CzSpec:
    """CZ pairs between modes ``i, j`` with ``i`` in ``L0(j) symmetric-difference L1(j)``."""
    if m0.n != m1.n:
        raise ValueError(f"orderings act on {m0.n} and {m1.n} modes")
    n = m0.n
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            before0 = m0[i] < m0[j]
            before1 = m1[i] < m1[j]
            if before0 != before1:
                edges.append((i, j))
    return CzSpec.from_edges(n, edges)


@dataclass(frozen=True)
class InterleavePerm:
    """Permutation increasing on ``A = [0, split)`` and on ``B = [split, n)``."""

    p: Permutation
    split: int

    def __post_init__(self) -> None:
        p = _perm(self.p)
        object.__setattr__(self, "p", p)
        if not 0 <= self.split <= p.n:
            raise NotAnInterleaveError("split out of range")
        for lo, hi in ((0, self.split), (self.split, p.n)):
            for i in range(lo, hi - 1):
                if p[i] > p[i + 1]:
                    raise NotAnInterleaveError(f"{p} is not increasing on [{lo}, {hi})")

    @classmethod
    def detect(cls, p: Permutation | Sequence[int]) -> InterleavePerm | None:
        """The interleave structure of ``p`` if it has at most one descent."""
        p = _perm(p)
        descents = [i for i in range(p.n - 1) if p[i] > p[i + 1]]
        if len(descents) > 1:
            return None
        split = descents[0] + 1 if descents else p.n
        return cls(p, split)

    @property
    def n(self) -> int:
        return self.p.n

    @property
    def group_a(self) -> range:
        return range(self.split)

    @property
    def group_b(self) -> range:
        return range(self.split, self.n)

    def jmax(self, a: int) -> int | None:
        """Largest ``b`` in B with ``p(b) < p(a)``, or None."""
        best = None
        for b in self.group_b:
            if self.p[b] < self.p[a]:
                best = b
            else:
                break
        return best


@dataclass(frozen=True)
class InterleaveLayer:
    """Disjoint interleaves on contiguous blocks ``[start, stop)`` split at ``split``."""

    p: Permutation
    blocks: tuple[tuple[int, int, int], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", _perm(self.p))
        covered = set()
        for start, split, stop in self.blocks:
            if not start <= split <= stop:
                raise ValueError("bad block bounds")
            for q in range(start, stop):
                if not start <= self.p[q] < stop:
                    raise NotAnInterleaveError("layer moves a mode out of its block")
                covered.add(q)
            self.local(start, split, stop)
        for q in range(self.p.n):
            if q not in covered and self.p[q] != q:
                raise NotAnInterleaveError("mode outside every block is moved")

    def local(self, start: int, split: int, stop: int) -> InterleavePerm:
        return InterleavePerm(Permutation([self.p[q] - start for q in range(start, stop)]), split - start)

    def interleaves(self) -> list[tuple[int, InterleavePerm]]:
        """``(offset, local interleave)`` for every non-trivial block."""
        out = []
        for start, split, stop in self.blocks:
            ip = self.local(start, split, stop)
            if not ip.p.is_identity():
                out.append((start, ip))
        return out


def decompose_into_interleaves(p: Permutation | Sequence[int]) -> list[InterleaveLayer]:
    """Mergesort factorisation of ``p`` into at most ``ceil(log2 n)`` interleave layers.

    The layers are returned in application order, so ``p`` equals
    ``layers[-1].p @ ... @ layers[0].p``.  Identity layers are dropped.  Sizes that
    are not powers of two are padded with fixed modes that never move.
    """
    p = _perm(p)
    n = p.n
    if n <= 1:
        return []
    levels = max(1, math.ceil(math.log2(n)))
    size = 1 << levels
    q = list(p)
    top_down: list[InterleaveLayer] = []
    for lvl in range(levels):
        s_len = size >> lvl
        pbar = list(range(n))
        blocks = []
        for s in range(0, n, s_len):
            e = min(s + s_len, n)
            m = min(s + s_len // 2, e)
            for lo, hi in ((s, m), (m, e)):
                order = sorted(range(lo, hi), key=lambda i: q[i])
                for rank, i in enumerate(order):
                    pbar[i] = lo + rank
            blocks.append((s, m, e))
        inv = [0] * n
        for i, v in enumerate(pbar):
            inv[v] = i
        layer = [q[inv[k]] for k in range(n)]
        if any(layer[k] != k for k in range(n)):
            top_down.append(InterleaveLayer(Permutation(layer), tuple(blocks)))
        q = pbar
    return top_down[::-1]


@dataclass(frozen=True)
class StructuredPerm:
    """A permutation with a closed form and a dedicated construction.

    Kinds and parameters:
        ``reflect1d``: ``(n,)`` with ``p(i) = n - 1 - i``.
        ``reflect2d``: ``(L_r, L_c)`` moving ``(r, c)`` from ``r L_c + c`` to ``c L_r + r``.
        ``structured_interleave``: ``(n,)`` with ``n`` even, the perfect riffle,
            identical to ``reflect2d(2, n/2)``.
        ``axis_swap``: ``(dims, d)`` with ``dims[0]`` the fastest axis; swaps axes
            ``d`` and ``d - 1``.
    """

    kind: str
    params: tuple

    @classmethod
    def reflect1d(cls, n: int) -> StructuredPerm:
        return cls("reflect1d", (int(n),))

    @classmethod
    def reflect2d(cls, lr: int, lc: int) -> StructuredPerm:
        return cls("reflect2d", (int(lr), int(lc)))

    @classmethod
    def structured_interleave(cls, n: int) -> StructuredPerm:
        if n % 2:
            raise ValueError("structured interleave needs an even mode count")
        return cls("structured_interleave", (int(n),))

    @classmethod
    def axis_swap(cls, dims: Sequence[int], d: int) -> StructuredPerm:
        return cls("axis_swap", (tuple(int(x) for x in dims), int(d)))

    @property
    def n(self) -> int:
        if self.kind == "axis_swap":
            return math.prod(self.params[0])
        if self.kind == "reflect2d":
            return self.params[0] * self.params[1]
        return self.params[0]

    def permutation(self) -> Permutation:
        k = self.kind
        if k == "reflect1d":
            (n,) = self.params
            return Permutation([n - 1 - i for i in range(n)])
        if k == "reflect2d":
            lr, lc = self.params
            out = [0] * (lr * lc)
            for r in range(lr):
                for c in range(lc):
                    out[r * lc + c] = c * lr + r
            return Permutation(out)
        if k == "structured_interleave":
            (n,) = self.params
            return StructuredPerm.reflect2d(2, n // 2).permutation()
        if k == "axis_swap":
            dims, d = self.params
            return _axis_swap_perm(dims, d)
        raise ValueError(f"unknown structured kind {k!r}")


def _axis_swap_perm(dims: Sequence[int], d: int) -> Permutation:
    dims = list(dims)
    if not 1 <= d < len(dims):
        raise ValueError(f"axis {d} out of range for {len(dims)} dimensions")
    new_dims = list(dims)
    new_dims[d], new_dims[d - 1] = dims[d - 1], dims[d]
    n = math.prod(dims)
    out = [0] * n
    for pos in range(n):
        coords = []
        rest = pos
        for L in dims:
            coords.append(rest % L)
            rest //= L
        coords[d], coords[d - 1] = coords[d - 1], coords[d]
        tgt, stride = 0, 1
        for x, L in zip(coords, new_dims):
            tgt += x * stride
            stride *= L
        out[pos] = tgt
    return Permutation(out)


@dataclass(frozen=True)
class ModeMap:
    """Deformation map: output mode ``i`` follows base mode ``sigma[i]``.

    Base modes outside the image are deleted; several outputs on one base mode
    are duplicates and stay adjacent in their original order.
    """

    n_in: int
    sigma: tuple[int, ...]

    def __init__(self, n_in: int, sigma: Iterable[int]):
        object.__setattr__(self, "n_in", int(n_in))
        object.__setattr__(self, "sigma", tuple(int(s) for s in sigma))
        for s in self.sigma:
            if not 0 <= s < self.n_in:
                raise ValueError(f"sigma value {s} out of range for {self.n_in} base modes")
        for a, b in zip(self.sigma, self.sigma[1:]):
            if a > b:
                raise ValueError("sigma must be non-decreasing")

    @classmethod
    def identity(cls, n: int) -> ModeMap:
        return cls(n, range(n))

    @property
    def n_out(self) -> int:
        return len(self.sigma)

    def deformed(self, base: Permutation) -> Permutation:
        """The permutation ``p'`` induced on the output modes."""
        if base.n != self.n_in:
            raise ValueError("base permutation size does not match the mode map")
        keys = sorted(range(self.n_out), key=lambda i: (base[self.sigma[i]], i))
        out = [0] * self.n_out
        for rank, i in enumerate(keys):
            out[i] = rank
        return Permutation(out)


# ---------------------------------------------------------------------------
# CNOT cascades


def _forward_cascades(b: CircuitBuilder, chains: Sequence[Sequence[int]], mode: str) -> None:
    """Replace ``x`` by its prefix parities on each chain (all chains in parallel)."""
    chains = [list(c) for c in chains if len(c) >= 2]
    if mode == "serial" or all(len(c) == 2 for c in chains):
        for c in chains:
            for l in range(1, len(c)):
                b.cnot(c[l - 1], c[l])
        return
    if mode != "constant_depth":
        raise ValueError(f"unknown cascade mode {mode!r}")
    plans = []
    for c in chains:
        if len(c) == 2:
            plans.append((c, None))
            continue
        plans.append((c, [None] + b.ancillas(len(c) - 1)))
    for c, anc in plans:
        if anc is None:
            b.cnot(c[0], c[1])
            continue
        for l in range(1, len(c)):
            b.prep_x(anc[l])
    for c, anc in plans:
        if anc is None:
            continue
        for l in range(1, len(c)):
            b.cnot(anc[l], c[l])
    for c, anc in plans:
        if anc is None:
            continue
        b.cnot(c[0], c[1])
        for l in range(2, len(c)):
            b.cnot(anc[l - 1], c[l])
    for c, anc in plans:
        if anc is None:
            continue
        outs = [None] + [b.measure_z(c[l]) for l in range(1, len(c))]
        for l in range(1, len(c)):
            b.cond_pauli("X", anc[l], outs[1 : l + 1])
        for l in range(1, len(c)):
            b.reset(c[l])
        b.relabel([(c[l], anc[l]) for l in range(1, len(c))] + [(anc[l], c[l]) for l in range(1, len(c))])
    for c, anc in plans:
        if anc is not None:
            b.release(*anc[1:])


def _inverse_cascades(b: CircuitBuilder, chains: Sequence[Sequence[int]], mode: str) -> None:
    """Undo :func:`_forward_cascades`: replace prefix parities by the original bits."""
    chains = [list(c) for c in chains if len(c) >= 2]
    if mode == "serial" or all(len(c) == 2 for c in chains):
        for c in chains:
            for l in range(len(c) - 1, 0, -1):
                b.cnot(c[l - 1], c[l])
        return
    if mode != "constant_depth":
        raise ValueError(f"unknown cascade mode {mode!r}")
    plans = []
    for c in chains:
        plans.append((c, None if len(c) == 2 else b.ancillas(len(c) - 1)))
    for c, anc in plans:
        if anc is None:
            b.cnot(c[0], c[1])
            continue
        for l in range(len(c) - 1):
            b.cnot(c[l], anc[l])
    for c, anc in plans:
        if anc is None:
            continue
        for l in range(1, len(c)):
            b.cnot(anc[l - 1], c[l])
    for c, anc in plans:
        if anc is None:
            continue
        outs = [b.measure_x(a) for a in anc]
        for m in range(len(c) - 1):
            b.cond_pauli("Z", c[m], outs[m:])
        for a in anc:
            b.reset(a)
        b.release(*anc)


def synth_cnot_cascade(
    targets: Sequence[int],
    mode: str = "serial",
    inverse: bool = False,
    n_system: int | None = None,
) -> CompiledCircuit:
    """The CNOT chain ``t0 -> t1 -> ... -> t_{k-1}`` (prefix parities) or its inverse.

    ``constant_depth`` uses one ancilla per CNOT, two CNOT layers, one measurement
    layer and parity-conditioned Pauli corrections.
    """
    targets = list(targets)
    if len(targets) < 2:
        raise ValueError("a cascade needs at least two targets")
    if len(set(targets)) != len(targets):
        raise ValueError("cascade targets repeat")
    n = n_system if n_system is not None else max(targets) + 1
    b = CircuitBuilder(n, provenance="cascade")
    if inverse:
        _inverse_cascades(b, [targets], mode)
    else:
        _forward_cascades(b, [targets], mode)
    return b.build(metadata={"kind": "cnot_cascade", "mode": mode, "inverse": inverse})


# ---------------------------------------------------------------------------
# ancilla-CZ construction


@dataclass(frozen=True)
class AncillaRow:
    """One ancilla of the ancilla-CZ construction.

    Attributes:
        pairs: System wires that receive a CZ with this ancilla.
        sources: System wires (``("s", w)``) and earlier rows (``("r", k)``) XORed in.
        vector: The parity the ancilla holds, as a mask over system wires.
    """

    pairs: tuple[int, ...]
    sources: tuple[tuple[str, int], ...]
    vector: int


def _emit_ancilla_cz(b: CircuitBuilder, rows: Sequence[AncillaRow], wires: Sequence[int] | None = None) -> None:
    """Compute every row into an ancilla, apply the CZ layer and uncompute by measurement."""
    rows = [r for r in rows if r.vector and r.pairs]
    if not rows:
        return
    wmap = (lambda w: w) if wires is None else (lambda w: wires[w])
    anc = b.ancillas(len(rows))
    with b.provenance("cnot"):
        for k, r in enumerate(rows):
            for kind, idx in r.sources:
                src = wmap(idx) if kind == "s" else anc[idx]
                b.cnot(src, anc[k])
    with b.provenance("cz"):
        for k, r in enumerate(rows):
            for w in r.pairs:
                b.cz(wmap(w), anc[k])
    with b.provenance("uncompute"):
        outs = [b.measure_x(a) for a in anc]
        corr: dict[int, list[int]] = {}
        for k, r in enumerate(rows):
            for w in bits_of(r.vector):
                corr.setdefault(w, []).append(outs[k])
        for w in sorted(corr):
            b.cond_pauli("Z", wmap(w), corr[w])
        for a in anc:
            b.reset(a)
    b.release(*anc)


def _check_rows(rows: Sequence[AncillaRow]) -> None:
    for k, r in enumerate(rows):
        acc = 0
        for kind, idx in r.sources:
            if kind == "s":
                acc ^= 1 << idx
            else:
                if idx >= k:
                    raise ValueError("row sources must precede the row")
                acc ^= rows[idx].vector
        if acc != r.vector:
            raise AssertionError(f"row {k} sources do not produce its vector")


def algorithm_s2(targets: Sequence[int], n: int, exact_threshold: int = 20) -> list[tuple[tuple[str, int], ...]]:
    """Iterative CNOT decomposition.

    Each target parity (mask over ``n`` system bits) is written as a minimum-weight
    XOR of system bits and previously computed targets.  Returns the source list
    of every target; the total CNOT count is the total source count.
    """
    avail_rows: list[int] = [1 << i for i in range(n)]
    labels: list[tuple[str, int]] = [("s", i) for i in range(n)]
    out = []
    for k, t in enumerate(targets):
        if t == 0:
            out.append(())
            avail_rows.append(0)
            labels.append(("r", k))
            continue
        pc = F2Matrix.from_rows(avail_rows, n)
        try:
            x = min_weight_row_solve(pc, F2RowVector(n, t), exact_threshold=exact_threshold)
        except InfeasibleError as exc:
            raise InfeasibleError(f"target row {k} is unreachable") from exc
        out.append(tuple(labels[i] for i in bits_of(x.bits)))
        avail_rows.append(t)
        labels.append(("r", k))
    return out


def synth_via_ancilla_cz(
    b: F2Matrix,
    relevant_columns: Iterable[int] | None = None,
    exact_threshold: int = 20,
) -> CompiledCircuit:
    """Diagonal circuit with phase ``(-1)^(x^T B x)`` through ancillas.

    Ancilla ``i`` is loaded with ``(B x)_i`` by the CNOTs found by
    :func:`algorithm_s2`, receives ``CZ(i, ancilla)`` and is measured in the X basis
    with Z feedforward.  ``relevant_columns`` restricts which rows of ``B`` are
    synthesised; every other row must be zero.
    """
    if b.rows != b.cols:
        raise ValueError("B must be square")
    n = b.rows
    rel = set(range(n)) if relevant_columns is None else set(relevant_columns)
    for i in range(n):
        if i not in rel and b.data[i]:
            raise ValueError(f"row {i} of B is non-zero but not relevant")
    order = [i for i in range(n) if i in rel and b.data[i]]
    sources = algorithm_s2([b.data[i] for i in order], n, exact_threshold)
    rows = [AncillaRow((i,), src, b.data[i]) for i, src in zip(order, sources)]
    _check_rows(rows)
    bld = CircuitBuilder(n, provenance="ancilla_cz")
    _emit_ancilla_cz(bld, rows)
    return bld.build(metadata={"kind": "ancilla_cz"})


# ---------------------------------------------------------------------------
# interleaves


def _interleave_phase_cascade(b: CircuitBuilder, ip: InterleavePerm, wires: Sequence[int], mode: str) -> None:
    p = ip.p
    groups: dict[int, list[int]] = {}
    for a in ip.group_a:
        j = ip.jmax(a)
        if j is not None:
            groups.setdefault(j, []).append(a)
    if not groups:
        return
    big_j = max(groups)
    chains = [[wires[q] for q in range(ip.split, big_j + 1)]]
    chains += [[wires[a] for a in grp] for grp in groups.values() if len(grp) >= 2]
    with b.provenance("cascade"):
        _forward_cascades(b, chains, mode)
    fwd = {wires[q]: wires[p[q]] for q in range(p.n)}
    b.relabel(fwd)
    with b.provenance("cz"):
        for j, grp in sorted(groups.items()):
            b.cz(wires[p[grp[-1]]], wires[p[j]])
    b.relabel({v: k for k, v in fwd.items()})
    with b.provenance("cascade_inverse"):
        _inverse_cascades(b, chains, mode)


def _nested_rows(ip: InterleavePerm) -> list[AncillaRow]:
    """Rows for the ancilla-CZ interleave, built on the smaller group."""
    p = ip.p
    a_grp, b_grp = list(ip.group_a), list(ip.group_b)
    if len(b_grp) <= len(a_grp):
        # rows on B, processed from the last B mode; sets are suffixes of A
        keys = b_grp[::-1]
        sets = [[a for a in a_grp if p[a] > p[j]] for j in keys]
    else:
        # rows on A from the first A mode; sets are prefixes of B
        keys = a_grp
        sets = [[j for j in b_grp if p[j] < p[a]] for a in keys]
    rows: list[AncillaRow] = []
    prev: set[int] = set()
    for key, s in zip(keys, sets):
        if not s:
            continue
        new = [w for w in s if w not in prev]
        vec = 0
        for w in s:
            vec |= 1 << w
        if not new and rows:
            last = rows[-1]
            rows[-1] = AncillaRow(last.pairs + (key,), last.sources, last.vector)
            continue
        src = []
        if rows:
            src.append(("r", len(rows) - 1))
        src += [("s", w) for w in new]
        rows.append(AncillaRow((key,), tuple(src), vec))
        prev = set(s)
    _check_rows(rows)
    return rows


def _interleave_phase(b: CircuitBuilder, ip: InterleavePerm, wires: Sequence[int], method: str, mode: str) -> None:
    if method == "cascade":
        _interleave_phase_cascade(b, ip, wires, mode)
    elif method == "ancilla_cz":
        _emit_ancilla_cz(b, _nested_rows(ip), wires)
    else:
        raise ValueError(f"unknown interleave method {method!r}")


def synth_interleave(
    ip: InterleavePerm | Permutation | Sequence[int],
    method: str = "cascade",
    cascade_mode: str = "constant_depth",
) -> CompiledCircuit:
    """Circuit for an interleave.

    ``cascade`` follows the construction with prefix-parity cascades on ``B`` and on
    every group ``A_j`` sharing the same ``j_max``, a relabel, one CZ per group, the
    inverse relabel, inverse cascades and the final relabel.  ``ancilla_cz`` loads
    nested parities into ancillas instead, using at most ``|A| + |B| - 1`` CNOTs and
    ``min(|A|, |B|)`` CZs.
    """
    if not isinstance(ip, InterleavePerm):
        det = InterleavePerm.detect(ip)
        if det is None:
            raise NotAnInterleaveError(f"{_perm(ip)} is not an interleave")
        ip = det
    n = ip.n
    b = CircuitBuilder(n, provenance=f"interleave[{method}]")
    with b.block("fermionic_permutation", tuple(ip.p), label="interleave"):
        if not ip.p.is_identity():
            _interleave_phase(b, ip, list(range(n)), method, cascade_mode)
            b.relabel({q: ip.p[q] for q in range(n)})
    return b.build(metadata={"kind": "interleave", "method": method, "cascade_mode": cascade_mode, "split": ip.split})


def synth_inverse_interleave(
    q: Permutation | Sequence[int],
    method: str = "cascade",
    cascade_mode: str = "constant_depth",
) -> CompiledCircuit:
    """Circuit for ``q`` whose inverse is an interleave (the outputs form two runs).

    The modes are moved first and the crossing phase is applied afterwards on the
    output positions, where it is the phase of the interleave ``q^-1``.
    """
    q = _perm(q)
    inv = q.inverse()
    ip = InterleavePerm.detect(inv)
    if ip is None:
        raise NotAnInterleaveError(f"the inverse of {q} is not an interleave")
    n = q.n
    b = CircuitBuilder(n, provenance=f"inverse_interleave[{method}]")
    with b.block("fermionic_permutation", tuple(q), label="inverse_interleave"):
        if not q.is_identity():
            b.relabel({i: q[i] for i in range(n)})
            _interleave_phase(b, ip, list(range(n)), method, cascade_mode)
    return b.build(metadata={"kind": "inverse_interleave", "method": method, "cascade_mode": cascade_mode})


def synth_interleave_layer(
    layer: InterleaveLayer,
    method: str = "cascade",
    cascade_mode: str = "constant_depth",
) -> CompiledCircuit:
    """All block interleaves of a layer in parallel on disjoint ancillas."""
    n = layer.p.n
    b = CircuitBuilder(n, provenance="interleave_layer")
    held: list[int] = []
    with b.block("fermionic_permutation", tuple(layer.p), label="interleave_layer"):
        for start, ip in layer.interleaves():
            sub = synth_interleave(ip, method, cascade_mode)
            held += b.embed(sub, list(range(start, start + ip.n)), release=False)
    if held:
        b.release(*held)
    return b.build(metadata={"kind": "interleave_layer", "method": method, "cascade_mode": cascade_mode})


# ---------------------------------------------------------------------------
# reflections


def _reflect1d_rows(n: int, exact_threshold: int = 20) -> list[AncillaRow]:
    targets = [(1 << i) - 1 for i in range(1, n)]
    sources = algorithm_s2(targets, n, exact_threshold)
    rows = [AncillaRow((i,), src, t) for i, t, src in zip(range(1, n), targets, sources)]
    _check_rows(rows)
    return rows


def _reflect2d_rows(lr: int, lc: int) -> list[AncillaRow]:
    """Explicit rows for ``B = L (x) L`` in the ordering ``o(r, c) = r L_c + (L_c - 1 - c)``."""

    def wire(x: int, y: int) -> int:
        return x * lc + (lc - 1 - y)

    rows: list[AncillaRow] = []
    index: dict[tuple[int, int], int] = {}
    vec: dict[tuple[int, int], int] = {}
    for x in range(lr):
        for y in range(lc):
            if x == 0 or y == 0:
                vec[(x, y)] = 0
                continue
            v = 1 << wire(x - 1, y - 1)
            src: list[tuple[str, int]] = []
            for nb in ((x - 1, y), (x, y - 1), (x - 1, y - 1)):
                if vec[nb]:
                    src.append(("r", index[nb]))
                    v ^= vec[nb]
            src.append(("s", wire(x - 1, y - 1)))
            vec[(x, y)] = v
            index[(x, y)] = len(rows)
            rows.append(AncillaRow((wire(x, y),), tuple(src), v))
    _check_rows(rows)
    return rows


def synth_reflection_1d(n: int, exact_threshold: int = 20) -> CompiledCircuit:
    """Order reversal ``p(i) = n - 1 - i`` with ``2n - 3`` CNOTs for ``n >= 2``."""
    if n < 1:
        raise ValueError("n must be positive")
    b = CircuitBuilder(n, provenance="reflect1d")
    p = StructuredPerm.reflect1d(n).permutation()
    with b.block("fermionic_permutation", tuple(p), label="reflect1d"):
        if n >= 2:
            _emit_ancilla_cz(b, _reflect1d_rows(n, exact_threshold))
            b.relabel({q: p[q] for q in range(n)})
    return b.build(metadata={"kind": "reflect1d", "n": n})


def synth_reflection_2d(lr: int, lc: int) -> CompiledCircuit:
    """Row-major to column-major reordering with ``(2 L_r - 3)(2 L_c - 3)`` CNOTs."""
    if lr < 2 or lc < 2:
        raise ValueError(f"2D reflection needs both sides >= 2, got {lr}x{lc}")
    n = lr * lc
    p = StructuredPerm.reflect2d(lr, lc).permutation()
    b = CircuitBuilder(n, provenance="reflect2d")
    with b.block("fermionic_permutation", tuple(p), label="reflect2d"):
        _emit_ancilla_cz(b, _reflect2d_rows(lr, lc))
        b.relabel({q: p[q] for q in range(n)})
    return b.build(metadata={"kind": "reflect2d", "L_r": lr, "L_c": lc})


# ---------------------------------------------------------------------------
# deformations


def _structured_phase(b: CircuitBuilder, base: StructuredPerm, wires: Sequence[int]) -> None:
    """Emit the diagonal part of a structured permutation on ``wires``."""
    k = base.kind
    if k == "reflect1d":
        if base.n >= 2:
            _emit_ancilla_cz(b, _reflect1d_rows(base.n), wires)
    elif k in ("reflect2d", "structured_interleave"):
        lr, lc = base.params if k == "reflect2d" else (2, base.n // 2)
        if lr >= 2 and lc >= 2:
            _emit_ancilla_cz(b, _reflect2d_rows(lr, lc), wires)
    elif k == "axis_swap":
        sub = synth_axis_swap(*base.params)
        inner = _strip_final_relabel(sub)
        b.embed(inner, list(wires))
    else:
        raise ValueError(f"unknown structured kind {k!r}")


def _strip_final_relabel(c: CompiledCircuit) -> CompiledCircuit:
    from dataclasses import replace

    ins = list(c.instructions)
    while ins and ins[-1].op == "RELABEL":
        ins.pop()
    return replace(c, instructions=tuple(ins), blocks=())


def _deformation_phase(b: CircuitBuilder, base: StructuredPerm, mm: ModeMap, wires: Sequence[int]) -> list[int]:
    """Emit the deformation's diagonal part; returns the block ancillas (already reset)."""
    block = b.ancillas(mm.n_in)
    with b.provenance("deform_in"):
        for i, s in enumerate(mm.sigma):
            b.cnot(wires[i], block[s])
    _structured_phase(b, base, block)
    with b.provenance("deform_out"):
        used = sorted(set(mm.sigma))
        outs = {s: b.measure_x(block[s]) for s in used}
        for i, s in enumerate(mm.sigma):
            b.cond_pauli("Z", wires[i], [outs[s]])
        for s in used:
            b.reset(block[s])
    return block


def apply_deformation(base: StructuredPerm, mode_map: ModeMap) -> CompiledCircuit:
    """Circuit for the deformed permutation ``p'`` of ``mode_map.n_out`` modes.

    The system loads block parities ``z_k`` (XOR of the outputs mapped to base mode
    ``k``) into an ancilla block, the undeformed diagonal circuit runs on the block
    and the block is measured out with Z feedforward.
    """
    if mode_map.n_in != base.n:
        raise ValueError(f"mode map expects {mode_map.n_in} base modes, base has {base.n}")
    n = mode_map.n_out
    p = mode_map.deformed(base.permutation())
    b = CircuitBuilder(n, provenance=f"deformation[{base.kind}]")
    with b.block("fermionic_permutation", tuple(p), label="deformation"):
        if not p.is_identity():
            block = _deformation_phase(b, base, mode_map, list(range(n)))
            b.release(*block)
            b.relabel({q: p[q] for q in range(n)})
    return b.build(metadata={"kind": "deformation", "base": base.kind, "sigma": list(mode_map.sigma)})


def interleave_as_deformation(ip: InterleavePerm | Sequence[int]) -> tuple[StructuredPerm, ModeMap]:
    """Express an interleave as a deformation of the structured interleave.

    Maximal runs of A outputs and of B outputs collapse onto single base modes.
    A leading B run is preceded by a deleted A slot.
    """
    if not isinstance(ip, InterleavePerm):
        ip = InterleavePerm.detect(ip)
        if ip is None:
            raise NotAnInterleaveError("not an interleave")
    n, split, p = ip.n, ip.split, ip.p
    inv = p.inverse()
    pair = 0
    started = False
    last_side = None
    run_of: dict[int, int] = {}
    for pos in range(n):
        q = inv[pos]
        side = 0 if q < split else 1
        if not started:
            started = True
            pair = 0
        elif side != last_side and side == 0:
            pair += 1
        run_of[q] = pair
        last_side = side
    m = pair + 1
    sigma = [run_of[q] if q < split else m + run_of[q] for q in range(n)]
    return StructuredPerm.reflect2d(2, m), ModeMap(2 * m, sigma)


def synth_axis_swap(dims: Sequence[int], d: int) -> CompiledCircuit:
    """Swap the adjacent axes ``d`` and ``d - 1`` of a lattice (``dims[0]`` fastest).

    Every block of the outer axes is an independent 2D reflection whose modes are
    duplicated over the inner axes, realised as parallel deformations.
    """
    dims = [int(x) for x in dims]
    if not 1 <= d < len(dims):
        raise ValueError(f"axis {d} out of range for {len(dims)} dimensions")
    p = _axis_swap_perm(dims, d)
    n = p.n
    ld, lm = dims[d], dims[d - 1]
    inner = math.prod(dims[: d - 1])
    blk = ld * lm * inner
    if len(dims) == 2 and ld >= 2 and lm >= 2:
        return synth_reflection_2d(ld, lm)
    b = CircuitBuilder(n, provenance="axis_swap")
    held: list[int] = []
    with b.block("fermionic_permutation", tuple(p), label="axis_swap"):
        if ld >= 2 and lm >= 2:
            base = StructuredPerm.reflect2d(ld, lm)
            for start in range(0, n, blk):
                wires = list(range(start, start + blk))
                if inner == 1:
                    _emit_ancilla_cz(b, _reflect2d_rows(ld, lm), wires)
                else:
                    mm = ModeMap(ld * lm, [i // inner for i in range(blk)])
                    held += _deformation_phase(b, base, mm, wires)
            b.relabel({q: p[q] for q in range(n)})
    if held:
        b.release(*held)
    return b.build(metadata={"kind": "axis_swap", "dims": dims, "d": d})


# ---------------------------------------------------------------------------
# FSWAP baseline


def synth_fswap_network(p: Permutation | Sequence[int]) -> CompiledCircuit:
    """Odd-even transposition sort with one CZ + SWAP per crossing."""
    p = _perm(p)
    n = p.n
    arr = list(p)
    b = CircuitBuilder(n, provenance="fswap")
    with b.block("fermionic_permutation", tuple(p), label="fswap"):
        rnd = 0
        while any(arr[i] > arr[i + 1] for i in range(n - 1)):
            for i in range(rnd % 2, n - 1, 2):
                if arr[i] > arr[i + 1]:
                    b.cz(i, i + 1)
                    b.swap(i, i + 1)
                    arr[i], arr[i + 1] = arr[i + 1], arr[i]
            rnd += 1
    return b.build(metadata={"kind": "fswap"})


# ---------------------------------------------------------------------------
# front end


def recognize_structured(p: Permutation | Sequence[int]) -> StructuredPerm | None:
    """Exact closed-form match against the structured kinds."""
    p = _perm(p)
    n = p.n
    if n >= 2 and list(p) == list(StructuredPerm.reflect1d(n).permutation()):
        return StructuredPerm.reflect1d(n)
    for lr in range(2, n // 2 + 1):
        if n % lr:
            continue
        lc = n // lr
        if lc >= 2 and p[1] == lr and list(p) == list(StructuredPerm.reflect2d(lr, lc).permutation()):
            return StructuredPerm.reflect2d(lr, lc)
    return None


def synth_structured(sp: StructuredPerm) -> CompiledCircuit:
    k = sp.kind
    if k == "reflect1d":
        return synth_reflection_1d(sp.n)
    if k == "reflect2d":
        return synth_reflection_2d(*sp.params)
    if k == "structured_interleave":
        return synth_reflection_2d(2, sp.n // 2)
    if k == "axis_swap":
        return synth_axis_swap(*sp.params)
    raise ValueError(f"unknown structured kind {k!r}")


def compile_permutation(
    p: Permutation | Sequence[int],
    strategy: str = "auto",
    interleave_method: str = "cascade",
    cascade_mode: str = "constant_depth",
) -> CompiledCircuit:
    """Compile ``F_p`` with the chosen strategy.

    Args:
        p: Target permutation (mode on qubit ``q`` ends on qubit ``p(q)``).
        strategy: ``auto`` tries structured kinds, then a single interleave or
            inverse interleave, then mergesort; ``mergesort``, ``structured`` and
            ``fswap`` force one construction.
        interleave_method: ``cascade`` or ``ancilla_cz`` for interleave circuits.
        cascade_mode: ``constant_depth`` or ``serial`` CNOT cascades.
    """
    p = _perm(p)
    n = p.n
    md = {"perm": list(p), "strategy": strategy, "interleave_method": interleave_method, "cascade_mode": cascade_mode}
    if strategy not in ("auto", "mergesort", "structured", "fswap"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if p.is_identity():
        b = CircuitBuilder(n)
        with b.block("fermionic_permutation", tuple(p), label="identity"):
            pass
        return b.build(metadata={**md, "chosen": "identity"})
    if strategy == "fswap":
        return synth_fswap_network(p).with_metadata(**md, chosen="fswap")
    if strategy in ("auto", "structured"):
        sp = recognize_structured(p)
        if sp is not None:
            return synth_structured(sp).with_metadata(**md, chosen=sp.kind)
        if strategy == "structured":
            raise ValueError(f"{p} matches no structured kind")
        ip = InterleavePerm.detect(p)
        if ip is not None:
            return synth_interleave(ip, interleave_method, cascade_mode).with_metadata(**md, chosen="interleave")
        if InterleavePerm.detect(p.inverse()) is not None:
            c = synth_inverse_interleave(p, interleave_method, cascade_mode)
            return c.with_metadata(**md, chosen="inverse_interleave")
    layers = decompose_into_interleaves(p)
    b = CircuitBuilder(n, provenance="mergesort")
    with b.block("fermionic_permutation", tuple(p), label="mergesort"):
        for layer in layers:
            b.embed(synth_interleave_layer(layer, interleave_method, cascade_mode), list(range(n)))
            b.next_layer()
    return b.build(metadata={**md, "chosen": "mergesort", "layers": len(layers)})
