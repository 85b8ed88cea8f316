"""Sparse and interleave SYK models: sampling, scheduling, Trotter compilation and spectra.

Majoranas are the unnormalised JW operators of the identity ordering, so
``chi_{2i} chi_{2i+1} chi_{2i+2} chi_{2i+3} = -Z_i Z_{i+1}`` and a coupling ``J`` on
an aligned quadruple becomes ``RZZ(-2 J dt)``.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .ir import Angle, CircuitBuilder, CompiledCircuit, cost_report
from .jw import OrderingMap, PauliString, Permutation, jw_majorana
from .majorana import compile_majorana_permutation

__all__ = [
    "SykTerm",
    "SykInstance",
    "coupling_variance",
    "sample_sparse_syk",
    "sample_complete_syk",
    "sample_interleave_syk",
    "random_interleave",
    "ColoredSchedule",
    "color_interactions",
    "interleave_schedule",
    "quartic_sign",
    "compile_trotter_cycle",
    "cycle_cost_per_mode",
    "syk_hamiltonian",
    "class_hamiltonians",
    "SffResult",
    "spectral_form_factor",
    "bootstrap_dip",
    "SykCapError",
]

SFF_CAP = 16


class SykCapError(ValueError):
    """A dense SYK computation exceeds the Majorana cap."""


@dataclass(frozen=True)
class SykTerm:
    """``J * chi_i chi_j chi_k chi_l`` with ``i < j < k < l``."""

    indices: tuple[int, int, int, int]
    coupling: float

    def __post_init__(self) -> None:
        idx = tuple(int(v) for v in self.indices)
        if len(idx) != 4 or list(idx) != sorted(set(idx)):
            raise ValueError(f"term indices must be four strictly increasing integers, got {self.indices}")
        if not math.isfinite(self.coupling):
            raise ValueError("coupling must be finite")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "coupling", float(self.coupling))


@dataclass(frozen=True)
class SykInstance:
    """A quartic Majorana Hamiltonian.

    Attributes:
        n_majorana: Number of Majoranas (even).
        terms: Quartic terms.
        d: Target number of terms per Majorana.
        seed: Seed used to draw the instance.
        kind: ``sparse``, ``complete`` or ``interleave``.
        steps: For interleave instances, the Majorana interleave of every round.
    """

    n_majorana: int
    terms: tuple[SykTerm, ...]
    d: int = 0
    seed: int | None = None
    kind: str = "sparse"
    steps: tuple[Permutation, ...] = field(default=())

    def __post_init__(self) -> None:
        if self.n_majorana % 2:
            raise ValueError("n_majorana must be even")
        for t in self.terms:
            if t.indices[-1] >= self.n_majorana:
                raise ValueError(f"term {t.indices} out of range")

    @property
    def n_modes(self) -> int:
        return self.n_majorana // 2

    def degrees(self) -> list[int]:
        deg = [0] * self.n_majorana
        for t in self.terms:
            for i in t.indices:
                deg[i] += 1
        return deg

    def couplings(self) -> np.ndarray:
        return np.array([t.coupling for t in self.terms])

    def to_dict(self) -> dict:
        return {
            "n_majorana": self.n_majorana,
            "d": self.d,
            "seed": self.seed,
            "kind": self.kind,
            "terms": [{"indices": list(t.indices), "J": t.coupling} for t in self.terms],
            "steps": [list(s) for s in self.steps],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> SykInstance:
        return cls(
            int(obj["n_majorana"]),
            tuple(SykTerm(tuple(t["indices"]), t["J"]) for t in obj["terms"]),
            int(obj.get("d", 0)),
            obj.get("seed"),
            obj.get("kind", "sparse"),
            tuple(Permutation(s) for s in obj.get("steps", [])),
        )


def coupling_variance(n_majorana: int, J: float = 1.0) -> float:
    """``6 J^2 / N^3``."""
    return 6.0 * J * J / n_majorana**3


def _draw(rng: np.random.Generator, n_majorana: int, J: float, size: int) -> np.ndarray:
    return rng.normal(0.0, math.sqrt(coupling_variance(n_majorana, J)), size)


def sample_sparse_syk(
    n_majorana: int, d: int, J: float = 1.0, seed: int | None = None, max_tries: int = 1000
) -> SykInstance:
    """``d`` random perfect matchings of the Majoranas into quadruples.

    When ``n_majorana`` is not a multiple of four each matching leaves
    ``n_majorana % 4`` random Majoranas out, so degrees differ from ``d`` by at most one.
    Quadruples are distinct; a matching repeating an earlier quadruple is redrawn.
    """
    if n_majorana < 4 or n_majorana % 2:
        raise ValueError("need an even number of at least four Majoranas")
    if d < 1:
        raise ValueError("d must be positive")
    if d > math.comb(n_majorana - 1, 3):
        raise ValueError(f"degree {d} infeasible for {n_majorana} Majoranas")
    rng = np.random.default_rng(seed)
    seen: set[tuple[int, ...]] = set()
    quads: list[tuple[int, ...]] = []
    for _ in range(d):
        for _ in range(max_tries):
            order = rng.permutation(n_majorana)
            cand = [tuple(sorted(int(v) for v in order[4 * t : 4 * t + 4])) for t in range(n_majorana // 4)]
            if not seen.intersection(cand):
                break
        else:
            raise ValueError(f"could not draw {d} distinct matchings")
        seen.update(cand)
        quads += cand
    js = _draw(rng, n_majorana, J, len(quads))
    terms = tuple(SykTerm(q, j) for q, j in zip(quads, js))
    return SykInstance(n_majorana, terms, d, seed, "sparse")


def sample_complete_syk(n_majorana: int, J: float = 1.0, seed: int | None = None) -> SykInstance:
    """All quadruples with independent Gaussian couplings."""
    rng = np.random.default_rng(seed)
    quads = list(itertools.combinations(range(n_majorana), 4))
    js = _draw(rng, n_majorana, J, len(quads))
    d = math.comb(n_majorana - 1, 3)
    return SykInstance(n_majorana, tuple(SykTerm(q, j) for q, j in zip(quads, js)), d, seed, "complete")


def random_interleave(n: int, rng: np.random.Generator) -> Permutation:
    """Uniform random riffle of the halves ``[0, n/2)`` and ``[n/2, n)``."""
    half = n // 2
    slots = np.sort(rng.choice(n, size=half, replace=False))
    rest = np.setdiff1d(np.arange(n), slots)
    return Permutation([int(v) for v in np.concatenate([slots, rest])])


def _aligned_quads(n_majorana: int) -> list[tuple[int, int, int, int]]:
    return [tuple(range(4 * t, 4 * t + 4)) for t in range(n_majorana // 4)]


def sample_interleave_syk(n_majorana: int, rounds: int, J: float = 1.0, seed: int | None = None) -> SykInstance:
    """Rounds of aligned quadruples seen through cumulative random interleaves.

    Round ``r`` applies a random Majorana interleave ``q_r`` and couples the
    Majoranas occupying slots ``4t .. 4t + 3`` under ``P_r = q_r ... q_1``.
    """
    if n_majorana < 4 or n_majorana % 2:
        raise ValueError("need an even number of at least four Majoranas")
    rng = np.random.default_rng(seed)
    place = Permutation.identity(n_majorana)
    steps, terms = [], []
    for _ in range(rounds):
        q = random_interleave(n_majorana, rng)
        place = q @ place
        steps.append(q)
        inv = place.inverse()
        for quad in _aligned_quads(n_majorana):
            labels = tuple(sorted(inv[s] for s in quad))
            terms.append(SykTerm(labels, float(_draw(rng, n_majorana, J, 1)[0])))
    return SykInstance(n_majorana, tuple(terms), rounds, seed, "interleave", tuple(steps))


# ---------------------------------------------------------------------------
# scheduling


@dataclass(frozen=True)
class ColoredSchedule:
    """Color classes with the slot placement used for each class.

    Attributes:
        instance: The scheduled instance.
        classes: Term indices of each class; terms in a class share no Majorana.
        placements: ``placements[a][label]`` is the slot of Majorana ``label`` while
            class ``a`` is applied; each term occupies an aligned block of four slots.
        sites: For every class, ``(term index, qubit i)`` with the term on slots ``2i .. 2i + 3``.
    """

    instance: SykInstance
    classes: tuple[tuple[int, ...], ...]
    placements: tuple[Permutation, ...]
    sites: tuple[tuple[tuple[int, int], ...], ...]

    def __post_init__(self) -> None:
        terms = self.instance.terms
        for cls_terms, place, sites in zip(self.classes, self.placements, self.sites):
            used: set[int] = set()
            for t in cls_terms:
                idx = set(terms[t].indices)
                if used & idx:
                    raise ValueError("terms in a class share a Majorana")
                used |= idx
            for t, i in sites:
                if sorted(place[m] for m in terms[t].indices) != list(range(2 * i, 2 * i + 4)):
                    raise ValueError("term is not placed on its site")

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def steps(self, close: bool = False) -> list[Permutation]:
        """Slot permutations applied before each class (and the closing one)."""
        n = self.instance.n_majorana
        prev = Permutation.identity(n)
        out = []
        for place in self.placements:
            out.append(place @ prev.inverse())
            prev = place
        if close:
            out.append(prev.inverse())
        return out


def _conflict_graph(inst: SykInstance) -> list[set[int]]:
    by_majorana: dict[int, list[int]] = {}
    for k, t in enumerate(inst.terms):
        for i in t.indices:
            by_majorana.setdefault(i, []).append(k)
    adj = [set() for _ in inst.terms]
    for ks in by_majorana.values():
        for a in ks:
            adj[a].update(b for b in ks if b != a)
    return adj


def _pack(n: int, prev: Permutation, quads: Sequence[tuple[int, ...]]) -> tuple[Permutation, list[int]]:
    """Placement putting each quadruple on an aligned block, others keeping their relative order."""
    blocks_order = sorted(range(len(quads)), key=lambda k: min(prev[m] for m in quads[k]))
    place = [0] * n
    qubit = [0] * len(quads)
    in_term = set()
    for b, k in enumerate(blocks_order):
        for j, m in enumerate(sorted(quads[k], key=lambda m: prev[m])):
            place[m] = 4 * b + j
            in_term.add(m)
        qubit[k] = 2 * b
    rest = sorted((m for m in range(n) if m not in in_term), key=lambda m: prev[m])
    for j, m in enumerate(rest):
        place[m] = 4 * len(quads) + j
    return Permutation(place), qubit


def color_interactions(inst: SykInstance) -> ColoredSchedule:
    """Greedy largest-degree-first coloring of the term conflict graph.

    Each class is placed by packing its terms onto aligned slot blocks in the order
    they appear under the previous placement, which keeps already aligned terms fixed.
    """
    adj = _conflict_graph(inst)
    order = sorted(range(len(inst.terms)), key=lambda k: (-len(adj[k]), k))
    color: dict[int, int] = {}
    for k in order:
        taken = {color[j] for j in adj[k] if j in color}
        c = 0
        while c in taken:
            c += 1
        color[k] = c
    n_colors = max(color.values(), default=-1) + 1
    classes = tuple(tuple(sorted(k for k in color if color[k] == c)) for c in range(n_colors))
    n = inst.n_majorana
    prev = Permutation.identity(n)
    placements, sites = [], []
    for cls_terms in classes:
        quads = [inst.terms[k].indices for k in cls_terms]
        place, qubits = _pack(n, prev, quads)
        placements.append(place)
        sites.append(tuple(zip(cls_terms, qubits)))
        prev = place
    return ColoredSchedule(inst, classes, tuple(placements), tuple(sites))


def interleave_schedule(inst: SykInstance) -> ColoredSchedule:
    """The natural schedule of an interleave instance: one class per round."""
    if inst.kind != "interleave" or not inst.steps:
        raise ValueError("instance carries no interleave steps")
    n = inst.n_majorana
    per_round = n // 4
    place = Permutation.identity(n)
    classes, placements, sites = [], [], []
    for r, q in enumerate(inst.steps):
        place = q @ place
        ks = tuple(range(r * per_round, (r + 1) * per_round))
        classes.append(ks)
        placements.append(place)
        sites.append(tuple((k, 2 * t) for t, k in enumerate(ks)))
    return ColoredSchedule(inst, tuple(classes), tuple(placements), tuple(sites))


# ---------------------------------------------------------------------------
# compilation


def quartic_sign(indices: Sequence[int], place: Permutation) -> int:
    """Sign ``s`` with ``chi_i chi_j chi_k chi_l = s * (product in slot order)``."""
    slots = [place[m] for m in indices]
    inv = sum(1 for a in range(4) for b in range(a + 1, 4) if slots[a] > slots[b])
    return -1 if inv % 2 else 1


def compile_trotter_cycle(
    sched: ColoredSchedule,
    dt: float,
    close: bool = True,
    strategy: str = "auto",
    interleave_method: str = "cascade",
    cascade_mode: str = "constant_depth",
    fix_signs: bool = True,
) -> CompiledCircuit:
    """First-order Trotter cycle ``prod_a exp(-i H_a dt)`` (class 0 first).

    Before class ``a`` the Majorana permutation ``P_a P_{a-1}^{-1}`` brings its terms
    onto aligned slots, where each term is a single ``RZZ``.  With ``close`` a final
    permutation restores the identity placement, so the circuit implements the
    cycle exactly; without it the cycle ends in the frame of the last placement.
    """
    inst = sched.instance
    n = inst.n_modes
    b = CircuitBuilder(n, provenance="syk_cycle")
    steps = sched.steps(close)
    for a, cls_terms in enumerate(sched.classes):
        step = steps[a]
        if not step.is_identity():
            with b.provenance(f"permute[{a}]"):
                b.embed(
                    compile_majorana_permutation(step, strategy, interleave_method, cascade_mode, fix_signs),
                    list(range(n)),
                )
        b.next_layer()
        with b.provenance(f"ising[{a}]"):
            for k, q in sched.sites[a]:
                t = inst.terms[k]
                s = quartic_sign(t.indices, sched.placements[a])
                b.rzz(q, q + 1, Angle.radians(-2.0 * s * t.coupling * dt))
        b.next_layer()
    if close and not steps[-1].is_identity():
        with b.provenance("restore"):
            b.embed(
                compile_majorana_permutation(steps[-1], strategy, interleave_method, cascade_mode, fix_signs),
                list(range(n)),
            )
    return b.build(
        metadata={
            "kind": "syk_trotter_cycle",
            "dt": dt,
            "classes": sched.n_classes,
            "close": close,
            "interleave_method": interleave_method,
        }
    )


def cycle_cost_per_mode(sched: ColoredSchedule, interleave_method: str = "ancilla_cz") -> float:
    """Clifford gates per Majorana of one open cycle (Pauli sign fixes are not Cliffords)."""
    c = compile_trotter_cycle(sched, 0.1, close=False, interleave_method=interleave_method, fix_signs=False)
    return cost_report(c).clifford_count / sched.instance.n_majorana


# ---------------------------------------------------------------------------
# dense spectra


def _pauli_sparse(p: PauliString) -> tuple[np.ndarray, np.ndarray]:
    """Column index and value of the single nonzero entry of every row of ``p``."""
    n = p.n
    rev = lambda mask: sum(1 << (n - 1 - q) for q in range(n) if (mask >> q) & 1)  # noqa: E731
    xm, zm = rev(p.x), rev(p.z)
    rows = np.arange(1 << n)
    cols = rows ^ xm
    # P|c> = i^(phase + #Y) (-1)^{c.z} |c ^ x>, so row r takes column r ^ x
    par = np.array([bin(int(c) & zm).count("1") & 1 for c in cols])
    ny = bin(p.x & p.z).count("1")
    vals = (1j ** ((p.phase + ny) % 4)) * (1 - 2 * par)
    return cols, vals


def _term_pauli(n_modes: int, indices: Sequence[int]) -> PauliString:
    m = OrderingMap.identity(n_modes)
    out = PauliString.identity(n_modes)
    for i in indices:
        out = out * jw_majorana(m, i)
    return out


def syk_hamiltonian(inst: SykInstance, cap: int = SFF_CAP) -> np.ndarray:
    """Dense JW matrix of ``sum J chi_i chi_j chi_k chi_l``."""
    if inst.n_majorana > cap:
        raise SykCapError(f"{inst.n_majorana} Majoranas exceed the dense cap of {cap}")
    n = inst.n_modes
    dim = 1 << n
    h = np.zeros((dim, dim), dtype=complex)
    rows = np.arange(dim)
    for t in inst.terms:
        cols, vals = _pauli_sparse(_term_pauli(n, t.indices))
        h[rows, cols] += t.coupling * vals
    return h


def class_hamiltonians(sched: ColoredSchedule, cap: int = SFF_CAP) -> list[np.ndarray]:
    inst = sched.instance
    return [
        syk_hamiltonian(SykInstance(inst.n_majorana, tuple(inst.terms[k] for k in ks)), cap)
        for ks in sched.classes
    ]


@dataclass(frozen=True)
class SffResult:
    """Disorder-averaged spectral form factor.

    Attributes:
        times: Time grid.
        mean: Mean SFF over instances.
        stderr: Standard error of the mean.
        samples: Per-instance curves, shape ``(instances, times)``.
    """

    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    samples: np.ndarray

    @property
    def dip(self) -> float:
        return float(self.mean.min())

    @property
    def dip_time(self) -> float:
        return float(self.times[int(np.argmin(self.mean))])

    def plateau(self, tail: float = 0.1) -> float:
        k = max(1, int(len(self.times) * tail))
        return float(self.mean[-k:].mean())

    def to_csv(self) -> str:
        lines = ["t,mean,stderr"]
        lines += [f"{t:.9g},{m:.12e},{s:.12e}" for t, m, s in zip(self.times, self.mean, self.stderr)]
        return "\n".join(lines) + "\n"


def spectral_form_factor(
    instances: Sequence[SykInstance],
    times: np.ndarray,
    beta: float = 0.0,
    normalize: bool = False,
    cap: int = SFF_CAP,
) -> SffResult:
    """``|Tr exp(-(beta + i t) H)|^2 / |Tr exp(-beta H)|^2`` averaged over instances.

    With ``normalize`` each Hamiltonian is rescaled to ``Tr H^2 / dim = 1`` so
    ensembles with different term counts share one time axis.
    """
    times = np.asarray(times, dtype=float)
    curves = []
    for inst in instances:
        h = syk_hamiltonian(inst, cap)
        e = np.linalg.eigvalsh(h)
        if normalize:
            scale = math.sqrt(float(np.mean(e**2)))
            if scale > 0:
                e = e / scale
        w = np.exp(-beta * (e - e.min()))
        z = np.exp(-1j * np.outer(times, e)) @ w
        curves.append(np.abs(z) ** 2 / w.sum() ** 2)
    samples = np.array(curves)
    mean = samples.mean(axis=0)
    k = len(curves)
    stderr = samples.std(axis=0, ddof=1) / math.sqrt(k) if k > 1 else np.zeros_like(mean)
    return SffResult(times, mean, stderr, samples)


def bootstrap_dip(res: SffResult, n_boot: int = 200, seed: int | None = 0) -> tuple[float, float]:
    """Dip of the mean curve and its bootstrap standard deviation over instances."""
    rng = np.random.default_rng(seed)
    k = res.samples.shape[0]
    dips = [res.samples[rng.integers(0, k, k)].mean(axis=0).min() for _ in range(n_boot)]
    return res.dip, float(np.std(dips))
