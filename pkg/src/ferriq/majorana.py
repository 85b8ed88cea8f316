"""Majorana permutations through a fermionic permutation on a doubled register.

System mode ``i`` is paired with ancilla ``i`` and the doubled register is read
in the order ``(s_0, a_0, s_1, a_1, ...)``.  The layer ``U_lms`` moves the odd
system Majorana of every pair onto the ancilla, after which the ``2N`` system
Majoranas are the even Majoranas of ``2N`` fermionic modes and any Majorana
permutation becomes an ordinary fermionic permutation.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from .ir import Angle, CircuitBuilder, CompiledCircuit, cost_report
from .jw import OrderingMap, PauliString, Permutation, jw_majorana
from .perm import compile_permutation
from .verify import ChannelTableau, VerificationReport, verify_majorana_images

__all__ = [
    "MajoranaPermutation",
    "u_lms_layer",
    "compile_majorana_permutation",
    "verify_majorana_permutation",
    "majorana_targets",
]

QUARTER = Angle.turns(1, 4)


@dataclass(frozen=True)
class MajoranaPermutation:
    """Bijection on the ``2N`` Majorana indices: ``chi_mu -> chi_{p(mu)}``."""

    p: Permutation

    def __init__(self, p: Permutation | Sequence[int]):
        p = p if isinstance(p, Permutation) else Permutation(p)
        if p.n % 2:
            raise ValueError("a Majorana permutation acts on an even number of indices")
        object.__setattr__(self, "p", p)

    @property
    def n_modes(self) -> int:
        return self.p.n // 2


def u_lms_layer(n: int, dagger: bool = False) -> CompiledCircuit:
    """``exp(-i pi/4 X_{2i} X_{2i+1})`` on every pair of a ``2N``-qubit register.

    Conjugation fixes ``chi_{4i}`` and sends ``chi_{4i+1}`` to ``chi_{4i+2}``.
    """
    b = CircuitBuilder(2 * n, provenance="u_lms")
    angle = -QUARTER if dagger else QUARTER
    for i in range(n):
        b.rxx(2 * i, 2 * i + 1, angle)
    return b.build(metadata={"kind": "u_lms", "dagger": dagger})


def majorana_targets(p: Permutation | Sequence[int]) -> tuple[list[PauliString], list[PauliString]]:
    """Source and target strings of a Majorana permutation in the identity ordering."""
    p = p if isinstance(p, Permutation) else Permutation(p)
    m = OrderingMap.identity(p.n // 2)
    return [jw_majorana(m, mu) for mu in range(p.n)], [jw_majorana(m, p[mu]) for mu in range(p.n)]


def _gadget(p: Permutation, inner: CompiledCircuit) -> CircuitBuilder:
    n = p.n // 2
    b = CircuitBuilder(n, provenance="majorana")
    anc = b.ancillas(n)
    doubled = []
    for i in range(n):
        doubled += [i, anc[i]]
    with b.provenance("u_lms"):
        b.embed(u_lms_layer(n), doubled)
    with b.provenance("f_p"):
        b.embed(inner, doubled)
    with b.provenance("u_lms_dagger"):
        b.embed(u_lms_layer(n, dagger=True), doubled)
    with b.provenance("readout"):
        outs = [b.measure_z(a) for a in anc]
        for j in range(1, n):
            b.cond_pauli("Z", j, outs[:j])
        for a, o in zip(anc, outs):
            b.cond_pauli("X", a, [o])
    b.release(*anc)
    return b


def compile_majorana_permutation(
    mp: MajoranaPermutation | Permutation | Sequence[int],
    strategy: str = "auto",
    interleave_method: str = "cascade",
    cascade_mode: str = "constant_depth",
    fix_signs: bool = True,
) -> CompiledCircuit:
    """Circuit for ``chi_mu -> chi_{p(mu)}`` on ``N`` modes using ``N`` extra ancillas.

    Steps: ``U_lms``, the fermionic permutation ``F_p`` on the doubled register,
    ``U_lms^dagger``, Z measurement of the ancillas and parity-conditioned Z
    corrections.  With ``fix_signs`` the Majorana signs left by the gadget are
    removed by a final Pauli string, so every Majorana maps with sign ``+1``.
    """
    if not isinstance(mp, MajoranaPermutation):
        mp = MajoranaPermutation(mp)
    p = mp.p
    n = mp.n_modes
    inner = compile_permutation(p, strategy, interleave_method, cascade_mode)
    b = _gadget(p, inner)
    inner_cost = cost_report(inner)
    md = {
        "kind": "majorana_permutation",
        "perm": list(p),
        "inner_clifford_count": inner_cost.clifford_count,
        "inner_strategy": inner.metadata.get("chosen"),
        "interleave_method": interleave_method,
        "cascade_mode": cascade_mode,
    }
    c = b.build(metadata=md)
    if not fix_signs or n == 0:
        return c
    tab = ChannelTableau(c)
    src, tgt = majorana_targets(p)
    flips = set()
    for mu, (s, t) in enumerate(zip(src, tgt)):
        img = tab.image(s)
        if img is None or img.outcome_dependent or not img.base.same_letters(t):
            raise AssertionError(f"Majorana gadget failed on chi_{mu}")
        if (img.base.phase - t.phase) & 3:
            flips.add(p[mu])
    if not flips:
        return c
    chosen = flips if len(flips) % 2 == 0 else set(range(2 * n)) - flips
    m = OrderingMap.identity(n)
    fix = PauliString.identity(n)
    for mu in sorted(chosen):
        fix = fix * jw_majorana(m, mu)
    b = _gadget(p, inner)
    with b.provenance("sign_fix"):
        for q, letter in enumerate(fix.letters()):
            if letter != "I":
                b.pauli(letter, q)
    return b.build(metadata=md)


def verify_majorana_permutation(
    c: CompiledCircuit, p: Permutation | Sequence[int], allow_sign: bool = False
) -> VerificationReport:
    """Check ``chi_mu -> chi_{p(mu)}`` for every Majorana of the system register."""
    src, tgt = majorana_targets(p)
    return verify_majorana_images(c, src, tgt, allow_sign=allow_sign)
