"""Dynamic Jordan-Wigner compilation of fermionic permutations, FFFTs and SYK circuits."""

from __future__ import annotations

__version__ = "0.1.0"

from .ffft import build_ffft_1d, build_ffft_2d, catalysis_report  # noqa: E402
from .ir import Angle, CircuitBuilder, CompiledCircuit, cost_report, deserialize, serialize  # noqa: E402
from .jw import OrderingMap, PauliString, Permutation, jw_majorana  # noqa: E402
from .majorana import compile_majorana_permutation, verify_majorana_permutation  # noqa: E402
from .perm import compile_permutation  # noqa: E402
from .verify import verify_permutation_circuit  # noqa: E402

__all__ = [
    "__version__",
    "Angle",
    "CircuitBuilder",
    "CompiledCircuit",
    "OrderingMap",
    "PauliString",
    "Permutation",
    "build_ffft_1d",
    "build_ffft_2d",
    "catalysis_report",
    "compile_majorana_permutation",
    "compile_permutation",
    "cost_report",
    "deserialize",
    "jw_majorana",
    "serialize",
    "verify_majorana_permutation",
    "verify_permutation_circuit",
]
