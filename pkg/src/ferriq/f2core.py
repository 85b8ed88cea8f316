"""Bit-packed linear algebra over GF(2) and the quadratic-form calculus of CZ circuits.

Rows of an :class:`F2Matrix` are stored as Python integers: bit ``j`` of row ``i``
is the entry ``(i, j)``.  Arbitrary-precision integers give word-parallel XOR for
free and keep every type immutable and hashable.

A diagonal Clifford circuit made of CZ and Z gates acts on computational basis
states as ``|x> -> (-1)^{f(x)} |x>`` with the phase polynomial

    f(x) = sum_{i<j} pairs_ij x_i x_j + sum_i zmask_i x_i   (mod 2),

which is what :class:`CzSpec` stores.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DimensionError",
    "InfeasibleError",
    "SingularMatrixError",
    "F2Matrix",
    "F2RowVector",
    "CzSpec",
    "mat_mul",
    "kron",
    "lower_triangular_ones",
    "conjugate_cz",
    "min_weight_row_solve",
    "popcount",
    "bits_of",
]


class DimensionError(ValueError):
    """Operand shapes do not match."""


class InfeasibleError(ValueError):
    """A linear system over GF(2) has no solution."""


class SingularMatrixError(ValueError):
    """A matrix required to be invertible over GF(2) is singular."""


def popcount(v: int) -> int:
    return v.bit_count()


def bits_of(v: int) -> list[int]:
    """Indices of the set bits of ``v`` in increasing order."""
    out = []
    while v:
        low = v & -v
        out.append(low.bit_length() - 1)
        v ^= low
    return out


def _mask(n: int) -> int:
    return (1 << n) - 1


@dataclass(frozen=True)
class F2RowVector:
    """A bit vector of fixed length."""

    length: int
    bits: int = 0

    def __post_init__(self) -> None:
        if self.length < 0:
            raise ValueError("length must be non-negative")
        if self.bits >> self.length:
            raise ValueError("bits set beyond vector length")

    @classmethod
    def from_indices(cls, length: int, indices: Iterable[int]) -> F2RowVector:
        v = 0
        for i in indices:
            if not 0 <= i < length:
                raise IndexError(f"index {i} out of range for length {length}")
            v ^= 1 << i
        return cls(length, v)

    @classmethod
    def from_array(cls, arr: Sequence[int] | np.ndarray) -> F2RowVector:
        a = np.asarray(arr, dtype=np.int64) & 1
        v = 0
        for i in np.flatnonzero(a):
            v |= 1 << int(i)
        return cls(len(a), v)

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError(i)
        return (self.bits >> i) & 1

    def __xor__(self, other: F2RowVector) -> F2RowVector:
        if other.length != self.length:
            raise DimensionError("vector lengths differ")
        return F2RowVector(self.length, self.bits ^ other.bits)

    @property
    def weight(self) -> int:
        return popcount(self.bits)

    def support(self) -> list[int]:
        return bits_of(self.bits)

    def to_array(self) -> np.ndarray:
        return np.array([(self.bits >> i) & 1 for i in range(self.length)], dtype=np.uint8)


@dataclass(frozen=True)
class F2Matrix:
    """Dense matrix over GF(2) with bit-packed rows.

    Attributes:
        rows: Number of rows.
        cols: Number of columns.
        data: One integer per row; bit ``j`` holds entry ``(i, j)``.
    """

    rows: int
    cols: int
    data: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.data) != self.rows:
            raise DimensionError("row data length does not match row count")
        m = _mask(self.cols)
        for r in self.data:
            if r < 0 or r & ~m:
                raise ValueError("row has bits outside the column range")

    # construction -------------------------------------------------------
    @classmethod
    def zeros(cls, rows: int, cols: int) -> F2Matrix:
        return cls(rows, cols, (0,) * rows)

    @classmethod
    def identity(cls, n: int) -> F2Matrix:
        return cls(n, n, tuple(1 << i for i in range(n)))

    @classmethod
    def from_rows(cls, rows: Sequence[int], cols: int) -> F2Matrix:
        return cls(len(rows), cols, tuple(int(r) for r in rows))

    @classmethod
    def from_dense(cls, arr: Sequence[Sequence[int]] | np.ndarray) -> F2Matrix:
        a = np.asarray(arr, dtype=np.int64)
        if a.ndim != 2:
            raise DimensionError("expected a 2-D array")
        a = a & 1
        weights = 1 << np.arange(a.shape[1], dtype=object) if a.shape[1] else np.zeros(0, dtype=object)
        data = tuple(int(np.dot(row.astype(object), weights)) if a.shape[1] else 0 for row in a)
        return cls(a.shape[0], a.shape[1], data)

    # access ---------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def get(self, i: int, j: int) -> int:
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError((i, j))
        return (self.data[i] >> j) & 1

    def row(self, i: int) -> F2RowVector:
        return F2RowVector(self.cols, self.data[i])

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols), dtype=np.uint8)
        for i, r in enumerate(self.data):
            for j in bits_of(r):
                out[i, j] = 1
        return out

    def transpose(self) -> F2Matrix:
        cols = [0] * self.cols
        for i, r in enumerate(self.data):
            for j in bits_of(r):
                cols[j] |= 1 << i
        return F2Matrix(self.cols, self.rows, tuple(cols))

    @property
    def T(self) -> F2Matrix:
        return self.transpose()

    def diagonal(self) -> int:
        """Diagonal as a bit mask."""
        d = 0
        for i in range(min(self.rows, self.cols)):
            d |= ((self.data[i] >> i) & 1) << i
        return d

    def __add__(self, other: F2Matrix) -> F2Matrix:
        if self.shape != other.shape:
            raise DimensionError(f"shape {self.shape} vs {other.shape}")
        return F2Matrix(self.rows, self.cols, tuple(a ^ b for a, b in zip(self.data, other.data)))

    __xor__ = __add__

    def __matmul__(self, other: F2Matrix) -> F2Matrix:
        return mat_mul(self, other)

    def apply(self, x: int) -> int:
        """Return ``M x`` for a column vector packed as an integer."""
        y = 0
        for i, r in enumerate(self.data):
            y |= (popcount(r & x) & 1) << i
        return y

    def row_combination(self, x: int) -> int:
        """Return ``x^T M``: XOR of the rows selected by ``x``."""
        acc = 0
        for i in bits_of(x):
            acc ^= self.data[i]
        return acc

    def with_row_added(self, src: int, dst: int) -> F2Matrix:
        """Row ``src`` XORed into row ``dst`` (the action of CNOT ``src -> dst``)."""
        data = list(self.data)
        data[dst] ^= data[src]
        return F2Matrix(self.rows, self.cols, tuple(data))

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> F2Matrix:
        out = []
        for i in rows:
            r = self.data[i]
            v = 0
            for k, j in enumerate(cols):
                v |= ((r >> j) & 1) << k
            out.append(v)
        return F2Matrix(len(rows), len(cols), tuple(out))

    def rank(self) -> int:
        return len(_echelon(list(self.data))[0])

    def is_invertible(self) -> bool:
        return self.rows == self.cols and self.rank() == self.rows

    def inverse(self) -> F2Matrix:
        if self.rows != self.cols:
            raise DimensionError("only square matrices can be inverted")
        n = self.rows
        rows = [(self.data[i], 1 << i) for i in range(n)]
        for col in range(n):
            piv = next((k for k in range(col, n) if (rows[k][0] >> col) & 1), None)
            if piv is None:
                raise SingularMatrixError("matrix is singular over GF(2)")
            rows[col], rows[piv] = rows[piv], rows[col]
            pv, pa = rows[col]
            for k in range(n):
                if k != col and (rows[k][0] >> col) & 1:
                    rows[k] = (rows[k][0] ^ pv, rows[k][1] ^ pa)
        return F2Matrix(n, n, tuple(a for _, a in rows))

    def is_symmetric(self) -> bool:
        return self.rows == self.cols and self == self.transpose()

    def strict_upper(self) -> F2Matrix:
        return F2Matrix(self.rows, self.cols, tuple(r & ~_mask(i + 1) for i, r in enumerate(self.data)))

    def strict_lower(self) -> F2Matrix:
        return F2Matrix(self.rows, self.cols, tuple(r & _mask(i) for i, r in enumerate(self.data)))

    # serialization -------------------------------------------------------
    def to_json(self) -> dict:
        width = max(1, (self.cols + 3) // 4)
        return {
            "rows": self.rows,
            "cols": self.cols,
            "data": [format(r, f"0{width}x") for r in self.data],
        }

    @classmethod
    def from_json(cls, obj: dict) -> F2Matrix:
        try:
            rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed matrix JSON: {exc}") from exc
        return cls(rows, cols, tuple(int(h, 16) for h in data))


def _echelon(rows: list[int]) -> tuple[list[int], list[int]]:
    """Row-reduce; returns (pivot rows, pivot bit positions)."""
    pivots: list[int] = []
    bits: list[int] = []
    for r in rows:
        for p, b in zip(pivots, bits):
            if (r >> b) & 1:
                r ^= p
        if r:
            b = r.bit_length() - 1
            for k, p in enumerate(pivots):
                if (p >> b) & 1:
                    pivots[k] = p ^ r
            pivots.append(r)
            bits.append(b)
    return pivots, bits


def mat_mul(a: F2Matrix, b: F2Matrix) -> F2Matrix:
    """Matrix product over GF(2)."""
    if a.cols != b.rows:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    out = []
    for r in a.data:
        acc = 0
        for j in bits_of(r):
            acc ^= b.data[j]
        out.append(acc)
    return F2Matrix(a.rows, b.cols, tuple(out))


def kron(a: F2Matrix, b: F2Matrix) -> F2Matrix:
    """Kronecker product with the outer (``a``) index major."""
    out = []
    for ra in a.data:
        cols_a = bits_of(ra)
        for rb in b.data:
            v = 0
            for j in cols_a:
                v |= rb << (j * b.cols)
            out.append(v)
    return F2Matrix(a.rows * b.rows, a.cols * b.cols, tuple(out))


def lower_triangular_ones(n: int) -> F2Matrix:
    """The matrix with ``L_ij = 1`` exactly when ``i > j``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return F2Matrix(n, n, tuple(_mask(i) for i in range(n)))


@dataclass(frozen=True)
class CzSpec:
    """Canonical description of a circuit of CZ and Z gates.

    Attributes:
        n: Number of qubits.
        pairs: Symmetric matrix with zero diagonal; entry ``(i, j)`` means CZ(i, j).
        zmask: Bit mask of qubits receiving a Z gate.
    """

    n: int
    pairs: F2Matrix
    zmask: int = 0

    def __post_init__(self) -> None:
        if self.pairs.shape != (self.n, self.n):
            raise DimensionError("pairs matrix has wrong shape")
        if self.pairs.diagonal():
            raise ValueError("pairs must have zero diagonal")
        if not self.pairs.is_symmetric():
            raise ValueError("pairs must be symmetric")
        if self.zmask >> self.n:
            raise ValueError("zmask has bits beyond n")

    @classmethod
    def empty(cls, n: int) -> CzSpec:
        return cls(n, F2Matrix.zeros(n, n), 0)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], zs: Iterable[int] = ()) -> CzSpec:
        rows = [0] * n
        for i, j in edges:
            if i == j:
                raise ValueError("CZ needs two distinct qubits")
            rows[i] ^= 1 << j
            rows[j] ^= 1 << i
        z = 0
        for q in zs:
            z ^= 1 << q
        return cls(n, F2Matrix(n, n, tuple(rows)), z)

    @classmethod
    def from_quadratic(cls, b: F2Matrix) -> CzSpec:
        """Spec of the phase ``x^T B x`` for an arbitrary square ``B``."""
        if b.rows != b.cols:
            raise DimensionError("B must be square")
        s = b + b.transpose()
        return cls(b.rows, s, b.diagonal())

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n) for j in bits_of(self.pairs.data[i] >> (i + 1) << (i + 1))]

    @property
    def cz_count(self) -> int:
        return sum(popcount(r) for r in self.pairs.data) // 2

    def is_empty(self) -> bool:
        return self.zmask == 0 and not any(self.pairs.data)

    def compose(self, other: CzSpec) -> CzSpec:
        if other.n != self.n:
            raise DimensionError("qubit counts differ")
        return CzSpec(self.n, self.pairs + other.pairs, self.zmask ^ other.zmask)

    def phase(self, x: int) -> int:
        """Evaluate the phase polynomial at the basis state ``x`` (bit i = qubit i)."""
        acc = popcount(self.zmask & x)
        for i in bits_of(x):
            acc += popcount(self.pairs.data[i] & x & ~_mask(i + 1))
        return acc & 1

    def phase_table(self) -> np.ndarray:
        return np.array([self.phase(x) for x in range(1 << self.n)], dtype=np.uint8)


def conjugate_cz(a: CzSpec, p: F2Matrix) -> CzSpec:
    """Spec of the phase ``x -> f_A(P x)``.

    This is the CZ circuit obtained by applying the CNOT circuit with parity
    matrix ``P``, then ``C_Z(A)``, then undoing the CNOT circuit.
    """
    if p.shape != (a.n, a.n):
        raise DimensionError("parity matrix does not match the spec size")
    if not p.is_invertible():
        raise SingularMatrixError("parity matrix must be invertible")
    pt = p.transpose()
    pairs = mat_mul(mat_mul(pt, a.pairs), p)
    upper = mat_mul(mat_mul(pt, a.pairs.strict_upper()), p)
    # P^T S P has zero diagonal automatically; strip defensively.
    pairs = F2Matrix(a.n, a.n, tuple(r & ~(1 << i) for i, r in enumerate(pairs.data)))
    z = 0
    for k in range(a.n):
        z |= (popcount(pt.data[k] & a.zmask) & 1) << k
    return CzSpec(a.n, pairs, z ^ upper.diagonal())


# ---------------------------------------------------------------------------
# minimum-weight row solve (the integer program inside the iterative CNOT decomposition)


def _lex_key(v: int) -> tuple[int, ...]:
    return tuple(bits_of(v))


def _better(cand: int, best: int | None) -> bool:
    if best is None:
        return True
    wc, wb = popcount(cand), popcount(best)
    if wc != wb:
        return wc < wb
    return _lex_key(cand) < _lex_key(best)


def _low_weight_search(vals: list[int], idx: list[int], t: int, max_weight: int) -> int | None:
    """Smallest-weight, then lexicographically smallest, combination of up to
    ``max_weight`` (<= 4) entries of ``vals`` that XORs to ``t``.

    Returns the combination as a bit mask over the original indices ``idx``.
    """
    if t == 0:
        return 0
    r = len(vals)
    singles: dict[int, list[int]] = {}
    for k, v in enumerate(vals):
        singles.setdefault(v, []).append(k)
    if t in singles:
        return 1 << idx[singles[t][0]]
    if max_weight < 2:
        return None
    for i in range(r):
        for j in singles.get(t ^ vals[i], ()):
            if j > i:
                return (1 << idx[i]) | (1 << idx[j])
    if max_weight < 3:
        return None
    doubles: dict[int, list[tuple[int, int]]] = {}
    for i in range(r):
        vi = vals[i]
        for j in range(i + 1, r):
            doubles.setdefault(vi ^ vals[j], []).append((i, j))
    for i in range(r):
        for j, k in doubles.get(t ^ vals[i], ()):
            if j > i:
                return (1 << idx[i]) | (1 << idx[j]) | (1 << idx[k])
    if max_weight < 4:
        return None
    for i in range(r):
        for j in range(i + 1, r):
            for k, l in doubles.get(t ^ vals[i] ^ vals[j], ()):
                if k > j:
                    return (1 << idx[i]) | (1 << idx[j]) | (1 << idx[k]) | (1 << idx[l])
    return None


def min_weight_row_solve(
    pc: F2Matrix,
    b: F2RowVector,
    relevant_columns: Iterable[int] | None = None,
    exact_threshold: int = 20,
    low_weight_limit: int = 4,
) -> F2RowVector:
    """Find a minimum-weight ``x`` with ``x^T pc == b`` on the relevant columns.

    The search first tries every combination of at most ``low_weight_limit``
    rows with a meet-in-the-middle table, which is exact whenever the optimum is
    that small.  Otherwise the full solution coset is enumerated in Gray-code
    order when its dimension is at most ``exact_threshold``; beyond that a greedy
    descent over the nullspace basis improves the Gaussian particular solution.
    Ties are broken towards the lexicographically smallest support.

    Raises:
        DimensionError: ``b`` does not match ``pc.cols``.
        InfeasibleError: no combination of rows reaches ``b``.
    """
    if b.length != pc.cols:
        raise DimensionError(f"target length {b.length} != matrix columns {pc.cols}")
    if relevant_columns is None:
        cmask = _mask(pc.cols)
    else:
        cmask = 0
        for c in relevant_columns:
            if not 0 <= c < pc.cols:
                raise DimensionError(f"column {c} out of range")
            cmask |= 1 << c
    t = b.bits & cmask
    rows = [r & cmask for r in pc.data]
    idx = [i for i, r in enumerate(rows) if r]
    vals = [rows[i] for i in idx]

    # Gaussian elimination tracking combinations.
    piv_vec: list[int] = []
    piv_bit: list[int] = []
    piv_comb: list[int] = []
    null_basis: list[int] = []
    for i, v in zip(idx, vals):
        c = 1 << i
        for pv, pb, pcmb in zip(piv_vec, piv_bit, piv_comb):
            if (v >> pb) & 1:
                v ^= pv
                c ^= pcmb
        if v:
            piv_vec.append(v)
            piv_bit.append(v.bit_length() - 1)
            piv_comb.append(c)
        else:
            null_basis.append(c)
    resid, x0 = t, 0
    for pv, pb, pcmb in zip(piv_vec, piv_bit, piv_comb):
        if (resid >> pb) & 1:
            resid ^= pv
            x0 ^= pcmb
    if resid:
        raise InfeasibleError("target is not in the row space of the restricted matrix")

    found = _low_weight_search(vals, idx, t, low_weight_limit)
    if found is not None:
        return F2RowVector(pc.rows, found)

    best = x0
    k = len(null_basis)
    if k <= exact_threshold:
        x = x0
        for step in range(1, 1 << k):
            flip = (step & -step).bit_length() - 1
            x ^= null_basis[flip]
            if _better(x, best):
                best = x
        return F2RowVector(pc.rows, best)

    improved = True
    while improved:
        improved = False
        for v in null_basis:
            cand = best ^ v
            if popcount(cand) < popcount(best):
                best = cand
                improved = True
    return F2RowVector(pc.rows, best)
