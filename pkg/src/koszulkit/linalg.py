"""Exact matrices, Smith normal form and module invariants.

Everything here is parameterized by a ring object (see `rings`) supplying
exact payload arithmetic.  The Smith normal form routine works over the
PID-class rings (integers, rationals, prime fields, integers localized at a
prime); it returns the full change-of-basis data so kernels, exact solves and
cokernel presentations all reduce to one verified diagonalization kernel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import RingMismatch, UnsupportedRing


class Matrix:
    """Immutable matrix of ring payloads with explicit shape.

    Shapes with zero rows or columns are legal everywhere; they show up as
    boundary differentials of bounded complexes.
    """

    __slots__ = ("ring", "nrows", "ncols", "rows")

    def __init__(self, ring, rows: Sequence[Sequence[object]], nrows: int | None = None,
                 ncols: int | None = None):
        rows = tuple(tuple(ring.canon(x) for x in row) for row in rows)
        if nrows is None:
            nrows = len(rows)
        if ncols is None:
            ncols = len(rows[0]) if rows else 0
        if len(rows) != nrows or any(len(r) != ncols for r in rows):
            raise ValueError(f"ragged matrix: expected {nrows}x{ncols}")
        self.ring = ring
        self.nrows = nrows
        self.ncols = ncols
        self.rows = rows

    # -- constructors -------------------------------------------------------

    @classmethod
    def zeros(cls, ring, nrows: int, ncols: int) -> "Matrix":
        z = ring.zero
        return cls(ring, [[z] * ncols for _ in range(nrows)], nrows, ncols)

    @classmethod
    def identity(cls, ring, n: int) -> "Matrix":
        z, o = ring.zero, ring.one
        return cls(ring, [[o if i == j else z for j in range(n)] for i in range(n)], n, n)

    @classmethod
    def from_int_rows(cls, ring, rows: Sequence[Sequence[int]], nrows: int | None = None,
                      ncols: int | None = None) -> "Matrix":
        return cls(ring, [[ring.from_int(x) for x in row] for row in rows], nrows, ncols)

    @classmethod
    def column(cls, ring, entries: Sequence[object]) -> "Matrix":
        return cls(ring, [[e] for e in entries], len(entries), 1)

    # -- basic structure ----------------------------------------------------

    def __eq__(self, other) -> bool:
        return (isinstance(other, Matrix) and self.ring == other.ring
                and self.nrows == other.nrows and self.ncols == other.ncols
                and self.rows == other.rows)

    def __hash__(self):
        return hash((self.nrows, self.ncols, self.rows))

    def __repr__(self):
        return f"Matrix({self.nrows}x{self.ncols}, {[list(r) for r in self.rows]})"

    def entry(self, i: int, j: int):
        return self.rows[i][j]

    def is_zero(self) -> bool:
        rz = self.ring.is_zero
        return all(rz(x) for row in self.rows for x in row)

    def transpose(self) -> "Matrix":
        return Matrix(self.ring, [[self.rows[i][j] for i in range(self.nrows)]
                                  for j in range(self.ncols)], self.ncols, self.nrows)

    def map_entries(self, fn, ring=None) -> "Matrix":
        ring = ring or self.ring
        return Matrix(ring, [[fn(x) for x in row] for row in self.rows],
                      self.nrows, self.ncols)

    def column_vector(self, j: int) -> tuple:
        return tuple(self.rows[i][j] for i in range(self.nrows))

    def submatrix(self, row_indices: Iterable[int], col_indices: Iterable[int]) -> "Matrix":
        ri, ci = list(row_indices), list(col_indices)
        return Matrix(self.ring, [[self.rows[i][j] for j in ci] for i in ri],
                      len(ri), len(ci))

    # -- arithmetic ---------------------------------------------------------

    def _check(self, other: "Matrix"):
        if self.ring != other.ring:
            raise RingMismatch(f"{self.ring} vs {other.ring}")

    def __add__(self, other: "Matrix") -> "Matrix":
        self._check(other)
        if (self.nrows, self.ncols) != (other.nrows, other.ncols):
            raise ValueError("shape mismatch in addition")
        add = self.ring.add
        return Matrix(self.ring, [[add(a, b) for a, b in zip(r1, r2)]
                                  for r1, r2 in zip(self.rows, other.rows)],
                      self.nrows, self.ncols)

    def __neg__(self) -> "Matrix":
        return self.map_entries(self.ring.neg)

    def __sub__(self, other: "Matrix") -> "Matrix":
        return self + (-other)

    def __matmul__(self, other: "Matrix") -> "Matrix":
        self._check(other)
        if self.ncols != other.nrows:
            raise ValueError(f"shape mismatch: {self.nrows}x{self.ncols} @ "
                             f"{other.nrows}x{other.ncols}")
        ring = self.ring
        add, mul, zero = ring.add, ring.mul, ring.zero
        out = []
        for i in range(self.nrows):
            row = []
            for j in range(other.ncols):
                acc = zero
                for k in range(self.ncols):
                    acc = add(acc, mul(self.rows[i][k], other.rows[k][j]))
                row.append(acc)
            out.append(row)
        return Matrix(ring, out, self.nrows, other.ncols)

    def scale(self, c) -> "Matrix":
        mul = self.ring.mul
        return self.map_entries(lambda x: mul(c, x))

    # -- block assembly -----------------------------------------------------

    @classmethod
    def hstack(cls, ring, blocks: Sequence["Matrix"], nrows: int) -> "Matrix":
        cols = sum(b.ncols for b in blocks)
        rows = []
        for i in range(nrows):
            row = []
            for b in blocks:
                if b.nrows != nrows:
                    raise ValueError("hstack row mismatch")
                row.extend(b.rows[i])
            rows.append(row)
        return cls(ring, rows, nrows, cols)

    @classmethod
    def vstack(cls, ring, blocks: Sequence["Matrix"], ncols: int) -> "Matrix":
        rows = []
        for b in blocks:
            if b.ncols != ncols:
                raise ValueError("vstack column mismatch")
            rows.extend(list(b.rows))
        return cls(ring, rows, len(rows), ncols)

    @classmethod
    def block(cls, ring, grid: Sequence[Sequence["Matrix"]], row_dims: Sequence[int],
              col_dims: Sequence[int]) -> "Matrix":
        stacked = []
        for bi, blocks in enumerate(grid):
            stacked.append(cls.hstack(ring, list(blocks), row_dims[bi]))
        return cls.vstack(ring, stacked, sum(col_dims))


# -- module invariants -------------------------------------------------------


class ModuleInvariant:
    """Isomorphism class of a finitely generated module over a PID-like ring.

    `torsion` is the divisor chain d_1 | d_2 | ... recorded as positive
    integers (the cyclic orders; over the localized ring these are the prime
    powers p^k).  `validity` is "exact" or "modulo I^N" for answers derived in
    a truncated completion.  Equality ignores the validity tag, matching the
    convention that invariants agree up to unit factors.
    """

    __slots__ = ("free_rank", "torsion", "validity")

    def __init__(self, free_rank: int, torsion: Sequence[int] = (), validity: str = "exact"):
        torsion = tuple(int(d) for d in torsion)
        if free_rank < 0:
            raise ValueError("negative free rank")
        for d in torsion:
            if d <= 1:
                raise ValueError(f"torsion divisor must exceed 1, got {d}")
        for a, b in zip(torsion, torsion[1:]):
            if b % a != 0:
                raise ValueError(f"torsion chain {torsion} violates divisibility")
        self.free_rank = free_rank
        self.torsion = torsion
        self.validity = validity

    def __eq__(self, other) -> bool:
        return (isinstance(other, ModuleInvariant)
                and self.free_rank == other.free_rank
                and self.torsion == other.torsion)

    def __hash__(self):
        return hash((self.free_rank, self.torsion))

    def is_zero(self) -> bool:
        return self.free_rank == 0 and not self.torsion

    def with_validity(self, validity: str) -> "ModuleInvariant":
        return ModuleInvariant(self.free_rank, self.torsion, validity)

    def cardinality(self) -> int | None:
        """Number of elements, or None for infinite modules."""
        if self.free_rank:
            return None
        out = 1
        for d in self.torsion:
            out *= d
        return out

    def describe(self) -> str:
        parts = []
        if self.free_rank == 1:
            parts.append("R")
        elif self.free_rank > 1:
            parts.append(f"R^{self.free_rank}")
        parts.extend(f"Z/{d}" for d in self.torsion)
        body = " + ".join(parts) if parts else "0"
        if self.validity != "exact":
            body += f" ({self.validity})"
        return body

    def __repr__(self):
        return f"ModuleInvariant({self.describe()!r})"

    def to_json(self) -> dict:
        out = {"free": self.free_rank, "torsion": [str(d) for d in self.torsion]}
        if self.validity != "exact":
            out["validity"] = self.validity
        return out

    @classmethod
    def from_json(cls, data: dict) -> "ModuleInvariant":
        return cls(data.get("free", 0), [int(t) for t in data.get("torsion", [])],
                   data.get("validity", "exact"))

    @classmethod
    def zero(cls, validity: str = "exact") -> "ModuleInvariant":
        return cls(0, (), validity)


def _factorize(n: int) -> dict[int, int]:
    n = abs(n)
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def merge_invariants(*invs: ModuleInvariant) -> ModuleInvariant:
    """Invariant of the direct sum, re-normalized into a divisor chain."""
    free = sum(v.free_rank for v in invs)
    primary: dict[int, list[int]] = {}
    for v in invs:
        for d in v.torsion:
            for p, e in _factorize(d).items():
                primary.setdefault(p, []).append(e)
    depth = max((len(es) for es in primary.values()), default=0)
    chain = []
    for slot in range(depth):
        d = 1
        for p, es in primary.items():
            es_sorted = sorted(es)
            # largest exponents go to the last divisor of the chain
            idx = len(es_sorted) - depth + slot
            if idx >= 0:
                d *= p ** es_sorted[idx]
        if d > 1:
            chain.append(d)
    validity = "exact"
    for v in invs:
        if v.validity != "exact":
            validity = v.validity
    return ModuleInvariant(free, chain, validity)


# -- Smith normal form -------------------------------------------------------


@dataclass
class SmithDecomposition:
    """U @ A @ V == D with U, V invertible and D a divisor-chain diagonal."""

    D: Matrix
    U: Matrix
    V: Matrix
    U_inv: Matrix
    V_inv: Matrix
    rank: int

    def diagonal(self) -> list:
        return [self.D.rows[i][i] for i in range(min(self.D.nrows, self.D.ncols))]


def smith_normal_form(A: Matrix) -> SmithDecomposition:
    """Diagonalize A over a PID-class ring, tracking all four transforms.

    Pivoting minimizes the ring's size measure (absolute value over the
    integers, p-adic valuation over the localized ring, zero/nonzero over
    fields); each elimination round either clears the pivot's row and column
    or strictly decreases the pivot size, so termination is the classical
    Euclidean argument.
    """
    ring = A.ring
    if not getattr(ring, "is_pid", False):
        raise UnsupportedRing(f"Smith normal form needs a PID-class ring, got {ring}")
    m, n = A.nrows, A.ncols
    D = [list(row) for row in A.rows]
    U = [list(row) for row in Matrix.identity(ring, m).rows]
    Ui = [list(row) for row in Matrix.identity(ring, m).rows]
    V = [list(row) for row in Matrix.identity(ring, n).rows]
    Vi = [list(row) for row in Matrix.identity(ring, n).rows]

    add, mul, neg = ring.add, ring.mul, ring.neg
    is_zero = ring.is_zero

    def row_swap(i, j):
        D[i], D[j] = D[j], D[i]
        U[i], U[j] = U[j], U[i]
        for r in Ui:
            r[i], r[j] = r[j], r[i]

    def col_swap(i, j):
        for r in D:
            r[i], r[j] = r[j], r[i]
        for r in V:
            r[i], r[j] = r[j], r[i]
        Vi[i], Vi[j] = Vi[j], Vi[i]

    def row_addmul(i, j, c):
        # row_i += c * row_j ; U_inv gets the inverse column operation
        D[i] = [add(a, mul(c, b)) for a, b in zip(D[i], D[j])]
        U[i] = [add(a, mul(c, b)) for a, b in zip(U[i], U[j])]
        nc = neg(c)
        for r in Ui:
            r[j] = add(r[j], mul(nc, r[i]))

    def col_addmul(i, j, c):
        # col_i += c * col_j
        for r in D:
            r[i] = add(r[i], mul(c, r[j]))
        for r in V:
            r[i] = add(r[i], mul(c, r[j]))
        nc = neg(c)
        Vi[j] = [add(a, mul(nc, b)) for a, b in zip(Vi[j], Vi[i])]

    def row_scale(i, u, u_inv):
        D[i] = [mul(u, a) for a in D[i]]
        U[i] = [mul(u, a) for a in U[i]]
        for r in Ui:
            r[i] = mul(u_inv, r[i])

    def find_pivot(t):
        best = None
        best_size = None
        for i in range(t, m):
            for j in range(t, n):
                x = D[i][j]
                if not is_zero(x):
                    s = ring.pivot_size(x)
                    if best_size is None or s < best_size:
                        best, best_size = (i, j), s
        return best

    t = 0
    while t < min(m, n):
        pos = find_pivot(t)
        if pos is None:
            break
        row_swap(t, pos[0])
        col_swap(t, pos[1])
        while True:
            # clear column t, re-pivoting on any nonzero remainder
            dirty = False
            for i in range(t + 1, m):
                if is_zero(D[i][t]):
                    continue
                q, r = ring.divmod_(D[i][t], D[t][t])
                row_addmul(i, t, neg(q))
                if not is_zero(D[i][t]):
                    row_swap(t, i)
                    dirty = True
            if dirty:
                continue
            for j in range(t + 1, n):
                if is_zero(D[t][j]):
                    continue
                q, r = ring.divmod_(D[t][j], D[t][t])
                col_addmul(j, t, neg(q))
                if not is_zero(D[t][j]):
                    col_swap(t, j)
                    dirty = True
            if dirty:
                continue
            # divisor-chain repair: fold in any entry the pivot misses
            violator = None
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if is_zero(D[i][j]):
                        continue
                    _, r = ring.divmod_(D[i][j], D[t][t])
                    if not is_zero(r):
                        violator = i
                        break
                if violator is not None:
                    break
            if violator is None:
                break
            row_addmul(t, violator, ring.one)
        u, u_inv = ring.normalizing_unit(D[t][t])
        if not ring.is_one(u):
            row_scale(t, u, u_inv)
        t += 1

    mk = lambda rows, nr, nc: Matrix(ring, rows, nr, nc)
    return SmithDecomposition(mk(D, m, n), mk(U, m, m), mk(V, n, n),
                              mk(Ui, m, m), mk(Vi, n, n), rank=t)


def rank(A: Matrix) -> int:
    return smith_normal_form(A).rank


def kernel_basis(A: Matrix) -> Matrix:
    """Columns form a basis of ker(A); the kernel of a map of free modules
    over a PID is a saturated free submodule, so this basis is unimodular."""
    snf = smith_normal_form(A)
    cols = [j for j in range(A.ncols)
            if j >= snf.rank]
    if not cols:
        return Matrix.zeros(A.ring, A.ncols, 0)
    return snf.V.submatrix(range(A.ncols), cols)


def solve_exact(K: Matrix, B: Matrix) -> Matrix:
    """Solve K @ X = B where the columns of B lie in the column span of K.

    Requires K to have full column rank (it always does for kernel bases).
    Raises ValueError when a column of B falls outside the span.
    """
    if K.nrows != B.nrows:
        raise ValueError("shape mismatch in solve")
    ring = K.ring
    snf = smith_normal_form(K)
    if snf.rank != K.ncols:
        raise ValueError("solve_exact needs full column rank")
    C = snf.U @ B
    rows = []
    for j in range(K.ncols):
        d = snf.D.rows[j][j]
        rows.append([ring.exact_div(C.rows[j][b], d) for b in range(B.ncols)])
    for j in range(K.ncols, K.nrows):
        for b in range(B.ncols):
            if not ring.is_zero(C.rows[j][b]):
                raise ValueError("column outside the span")
    X = Matrix(ring, rows, K.ncols, B.ncols)
    return snf.V @ X


def column_space_basis(A: Matrix) -> Matrix:
    """Basis matrix of the column span of A (free, of rank rank(A))."""
    snf = smith_normal_form(A)
    cols = []
    for j in range(snf.rank):
        d = snf.D.rows[j][j]
        col = [A.ring.mul(snf.U_inv.rows[i][j], d) for i in range(A.nrows)]
        cols.append(col)
    if not cols:
        return Matrix.zeros(A.ring, A.nrows, 0)
    return Matrix(A.ring, [[cols[j][i] for j in range(len(cols))]
                           for i in range(A.nrows)], A.nrows, len(cols))


def cokernel_invariant_matrix(A: Matrix) -> ModuleInvariant:
    """Invariant of (target of A) / im(A) over a PID-class ring."""
    ring = A.ring
    snf = smith_normal_form(A)
    torsion = []
    for j in range(snf.rank):
        d = snf.D.rows[j][j]
        if not ring.is_unit(d):
            torsion.append(ring.torsion_order(d))
    return ModuleInvariant(A.nrows - snf.rank, torsion)


def determinant(A: Matrix) -> object:
    """Exact determinant of a square matrix over a PID-class ring.

    Computed by fraction-based Gaussian elimination, independent of the Smith
    normal form kernel, so it can serve as a cross-check on U and V.
    """
    if A.nrows != A.ncols:
        raise ValueError("determinant of a non-square matrix")
    ring = A.ring
    n = A.nrows
    if n == 0:
        return ring.one
    if getattr(ring, "is_finite_field", False):
        p = ring.p
        rows = [[x % p for x in row] for row in A.rows]
        det = 1
        for col in range(n):
            piv = next((i for i in range(col, n) if rows[i][col] % p), None)
            if piv is None:
                return ring.canon(0)
            if piv != col:
                rows[col], rows[piv] = rows[piv], rows[col]
                det = -det % p
            inv = pow(rows[col][col], -1, p)
            det = det * rows[col][col] % p
            for i in range(col + 1, n):
                factor = rows[i][col] * inv % p
                rows[i] = [(a - factor * b) % p for a, b in zip(rows[i], rows[col])]
        return ring.canon(det)
    rows = [[Fraction(ring.to_fraction(x)) for x in row] for row in A.rows]
    det = Fraction(1)
    for col in range(n):
        piv = next((i for i in range(col, n) if rows[i][col] != 0), None)
        if piv is None:
            return ring.from_fraction(Fraction(0))
        if piv != col:
            rows[col], rows[piv] = rows[piv], rows[col]
            det = -det
        det *= rows[col][col]
        inv = 1 / rows[col][col]
        for i in range(col + 1, n):
            factor = rows[i][col] * inv
            rows[i] = [a - factor * b for a, b in zip(rows[i], rows[col])]
    return ring.from_fraction(det)
