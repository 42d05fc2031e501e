"""Bounded complexes of finite-rank free modules and their homology.

Homological indexing: differentials lower the degree by one.  Sign
conventions are pinned once and for all so serialized complexes are stable:

* tensor differential on the (i, j) summand is d_a (x) 1 + (-1)^i 1 (x) d_b;
* the k-fold shift multiplies differentials by (-1)^k;
* the dual has d_i = eps(i) * transpose(d_{1-i}) with eps(i) = (-1)^(floor(i/2)),
  which makes dual(dual(a)) equal to a on the nose.

Homology works over the PID-class rings directly and over Z/m (and truncated
completions whose face is Z/m) by lifting to the integers with explicit
m-torsion relations.  Each homology group is returned both as an invariant and
as a presentation, so induced maps on homology can be computed exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import RingMismatch, UnsupportedRing
from .linalg import (Matrix, ModuleInvariant, cokernel_invariant_matrix,
                     column_space_basis, kernel_basis, solve_exact)
from .rings import (BaseRing, IntegerRing, IntegersModRing, RingMap,
                    TruncatedCompletionRing)


class FreeComplex:
    """A bounded complex of free modules, validated to satisfy d o d = 0."""

    __slots__ = ("ring", "lo", "hi", "ranks", "diffs")

    def __init__(self, ring: BaseRing, lo: int, hi: int,
                 ranks: Mapping[int, int], diffs: Mapping[int, Matrix]):
        if lo > hi:
            raise ValueError("degree range is empty; use a zero complex instead")
        self.ring = ring
        self.lo = lo
        self.hi = hi
        self.ranks = {i: int(ranks.get(i, 0)) for i in range(lo, hi + 1)}
        full = {}
        for i in range(lo, hi + 1):
            d = diffs.get(i)
            if d is None:
                d = Matrix.zeros(ring, self.rank(i - 1), self.rank(i))
            if d.ring != ring:
                raise RingMismatch("differential over the wrong ring")
            if (d.nrows, d.ncols) != (self.rank(i - 1), self.rank(i)):
                raise ValueError(f"differential d_{i} has shape {d.nrows}x{d.ncols}, "
                                 f"expected {self.rank(i - 1)}x{self.rank(i)}")
            full[i] = d
        self.diffs = full
        for i in range(lo + 1, hi + 1):
            if not (self.diff(i - 1) @ self.diff(i)).is_zero():
                raise ValueError(f"d_{i-1} o d_{i} != 0")

    def rank(self, i: int) -> int:
        return self.ranks.get(i, 0)

    def diff(self, i: int) -> Matrix:
        d = self.diffs.get(i)
        if d is None:
            d = Matrix.zeros(self.ring, self.rank(i - 1), self.rank(i))
        return d

    def degrees(self) -> range:
        return range(self.lo, self.hi + 1)

    def total_rank(self) -> int:
        return sum(self.ranks.values())

    def __eq__(self, other):
        return (isinstance(other, FreeComplex) and self.ring == other.ring
                and self.lo == other.lo and self.hi == other.hi
                and self.ranks == other.ranks
                and all(self.diff(i) == other.diff(i) for i in self.degrees()))

    def __repr__(self):
        return f"FreeComplex(degrees [{self.lo},{self.hi}], ranks {self.ranks})"


class ChainMap:
    """Degreewise matrices commuting with the differentials."""

    __slots__ = ("source", "target", "components")

    def __init__(self, source: FreeComplex, target: FreeComplex,
                 components: Mapping[int, Matrix]):
        if source.ring != target.ring:
            raise RingMismatch("chain map between complexes over different rings")
        self.source = source
        self.target = target
        comps = {}
        for i in range(min(source.lo, target.lo), max(source.hi, target.hi) + 1):
            f = components.get(i)
            if f is None:
                f = Matrix.zeros(source.ring, target.rank(i), source.rank(i))
            if (f.nrows, f.ncols) != (target.rank(i), source.rank(i)):
                raise ValueError(f"component {i} has shape {f.nrows}x{f.ncols}, "
                                 f"expected {target.rank(i)}x{source.rank(i)}")
            comps[i] = f
        self.components = comps
        for i in comps:
            left = self.component(i - 1) @ source.diff(i)
            right = target.diff(i) @ self.component(i)
            if left != right:
                raise ValueError(f"chain map fails to commute in degree {i}")

    def component(self, i: int) -> Matrix:
        f = self.components.get(i)
        if f is None:
            f = Matrix.zeros(self.source.ring, self.target.rank(i), self.source.rank(i))
        return f

    @classmethod
    def identity(cls, c: FreeComplex) -> "ChainMap":
        return cls(c, c, {i: Matrix.identity(c.ring, c.rank(i)) for i in c.degrees()})

    def compose(self, earlier: "ChainMap") -> "ChainMap":
        if earlier.target is not self.source and earlier.target != self.source:
            raise RingMismatch("chain maps do not compose")
        degs = set(self.components) | set(earlier.components)
        return ChainMap(earlier.source, self.target,
                        {i: self.component(i) @ earlier.component(i) for i in degs})


def unit_complex(ring: BaseRing) -> FreeComplex:
    return FreeComplex(ring, 0, 0, {0: 1}, {})


def zero_complex(ring: BaseRing) -> FreeComplex:
    return FreeComplex(ring, 0, 0, {0: 0}, {})


def scalar_map(ring: BaseRing, s) -> ChainMap:
    """s : unit -> unit as a chain map, the building block of Koszul factors."""
    u = unit_complex(ring)
    return ChainMap(u, u, {0: Matrix(ring, [[ring.canon(s)]])})


@dataclass
class ConeTriangle:
    """cone(f) with the canonical inclusion of the target and projection onto
    the shifted source."""

    complex: FreeComplex
    inclusion: ChainMap
    projection: ChainMap


def cone(f: ChainMap) -> ConeTriangle:
    """Mapping cone: degree i part is target_i + source_{i-1}."""
    S, T = f.source, f.target
    ring = T.ring
    lo = min(T.lo, S.lo + 1)
    hi = max(T.hi, S.hi + 1)
    ranks = {i: T.rank(i) + S.rank(i - 1) for i in range(lo, hi + 1)}
    diffs = {}
    for i in range(lo, hi + 1):
        blocks = [[T.diff(i), f.component(i - 1)],
                  [Matrix.zeros(ring, S.rank(i - 2), T.rank(i)), -S.diff(i - 1)]]
        diffs[i] = Matrix.block(ring, blocks,
                                [T.rank(i - 1), S.rank(i - 2)],
                                [T.rank(i), S.rank(i - 1)])
    cx = FreeComplex(ring, lo, hi, ranks, diffs)
    incl = ChainMap(T, cx, {
        i: Matrix.vstack(ring, [Matrix.identity(ring, T.rank(i)),
                                Matrix.zeros(ring, S.rank(i - 1), T.rank(i))],
                         T.rank(i))
        for i in range(T.lo, T.hi + 1)})
    shifted = shift(S, 1)
    proj = ChainMap(cx, shifted, {
        i: Matrix.hstack(ring, [Matrix.zeros(ring, S.rank(i - 1), T.rank(i)),
                                Matrix.identity(ring, S.rank(i - 1))],
                         S.rank(i - 1))
        for i in range(lo, hi + 1)})
    return ConeTriangle(cx, incl, proj)


def shift(t: FreeComplex, k: int) -> FreeComplex:
    """Degree shift by k; differentials pick up the sign (-1)^k."""
    sign = 1 if k % 2 == 0 else -1
    diffs = {}
    for i in t.degrees():
        d = t.diff(i)
        diffs[i + k] = d if sign == 1 else -d
    return FreeComplex(t.ring, t.lo + k, t.hi + k,
                       {i + k: r for i, r in t.ranks.items()}, diffs)


def _summands(a: FreeComplex, b: FreeComplex, n: int):
    """Nonzero (i, j) summands of total degree n, listed by ascending i."""
    out = []
    for i in range(a.lo, a.hi + 1):
        j = n - i
        if b.lo <= j <= b.hi and a.rank(i) and b.rank(j):
            out.append((i, j))
    return out


def tensor(a: FreeComplex, b: FreeComplex) -> FreeComplex:
    """Total complex of the double complex, with Koszul signs."""
    if a.ring != b.ring:
        raise RingMismatch("tensor of complexes over different rings")
    ring = a.ring
    lo, hi = a.lo + b.lo, a.hi + b.hi
    layout = {n: _summands(a, b, n) for n in range(lo, hi + 1)}
    offsets = {}
    ranks = {}
    for n in range(lo, hi + 1):
        off, pos = {}, 0
        for (i, j) in layout[n]:
            off[(i, j)] = pos
            pos += a.rank(i) * b.rank(j)
        offsets[n] = off
        ranks[n] = pos
    diffs = {}
    for n in range(lo, hi + 1):
        rows = [[ring.zero] * ranks[n] for _ in range(ranks.get(n - 1, 0))]
        for (i, j) in layout[n]:
            ra, rb = a.rank(i), b.rank(j)
            base_col = offsets[n][(i, j)]
            # d_a (x) 1 : lands on summand (i-1, j)
            if (i - 1, j) in offsets.get(n - 1, {}):
                da = a.diff(i)
                base_row = offsets[n - 1][(i - 1, j)]
                for u2 in range(da.nrows):
                    for u in range(ra):
                        x = da.rows[u2][u]
                        if not ring.is_zero(x):
                            for v in range(rb):
                                rows[base_row + u2 * rb + v][base_col + u * rb + v] = x
            # (-1)^i 1 (x) d_b : lands on summand (i, j-1)
            if (i, j - 1) in offsets.get(n - 1, {}):
                db = b.diff(j)
                sign = 1 if i % 2 == 0 else -1
                base_row = offsets[n - 1][(i, j - 1)]
                rb2 = db.nrows
                for u in range(ra):
                    for v2 in range(rb2):
                        for v in range(rb):
                            x = db.rows[v2][v]
                            if not ring.is_zero(x):
                                val = x if sign == 1 else ring.neg(x)
                                rows[base_row + u * rb2 + v2][base_col + u * rb + v] = val
        diffs[n] = Matrix(ring, rows, ranks.get(n - 1, 0), ranks[n])
    return FreeComplex(ring, lo, hi, ranks, diffs)


def tensor_maps(f: ChainMap, g: ChainMap) -> ChainMap:
    """f (x) g between the tensor complexes (no signs: both have degree 0)."""
    src = tensor(f.source, g.source)
    tgt = tensor(f.target, g.target)
    ring = src.ring
    comps = {}
    for n in src.degrees():
        src_layout = _summands(f.source, g.source, n)
        tgt_layout = _summands(f.target, g.target, n)
        src_off, pos = {}, 0
        for (i, j) in src_layout:
            src_off[(i, j)] = pos
            pos += f.source.rank(i) * g.source.rank(j)
        tgt_off, pos = {}, 0
        for (i, j) in tgt_layout:
            tgt_off[(i, j)] = pos
            pos += f.target.rank(i) * g.target.rank(j)
        rows = [[ring.zero] * src.rank(n) for _ in range(tgt.rank(n))]
        for (i, j) in src_layout:
            if (i, j) not in tgt_off:
                continue
            fi, gj = f.component(i), g.component(j)
            ra, rb = f.source.rank(i), g.source.rank(j)
            ta, tb = f.target.rank(i), g.target.rank(j)
            br, bc = tgt_off[(i, j)], src_off[(i, j)]
            for u2 in range(ta):
                for v2 in range(tb):
                    for u in range(ra):
                        fx = fi.rows[u2][u]
                        if ring.is_zero(fx):
                            continue
                        for v in range(rb):
                            gx = gj.rows[v2][v]
                            if not ring.is_zero(gx):
                                rows[br + u2 * tb + v2][bc + u * rb + v] = ring.mul(fx, gx)
        comps[n] = Matrix(ring, rows, tgt.rank(n), src.rank(n))
    return ChainMap(src, tgt, comps)


_DUAL_SIGNS = {0: 1, 1: 1, 2: -1, 3: -1}


def _dual_sign(i: int) -> int:
    return _DUAL_SIGNS[i % 4]


def dual(a: FreeComplex) -> FreeComplex:
    """Degreewise linear dual; an involution on the nose."""
    ring = a.ring
    lo, hi = -a.hi, -a.lo
    ranks = {i: a.rank(-i) for i in range(lo, hi + 1)}
    diffs = {}
    for i in range(lo, hi + 1):
        d = a.diff(1 - i).transpose()
        diffs[i] = d if _dual_sign(i) == 1 else -d
    return FreeComplex(ring, lo, hi, ranks, diffs)


def base_change(t: FreeComplex, phi: RingMap) -> FreeComplex:
    """Entrywise extension of scalars; exact because the terms are free."""
    if t.ring != phi.source:
        raise RingMismatch("complex is not over the map's source ring")
    return FreeComplex(phi.target, t.lo, t.hi, dict(t.ranks),
                       {i: phi.apply_matrix(t.diff(i)) for i in t.degrees()})


def base_change_map(f: ChainMap, phi: RingMap) -> ChainMap:
    return ChainMap(base_change(f.source, phi), base_change(f.target, phi),
                    {i: phi.apply_matrix(f.component(i)) for i in f.components})


# -- homology -----------------------------------------------------------------


@dataclass
class HomologyPresentation:
    """H = span(gens)/relations, with relations written in gens-coordinates.

    `work_ring` is the PID-class ring used for the coordinate arithmetic (the
    integers when the complex lives over Z/m).  `gens` has one column per
    generator inside the ambient lifted chain module; `rels` is the relation
    matrix in those coordinates, so the invariant is coker(rels).
    """

    work_ring: BaseRing
    ambient_rank: int
    gens: Matrix
    rels: Matrix
    invariant: ModuleInvariant
    modulus: int | None = None


def _presentation_pid(ring, d_i: Matrix, d_next: Matrix) -> HomologyPresentation:
    K = kernel_basis(d_i)
    if K.ncols == 0:
        rels = Matrix.zeros(ring, 0, 0)
        return HomologyPresentation(ring, d_i.ncols, K, rels, ModuleInvariant.zero())
    X = solve_exact(K, d_next)
    inv = cokernel_invariant_matrix(X)
    return HomologyPresentation(ring, d_i.ncols, K, X, inv)


def _presentation_zmod(m: int, d_i: Matrix, d_next: Matrix) -> HomologyPresentation:
    """Lift to the integers: generators span {x : d_i x = 0 mod m}, relations
    are the lifted image columns together with m times the generators."""
    Z = IntegerRing()
    n = d_i.ncols
    di = d_i.map_entries(int, ring=Z)
    dn = d_next.map_entries(int, ring=Z)
    block = Matrix.hstack(Z, [di, Matrix.identity(Z, d_i.nrows).scale(m)], d_i.nrows)
    ker = kernel_basis(block)
    lifts = ker.submatrix(range(n), range(ker.ncols))
    gens = column_space_basis(Matrix.hstack(Z, [lifts, Matrix.identity(Z, n).scale(m)], n))
    rel_sources = Matrix.hstack(Z, [dn, Matrix.identity(Z, n).scale(m)], n)
    X = solve_exact(gens, rel_sources)
    inv = cokernel_invariant_matrix(X)
    return HomologyPresentation(Z, n, gens, X, inv, modulus=m)


def homology_presentations(t: FreeComplex) -> dict[int, HomologyPresentation]:
    ring = t.ring
    validity = "exact"
    if isinstance(ring, TruncatedCompletionRing):
        validity = ring.validity
        t = FreeComplex(ring.face, t.lo, t.hi, dict(t.ranks),
                        {i: t.diff(i).map_entries(lambda x: x, ring=ring.face)
                         for i in t.degrees()})
        ring = ring.face
    out = {}
    if getattr(ring, "is_pid", False):
        for i in t.degrees():
            out[i] = _presentation_pid(ring, t.diff(i), t.diff(i + 1))
    elif isinstance(ring, IntegersModRing):
        for i in t.degrees():
            out[i] = _presentation_zmod(ring.m, t.diff(i), t.diff(i + 1))
    else:
        raise UnsupportedRing(f"homology is not available over ring kind {ring.kind}")
    if validity != "exact":
        for i, pres in out.items():
            out[i] = HomologyPresentation(pres.work_ring, pres.ambient_rank,
                                          pres.gens, pres.rels,
                                          pres.invariant.with_validity(validity),
                                          pres.modulus)
    return out


def homology(t: FreeComplex) -> dict[int, ModuleInvariant]:
    return {i: p.invariant for i, p in homology_presentations(t).items()}


def is_acyclic(t: FreeComplex) -> bool:
    return all(v.is_zero() for v in homology(t).values())


def is_quasi_iso(f: ChainMap) -> bool:
    """True iff the mapping cone has vanishing homology in every degree."""
    return is_acyclic(cone(f).complex)


def induced_map(f: ChainMap, degree: int,
                src: HomologyPresentation, tgt: HomologyPresentation) -> Matrix:
    """Matrix of H_degree(f) in the chosen presentations' coordinates."""
    comp = f.component(degree)
    if src.modulus is not None:
        comp = comp.map_entries(int, ring=src.work_ring)
    mapped = comp @ src.gens
    return solve_exact(tgt.gens, mapped)


def image_invariant(F: Matrix, tgt: HomologyPresentation) -> ModuleInvariant:
    """Invariant of the image of a map into the presented homology group."""
    W = Matrix.hstack(tgt.work_ring, [F, tgt.rels], F.nrows)
    basis = column_space_basis(W)
    if basis.ncols == 0:
        return ModuleInvariant.zero()
    Zc = solve_exact(basis, tgt.rels)
    return cokernel_invariant_matrix(Zc)


def is_surjective_on_homology(F: Matrix, tgt: HomologyPresentation) -> bool:
    W = Matrix.hstack(tgt.work_ring, [F, tgt.rels], F.nrows)
    return cokernel_invariant_matrix(W).is_zero()


def hom_group(a: FreeComplex, b: FreeComplex) -> ModuleInvariant:
    """The hom-group in the derived category: H_0(dual(a) (x) b)."""
    return homology(tensor(dual(a), b)).get(0, ModuleInvariant.zero())


def hom_group_graded(a: FreeComplex, b: FreeComplex) -> ModuleInvariant:
    """Invariant of the full graded hom: direct sum over all shifts."""
    from .linalg import merge_invariants
    return merge_invariants(*homology(tensor(dual(a), b)).values())


def euler_characteristic(t: FreeComplex) -> int:
    return sum((1 if i % 2 == 0 else -1) * t.rank(i) for i in t.degrees())


def direct_sum(a: FreeComplex, b: FreeComplex) -> FreeComplex:
    if a.ring != b.ring:
        raise RingMismatch("direct sum of complexes over different rings")
    ring = a.ring
    lo, hi = min(a.lo, b.lo), max(a.hi, b.hi)
    ranks = {i: a.rank(i) + b.rank(i) for i in range(lo, hi + 1)}
    diffs = {}
    for i in range(lo, hi + 1):
        diffs[i] = Matrix.block(
            ring,
            [[a.diff(i), Matrix.zeros(ring, a.rank(i - 1), b.rank(i))],
             [Matrix.zeros(ring, b.rank(i - 1), a.rank(i)), b.diff(i)]],
            [a.rank(i - 1), b.rank(i - 1)], [a.rank(i), b.rank(i)])
    return FreeComplex(ring, lo, hi, ranks, diffs)


# -- unit-pivot reduction ------------------------------------------------------


def eliminate_unit_entry(t: FreeComplex, k: int) -> FreeComplex | None:
    """Split off one contractible summand along a unit entry of d_k.

    Change bases in degrees k and k-1 so the unit is isolated, then drop the
    matching rank from both degrees.  Returns None when d_k has no unit
    entry.  The result is homotopy equivalent to the input, so homology is
    unchanged; this is the standard Gaussian reduction of a complex.
    """
    ring = t.ring
    A = t.diff(k)
    pos = None
    for i in range(A.nrows):
        for j in range(A.ncols):
            if ring.is_unit(A.rows[i][j]):
                pos = (i, j)
                break
        if pos:
            break
    if pos is None:
        return None
    i0, j0 = pos
    u_inv = ring.inv(A.rows[i0][j0])
    a = [list(row) for row in A.rows]
    up = [list(row) for row in t.diff(k + 1).rows]
    down = [list(row) for row in t.diff(k - 1).rows]
    # clear row i0 by column operations on degree k; adjust d_{k+1} rows
    for j in range(A.ncols):
        if j == j0 or ring.is_zero(a[i0][j]):
            continue
        c = ring.mul(u_inv, a[i0][j])
        nc = ring.neg(c)
        for r in range(A.nrows):
            a[r][j] = ring.add(a[r][j], ring.mul(nc, a[r][j0]))
        for col in range(t.rank(k + 1)):
            up[j0][col] = ring.add(up[j0][col], ring.mul(c, up[j][col]))
    # clear column j0 by row operations on degree k-1; adjust d_{k-1} columns
    for i in range(A.nrows):
        if i == i0 or ring.is_zero(a[i][j0]):
            continue
        c = ring.mul(u_inv, a[i][j0])
        nc = ring.neg(c)
        for col in range(A.ncols):
            a[i][col] = ring.add(a[i][col], ring.mul(nc, a[i0][col]))
        for r in range(t.rank(k - 2)):
            down[r][i0] = ring.add(down[r][i0], ring.mul(c, down[r][i]))
    keep_rows = [r for r in range(A.nrows) if r != i0]
    keep_cols = [c for c in range(A.ncols) if c != j0]
    new_ranks = dict(t.ranks)
    new_ranks[k] = t.rank(k) - 1
    new_ranks[k - 1] = t.rank(k - 1) - 1
    new_diffs = {}
    for d in t.degrees():
        if d == k:
            new_diffs[d] = Matrix(ring, [[a[r][c] for c in keep_cols]
                                         for r in keep_rows],
                                  len(keep_rows), len(keep_cols))
        elif d == k + 1 and d <= t.hi:
            # rows of d_{k+1} are indexed by the degree-k basis: drop row j0
            new_diffs[d] = Matrix(ring, [up[r] for r in keep_cols],
                                  len(keep_cols), t.rank(k + 1))
        elif d == k - 1 and d >= t.lo:
            # columns of d_{k-1} are indexed by the degree-(k-1) basis: drop i0
            new_diffs[d] = Matrix(ring, [[down[r][c] for c in keep_rows]
                                         for r in range(t.rank(k - 2))],
                                  t.rank(k - 2), len(keep_rows))
        else:
            new_diffs[d] = t.diff(d)
    return FreeComplex(ring, t.lo, t.hi, new_ranks, new_diffs)


def strictify_nonnegative(t: FreeComplex) -> FreeComplex:
    """Replace t by a homotopy-equivalent complex with no terms below zero.

    Works over local rings whenever t has vanishing homology in negative
    degrees: the bottom differential onto each negative term is then
    surjective, so it carries unit entries that Gaussian reduction can split
    off until the term is gone.  Raises ValueError when stuck, which means
    the negative homology did not vanish.
    """
    current = t
    while current.lo < 0 and current.rank(current.lo) == 0:
        current = FreeComplex(current.ring, current.lo + 1, max(current.hi, current.lo + 1),
                              {i: current.rank(i)
                               for i in range(current.lo + 1, current.hi + 1)},
                              {i: current.diff(i)
                               for i in range(current.lo + 2, current.hi + 1)})
    while current.lo < 0:
        reduced = eliminate_unit_entry(current, current.lo + 1)
        if reduced is None:
            raise ValueError("cannot remove negative-degree terms: homology "
                             "below degree zero does not vanish")
        current = reduced
        while current.lo < 0 and current.rank(current.lo) == 0:
            lo = current.lo + 1
            current = FreeComplex(current.ring, lo, max(current.hi, lo),
                                  {i: current.rank(i)
                                   for i in range(lo, current.hi + 1)},
                                  {i: current.diff(i)
                                   for i in range(lo + 1, current.hi + 1)})
    return current
