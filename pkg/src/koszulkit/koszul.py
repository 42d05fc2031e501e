"""Koszul complexes and the tower of generator-power stages.

Stage n is the tensor product over the generators s_i of the two-term
complexes R --s_i^n--> R, so its degree-j rank is binomial(r, j).  The
transition map into stage n-1 multiplies by s_i in degree one and is the
identity in degree zero, factor by factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import Inconclusive, UnsupportedRing
from .linalg import Matrix, ModuleInvariant
from .rings import (BaseRing, IdealSpec, RingElement, RingMap, SquareZeroRing,
                    TruncatedCompletionRing, annihilator_of, quotient_ring_raw,
                    ring_module_invariant)
from .complexes import (ChainMap, FreeComplex, cone, homology, scalar_map,
                        tensor, tensor_maps)


def koszul(ideal: IdealSpec, power: int = 1) -> FreeComplex:
    """The Koszul complex of (s_1^power, ..., s_r^power), degrees r..0."""
    ring = ideal.ring
    out = None
    for s in ideal.generators:
        factor = cone(scalar_map(ring, ring.power(s, power))).complex
        out = factor if out is None else tensor(out, factor)
    return out


class KoszulTower:
    """Lazily materialized stages and transition maps of the Koszul tower.

    Stages are pure values; the caches are filled idempotently, so concurrent
    materialization races are benign.
    """

    def __init__(self, ideal: IdealSpec):
        self.ideal = ideal
        self._stages: dict[int, FreeComplex] = {}
        self._maps: dict[int, ChainMap] = {}

    def stage(self, n: int) -> FreeComplex:
        if n < 1:
            raise ValueError("stages are indexed from 1")
        if n not in self._stages:
            self._stages[n] = koszul(self.ideal, n)
        return self._stages[n]

    def map_q(self, n: int) -> ChainMap:
        """q_n : stage(n) -> stage(n-1); multiply by s_i in degree one."""
        if n < 2:
            raise ValueError("transition maps start at n = 2")
        if n not in self._maps:
            ring = self.ideal.ring
            full = None
            for s in self.ideal.generators:
                src = cone(scalar_map(ring, ring.power(s, n))).complex
                tgt = cone(scalar_map(ring, ring.power(s, n - 1))).complex
                factor = ChainMap(src, tgt, {
                    0: Matrix(ring, [[ring.one]]),
                    1: Matrix(ring, [[ring.canon(s)]]),
                })
                full = factor if full is None else tensor_maps(full, factor)
            self._maps[n] = full
        return self._maps[n]


def tower_stage(tower: KoszulTower, n: int) -> FreeComplex:
    return tower.stage(n)


def tower_map_q(tower: KoszulTower, n: int) -> ChainMap:
    return tower.map_q(n)


@dataclass
class AugmentationData:
    """The degree-zero surjection onto R/I^(n) plus the checked square."""

    n: int
    quotient_ring: BaseRing
    reduction: RingMap
    pq_square: str

    def to_json(self) -> dict:
        return {"n": self.n, "quotient": self.quotient_ring.descriptor(),
                "pq_square": self.pq_square}


def augmentation_p(tower: KoszulTower, n: int) -> AugmentationData:
    """p_n : stage(n) -> R/I^(n), with the commuting-square certificate.

    The square compares the two composites stage(n)_0 -> R/I^(n-1): reduction
    followed by the canonical quotient map versus the degree-zero component of
    q_n followed by the lower reduction.  Both are R-linear maps out of a rank
    one free module, so checking them on the generator and a probe set of ring
    elements is an exact verification.
    """
    ideal = tower.ideal
    ring = ideal.ring
    ring_n, red_n = quotient_ring_raw(ring, ideal.generators, n, "generator-powers")
    if n == 1:
        return AugmentationData(1, ring_n, red_n, "commutes")
    ring_prev, red_prev = quotient_ring_raw(ring, ideal.generators, n - 1,
                                            "generator-powers")
    canon_map, _ = _connecting_quotient_map(ring, ideal, n, ring_n, ring_prev)
    q0 = tower.map_q(n).component(0)
    probes = [ring.one, ring.zero] + list(ideal.generators)
    for x in probes:
        via_quotient = canon_map(red_n.fn(x))
        via_tower = red_prev.fn(ring.mul(q0.rows[0][0], x))
        if not ring_prev.eq(via_quotient, via_tower):
            raise AssertionError(f"augmentation square fails to commute at n={n}")
    return AugmentationData(n, ring_n, red_n, "commutes")


def _connecting_quotient_map(ring, ideal, n, ring_n, ring_prev):
    """The canonical surjection R/I^(n) -> R/I^(n-1) for representable stages."""
    from .rings import IntegersModRing
    if isinstance(ring_n, IntegersModRing) and isinstance(ring_prev, IntegersModRing):
        m = ring_prev.m
        return (lambda x: x % m), RingMap(ring_n, ring_prev, lambda x: x % m)
    if ring_n == ring_prev:
        return (lambda x: x), RingMap.identity(ring_n)
    raise UnsupportedRing("no canonical map between these quotient stages")


def ell_homology(tower: KoszulTower, n: int) -> dict[int, ModuleInvariant]:
    """Homology of the homotopy fiber of p_n, through the long exact sequence.

    The fiber needs no free model: p_n induces an isomorphism on H_0, so the
    fiber's homology agrees with the stage's in degrees >= 1 and vanishes in
    degrees <= 0.  The H_0 identification is verified, not assumed.
    """
    stage = tower.stage(n)
    h = homology(stage)
    ring_n, _ = quotient_ring_raw(tower.ideal.ring, tower.ideal.generators, n,
                                  "generator-powers")
    expected_h0 = ring_module_invariant(ring_n, h[0].validity)
    if h[0] != expected_h0:
        raise AssertionError(
            f"H_0 of stage {n} is {h[0].describe()}, expected {expected_h0.describe()}")
    out = {i: inv for i, inv in h.items() if i >= 1}
    out[0] = ModuleInvariant.zero()
    for i in range(min(0, stage.lo) - 1, 0):
        out[i] = ModuleInvariant.zero()
    return out


def koszul_principal_homology(ideal: IdealSpec) -> tuple[ModuleInvariant, ModuleInvariant]:
    """(H_0, H_1) of a principal Koszul complex over a structured ring."""
    if ideal.r != 1:
        raise UnsupportedRing("principal route needs exactly one generator")
    ring = ideal.ring
    if not isinstance(ring, (SquareZeroRing, TruncatedCompletionRing)):
        raise UnsupportedRing("principal route applies to square-zero and "
                              "truncated-completion rings")
    s = ideal.generators[0]
    ring_q, _ = quotient_ring_raw(ring, [s], 1, "powers")
    validity = ring.validity if isinstance(ring, TruncatedCompletionRing) else "exact"
    if ring_q == ring:
        h0 = ModuleInvariant(1, (), validity) if not isinstance(ring, SquareZeroRing) \
            else _whole_ring_invariant_error()
    else:
        h0 = ring_module_invariant(ring_q, validity)
    h1 = annihilator_of(RingElement(ring, s))
    return h0, h1


def _whole_ring_invariant_error():
    raise Inconclusive("the square-zero ring itself is not a finitely generated "
                       "module over a PID-class ring")


def binomial_rank_profile(r: int) -> dict[int, int]:
    return {j: math.comb(r, j) for j in range(r + 1)}


def stage_report(tower: KoszulTower, n: int) -> dict:
    """JSON-ready per-stage report: ranks, homology, square certificate."""
    stage = tower.stage(n)
    h = homology(stage)
    aug = augmentation_p(tower, n)
    return {
        "n": n,
        "ranks": {str(i): stage.rank(i) for i in stage.degrees()},
        "homology": {str(i): inv.to_json() for i, inv in sorted(h.items())},
        "pq_square": aug.pq_square,
    }
