"""JSON wire formats for rings, elements, complexes and module specs.

Ring descriptors follow the fixed schema:

    {"kind":"Z"} | {"kind":"Zmod","m":12} | {"kind":"Q"} | {"kind":"Fp","p":5}
    | {"kind":"ZLoc","p":5}
    | {"kind":"TruncComp","base":...,"ideal":["5"],"precision":8}
    | {"kind":"SquareZero","base":...,"module":{"kind":"Prufer","p":5}}

Elements serialize as decimal strings, fractions "a/b", pairs ["a","m"] for
square-zero rings, and Prufer values "a/p^k".
"""

from __future__ import annotations

from .errors import ParseError
from .linalg import Matrix, ModuleInvariant
from .complexes import ChainMap, FreeComplex
from .completion import ModuleSpec
from .rings import (BaseRing, IntegerRing, IntegersModRing, LocalizedIntegersRing,
                    PresentedModule, PrimeFieldRing, PruferModule, RationalRing,
                    SquareZeroRing, TruncatedCompletionRing)


def ring_to_json(ring: BaseRing) -> dict:
    return ring.descriptor()


def module_descriptor_from_json(data: dict, base: BaseRing):
    kind = data.get("kind")
    if kind == "Prufer":
        return PruferModule(int(data["p"]))
    if kind == "FinPres":
        mat = matrix_from_json(data, base, rows_key="matrix")
        return PresentedModule(base, mat)
    raise ParseError(f"unknown structured module kind {kind!r}")


def ring_from_json(data: dict) -> BaseRing:
    if not isinstance(data, dict) or "kind" not in data:
        raise ParseError(f"ring descriptor must be an object with a kind, got {data!r}")
    kind = data["kind"]
    if kind == "Z":
        return IntegerRing()
    if kind == "Q":
        return RationalRing()
    if kind == "Fp":
        return PrimeFieldRing(int(data["p"]))
    if kind == "Zmod":
        return IntegersModRing(int(data["m"]))
    if kind == "ZLoc":
        return LocalizedIntegersRing(int(data["p"]))
    if kind == "TruncComp":
        base = ring_from_json(data["base"])
        gens = [parse_element(base, g) for g in data["ideal"]]
        return TruncatedCompletionRing(base, gens, int(data["precision"]))
    if kind == "SquareZero":
        base = ring_from_json(data["base"])
        module = module_descriptor_from_json(data["module"], base)
        return SquareZeroRing(base, module)
    raise ParseError(f"unknown ring kind {kind!r}")


def parse_element(ring: BaseRing, value):
    return ring.parse(value)


def render_element(ring: BaseRing, payload):
    return ring.render(payload)


def matrix_from_json(data: dict, ring: BaseRing, rows_key: str = "matrix") -> Matrix:
    rows = data.get(rows_key, [])
    nrows = data.get("rows", len(rows))
    ncols = data.get("cols", len(rows[0]) if rows else 0)
    return Matrix(ring, [[parse_element(ring, x) for x in row] for row in rows],
                  nrows, ncols)


def matrix_to_json(M: Matrix) -> dict:
    return {"matrix": [[render_element(M.ring, x) for x in row] for row in M.rows],
            "rows": M.nrows, "cols": M.ncols}


def complex_to_json(t: FreeComplex) -> dict:
    return {
        "ring": ring_to_json(t.ring),
        "range": [t.lo, t.hi],
        "ranks": {str(i): t.rank(i) for i in t.degrees()},
        "differentials": {
            str(i): [[render_element(t.ring, x) for x in row]
                     for row in t.diff(i).rows]
            for i in t.degrees() if t.diff(i).nrows and t.diff(i).ncols
        },
    }


def complex_from_json(data: dict, ring: BaseRing | None = None) -> FreeComplex:
    ring = ring or ring_from_json(data["ring"])
    lo, hi = data["range"]
    ranks = {int(k): int(v) for k, v in data.get("ranks", {}).items()}
    diffs = {}
    for key, rows in data.get("differentials", {}).items():
        i = int(key)
        target = ranks.get(i - 1, 0)
        source = ranks.get(i, 0)
        diffs[i] = Matrix(ring, [[parse_element(ring, x) for x in row]
                                 for row in rows], target, source)
    return FreeComplex(ring, lo, hi, ranks, diffs)


def chain_map_to_json(f: ChainMap) -> dict:
    return {
        "ring": ring_to_json(f.source.ring),
        "source": complex_to_json(f.source),
        "target": complex_to_json(f.target),
        "components": {
            str(i): [[render_element(f.source.ring, x) for x in row]
                     for row in f.component(i).rows]
            for i in f.components
            if f.component(i).nrows and f.component(i).ncols
        },
    }


def chain_map_from_json(data: dict) -> ChainMap:
    ring = ring_from_json(data["ring"])
    source = complex_from_json(data["source"], ring)
    target = complex_from_json(data["target"], ring)
    comps = {}
    for key, rows in data.get("components", {}).items():
        i = int(key)
        comps[i] = Matrix(ring, [[parse_element(ring, x) for x in row]
                                 for row in rows],
                          target.rank(i), source.rank(i))
    return ChainMap(source, target, comps)


def invariant_to_json(inv: ModuleInvariant) -> dict:
    return inv.to_json()


def module_spec_from_json(data: dict) -> ModuleSpec:
    kind = data.get("kind")
    if kind == "FinPres":
        ring = ring_from_json(data["ring"])
        return ModuleSpec.fp(ring, matrix_from_json(data, ring))
    if kind == "Free":
        ring = ring_from_json(data["ring"])
        return ModuleSpec.free(ring, int(data.get("rank", 1)))
    if kind == "Prufer":
        ring = ring_from_json(data["ring"]) if "ring" in data \
            else LocalizedIntegersRing(int(data["p"]))
        return ModuleSpec.prufer(ring, int(data["p"]))
    if kind == "Rationals":
        ring = ring_from_json(data["ring"]) if "ring" in data else IntegerRing()
        return ModuleSpec.rationals(ring)
    if kind == "RingModule":
        return ModuleSpec.ring_module(ring_from_json(data["ring"]))
    raise ParseError(f"unknown module spec kind {kind!r}")


def module_spec_to_json(spec: ModuleSpec) -> dict:
    if spec.kind == "fp":
        out = {"kind": "FinPres", "ring": ring_to_json(spec.ring)}
        out.update(matrix_to_json(spec.presentation))
        return out
    if spec.kind == "prufer":
        return {"kind": "Prufer", "p": spec.p, "ring": ring_to_json(spec.ring)}
    if spec.kind == "rationals":
        return {"kind": "Rationals", "ring": ring_to_json(spec.ring)}
    return {"kind": "RingModule", "ring": ring_to_json(spec.module_ring)}
