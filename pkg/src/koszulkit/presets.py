"""Named ring presets accepted wherever a ring descriptor is expected.

Preset tokens keep command lines short: "Z", "Q", "Zloc", "Zmod:12",
"Fp:5", "exa-no" (the square-zero extension of the localized integers by the
Prufer module, the stock non-noetherian counterexample), and "trunc:<N>"
composed after another preset is left to explicit JSON.
"""

from __future__ import annotations

import json

from .errors import ParseError
from .rings import (BaseRing, IntegerRing, IntegersModRing, LocalizedIntegersRing,
                    PrimeFieldRing, RationalRing, counterexample_ring)
from .serialize import ring_from_json


def resolve_ring(token, p: int | None = None) -> BaseRing:
    """Turn a preset name, inline JSON object, or JSON string into a ring."""
    if isinstance(token, dict):
        return ring_from_json(token)
    if not isinstance(token, str):
        raise ParseError(f"cannot resolve ring from {token!r}")
    text = token.strip()
    if text.startswith("{"):
        return ring_from_json(json.loads(text))
    name = text.lower()
    if name == "z":
        return IntegerRing()
    if name == "q":
        return RationalRing()
    if name in ("zloc", "z_(p)", "zp-local"):
        return LocalizedIntegersRing(_need_p(p, token))
    if name.startswith("zmod:"):
        return IntegersModRing(int(text.split(":", 1)[1]))
    if name.startswith("fp:"):
        return PrimeFieldRing(int(text.split(":", 1)[1]))
    if name == "fp":
        return PrimeFieldRing(_need_p(p, token))
    if name == "exa-no":
        return counterexample_ring(_need_p(p, token))
    raise ParseError(f"unknown ring preset {token!r}")


def _need_p(p: int | None, token: str) -> int:
    if p is None:
        raise ParseError(f"ring preset {token!r} needs a prime; pass --p")
    return p


def resolve_generators(ring: BaseRing, tokens: list[str], p: int | None = None
                       ) -> tuple:
    """Parse generator tokens; the literal token "p" means the chosen prime."""
    out = []
    for tok in tokens:
        if isinstance(tok, str) and tok.strip().lower() == "p":
            if p is None:
                raise ParseError('generator token "p" needs --p')
            tok = str(p)
        out.append(ring.parse(tok))
    return tuple(out)
