"""The curated family of computable commutative rings.

Every ring kind offers total, exact arithmetic on canonical payloads:

* integers, rationals, prime fields, integers mod m — the obvious payloads;
* integers localized at a prime p — reduced fractions with denominator
  coprime to p;
* truncated completions — the inverse limit of R/I^n presented by its stage-N
  face, where equality means equality modulo I^N;
* square-zero extensions base (+) M — pairs (a, m) with
  (a, m)(a', m') = (aa', am' + a'm).

All values are immutable; every operation is a pure function, so rings and
elements are safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import (Inconclusive, ParseError, RingMismatch, UnsupportedQuotient,
                     UnsupportedRing)
from .linalg import (Matrix, ModuleInvariant, _factorize, cokernel_invariant_matrix,
                     kernel_basis, merge_invariants, smith_normal_form, solve_exact)


def _as_fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"bad fraction {text!r}") from exc


def _p_valuation(x: Fraction | int, p: int) -> int | None:
    """p-adic valuation; None encodes infinity (x == 0)."""
    x = Fraction(x)
    if x == 0:
        return None
    v = 0
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


class BaseRing:
    """Shared plumbing; concrete rings override the payload operations."""

    kind = "?"
    is_pid = False
    is_field = False
    is_finite_field = False

    def descriptor(self) -> dict:
        raise NotImplementedError

    def __eq__(self, other):
        return isinstance(other, BaseRing) and self.descriptor() == other.descriptor()

    def __hash__(self):
        return hash(repr(self.descriptor()))

    def __repr__(self):
        return f"Ring({self.descriptor()})"

    # payload helpers with shared defaults
    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def is_one(self, a) -> bool:
        return self.eq(a, self.one)

    def eq(self, a, b) -> bool:
        return self.canon(a) == self.canon(b)

    def element(self, payload) -> "RingElement":
        return RingElement(self, self.canon(payload))

    def mod_canonical(self, a, d):
        """Canonical coset representative of a modulo the ideal (d)."""
        if self.is_zero(d):
            return a
        _, r = self.divmod_(a, d)
        return r

    def power(self, a, n: int):
        out = self.one
        for _ in range(n):
            out = self.mul(out, a)
        return out


class IntegerRing(BaseRing):
    kind = "Z"
    is_pid = True
    zero = 0
    one = 1

    def descriptor(self):
        return {"kind": "Z"}

    def canon(self, x):
        if isinstance(x, Fraction):
            if x.denominator != 1:
                raise ParseError(f"{x} is not an integer")
            return int(x)
        if not isinstance(x, int) or isinstance(x, bool):
            raise ParseError(f"integer payload expected, got {x!r}")
        return x

    def from_int(self, n):
        return int(n)

    def add(self, a, b):
        return a + b

    def neg(self, a):
        return -a

    def mul(self, a, b):
        return a * b

    def is_zero(self, a):
        return a == 0

    def is_unit(self, a):
        return a in (1, -1)

    def inv(self, a):
        if not self.is_unit(a):
            raise ZeroDivisionError(f"{a} is not a unit in Z")
        return a

    def divides(self, a, b) -> bool:
        if a == 0:
            return b == 0
        return b % a == 0

    def exact_div(self, a, b):
        q, r = divmod(a, b)
        if r:
            raise ValueError(f"{b} does not divide {a} in Z")
        return q

    def divmod_(self, a, b):
        # symmetric remainder keeps Euclidean descent fast
        q = (2 * a + b) // (2 * b) if b > 0 else -((2 * a - b) // (-2 * b))
        r = a - q * b
        return q, r

    def pivot_size(self, a):
        return abs(a)

    def normalizing_unit(self, a):
        return (1, 1) if a >= 0 else (-1, -1)

    def torsion_order(self, d) -> int:
        return abs(d)

    def mod_canonical(self, a, d):
        return a if d == 0 else a % abs(d)

    def to_fraction(self, x):
        return Fraction(x)

    def from_fraction(self, f: Fraction):
        return self.canon(f)

    def parse(self, text):
        f = _as_fraction(text)
        return self.canon(f)

    def render(self, x) -> str:
        return str(x)


class RationalRing(BaseRing):
    kind = "Q"
    is_pid = True
    is_field = True
    zero = Fraction(0)
    one = Fraction(1)

    def descriptor(self):
        return {"kind": "Q"}

    def canon(self, x):
        if isinstance(x, (int, Fraction)) and not isinstance(x, bool):
            return Fraction(x)
        raise ParseError(f"rational payload expected, got {x!r}")

    def from_int(self, n):
        return Fraction(n)

    def add(self, a, b):
        return a + b

    def neg(self, a):
        return -a

    def mul(self, a, b):
        return a * b

    def is_zero(self, a):
        return a == 0

    def is_unit(self, a):
        return a != 0

    def inv(self, a):
        return 1 / a

    def divides(self, a, b):
        return a != 0 or b == 0

    def exact_div(self, a, b):
        return a / b

    def divmod_(self, a, b):
        return a / b, Fraction(0)

    def pivot_size(self, a):
        return 0 if a == 0 else 1

    def normalizing_unit(self, a):
        if a == 0:
            return (Fraction(1), Fraction(1))
        return (1 / a, a)

    def torsion_order(self, d):
        raise ValueError("fields have no torsion divisors")

    def to_fraction(self, x):
        return x

    def from_fraction(self, f):
        return f

    def parse(self, text):
        return _as_fraction(text)

    def render(self, x) -> str:
        return str(x)


class PrimeFieldRing(BaseRing):
    kind = "Fp"
    is_pid = True
    is_field = True
    is_finite_field = True

    def __init__(self, p: int):
        if p < 2 or any(p % d == 0 for d in range(2, int(math.isqrt(p)) + 1)):
            raise ValueError(f"{p} is not prime")
        self.p = p
        self.zero = 0
        self.one = 1 % p

    def descriptor(self):
        return {"kind": "Fp", "p": self.p}

    def canon(self, x):
        if isinstance(x, Fraction):
            if math.gcd(x.denominator, self.p) != 1:
                raise ParseError(f"{x} has no image in F_{self.p}")
            return x.numerator * pow(x.denominator, -1, self.p) % self.p
        if not isinstance(x, int) or isinstance(x, bool):
            raise ParseError(f"F_p payload expected, got {x!r}")
        return x % self.p

    def from_int(self, n):
        return n % self.p

    def add(self, a, b):
        return (a + b) % self.p

    def neg(self, a):
        return -a % self.p

    def mul(self, a, b):
        return a * b % self.p

    def is_zero(self, a):
        return a % self.p == 0

    def is_unit(self, a):
        return a % self.p != 0

    def inv(self, a):
        return pow(a, -1, self.p)

    def divides(self, a, b):
        return a % self.p != 0 or b % self.p == 0

    def exact_div(self, a, b):
        return a * pow(b, -1, self.p) % self.p

    def divmod_(self, a, b):
        return self.exact_div(a, b), 0

    def pivot_size(self, a):
        return 0 if self.is_zero(a) else 1

    def normalizing_unit(self, a):
        if self.is_zero(a):
            return (1, 1)
        return (pow(a, -1, self.p), a % self.p)

    def torsion_order(self, d):
        raise ValueError("fields have no torsion divisors")

    def parse(self, text):
        return self.canon(_as_fraction(text))

    def render(self, x) -> str:
        return str(x % self.p)


class LocalizedIntegersRing(BaseRing):
    """Integers localized at the prime p: fractions with denominator coprime p."""

    kind = "ZLoc"
    is_pid = True
    zero = Fraction(0)
    one = Fraction(1)

    def __init__(self, p: int):
        PrimeFieldRing(p)  # validates primality
        self.p = p

    def descriptor(self):
        return {"kind": "ZLoc", "p": self.p}

    def canon(self, x):
        if isinstance(x, (int, Fraction)) and not isinstance(x, bool):
            f = Fraction(x)
            if f.denominator % self.p == 0:
                raise ParseError(f"{f} is not p-integral at p={self.p}")
            return f
        raise ParseError(f"localized payload expected, got {x!r}")

    def from_int(self, n):
        return Fraction(n)

    def add(self, a, b):
        return a + b

    def neg(self, a):
        return -a

    def mul(self, a, b):
        return a * b

    def is_zero(self, a):
        return a == 0

    def valuation(self, a) -> int | None:
        return _p_valuation(a, self.p)

    def is_unit(self, a):
        return a != 0 and self.valuation(a) == 0

    def inv(self, a):
        if not self.is_unit(a):
            raise ZeroDivisionError(f"{a} is not a unit at p={self.p}")
        return 1 / a

    def divides(self, a, b):
        if a == 0:
            return b == 0
        if b == 0:
            return True
        return self.valuation(a) <= self.valuation(b)

    def exact_div(self, a, b):
        q = a / b
        if q.denominator % self.p == 0:
            raise ValueError(f"{b} does not divide {a} at p={self.p}")
        return q

    def divmod_(self, a, b):
        if a == 0:
            return Fraction(0), Fraction(0)
        if self.valuation(a) >= self.valuation(b):
            return a / b, Fraction(0)
        return Fraction(0), a

    def pivot_size(self, a):
        v = self.valuation(a)
        return math.inf if v is None else v

    def normalizing_unit(self, a):
        if a == 0:
            return (Fraction(1), Fraction(1))
        v = self.valuation(a)
        unit = a / Fraction(self.p) ** v
        return (1 / unit, unit)

    def torsion_order(self, d) -> int:
        v = self.valuation(d)
        return self.p ** v

    def mod_canonical(self, a, d):
        # canonical coset representative mod (p^v(d)): an integer in [0, p^v)
        if d == 0:
            return a
        pk = self.p ** self.valuation(d)
        if pk == 1:
            return Fraction(0)
        f = Fraction(a)
        return Fraction(f.numerator * pow(f.denominator, -1, pk) % pk)

    def to_fraction(self, x):
        return x

    def from_fraction(self, f):
        return self.canon(f)

    def parse(self, text):
        return self.canon(_as_fraction(text))

    def render(self, x) -> str:
        return str(x)


class IntegersModRing(BaseRing):
    """Z/m with least nonnegative residues; m = 1 is the zero ring."""

    kind = "Zmod"

    def __init__(self, m: int):
        if m < 1:
            raise ValueError("modulus must be positive")
        self.m = m
        self.zero = 0
        self.one = 1 % m

    def descriptor(self):
        return {"kind": "Zmod", "m": self.m}

    def canon(self, x):
        if isinstance(x, Fraction):
            if math.gcd(x.denominator, self.m) != 1:
                raise ParseError(f"{x} has no image mod {self.m}")
            if self.m == 1:
                return 0
            return x.numerator * pow(x.denominator, -1, self.m) % self.m
        if not isinstance(x, int) or isinstance(x, bool):
            raise ParseError(f"residue payload expected, got {x!r}")
        return x % self.m

    def from_int(self, n):
        return n % self.m

    def add(self, a, b):
        return (a + b) % self.m

    def neg(self, a):
        return -a % self.m

    def mul(self, a, b):
        return a * b % self.m

    def is_zero(self, a):
        return a % self.m == 0

    def is_unit(self, a):
        return math.gcd(a, self.m) == 1

    def inv(self, a):
        return pow(a, -1, self.m) if self.m > 1 else 0

    def divides(self, a, b):
        return b % math.gcd(a, self.m) == 0

    def exact_div(self, a, b):
        # solve q*b = a when a lies in the ideal (b)
        g = math.gcd(b, self.m)
        if a % g:
            raise ValueError(f"{b} does not divide {a} mod {self.m}")
        if self.m == 1:
            return 0
        mm = self.m // g
        q = (a // g) * pow(b // g, -1, mm) % mm
        return q % self.m

    def parse(self, text):
        return self.canon(_as_fraction(text))

    def render(self, x) -> str:
        return str(x % self.m)


class PruferModule:
    """The p-primary torsion module Q/Z_(p); elements a/p^k with 0 <= a < p^k."""

    kind = "Prufer"

    def __init__(self, p: int):
        PrimeFieldRing(p)
        self.p = p
        self.zero = Fraction(0)

    def descriptor(self):
        return {"kind": "Prufer", "p": self.p}

    def __eq__(self, other):
        return isinstance(other, PruferModule) and self.p == other.p

    def __hash__(self):
        return hash(("Prufer", self.p))

    def canon(self, x):
        if not isinstance(x, (int, Fraction)) or isinstance(x, bool):
            raise ParseError(f"Prufer payload expected, got {x!r}")
        f = Fraction(x)
        den = f.denominator
        rest = den
        while rest % self.p == 0:
            rest //= self.p
        if rest != 1:
            # kill the part with denominator coprime to p: it lies in Z_(p)
            pk = den // rest
            if pk == 1:
                return Fraction(0)
            a = f.numerator * pow(rest, -1, pk) % pk
            return Fraction(a, pk)
        return Fraction(f.numerator % den, den)

    def add(self, a, b):
        return self.canon(a + b)

    def neg(self, a):
        return self.canon(-a)

    def is_zero(self, a):
        return self.canon(a) == 0

    def eq(self, a, b):
        return self.canon(a) == self.canon(b)

    def scalar_mul(self, scalar: Fraction | int, a):
        return self.canon(Fraction(scalar) * a)

    def parse(self, text):
        return self.canon(_as_fraction(text))

    def render(self, x) -> str:
        return str(x)

    def annihilator_invariant(self, scalar) -> ModuleInvariant:
        """Kernel of multiplication by a base scalar: Z/p^v for v = v_p(scalar)."""
        v = _p_valuation(Fraction(scalar), self.p)
        if v is None:
            raise Inconclusive("annihilator of 0 on the Prufer module is not "
                               "finitely generated")
        if v <= 0:
            return ModuleInvariant.zero()
        return ModuleInvariant(0, (self.p ** v,))

    def is_divisible_by(self, scalar) -> bool:
        v = _p_valuation(Fraction(scalar), self.p)
        return v is not None


class PresentedModule:
    """Finitely presented module coker(P) over a PID-class base ring."""

    kind = "FinPres"

    def __init__(self, base: BaseRing, presentation: Matrix):
        if presentation.ring != base:
            raise RingMismatch("presentation matrix over the wrong ring")
        if not base.is_pid:
            raise UnsupportedRing("presented square-zero modules need a PID-class base")
        self.base = base
        self.presentation = presentation
        self.rank = presentation.nrows
        self._snf = smith_normal_form(presentation)
        self.zero = (base.zero,) * self.rank

    def descriptor(self):
        return {"kind": "FinPres",
                "matrix": [[self.base.render(x) for x in row]
                           for row in self.presentation.rows],
                "rows": self.presentation.nrows,
                "cols": self.presentation.ncols}

    def __eq__(self, other):
        return isinstance(other, PresentedModule) and self.descriptor() == other.descriptor()

    def __hash__(self):
        return hash(repr(self.descriptor()))

    def canon(self, x):
        if not isinstance(x, (tuple, list)) or len(x) != self.rank:
            raise ParseError(f"coordinate vector of length {self.rank} expected")
        base = self.base
        vec = Matrix.column(base, [base.canon(c) for c in x])
        c = self._snf.U @ vec
        reduced = []
        for j in range(self.rank):
            val = c.rows[j][0]
            if j < self._snf.rank:
                d = self._snf.D.rows[j][j]
                if base.is_unit(d):
                    val = base.zero
                else:
                    val = base.mod_canonical(val, d)
            reduced.append([val])
        out = self._snf.U_inv @ Matrix(base, reduced, self.rank, 1)
        return tuple(out.rows[i][0] for i in range(self.rank))

    def add(self, a, b):
        return self.canon(tuple(self.base.add(x, y) for x, y in zip(a, b)))

    def neg(self, a):
        return self.canon(tuple(self.base.neg(x) for x in a))

    def is_zero(self, a):
        return self.canon(a) == self.zero

    def eq(self, a, b):
        return self.canon(a) == self.canon(b)

    def scalar_mul(self, scalar, a):
        return self.canon(tuple(self.base.mul(self.base.canon(scalar), x) for x in a))

    def parse(self, value):
        if isinstance(value, str):
            value = value.split(",")
        return self.canon(tuple(self.base.parse(v) if isinstance(v, str) else v
                                for v in value))

    def render(self, x):
        return [self.base.render(c) for c in x]

    def invariant(self) -> ModuleInvariant:
        return cokernel_invariant_matrix(self.presentation)

    def annihilator_invariant(self, scalar) -> ModuleInvariant:
        """Kernel of multiplication by a base scalar on coker(P)."""
        base = self.base
        s = base.canon(scalar)
        if base.is_zero(s):
            return self.invariant()
        g = self.rank
        scaled = Matrix.identity(base, g).scale(s)
        block = Matrix.hstack(base, [scaled, self.presentation], g)
        ker = kernel_basis(block)
        lifts = ker.submatrix(range(g), range(ker.ncols))
        gens = Matrix.hstack(base, [lifts, self.presentation], g)
        return _presented_quotient_invariant(gens, self.presentation)


def _presented_quotient_invariant(gens: Matrix, rels: Matrix) -> ModuleInvariant:
    """Invariant of span(gens)/span(rels), both inside the same free module."""
    from .linalg import column_space_basis
    basis = column_space_basis(gens)
    if basis.ncols == 0:
        return ModuleInvariant.zero()
    coords = solve_exact(basis, rels)
    return cokernel_invariant_matrix(coords)


class SquareZeroRing(BaseRing):
    """base (+) M with M an ideal of square zero."""

    kind = "SquareZero"

    def __init__(self, base: BaseRing, module):
        self.base = base
        self.module = module
        self.zero = (base.zero, module.zero)
        self.one = (base.one, module.zero)

    def descriptor(self):
        return {"kind": "SquareZero", "base": self.base.descriptor(),
                "module": self.module.descriptor()}

    def canon(self, x):
        if not isinstance(x, (tuple, list)) or len(x) != 2:
            raise ParseError("square-zero payload is a pair (base, module)")
        return (self.base.canon(x[0]), self.module.canon(x[1]))

    def from_int(self, n):
        return (self.base.from_int(n), self.module.zero)

    def add(self, a, b):
        return (self.base.add(a[0], b[0]), self.module.add(a[1], b[1]))

    def neg(self, a):
        return (self.base.neg(a[0]), self.module.neg(a[1]))

    def mul(self, a, b):
        # (a, m)(a', m') = (aa', am' + a'm); the module part squares to zero
        return (self.base.mul(a[0], b[0]),
                self.module.add(self.module.scalar_mul(a[0], b[1]),
                                self.module.scalar_mul(b[0], a[1])))

    def is_zero(self, a):
        return self.base.is_zero(a[0]) and self.module.is_zero(a[1])

    def is_unit(self, a):
        return self.base.is_unit(a[0])

    def inv(self, a):
        b = self.base.inv(a[0])
        minus = self.module.neg(self.module.scalar_mul(self.base.mul(b, b), a[1]))
        return (b, minus)

    def parse(self, value):
        if isinstance(value, (tuple, list)) and len(value) == 2:
            a = self.base.parse(value[0]) if isinstance(value[0], str) else self.base.canon(value[0])
            m = self.module.parse(value[1]) if isinstance(value[1], str) else self.module.canon(value[1])
            return (a, m)
        if isinstance(value, str):
            return (self.base.parse(value), self.module.zero)
        raise ParseError(f"cannot parse square-zero element from {value!r}")

    def render(self, x):
        return [self.base.render(x[0]), self.module.render(x[1])]


class TruncatedCompletionRing(BaseRing):
    """lim_n R/I^n presented at precision N by its stage-N face.

    Equality is equality modulo I^N; every derived answer is tagged
    "modulo I^N" unless the quotient chain stabilizes, in which case the
    completion literally equals the stage-N quotient and answers are exact.
    """

    kind = "TruncComp"

    def __init__(self, base: BaseRing, generators: Sequence, precision: int):
        if precision < 1:
            raise ValueError("precision must be >= 1")
        gens = tuple(base.canon(g) for g in generators)
        if not gens:
            raise ValueError("ideal needs at least one generator")
        self.base = base
        self.generators = gens
        self.precision = precision
        stages = []
        for n in range(1, precision + 1):
            ring_n, map_n = quotient_ring_raw(base, gens, n, "powers")
            stages.append((ring_n, map_n))
        self.stage_rings = tuple(s[0] for s in stages)
        self.stage_maps = tuple(s[1] for s in stages)
        self.face = self.stage_rings[-1]
        self.zero = self.face.zero
        self.one = self.face.one

    def descriptor(self):
        return {"kind": "TruncComp", "base": self.base.descriptor(),
                "ideal": [self.base.render(g) for g in self.generators],
                "precision": self.precision}

    def moduli(self) -> list[int | None]:
        """Per-stage modulus when the stage is Z/m, else None (stage = base)."""
        out = []
        for ring_n in self.stage_rings:
            out.append(ring_n.m if isinstance(ring_n, IntegersModRing) else None)
        return out

    def is_stabilized(self) -> bool:
        mods = self.moduli()
        if any(m is None for m in mods):
            # zero ideal: the completion is the base ring itself
            return all(m is None for m in mods)
        if mods[-1] == 1:
            return True
        return self.precision >= 2 and mods[-1] == mods[-2]

    @property
    def validity(self) -> str:
        return "exact" if self.is_stabilized() else f"modulo I^{self.precision}"

    # face delegation
    def canon(self, x):
        return self.face.canon(x)

    def from_int(self, n):
        return self.face.from_int(n)

    def add(self, a, b):
        return self.face.add(a, b)

    def neg(self, a):
        return self.face.neg(a)

    def mul(self, a, b):
        return self.face.mul(a, b)

    def is_zero(self, a):
        return self.face.is_zero(a)

    def is_unit(self, a):
        return self.face.is_unit(a)

    def inv(self, a):
        return self.face.inv(a)

    def divides(self, a, b):
        return self.face.divides(a, b)

    def exact_div(self, a, b):
        return self.face.exact_div(a, b)

    def parse(self, text):
        return self.face.parse(text)

    def render(self, x):
        return self.face.render(x)

    def reduction_from_base(self) -> "RingMap":
        return RingMap(self.base, self, self.stage_maps[-1].fn,
                       label=f"completion at precision {self.precision}")

    def extended_ideal_generators(self) -> tuple:
        return tuple(self.canon(self.stage_maps[-1].fn(g)) for g in self.generators)


# -- elements and ideals ------------------------------------------------------


@dataclass(frozen=True)
class RingElement:
    """A canonical payload paired with its ring; thin operator sugar."""

    ring: BaseRing
    payload: object

    def __post_init__(self):
        object.__setattr__(self, "payload", self.ring.canon(self.payload))

    def _coerce(self, other):
        if isinstance(other, RingElement):
            if other.ring != self.ring:
                raise RingMismatch("elements from different rings")
            return other.payload
        return self.ring.canon(other)

    def __add__(self, other):
        return RingElement(self.ring, self.ring.add(self.payload, self._coerce(other)))

    def __mul__(self, other):
        return RingElement(self.ring, self.ring.mul(self.payload, self._coerce(other)))

    def __neg__(self):
        return RingElement(self.ring, self.ring.neg(self.payload))

    def __sub__(self, other):
        return self + (-RingElement(self.ring, self._coerce(other)))

    def is_zero(self) -> bool:
        return self.ring.is_zero(self.payload)

    def is_unit(self) -> bool:
        return self.ring.is_unit(self.payload)

    def render(self):
        return self.ring.render(self.payload)


@dataclass(frozen=True)
class IdealSpec:
    """A finitely generated ideal, recorded by its generator sequence."""

    ring: BaseRing
    generators: tuple

    def __post_init__(self):
        gens = tuple(self.ring.canon(g) for g in self.generators)
        if not gens:
            raise ValueError("an ideal spec needs at least one generator")
        object.__setattr__(self, "generators", gens)

    @property
    def r(self) -> int:
        return len(self.generators)

    def elements(self) -> tuple[RingElement, ...]:
        return tuple(RingElement(self.ring, g) for g in self.generators)

    def to_json(self) -> dict:
        return {"ring": self.ring.descriptor(),
                "generators": [self.ring.render(g) for g in self.generators]}


class RingMap:
    """A ring homomorphism applied payloadwise; composable."""

    def __init__(self, source: BaseRing, target: BaseRing, fn, label: str = ""):
        self.source = source
        self.target = target
        self.fn = fn
        self.label = label or f"{source.kind} -> {target.kind}"

    def __call__(self, payload):
        return self.target.canon(self.fn(payload))

    def apply_matrix(self, M: Matrix) -> Matrix:
        if M.ring != self.source:
            raise RingMismatch("matrix is not over the map's source ring")
        return M.map_entries(self.fn, ring=self.target)

    def compose(self, earlier: "RingMap") -> "RingMap":
        if earlier.target != self.source:
            raise RingMismatch("maps do not compose")
        return RingMap(earlier.source, self.target,
                       lambda x: self.fn(earlier.fn(x)),
                       label=f"{self.label} o {earlier.label}")

    @classmethod
    def identity(cls, ring: BaseRing) -> "RingMap":
        return cls(ring, ring, lambda x: x, label="id")

    def __repr__(self):
        return f"RingMap({self.label})"


# -- ideal content and quotients ---------------------------------------------


def _int_gcd(values) -> int:
    g = 0
    for v in values:
        g = math.gcd(g, abs(v))
    return g


def ideal_content(ring: BaseRing, generators: Sequence, n: int,
                  flavor: str = "powers"):
    """A principal generator of I^n (flavor "powers") or <s_i^n>
    ("generator-powers"), in the rings where powered ideals are principal.

    Returns a payload of `ring`; None means the content is not computable for
    the ring class.
    """
    if flavor not in ("powers", "generator-powers"):
        raise ValueError(f"unknown flavor {flavor!r}")
    if isinstance(ring, IntegerRing):
        g = _int_gcd(generators)
        if flavor == "powers":
            return g ** n
        return _int_gcd([x ** n for x in generators])
    if isinstance(ring, (RationalRing, PrimeFieldRing)):
        return ring.one if any(not ring.is_zero(g) for g in generators) else ring.zero
    if isinstance(ring, LocalizedIntegersRing):
        vals = [ring.valuation(g) for g in generators]
        finite = [v for v in vals if v is not None]
        if not finite:
            return ring.zero
        return Fraction(ring.p) ** (min(finite) * n)
    if isinstance(ring, IntegersModRing):
        return _zmod_power_modulus(ring.m, generators, n, flavor) % ring.m
    if isinstance(ring, TruncatedCompletionRing):
        return ideal_content(ring.face, generators, n, flavor)
    if isinstance(ring, SquareZeroRing):
        if any(not ring.module.is_zero(g[1]) for g in generators):
            return None
        return ideal_content(ring.base, [g[0] for g in generators], n, flavor)
    return None


def _zmod_power_modulus(m: int, generators: Sequence[int], n: int, flavor: str) -> int:
    """Modulus of (Z/m) / I^n as a divisor of m; m itself means the zero ideal."""
    g = math.gcd(_int_gcd([int(x) for x in generators]), m)
    if flavor == "powers":
        return math.gcd(g ** n, m)
    return math.gcd(_int_gcd([int(x) ** n for x in generators]), m)


def quotient_ring_raw(ring: BaseRing, generators: Sequence, n: int,
                      flavor: str = "powers") -> tuple[BaseRing, RingMap]:
    """R / I^n (or R / <s_i^n>) plus the reduction map, when representable."""
    generators = [ring.canon(g) for g in generators]
    if isinstance(ring, IntegerRing):
        c = ideal_content(ring, generators, n, flavor)
        if c == 0:
            return ring, RingMap.identity(ring)
        target = IntegersModRing(c)
        return target, RingMap(ring, target, lambda x, m=c: x % m, label=f"Z -> Z/{c}")
    if isinstance(ring, (RationalRing, PrimeFieldRing)):
        c = ideal_content(ring, generators, n, flavor)
        if ring.is_zero(c):
            return ring, RingMap.identity(ring)
        target = IntegersModRing(1)
        return target, RingMap(ring, target, lambda x: 0, label="-> 0")
    if isinstance(ring, LocalizedIntegersRing):
        c = ideal_content(ring, generators, n, flavor)
        if c == 0:
            return ring, RingMap.identity(ring)
        pk = int(c) if c >= 1 else 1
        target = IntegersModRing(pk)

        def reduce_loc(x, m=pk):
            f = Fraction(x)
            if m == 1:
                return 0
            return f.numerator * pow(f.denominator, -1, m) % m

        return target, RingMap(ring, target, reduce_loc, label=f"Z_(p) -> Z/{pk}")
    if isinstance(ring, IntegersModRing):
        m2 = _zmod_power_modulus(ring.m, generators, n, flavor)
        target = IntegersModRing(m2)
        return target, RingMap(ring, target, lambda x, m=m2: x % m,
                               label=f"Z/{ring.m} -> Z/{m2}")
    if isinstance(ring, TruncatedCompletionRing):
        face_ring, face_map = quotient_ring_raw(ring.face, generators, n, flavor)
        return face_ring, RingMap(ring, face_ring, face_map.fn,
                                  label=f"truncated completion -> {face_ring.kind}")
    if isinstance(ring, SquareZeroRing):
        if any(not ring.module.is_zero(g[1]) for g in generators):
            raise UnsupportedQuotient(
                "quotients are supported only for generators with zero module part")
        base_gens = [g[0] for g in generators]
        c = ideal_content(ring.base, base_gens, n, flavor)
        if ring.base.is_zero(c):
            return ring, RingMap.identity(ring)
        if not _module_absorbed(ring.module, c):
            raise UnsupportedQuotient(
                "the module part of the square-zero extension does not vanish "
                "in this quotient")
        base_ring, base_map = quotient_ring_raw(ring.base, base_gens, n, flavor)
        return base_ring, RingMap(ring, base_ring, lambda x: base_map.fn(x[0]),
                                  label=f"square-zero -> {base_ring.kind}")
    raise UnsupportedQuotient(f"no quotient procedure for ring kind {ring.kind}")


def _module_absorbed(module, content) -> bool:
    """Does content * M = M hold, so that M dies in R/(content)?"""
    if isinstance(module, PruferModule):
        return module.is_divisible_by(content)
    if isinstance(module, PresentedModule):
        base = module.base
        g = module.rank
        scaled = Matrix.identity(base, g).scale(base.canon(content))
        block = Matrix.hstack(base, [module.presentation, scaled], g)
        return cokernel_invariant_matrix(block).is_zero()
    return False


def quotient_ring(ideal: IdealSpec, n: int, flavor: str = "powers"
                  ) -> tuple[BaseRing, RingMap]:
    return quotient_ring_raw(ideal.ring, ideal.generators, n, flavor)


def ring_module_invariant(ring: BaseRing, validity: str = "exact") -> ModuleInvariant:
    """The invariant of a quotient ring viewed as a module over the source."""
    if isinstance(ring, IntegersModRing):
        if ring.m == 1:
            return ModuleInvariant.zero(validity)
        return ModuleInvariant(0, (ring.m,), validity)
    if isinstance(ring, (IntegerRing, RationalRing, PrimeFieldRing,
                         LocalizedIntegersRing)):
        return ModuleInvariant(1, (), validity)
    raise UnsupportedRing(f"no module invariant for ring kind {ring.kind}")


# -- public ops of the rings module -------------------------------------------


def cokernel_invariant(A: Matrix) -> ModuleInvariant:
    """Invariant of (target of A)/im(A); PID-class directly, Z/m by lifting."""
    ring = A.ring
    if getattr(ring, "is_pid", False):
        return cokernel_invariant_matrix(A)
    if isinstance(ring, IntegersModRing):
        Z = IntegerRing()
        lifted = A.map_entries(lambda x: int(x), ring=Z)
        extra = Matrix.identity(Z, A.nrows).scale(ring.m)
        return cokernel_invariant_matrix(Matrix.hstack(Z, [lifted, extra], A.nrows))
    if isinstance(ring, TruncatedCompletionRing):
        face = A.map_entries(lambda x: x, ring=ring.face)
        return cokernel_invariant(face).with_validity(ring.validity)
    raise UnsupportedRing(f"no cokernel procedure for ring kind {ring.kind}")


def annihilator_of(element: RingElement) -> ModuleInvariant:
    """Isomorphism class of Ann_R(s) as an R-module."""
    ring, s = element.ring, element.payload
    if isinstance(ring, (IntegerRing, RationalRing, PrimeFieldRing,
                         LocalizedIntegersRing)):
        if ring.is_zero(s):
            return ModuleInvariant(1)
        return ModuleInvariant.zero()
    if isinstance(ring, IntegersModRing):
        return _zmod_annihilator(ring.m, s)
    if isinstance(ring, TruncatedCompletionRing):
        return _truncated_annihilator(ring, s)
    if isinstance(ring, SquareZeroRing):
        if not ring.module.is_zero(s[1]):
            raise Inconclusive("annihilators need a generator of the form (s, 0)")
        base_part = annihilator_of(RingElement(ring.base, s[0]))
        module_part = ring.module.annihilator_invariant(s[0])
        return merge_invariants(base_part, module_part)
    raise Inconclusive(f"no annihilator procedure for ring kind {ring.kind}")


def _zmod_annihilator(m: int, s: int, validity: str = "exact") -> ModuleInvariant:
    if m == 1:
        return ModuleInvariant.zero(validity)
    g = math.gcd(s, m)
    if g == 1:
        return ModuleInvariant.zero(validity)
    return ModuleInvariant(0, (g,), validity)


def _truncated_annihilator(ring: TruncatedCompletionRing, s) -> ModuleInvariant:
    """Annihilator in the inverse-limit ring, decided per prime of the chain.

    Stabilized prime parts are finite rings, computed exactly.  A strictly
    growing prime part is a p-adic integer domain: a generator with nonzero
    image at precision N has finite valuation, hence zero annihilator at every
    precision; a zero image cannot be distinguished from a small nonzero
    element, so the class has no decision procedure there.
    """
    mods = ring.moduli()
    if any(m is None for m in mods):
        # zero ideal: completion is the base ring itself
        return annihilator_of(RingElement(ring.base, s))
    mN = mods[-1]
    if mN == 1:
        return ModuleInvariant.zero()
    s_int = int(s) % mN
    if ring.is_stabilized():
        return _zmod_annihilator(mN, s_int)
    parts = []
    for p, e_last in _factorize(mN).items():
        chain = [_p_valuation(m, p) or 0 for m in mods]
        pe = p ** e_last
        if ring.precision >= 2 and chain[-1] == chain[-2]:
            parts.append(_zmod_annihilator(pe, s_int % pe))
        else:
            if s_int % pe == 0:
                raise Inconclusive(
                    f"generator vanishes at precision in the growing {p}-adic "
                    "factor; annihilator undecidable from finite data")
            parts.append(ModuleInvariant.zero())
    return merge_invariants(*parts).with_validity(ring.validity)


def invariant_killed_by(inv: ModuleInvariant, ring: BaseRing, s) -> bool:
    """Does multiplication by s annihilate a module with this invariant?

    Torsion divisors are recorded as integer orders, so the check is a
    divisibility test once s is put in integer form; a nonzero free part
    survives any nonzero multiplier.
    """
    s_int = _integer_form(ring, s)
    if s_int == 0:
        return True
    if inv.free_rank:
        return False
    return all(s_int % d == 0 for d in inv.torsion)


def _integer_form(ring: BaseRing, s) -> int:
    """Integer witness of the divisibility class of s (p^v over Z_(p))."""
    s = ring.canon(s)
    if isinstance(ring, IntegerRing):
        return abs(s)
    if isinstance(ring, (IntegersModRing,)):
        return int(s) % ring.m if ring.m > 1 else 0
    if isinstance(ring, LocalizedIntegersRing):
        v = ring.valuation(s)
        return 0 if v is None else ring.p ** v
    if isinstance(ring, (RationalRing, PrimeFieldRing)):
        return 0 if ring.is_zero(s) else 1
    if isinstance(ring, TruncatedCompletionRing):
        return _integer_form(ring.face, s)
    if isinstance(ring, SquareZeroRing):
        if ring.module.is_zero(s[1]):
            return _integer_form(ring.base, s[0])
        raise Inconclusive("no integer form for elements with module part")
    raise UnsupportedRing(f"no integer form for ring kind {ring.kind}")


# convenience constructors mirroring the descriptor vocabulary
def Z() -> IntegerRing:
    return IntegerRing()


def Q() -> RationalRing:
    return RationalRing()


def Fp(p: int) -> PrimeFieldRing:
    return PrimeFieldRing(p)


def Zmod(m: int) -> IntegersModRing:
    return IntegersModRing(m)


def ZLoc(p: int) -> LocalizedIntegersRing:
    return LocalizedIntegersRing(p)


def truncated_completion(base: BaseRing, generators: Sequence, precision: int
                         ) -> TruncatedCompletionRing:
    return TruncatedCompletionRing(base, generators, precision)


def square_zero(base: BaseRing, module) -> SquareZeroRing:
    return SquareZeroRing(base, module)


def counterexample_ring(p: int) -> SquareZeroRing:
    """Z_(p) (+) Q/Z_(p): derived complete data fail to be separated here."""
    return SquareZeroRing(LocalizedIntegersRing(p), PruferModule(p))
