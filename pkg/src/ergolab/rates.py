"""Rate functions psi(N) -> +0 with exact rational evaluation.

Three kinds:

  power     psi(N) = N**(-alpha), alpha a positive rational.  Irrational
            values are bracketed by exact rationals: eval() returns an
            upper bound psibar with  psi <= psibar <= 2*psi  (exact when
            N**p is a perfect q-th power), eval_lower() the matching
            lower bound.
  logpower  psi(N) = (ilog2(N)+1)**(-beta) = bit_length(N)**(-beta);
            exact for integer beta, bracketed otherwise.
  table     explicit step function from (N, value) breakpoints with
            nonincreasing values, extended by the last value.

Every kind is positive and nonincreasing; checks that need "psi small"
use eval() and checks that need "psi large" use eval_lower(), so each
verified inequality is true for the real psi.

Bracket construction, used when the root is irrational: with alpha = p/q
in lowest terms and B = bit_length(N), take the scale D = 2**e,

    e = ceil(alpha*B) + B + bit_length(q//p) + 7,

and return ceil(D * N**(-alpha)) / D (floor for the lower bound).  Since
2**ceil(alpha*B) >= N**alpha, the rounding error 1/D is at most
psi(N) * 2**-(B + bit_length(q//p) + 7) < psi(N) * alpha/(8N), which is
below the one-step decay of psi itself (psi(N)/psi(N+1) >= 1 + alpha/(2N));
hence eval() is nonincreasing in N — the property threshold() binarily
searches on.
"""
from fractions import Fraction

import gmpy2

from .rational import ceil_div, ceil_root, floor_root, format_rational, parse_rational

RATE_KINDS = ("power", "logpower", "table")


class Unsatisfiable(Exception):
    """threshold(y) has no answer: inf psi >= y."""


def _bracket_scale(base: int, p: int, q: int) -> int:
    b = base.bit_length()
    e = ceil_div(p * b, q) + b + (q // p).bit_length() + 7
    return 1 << e


def _neg_pow_upper(base: int, p: int, q: int) -> Fraction:
    """Exact rational upper bound of base**(-p/q); exact at perfect powers."""
    big = base**p
    r, exact = gmpy2.iroot(big, q)
    if exact:
        return Fraction(1, int(r))
    d = _bracket_scale(base, p, q)
    x = ceil_root(ceil_div(d**q, big), q)
    return Fraction(x, d)


def _neg_pow_lower(base: int, p: int, q: int) -> Fraction:
    """Exact rational lower bound of base**(-p/q); exact at perfect powers."""
    big = base**p
    r, exact = gmpy2.iroot(big, q)
    if exact:
        return Fraction(1, int(r))
    d = _bracket_scale(base, p, q)
    y = floor_root(d**q // big, q)
    return Fraction(y, d)


class Rate:
    """A positive nonincreasing rate function with exact rational brackets."""

    __slots__ = ("kind", "param", "points")

    def __init__(self, kind, param=None, points=None):
        if kind not in RATE_KINDS:
            raise ValueError(f"unknown rate kind {kind!r}")
        self.kind = kind
        if kind in ("power", "logpower"):
            param = Fraction(param)
            if param <= 0:
                raise ValueError(f"{kind} exponent must be positive, got {param}")
            self.param = param
            self.points = None
        else:
            if param is not None:
                raise ValueError("table rate takes points, not a param")
            pts = [(int(n), Fraction(v)) for n, v in points]
            if not pts:
                raise ValueError("table rate needs at least one point")
            if pts[0][0] != 1:
                raise ValueError("table rate must start at N=1")
            for (n1, v1), (n2, v2) in zip(pts, pts[1:]):
                if n2 <= n1:
                    raise ValueError("table breakpoints must increase")
                if v2 > v1:
                    raise ValueError("table values must be nonincreasing")
            if pts[-1][1] <= 0:
                raise ValueError("table values must stay positive")
            self.param = None
            self.points = tuple(pts)

    @classmethod
    def power(cls, alpha):
        return cls("power", alpha)

    @classmethod
    def logpower(cls, beta):
        return cls("logpower", beta)

    @classmethod
    def table(cls, points):
        return cls("table", points=points)

    def __repr__(self):
        if self.kind == "table":
            return f"Rate.table({list(self.points)!r})"
        return f"Rate.{self.kind}({self.param!r})"

    def __eq__(self, other):
        return (isinstance(other, Rate)
                and (self.kind, self.param, self.points)
                == (other.kind, other.param, other.points))

    def __hash__(self):
        return hash((self.kind, self.param, self.points))

    def _table_value(self, n):
        val = self.points[0][1]
        for bp, v in self.points:
            if bp <= n:
                val = v
            else:
                break
        return val

    def eval(self, n: int) -> Fraction:
        """psibar(N): exact value, or an upper bracket within a factor 2."""
        if n < 1:
            raise ValueError(f"rate argument must be >= 1, got {n}")
        if self.kind == "power":
            return _neg_pow_upper(n, self.param.numerator, self.param.denominator)
        if self.kind == "logpower":
            k = int(n).bit_length()
            return _neg_pow_upper(k, self.param.numerator, self.param.denominator)
        return self._table_value(n)

    def eval_lower(self, n: int) -> Fraction:
        """psi_low(N): matching lower bracket (equal to eval at exact points)."""
        if n < 1:
            raise ValueError(f"rate argument must be >= 1, got {n}")
        if self.kind == "power":
            return _neg_pow_lower(n, self.param.numerator, self.param.denominator)
        if self.kind == "logpower":
            k = int(n).bit_length()
            return _neg_pow_lower(k, self.param.numerator, self.param.denominator)
        return self._table_value(n)

    def infimum(self) -> Fraction:
        """Greatest lower bound of the rate (0 for power/logpower kinds)."""
        if self.kind == "table":
            return self.points[-1][1]
        return Fraction(0)

    def threshold(self, y, strict=True) -> int:
        """Least N >= 1 with eval(N) < y (strict=False: eval(N) <= y).

        Exponential growth then binary search over the nonincreasing
        eval(); raises Unsatisfiable when the rate never gets there
        (table kinds whose final value is not below y).
        """
        y = Fraction(y)
        if y <= 0 and strict:
            raise Unsatisfiable(f"threshold target must be positive, got {y}")
        inf = self.infimum()
        if inf >= y if strict else inf > y:
            raise Unsatisfiable(
                f"rate never drops below {format_rational(y)} "
                f"(infimum {format_rational(inf)})")

        def hit(n):
            v = self.eval(n)
            return v < y if strict else v <= y

        if hit(1):
            return 1
        hi = 2
        while not hit(hi):
            hi *= 2
        lo = hi // 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if hit(mid):
                hi = mid
            else:
                lo = mid
        return hi

    def to_config(self) -> dict:
        if self.kind == "table":
            return {"kind": "table",
                    "points": [[str(n), format_rational(v)]
                               for n, v in self.points]}
        return {"kind": self.kind, "param": format_rational(self.param)}

    @classmethod
    def from_config(cls, doc: dict) -> "Rate":
        if not isinstance(doc, dict):
            raise ValueError("rate spec must be an object")
        kind = doc.get("kind")
        if kind not in RATE_KINDS:
            raise ValueError(f"unknown rate kind {kind!r}")
        allowed = {"kind", "points"} if kind == "table" else {"kind", "param"}
        extra = set(doc) - allowed
        if extra:
            raise ValueError(f"unknown rate keys {sorted(extra)}")
        if kind == "table":
            raw = doc.get("points")
            if not isinstance(raw, list):
                raise ValueError("table rate needs a points list")
            points = []
            for item in raw:
                if not isinstance(item, (list, tuple)) or len(item) != 2:
                    raise ValueError(f"malformed table point {item!r}")
                points.append((int(item[0]), parse_rational(item[1])))
            return cls.table(points)
        if "param" not in doc:
            raise ValueError(f"{kind} rate needs a param")
        return cls(kind, parse_rational(doc["param"]))
