"""Small exact-arithmetic helpers shared across the package.

Rationals are serialized as decimal strings "p/q" (or "p" when q == 1);
no floats ever enter persisted or verified data.
"""
from fractions import Fraction

import gmpy2


def parse_rational(text: str) -> Fraction:
    """Parse "p/q" (or plain "p") into an exact Fraction.

    Raises ValueError on malformed input, including q == 0.
    """
    if not isinstance(text, str):
        raise ValueError(f"rational must be a string, got {type(text).__name__}")
    s = text.strip()
    num, sep, den = s.partition("/")
    try:
        p = int(num)
        q = int(den) if sep else 1
    except ValueError:
        raise ValueError(f"malformed rational {text!r}") from None
    if q == 0:
        raise ValueError(f"zero denominator in rational {text!r}")
    return Fraction(p, q)


def format_rational(x) -> str:
    """Inverse of parse_rational; integers render without the slash."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def ceil_div(a: int, b: int) -> int:
    """ceil(a/b) for positive b."""
    return -((-a) // b)


def ceil_root(t: int, q: int) -> int:
    """Smallest x >= 0 with x**q >= t (t >= 0, q >= 1)."""
    if t <= 0:
        return 0
    r, exact = gmpy2.iroot(t, q)
    r = int(r)
    return r if exact else r + 1


def floor_root(t: int, q: int) -> int:
    """Largest x with x**q <= t (t >= 0, q >= 1)."""
    if t < 0:
        raise ValueError("floor_root of negative")
    return int(gmpy2.iroot(t, q)[0])
