"""Exact rational scalars and small vector helpers.

All quantities in this package are rational numbers; nothing is ever
rounded.  The scalar type is gmpy2's ``mpq`` (always in lowest terms with a
positive denominator), which is a drop-in replacement for
``fractions.Fraction`` but considerably faster.
"""

from __future__ import annotations

from gmpy2 import gcd, mpq, mpz

Rat = type(mpq(0))

ZERO = mpq(0)
ONE = mpq(1)


def rat(value, den=None):
    """Coerce ints, "p/q" strings, Fractions or mpq values to mpq."""
    if den is not None:
        return mpq(value, den)
    if isinstance(value, str):
        return mpq(value.strip())
    if isinstance(value, float):
        raise TypeError(f"refusing to build an exact rational from float {value!r}")
    return mpq(value)


def fmt(q) -> str:
    """Render a rational as "p/q" (just "p" for integers)."""
    q = mpq(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def approx(q, sig: int = 6) -> str:
    """Decimal approximation to `sig` significant digits, display only."""
    f = float(mpq(q))
    return f"{f:.{sig}g}"


def rat_vector(values) -> tuple:
    return tuple(rat(v) for v in values)


def rat_matrix(rows) -> tuple:
    return tuple(rat_vector(r) for r in rows)


def dot(u, v):
    s = ZERO
    for a, b in zip(u, v):
        if a and b:
            s += a * b
    return s


def vec_add(u, v) -> tuple:
    return tuple(a + b for a, b in zip(u, v))


def vec_sub(u, v) -> tuple:
    return tuple(a - b for a, b in zip(u, v))


def vec_scale(c, u) -> tuple:
    return tuple(c * a for a in u)


def vec_neg(u) -> tuple:
    return tuple(-a for a in u)


def unit(d: int, i: int) -> tuple:
    """Standard basis vector e_i (0-based) in dimension d."""
    return tuple(ONE if j == i else ZERO for j in range(d))


def zeros(d: int) -> tuple:
    return (ZERO,) * d


def is_zero_vector(u) -> bool:
    return all(not a for a in u)


def primitive(u) -> tuple:
    """Scale a nonzero rational vector to coprime integers, preserving direction."""
    den_lcm = mpz(1)
    for a in u:
        den_lcm = den_lcm * a.denominator // gcd(den_lcm, a.denominator)
    ints = [mpz(a.numerator) * (den_lcm // a.denominator) for a in u]
    g = mpz(0)
    for n in ints:
        g = gcd(g, n)
    if g == 0:
        raise ValueError("zero vector has no primitive form")
    return tuple(mpq(n, g) for n in ints)
