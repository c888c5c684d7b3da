from __future__ import annotations

from decimal import ROUND_HALF_UP, Decimal, localcontext
from fractions import Fraction


def half_up(value: Fraction | int | float, digits: int) -> Decimal:
    """Round half away from zero; exact for Fraction input."""
    if isinstance(value, float):
        value = Fraction(repr(value))
    value = Fraction(value)
    with localcontext() as ctx:
        ctx.prec = 50
        d = Decimal(value.numerator) / Decimal(value.denominator)
        return d.quantize(Decimal(1).scaleb(-digits), rounding=ROUND_HALF_UP)


def percent(count: int, total: int, digits: int = 2) -> Decimal:
    return half_up(Fraction(100 * count, total), digits)


def fmt(value: Fraction | float, digits: int = 3) -> str:
    return str(half_up(value, digits))
