"""Small helpers around gmpy2 for extended-precision arithmetic.

Values are plain ``gmpy2.mpfr`` / ``gmpy2.mpc`` scalars; sequences of them are
kept in numpy object arrays so the same polynomial code runs on both float64
and extended-precision coefficients.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from decimal import Decimal

import gmpy2
import numpy as np

GUARD_BITS = 64


def bits_for(digits: int) -> int:
    return int(math.ceil(digits * math.log2(10))) + GUARD_BITS


@contextmanager
def working_precision(digits: int):
    """Run the enclosed block with mpfr precision of at least ``digits`` decimals."""
    with gmpy2.context(gmpy2.get_context(), precision=bits_for(digits)):
        yield


def precision_of(values):
    """Context matching the largest mpfr precision in ``values``.

    gmpy2 rounds every result to the context precision, not to the precision
    of the operands, so extended arithmetic must run inside this context.
    """
    # arrays are built in a single context, so the end points are representative
    ends = [v for v in (values[:1] + values[-1:]) if isinstance(v, gmpy2.mpfr)] if len(values) else []
    bits = max([v.precision for v in ends] + [gmpy2.get_context().precision])
    return gmpy2.context(gmpy2.get_context(), precision=bits)


def is_extended(values) -> bool:
    return isinstance(values, np.ndarray) and values.dtype == object


def to_mpfr_array(values) -> np.ndarray:
    out = np.empty(len(values), dtype=object)
    for i, v in enumerate(values):
        out[i] = gmpy2.mpfr(v)
    return out


def to_float_array(values) -> np.ndarray:
    return np.array([float(v) for v in values], dtype=float)


def format_sci(x, digits: int = 16) -> str:
    """Format ``x`` in scientific notation with ``digits`` significant digits.

    Rounding is done on the exact binary value, so mpfr inputs carrying more
    precision than a double are rounded correctly.
    """
    if isinstance(x, (float, int, np.floating)):
        return f"{float(x):.{digits - 1}e}"
    if x == 0:
        return f"{0.0:.{digits - 1}e}"
    if isinstance(x, Decimal):
        # decimal input (e.g. transcribed tables) is re-emitted without a binary round trip
        mant, e = f"{x:.{digits - 1}e}".split("e")
        return f"{mant}e{'-' if int(e) < 0 else '+'}{abs(int(e)):02d}"
    mant, exp, _ = gmpy2.mpfr(x).digits(10, digits)
    sign = ""
    if mant.startswith("-"):
        sign, mant = "-", mant[1:]
    e = exp - 1
    return f"{sign}{mant[0]}.{mant[1:]}e{'-' if e < 0 else '+'}{abs(e):02d}"


def to_decimal_strings(values, digits: int) -> list[str]:
    return [format_sci(v, digits) for v in values]
