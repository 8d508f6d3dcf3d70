"""Squared magnitude |m0(xi)|^2 = sum_k a_k cos(k xi) of orthonormal filters.

A design of length 2N fixes a_0 = 1/2 and a_{2k} = 0 (the quadrature-mirror
identity) and determines the N odd coefficients from linear conditions:
a zero of order M at pi, plus a double zero at each prescribed root z_i in
(pi/2, pi). With no interior roots this is the Daubechies family.

The moment block is Vandermonde-like in k^2, so designs longer than 20 taps
are solved in extended precision (gmpy2) by default.
"""

from __future__ import annotations

import math
import warnings
from contextlib import nullcontext
from dataclasses import dataclass, field
from functools import cached_property

import gmpy2
import numpy as np

from ._xprec import to_decimal_strings, to_float_array, working_precision
from .trigpoly import CosinePoly, DivisibilityError, _divide_once, evaluate, minimum_on_interval

ROOT_LO = math.pi / 2
ROOT_HI = math.pi
COINCIDENT_TOL = 1e-9
FEASIBILITY_TOL = 1e-10
COHEN_TOL = 1e-10
EXTRACT_STOP_TOL = 1e-8
EXTENDED_LENGTH = 16
DEFAULT_DIGITS = 30


class DesignError(ValueError):
    """Invalid design parameters."""


class SingularDesignError(DesignError):
    """The linear conditions defining the design are degenerate."""


@dataclass(frozen=True)
class DesignParams:
    """Filter half-length N, number of interior double roots and their locations.

    ``check_interval=False`` allows roots anywhere in (0, pi), which is only
    useful for building counterexamples.
    """

    N: int
    n_z: int = 0
    roots: tuple = ()
    check_interval: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        roots = tuple(float(z) for z in self.roots)
        object.__setattr__(self, "roots", roots)
        if self.N < 1:
            raise DesignError("N must be positive")
        if self.n_z < 0 or len(roots) != self.n_z:
            raise DesignError(f"expected {self.n_z} roots, got {len(roots)}")
        if self.M < 1:
            raise DesignError(f"M = N - 2 n_z = {self.M} must be >= 1")
        if any(b <= a for a, b in zip(roots, roots[1:])):
            raise DesignError("roots must be strictly increasing")
        lo, hi = (ROOT_LO, ROOT_HI) if self.check_interval else (0.0, ROOT_HI)
        if any(not lo < z < hi for z in roots):
            raise DesignError(f"roots must lie in the open interval ({lo:.6f}, {hi:.6f})")
        if self.n_z > 4 or 2 * self.N > 40:
            warnings.warn("design outside the studied range 2N <= 40, n_z <= 4", stacklevel=2)

    @property
    def M(self) -> int:
        return self.N - 2 * self.n_z

    @classmethod
    def from_dict(cls, d: dict) -> "DesignParams":
        return cls(N=int(d["N"]), n_z=int(d.get("nz", d.get("n_z", 0))), roots=tuple(d.get("roots", ())))

    def to_dict(self) -> dict:
        return {"N": self.N, "nz": self.n_z, "roots": list(self.roots)}


@dataclass(frozen=True)
class ExplorationParams:
    """Free odd coefficients a_{2M+1}, ..., a_{2N-1} as multiples of their Daubechies values."""

    N: int
    v: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(float(x) for x in self.v))
        if not all(math.isfinite(x) for x in self.v):
            raise DesignError("v entries must be finite")
        if self.M < 1:
            raise DesignError("len(v) must be smaller than N")

    @property
    def M(self) -> int:
        return self.N - len(self.v)


@dataclass(frozen=True, eq=False)
class SqMagnitude:
    """Cosine coefficients a_0..a_{2N-1} of |m0|^2.

    ``exact`` carries the extended-precision coefficients when the design was
    solved that way; ``a`` is always the float64 rounding.
    """

    a: np.ndarray
    params: object = None
    exact: np.ndarray | None = None
    precision_digits: int | None = None

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        a.flags.writeable = False
        object.__setattr__(self, "a", a)

    @property
    def N(self) -> int:
        return (len(self.a) + 1) // 2

    @property
    def poly(self) -> CosinePoly:
        return CosinePoly(self.a, trim=False)

    @property
    def exact_poly(self) -> CosinePoly:
        return CosinePoly(self.exact, trim=False) if self.exact is not None else self.poly

    @cached_property
    def minimum(self) -> tuple[float, float]:
        return minimum_on_interval(self.poly, 0.0, math.pi)

    @property
    def min_value(self) -> float:
        return self.minimum[1]

    @property
    def feasible(self) -> bool:
        return self.min_value >= -FEASIBILITY_TOL

    def to_dict(self, digits: int | None = None) -> dict:
        digits = digits or self.precision_digits or 17
        values = self.exact if self.exact is not None else self.a
        out = {"a": to_decimal_strings(values, digits)}
        if isinstance(self.params, DesignParams):
            out = {**self.params.to_dict(), **out}
        elif isinstance(self.params, ExplorationParams):
            out = {"N": self.params.N, "v": list(self.params.v), **out}
        out["precision"] = self.precision_digits
        return out


def resolve_digits(N: int, precision: int | None, params=None) -> int | None:
    """Working precision for a design of length 2N; None means float64.

    Float64 is used up to 2N = 16 for Daubechies and v designs; beyond that r(0)
    drifts past 1e-10. Designs with interior roots always default to extended
    precision, with extra digits for the amplification: r is |m0|^2 divided by
    ((1 + cos z) / 2)^M, tiny near a root z close to pi.
    """
    if precision is not None:
        return None if precision <= 16 else int(precision)
    if getattr(params, "roots", ()):
        return DEFAULT_DIGITS + amplification_digits(params)
    return DEFAULT_DIGITS if 2 * N > EXTENDED_LENGTH else None


def amplification_digits(params) -> int:
    """Digits lost when dividing |m0|^2 by ((1 + cos xi) / 2)^M at the prescribed roots."""
    roots = getattr(params, "roots", ())
    if not roots:
        return 0
    return math.ceil(max(params.M * math.log10(2 / (1 + math.cos(z))) for z in roots))


def _context(digits):
    return working_precision(digits) if digits else nullcontext()


def _gauss_solve(A, b):
    """Gaussian elimination with partial pivoting on lists of mpfr."""
    n = len(b)
    A = [row[:] for row in A]
    b = list(b)
    for c in range(n):
        p = max(range(c, n), key=lambda i: abs(A[i][c]))
        if A[p][c] == 0:
            raise SingularDesignError("singular design system")
        A[c], A[p] = A[p], A[c]
        b[c], b[p] = b[p], b[c]
        piv = A[c][c]
        Ac = A[c]
        for i in range(c + 1, n):
            f = A[i][c] / piv
            if f:
                Ai = A[i]
                for j in range(c + 1, n):
                    Ai[j] -= f * Ac[j]
                b[i] -= f * b[c]
    x = [None] * n
    for i in range(n - 1, -1, -1):
        s = b[i]
        Ai = A[i]
        for j in range(i + 1, n):
            s -= Ai[j] * x[j]
        x[i] = s / Ai[i]
    return x


def _moment_rows(ks, K, M, one):
    """Rows (k/K)^(2j), j = 0..M-1, for the vanishing even derivatives at pi."""
    base = [(one * k / K) ** 2 for k in ks]
    row = [one] * len(ks)
    rows = []
    for _ in range(M):
        rows.append(row)
        row = [r * q for r, q in zip(row, base)]
    return rows


def _solve_float(A, b):
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    try:
        x = np.linalg.solve(A, b)
        for _ in range(2):
            x = x + np.linalg.solve(A, b - A @ x)
    except np.linalg.LinAlgError as exc:
        raise SingularDesignError(str(exc)) from exc
    return x


def _assemble(N, odd_values, one):
    a = [one * 0] * (2 * N)
    a[0] = one / 2
    for i, v in enumerate(odd_values):
        a[2 * i + 1] = v
    return a


def _finish(a, params, digits):
    if digits is None:
        return SqMagnitude(a=np.array(a, dtype=float), params=params)
    exact = np.empty(len(a), dtype=object)
    exact[:] = a
    return SqMagnitude(a=to_float_array(a), params=params, exact=exact, precision_digits=digits)


def solve_by_roots(params: DesignParams, precision: int | None = None) -> SqMagnitude:
    """Solve the N linear conditions for the odd coefficients of |m0|^2.

    Conditions: the even derivatives of orders 0, 2, ..., 2M-2 vanish at pi,
    and |m0|^2 together with its derivative vanishes at each prescribed root.
    """
    roots = params.roots
    if any(b - a < COINCIDENT_TOL for a, b in zip(roots, roots[1:])):
        raise SingularDesignError("prescribed roots coincide")
    N, M = params.N, params.M
    ks = list(range(1, 2 * N, 2))
    K = 2 * N - 1
    digits = resolve_digits(N, precision, params)
    with _context(digits):
        if digits is None:
            one, cos, sin = 1.0, math.cos, math.sin
        else:
            one, cos, sin = gmpy2.mpfr(1), gmpy2.cos, gmpy2.sin
        A = _moment_rows(ks, K, M, one)
        b = [one / 2] + [one * 0] * (M - 1)
        for z in roots:
            z = one * z
            A.append([cos(k * z) for k in ks])
            b.append(-one / 2)
            A.append([k * sin(k * z) / K for k in ks])
            b.append(one * 0)
        x = _solve_float(A, b) if digits is None else _gauss_solve(A, b)
        return _finish(_assemble(N, x, one), params, digits)


def daubechies(N: int, precision: int | None = None) -> SqMagnitude:
    return solve_by_roots(DesignParams(N, 0), precision)


def solve_by_v(N: int, v, precision: int | None = None) -> SqMagnitude:
    """|m0|^2 from the exploration parameters v (v = 1 is the Daubechies point).

    The free odd coefficients a_{2M+1}, ..., a_{2N-1} are v_i times their
    Daubechies values for the same N; a_1, ..., a_{2M-1} then follow from the
    M moment conditions at pi, where M = N - len(v).
    """
    params = ExplorationParams(N, tuple(v))
    M = params.M
    digits = resolve_digits(N, precision)
    ref = daubechies(N, digits)
    ref_a = ref.exact if ref.exact is not None else ref.a
    K = 2 * N - 1
    fixed_ks = list(range(1, 2 * M, 2))
    free_ks = list(range(2 * M + 1, 2 * N, 2))
    with _context(digits):
        one = 1.0 if digits is None else gmpy2.mpfr(1)
        free = [one * vi * ref_a[k] for vi, k in zip(params.v, free_ks)]
        A = _moment_rows(fixed_ks, K, M, one)
        F = _moment_rows(free_ks, K, M, one)
        b = [(one / 2 if j == 0 else one * 0) - sum((f * x for f, x in zip(F[j], free)), one * 0) for j in range(M)]
        x = _solve_float(A, b) if digits is None else _gauss_solve(A, b)
        return _finish(_assemble(N, list(x) + free, one), params, digits)


def extract_r(sq: SqMagnitude) -> tuple[int, CosinePoly]:
    """Factor |m0|^2 = ((1 + cos xi) / 2)^M r(xi) with r(pi) != 0.

    Division stops as soon as |p(pi)| exceeds 1e-8 times the coefficient scale,
    so a near-zero of r at pi does not increment M. Extended-precision designs
    are divided in their own arithmetic. ``M == 0`` means no zero at pi.

    For a design built from prescribed roots (or exploration parameters) the
    order of the zero at pi is known to be params.M, and division stops
    there: roots clustered near pi can make |m0|^2(pi) cancel below the
    threshold without adding to the order of the zero, and the exploration
    family keeps one r across all v (including the Daubechies point v = 1).
    """
    p = sq.exact_poly
    c = list(p.coeffs)
    M = 0
    cap = sq.params.M if isinstance(sq.params, (DesignParams, ExplorationParams)) else None
    with _context(sq.precision_digits if sq.exact is not None else None):
        while len(c) > 1 and (cap is None or M < cap):
            at_pi = sum(c[0::2]) - sum(c[1::2])
            scale = sum(abs(float(b)) for b in c)
            if abs(float(at_pi)) > EXTRACT_STOP_TOL * scale:
                break
            c, rem = _divide_once(c)
            if abs(float(rem)) > EXTRACT_STOP_TOL * scale:
                raise DivisibilityError(f"remainder {float(rem):.3e} after {M} divisions")
            M += 1
    if p.extended:
        out = np.empty(len(c), dtype=object)
        out[:] = c
    else:
        out = np.array(c, dtype=float)
    return M, CosinePoly(out, trim=False)


def check_orthonormality(sq: SqMagnitude, n: int = 4096) -> float:
    """max |p(xi) + p(xi + pi) - 1| over an n-point grid of [0, pi].

    The odd terms cancel in the sum, which equals 2 sum_{k even} a_k cos(k xi);
    evaluating that form avoids cancelling the (possibly large) odd coefficients.
    """
    xi = np.linspace(0.0, math.pi, n)
    a = sq.exact if sq.exact is not None else sq.a
    e = np.zeros(len(a))
    e[0] = float(2 * a[0] - 1)
    e[2::2] = [2 * float(v) for v in a[2::2]]
    return float(np.max(np.abs(evaluate(CosinePoly(e, trim=False), xi))))


def check_cohen(sq: SqMagnitude) -> bool:
    """Sufficient Cohen test: |m0|^2 stays positive on [0, pi/2]."""
    return minimum_on_interval(sq.poly, 0.0, math.pi / 2)[1] > COHEN_TOL
