"""Even trigonometric polynomials p(xi) = sum_k b_k cos(k xi).

Since cos(k xi) = T_k(cos xi), the coefficient vector is also the Chebyshev
expansion of p as a polynomial in x = cos(xi). All arithmetic stays in this
basis; conversion to monomials is never needed.

Coefficients are either float64 or ``gmpy2.mpfr`` (object arrays). Evaluation
on arrays, extremum search and sampling work on floats only.
"""

from __future__ import annotations

from contextlib import nullcontext
from dataclasses import dataclass, field

import gmpy2
import numpy as np
from scipy.fft import dct

from ._xprec import is_extended, precision_of, to_float_array

TRIM_TOL = 1e-14


class DivisibilityError(ArithmeticError):
    """A polynomial did not vanish to the requested order at xi = pi."""


@dataclass(frozen=True, eq=False)
class CosinePoly:
    """Cosine series with coefficients ``b_0..b_d``.

    Float coefficients have trailing entries below ``TRIM_TOL`` trimmed unless
    ``trim=False``; extended-precision coefficients only lose exact zeros.
    Filter data such as the a-sequence of a long design must not be trimmed:
    its top coefficient can legitimately be far below 1e-14.
    """

    coeffs: np.ndarray
    trim: bool = field(default=True, repr=False)

    def __post_init__(self):
        c = self.coeffs
        if is_extended(c):
            c = c.copy()
        else:
            c = np.array(c, dtype=float).ravel()
            if not np.all(np.isfinite(c)):
                raise ValueError("cosine coefficients must be finite")
        if c.size == 0:
            c = np.zeros(1, dtype=c.dtype)
        d = c.size - 1
        tol = TRIM_TOL if (self.trim and c.dtype != object) else 0
        while d > 0 and abs(c[d]) <= tol:
            d -= 1
        c = c[: d + 1]
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def extended(self) -> bool:
        return is_extended(self.coeffs)

    def scale(self) -> float:
        """Sum of absolute coefficients, an upper bound for max |p|."""
        return float(sum(abs(float(b)) for b in self.coeffs))

    def astype_float(self) -> "CosinePoly":
        return CosinePoly(to_float_array(self.coeffs), trim=False) if self.extended else self

    def at_pi(self):
        """p(pi) = sum (-1)^k b_k, exact in the coefficient arithmetic."""
        with _arith(self):
            total = self.coeffs[0] * 0
            for k, b in enumerate(self.coeffs):
                total = total + b if k % 2 == 0 else total - b
            return total

    def at_zero(self):
        with _arith(self):
            total = self.coeffs[0] * 0
            for b in self.coeffs:
                total = total + b
            return total

    def __call__(self, xi):
        return evaluate(self, xi)

    def __len__(self):
        return self.coeffs.size

    def __repr__(self):
        return f"CosinePoly({list(map(float, self.coeffs))!r})"


def _arith(*polys):
    """Context for arithmetic on the coefficients of ``polys``."""
    ext = [v for p in polys if p.extended for v in (p.coeffs[0], p.coeffs[-1])]
    return precision_of(ext) if ext else nullcontext()


def _clenshaw(coeffs, x):
    b1 = b2 = x * 0
    for k in range(len(coeffs) - 1, 0, -1):
        b1, b2 = coeffs[k] + 2 * x * b1 - b2, b1
    return coeffs[0] + x * b1 - b2


def evaluate(p: CosinePoly, xi):
    """Evaluate p at xi (scalar or array) by the Chebyshev Clenshaw recurrence."""
    c = p.coeffs
    if p.extended and not isinstance(xi, np.ndarray):
        import gmpy2

        with _arith(p):
            return _clenshaw(c, gmpy2.cos(gmpy2.mpfr(xi)))
    c = to_float_array(c) if p.extended else c
    return _clenshaw(c, np.cos(np.asarray(xi, dtype=float)))


def _sine_series(coeffs, xi):
    # sum_k s_k sin(k xi) = sin(xi) * sum_k s_k U_{k-1}(cos xi)
    x = np.cos(xi)
    b1 = b2 = x * 0
    for k in range(len(coeffs) - 1, 0, -1):
        b1, b2 = coeffs[k] + 2 * x * b1 - b2, b1
    return np.sin(xi) * b1


def derivative_eval(p: CosinePoly, xi):
    """p'(xi) = -sum_k k b_k sin(k xi)."""
    c = to_float_array(p.coeffs) if p.extended else p.coeffs
    k = np.arange(c.size)
    return _sine_series(-k * c, np.asarray(xi, dtype=float))


def second_derivative_eval(p: CosinePoly, xi):
    c = to_float_array(p.coeffs) if p.extended else p.coeffs
    k = np.arange(c.size)
    return _clenshaw(-(k**2) * c, np.cos(np.asarray(xi, dtype=float)))


def multiply(p: CosinePoly, q: CosinePoly) -> CosinePoly:
    """Exact product using cos(j xi) cos(k xi) = (cos((j+k) xi) + cos((j-k) xi)) / 2."""
    a, b = p.coeffs, q.coeffs
    extended = p.extended or q.extended
    n = a.size + b.size - 1
    out = np.empty(n, dtype=object) if extended else np.zeros(n)
    with _arith(p, q):
        if extended:
            zero = (a[0] if p.extended else b[0]) * 0
            out[:] = [zero] * n
        for j, aj in enumerate(a):
            for k, bk in enumerate(b):
                h = aj * bk / 2
                out[j + k] = out[j + k] + h
                out[abs(j - k)] = out[abs(j - k)] + h
    return CosinePoly(out)


def half_raised(M: int, extended: bool = False) -> CosinePoly:
    """((1 + cos xi) / 2) ** M."""
    if extended:
        half = gmpy2.mpfr(1) / 2
        base = CosinePoly(np.array([half, half], dtype=object))
        out = CosinePoly(np.array([gmpy2.mpfr(1)], dtype=object))
    else:
        base = CosinePoly(np.array([0.5, 0.5]))
        out = CosinePoly(np.array([1.0]))
    for _ in range(M):
        out = multiply(out, base)
    return out


def _divide_once(c):
    """Divide sum c_n T_n by (1 + x) / 2; returns (quotient coeffs, remainder)."""
    d = len(c) - 1
    if d == 0:
        return [c[0] * 0], c[0]
    # coefficient n of (1 + x) Q:  q_n + q_{n+1}/2 + (q_{n-1}/2 if n >= 2; q_0 if n == 1)
    q = [c[0] * 0] * d
    for n in range(d, 0, -1):
        qn = q[n] if n < d else 0
        qn1 = q[n + 1] if n + 1 < d else 0
        val = c[n] - qn - qn1 / 2
        q[n - 1] = 2 * val if n >= 2 else val
    rem = c[0] - q[0] - (q[1] / 2 if d > 1 else 0)
    return [2 * v for v in q], rem


def divide_by_half_raised(p: CosinePoly, M: int, tol: float = 1e-10):
    """Divide p by ((1 + cos xi) / 2) ** M.

    Returns ``(quotient, max_remainder)``. Raises :class:`DivisibilityError` if
    any step leaves a remainder above ``tol`` times the sum of |coefficients|
    of the polynomial being divided.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    c = list(p.coeffs)
    worst = 0.0
    with _arith(p):
        for step in range(M):
            scale = sum(abs(float(v)) for v in c) or 1.0
            c, rem = _divide_once(c)
            r = abs(float(rem))
            worst = max(worst, r)
            if r > tol * scale:
                raise DivisibilityError(
                    f"remainder {r:.3e} at division step {step + 1} exceeds {tol:g} x {scale:.3e}"
                )
    arr = np.empty(len(c), dtype=object) if p.extended else np.array(c, dtype=float)
    if p.extended:
        arr[:] = c
    return CosinePoly(arr, trim=p.trim), worst


def samples(p: CosinePoly, d: int) -> np.ndarray:
    """Values of p on the extrema grid xi_m = m pi / d, m = 0..d."""
    if d == 0:
        return np.atleast_1d(evaluate(p, np.array([0.0])))
    return evaluate(p, np.arange(d + 1) * np.pi / d)


def coeffs_from_samples(values) -> CosinePoly:
    """Recover cosine coefficients from samples on the grid xi_m = m pi / d.

    Exact (up to rounding) for any cosine polynomial of degree <= d, d + 1 being
    the number of samples. Uses the type-I DCT.
    """
    return CosinePoly(_dct1_coeffs(np.asarray(values, dtype=float)))


def _dct1_coeffs(v: np.ndarray, axis: int = 0) -> np.ndarray:
    n = v.shape[axis]
    if n == 1:
        return np.array(v, dtype=float)
    d = n - 1
    c = dct(v, type=1, axis=axis) / d
    idx = [slice(None)] * v.ndim
    idx[axis] = 0
    c[tuple(idx)] /= 2
    idx[axis] = -1
    c[tuple(idx)] /= 2
    return c


def minimum_on_interval(p: CosinePoly, lo: float, hi: float):
    """Global minimum of p over [lo, hi] as ``(xi_min, p(xi_min))``.

    Dense sampling with 64 (d + 1) points locates candidate brackets; each
    candidate whose sampled value could still hide the global minimum is
    refined by safeguarded Newton iteration on p'.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    pf = p.astype_float()
    d = pf.degree
    if d == 0:
        return lo, float(pf.coeffs[0])
    n = 64 * (d + 1)
    xs = np.linspace(lo, hi, n + 1)
    vs = evaluate(pf, xs)
    h = xs[1] - xs[0]
    # between-sample dip is at most h^2/8 * max|p''| <= h^2/8 * d^2 * sum|b|
    margin = h * h / 8 * d * d * pf.scale()
    vmin = vs.min()
    interior = np.where((vs[1:-1] <= vs[:-2]) & (vs[1:-1] <= vs[2:]) & (vs[1:-1] <= vmin + margin))[0] + 1
    if interior.size > MAX_CANDIDATES:
        interior = interior[np.argsort(vs[interior], kind="stable")[:MAX_CANDIDATES]]
    best_x, best_v = float(xs[vs.argmin()]), float(vmin)
    if interior.size:
        x = _refine_minima(pf, xs[interior], xs[interior - 1], xs[interior + 1])
        v = evaluate(pf, x)
        i = int(np.argmin(v))
        if v[i] < best_v:
            best_x, best_v = float(x[i]), float(v[i])
    return best_x, best_v


MAX_CANDIDATES = 16


def _refine_minima(p: CosinePoly, x, left, right, xtol: float = 1e-12):
    """Safeguarded Newton on p' inside each bracket; candidates stop independently."""
    x, left, right = x.copy(), left.copy(), right.copy()
    # derivative values below this are rounding noise
    gtol = 4e-16 * p.degree * p.scale()
    active = np.arange(x.size)
    for _ in range(60):
        xa = x[active]
        g = derivative_eval(p, xa)
        g2 = second_derivative_eval(p, xa)
        la = np.where(g < 0, xa, left[active])
        ra = np.where(g > 0, xa, right[active])
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(g2 > 0, g / g2, np.inf)
        xn = xa - step
        bad = ~((xn >= la) & (xn <= ra))
        xn = np.where(bad, (la + ra) / 2, xn)
        # a converged point stays put; bisecting away from it would lose the minimum
        flat = np.abs(g) <= gtol
        xn = np.where(flat, xa, xn)
        left[active], right[active], x[active] = la, ra, xn
        done = (np.abs(xn - xa) < xtol) | flat | (ra - la < xtol)
        active = active[~done]
        if active.size == 0:
            break
    return x


def divide_by_linear(coeffs, t):
    """Divide sum c_n T_n(x) by (x - t); returns (quotient coeffs, remainder).

    Works on any scalar type supporting field arithmetic (float, mpfr, mpc).
    """
    c = list(coeffs)
    d = len(c) - 1
    if d == 0:
        return [c[0] * 0], c[0]
    # x T_n = (T_{n+1} + T_{n-1}) / 2 for n >= 1 and x T_0 = T_1
    q = [c[0] * 0] * (d + 1)
    for n in range(d, 0, -1):
        val = c[n] + t * q[n] - (q[n + 1] / 2 if n + 1 <= d else 0)
        q[n - 1] = 2 * val if n >= 2 else val
    rem = c[0] + t * q[0] - q[1] / 2
    return q[:d], rem


def value_and_derivative(coeffs, x):
    """(P(x), P'(x)) for P = sum c_n T_n, using T_n' = n U_{n-1}."""
    d = len(coeffs) - 1
    b1 = b2 = x * 0
    u1 = u2 = x * 0
    for k in range(d, 0, -1):
        b1, b2 = coeffs[k] + 2 * x * b1 - b2, b1
        u1, u2 = k * coeffs[k] + 2 * x * u1 - u2, u1
    return coeffs[0] + x * b1 - b2, u1
