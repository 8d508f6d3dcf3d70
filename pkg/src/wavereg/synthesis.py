"""Filter coefficients from |m0|^2 by spectral factorization, and plot data.

Factorization works in the variable x = cos(xi). Writing |m0|^2 =
((1 + x) / 2)^M r(x), each root x_i of r corresponds to a reciprocal pair
(w, 1/w) with w + 1/w = 2 x_i; keeping the member with |w| < 1 for every
root gives the minimal-phase filter

    C(u) ~ (u + 1)^M  prod_j (u^2 - 2 x_j u + 1)  prod_i (u - w_i),

where the x_j in (-1, 1) are the interior double roots (one unit-circle pair
each, taken once) and the coefficients c_k are those of C in descending
powers of u, scaled so that sum c_k = sqrt(2).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import gmpy2
import numpy as np
from numpy.polynomial import chebyshev as cheb

from ._xprec import format_sci, working_precision
from .design import (
    DesignParams,
    ExplorationParams,
    SqMagnitude,
    amplification_digits,
    extract_r,
    solve_by_roots,
    solve_by_v,
)
from .trigpoly import divide_by_linear, value_and_derivative

LADDER = (30, 60)
INFEASIBLE_TOL = 1e-8
NEWTON_STEPS = 100
# a real root of r closer than this to [-1, 1] must be one of the double roots
INTERVAL_SLACK = 1e-6


class FactorizationError(ArithmeticError):
    """|m0|^2 admits no (reliable) spectral factor."""


@dataclass(frozen=True, eq=False)
class ScalingFilter:
    """Scaling filter taps c_0..c_{2N-1} with accuracy metadata.

    ``exact`` holds the extended-precision taps when they were computed that
    way; ``ladder_discrepancy`` is the largest tap change between the two
    precisions of the ladder (None when no ladder was run).
    """

    c: np.ndarray
    precision_digits: int | None = None
    ortho_residual: float = 0.0
    exact: np.ndarray | None = None
    ladder_discrepancy: float | None = None
    M: int | None = None

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        c.flags.writeable = False
        object.__setattr__(self, "c", c)

    @property
    def N(self) -> int:
        return len(self.c) // 2

    def __len__(self):
        return len(self.c)


def shift_residual(c) -> float:
    """max over m of |sum_k c_k c_{k+2m} - delta_m|, in the arithmetic of c."""
    c = list(c)
    n = len(c)
    worst = 0.0
    for m in range(0, (n + 1) // 2):
        s = sum((c[k] * c[k + 2 * m] for k in range(n - 2 * m)), c[0] * 0)
        worst = max(worst, abs(float(s - (1 if m == 0 else 0))))
    return worst


def autocorrelation(c, exact: bool = False) -> SqMagnitude:
    """Cosine coefficients of |m0|^2 for m0(xi) = 2^{-1/2} sum_k c_k e^{-ik xi}.

    a_0 = (1/2) sum c_j^2 and a_k = sum_j c_j c_{j+k}. With ``exact=True``
    (mpfr taps) the sums are formed in the current gmpy2 context.
    """
    c = list(c) if exact else [float(v) for v in np.asarray(c, dtype=float)]
    n = len(c)
    if n < 2 or n % 2:
        raise ValueError("a scaling filter has an even number >= 2 of taps")
    zero = c[0] * 0
    a = [sum((c[j] * c[j + k] for j in range(n - k)), zero) for k in range(n)]
    a[0] = a[0] / 2
    if not exact:
        return SqMagnitude(a=np.array(a, dtype=float))
    arr = np.empty(n, dtype=object)
    arr[:] = a
    return SqMagnitude(a=np.array([float(v) for v in a]), exact=arr, precision_digits=_digits_of(c[0]))


def _digits_of(x) -> int:
    return int(x.precision * math.log10(2)) if isinstance(x, gmpy2.mpfr) else 16


def _newton(coeffs, x, deriv=False):
    """Polish a root of P (or of P' with ``deriv``) by Newton's method in the current context."""
    dcoeffs = _cheb_derivative(coeffs) if deriv else None
    target = dcoeffs if deriv else coeffs
    prev = None
    for _ in range(NEWTON_STEPS):
        f, df = value_and_derivative(target, x)
        if df == 0:
            break
        step = f / df
        x = x - step
        size = abs(step)
        if size == 0 or (prev is not None and size >= prev and size < 1e-20 * (1 + abs(x))):
            break
        prev = size
    return x


def _cheb_derivative(coeffs):
    """Chebyshev coefficients of P' from those of P (generic scalar type)."""
    d = len(coeffs) - 1
    if d == 0:
        return [coeffs[0] * 0]
    out = [coeffs[0] * 0] * d
    for k in range(d, 0, -1):
        out[k - 1] = 2 * k * coeffs[k] + (out[k + 1] if k + 1 < d else 0)
    out[0] = out[0] / 2
    return out


def _double_root_guesses(r_float: np.ndarray) -> list[float]:
    """Approximate x in (-1, 1) where r touches zero (stationary zeros of r)."""
    if len(r_float) < 3:
        return []
    scale = float(np.sum(np.abs(r_float)))
    crit = cheb.chebroots(cheb.chebder(r_float))
    out = []
    for x in crit:
        if abs(x.imag) > 1e-6 or not -1 < x.real < 1:
            continue
        if abs(cheb.chebval(x.real, r_float)) <= 1e-7 * scale:
            out.append(float(x.real))
    out.sort()
    return [x for i, x in enumerate(out) if i == 0 or x - out[i - 1] > 1e-6]


def interior_double_roots(sq: SqMagnitude) -> tuple:
    """Locations z in (pi/2, pi) where |m0|^2 has a double zero, ascending.

    Recovered as stationary zeros of r; useful for designs known only through
    their coefficients.
    """
    _, r = extract_r(sq)
    xs = _double_root_guesses(r.astype_float().coeffs)
    zs = []
    coeffs = [float(v) for v in r.astype_float().coeffs]
    for x in xs:
        x = _newton(coeffs, x, deriv=True)
        z = math.acos(max(-1.0, min(1.0, x)))
        if math.pi / 2 < z < math.pi:
            zs.append(z)
    return tuple(sorted(zs))


def _solve_at(sq: SqMagnitude, digits: int) -> SqMagnitude:
    """Re-solve a design at the given precision when its parameters are known."""
    if isinstance(sq.params, DesignParams):
        return solve_by_roots(sq.params, digits)
    if isinstance(sq.params, ExplorationParams):
        return solve_by_v(sq.params.N, sq.params.v, digits)
    return sq


def _to_mp_list(values, digits):
    with working_precision(digits):
        return [gmpy2.mpfr(v) for v in values]


def _factor_once(sq: SqMagnitude, digits: int, double_xs=None):
    """Minimal-phase taps of |m0|^2 in ``digits`` precision, as mpfr values."""
    if sq.min_value < -INFEASIBLE_TOL:
        raise FactorizationError(f"|m0|^2 dips to {sq.min_value:.3e}; no spectral factor exists")
    digits += amplification_digits(sq.params)
    sq = _solve_at(sq, digits)
    with working_precision(digits):
        if sq.exact is None or (sq.precision_digits or 0) < digits:
            base = sq.exact if sq.exact is not None else sq.a
            sq = SqMagnitude(a=sq.a, params=sq.params, exact=np.array(_to_mp_list(base, digits), dtype=object), precision_digits=digits)
        M, r = extract_r(sq)
        if M < 1:
            raise FactorizationError("|m0|^2 does not vanish at pi")
        rc = list(r.coeffs)
        r_float = np.array([float(v) for v in rc])
        scale = float(np.sum(np.abs(r_float)))
        if double_xs is None:
            double_xs = [_newton(rc, gmpy2.mpfr(x), deriv=True) for x in _double_root_guesses(r_float)]
        else:
            double_xs = [gmpy2.mpfr(x) for x in double_xs]
        tol = scale * 10.0 ** (-digits / 2)
        for x in double_xs:
            for _ in range(2):
                rc, rem = divide_by_linear(rc, x)
                if abs(rem) > tol:
                    raise FactorizationError(f"r has no double root at x = {float(x):.12f} (remainder {float(rem):.3e})")
        # remaining roots come in reciprocal w-pairs off the unit circle
        guesses = cheb.chebroots(np.array([float(v) for v in rc])) if len(rc) > 1 else []
        xs = []
        for g in guesses:
            x = _newton(rc, gmpy2.mpc(complex(g)))
            if abs(x.imag) < 10.0 ** (-digits / 3) and -1 - INTERVAL_SLACK <= x.real <= 1 + INTERVAL_SLACK:
                raise FactorizationError(f"unpaired root of r on the unit circle near x = {complex(x):.6g}")
            xs.append(x)
        for i in range(len(xs)):
            for j in range(i):
                if abs(xs[i] - xs[j]) < 10.0 ** (-digits / 2):
                    raise FactorizationError("root polishing collapsed two roots; raise the precision")
        ws = []
        for x in xs:
            s = gmpy2.sqrt(x * x - 1)
            w = x - s
            ws.append(w if abs(w) < 1 else x + s)
        poly = [gmpy2.mpc(1)]
        factors = [[1, 1]] * M + [[1, -2 * x, 1] for x in double_xs] + [[1, -w] for w in ws]
        for f in factors:
            poly = _poly_mul(poly, f)
        c = [gmpy2.mpfr(p.real) for p in poly]
        total = sum(c, gmpy2.mpfr(0))
        norm = gmpy2.sqrt(gmpy2.mpfr(2)) / total
        c = [v * norm for v in c]
        return c, M, shift_residual(c)


def _poly_mul(p, q):
    out = [p[0] * 0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def spectral_factorize(sq: SqMagnitude, precision_digits: int = LADDER[0], ladder: bool = True) -> ScalingFilter:
    """Minimal-phase scaling filter with |m0|^2 = sq.

    The design is solved (when its parameters are known) and factored at
    ``precision_digits``; with ``ladder`` the computation is repeated at twice
    that precision, the higher-precision taps are returned and the largest
    tap change is recorded as ``ladder_discrepancy``.
    """
    digits = int(precision_digits)
    double_xs = None
    runs = [digits, 2 * digits] if ladder else [digits]
    results = []
    for d in runs:
        # prescribed roots are known exactly; otherwise they are located from r
        if isinstance(sq.params, DesignParams) and sq.params.roots:
            with working_precision(d + amplification_digits(sq.params)):
                double_xs = [gmpy2.cos(gmpy2.mpfr(z)) for z in sq.params.roots]
        results.append(_factor_once(sq, d, double_xs))
    c, M, residual = results[-1]
    discrepancy = None
    if ladder:
        lo = results[0][0]
        with working_precision(runs[-1]):
            discrepancy = max(abs(float(a - b)) for a, b in zip(lo, c))
    exact = np.empty(len(c), dtype=object)
    exact[:] = c
    return ScalingFilter(
        c=np.array([float(v) for v in c]),
        precision_digits=runs[-1] + amplification_digits(sq.params),
        ortho_residual=residual,
        exact=exact,
        ladder_discrepancy=discrepancy,
        M=M,
    )


def wavelet_filter(f: ScalingFilter) -> np.ndarray:
    """High-pass taps d_k = (-1)^k c_{2N-1-k}, k = 0..2N-1."""
    c = f.c if isinstance(f, ScalingFilter) else np.asarray(f, dtype=float)
    k = np.arange(len(c))
    return np.where(k % 2 == 0, 1.0, -1.0) * c[::-1]


class CascadeError(ArithmeticError):
    """The integer-point eigenproblem of the dilation equation is degenerate."""


def integer_values(c) -> np.ndarray:
    """phi(0), ..., phi(L) for a filter of length L + 1, normalized to sum 1.

    The interior values form the eigenvector for eigenvalue 1 of
    A[n, m] = sqrt(2) c_{2n-m}, n, m = 1..L-1; phi vanishes at 0 and L, except
    for the two-tap filter whose scaling function is the box, phi(0) = 1.
    """
    c = np.asarray(c, dtype=float)
    L = len(c) - 1
    if L == 1:
        return np.array([1.0, 0.0])
    idx = np.arange(1, L)
    k = 2 * idx[:, None] - idx[None, :]
    A = np.where((k >= 0) & (k <= L), math.sqrt(2) * c[np.clip(k, 0, L)], 0.0)
    ev, vec = np.linalg.eig(A)
    near = np.abs(ev - 1.0) < 1e-8
    if near.sum() != 1:
        raise CascadeError(f"eigenvalue 1 has multiplicity {int(near.sum())} in the transition matrix")
    v = np.real(vec[:, np.argmax(near)])
    v = v / v.sum()
    return np.concatenate([[0.0], v, [0.0]])


def phi_samples(f: ScalingFilter, levels: int) -> tuple[np.ndarray, np.ndarray]:
    """phi on the dyadic grid 2^{-levels} Z intersected with [0, 2N - 1].

    Starts from the exact integer values and applies the dilation equation
    phi(x) = sqrt(2) sum_k c_k phi(2x - k) once per level.
    """
    if not 1 <= levels <= 20:
        raise ValueError("levels must be in [1, 20]")
    c = f.c if isinstance(f, ScalingFilter) else np.asarray(f, dtype=float)
    L = len(c) - 1
    vals = integer_values(c)
    s2 = math.sqrt(2)
    for level in range(1, levels + 1):
        # phi(j / 2^l) = sqrt2 sum_k c_k phi((j - k 2^(l-1)) / 2^(l-1)), read off the previous level
        step = 2 ** (level - 1)
        new = np.zeros(L * 2**level + 1)
        j = np.arange(new.size)
        for k, ck in enumerate(c):
            src = j - k * step
            ok = (src >= 0) & (src < vals.size)
            new[ok] += s2 * ck * vals[src[ok]]
        vals = new
    x = np.arange(vals.size) / 2**levels
    return x, vals


def phihat_product(f: ScalingFilter, xi, J: int = 40) -> np.ndarray:
    """|prod_{j=1..J} m0(2^{-j} xi)| with m0(xi) = 2^{-1/2} sum_k c_k e^{-ik xi}."""
    if not 10 <= J <= 60:
        raise ValueError("J must be in [10, 60]")
    c = f.c if isinstance(f, ScalingFilter) else np.asarray(f, dtype=float)
    xi = np.asarray(xi, dtype=float)
    k = np.arange(len(c))
    out = np.ones(xi.shape)
    for j in range(1, J + 1):
        t = np.multiply.outer(xi / 2.0**j, k)
        m0 = (np.cos(t) @ c - 1j * (np.sin(t) @ c)) / math.sqrt(2)
        out = out * np.abs(m0)
    return out


def format_coefficients(values, digits: int = 16) -> str:
    """One tap per line in scientific notation with ``digits`` significant digits."""
    return "".join(format_sci(v, digits) + "\n" for v in values)


def parse_coefficients(text: str) -> np.ndarray:
    """Inverse of :func:`format_coefficients`; blank lines and '#' comments are ignored."""
    vals = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            vals.append(float(line))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: not a number: {line!r}") from exc
    if not vals:
        raise ValueError("no coefficients found")
    return np.array(vals)


def read_coefficients(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        return parse_coefficients(fh.read())


def table_csv(header, rows) -> str:
    """CSV text with a mandatory header row; floats written with repr precision."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()
