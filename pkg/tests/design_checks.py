"""Property checks applied to every design the tests produce."""

from __future__ import annotations

import math

import gmpy2
import numpy as np

from wavereg._xprec import working_precision
from wavereg.design import check_orthonormality, extract_r
from wavereg.regularity import regularity, transfer_matrix
from wavereg.synthesis import phi_samples, phihat_product, shift_residual, spectral_factorize
from wavereg.trigpoly import value_and_derivative

LIMITS = {
    "ortho": 1e-10,
    "rho_deficit": 1e-10,
    "tail": 1e-10,
    "root_residual": 1e-9,
    "partition": 1e-8,
    "phihat_2pi_n": 1e-8,
    "shift": 1e-10,
}


def root_residuals(sq, roots) -> float:
    """max |r(z)|, |r'(z)| over the prescribed roots, evaluated in the arithmetic of r."""
    if not roots:
        return 0.0
    _, r = extract_r(sq)
    worst = 0.0
    digits = sq.precision_digits if sq.exact is not None else None
    for z in roots:
        if digits:
            with working_precision(digits):
                x = gmpy2.cos(gmpy2.mpfr(z))
                s = gmpy2.sin(gmpy2.mpfr(z))
                v, dv = value_and_derivative(list(r.coeffs), x)
                worst = max(worst, abs(float(v)), abs(float(-s * dv)))
        else:
            v, dv = value_and_derivative(list(r.coeffs), math.cos(z))
            worst = max(worst, abs(float(v)), abs(float(-math.sin(z) * dv)))
    return worst


def partition_of_unity(c, levels: int = 6) -> float:
    x, phi = phi_samples(c, levels)
    step = 2**levels
    per = np.zeros(step)
    for k in range(0, phi.size, step):
        chunk = phi[k : k + step]
        per[: chunk.size] += chunk
    return float(np.max(np.abs(per - 1.0)))


def measure(sq, roots=(), filt=None) -> dict:
    """All property measurements for one design (the filter is factored when not given)."""
    report = regularity(sq)
    _, r = extract_r(sq)
    T = transfer_matrix(r)
    if filt is None:
        filt = spectral_factorize(sq, 30, ladder=False)
    c = filt.c
    return {
        "ortho": check_orthonormality(sq),
        "rho_deficit": max(0.0, 1.0 - report.rho),
        # relative to the coefficient scale of r, as transfer_matrix checks it
        "tail": T.tail / r.astype_float().scale(),
        "root_residual": root_residuals(sq, roots),
        "partition": partition_of_unity(c),
        "phihat_2pi_n": float(np.max(phihat_product(c, 2 * np.pi * np.arange(1, 6)))),
        "shift": shift_residual(c),
        "s0_le_M": report.s0 <= report.M + 1e-10,
    }


def violations(m: dict) -> list[str]:
    out = [f"{k}={m[k]:.3e}" for k, lim in LIMITS.items() if not m[k] <= lim]
    if not m["s0_le_M"]:
        out.append("s0 > M")
    return out
