"""Sobolev exponent of a design from the spectral radius of its transfer operator.

For |m0|^2 = ((1 + cos xi) / 2)^M r(xi) the operator

    (T_r u)(xi) = r(xi/2) u(xi/2) + r(pi - xi/2) u(pi - xi/2)

maps span{cos(k xi)}_{k <= deg r} into itself, and the Sobolev exponent of the
scaling function is s0 = M - log_4 rho(T_r).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .design import SqMagnitude, check_cohen, check_orthonormality, extract_r
from .trigpoly import CosinePoly, _dct1_coeffs, evaluate

TAIL_TOL = 1e-10
ORTHO_TOL = 1e-10
R0_TOL = 1e-8


class RegularityError(RuntimeError):
    """The transfer matrix or its spectrum could not be computed reliably."""


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """Matrix of T_r on the cosine basis; column j holds the image of cos(j xi)."""

    entries: np.ndarray
    source_degree: int
    tail: float = 0.0


@dataclass(frozen=True)
class RegularityReport:
    M: int
    rho: float
    s0: float
    holder_lo: float
    holder_hi: float
    cohen_ok: bool
    feasible: bool

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "rho": self.rho,
            "s0": round(self.s0, 4),
            "holder": [round(self.holder_lo, 4), round(self.holder_hi, 4)],
            "cohen": self.cohen_ok,
            "feasible": self.feasible,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def transfer_matrix(r: CosinePoly, grid_factor: int = 2) -> TransferMatrix:
    """Assemble T_r by sampling the images of the basis and applying a DCT-I.

    The images are sampled on ``grid_factor * d + 2`` extrema points (d = deg r)
    so that the coefficients above d, which must vanish, are resolved and
    checked against ``TAIL_TOL`` times the scale of r.
    """
    # r(0) is checked in the arithmetic of r: its float coefficients grow like
    # binomial(2M - 1, M), so a float sum cancels badly for long filters
    err = abs(float(r.at_zero() - 1))
    slack = 0.0 if r.extended else 4e-16 * (r.degree + 1) * r.scale()
    if err > R0_TOL + slack:
        raise RegularityError(f"r(0) - 1 = {err:.3e}")
    r = r.astype_float()
    d = r.degree
    D = grid_factor * d + 1
    xi = np.arange(D + 1) * np.pi / D
    j = np.arange(d + 1)
    half = xi / 2
    mirror = np.pi - half
    W = evaluate(r, half)[:, None] * np.cos(np.outer(half, j)) + evaluate(r, mirror)[:, None] * np.cos(
        np.outer(mirror, j)
    )
    coeffs = _dct1_coeffs(W, axis=0)
    tail = float(np.max(np.abs(coeffs[d + 1 :]))) if D > d else 0.0
    if tail > TAIL_TOL * r.scale():
        raise RegularityError(f"transfer image leaves the cosine span: tail {tail:.3e}")
    return TransferMatrix(entries=coeffs[: d + 1], source_degree=d, tail=tail)


def spectral_radius(T: TransferMatrix | np.ndarray) -> float:
    """Largest eigenvalue modulus of a dense nonsymmetric matrix (LAPACK geev)."""
    A = T.entries if isinstance(T, TransferMatrix) else np.asarray(T, dtype=float)
    if not np.all(np.isfinite(A)):
        raise RegularityError("non-finite matrix entries")
    try:
        ev = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise RegularityError(f"eigenvalue iteration failed: {exc}") from exc
    return float(np.max(np.abs(ev)))


def transfer_matrix_exact(r: CosinePoly) -> np.ndarray:
    """Entries of T_r from the product-to-sum identity, in the arithmetic of r.

    T_r cos(j xi) = sum_k b_k ([k + j even] cos((k + j) xi / 2) + [k - j even] cos((k - j) xi / 2)),
    so entry (i, j) collects b_k over k + j = 2i and |k - j| = 2i.
    """
    b = list(r.coeffs)
    d = len(b) - 1
    zero = b[0] * 0
    T = np.empty((d + 1, d + 1), dtype=object if r.extended else float)
    for i in range(d + 1):
        for j in range(d + 1):
            acc = zero
            for k in {2 * i - j, j + 2 * i, j - 2 * i}:
                if 0 <= k <= d:
                    acc = acc + b[k] * ((k + j == 2 * i) + (abs(k - j) == 2 * i))
            T[i, j] = acc
    return T


def _to_mpf(x):
    if isinstance(x, (int, float)):
        return mpmath.mpf(x)
    p, q = x.as_integer_ratio()
    return mpmath.mpf(p) / q


def transfer_eigenvalues(r: CosinePoly, digits: int | None = None) -> np.ndarray:
    """Eigenvalues of T_r; with ``digits`` the exact matrix is solved at that precision.

    Defective eigenvalues (Jordan blocks occur at optimal designs) are only
    resolved to about sqrt(eps) in float64, hence the extended route.
    """
    if digits is None:
        return np.linalg.eigvals(transfer_matrix(r).entries)
    T = transfer_matrix_exact(r)
    with mpmath.workdps(digits):
        A = mpmath.matrix([[_to_mpf(x) for x in row] for row in T])
        ev = mpmath.eig(A, left=False, right=False)
        return np.array([complex(e) for e in ev])


def sobolev_exponent(M: int, r: CosinePoly, eig_digits: int | None = None) -> tuple[float, float]:
    """(rho, s0) for a factored |m0|^2; ``eig_digits`` solves the eigenproblem in extended precision."""
    if eig_digits is None:
        rho = spectral_radius(transfer_matrix(r))
    else:
        transfer_matrix(r)  # r(0) and tail checks
        rho = float(np.max(np.abs(transfer_eigenvalues(r, eig_digits))))
    return rho, M - math.log(rho) / math.log(4.0)


def regularity(sq: SqMagnitude, check: bool = True, eig_digits: int | None = None) -> RegularityReport:
    """Full report for a squared magnitude: M, rho, s0, Holder bracket and flags.

    s0 is computed even when the Cohen test fails; the flag says whether the
    exponent is backed by the theorem. Double precision eigenvalues are
    accurate except near a defective dominant eigenvalue, where ``eig_digits``
    gives the extended-precision route.
    """
    if check:
        res = check_orthonormality(sq)
        if res > ORTHO_TOL:
            raise ValueError(f"orthonormality residual {res:.3e} exceeds {ORTHO_TOL:g}")
    M, r = extract_r(sq)
    if M < 1:
        raise ValueError("|m0|^2 does not vanish at pi")
    rho, s0 = sobolev_exponent(M, r, eig_digits)
    return RegularityReport(
        M=M,
        rho=rho,
        s0=s0,
        holder_lo=s0 - 0.5,
        holder_hi=s0,
        cohen_ok=check_cohen(sq),
        feasible=sq.feasible,
    )
