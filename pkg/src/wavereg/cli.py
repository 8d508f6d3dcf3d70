"""Command-line front end: wavereg {exponent,optimize,factor,table,scan,phi,phihat}.

Data goes to stdout (or to --out, written atomically, in which case the path
and a sha256 checksum are printed); diagnostics go to stderr.

Exit codes: 0 success, 1 usage/file/parse error, 2 infeasible design,
3 Cohen criterion not satisfied (the report is still printed).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .design import DesignError, DesignParams, SqMagnitude, daubechies, solve_by_roots
from .optimize import default_starts, interior_grid, optimize_roots, scan
from .regularity import RegularityError, regularity
from .synthesis import (
    FactorizationError,
    ScalingFilter,
    autocorrelation,
    format_coefficients,
    phi_samples,
    phihat_product,
    read_coefficients,
    spectral_factorize,
    table_csv,
)
from .trigpoly import DivisibilityError

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_COHEN = 0, 1, 2, 3
PRECISION_ENV = "WAVEREG_PRECISION"
COMMANDS = ("exponent", "optimize", "factor", "table", "scan", "phi", "phihat")
FACTOR_DIGITS = 30
DEFAULT_FORMAT = {"exponent": "json", "optimize": "json", "factor": "txt", "table": "csv", "scan": "csv", "phi": "csv", "phihat": "csv"}


class UsageError(Exception):
    """Bad command line or unreadable input; maps to exit code 1."""


@dataclass
class RunConfig:
    command: str
    N: int | None = None
    n_z: int = 0
    roots: tuple = ()
    coeffs: str | None = None
    precision: int | None = None
    starts: int | None = None
    seed_roots: tuple | None = None
    budget: int | None = None
    grid: int | None = None
    levels: int = 8
    max_2n: int = 40
    columns: tuple = field(default_factory=lambda: tuple(range(5)))
    J: int = 40
    xi_max: float = 8 * math.pi
    out: str | None = None
    fmt: str = "json"

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        precision = ns.precision
        if precision is None and os.environ.get(PRECISION_ENV):
            try:
                precision = int(os.environ[PRECISION_ENV])
            except ValueError as exc:
                raise UsageError(f"{PRECISION_ENV} must be an integer") from exc
        n_z = ns.nz if ns.nz is not None else 0
        cfg = cls(
            command=ns.command,
            N=ns.n,
            n_z=n_z,
            roots=ns.roots or (),
            coeffs=ns.coeffs,
            precision=precision,
            starts=ns.starts,
            seed_roots=ns.seed_roots,
            budget=ns.budget,
            grid=ns.grid,
            levels=ns.levels,
            max_2n=ns.max_2n,
            columns=(ns.nz,) if ns.command == "table" and ns.nz is not None else tuple(range(5)),
            J=ns.J,
            xi_max=ns.xi_max,
            out=ns.out,
            fmt=ns.format or DEFAULT_FORMAT[ns.command],
        )
        cfg.validate()
        return cfg

    def validate(self):
        needs_design = self.command in ("exponent", "factor", "phi", "phihat")
        if needs_design and self.coeffs is None and self.N is None:
            raise UsageError(f"{self.command} needs --n (with --nz/--roots) or --coeffs")
        if self.command in ("optimize", "scan") and self.N is None:
            raise UsageError(f"{self.command} needs --n")
        if self.command in ("optimize", "scan") and self.n_z < 1:
            raise UsageError(f"{self.command} needs --nz >= 1")
        if self.command == "scan" and not self.grid:
            raise UsageError("scan needs --grid")
        if self.seed_roots is not None and len(self.seed_roots) % max(self.n_z, 1):
            raise UsageError("--seed-roots must hold a multiple of --nz values")
        if self.N is not None and self.coeffs is None and needs_design and len(self.roots) != self.n_z:
            raise UsageError(f"--nz {self.n_z} needs {self.n_z} values in --roots")


def _float_list(text: str) -> tuple:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wavereg", description="Design orthonormal wavelet filters with maximal Sobolev regularity.")
    p.add_argument("--version", action="version", version=f"wavereg {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--n", type=int, help="half filter length N (2N taps)")
    p.add_argument("--nz", type=int, help="number of interior double roots (table: restrict to this column)")
    p.add_argument("--roots", type=_float_list, help="root locations z1,z2,... in (pi/2, pi)")
    p.add_argument("--coeffs", help="file with filter taps, one per line")
    p.add_argument("--precision", type=int, help=f"working digits (default: automatic; env {PRECISION_ENV})")
    p.add_argument("--starts", type=int, help="number of optimizer starts")
    p.add_argument("--seed-roots", type=_float_list, help="optimizer start(s), nz values per start")
    p.add_argument("--budget", type=int, help="evaluation cap per local search")
    p.add_argument("--grid", type=int, help="grid size per axis (scan, phihat)")
    p.add_argument("--levels", type=int, default=8, help="dyadic levels for phi")
    p.add_argument("--max-2n", dest="max_2n", type=int, default=40, help="largest filter length in table")
    p.add_argument("--J", type=int, default=40, help="product truncation for phihat")
    p.add_argument("--xi-max", dest="xi_max", type=float, default=8 * math.pi, help="phihat grid upper end")
    p.add_argument("--out", help="output file (written atomically)")
    p.add_argument("--format", choices=("csv", "json", "txt"), help="output format (factor: txt, one tap per line)")
    return p


def atomic_write(path: str, data: bytes) -> str:
    """Write ``data`` to ``path`` via a temporary file and rename; returns the sha256 hex digest."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".wavereg-", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return hashlib.sha256(data).hexdigest()


def _emit(cfg: RunConfig, text: str, stdout):
    if cfg.out:
        digest = atomic_write(cfg.out, text.encode("utf-8"))
        print(f"{cfg.out} sha256:{digest}", file=stdout)
    else:
        stdout.write(text)


def _design(cfg: RunConfig) -> SqMagnitude:
    if cfg.coeffs is not None:
        return autocorrelation(_load_coeffs(cfg.coeffs))
    return solve_by_roots(DesignParams(cfg.N, cfg.n_z, tuple(cfg.roots)), cfg.precision)


def _load_coeffs(path) -> np.ndarray:
    try:
        return read_coefficients(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _filter(cfg: RunConfig) -> ScalingFilter:
    if cfg.coeffs is not None:
        return ScalingFilter(c=_load_coeffs(cfg.coeffs))
    return spectral_factorize(_design(cfg), cfg.precision or FACTOR_DIGITS)


def cmd_exponent(cfg: RunConfig, stdout) -> int:
    sq = _design(cfg)
    report = regularity(sq)
    _emit(cfg, report.to_json() + "\n", stdout)
    if not report.feasible:
        return EXIT_INFEASIBLE
    return EXIT_OK if report.cohen_ok else EXIT_COHEN


def cmd_optimize(cfg: RunConfig, stdout) -> int:
    starts = cfg.starts
    if cfg.seed_roots is not None:
        k = cfg.n_z
        starts = [cfg.seed_roots[i : i + k] for i in range(0, len(cfg.seed_roots), k)]
    result = optimize_roots(cfg.N, cfg.n_z, starts=starts, budget=cfg.budget, precision=cfg.precision)
    _emit(cfg, result.to_json(indent=1) + "\n", stdout)
    if not result.report.feasible:
        return EXIT_INFEASIBLE
    return EXIT_OK if result.report.cohen_ok else EXIT_COHEN


def cmd_factor(cfg: RunConfig, stdout) -> int:
    sq = _design(cfg)
    f = spectral_factorize(sq, cfg.precision or FACTOR_DIGITS)
    values = f.exact if f.exact is not None else f.c
    if cfg.fmt == "json":
        meta = {
            "c": [float(v) for v in f.c],
            "precision": f.precision_digits,
            "ortho_residual": f.ortho_residual,
            "ladder_discrepancy": f.ladder_discrepancy,
        }
        text = json.dumps(meta, indent=1) + "\n"
    else:
        text = format_coefficients(values)
    _emit(cfg, text, stdout)
    return EXIT_OK


def table_cells(max_2n: int, columns, starts=None, precision=None):
    """Best s0 per (2N, n_z) cell; None for cells without vanishing moments, nan on failure."""
    cells = {}
    for n2 in range(2, max_2n + 1, 2):
        N = n2 // 2
        for n_z in columns:
            if N - 2 * n_z < 1:
                cells[(n2, n_z)] = None
                continue
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    if n_z == 0:
                        s0, roots = regularity(daubechies(N, precision)).s0, ()
                    else:
                        res = optimize_roots(N, n_z, starts=starts or default_starts(n_z), precision=precision)
                        s0, roots = res.best_s0, res.best_roots
                cells[(n2, n_z)] = (s0, roots)
            except (DesignError, RegularityError, DivisibilityError, ArithmeticError, np.linalg.LinAlgError) as exc:
                print(f"warning: cell 2N={n2} nz={n_z} failed: {exc}", file=sys.stderr)
                cells[(n2, n_z)] = float("nan")
    return cells


def cmd_table(cfg: RunConfig, stdout) -> int:
    cells = table_cells(cfg.max_2n, cfg.columns, cfg.starts, cfg.precision)
    header = ["2N"] + [f"nz={k}" for k in cfg.columns]
    rows = []
    for n2 in range(2, cfg.max_2n + 1, 2):
        row = [n2]
        for k in cfg.columns:
            v = cells[(n2, k)]
            row.append("" if v is None else "NA" if isinstance(v, float) else f"{v[0]:.2f}")
        rows.append(row)
    side = [
        {"2N": n2, "nz": k, "s0": (v[0] if isinstance(v, tuple) else None), "roots": list(v[1]) if isinstance(v, tuple) else None}
        for (n2, k), v in sorted(cells.items())
    ]
    if cfg.fmt == "json":
        _emit(cfg, json.dumps(side, indent=1) + "\n", stdout)
        return EXIT_OK
    _emit(cfg, table_csv(header, rows), stdout)
    if cfg.out:
        digest = atomic_write(cfg.out + ".json", (json.dumps(side, indent=1) + "\n").encode("utf-8"))
        print(f"{cfg.out}.json sha256:{digest}", file=stdout)
    return EXIT_OK


def cmd_scan(cfg: RunConfig, stdout) -> int:
    rows = scan(cfg.N, cfg.n_z, [interior_grid(cfg.grid)] * cfg.n_z, cfg.precision)
    header = [f"z{i + 1}" for i in range(cfg.n_z)] + ["s0", "feasible"]
    _emit(cfg, table_csv(header, [r[:-1] + (int(r[-1]),) for r in rows]), stdout)
    return EXIT_OK


def cmd_phi(cfg: RunConfig, stdout) -> int:
    x, v = phi_samples(_filter(cfg), cfg.levels)
    _emit(cfg, table_csv(["x", "phi"], zip(x, v)), stdout)
    return EXIT_OK


def cmd_phihat(cfg: RunConfig, stdout) -> int:
    xi = np.linspace(0.0, cfg.xi_max, cfg.grid or 512)
    _emit(cfg, table_csv(["xi", "abs_phihat"], zip(xi, phihat_product(_filter(cfg), xi, cfg.J))), stdout)
    return EXIT_OK


HANDLERS = {
    "exponent": cmd_exponent,
    "optimize": cmd_optimize,
    "factor": cmd_factor,
    "table": cmd_table,
    "scan": cmd_scan,
    "phi": cmd_phi,
    "phihat": cmd_phihat,
}


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        cfg = RunConfig.from_args(build_parser().parse_args(argv))
        return HANDLERS[cfg.command](cfg, stdout)
    except UsageError as exc:
        print(f"wavereg: error: {exc}", file=stderr)
        return EXIT_USAGE
    except (DesignError, ValueError) as exc:
        print(f"wavereg: error: {exc}", file=stderr)
        return EXIT_USAGE
    except FactorizationError as exc:
        print(f"wavereg: factorization failed: {exc}", file=stderr)
        return EXIT_INFEASIBLE
    except (RegularityError, DivisibilityError, ArithmeticError) as exc:
        print(f"wavereg: computation failed: {exc}", file=stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
