"""Command-line interface and curve I/O.

Subcommands: gap-exact, pmin-exact, micro, simulate, compare, selftest,
spectrum.  Curves are written as CSV (header `abscissa,value`, 17
significant digits, LF line endings) or as a single JSON object; output
for identical flags is byte-identical, Monte Carlo included.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .exact import VARIANT_HS, VARIANT_SB, EnsembleParams, gap_exact_curve, pmin_exact_curve
from .microscopic import MicroParams, local_scale, micro_gap_curve, micro_pmin_curve
from .montecarlo import McConfig, ks_distance, sample_smallest
from .spectrum import CorrelationSpectrum, build_spectrum

CURVE_KINDS = ("gap_exact", "pmin_exact", "micro_gap", "micro_pmin", "mc_ecdf")
CURVE_SCALES = ("raw_t", "microscopic_u")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_TEST_FAILED = 2


class CliError(ValueError):
    pass


@dataclass
class Curve:
    """Ordered (abscissa, value) samples of one quantity."""

    kind: str
    scale: str
    points: list[tuple[float, float]]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in CURVE_KINDS:
            raise ValueError(f"unknown curve kind {self.kind!r}")
        if self.scale not in CURVE_SCALES:
            raise ValueError(f"unknown curve scale {self.scale!r}")
        xs = [a for a, _ in self.points]
        if any(not np.isfinite(a) or not np.isfinite(v) for a, v in self.points):
            raise ValueError("curve points must be finite")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("curve abscissas must be strictly increasing")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def curve_to_csv(curve: Curve) -> str:
    lines = ["abscissa,value"]
    lines.extend(f"{_fmt(a)},{_fmt(v)}" for a, v in curve.points)
    return "\n".join(lines) + "\n"


def curve_to_json(curve: Curve) -> str:
    obj = {
        "meta": curve.meta,
        "kind": curve.kind,
        "scale": curve.scale,
        "points": [[float(a), float(v)] for a, v in curve.points],
    }
    return json.dumps(obj) + "\n"


def curve_from_json(text: str) -> Curve:
    obj = json.loads(text)
    return Curve(
        kind=obj["kind"],
        scale=obj["scale"],
        points=[(float(a), float(v)) for a, v in obj["points"]],
        meta=obj.get("meta", {}),
    )


def write_curve(curve: Curve, fmt: str, destination: str | None) -> None:
    """Serialize a curve to stdout or a file, byte-stable."""
    if fmt == "csv":
        text = curve_to_csv(curve)
    elif fmt == "json":
        text = curve_to_json(curve)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if destination is None:
        sys.stdout.write(text)
    else:
        try:
            Path(destination).write_bytes(text.encode("utf-8"))
        except OSError as exc:
            raise CliError(f"cannot write {destination!r}: {exc}") from exc


def parse_grid(token: str) -> np.ndarray:
    """`a:b:N` is N points uniformly on [a, b] inclusive."""
    parts = token.split(":")
    if len(parts) != 3:
        raise CliError(f"grid must look like a:b:N, got {token!r}")
    try:
        a, b = float(parts[0]), float(parts[1])
        count = int(parts[2])
    except ValueError:
        raise CliError(f"grid must look like a:b:N with numeric fields, got {token!r}") from None
    if count < 1:
        raise CliError(f"grid point count must be >= 1, got {count} in {token!r}")
    if count > 1 and b <= a:
        raise CliError(f"grid needs b > a for N > 1, got {token!r}")
    return np.linspace(a, b, count)


def _parse_number(tok: str) -> complex:
    try:
        return float(tok)
    except ValueError:
        try:
            return complex(tok)
        except ValueError:
            raise CliError(f"invalid number {tok!r} in spectrum input") from None


def read_spectrum(source: str) -> CorrelationSpectrum:
    """Eigenvalue list (inline or file) or a full correlation matrix file.

    A multi-row file is treated as a square symmetric/Hermitian matrix and
    diagonalized; a single row (or inline string) is the eigenvalue list.
    """
    if os.path.isfile(source):
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot read {source!r}: {exc}") from exc
    else:
        text = source
    rows = [line.replace(",", " ").split() for line in text.splitlines()]
    rows = [r for r in rows if r]
    if not rows:
        raise CliError(f"no numbers found in spectrum input {source!r}")
    if len(rows) == 1:
        values = [complex(_parse_number(tok)) for tok in rows[0]]
        if any(v.imag != 0 for v in values):
            raise CliError("eigenvalue list must be real")
        try:
            return build_spectrum([v.real for v in values])
        except ValueError as exc:
            raise CliError(str(exc)) from exc
    dim = len(rows)
    if any(len(r) != dim for r in rows):
        raise CliError(f"matrix must be square, got {dim} rows of lengths {[len(r) for r in rows]}")
    entries = [[_parse_number(tok) for tok in row] for row in rows]
    mat = np.array(entries, dtype=complex)
    if np.all(mat.imag == 0):
        mat = mat.real
    scale = float(np.abs(mat).max()) if mat.size else 0.0
    if not np.allclose(mat, mat.conj().T, atol=1e-10 * max(scale, 1.0), rtol=0.0):
        raise CliError("correlation matrix must be symmetric/Hermitian")
    eigs = np.linalg.eigvalsh(mat)
    if np.any(eigs <= 0.0):
        raise CliError("C must be positive definite")
    return build_spectrum(eigs)


def _spectrum_meta(spectrum: CorrelationSpectrum) -> str:
    payload = ",".join(_fmt(x) for x in spectrum.lambdas)
    return hashlib.sha256(payload.encode("ascii")).hexdigest()[:16]


def _spectrum_from_args(args) -> CorrelationSpectrum:
    if args.lambdas is not None:
        return read_spectrum(args.lambdas)
    return read_spectrum(args.spectrum_file)


def _ensemble_meta(params: EnsembleParams) -> dict:
    return {"beta": params.beta, "p": params.p, "n": params.n, "gamma": params.gamma}


def _cmd_gap_exact(args) -> int:
    spectrum = _spectrum_from_args(args)
    params = EnsembleParams(beta=args.beta, p=args.p, n=args.n)
    ts = parse_grid(args.t)
    values = gap_exact_curve(params, spectrum, ts, variant=args.variant)
    curve = Curve(
        kind="gap_exact",
        scale="raw_t",
        points=list(zip(ts.tolist(), values.tolist())),
        meta={
            "version": __version__,
            "params": _ensemble_meta(params),
            "variant": args.variant,
            "spectrum_sha256": _spectrum_meta(spectrum),
        },
    )
    write_curve(curve, args.format, args.out)
    return EXIT_OK


def _cmd_pmin_exact(args) -> int:
    spectrum = _spectrum_from_args(args)
    params = EnsembleParams(beta=args.beta, p=args.p, n=args.n)
    ts = parse_grid(args.t)
    values = np.maximum(pmin_exact_curve(params, spectrum, ts), 0.0)  # clamp for reporting only
    curve = Curve(
        kind="pmin_exact",
        scale="raw_t",
        points=list(zip(ts.tolist(), values.tolist())),
        meta={
            "version": __version__,
            "params": _ensemble_meta(params),
            "spectrum_sha256": _spectrum_meta(spectrum),
        },
    )
    write_curve(curve, args.format, args.out)
    return EXIT_OK


def _cmd_micro(args) -> int:
    mp = MicroParams(beta=args.beta, gamma=args.gamma)
    us = parse_grid(args.u)
    if args.quantity == "gap":
        values = micro_gap_curve(mp, us)
        kind = "micro_gap"
    else:
        values = np.maximum(micro_pmin_curve(mp, us), 0.0)
        kind = "micro_pmin"
    curve = Curve(
        kind=kind,
        scale="microscopic_u",
        points=list(zip(us.tolist(), values.tolist())),
        meta={"version": __version__, "params": {"beta": mp.beta, "gamma": mp.gamma}},
    )
    write_curve(curve, args.format, args.out)
    return EXIT_OK


def _ecdf_points(draws: np.ndarray) -> list[tuple[float, float]]:
    n = draws.size
    uniq = np.unique(draws)
    surv = 1.0 - np.searchsorted(draws, uniq, side="right") / n
    return list(zip(uniq.tolist(), surv.tolist()))


def _cmd_simulate(args) -> int:
    spectrum = _spectrum_from_args(args)
    params = EnsembleParams(beta=args.beta, p=args.p, n=args.n)
    run = sample_smallest(
        McConfig(params=params, spectrum=spectrum, samples=args.samples, seed=args.seed)
    )
    curve = Curve(
        kind="mc_ecdf",
        scale="raw_t",
        points=_ecdf_points(run.draws),
        meta={
            "version": __version__,
            "params": _ensemble_meta(params),
            "spectrum_sha256": _spectrum_meta(spectrum),
            "seed": args.seed,
            "samples": args.samples,
        },
    )
    write_curve(curve, args.format, args.out)
    return EXIT_OK


def _cmd_compare(args) -> int:
    spectrum = _spectrum_from_args(args)
    params = EnsembleParams(beta=args.beta, p=args.p, n=args.n)
    run = sample_smallest(
        McConfig(params=params, spectrum=spectrum, samples=args.samples, seed=args.seed)
    )
    ks = ks_distance(run, lambda xs: gap_exact_curve(params, spectrum, xs))
    passed = ks <= args.ks_tol
    report = {
        "version": __version__,
        "params": _ensemble_meta(params),
        "spectrum_sha256": _spectrum_meta(spectrum),
        "samples": args.samples,
        "seed": args.seed,
        "ks_distance": ks,
        "ks_tolerance": args.ks_tol,
        "pass": passed,
    }
    text = json.dumps(report) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_bytes(text.encode("utf-8"))
    return EXIT_OK if passed else EXIT_TEST_FAILED


def _cmd_spectrum(args) -> int:
    spectrum = read_spectrum(args.input)
    text = "\n".join(_fmt(x) for x in spectrum.lambdas) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_bytes(text.encode("utf-8"))
    return EXIT_OK


def _cmd_selftest(args) -> int:
    from .selftest import run_selftest

    ok = run_selftest(verbose=True)
    return EXIT_OK if ok else EXIT_TEST_FAILED


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _add_spectrum_flags(sub: argparse.ArgumentParser) -> None:
    group = sub.add_mutually_exclusive_group(required=True)
    group.add_argument("--lambda", dest="lambdas", help="inline comma/space separated eigenvalues")
    group.add_argument("--spectrum-file", help="file with eigenvalues or a full correlation matrix")


def _add_ensemble_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--beta", type=int, required=True, choices=(1, 2))
    sub.add_argument("--p", type=int, required=True)
    sub.add_argument("--n", type=int, required=True)
    _add_spectrum_flags(sub)


def _add_output_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--out", default=None, help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wishart-edge", description=__doc__)
    parser.add_argument("--version", action="version", version=f"wishart-edge {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("gap-exact", help="exact gap probability curve")
    _add_ensemble_flags(sub)
    sub.add_argument("--t", required=True, help="grid a:b:N on the raw scale")
    sub.add_argument("--variant", choices=(VARIANT_HS, VARIANT_SB), default=VARIANT_HS)
    _add_output_flags(sub)
    sub.set_defaults(func=_cmd_gap_exact)

    sub = subs.add_parser("pmin-exact", help="exact smallest-eigenvalue density curve")
    _add_ensemble_flags(sub)
    sub.add_argument("--t", required=True, help="grid a:b:N, strictly positive")
    _add_output_flags(sub)
    sub.set_defaults(func=_cmd_pmin_exact)

    sub = subs.add_parser("micro", help="microscopic-limit curve")
    sub.add_argument("--beta", type=int, required=True, choices=(1, 2))
    sub.add_argument("--gamma", type=int, required=True)
    sub.add_argument("--u", required=True, help="grid a:b:N on the microscopic scale")
    sub.add_argument("--quantity", choices=("gap", "pmin"), default="gap")
    _add_output_flags(sub)
    sub.set_defaults(func=_cmd_micro)

    sub = subs.add_parser("simulate", help="Monte Carlo smallest-eigenvalue ECDF")
    _add_ensemble_flags(sub)
    sub.add_argument("--samples", type=int, required=True)
    sub.add_argument("--seed", type=int, default=0)
    _add_output_flags(sub)
    sub.set_defaults(func=_cmd_simulate)

    sub = subs.add_parser("compare", help="KS test of Monte Carlo against the exact formula")
    _add_ensemble_flags(sub)
    sub.add_argument("--samples", type=int, required=True)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--ks-tol", type=float, default=0.01)
    sub.add_argument("--out", default=None)
    sub.set_defaults(func=_cmd_compare)

    sub = subs.add_parser("spectrum", help="diagonalize a correlation matrix to eigenvalues")
    sub.add_argument("input", help="matrix or eigenvalue file (or inline list)")
    sub.add_argument("--out", default=None)
    sub.set_defaults(func=_cmd_spectrum)

    sub = subs.add_parser("selftest", help="run the library invariant suite")
    sub.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def console_entry() -> None:
    raise SystemExit(main())
