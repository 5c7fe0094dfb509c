"""Built-in invariant suite: every module's contract checks at desk scale.

Run via `wishart-edge selftest`.  Each check raises AssertionError on
violation; the runner prints one line per check and reports overall
success.  The full sweep is budgeted for a few minutes on a laptop.
"""

from __future__ import annotations

import itertools
import math
import os
import time

import numpy as np

from . import cli
from .exact import EnsembleParams, gap_exact_curve, pmin_exact_curve
from .linalg import cholesky, log_det, pfaffian, smallest_eigenvalue
from .microscopic import MicroParams, _micro_mats, local_scale, micro_gap, micro_gap_curve, micro_pmin_curve
from .montecarlo import (
    McConfig,
    _draw_w,
    _rng,
    duality_check,
    gap_dual_mc,
    ks_distance,
    ks_two_sample,
    sample_smallest,
)
from .special_functions import LogSignedValue, bessel_i, heaviside, log_factorial
from .spectrum import build_spectrum

PAPER_SPECTRUM = (0.6, 1.2, 6.7, 9.3, 10.5, 15.5, 17.2, 20.25, 30.1, 35.4)


def _lsv_matrix(a: np.ndarray):
    return [[LogSignedValue.from_float(float(v)) for v in row] for row in a]


def check_special_functions():
    assert heaviside(3) == 1 and heaviside(0) == 1 and heaviside(-1) == 0
    for m in range(1, 171):
        assert abs(log_factorial(m) - log_factorial(m - 1) - math.log(m)) <= 1e-12
    for m in range(0, 21):
        for x in np.linspace(0.0, 50.0, 11):
            assert bessel_i(-m, float(x)) == bessel_i(m, float(x))
    z = 1e-4
    for m in range(0, 12):
        ratio = math.exp(math.log(bessel_i(m, 2 * z)) + math.lgamma(m + 1) - m * math.log(z))
        assert abs(ratio - 1.0) <= 1e-8
    for m in range(1, 21):
        for x in np.linspace(0.5, 20.0, 14):
            lhs = bessel_i(m - 1, float(x)) - bessel_i(m + 1, float(x))
            rhs = 2 * m / x * bessel_i(m, float(x))
            assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), abs(rhs), 1e-300)


def check_log_signed_arithmetic():
    rng = np.random.default_rng(11)
    values = rng.uniform(-50.0, 50.0, size=200)
    for a, b in zip(values[::2], values[1::2]):
        la, lb = LogSignedValue.from_float(a), LogSignedValue.from_float(b)
        assert abs((la + lb).to_float() - (a + b)) <= 1e-12 * max(1.0, abs(a + b))
        assert abs((la * lb).to_float() - a * b) <= 1e-10 * abs(a * b)
        assert abs((la - lb).to_float() - (a - b)) <= 1e-9 * max(1.0, abs(a - b))
    x = LogSignedValue.from_float(3.5)
    assert (x + (-x)).is_zero and (x * LogSignedValue.zero()).is_zero


def check_linalg_properties():
    rng = np.random.default_rng(5)
    for dim in range(2, 13, 2):
        raw = rng.standard_normal((dim, dim))
        anti = raw - raw.T
        pf = pfaffian(_lsv_matrix(anti))
        det = log_det(_lsv_matrix(anti))
        assert det.sign == 1
        assert abs(2 * pf.log_abs - det.log_abs) <= 1e-9 * max(1.0, abs(det.log_abs))
    raw = rng.standard_normal((6, 6))
    anti = raw - raw.T
    swapped = anti.copy()
    swapped[[1, 4], :] = swapped[[4, 1], :]
    swapped[:, [1, 4]] = swapped[:, [4, 1]]
    pf0, pf1 = pfaffian(_lsv_matrix(anti)), pfaffian(_lsv_matrix(swapped))
    assert pf1.sign == -pf0.sign and abs(pf1.log_abs - pf0.log_abs) <= 1e-9
    a = rng.standard_normal((5, 5))
    b = rng.standard_normal((5, 5))
    dab = log_det(_lsv_matrix(a @ b))
    da, db = log_det(_lsv_matrix(a)), log_det(_lsv_matrix(b))
    assert dab.sign == da.sign * db.sign
    assert abs(dab.log_abs - da.log_abs - db.log_abs) <= 1e-9 * max(1.0, abs(dab.log_abs))
    # magnitude-extraction path: rows spanning e^+-600; det = 1 - e exactly
    wide = [
        [LogSignedValue(1, 600.0), LogSignedValue(1, 2.0)],
        [LogSignedValue(1, -1.0), LogSignedValue(1, -600.0)],
    ]
    det = log_det(wide)
    assert det.sign == -1 and abs(det.log_abs - math.log(math.e - 1.0)) <= 1e-12
    q, _ = np.linalg.qr(rng.standard_normal((7, 7)))
    diag = np.sort(rng.uniform(0.5, 9.0, size=7))
    assert abs(smallest_eigenvalue(q @ np.diag(diag) @ q.T) - diag[0]) <= 1e-9
    c = 0.5 * np.ones((3, 3)) + 0.5 * np.eye(3)
    low = cholesky(c)
    assert np.linalg.norm(low @ low.T - c) <= 1e-12 * np.linalg.norm(c)


def check_spectrum_invariants():
    assert [round(v.to_float()) for v in build_spectrum([1, 1, 1]).e] == [1, 3, 3, 1]
    assert [round(v.to_float()) for v in build_spectrum([1, 2, 3]).e] == [1, 6, 11, 6]
    spec = build_spectrum(PAPER_SPECTRUM)
    for k in range(len(PAPER_SPECTRUM) + 1):
        brute = sum(math.prod(c) for c in itertools.combinations(PAPER_SPECTRUM, k))
        assert abs(spec.log_e[k] - math.log(brute)) <= 1e-10
    perm = build_spectrum(np.array(PAPER_SPECTRUM)[::-1])
    assert np.allclose(perm.log_e, spec.log_e, atol=1e-12, rtol=0.0)
    scaled = build_spectrum(2.5 * np.array(PAPER_SPECTRUM))
    ks = np.arange(len(PAPER_SPECTRUM) + 1)
    assert np.allclose(scaled.log_e, spec.log_e + ks * math.log(2.5), rtol=0.0, atol=1e-10)
    t = 1.25 * max(PAPER_SPECTRUM)
    poly = sum((-1) ** k * spec.e[k].to_float() * t ** (spec.p - k) for k in ks)
    direct = math.prod(t - lam for lam in PAPER_SPECTRUM)
    assert abs(poly - direct) <= 1e-9 * abs(direct)


def check_exact_closed_forms():
    lam = 1.7
    ts = np.linspace(0.0, 20 * lam, 101)
    spec1 = build_spectrum([lam])
    x = ts / lam
    cases = [
        (EnsembleParams(2, 1, 2), np.exp(-x) * (1 + x)),
        (EnsembleParams(2, 1, 3), np.exp(-x) * (1 + x + x**2 / 2)),
        (EnsembleParams(1, 1, 2), np.exp(-x / 2)),
        (EnsembleParams(1, 1, 4), np.exp(-x / 2) * (1 + x / 2)),
    ]
    for params, expected in cases:
        got = gap_exact_curve(params, spec1, ts)
        rel = np.abs(got - expected) / np.maximum(np.abs(expected), 1e-300)
        assert rel.max() <= 1e-10, (params, rel.max())


def check_exact_variant_equivalence():
    rng = np.random.default_rng(23)
    for _ in range(6):
        beta = int(rng.integers(1, 3))
        p = int(rng.integers(1, 13))
        gamma = int(rng.integers(0, 5))
        n = p + gamma if beta == 2 else p + 2 * gamma + 1
        spec = build_spectrum(rng.uniform(0.2, 12.0, size=p))
        ts = np.linspace(0.0, 2.0 * p / spec.trace_inv, 40)
        hs = gap_exact_curve(EnsembleParams(beta, p, n), spec, ts, variant="hs")
        sb = gap_exact_curve(EnsembleParams(beta, p, n), spec, ts, variant="sb")
        keep = hs > 1e-120
        rel = np.abs(hs[keep] - sb[keep]) / hs[keep]
        assert rel.max() <= 1e-10, (beta, p, gamma, rel.max())


def check_exact_shape_properties():
    spec = build_spectrum(PAPER_SPECTRUM)
    for beta, n in ((1, 17), (2, 15)):
        params = EnsembleParams(beta, 10, n)
        ts = np.linspace(0.0, 12.0, 80)
        gap = gap_exact_curve(params, spec, ts)
        assert gap[0] == 1.0
        assert np.all(np.diff(gap) <= 1e-12)
        assert np.all((gap >= -1e-12) & (gap <= 1.0 + 1e-12))
        # scale covariance
        c = 3.0
        scaled = gap_exact_curve(params, build_spectrum(c * np.array(PAPER_SPECTRUM)), c * ts)
        keep = gap > 1e-120
        assert np.max(np.abs(scaled[keep] - gap[keep]) / gap[keep]) <= 1e-10
    params = EnsembleParams(1, 4, 5)  # gamma = 0
    spec4 = build_spectrum([0.5, 1.0, 2.0, 4.0])
    ts = np.linspace(0.0, 3.0, 30)
    assert np.allclose(
        gap_exact_curve(params, spec4, ts), np.exp(-0.5 * ts * spec4.trace_inv), rtol=0.0, atol=1e-14
    )


def check_exact_derivative_identity():
    spec = build_spectrum(PAPER_SPECTRUM)
    for beta, n in ((1, 13), (2, 13)):
        params = EnsembleParams(beta, 10, n)
        ts = np.linspace(0.4, 6.0, 25)
        dens = pmin_exact_curve(params, spec, ts)
        h = 1e-5 * ts
        fd = (gap_exact_curve(params, spec, ts - h) - gap_exact_curve(params, spec, ts + h)) / (2 * h)
        keep = dens > 1e-8
        rel = np.abs(dens[keep] - fd[keep]) / dens[keep]
        assert rel.max() <= 1e-6, (beta, n, rel.max())


def check_micro_properties():
    for beta in (1, 2):
        assert micro_gap(MicroParams(beta, 2), 0.0) == 1.0
    us = np.linspace(0.0, 40.0, 81)
    assert np.allclose(micro_gap_curve(MicroParams(2, 0), us), np.exp(-us / 4), rtol=0.0, atol=1e-14)
    for beta, gamma in ((2, 1), (2, 2), (1, 1), (1, 2)):
        mp = MicroParams(beta, gamma)
        gap = micro_gap_curve(mp, us)
        assert np.all(np.diff(gap) <= 1e-12) and np.all((gap >= -1e-12) & (gap <= 1 + 1e-12))
        uu = np.linspace(0.5, 25.0, 20)
        dens = micro_pmin_curve(mp, uu)
        h = 1e-4 * uu  # float central differences; tighter steps drown in round-off
        fd = (micro_gap_curve(mp, uu - h) - micro_gap_curve(mp, uu + h)) / (2 * h)
        keep = dens > 1e-4
        assert np.max(np.abs(dens[keep] - fd[keep]) / dens[keep]) <= 1e-6
    # L^(l) differs from L^(0) only in row l (Bessel order shifted by one)
    mp = MicroParams(2, 3)
    u = np.array([7.3])
    s0, l0 = _micro_mats(mp, u)
    for row in range(1, mp.kernel_dim + 1):
        s1, l1 = _micro_mats(mp, u, deriv_row=row)
        same = np.ones(mp.kernel_dim, dtype=bool)
        same[row - 1] = False
        assert np.array_equal(s1[0, same, :], s0[0, same, :])
        assert np.array_equal(l1[0, same, :], l0[0, same, :])
        assert not np.array_equal(l1[0, row - 1, :], l0[0, row - 1, :])


def check_micro_universality():
    us = np.linspace(0.0, 30.0, 61)
    mp = MicroParams(2, 1)
    reference = micro_gap_curve(mp, us)
    for spectrum_family in (lambda p: np.ones(p), lambda p: np.linspace(0.5, 2.5, p)):
        sups = []
        for p in (50, 100, 200):
            spec = build_spectrum(spectrum_family(p))
            scale = local_scale(spec, p)
            gap = gap_exact_curve(EnsembleParams(2, p, p + 1), spec, scale.t_of_u(us))
            sups.append(np.abs(gap - reference).max())
        assert sups[0] > sups[1] > sups[2], sups
    # microscopic density times du/dt reproduces the raw-scale density
    p = 200
    spec = build_spectrum(np.linspace(0.5, 2.5, p))
    scale = local_scale(spec, p)
    uu = np.linspace(1.0, 12.0, 12)
    micro = micro_pmin_curve(MicroParams(2, 1), uu)
    raw = pmin_exact_curve(EnsembleParams(2, p, p + 1), spec, scale.t_of_u(uu))
    rel = np.abs(micro - raw / (4 * p * scale.eta)) / micro
    assert rel.max() <= 0.02, rel.max()


def check_montecarlo_determinism():
    params = EnsembleParams(1, 3, 6)
    spec = build_spectrum([0.5, 1.0, 2.0])
    cfg = McConfig(params=params, spectrum=spec, samples=500, seed=42)
    a = sample_smallest(cfg).draws
    b = sample_smallest(cfg).draws
    assert np.array_equal(a, b)
    saved = os.environ.get("WISHART_EDGE_THREADS")
    try:
        os.environ["WISHART_EDGE_THREADS"] = "3"
        c = sample_smallest(cfg).draws
    finally:
        if saved is None:
            os.environ.pop("WISHART_EDGE_THREADS", None)
        else:
            os.environ["WISHART_EDGE_THREADS"] = saved
    assert np.array_equal(a, c)


def check_montecarlo_chi_square():
    params = EnsembleParams(1, 1, 4)
    spec = build_spectrum([1.0])
    run = sample_smallest(McConfig(params=params, spectrum=spec, samples=100_000, seed=0))
    ks = ks_distance(run, lambda xs: np.exp(-xs / 2) * (1 + xs / 2))
    assert ks <= 0.006, ks


def check_montecarlo_coloring():
    lam = np.array([0.5, 1.0, 2.0])
    p, n, samples = 3, 5, 100_000
    sqrt_lam = np.sqrt(lam)
    acc = np.zeros((p, p))
    for idx in range(samples):
        w = sqrt_lam[:, None] * _draw_w(1, p, n, _rng(123, 0, idx))
        acc += w @ w.T
    mean = acc / (samples * n)
    tol = 5.0 / math.sqrt(samples) * lam.max()
    assert np.abs(mean - np.diag(lam)).max() <= tol


def check_montecarlo_rotation_invariance():
    lam = [0.5, 1.0, 2.0, 4.0]
    params = EnsembleParams(1, 4, 7)
    spec = build_spectrum(lam)
    rng = np.random.default_rng(7)
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    corr = q @ np.diag(lam) @ q.T
    run_diag = sample_smallest(McConfig(params=params, spectrum=spec, samples=50_000, seed=1))
    run_full = sample_smallest(McConfig(params=params, spectrum=spec, samples=50_000, seed=2, corr=corr))
    assert ks_two_sample(run_diag.draws, run_full.draws) <= 0.01


def check_dual_estimator():
    spec = build_spectrum([1.0, 2.0])
    params = EnsembleParams(2, 2, 3)
    assert gap_dual_mc(params, spec, 0.0, samples=2_000, seed=3).value == 1.0
    est = gap_dual_mc(params, spec, 0.5, samples=200_000, seed=3)
    exact = gap_exact_curve(params, spec, [0.5])[0]
    assert abs(est.value - exact) <= 3 * est.stderr, (est, exact)


def check_duality():
    spec = build_spectrum([1.0, 2.0])
    trivial = duality_check(2, 2, 4, 0, 1, 0.7, spec, samples=20_000, seed=9)
    assert trivial.lhs == trivial.rhs
    zzero = duality_check(2, 2, 4, 1, 1, 0.0, spec, samples=20_000, seed=9)
    assert zzero.lhs == 1.0 and zzero.rhs == 1.0
    res = duality_check(2, 2, 4, 1, 1, 0.7, spec, samples=200_000, seed=9)
    assert abs(res.lhs - res.rhs) <= 4 * res.pooled_stderr, res


def check_ks_distance():
    params = EnsembleParams(1, 1, 2)
    spec = build_spectrum([1.0])
    run = sample_smallest(McConfig(params=params, spectrum=spec, samples=2_000, seed=5))

    def own_survival(xs):
        return run.empirical_survival(xs)

    assert ks_distance(run, own_survival) <= 1.0 / run.samples + 1e-12
    assert abs(ks_distance(run, lambda xs: np.full(np.size(xs), 0.5)) - 0.5) <= 0.05


def check_cli_io(tmpdir: str):
    base = os.path.join(tmpdir, "curve")
    args = [
        "simulate", "--beta", "1", "--p", "2", "--n", "5", "--lambda", "1,2",
        "--samples", "400", "--seed", "6", "--format", "json", "--out",
    ]
    assert cli.main(args + [base + "1.json"]) == 0
    assert cli.main(args + [base + "2.json"]) == 0
    with open(base + "1.json", "rb") as fa, open(base + "2.json", "rb") as fb:
        b1, b2 = fa.read(), fb.read()
    assert b1 == b2
    curve = cli.curve_from_json(b1.decode("utf-8"))
    assert cli.curve_to_json(curve).encode("utf-8") == b1
    rc = cli.main([
        "gap-exact", "--beta", "2", "--p", "1", "--n", "2", "--lambda", "1",
        "--t", "0:5:11", "--out", base + ".csv",
    ])
    assert rc == 0
    with open(base + ".csv", "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    assert lines[0] == "abscissa,value" and lines[1] == "0,1"
    assert cli.main(["gap-exact", "--beta", "2", "--p", "1", "--n", "2",
                     "--lambda", "1", "--t", "bogus"]) == 1


CHECKS = [
    ("special_functions", check_special_functions),
    ("log_signed_arithmetic", check_log_signed_arithmetic),
    ("linalg_properties", check_linalg_properties),
    ("spectrum_invariants", check_spectrum_invariants),
    ("exact_closed_forms", check_exact_closed_forms),
    ("exact_variant_equivalence", check_exact_variant_equivalence),
    ("exact_shape_properties", check_exact_shape_properties),
    ("exact_derivative_identity", check_exact_derivative_identity),
    ("micro_properties", check_micro_properties),
    ("micro_universality", check_micro_universality),
    ("montecarlo_determinism", check_montecarlo_determinism),
    ("montecarlo_chi_square", check_montecarlo_chi_square),
    ("montecarlo_coloring", check_montecarlo_coloring),
    ("montecarlo_rotation_invariance", check_montecarlo_rotation_invariance),
    ("dual_estimator", check_dual_estimator),
    ("duality", check_duality),
    ("ks_distance", check_ks_distance),
]


def run_selftest(verbose: bool = True) -> bool:
    import tempfile

    ok = True
    for name, fn in CHECKS:
        start = time.perf_counter()
        try:
            fn()
            status = "ok"
        except AssertionError as exc:
            ok = False
            status = f"FAIL ({exc})"
        except Exception as exc:  # noqa: BLE001 - report, keep running
            ok = False
            status = f"ERROR ({type(exc).__name__}: {exc})"
        if verbose:
            print(f"{status:<40s} {name} [{time.perf_counter() - start:.1f}s]")
    with tempfile.TemporaryDirectory() as tmpdir:
        start = time.perf_counter()
        try:
            check_cli_io(tmpdir)
            status = "ok"
        except AssertionError as exc:
            ok = False
            status = f"FAIL ({exc})"
        if verbose:
            print(f"{status:<40s} cli_io [{time.perf_counter() - start:.1f}s]")
    if verbose:
        print("selftest:", "PASS" if ok else "FAIL")
    return ok
