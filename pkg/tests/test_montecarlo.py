import os

import numpy as np
import pytest

from wishart_edge import (
    EnsembleParams,
    McConfig,
    build_spectrum,
    duality_check,
    gap_dual_mc,
    gap_exact,
    gap_exact_curve,
    ks_distance,
    ks_two_sample,
    sample_smallest,
)
from wishart_edge.montecarlo import _draw_w, _rng, thread_count


@pytest.fixture(scope="module")
def chi2_run():
    params = EnsembleParams(1, 1, 4)
    spec = build_spectrum([1.0])
    return sample_smallest(McConfig(params=params, spectrum=spec, samples=100_000, seed=0))


class TestSampling:
    def test_deterministic_rerun(self):
        cfg = McConfig(EnsembleParams(1, 3, 6), build_spectrum([0.5, 1.0, 2.0]), samples=400, seed=42)
        a = sample_smallest(cfg)
        b = sample_smallest(cfg)
        assert np.array_equal(a.draws, b.draws)
        assert a.samples == 400

    def test_worker_count_does_not_change_draws(self):
        cfg = McConfig(EnsembleParams(2, 3, 5), build_spectrum([0.5, 1.0, 2.0]), samples=600, seed=9)
        saved = os.environ.get("WISHART_EDGE_THREADS")
        try:
            os.environ["WISHART_EDGE_THREADS"] = "1"
            serial = sample_smallest(cfg).draws
            os.environ["WISHART_EDGE_THREADS"] = "4"
            threaded = sample_smallest(cfg).draws
        finally:
            if saved is None:
                os.environ.pop("WISHART_EDGE_THREADS", None)
            else:
                os.environ["WISHART_EDGE_THREADS"] = saved
        assert np.array_equal(serial, threaded)

    def test_draws_sorted_and_clamped(self, chi2_run):
        assert np.all(np.diff(chi2_run.draws) >= 0)
        assert np.all(chi2_run.draws >= 0.0)

    def test_chi2_four_dof_survival(self, chi2_run):
        # p=1, n=4, Lambda=1: the draw is a chi^2 with 4 degrees of freedom
        ks = ks_distance(chi2_run, lambda xs: np.exp(-xs / 2) * (1 + xs / 2))
        assert ks <= 0.006

    def test_small_config_matches_exact(self):
        params = EnsembleParams(2, 2, 3)
        spec = build_spectrum([1.0, 2.0])
        run = sample_smallest(McConfig(params, spec, samples=20_000, seed=3))
        ks = ks_distance(run, lambda xs: gap_exact_curve(params, spec, xs))
        assert ks <= 0.015

    def test_complex_variance_convention(self):
        # E|W_ij|^2 = 1 for beta = 2: real and imaginary parts carry 1/2 each
        acc = 0.0
        count = 2000
        for idx in range(count):
            w = _draw_w(2, 2, 3, _rng(77, 0, idx))
            acc += float(np.mean(np.abs(w) ** 2))
        assert acc / count == pytest.approx(1.0, abs=0.02)

    def test_colored_mean_reconstructs_spectrum(self):
        lam = np.array([0.5, 1.0, 2.0])
        p, n, samples = 3, 5, 100_000
        sqrt_lam = np.sqrt(lam)
        acc = np.zeros((p, p))
        for idx in range(samples):
            w = sqrt_lam[:, None] * _draw_w(1, p, n, _rng(123, 0, idx))
            acc += w @ w.T
        mean = acc / (samples * n)
        tol = 5.0 / np.sqrt(samples) * lam.max()
        assert np.abs(mean - np.diag(lam)).max() <= tol

    def test_full_matrix_coloring_matches_diagonal_law(self, rng):
        lam = [0.5, 1.0, 2.0, 4.0]
        params = EnsembleParams(1, 4, 7)
        spec = build_spectrum(lam)
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        corr = q @ np.diag(lam) @ q.T
        run_diag = sample_smallest(McConfig(params, spec, samples=50_000, seed=1))
        run_full = sample_smallest(McConfig(params, spec, samples=50_000, seed=2, corr=corr))
        assert ks_two_sample(run_diag.draws, run_full.draws) <= 0.01

    def test_config_validation(self):
        spec = build_spectrum([1.0, 2.0])
        with pytest.raises(ValueError):
            McConfig(EnsembleParams(2, 2, 3), spec, samples=0)
        with pytest.raises(ValueError):
            McConfig(EnsembleParams(2, 3, 4), spec, samples=10)
        with pytest.raises(ValueError):
            McConfig(EnsembleParams(2, 2, 3), spec, samples=10, corr=np.eye(3))

    def test_survival_accessor(self, chi2_run):
        ts = np.array([0.0, 1.0, 50.0])
        surv = chi2_run.empirical_survival(ts)
        assert surv[0] == pytest.approx(1.0, abs=1e-4)
        assert surv[2] <= 0.001
        assert np.allclose(chi2_run.ecdf(ts), 1.0 - surv)


class TestThreadCount:
    def test_env_override(self):
        saved = os.environ.get("WISHART_EDGE_THREADS")
        try:
            os.environ["WISHART_EDGE_THREADS"] = "5"
            assert thread_count() == 5
            os.environ["WISHART_EDGE_THREADS"] = "0"
            assert thread_count() >= 1
            os.environ["WISHART_EDGE_THREADS"] = "oops"
            with pytest.raises(ValueError):
                thread_count()
        finally:
            if saved is None:
                os.environ.pop("WISHART_EDGE_THREADS", None)
            else:
                os.environ["WISHART_EDGE_THREADS"] = saved


class TestDualEstimator:
    def test_normalized_at_zero(self):
        spec = build_spectrum([1.0, 2.0])
        est = gap_dual_mc(EnsembleParams(2, 2, 3), spec, 0.0, samples=2_000, seed=3)
        assert est.value == 1.0

    def test_complex_example(self):
        spec = build_spectrum([1.0, 2.0])
        params = EnsembleParams(2, 2, 3)
        est = gap_dual_mc(params, spec, 0.5, samples=2_000_000, seed=3)
        exact = gap_exact(params, spec, 0.5)
        assert abs(est.value - exact) <= 3 * est.stderr

    def test_real_example(self):
        spec = build_spectrum([1.0, 1.0])
        params = EnsembleParams(1, 2, 5)
        est = gap_dual_mc(params, spec, 0.3, samples=2_000_000, seed=4)
        exact = gap_exact(params, spec, 0.3)
        assert abs(est.value - exact) <= 3 * est.stderr


class TestDuality:
    def test_l_zero_sides_identical(self):
        spec = build_spectrum([1.0, 2.0])
        res = duality_check(2, 2, 4, 0, 1, 0.7, spec, samples=5_000, seed=9)
        assert res.lhs == res.rhs
        assert res.n_hat == 4

    def test_z_zero_normalized(self):
        spec = build_spectrum([1.0, 2.0])
        res = duality_check(2, 2, 4, 1, 1, 0.0, spec, samples=5_000, seed=9)
        assert res.lhs == 1.0 and res.rhs == 1.0

    def test_complex_example(self):
        spec = build_spectrum([1.0, 2.0])
        res = duality_check(2, 2, 4, 1, 1, 0.7, spec, samples=200_000, seed=9)
        assert res.n_hat == 3
        assert abs(res.lhs - res.rhs) <= 4 * res.pooled_stderr

    def test_parameter_validation(self):
        spec = build_spectrum([1.0, 2.0])
        with pytest.raises(ValueError, match="n - 2l/beta"):
            duality_check(2, 2, 4, 3, 1, 0.5, spec, samples=100, seed=0)
        with pytest.raises(ValueError, match="n - 2l/beta"):
            duality_check(1, 2, 6, 3, 1, 0.5, spec, samples=100, seed=0)


class TestKsDistance:
    def test_model_equals_empirical(self, chi2_run):
        assert ks_distance(chi2_run, chi2_run.empirical_survival) <= 1.0 / chi2_run.samples + 1e-12

    def test_degenerate_constant_model(self):
        run = sample_smallest(
            McConfig(EnsembleParams(1, 1, 2), build_spectrum([1e-6]), samples=3_000, seed=5)
        )
        # draws concentrate near zero; a constant 0.5 model sits ~0.5 away
        assert ks_distance(run, lambda xs: np.full(np.size(xs), 0.5)) == pytest.approx(0.5, abs=0.03)

    def test_fifty_thousand_from_model(self):
        params = EnsembleParams(2, 1, 2)
        spec = build_spectrum([1.0])
        run = sample_smallest(McConfig(params, spec, samples=50_000, seed=11))
        ks = ks_distance(run, lambda xs: gap_exact_curve(params, spec, xs))
        assert ks <= 1.36 / np.sqrt(50_000)

    def test_scalar_callable_fallback(self, chi2_run):
        subset = McConfig(EnsembleParams(1, 1, 4), build_spectrum([1.0]), samples=500, seed=2)
        run = sample_smallest(subset)
        vec = ks_distance(run, lambda xs: np.exp(-np.asarray(xs) / 2) * (1 + np.asarray(xs) / 2))
        scal = ks_distance(run, lambda x: float(np.exp(-x / 2) * (1 + x / 2)))
        assert vec == scal
