import itertools
import math

import numpy as np
import pytest
from scipy.integrate import quad

from lobtail.core import EstimationError, GevParams, Method
from lobtail.gev import (
    EULER_GAMMA,
    fit_gev_lmom,
    fit_gev_mixed,
    fit_gev_mle,
    gev_cdf,
    gev_pdf,
    gev_quantile,
    gev_sample,
    mixed_profile_grad,
    mixed_profile_loglik,
    sample_lmoments,
    _location_scale_at,
    _shape_from_tau3,
)


def brute_force_lmoment(data, r):
    """Average the order-statistic combination over every size-r subsample."""
    x = np.asarray(data, dtype=float)
    total = 0.0
    count = 0
    for subset in itertools.combinations(x, r):
        ordered = sorted(subset)
        acc = 0.0
        for k in range(r):
            acc += (-1) ** k * math.comb(r - 1, k) * ordered[r - 1 - k]
        total += acc / r
        count += 1
    return total / count


# ---------------------------------------------------------------------------
# distribution functions
# ---------------------------------------------------------------------------


def test_gumbel_cdf_at_location():
    p = GevParams(mu=2.0, sigma=1.5, gamma=0.0)
    assert gev_cdf(2.0, p) == pytest.approx(math.exp(-1.0))


def test_quantile_cdf_roundtrip_all_shape_signs():
    rng = np.random.default_rng(1)
    for g in (-0.4, 0.0, 0.3, 1.2):
        p = GevParams(mu=0.5, sigma=2.0, gamma=g)
        for q in rng.uniform(0.01, 0.99, 10):
            assert gev_cdf(gev_quantile(q, p), p) == pytest.approx(q, abs=1e-10)


def test_support_lower_endpoint_positive_shape():
    # support starts at mu - sigma/gamma = -2; just inside, the CDF is
    # positive once t^(-1/g) is representable
    p = GevParams(mu=0.0, sigma=1.0, gamma=0.5)
    assert gev_cdf(-2.0, p) == 0.0
    assert gev_pdf(-2.0, p) == 0.0
    assert gev_pdf(-2.5, p) == 0.0
    assert gev_cdf(-1.9, p) > 0.0


def test_support_upper_endpoint_negative_shape():
    p = GevParams(mu=0.0, sigma=1.0, gamma=-0.5)
    assert gev_cdf(2.0, p) == 1.0
    assert gev_cdf(5.0, p) == 1.0
    assert gev_pdf(5.0, p) == 0.0


def test_quantile_rejects_bad_probability():
    p = GevParams(0.0, 1.0, 0.1)
    for q in (0.0, 1.0, -0.2, 1.3):
        with pytest.raises(ValueError):
            gev_quantile(q, p)


@pytest.mark.parametrize("g", [-0.4, 0.0, 0.4])
def test_pdf_integrates_to_one(g):
    p = GevParams(mu=0.0, sigma=1.0, gamma=g)
    if g > 0:
        lo, hi = -1.0 / g + 1e-12, np.inf
    elif g < 0:
        lo, hi = -np.inf, -1.0 / g - 1e-12
    else:
        lo, hi = -np.inf, np.inf
    val, _ = quad(lambda t: gev_pdf(t, p), lo, hi, limit=300)
    assert val == pytest.approx(1.0, abs=1e-6)


def test_sample_deterministic():
    p = GevParams(0.0, 1.0, 0.2)
    assert np.array_equal(gev_sample(p, 100, 5), gev_sample(p, 100, 5))


# ---------------------------------------------------------------------------
# sample L-moments
# ---------------------------------------------------------------------------


def test_lambda2_matches_pairwise_identity():
    # the (n-1)-(K-n) weighting equals half the mean absolute pairwise
    # difference; on {0, 1} that is 0.5
    rng = np.random.default_rng(2)
    for n in (2, 5, 9):
        x = rng.uniform(0, 10, n)
        i = np.arange(1, n + 1)
        xs = np.sort(x)
        weighted = float(np.sum(((i - 1) - (n - i)) * xs) / (n * (n - 1)))
        pairwise = np.abs(x[:, None] - x[None, :]).sum() / (2 * n * (n - 1))
        assert weighted == pytest.approx(pairwise, rel=1e-12)
    xs01 = np.array([0.0, 1.0])
    assert float(np.sum(((np.arange(1, 3) - 1) - (2 - np.arange(1, 3))) * xs01) / 2) == 0.5


def test_lmoments_basics():
    lm = sample_lmoments([1.0, 2.0, 3.0])
    assert lm.lambda1 == pytest.approx(2.0)
    assert lm.tau3 == pytest.approx(0.0, abs=1e-14)


def test_lmoments_exponential_grid_tau3():
    # exponential L-skewness is 1/3
    n = 10_000
    p = (2 * np.arange(1, n + 1) - 1) / (2 * n)
    lm = sample_lmoments(-np.log1p(-p))
    assert lm.tau3 == pytest.approx(1.0 / 3.0, abs=0.01)


def test_lmoments_match_brute_force_oracle():
    rng = np.random.default_rng(3)
    for n in (4, 7, 10):
        x = rng.uniform(-5, 5, n)
        lm = sample_lmoments(x)
        assert lm.lambda1 == pytest.approx(brute_force_lmoment(x, 1), abs=1e-12)
        assert lm.lambda2 == pytest.approx(brute_force_lmoment(x, 2), abs=1e-12)
        assert lm.lambda3 == pytest.approx(brute_force_lmoment(x, 3), abs=1e-12)


def test_lmoments_degenerate():
    with pytest.raises(EstimationError):
        sample_lmoments(np.ones(20))


# ---------------------------------------------------------------------------
# pure L-moment fit
# ---------------------------------------------------------------------------


def test_shape_equation_gumbel_point():
    tau3_at_zero = 2.0 * math.log(3.0) / math.log(2.0) - 3.0
    g, interior = _shape_from_tau3(tau3_at_zero)
    assert g == pytest.approx(0.0, abs=1e-9)
    assert interior


def test_gumbel_limit_scale_location():
    mu, sigma = _location_scale_at(0.0, 10.0, 2.0)
    assert sigma == pytest.approx(2.0 / math.log(2.0))
    assert mu == pytest.approx(10.0 - EULER_GAMMA * sigma)


def test_lmom_fit_recovers_shape():
    truth = GevParams(mu=0.0, sigma=1.0, gamma=0.2)
    ghats = [fit_gev_lmom(gev_sample(truth, 10_000, seed=50 + r)).params.gamma
             for r in range(20)]
    assert np.mean(ghats) == pytest.approx(0.2, abs=0.03)


def test_lmom_fit_method_tag():
    fit = fit_gev_lmom(gev_sample(GevParams(0, 1, 0.1), 500, 1))
    assert fit.method is Method.MOM


def test_lmom_fit_unsolvable_tau3():
    # strongly left-skewed data push tau3 below the -1/3 value attained at
    # the gamma = -1 bracket end
    x = np.concatenate([[-6e9, -2e9, -1e9], np.zeros(30)])
    with pytest.raises(EstimationError):
        fit_gev_lmom(x)


def test_lmom_fit_equivariance_exact():
    x = gev_sample(GevParams(0.3, 1.2, 0.15), 2000, 9)
    a, b = 3.0, -2.0
    f0, f1 = fit_gev_lmom(x), fit_gev_lmom(a * x + b)
    assert f1.params.gamma == pytest.approx(f0.params.gamma, abs=1e-9)
    assert f1.params.sigma == pytest.approx(a * f0.params.sigma, rel=1e-9)
    assert f1.params.mu == pytest.approx(a * f0.params.mu + b, rel=1e-9)


# ---------------------------------------------------------------------------
# MLE
# ---------------------------------------------------------------------------


def test_mle_gumbel_recovery():
    ghats = [fit_gev_mle(gev_sample(GevParams(0, 1, 0.0), 10_000, 60 + r)).params.gamma
             for r in range(20)]
    assert np.mean(ghats) == pytest.approx(0.0, abs=0.02)


def test_mle_improves_on_lmoment_start():
    def loglik(params, x):
        with np.errstate(all="ignore"):
            vals = gev_pdf(x, params)
        return -np.inf if np.any(vals <= 0) else float(np.log(vals).sum())

    for seed in range(5):
        x = gev_sample(GevParams(1.0, 2.0, 0.25), 300, seed)
        start = fit_gev_lmom(x)
        end = fit_gev_mle(x)
        assert loglik(end.params, x) >= loglik(start.params, x) - 1e-9


def test_mle_covariance_present():
    fit = fit_gev_mle(gev_sample(GevParams(0, 1, 0.1), 2000, 4))
    assert fit.covariance is not None
    assert fit.covariance.shape == (3, 3)
    assert np.all(np.diag(fit.covariance) > 0)


def test_mle_equivariance():
    x = gev_sample(GevParams(0.0, 1.0, 0.2), 3000, 8)
    a, b = 2.0, 5.0
    f0, f1 = fit_gev_mle(x), fit_gev_mle(a * x + b)
    assert f1.params.gamma == pytest.approx(f0.params.gamma, abs=5e-4)
    assert f1.params.sigma == pytest.approx(a * f0.params.sigma, rel=5e-4)
    assert f1.params.mu == pytest.approx(a * f0.params.mu + b, rel=5e-4)


def test_mle_respects_gamma_bounds():
    x = gev_sample(GevParams(0, 1, 0.9), 500, 11)
    fit = fit_gev_mle(x, gamma_bounds=(-0.5, 0.5))
    assert -0.5 <= fit.params.gamma <= 0.5
    assert not fit.converged  # boundary solution is flagged


# ---------------------------------------------------------------------------
# mixed estimator
# ---------------------------------------------------------------------------


def test_mixed_deterministic():
    x = gev_sample(GevParams(0, 1, 0.1), 800, 21)
    assert fit_gev_mixed(x).params == fit_gev_mixed(x).params


def test_mixed_recovers_shape():
    ghats = [fit_gev_mixed(gev_sample(GevParams(0, 1, 0.3), 10_000, 70 + r)).params.gamma
             for r in range(20)]
    assert np.mean(ghats) == pytest.approx(0.3, abs=0.05)


def test_mixed_gumbel_recovery():
    ghats = [fit_gev_mixed(gev_sample(GevParams(0, 1, 0.0), 10_000, 90 + r)).params.gamma
             for r in range(20)]
    assert np.mean(ghats) == pytest.approx(0.0, abs=0.03)


def test_mixed_shape_restricted():
    x = gev_sample(GevParams(0, 1, 1.5), 2000, 3)
    fit = fit_gev_mixed(x)
    assert -0.5 <= fit.params.gamma <= 0.5


def test_mixed_profile_gradient_matches_finite_differences():
    rng = np.random.default_rng(13)
    x = gev_sample(GevParams(0.0, 1.0, 0.1), 400, 2)
    lm = sample_lmoments(x)
    for g in (-0.35, -0.12, 0.08, 0.22, 0.4):
        if not np.isfinite(mixed_profile_loglik(g, x, lm)):
            continue
        analytic = mixed_profile_grad(g, x, lm)
        h = 1e-6
        numeric = (mixed_profile_loglik(g + h, x, lm)
                   - mixed_profile_loglik(g - h, x, lm)) / (2 * h)
        assert analytic == pytest.approx(numeric, rel=1e-5)


def test_mixed_small_sample_requirement():
    with pytest.raises(EstimationError):
        fit_gev_mixed(np.arange(5.0))


def test_mixed_equivariance():
    x = gev_sample(GevParams(0.0, 1.0, 0.2), 3000, 15)
    a, b = 2.0, 5.0
    f0, f1 = fit_gev_mixed(x), fit_gev_mixed(a * x + b)
    assert f1.params.gamma == pytest.approx(f0.params.gamma, abs=1e-6)
    assert f1.params.sigma == pytest.approx(a * f0.params.sigma, rel=1e-6)
    assert f1.params.mu == pytest.approx(a * f0.params.mu + b, rel=1e-6)


def test_gev_fitters_return_valid_params_or_raise():
    rng = np.random.default_rng(321)
    for _ in range(20):
        n = int(rng.integers(10, 80))
        x = rng.gumbel(rng.uniform(-5, 5), rng.uniform(0.1, 4), n)
        for fit_fn in (fit_gev_lmom, fit_gev_mixed):
            try:
                fit = fit_fn(x)
            except EstimationError:
                continue
            assert fit.params.sigma > 0
            assert np.isfinite(fit.params.gamma)
