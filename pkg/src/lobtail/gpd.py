"""Generalized Pareto distribution and POT-excess estimators.

Convention: gamma > 0 is a heavy upper tail, so F(x) = 1 - (1 + gamma x / sigma)^(-1/gamma)
on the excess x = value - mu.  The percentile-matching estimators (Pickands,
EPM) are written in the literature with the opposite shape sign, i.e. with
CDF 1 - (1 - g x / sigma)^(1/g); their internals here follow those formulas
verbatim and the resulting shape is negated on output so that every fitter in
this module reports the same convention.  The scale is unaffected by the
bridge.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize_scalar

from .core import EstimationError, Family, FitResult, GpdParams, Method

__all__ = [
    "gpd_cdf",
    "gpd_pdf",
    "gpd_quantile",
    "gpd_sample",
    "fit_gpd_mle",
    "fit_gpd_mom",
    "fit_gpd_pickands",
    "fit_gpd_epm",
    "pickands_raw",
    "epm_pair_solve",
    "gpd_asymptotic_covariance",
]

EPM_PAIR_CAP = 2_000_000  # pairs beyond this are uniformly thinned (seeded)
EPM_EXACT_J = 2000
_TAU_BOUNDARY_EPS = 1e-9


# ---------------------------------------------------------------------------
# distribution functions
# ---------------------------------------------------------------------------


def gpd_cdf(x, p: GpdParams):
    """GPD distribution function on the translated support."""
    y = (np.asarray(x, dtype=float) - p.mu) / p.sigma
    g = p.gamma
    with np.errstate(all="ignore"):
        if g == 0.0:
            out = -np.expm1(-y)
        else:
            t = 1.0 + g * y
            out = np.where(t > 0, -np.expm1(-np.log1p(np.maximum(g * y, -1 + 1e-300)) / g), 1.0)
    out = np.clip(np.where(y < 0, 0.0, out), 0.0, 1.0)
    if np.ndim(x) == 0:
        return float(out)
    return out


def gpd_pdf(x, p: GpdParams):
    """GPD density sigma^(1/gamma) / (sigma + gamma y)^(1/gamma + 1); zero off support."""
    y = (np.asarray(x, dtype=float) - p.mu) / p.sigma
    g = p.gamma
    with np.errstate(all="ignore"):
        if g == 0.0:
            out = np.exp(-y) / p.sigma
        else:
            t = 1.0 + g * y
            out = np.where(t > 0, np.exp(-(1.0 / g + 1.0) * np.log(np.where(t > 0, t, 1.0))) / p.sigma, 0.0)
    out = np.where((y < 0) | ~np.isfinite(out), 0.0, out)
    if np.ndim(x) == 0:
        return float(out)
    return out


def gpd_quantile(q, p: GpdParams):
    """Inverse CDF (absolute coordinates, i.e. mu + excess quantile)."""
    qa = np.asarray(q, dtype=float)
    if np.any((qa <= 0.0) | (qa >= 1.0)):
        raise ValueError("quantile probabilities must lie in (0, 1)")
    g = p.gamma
    if g == 0.0:
        out = p.mu - p.sigma * np.log1p(-qa)
    else:
        out = p.mu + p.sigma * np.expm1(-g * np.log1p(-qa)) / g
    if np.ndim(q) == 0:
        return float(out)
    return out


def gpd_sample(p: GpdParams, n: int, seed: int) -> np.ndarray:
    """n i.i.d. GPD draws by inverse transform, deterministic under seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.0, 1.0, n)
    u = np.clip(u, 1e-300, 1.0 - 1e-16)
    return np.asarray(gpd_quantile(u, p))


def gpd_asymptotic_covariance(gamma: float, sigma: float, j: int) -> np.ndarray:
    """Large-sample MLE covariance (1/J) [[(1+g)^2, -(1+g)s], [-(1+g)s, 2(1+g)s^2]].

    Valid for gamma > -1/2, parameter order (gamma, sigma).
    """
    g, s = gamma, sigma
    return np.array(
        [[(1 + g) ** 2, -(1 + g) * s], [-(1 + g) * s, 2 * (1 + g) * s**2]]
    ) / j


# ---------------------------------------------------------------------------
# maximum likelihood (profile over tau = gamma / sigma)
# ---------------------------------------------------------------------------


def _profile_shape(tau: float, y: np.ndarray) -> float:
    return float(np.mean(np.log1p(tau * y)))


_NLL_INFEASIBLE = 1e300


def _profile_nll(tau: float, y: np.ndarray, tau_lo: float) -> float:
    """Per-sample negative profile log-likelihood ln sigma(tau) + 1 + gamma(tau).

    Infeasible tau returns a large finite sentinel (keeps the bounded scalar
    minimizer's arithmetic clean).
    """
    if tau <= tau_lo:
        return _NLL_INFEASIBLE
    if tau == 0.0:
        return math.log(float(np.mean(y))) + 1.0
    g = _profile_shape(tau, y)
    if g < -1.0:  # excluded by the epsilon condition on the boundary
        return _NLL_INFEASIBLE
    s = g / tau
    if not (s > 0 and np.isfinite(s)):
        return _NLL_INFEASIBLE
    return math.log(s) + 1.0 + g


def _observed_information(y: np.ndarray, g: float, s: float) -> np.ndarray:
    """Negative Hessian of the GPD log-likelihood at (gamma, sigma)."""
    if abs(g) < 1e-4:
        # removable singularity at gamma = 0: differentiate numerically
        def loglik(theta):
            gg, ss = theta
            if ss <= 0:
                return -np.inf
            t = 1.0 + gg * y / ss
            if np.any(t <= 0):
                return -np.inf
            if abs(gg) < 1e-12:
                return -y.size * math.log(ss) - y.sum() / ss
            return -y.size * math.log(ss) - (1 + 1 / gg) * np.log(t).sum()

        h = np.empty((2, 2))
        steps = (1e-5, max(1e-5 * s, 1e-8))
        theta0 = np.array([g, s])
        f0 = loglik(theta0)
        for a in range(2):
            for b in range(a, 2):
                ea = np.zeros(2); ea[a] = steps[a]
                eb = np.zeros(2); eb[b] = steps[b]
                if a == b:
                    val = (loglik(theta0 + ea) - 2 * f0 + loglik(theta0 - ea)) / steps[a] ** 2
                else:
                    val = (
                        loglik(theta0 + ea + eb) - loglik(theta0 + ea - eb)
                        - loglik(theta0 - ea + eb) + loglik(theta0 - ea - eb)
                    ) / (4 * steps[a] * steps[b])
                h[a, b] = h[b, a] = val
        return -h

    denom = s + g * y
    a_sum = np.log1p(g * y / s).sum()
    w1 = np.sum(y / denom)
    w2 = np.sum((y / denom) ** 2)
    v2 = np.sum(y / denom**2)
    j = y.size
    d_gg = -(2.0 / g**3) * a_sum + (2.0 / g**2) * w1 + (1.0 + 1.0 / g) * w2
    d_gs = -w1 / (g * s) + (1.0 + 1.0 / g) * v2
    d_ss = j / s**2 - ((1.0 + g) / s**2) * w1 - ((1.0 + g) / s) * v2
    return -np.array([[d_gg, d_gs], [d_gs, d_ss]])


def fit_gpd_mle(excesses, location: float = 0.0) -> FitResult:
    """Reparameterized GPD maximum likelihood on positive excesses.

    The two-step profile: maximize the one-dimensional profile likelihood in
    tau = gamma / sigma (which has the closed form gamma(tau) mean of
    log1p(tau y)), then recover (gamma, sigma).  tau = 0 is handled by the
    continuity rule gamma = 0, sigma = mean(y).  The feasible region is
    tau > -(1 - eps) / max(y) further restricted to gamma(tau) >= -1, where
    the unrestricted likelihood diverges.

    Covariance is the inverse observed Fisher information at the optimum
    (order (gamma, sigma)); the asymptotic form is available separately via
    :func:`gpd_asymptotic_covariance`.
    """
    y = np.asarray(excesses, dtype=float)
    if y.size < 5:
        raise EstimationError(f"need at least 5 exceedances, got {y.size}")
    if np.any(y <= 0):
        raise EstimationError("excesses must be strictly positive")

    y_max = float(y.max())
    y_mean = float(y.mean())
    tau_lo = -(1.0 - _TAU_BOUNDARY_EPS) / y_max

    # candidate ladder grown geometrically from +-1/mean plus boundary approach
    t0 = 1.0 / y_mean
    cands = [0.0]
    cands += [t0 * 2.0**k for k in range(-26, 14)]
    cands += [-t0 * 2.0**k for k in range(-26, 14)]
    cands += [tau_lo * (1.0 - 2.0**-m) for m in range(1, 40)]
    cands = sorted({t for t in cands if t > tau_lo})
    vals = np.array([_profile_nll(t, y, tau_lo) for t in cands])
    k = int(np.argmin(vals))
    if vals[k] >= _NLL_INFEASIBLE:
        raise EstimationError("profile likelihood undefined on the feasible bracket")

    lo = cands[max(k - 1, 0)]
    hi = cands[min(k + 1, len(cands) - 1)]
    if hi > lo:
        res = minimize_scalar(
            _profile_nll,
            args=(y, tau_lo),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-14},
        )
        tau_hat = float(res.x) if res.fun <= vals[k] else float(cands[k])
    else:
        tau_hat = float(cands[k])
    # prefer the exact tau = 0 path when it is at least as good
    if _profile_nll(0.0, y, tau_lo) <= _profile_nll(tau_hat, y, tau_lo) + 1e-12:
        tau_hat = 0.0

    notes = []
    converged = True
    if tau_hat == 0.0:
        g_hat, s_hat = 0.0, y_mean
        notes.append("tau = 0 continuity path (exponential fit)")
    else:
        g_hat = _profile_shape(tau_hat, y)
        s_hat = g_hat / tau_hat
        if tau_hat - tau_lo < 1e-12 * abs(tau_lo) or g_hat <= -1.0 + 1e-9:
            converged = False
            notes.append("boundary solution: shape at the gamma >= -1 constraint")
        if tau_hat >= cands[-1]:
            converged = False
            notes.append("boundary solution: tau at the search ladder cap")

    covariance = None
    try:
        info = _observed_information(y, g_hat, s_hat)
        covariance = np.linalg.inv(info)
        if not np.all(np.isfinite(covariance)) or np.any(np.diag(covariance) <= 0):
            covariance = None
            notes.append("observed information not positive definite; covariance omitted")
    except np.linalg.LinAlgError:
        notes.append("observed information singular; covariance omitted")

    return FitResult(
        family=Family.GPD,
        method=Method.MLE,
        params=GpdParams(gamma=float(g_hat), sigma=float(s_hat), mu=location),
        sample_size=int(y.size),
        converged=converged,
        covariance=covariance,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# method of moments
# ---------------------------------------------------------------------------


def fit_gpd_mom(excesses, location: float = 0.0) -> FitResult:
    """Closed-form moment matching: gamma = (1 - m^2/s^2)/2, sigma = m (1 + m^2/s^2)/2."""
    y = np.asarray(excesses, dtype=float)
    if y.size < 2:
        raise EstimationError(f"need at least 2 exceedances, got {y.size}")
    m = float(y.mean())
    s2 = float(y.var(ddof=1))
    if s2 <= 0.0:
        raise EstimationError("zero sample variance")
    ratio = m * m / s2
    g_hat = 0.5 * (1.0 - ratio)
    s_hat = 0.5 * m * (1.0 + ratio)
    notes = ()
    if g_hat >= 0.25:
        notes = (
            f"gamma = {g_hat:.4f} >= 1/4: population variance does not exist, "
            "moment estimator unreliable",
        )
    return FitResult(
        family=Family.GPD,
        method=Method.MOM,
        params=GpdParams(gamma=g_hat, sigma=s_hat, mu=location),
        sample_size=int(y.size),
        converged=True,
        notes=notes,
    )


# ---------------------------------------------------------------------------
# Pickands
# ---------------------------------------------------------------------------


def pickands_raw(x_half: float, x_threeq: float) -> tuple[float, float]:
    """Analytic percentile-matching solution at the median / 75th order statistics.

    Evaluates the literature formulas verbatim (opposite shape sign to this
    module's convention): g = ln(x_half / (x_3q - x_half)) / ln 2 and
    s = g x_half^2 / (2 x_half - x_3q), with the g -> 0 limit s = x_half / ln 2.
    """
    if x_threeq <= x_half or x_half <= 0:
        raise EstimationError("estimator undefined for this sample: need 0 < x(J/2) < x(3J/4)")
    ratio = x_half / (x_threeq - x_half)
    g_raw = math.log(ratio) / math.log(2.0)
    denom = 2.0 * x_half - x_threeq
    if g_raw == 0.0:
        return 0.0, x_half / math.log(2.0)
    if denom == 0.0:
        raise EstimationError("estimator undefined for this sample: degenerate scale denominator")
    s_raw = g_raw * x_half * x_half / denom
    return g_raw, s_raw


def fit_gpd_pickands(excesses, location: float = 0.0) -> FitResult:
    """Pickands estimator from the J/2 and 3J/4 ascending order statistics.

    Ranks are floored to valid positions.  Samples where the implied scale is
    not positive are rejected with an error rather than clamped.
    """
    y = np.asarray(excesses, dtype=float)
    j = y.size
    if j < 4:
        raise EstimationError(f"need at least 4 exceedances, got {j}")
    xs = np.sort(y)
    x_half = float(xs[j // 2 - 1])
    x_threeq = float(xs[(3 * j) // 4 - 1])
    g_raw, s_raw = pickands_raw(x_half, x_threeq)
    if s_raw <= 0 or not math.isfinite(s_raw):
        raise EstimationError("estimator undefined for this sample: non-positive scale")
    return FitResult(
        family=Family.GPD,
        method=Method.PICKANDS,
        params=GpdParams(gamma=-g_raw, sigma=s_raw, mu=location),
        sample_size=j,
        converged=True,
    )


# ---------------------------------------------------------------------------
# empirical percentile method
# ---------------------------------------------------------------------------


def epm_pair_solve(x_i, x_j, c_i, c_j, iterations: int = 100):
    """Percentile-matching solution for order-statistic pairs (vectorized).

    Solves c_i ln(1 - x_j/delta) = c_j ln(1 - x_i/delta) by bisection on
    [x_j, delta0] (delta0 > 0) or [delta0, 0) (delta0 < 0) where
    delta0 = x_i x_j (c_j - c_i) / (c_j x_i - c_i x_j); a vanishing
    denominator is the exact exponential case and contributes shape 0 with
    scale -x_i / c_i.  Returns raw (shape, scale, ok) in the opposite-sign
    convention of the percentile-matching literature; pairs whose bracket
    does not straddle a root come back with ok = False.
    """
    x_i = np.atleast_1d(np.asarray(x_i, dtype=float))
    x_j = np.atleast_1d(np.asarray(x_j, dtype=float))
    c_i = np.broadcast_to(np.asarray(c_i, dtype=float), x_i.shape).copy()
    c_j = np.broadcast_to(np.asarray(c_j, dtype=float), x_i.shape).copy()

    g_out = np.zeros_like(x_i)
    s_out = np.full_like(x_i, np.nan)
    ok = np.ones(x_i.shape, dtype=bool)

    d = c_j * x_i - c_i * x_j
    is_exp = d == 0.0
    s_out[is_exp] = -x_i[is_exp] / c_i[is_exp]

    solve = ~is_exp
    if np.any(solve):
        xi, xj, ci, cj = x_i[solve], x_j[solve], c_i[solve], c_j[solve]
        delta0 = xi * xj * (cj - ci) / d[solve]

        def h(delta):
            with np.errstate(all="ignore"):
                return ci * np.log1p(-xj / delta) - cj * np.log1p(-xi / delta)

        pos = delta0 > 0
        lo = np.where(pos, xj * (1.0 + 1e-13), delta0)
        hi = np.where(pos, delta0, -1e-300)
        f_lo = h(lo)
        f_hi = h(hi)
        # limits at the singular endpoints are +inf
        f_lo = np.where(np.isnan(f_lo), np.inf, f_lo)
        f_hi = np.where(np.isnan(f_hi), np.inf, f_hi)
        good = (np.sign(f_lo) != np.sign(f_hi)) & (pos | (delta0 < 0))
        good &= np.where(pos, delta0 > xj, True)

        a, b, fa = lo.copy(), hi.copy(), f_lo.copy()
        for _ in range(iterations):
            mid = 0.5 * (a + b)
            fm = h(mid)
            move_a = np.sign(fm) == np.sign(fa)
            a = np.where(move_a, mid, a)
            fa = np.where(move_a, fm, fa)
            b = np.where(move_a, b, mid)
        delta_hat = 0.5 * (a + b)

        with np.errstate(all="ignore"):
            g_raw = np.log1p(-xi / delta_hat) / ci
            s_raw = g_raw * delta_hat
        good &= np.isfinite(g_raw) & np.isfinite(s_raw) & (s_raw > 0)

        g_buf = np.zeros_like(xi)
        s_buf = np.full_like(xi, np.nan)
        g_buf[good] = g_raw[good]
        s_buf[good] = s_raw[good]
        g_out[solve] = g_buf
        s_out[solve] = s_buf
        ok_buf = ok[solve]
        ok_buf &= good
        ok[solve] = ok_buf
    return g_out, s_out, ok


def _triu_pair_indices(m: int, total: int, picks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map linear indices over the strict upper triangle of an m x m grid to (row, col)."""
    rows_before = np.arange(m, dtype=np.int64)
    cum = rows_before * (2 * m - rows_before - 1) // 2  # pairs before each row
    r = np.searchsorted(cum, picks, side="right") - 1
    c = picks - cum[r] + r + 1
    return r, c


def fit_gpd_epm(
    excesses,
    start_percentile: float = 0.5,
    eta: float = 0.0,
    zeta: float = 1.0,
    location: float = 0.0,
    seed: int = 0,
) -> FitResult:
    """Empirical percentile method: median over all pairwise percentile matches.

    Every admissible order-statistic pair (both ranks with percentile
    (r - eta)/(J + zeta) above ``start_percentile`` and strictly increasing
    values) contributes one (shape, scale) solution; the estimate is the
    elementwise median.  Above ``EPM_EXACT_J`` observations the O(J^2) pair
    set is uniformly thinned to ``EPM_PAIR_CAP`` pairs using ``seed``.
    Pairs whose bisection fails are dropped and counted in the notes.
    """
    y = np.asarray(excesses, dtype=float)
    j = y.size
    if j < 4:
        raise EstimationError(f"need at least 4 exceedances, got {j}")
    if not 0.0 <= start_percentile < 1.0:
        raise ValueError("start_percentile must lie in [0, 1)")
    xs = np.sort(y)
    ranks = np.arange(1, j + 1)
    perc = (ranks - eta) / (j + zeta)
    admissible = ranks[perc > start_percentile]
    m = admissible.size
    if m < 2:
        raise EstimationError("no admissible order-statistic pairs above the start percentile")

    total = m * (m - 1) // 2
    if j > EPM_EXACT_J and total > EPM_PAIR_CAP:
        rng = np.random.default_rng(seed)
        if total <= 8_000_000:
            picks = rng.choice(total, size=EPM_PAIR_CAP, replace=False)
        else:
            seen = np.unique(rng.integers(0, total, size=int(EPM_PAIR_CAP * 1.2)))
            while seen.size < EPM_PAIR_CAP:
                more = rng.integers(0, total, size=EPM_PAIR_CAP // 2)
                seen = np.unique(np.concatenate([seen, more]))
            picks = seen[:EPM_PAIR_CAP]
        picks = np.sort(picks)
        ii, jj = _triu_pair_indices(m, total, picks)
    else:
        ii, jj = np.triu_indices(m, k=1)

    rank_i = admissible[ii]
    rank_j = admissible[jj]
    x_i = xs[rank_i - 1]
    x_j = xs[rank_j - 1]
    keep = x_i < x_j
    rank_i, rank_j, x_i, x_j = rank_i[keep], rank_j[keep], x_i[keep], x_j[keep]
    if x_i.size == 0:
        raise EstimationError("no admissible order-statistic pairs with increasing values")

    c_i = np.log1p(-(rank_i - eta) / (j + zeta))
    c_j = np.log1p(-(rank_j - eta) / (j + zeta))
    g_raw, s_raw, ok = epm_pair_solve(x_i, x_j, c_i, c_j)

    dropped = int((~ok).sum())
    if not np.any(ok):
        raise EstimationError("all percentile-matching pairs failed to solve")
    g_med = float(np.median(g_raw[ok]))
    s_med = float(np.median(s_raw[ok]))
    if not s_med > 0:
        raise EstimationError("median scale not positive")

    notes = []
    if dropped:
        notes.append(f"{dropped} of {ok.size} pairs dropped (no bisection root)")
    if j > EPM_EXACT_J and total > EPM_PAIR_CAP:
        notes.append(f"pair set thinned to {EPM_PAIR_CAP} of {total} (seed {seed})")

    return FitResult(
        family=Family.GPD,
        method=Method.EPM,
        params=GpdParams(gamma=-g_med, sigma=s_med, mu=location),
        sample_size=j,
        converged=True,
        notes=tuple(notes),
    )
