"""Closed-form layer: delivery probability, cell geometry, link capacity,
and network throughput for a Poisson cellular deployment whose users power
their receive circuitry purely from harvested downlink RF energy.

Model in one paragraph: stations and users are independent homogeneous
Poisson fields; each user attaches to its nearest station, so cells are
Voronoi regions.  Stations serve their users round-robin, one slot each.  A
scheduled user whose harvested energy store has reached e_th receives and
resets its store; otherwise it keeps harvesting, including during its own
slot.  Between two of its scheduled slots a user in a cell with n other
users harvests n+1 slots, so after k rounds it has accumulated k*(n+1)-1
slots of Rayleigh-faded downlink energy.  Treating the far-field part of
each slot's harvest as its spatial mean leaves a unit-rate Erlang sum for
the serving link, which gives the readiness probability below as a
truncated Poisson series.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import special

from .core import ErlangIndexMode, NetworkParams, NumericPolicy, validate
from .numerics import (FitResult, integrate_semi_infinite, log_gamma,
                       minimize_least_squares, poisson_cdf_upper)

# Size-biased normalized Voronoi cell area: Gamma(shape 4.5, rate 3.5).
# The same 3.5 constant parameterizes the active-station thinning below.
CELL_AREA_SHAPE = 4.5
CELL_AREA_RATE = 3.5

# Nearest-station distance profile of a unit-area cell, c1*u^c2*exp(-c3*u^c4).
# These coefficients are what fit_conditional_distance_pdf reproduces.
UNIT_CELL_COEFFS = (6.029, 1.0, 3.891, 2.7)

_MIX_NODES = 192
_LN2 = math.log(2.0)

Coeffs = Union[FitResult, Sequence[float], None]


# ---------------------------------------------------------------------------
# cell geometry
# ---------------------------------------------------------------------------

def nearest_distance_pdf(r1, params: NetworkParams):
    """Density of the user-to-serving-station distance: Rayleigh with scale
    set by the station density, 2*pi*lambda_b*r1*exp(-lambda_b*pi*r1^2)."""
    lam = params.lambda_b
    r = np.asarray(r1, dtype=float)
    if np.any(r < 0):
        raise ValueError("r1 must be non-negative")
    out = 2.0 * math.pi * lam * r * np.exp(-lam * math.pi * r * r)
    return float(out) if np.isscalar(r1) else out


def cell_area_pdf(x):
    """Density of the normalized area of the cell containing a random user
    (size-biased), Gamma(4.5, rate 3.5)."""
    xs = np.asarray(x, dtype=float)
    norm = math.exp(CELL_AREA_SHAPE * math.log(CELL_AREA_RATE)
                    - log_gamma(CELL_AREA_SHAPE))
    out = np.where(xs > 0,
                   norm * np.power(np.maximum(xs, 1e-300), CELL_AREA_SHAPE - 1.0)
                   * np.exp(-CELL_AREA_RATE * np.maximum(xs, 0.0)),
                   0.0)
    return float(out) if np.isscalar(x) else out


def conditional_distance_pdf(r1_norm, coeffs: Coeffs = None):
    """Nearest-station distance density inside a unit-area cell,
    c1 * u^c2 * exp(-c3 * u^c4).  Defaults to UNIT_CELL_COEFFS."""
    c1, c2, c3, c4 = _as_coeffs(coeffs)
    u = np.asarray(r1_norm, dtype=float)
    if np.any(u < 0):
        raise ValueError("r1_norm must be non-negative")
    out = c1 * np.power(u, c2) * np.exp(-c3 * np.power(u, c4))
    return float(out) if np.isscalar(r1_norm) else out


def _as_coeffs(coeffs: Coeffs) -> tuple:
    if coeffs is None:
        return UNIT_CELL_COEFFS
    if isinstance(coeffs, FitResult):
        coeffs = coeffs.coefficients
    c = tuple(float(v) for v in coeffs)
    if len(c) != 4:
        raise ValueError("expected 4 shape coefficients")
    return c


@lru_cache(maxsize=8)
def _gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


@lru_cache(maxsize=4096)
def _area_mixture(s: float, coeffs: tuple):
    """Quadrature nodes and normalized weights of the cell-area distribution
    seen from normalized serving distance s = r1*sqrt(lambda_b).

    The weight of area xi is proportional to the scaled unit-cell distance
    profile g(s/sqrt(xi))/sqrt(xi) times the size-biased area density; the
    normalization makes the weights a proper conditional distribution, so
    user-count mixtures built on top of them sum to one.
    """
    c1, c2, c3, c4 = coeffs
    xi_hi = max(15.0, 3.0 * s * s)
    x, w = _gauss_legendre(_MIX_NODES)
    xi = 0.5 * (x + 1.0) * xi_hi
    base = 0.5 * xi_hi * w
    log_xi = np.log(xi)
    u = s / np.sqrt(xi)
    logw = ((CELL_AREA_SHAPE - 1.0) * log_xi - CELL_AREA_RATE * xi
            - 0.5 * (c2 + 1.0) * log_xi - c3 * np.power(u, c4))
    peak = logw.max()
    if not math.isfinite(peak):
        # s so extreme the profile underflows everywhere; any proper weight
        # works because every caller multiplies by a vanishing density in r1
        logw = (CELL_AREA_SHAPE - 1.0) * log_xi - CELL_AREA_RATE * xi
        peak = logw.max()
    wt = base * np.exp(logw - peak)
    wt /= wt.sum()
    return xi, wt


# ---------------------------------------------------------------------------
# energy readiness
# ---------------------------------------------------------------------------

def theta(k: int, n: int, r1: float, params: NetworkParams) -> float:
    """Residual energy demand on the serving link after k rounds with n
    other users in the cell: the e_th requirement referred to the serving
    link's path gain, minus the mean far-field harvest over the
    k*(n+1)-1 elapsed slots."""
    _check_kn(k, n, r1)
    slots = k * (n + 1) - 1
    demand = params.e_th * r1 ** params.alpha / (params.a_eff * params.p_s)
    far_field = (2.0 * math.pi * slots * params.lambda_b * r1 * r1
                 / (params.alpha - 2.0))
    return demand - far_field


def energy_ready_prob(k: int, n: int, r1: float, params: NetworkParams,
                      policy: NumericPolicy) -> float:
    """Probability the store holds at least e_th by the user's k-th
    scheduled slot, given n other users in the cell.

    The accumulated serving-link fading over k*(n+1)-1 slots is a unit-rate
    Erlang sum; its tail against the mean-field-reduced demand theta() is
    the truncated Poisson series evaluated here.  theta <= 0 means the mean
    far field alone covers the demand, so the probability is 1.  The
    degenerate zero-slot case (k=1 with an empty cell, slot-count mode) has
    nothing accumulated and collapses to the 0/1 indicator of theta <= 0.
    """
    _check_kn(k, n, r1)
    th = theta(k, n, r1, params)
    if policy.erlang_index_mode is ErlangIndexMode.SLOT_COUNT:
        m = k * (n + 1) - 1
    else:
        m = k
    if m == 0:
        return 1.0 if th <= 0 else 0.0
    return poisson_cdf_upper(m, th)


def rounds_pmf(k: int, n: int, r1: float, params: NetworkParams,
               policy: NumericPolicy) -> float:
    """Probability that the k-th round is the first whose scheduled slot
    finds the store full: difference of consecutive readiness values,
    clamped into [0, 1]."""
    f_k = energy_ready_prob(k, n, r1, params, policy)
    f_prev = 0.0 if k == 1 else energy_ready_prob(k - 1, n, r1, params, policy)
    return min(max(f_k - f_prev, 0.0), 1.0)


def _check_kn(k, n, r1):
    if k < 1 or int(k) != k:
        raise ValueError("k must be an integer >= 1")
    if n < 0 or int(n) != n:
        raise ValueError("n must be an integer >= 0")
    if not r1 > 0:
        raise ValueError("r1 must be positive")


def _ready_curve(n: int, r1: float, params: NetworkParams,
                 policy: NumericPolicy):
    """Readiness probability for rounds 1..K as vectors (ks, F).

    The series terminates exactly: once the mean far field covers the
    demand, readiness is 1 and no later round carries mass.  The curve is
    also cut early when it climbs within series_tail_eps of 1, and hard
    capped at k_max_cap.
    """
    demand = params.e_th * r1 ** params.alpha / (params.a_eff * params.p_s)
    per_slot = (2.0 * math.pi * params.lambda_b * r1 * r1
                / (params.alpha - 2.0))
    slots_needed = demand / per_slot
    k_star = max(1, math.ceil((slots_needed + 1.0) / (n + 1)))
    k_top = min(k_star, policy.k_max_cap)
    ks = np.arange(1, k_top + 1)
    slots = ks * (n + 1) - 1
    th = demand - per_slot * slots
    if policy.erlang_index_mode is ErlangIndexMode.SLOT_COUNT:
        m = slots
    else:
        m = ks
    F = np.ones(len(ks))
    zero_shape = m == 0
    F[zero_shape & (th > 0)] = 0.0
    live = (m > 0) & (th > 0)
    if np.any(live):
        F[live] = special.gammaincc(m[live], th[live])
    done = np.nonzero(F >= 1.0 - policy.series_tail_eps)[0]
    if done.size:
        stop = done[0] + 1
        ks, F = ks[:stop], F[:stop]
    return ks, F


def _mean_inverse_rounds(ks: np.ndarray, pmf: np.ndarray) -> float:
    """Expectation of 1/K over a (possibly truncated) rounds distribution.

    Truncated tail mass is simply dropped; it contributes at most its own
    mass since 1/k <= 1.  A clamped distribution exceeding unit mass is
    renormalized."""
    total = float(pmf.sum())
    value = float(np.sum(pmf / ks))
    if total > 1.0:
        value /= total
    return min(max(value, 0.0), 1.0)


def delivery_prob_given_n_r1(n: int, r1: float, params: NetworkParams,
                             policy: NumericPolicy) -> float:
    """Long-run fraction of a user's scheduled slots that deliver, with n
    other users in the cell at serving distance r1: a user needing K rounds
    to charge succeeds once per K, so this is E[1/K]."""
    _check_kn(1, n, r1)
    ks, F = _ready_curve(n, r1, params, policy)
    pmf = np.clip(np.diff(np.concatenate(([0.0], F))), 0.0, None)
    return _mean_inverse_rounds(ks, pmf)


# ---------------------------------------------------------------------------
# cell population and delivery probability
# ---------------------------------------------------------------------------

def users_pmf_given_r1(n: int, r1: float, params: NetworkParams,
                       policy: NumericPolicy) -> float:
    """Probability of n other users sharing the cell, given serving
    distance r1: a Poisson count mixed over the conditional cell area."""
    if n < 0 or int(n) != n:
        raise ValueError("n must be an integer >= 0")
    if not r1 > 0:
        raise ValueError("r1 must be positive")
    if params.lambda_u == 0:
        return 1.0 if n == 0 else 0.0
    s = r1 * math.sqrt(params.lambda_b)
    xi, wt = _area_mixture(s, UNIT_CELL_COEFFS)
    mu = (params.lambda_u / params.lambda_b) * xi
    logp = n * np.log(mu) - mu - log_gamma(n + 1)
    return float(min(max(np.dot(np.exp(logp), wt), 0.0), 1.0))


@lru_cache(maxsize=100_000)
def _per_distance(r1: float, params: NetworkParams, policy: NumericPolicy):
    """(delivery probability, expected other-user count) at distance r1.

    Any cell population n large enough that the mean far field covers the
    demand within one round delivers immediately; only the finitely many
    smaller n need the rounds series, so the user-count mixture is never
    truncated, merely split at that threshold.
    """
    s = r1 * math.sqrt(params.lambda_b)
    xi, wt = _area_mixture(s, UNIT_CELL_COEFFS)
    mean_users = (params.lambda_u / params.lambda_b) * float(np.dot(wt, xi))

    demand = params.e_th * r1 ** params.alpha / (params.a_eff * params.p_s)
    per_slot = (2.0 * math.pi * params.lambda_b * r1 * r1
                / (params.alpha - 2.0))
    n_ready = min(math.ceil(demand / per_slot), policy.n_max_cap)

    if n_ready == 0:
        return 1.0, mean_users
    if params.lambda_u == 0:
        p_tr = delivery_prob_given_n_r1(0, r1, params, policy)
        return p_tr, mean_users

    ns = np.arange(n_ready)
    mu = (params.lambda_u / params.lambda_b) * xi
    logp = (ns[:, None] * np.log(mu)[None, :] - mu[None, :]
            - special.gammaln(ns + 1.0)[:, None])
    p_small = np.exp(logp) @ wt
    t_small = np.array([delivery_prob_given_n_r1(int(n), r1, params, policy)
                        for n in ns])
    covered = float(p_small.sum())
    p_tr = float(np.dot(p_small, t_small)) + max(0.0, 1.0 - covered)
    return min(max(p_tr, 0.0), 1.0), mean_users


def delivery_prob_given_r1(r1: float, params: NetworkParams,
                           policy: NumericPolicy) -> float:
    """Delivery probability at serving distance r1, averaged over the cell
    population."""
    if not r1 > 0:
        raise ValueError("r1 must be positive")
    return _per_distance(float(r1), params, policy)[0]


@dataclass(frozen=True)
class DeliveryBreakdown:
    """p_tr plus the pieces sweeps and plots want alongside it."""
    p_tr: float
    p_tr_given_r1: Callable[[float], float]
    expected_users_typical_cell: float


def delivery_prob(params: NetworkParams,
                  policy: NumericPolicy) -> DeliveryBreakdown:
    """Unconditional delivery probability of the typical user, integrating
    the conditional probability against the serving-distance density; also
    reports the expected number of other users in the typical user's cell."""
    validate(params)
    scale = 0.5 / math.sqrt(params.lambda_b)

    p_tr = integrate_semi_infinite(
        lambda r: _per_distance(r, params, policy)[0]
        * nearest_distance_pdf(r, params),
        policy, scale=scale).value
    users = integrate_semi_infinite(
        lambda r: _per_distance(r, params, policy)[1]
        * nearest_distance_pdf(r, params),
        policy, scale=scale).value

    return DeliveryBreakdown(
        p_tr=min(max(p_tr, 0.0), 1.0),
        p_tr_given_r1=lambda r1: delivery_prob_given_r1(r1, params, policy),
        expected_users_typical_cell=users)


# ---------------------------------------------------------------------------
# link capacity and throughput
# ---------------------------------------------------------------------------

_RHO_REL_TOL = 1e-11


def rho(x: float, alpha: float, policy: Optional[NumericPolicy] = None) -> float:
    """Interference scaling exponent of the SIR tail:
    x^(2/alpha) * integral_{x^(-2/alpha)}^inf du / (1 + u^(alpha/2)).
    """
    if not x > 0:
        raise ValueError("x must be positive")
    if not alpha > 2:
        raise ValueError("alpha must exceed 2")
    tol = _RHO_REL_TOL if policy is None else min(policy.quad_rel_tol,
                                                  _RHO_REL_TOL)
    return _rho_cached(float(x), float(alpha), tol)


@lru_cache(maxsize=200_000)
def _rho_cached(x: float, alpha: float, tol: float) -> float:
    lower = x ** (-2.0 / alpha)
    half = alpha / 2.0

    def tail(w):
        base = lower + w
        if base <= 0.0:
            return 1.0
        t = half * math.log(base)
        if t > 700.0:
            return 0.0
        return 1.0 / (1.0 + math.exp(t))

    pol = NumericPolicy(quad_rel_tol=tol)
    res = integrate_semi_infinite(tail, pol, scale=max(lower, 1.0))
    return x ** (2.0 / alpha) * res.value


def capacity_ccdf(t: float, r1: float, params: NetworkParams) -> float:
    """Probability the instantaneous link rate exceeds t bits per slot at
    serving distance r1, under Rayleigh fading with full interference."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if not r1 > 0:
        raise ValueError("r1 must be positive")
    if t == 0:
        return 1.0
    try:
        snr_th = math.expm1(t * _LN2)
    except OverflowError:
        return 0.0
    if params.sigma2 > 0:
        # sigma2 first, so a huge threshold overflows to +inf (ccdf 0)
        # instead of forming inf*0 when noise is switched off
        noise = snr_th * params.sigma2 / params.p_s * r1 ** params.alpha
    else:
        noise = 0.0
    interf = (math.pi * params.lambda_b * r1 * r1
              * rho(snr_th, params.alpha))
    total = noise + interf
    if math.isinf(total):
        return 0.0
    return math.exp(-total)


# Complete interference integral, lim_{x->inf} rho(x)/x^(2/alpha).
def _rho_asymptote(alpha: float) -> float:
    return (2.0 * math.pi / alpha) / math.sin(2.0 * math.pi / alpha)


def expected_capacity_given_r1(r1: float, params: NetworkParams,
                               policy: NumericPolicy) -> float:
    """Mean link rate at serving distance r1, integrating the rate CCDF."""
    if not r1 > 0:
        raise ValueError("r1 must be positive")
    return _expected_capacity_cached(
        float(r1), params.lambda_b, params.alpha, params.sigma2, params.p_s,
        policy.quad_rel_tol)


@lru_cache(maxsize=100_000)
def _expected_capacity_cached(r1, lambda_b, alpha, sigma2, p_s, rel_tol):
    params = NetworkParams(lambda_b=lambda_b, lambda_u=0.0, p_s=p_s,
                           alpha=alpha, a_eff=0.5, e_th=1.0, sigma2=sigma2)
    q = math.pi * lambda_b * r1 * r1
    # scale of the rate integral: where the interference (or noise) exponent
    # reaches order one
    snr_interf = (1.0 / (_rho_asymptote(alpha) * q)) ** (alpha / 2.0) \
        if q > 0 else math.inf
    snr_noise = (p_s / (sigma2 * r1 ** alpha)) if sigma2 > 0 else math.inf
    snr_star = min(snr_interf, snr_noise)
    t_scale = max(0.5, math.log2(1.0 + min(snr_star, 1e300)))
    pol = NumericPolicy(quad_rel_tol=rel_tol)
    res = integrate_semi_infinite(lambda t: capacity_ccdf(t, r1, params),
                                  pol, scale=t_scale)
    return res.value


def avg_cell_throughput(params: NetworkParams, policy: NumericPolicy) -> float:
    """Mean delivered rate per scheduled slot of the typical user's cell:
    capacity weighted by delivery probability, averaged over distance."""
    validate(params)
    scale = 0.5 / math.sqrt(params.lambda_b)
    res = integrate_semi_infinite(
        lambda r: expected_capacity_given_r1(r, params, policy)
        * _per_distance(r, params, policy)[0]
        * nearest_distance_pdf(r, params),
        policy, scale=scale)
    return res.value


def active_station_density(lambda_b: float, lambda_u: float) -> float:
    """Density of stations whose cell holds at least one user, via the
    Gamma-mixture void probability of Voronoi cells."""
    if not lambda_b > 0:
        raise ValueError("lambda_b must be positive")
    if lambda_u < 0:
        raise ValueError("lambda_u must be non-negative")
    ratio = lambda_u / (CELL_AREA_RATE * lambda_b)
    return lambda_b * (1.0 - (1.0 + ratio) ** (-CELL_AREA_RATE))


@dataclass(frozen=True)
class ThroughputReport:
    t_avg: float
    lambda_b_active: float
    t_total: float


def total_throughput(params: NetworkParams,
                     policy: NumericPolicy) -> ThroughputReport:
    """Area throughput: per-cell throughput times the active-station
    density.  t_total is bits per slot per square meter."""
    t_avg = avg_cell_throughput(params, policy)
    lam_active = active_station_density(params.lambda_b, params.lambda_u)
    return ThroughputReport(t_avg=t_avg, lambda_b_active=lam_active,
                            t_total=lam_active * t_avg)


_DEFAULT_RATIO_GRID = (0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.5, 8.0,
                       10.0, 13.0, 16.0, 20.0, 26.0, 32.0, 40.0)
_RATIO_REFINE_REL = 5e-3


def sustainable_ratio(lambda_b: float, params_template: NetworkParams,
                      policy: NumericPolicy,
                      ratio_grid: Optional[Sequence[float]] = None) -> float:
    """Smallest lambda_u/lambda_b at which area throughput reaches
    (1 - eps_sat) of its large-population plateau.

    Sweeps the ratio grid upward; once a bracket is found the boundary is
    refined by bisection.  If even the largest swept ratio falls short, the
    plateau is declared unreachable and an error names the bound.
    """
    if not lambda_b > 0:
        raise ValueError("lambda_b must be positive")
    grid = tuple(_DEFAULT_RATIO_GRID if ratio_grid is None else ratio_grid)
    if len(grid) == 0:
        raise ValueError("ratio grid must be non-empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("ratio grid must be strictly increasing")
    if grid[0] <= 0:
        raise ValueError("ratio grid must be positive")
    if grid[-1] >= policy.plateau_multiple:
        raise ValueError("ratio grid must stay below plateau_multiple")

    def throughput_at(ratio: float) -> float:
        params = replace(params_template, lambda_b=lambda_b,
                         lambda_u=ratio * lambda_b)
        return total_throughput(params, policy).t_total

    plateau = throughput_at(policy.plateau_multiple)
    threshold = (1.0 - policy.eps_sat) * plateau

    previous = None
    for ratio in grid:
        if throughput_at(ratio) >= threshold:
            if previous is None:
                return float(ratio)
            lo, hi = previous, ratio
            while hi - lo > _RATIO_REFINE_REL * hi:
                mid = 0.5 * (lo + hi)
                if throughput_at(mid) >= threshold:
                    hi = mid
                else:
                    lo = mid
            return float(hi)
        previous = ratio
    raise RuntimeError(
        "throughput did not reach (1 - eps_sat) of its plateau within the "
        f"swept ratio bound {grid[-1]}")


# ---------------------------------------------------------------------------
# distance-profile fit
# ---------------------------------------------------------------------------

_FIT_R_GRID = np.linspace(0.025, 2.0, 80)
_FIT_XI_NODES = 160
_FIT_XI_HI = 14.0


def _unit_distance_pdf(s):
    """Serving-distance density at unit station density."""
    return 2.0 * math.pi * s * np.exp(-math.pi * s * s)


def _forward_distance_profile(r, coeffs, xi, wq):
    """Reconstruct the serving-distance density from a unit-cell profile by
    scaling it to each cell area and mixing over the area distribution."""
    c1, c2, c3, c4 = coeffs
    root = np.sqrt(xi)
    u = r[:, None] / root[None, :]
    g = c1 * np.power(u, c2) * np.exp(-c3 * np.power(u, c4))
    return (g / root[None, :] * cell_area_pdf(xi)[None, :]) @ wq


def reconstructed_distance_pdf(r_norm, coefficients):
    """Serving-distance density (unit station density) implied by a
    unit-cell profile: the forward area-mixture at the given coefficients,
    evaluated on normalized distances r_norm."""
    x, w = _gauss_legendre(_FIT_XI_NODES)
    xi = 0.5 * (x + 1.0) * _FIT_XI_HI
    wq = 0.5 * _FIT_XI_HI * w
    return _forward_distance_profile(np.asarray(r_norm, dtype=float),
                                     _as_coeffs(coefficients), xi, wq)


def fit_conditional_distance_pdf(policy: NumericPolicy) -> FitResult:
    """Recover the unit-cell distance profile coefficients by least squares.

    Fits (c1, c3, c4) with c2 pinned at 1 so that the area-mixture of the
    profile reproduces the exact serving-distance density on a normalized
    grid (unit station density).  A post-hoc check rejects a fit whose
    profile is badly non-normalized.
    """
    x, w = _gauss_legendre(_FIT_XI_NODES)
    xi = 0.5 * (x + 1.0) * _FIT_XI_HI
    wq = 0.5 * _FIT_XI_HI * w
    r = _FIT_R_GRID
    target = _unit_distance_pdf(r)

    def residual(v):
        c1, c3, c4 = v
        return _forward_distance_profile(r, (c1, 1.0, c3, c4), xi, wq) - target

    fit3 = minimize_least_squares(residual, initial=(4.0, 3.0, 2.0),
                                  bounds=((0.5, 30.0), (0.5, 30.0),
                                          (1.2, 6.0)))
    c1, c3, c4 = fit3.coefficients
    coeffs = (c1, 1.0, c3, c4)

    norm = integrate_semi_infinite(
        lambda u: conditional_distance_pdf(u, coeffs), policy, scale=0.5)
    if abs(norm.value - 1.0) > 0.05:
        raise RuntimeError(
            f"fitted profile integrates to {norm.value:.4f}, expected ~1")
    return FitResult(coefficients=coeffs, residual=fit3.residual,
                     iterations=fit3.iterations)
