"""Numerical kernels: half-line quadrature, Poisson tail sums, log-gamma,
and a derivative-free least-squares minimizer.

These are deliberately thin wrappers over scipy/stdlib routines, pinned down
by contracts the rest of the package relies on (see tests).  Nothing in here
knows about the network model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, optimize, special

# Absolute floor handed to the adaptive integrator so that integrals whose
# true value is exactly zero can still converge.
_QUAD_ABS_FLOOR = 1e-14
_MAX_SUBDIVISIONS = 200
_NM_RESTARTS = 3


@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_error_estimate: float
    evaluations: int


class QuadratureError(RuntimeError):
    """Adaptive subdivision ran out of budget before reaching tolerance.

    Carries the partial value and the integrator's own error estimate so a
    caller can decide whether the partial answer is usable.
    """

    def __init__(self, message: str, partial_value: float, error_estimate: float):
        super().__init__(message)
        self.partial_value = partial_value
        self.error_estimate = error_estimate


def integrate_semi_infinite(f: Callable[[float], float],
                            policy,
                            scale: float = 1.0) -> QuadResult:
    """Integrate f over [0, inf).

    The substitution r = scale * u / (1 - u) maps the half line onto the
    finite interval [0, 1); adaptive Gauss-Kronrod subdivision then handles
    the transformed integrand.  `scale` should sit near the bulk of the
    integrand's mass so the transformed peak stays well clear of u = 1;
    integrands decaying exponentially (or any power faster than 1/r^2 in the
    tail) are handled routinely.
    """
    if not (scale > 0 and math.isfinite(scale)):
        raise ValueError("scale must be positive and finite")
    evaluations = [0]

    def transformed(u):
        evaluations[0] += 1
        w = 1.0 - u
        return f(scale * u / w) * scale / (w * w)

    out = integrate.quad(transformed, 0.0, 1.0,
                         epsabs=_QUAD_ABS_FLOOR,
                         epsrel=policy.quad_rel_tol,
                         limit=_MAX_SUBDIVISIONS,
                         full_output=1)
    value, abs_err = out[0], out[1]
    if len(out) > 3:
        # QUADPACK flagged non-convergence; accept only if its own error
        # estimate is comfortably inside tolerance anyway.
        if abs_err > max(10 * policy.quad_rel_tol * abs(value), 10 * _QUAD_ABS_FLOOR):
            raise QuadratureError(
                f"semi-infinite quadrature failed to converge: {out[3]}",
                partial_value=value, error_estimate=abs_err)
    return QuadResult(float(value), float(abs_err), evaluations[0])


def poisson_cdf_upper(m: int, theta: float) -> float:
    """Sum of the first m Poisson(theta) masses, sum_{j=0}^{m-1} e^-theta theta^j / j!.

    Equivalently the probability that a unit-rate Erlang(m) sum exceeds
    theta.  Evaluated through the regularized upper incomplete gamma
    function, which computes the same quantity without overflow for large
    (m, theta).  theta <= 0 returns exactly 1.
    """
    if m < 1 or int(m) != m:
        raise ValueError("m must be an integer >= 1")
    if theta <= 0:
        return 1.0
    return float(special.gammaincc(m, theta))


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for x > 0."""
    if not x > 0:
        raise ValueError("log_gamma requires x > 0")
    return math.lgamma(x)


@dataclass(frozen=True)
class FitResult:
    """Outcome of a least-squares minimization.

    coefficients  the best point found (tuple, one entry per parameter)
    residual      sum of squared residuals at that point
    iterations    total objective evaluations spent
    """

    coefficients: tuple
    residual: float
    iterations: int


def minimize_least_squares(residual: Callable[[np.ndarray], np.ndarray],
                           initial: Sequence[float],
                           bounds: Sequence[tuple]) -> FitResult:
    """Minimize sum(residual(x)**2) inside a box, derivative-free.

    Runs a Nelder-Mead simplex, restarted a few times from the incumbent
    best point (each restart rebuilds the simplex, which lets the search
    escape a collapsed one).  Probes outside the box are clipped, so the
    returned point always respects the bounds, and the result is never
    worse than the initial point.
    """
    x0 = np.asarray(initial, dtype=float)
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    if x0.shape != lo.shape:
        raise ValueError("initial point and bounds disagree in length")
    x0 = np.clip(x0, lo, hi)
    nfev = [0]

    def objective(x):
        nfev[0] += 1
        r = np.asarray(residual(np.clip(x, lo, hi)), dtype=float)
        s = float(np.dot(r.ravel(), r.ravel()))
        return s if math.isfinite(s) else math.inf

    best_x, best_f = x0, objective(x0)
    if not math.isfinite(best_f):
        raise ValueError("residual is not finite at the initial point")

    box = optimize.Bounds(lo, hi)
    for _ in range(_NM_RESTARTS):
        res = optimize.minimize(objective, best_x, method="Nelder-Mead",
                                bounds=box,
                                options={"xatol": 1e-10, "fatol": 1e-14,
                                         "maxfev": 4000})
        if res.fun < best_f:
            best_f = float(res.fun)
            best_x = np.clip(np.asarray(res.x, dtype=float), lo, hi)
    if not math.isfinite(best_f):
        raise ValueError("objective was not finite at any probed point")
    return FitResult(tuple(float(v) for v in best_x), best_f, nfev[0])
