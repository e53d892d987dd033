"""Shared domain types for the harvesting-downlink model.

Everything downstream (closed-form layer, simulator, CLI) passes these two
objects around.  Internally all quantities are strict SI: densities in m^-2,
energies in joules, powers in watts, distances in meters.  Config files speak
km^-2 for densities; the conversion helpers below are the single crossing
point between the two unit systems.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

M2_PER_KM2 = 1.0e6


def per_km2_to_per_m2(density: float) -> float:
    """Convert a spatial density from km^-2 to m^-2."""
    return density / M2_PER_KM2


def per_m2_to_per_km2(density: float) -> float:
    """Convert a spatial density from m^-2 to km^-2."""
    return density * M2_PER_KM2


class ErlangIndexMode(enum.Enum):
    """Upper index convention for the truncated Poisson sum in the
    energy-readiness probability.

    The accumulated fading sum after k scheduling rounds in a cell with n
    other users spans k*(n+1)-1 harvest slots.  SLOT_COUNT uses that slot
    count as the summation index, keeping it equal to the Erlang shape of
    the accumulated sum.  ROUND_COUNT uses the round index k instead.
    """

    SLOT_COUNT = "slot_count"
    ROUND_COUNT = "round_count"


@dataclass(frozen=True)
class NetworkParams:
    """Deployment and radio parameters, strict SI units.

    lambda_b      base-station density [m^-2]
    lambda_u      user density [m^-2]
    p_s           per-station transmit power [W]
    alpha         path-loss exponent, must exceed 2
    a_eff         RF-to-DC conversion efficiency, in (0, 1]
    e_th          energy required to receive one downlink slot [J]
    sigma2        noise power [W]
    slot_seconds  slot duration [s]; the model is normalized to unit slots,
                  so validation rejects anything other than 1.0
    """

    lambda_b: float
    lambda_u: float
    p_s: float
    alpha: float
    a_eff: float
    e_th: float
    sigma2: float = 0.0
    slot_seconds: float = 1.0


def validate(params: NetworkParams) -> NetworkParams:
    """Check every NetworkParams invariant; return params unchanged.

    Raises ValueError naming the first violated field.  Checks are ordered,
    so error messages are deterministic.  Idempotent by construction.
    """
    checks = (
        (params.lambda_b > 0 and math.isfinite(params.lambda_b),
         "lambda_b must be positive and finite"),
        (params.lambda_u >= 0 and math.isfinite(params.lambda_u),
         "lambda_u must be non-negative and finite"),
        (params.p_s > 0 and math.isfinite(params.p_s),
         "p_s must be positive and finite"),
        (params.alpha > 2 and math.isfinite(params.alpha),
         "alpha must exceed 2"),
        (0 < params.a_eff <= 1, "a_eff must lie in (0, 1]"),
        (params.e_th > 0 and math.isfinite(params.e_th),
         "e_th must be positive and finite"),
        (params.sigma2 >= 0 and math.isfinite(params.sigma2),
         "sigma2 must be non-negative and finite"),
        (params.slot_seconds == 1.0, "slot_seconds must equal 1.0"),
    )
    for ok, message in checks:
        if not ok:
            raise ValueError(message)
    return params


@dataclass(frozen=True)
class NumericPolicy:
    """Tolerances and truncation caps shared by the closed-form layer.

    quad_rel_tol     relative tolerance for adaptive quadrature
    series_tail_eps  mass below which infinite series are truncated
    n_max_cap        hard cap on the user-count series index
    k_max_cap        hard cap on the charging-rounds series index
    erlang_index_mode  see ErlangIndexMode
    eps_sat          saturation margin used by the sustainable-ratio search
    plateau_multiple lambda_u/lambda_b ratio used to probe the throughput
                     plateau in the sustainable-ratio search
    """

    quad_rel_tol: float = 1e-8
    series_tail_eps: float = 1e-9
    n_max_cap: int = 2000
    k_max_cap: int = 2000
    erlang_index_mode: ErlangIndexMode = ErlangIndexMode.SLOT_COUNT
    eps_sat: float = 0.01
    plateau_multiple: float = 50.0

    def __post_init__(self):
        if not (0 < self.quad_rel_tol < 1):
            raise ValueError("quad_rel_tol must lie in (0, 1)")
        if not (0 < self.series_tail_eps < 1):
            raise ValueError("series_tail_eps must lie in (0, 1)")
        if self.n_max_cap < 1:
            raise ValueError("n_max_cap must be at least 1")
        if self.k_max_cap < 1:
            raise ValueError("k_max_cap must be at least 1")
        if not isinstance(self.erlang_index_mode, ErlangIndexMode):
            raise ValueError("erlang_index_mode must be an ErlangIndexMode")
        if not (0 < self.eps_sat < 1):
            raise ValueError("eps_sat must lie in (0, 1)")
        if self.plateau_multiple <= 0:
            raise ValueError("plateau_multiple must be positive")
