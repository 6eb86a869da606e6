"""Training-length optimization of the achievable-rate lower bound.

The bound trades training against data transmission inside a coherence block
of normalized length beta: training length beta_t buys channel knowledge
(through the effective SNR) but only the remaining fraction carries data, so

    c_bound = max_{beta_t}  ((beta - beta_t) / beta) * R_eff(beta_t).

The objective is evaluated on the grid {step, 2 step, ..., beta - step}
(endpoints give zero objective and are excluded); ties break toward smaller
beta_t.  Optional golden-section refinement sharpens the optimum inside the
winning bracket when the grid is too coarse, e.g. for training-length ratio
studies at large receiver counts.

Also here: the Bussgang-linearization comparison bound for Gaussian inputs,

    c = max_{beta_t} ((beta - beta_t)/beta) log2(1 + 2 alpha snr_eff
                                                 / (pi (1 + snr_eff))),

the quadratic low-SNR closed forms, and the small-alpha rate approximation
through the single-pair capacity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy import optimize

from .numerics import LN2, QuadratureRule, gauss_hermite
from .replica import (
    SystemParams,
    csir_rate,
    reff_linear,
    reff_onebit,
    single_pair_capacity,
    solve_qh,
)

__all__ = [
    "RateCurve",
    "BoundResult",
    "training_grid",
    "optimize_training",
    "replica_bound",
    "bussgang_bound",
    "low_snr_asymptotics",
    "small_alpha_rate",
    "sweep_onebit_alpha",
    "CompareRow",
    "compare_sweep",
]


@dataclass(frozen=True)
class RateCurve:
    """Sampled map beta_t -> rate, with the training-tradeoff objective."""

    beta: float
    grid_step: float
    beta_t: np.ndarray
    r_eff: np.ndarray
    objective: np.ndarray

    def rows(self):
        """Yield (beta_t, r_eff, objective) tuples in grid order."""
        for bt, r, o in zip(self.beta_t, self.r_eff, self.objective):
            yield float(bt), float(r), float(o)


@dataclass(frozen=True)
class BoundResult:
    """Optimized training length and the bound value it achieves."""

    beta_t_opt: float
    c_bound: float
    method: str
    params: Optional[SystemParams] = None


def training_grid(beta: float, grid_step: float) -> np.ndarray:
    """Grid {step, 2 step, ..., beta - step}; raises on an empty grid."""
    if not grid_step > 0.0:
        raise ValueError(f"grid_step must be positive, got {grid_step}")
    n = int(math.floor((beta - grid_step) / grid_step + 1e-9))
    if n < 1:
        raise ValueError(f"empty training grid: beta={beta} with grid_step={grid_step}")
    return np.arange(1, n + 1) * grid_step


def optimize_training(
    reff: Callable[[float], float],
    beta: float,
    grid_step: float,
    *,
    params: Optional[SystemParams] = None,
    method: str = "replica-linear",
    refine: bool = False,
):
    """Maximize ((beta - beta_t)/beta) * reff(beta_t) over the training grid.

    Returns ``(BoundResult, RateCurve)``.  Ties break toward smaller beta_t.
    With ``refine=True`` a bounded golden-section search runs inside the
    bracket around the winning grid point and replaces the optimum if it
    improves the objective.
    """
    bts = training_grid(beta, grid_step)
    rates = np.array([float(reff(bt)) for bt in bts])
    objective = (beta - bts) / beta * rates
    i = int(np.argmax(objective))  # first maximum == smallest beta_t on ties
    beta_t_opt = float(bts[i])
    c_bound = float(objective[i])
    if refine:
        lo = float(bts[i - 1]) if i > 0 else float(bts[0])
        hi = float(bts[i + 1]) if i + 1 < len(bts) else float(bts[-1])
        if hi > lo:
            res = optimize.minimize_scalar(
                lambda bt: -(beta - bt) / beta * float(reff(bt)),
                bounds=(lo, hi),
                method="bounded",
                options={"xatol": grid_step * 1e-3},
            )
            if -float(res.fun) > c_bound:
                beta_t_opt = float(res.x)
                c_bound = -float(res.fun)
    curve = RateCurve(beta=beta, grid_step=grid_step, beta_t=bts,
                      r_eff=rates, objective=objective)
    return BoundResult(beta_t_opt=beta_t_opt, c_bound=c_bound,
                       method=method, params=params), curve


def _overlap_cache(rho: float, rule: QuadratureRule, tol: float):
    cache = {}

    def get(bt: float):
        ov = cache.get(bt)
        if ov is None:
            ov = solve_qh(rho, bt, rule, tol)
            cache[bt] = ov
        return ov

    return get


def replica_bound(
    params: SystemParams,
    grid_step: float = 0.1,
    rule: Optional[QuadratureRule] = None,
    tol: float = 1e-10,
    *,
    refine: bool = False,
):
    """Optimized training-based bound for the configured transmitter type.

    Returns ``(BoundResult, RateCurve)`` with method ``replica-linear`` or
    ``replica-onebit``.
    """
    rule = rule or gauss_hermite()
    overlap_at = _overlap_cache(params.rho, rule, tol)
    if params.tx_type == "linear":
        method, rate_fn = "replica-linear", reff_linear
    else:
        method, rate_fn = "replica-onebit", reff_onebit

    def rate(bt: float) -> float:
        return rate_fn(params, overlap_at(bt), rule, tol)

    return optimize_training(rate, params.beta, grid_step,
                             params=params, method=method, refine=refine)


def bussgang_inner_rate(alpha: float, snr_eff: float) -> float:
    """log2(1 + 2 alpha snr_eff / (pi (1 + snr_eff))), the linearized rate."""
    return math.log1p(2.0 * alpha * snr_eff / (math.pi * (1.0 + snr_eff))) / LN2


def bussgang_bound(
    params: SystemParams,
    grid_step: float = 0.1,
    rule: Optional[QuadratureRule] = None,
    tol: float = 1e-10,
) -> BoundResult:
    """Bussgang-linearization comparison bound (Gaussian inputs only).

    Uses the same trained effective SNR per beta_t as the replica bound, so
    the two are directly comparable point by point.
    """
    if params.tx_type != "linear":
        raise ValueError("the Bussgang comparison bound is defined for linear transmitters")
    rule = rule or gauss_hermite()
    overlap_at = _overlap_cache(params.rho, rule, tol)

    def rate(bt: float) -> float:
        return bussgang_inner_rate(params.alpha, overlap_at(bt).snr_eff)

    result, _ = optimize_training(rate, params.beta, grid_step,
                                  params=params, method="bussgang")
    return result


def low_snr_asymptotics(params: SystemParams):
    """Closed-form low-SNR limits, identical for both transmitter types:

        beta_t_opt ~ beta / 2,
        c_bound    ~ (alpha beta / (pi^2 ln 2)) rho^2.
    """
    beta_t_opt = params.beta / 2.0
    c_bound = params.alpha * params.beta * params.rho ** 2 / (math.pi ** 2 * LN2)
    return beta_t_opt, c_bound


def small_alpha_rate(alpha: float, snr_eff: float,
                     rule: Optional[QuadratureRule] = None) -> float:
    """Few-receivers approximation: alpha times the single-pair capacity."""
    return alpha * single_pair_capacity(snr_eff, rule)


def sweep_onebit_alpha(
    alphas: Sequence[float],
    beta: float,
    rho: float,
    grid_step: float = 0.1,
    rule: Optional[QuadratureRule] = None,
    tol: float = 1e-10,
    *,
    refine: bool = False,
):
    """One-bit transmitter bounds over a receiver-ratio sweep.

    The training overlap q_h does not depend on alpha, so the grid of
    effective channels is solved once and shared by every alpha.  Returns a
    list of ``(BoundResult, RateCurve)`` in the order of ``alphas``.
    """
    rule = rule or gauss_hermite()
    overlap_at = _overlap_cache(rho, rule, tol)
    out = []
    for alpha in alphas:
        params = SystemParams(alpha=alpha, beta=beta, rho=rho, tx_type="onebit")

        def rate(bt: float, _p=params) -> float:
            return reff_onebit(_p, overlap_at(bt), rule, tol)

        out.append(optimize_training(rate, beta, grid_step, params=params,
                                     method="replica-onebit", refine=refine))
    return out


@dataclass(frozen=True)
class CompareRow:
    """One SNR point of the linear-transmitter bound comparison."""

    rho_db: float
    alpha: float
    beta: float
    c_bound_replica: float
    c_bound_bussgang: float
    r_csir: float


def compare_sweep(
    alpha: float,
    beta: float,
    rho_db_values: Iterable[float],
    grid_step: float = 0.1,
    rule: Optional[QuadratureRule] = None,
    tol: float = 1e-10,
):
    """Replica vs Bussgang vs known-channel rates over an SNR sweep.

    Each SNR point solves the training grid once and reuses it for both
    optimized bounds.
    """
    rule = rule or gauss_hermite()
    rows = []
    for rho_db in rho_db_values:
        rho = 10.0 ** (rho_db / 10.0)
        params = SystemParams(alpha=alpha, beta=beta, rho=rho, tx_type="linear")
        overlap_at = _overlap_cache(rho, rule, tol)
        rep, _ = optimize_training(
            lambda bt: reff_linear(params, overlap_at(bt), rule, tol),
            beta, grid_step, params=params, method="replica-linear")
        bus, _ = optimize_training(
            lambda bt: bussgang_inner_rate(alpha, overlap_at(bt).snr_eff),
            beta, grid_step, params=params, method="bussgang")
        rows.append(CompareRow(
            rho_db=float(rho_db),
            alpha=alpha,
            beta=beta,
            c_bound_replica=rep.c_bound,
            c_bound_bussgang=bus.c_bound,
            r_csir=csir_rate(alpha, rho, rule, tol),
        ))
    return rows
