"""Large-system closed forms for training-based rates with one-bit receivers.

Training phase.  The overlap q_h in [0, 1) between the channel and its MMSE
estimate after a training block of normalized length beta_t solves

    q / (1 - q) = (beta_t B^2 / pi) E_u[ exp(-B^2 q u^2) / Q(B sqrt(q) u) ],
    B = sqrt(rho / (1 + rho (1 - q))),   u ~ N(0, 1),

where rho is the per-receiver SNR (noise variance normalized to 1) and
1 - q_h is the per-coefficient estimation MSE.  The trained system is
equivalent to a known channel with coefficient variance q_h and noise
inflated to sigma_eff^2 = 1 + rho (1 - q_h), so the effective SNR is

    snr_eff = rho q_h / (1 + rho (1 - q_h)).

Data phase.  With Gaussian (linear-transmitter) data symbols, the
input-output overlap q_x solves the same kind of equation with
(beta_t, rho) replaced by (alpha, snr_eff), where alpha is the
receiver-to-transmitter ratio, together with q_x = q_x_hat / (1 + q_x_hat).
With one-bit (QPSK) data symbols the second relation becomes a tanh moment:

    q_x + 1 = E_u[ tanh(sqrt(q_x_hat) u + q_x_hat) (2 + u / sqrt(q_x_hat)) ].

Fixed points may be non-unique; the admissible solution minimizes the free
energies F1 (training) / F2 (data), whose stationary points the equations
are.  Rates are reported in bits per transmitter per channel use:

    R_eff = (1 / ln 2) [ F2(q_x, q_x_hat)
                         + 4 alpha E_u( Q(s u) ln Q(s u) ) ],
    s = sqrt(snr_eff).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .numerics import LN2, QuadratureRule, exp_ratio, gauss_hermite, q_log_q

__all__ = [
    "SystemParams",
    "ChannelOverlap",
    "DataOverlap",
    "SolverError",
    "solve_qh",
    "perfect_csi_overlap",
    "f1_value",
    "effective_snr",
    "solve_qx_linear",
    "solve_qx_onebit",
    "f2_linear",
    "f2_onebit",
    "reff_linear",
    "reff_onebit",
    "csir_rate",
    "single_pair_capacity",
    "overlap_fixed_points",
]

TX_TYPES = ("linear", "onebit")

# Residual sampling grid for the overlap equations: log-spaced so that
# roots of order snr (low-SNR regime, down to ~1e-10) are still bracketed.
_GRID_LO = 1e-12
_GRID_HI = 1.0 - 1e-9
_GRID_N = 64


class SolverError(RuntimeError):
    """A fixed-point solver failed to converge.

    ``brackets`` holds every sign-change bracket found while sampling the
    residual; ``diagnostics`` carries per-start residual information for
    iterative solves.
    """

    def __init__(self, message: str, *, brackets=None, diagnostics=None):
        super().__init__(message)
        self.brackets = list(brackets) if brackets else []
        self.diagnostics = dict(diagnostics) if diagnostics else {}


@dataclass(frozen=True)
class SystemParams:
    """Normalized system description.

    alpha = receivers / transmitters, beta = coherence length / transmitters,
    rho = per-receiver SNR (noise variance is normalized to 1 throughout).
    """

    alpha: float
    beta: float
    rho: float
    tx_type: str = "linear"

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.beta > 0.0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.rho >= 0.0:
            raise ValueError(f"rho must be nonnegative, got {self.rho}")
        if self.tx_type not in TX_TYPES:
            raise ValueError(f"tx_type must be one of {TX_TYPES}, got {self.tx_type!r}")


@dataclass(frozen=True)
class ChannelOverlap:
    """Training-phase fixed point and the induced effective channel."""

    beta_t: float
    q_h: float
    q_h_hat: float
    rho_eff: float
    sigma_eff_sq: float
    snr_eff: float


@dataclass(frozen=True)
class DataOverlap:
    """Data-phase fixed point, with the free energy used for root selection."""

    q_x: float
    q_x_hat: float
    f2_value: float
    a_coeff: float


def _k_sq(snr: float, q) -> np.ndarray:
    # K^2 = snr / (1 + snr (1 - q)); the squared scale of the Q argument.
    return snr / (1.0 + snr * (1.0 - q))


def _gaussian_rhs(q, coef: float, snr: float, rule: QuadratureRule):
    """(coef K^2 / pi) E_u[ exp(-K^2 q u^2) / Q(K sqrt(q) u) ], vectorized in q."""
    q = np.asarray(q, dtype=float)
    ksq = _k_sq(snr, q)
    arg = np.sqrt(ksq * q)[..., None] * rule.nodes
    return coef * ksq / np.pi * (exp_ratio(arg) @ rule.weights)


def _overlap_residual(q, coef: float, snr: float, rule: QuadratureRule):
    q = np.asarray(q, dtype=float)
    return q / (1.0 - q) - _gaussian_rhs(q, coef, snr, rule)


def _bisect(f: Callable[[float], float], lo: float, hi: float, flo: float, fhi: float) -> float:
    """Bisection to machine-width brackets (the residual is cheap)."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        fm = f(mid)
        if fm == 0.0:
            return mid
        if flo * fm < 0.0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def overlap_fixed_points(coef: float, snr: float, rule: QuadratureRule):
    """All roots in (0, 1) of  q/(1-q) = (coef K^2/pi) E_u exp(-K^2 q u^2)/Q(K sqrt(q) u).

    Samples the residual at log-spaced points and bisects every sign-change
    bracket.  Returns ``(roots, brackets)`` so callers can inspect
    multiplicity.  With coef * snr > 0 the residual is negative at 0+ and
    positive at 1-, so at least one root is always bracketed.
    """
    qs = np.geomspace(_GRID_LO, _GRID_HI, _GRID_N)
    res = _overlap_residual(qs, coef, snr, rule)

    def scalar(q: float) -> float:
        return float(_overlap_residual(q, coef, snr, rule))

    roots, brackets = [], []
    for i in range(len(qs) - 1):
        if res[i] == 0.0:
            roots.append(float(qs[i]))
            continue
        if res[i] * res[i + 1] < 0.0:
            brackets.append((float(qs[i]), float(qs[i + 1])))
            roots.append(_bisect(scalar, float(qs[i]), float(qs[i + 1]), float(res[i]), float(res[i + 1])))
    if res[-1] == 0.0:
        roots.append(float(qs[-1]))
    return roots, brackets


def _select_root(
    roots, brackets, coef: float, snr: float, rule: QuadratureRule, tol: float,
    free_energy: Callable[[float], float], what: str,
):
    if not roots:
        raise SolverError(
            f"no {what} fixed point bracketed (coef={coef:g}, snr={snr:g}); "
            f"residual sampled at {_GRID_N} log-spaced points in ({_GRID_LO:g}, {_GRID_HI:g})",
            brackets=brackets,
        )
    q = min(roots, key=free_energy)
    resid = abs(float(_overlap_residual(q, coef, snr, rule)))
    if resid > tol * max(1.0, q / (1.0 - q)):
        raise SolverError(
            f"{what} fixed point residual {resid:.3e} exceeds tol {tol:.3e} at q={q!r}",
            brackets=brackets,
            diagnostics={"roots": roots, "residual": resid},
        )
    return q


def effective_snr(rho: float, q_h: float) -> float:
    """snr_eff = rho q_h / (1 + rho (1 - q_h)); in [0, rho], increasing in q_h."""
    if not rho >= 0.0:
        raise ValueError(f"rho must be nonnegative, got {rho}")
    if not 0.0 <= q_h <= 1.0:
        raise ValueError(f"q_h must lie in [0, 1], got {q_h}")
    return rho * q_h / (1.0 + rho * (1.0 - q_h))


def f1_value(q: float, q_hat: float, rho: float, beta_t: float,
             rule: Optional[QuadratureRule] = None) -> float:
    """Training-phase free energy

        F1(q, q_hat) = -4 beta_t E_u[ Q(a u) ln Q(a u) ] + q q_hat
                       + ln(1 + q_hat) - q_hat,
        a = sqrt(rho q / (rho (1 - q) + 1)).

    Stationary in q_hat exactly at q_hat = q / (1 - q); jointly stationary
    at the overlap fixed point.
    """
    if not 0.0 <= q < 1.0:
        raise ValueError(f"q must lie in [0, 1), got {q}")
    if not q_hat >= 0.0:
        raise ValueError(f"q_hat must be nonnegative, got {q_hat}")
    rule = rule or gauss_hermite()
    a = math.sqrt(_k_sq(rho, q) * q)
    term = -4.0 * beta_t * float(rule.weights @ q_log_q(a * rule.nodes))
    return term + q * q_hat + math.log1p(q_hat) - q_hat


def solve_qh(rho: float, beta_t: float, rule: Optional[QuadratureRule] = None,
             tol: float = 1e-10) -> ChannelOverlap:
    """Solve the training-phase overlap equation and build the effective channel.

    beta_t = 0 (or rho = 0) degenerates to q_h = 0: no estimate, snr_eff = 0.
    Among multiple fixed points the F1 minimizer is returned.
    """
    if not rho >= 0.0:
        raise ValueError(f"rho must be nonnegative, got {rho}")
    if not beta_t >= 0.0:
        raise ValueError(f"beta_t must be nonnegative, got {beta_t}")
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    rule = rule or gauss_hermite()
    if rho == 0.0 or beta_t == 0.0:
        return ChannelOverlap(beta_t=beta_t, q_h=0.0, q_h_hat=0.0, rho_eff=0.0,
                              sigma_eff_sq=1.0 + rho, snr_eff=0.0)
    roots, brackets = overlap_fixed_points(beta_t, rho, rule)
    q = _select_root(roots, brackets, beta_t, rho, rule, tol,
                     lambda r: f1_value(r, r / (1.0 - r), rho, beta_t, rule),
                     "channel overlap")
    return ChannelOverlap(
        beta_t=beta_t,
        q_h=q,
        q_h_hat=q / (1.0 - q),
        rho_eff=rho * q,
        sigma_eff_sq=1.0 + (1.0 - q) * rho,
        snr_eff=effective_snr(rho, q),
    )


def perfect_csi_overlap(rho: float) -> ChannelOverlap:
    """Known-channel limit: q_h = 1, no noise inflation, snr_eff = rho."""
    if not rho >= 0.0:
        raise ValueError(f"rho must be nonnegative, got {rho}")
    return ChannelOverlap(beta_t=math.inf, q_h=1.0, q_h_hat=math.inf,
                          rho_eff=rho, sigma_eff_sq=1.0, snr_eff=rho)


def f2_linear(r: float, r_hat: float, alpha: float, snr_eff: float,
              rule: Optional[QuadratureRule] = None) -> float:
    """Data-phase free energy for Gaussian data symbols:

        F2_L(r, r_hat) = -4 alpha E_u[ Q(A sqrt(r) u) ln Q(A sqrt(r) u) ]
                         + ln(1 + r_hat) - r_hat + r r_hat,
        A = sqrt(snr_eff / (snr_eff (1 - r) + 1)).
    """
    if not 0.0 <= r < 1.0:
        raise ValueError(f"r must lie in [0, 1), got {r}")
    if not r_hat >= 0.0:
        raise ValueError(f"r_hat must be nonnegative, got {r_hat}")
    rule = rule or gauss_hermite()
    a = math.sqrt(_k_sq(snr_eff, r) * r)
    term = -4.0 * alpha * float(rule.weights @ q_log_q(a * rule.nodes))
    return term + math.log1p(r_hat) - r_hat + r * r_hat


def _ln_cosh(t: np.ndarray) -> np.ndarray:
    # ln cosh(t) = |t| - ln 2 + log1p(exp(-2|t|)); stable for large |t|
    at = np.abs(t)
    return at - LN2 + np.log1p(np.exp(-2.0 * at))


def f2_onebit(r: float, r_hat: float, alpha: float, snr_eff: float,
              rule: Optional[QuadratureRule] = None) -> float:
    """Data-phase free energy for one-bit (QPSK) data symbols:

        F2_O(r, r_hat) = -4 alpha E_u[ Q(A sqrt(r) u) ln Q(A sqrt(r) u) ]
                         + r_hat - 2 E_u[ ln cosh(r_hat + sqrt(r_hat) u) ]
                         + r r_hat.
    """
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"r must lie in [0, 1], got {r}")
    if not r_hat >= 0.0:
        raise ValueError(f"r_hat must be nonnegative, got {r_hat}")
    rule = rule or gauss_hermite()
    a = math.sqrt(_k_sq(snr_eff, r) * r)
    term = -4.0 * alpha * float(rule.weights @ q_log_q(a * rule.nodes))
    cosh_term = float(rule.weights @ _ln_cosh(r_hat + math.sqrt(r_hat) * rule.nodes))
    return term + r_hat - 2.0 * cosh_term + r * r_hat


def solve_qx_linear(snr_eff: float, alpha: float, rule: Optional[QuadratureRule] = None,
                    tol: float = 1e-10) -> DataOverlap:
    """Data-phase overlap for Gaussian data symbols.

    Substituting q_x = q_x_hat / (1 + q_x_hat) reduces the pair of stationarity
    conditions to one scalar equation of the same form as the training one,
    with (beta_t, rho) -> (alpha, snr_eff).  Among multiple roots the F2_L
    minimizer is returned.
    """
    if not snr_eff >= 0.0:
        raise ValueError(f"snr_eff must be nonnegative, got {snr_eff}")
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    rule = rule or gauss_hermite()
    if snr_eff == 0.0:
        return DataOverlap(q_x=0.0, q_x_hat=0.0,
                           f2_value=f2_linear(0.0, 0.0, alpha, 0.0, rule), a_coeff=0.0)
    roots, brackets = overlap_fixed_points(alpha, snr_eff, rule)
    q = _select_root(roots, brackets, alpha, snr_eff, rule, tol,
                     lambda r: f2_linear(r, r / (1.0 - r), alpha, snr_eff, rule),
                     "linear data overlap")
    q_hat = q / (1.0 - q)
    return DataOverlap(
        q_x=q,
        q_x_hat=q_hat,
        f2_value=f2_linear(q, q_hat, alpha, snr_eff, rule),
        a_coeff=math.sqrt(_k_sq(snr_eff, q)),
    )


def _tanh_moment(q_hat: float, rule: QuadratureRule) -> float:
    """E_u[ tanh(sqrt(q_hat) u + q_hat) (2 + u / sqrt(q_hat)) ].

    Below q_hat = 1e-8 the 0 * inf ambiguity is removed by the series
    1 + q_hat - 3 q_hat^2 + O(q_hat^3).
    """
    if q_hat < 1e-8:
        return 1.0 + q_hat - 3.0 * q_hat * q_hat
    s = math.sqrt(q_hat)
    u = rule.nodes
    return float(rule.weights @ (np.tanh(s * u + q_hat) * (2.0 + u / s)))


def solve_qx_onebit(snr_eff: float, alpha: float, rule: Optional[QuadratureRule] = None,
                    tol: float = 1e-10, *, damping: float = 0.5, max_iter: int = 10_000,
                    starts=(0.01, 0.5, 0.99)) -> DataOverlap:
    """Data-phase overlap for one-bit data symbols.

    Damped alternation on (q_x, q_x_hat): q_x_hat follows from q_x by the
    Gaussian-tail equation, then q_x is pulled toward the tanh moment.  Run
    from several starts; converged points are deduplicated and the F2_O
    minimizer wins.  Raises :class:`SolverError` with per-start residuals if
    no start converges within ``max_iter``.
    """
    if not snr_eff >= 0.0:
        raise ValueError(f"snr_eff must be nonnegative, got {snr_eff}")
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not tol > 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    rule = rule or gauss_hermite()
    if snr_eff == 0.0:
        return DataOverlap(q_x=0.0, q_x_hat=0.0,
                           f2_value=f2_onebit(0.0, 0.0, alpha, 0.0, rule), a_coeff=0.0)

    candidates = []
    diagnostics = {}
    for q0 in starts:
        q = float(q0)
        converged = False
        step = math.inf
        for _ in range(max_iter):
            q_hat = float(_gaussian_rhs(q, alpha, snr_eff, rule))
            target = _tanh_moment(q_hat, rule) - 1.0
            step = target - q
            if abs(step) <= tol:
                converged = True
                break
            q = min(max(q + damping * step, 0.0), 1.0)
        diagnostics[q0] = step
        if converged:
            candidates.append((q, q_hat))

    if not candidates:
        raise SolverError(
            f"one-bit data overlap did not converge from starts {tuple(starts)} "
            f"(snr_eff={snr_eff:g}, alpha={alpha:g}, max_iter={max_iter})",
            diagnostics={"last_step_by_start": diagnostics},
        )

    unique = []
    for q, q_hat in candidates:
        if all(abs(q - u[0]) > 1e-8 for u in unique):
            unique.append((q, q_hat))
    q, q_hat = min(unique, key=lambda c: f2_onebit(c[0], c[1], alpha, snr_eff, rule))
    return DataOverlap(
        q_x=q,
        q_x_hat=q_hat,
        f2_value=f2_onebit(q, q_hat, alpha, snr_eff, rule),
        a_coeff=math.sqrt(_k_sq(snr_eff, q)),
    )


def _entropy_term(alpha: float, snr_eff: float, rule: QuadratureRule) -> float:
    # 4 alpha E_u[ Q(sqrt(snr_eff) u) ln Q(sqrt(snr_eff) u) ]
    return 4.0 * alpha * float(rule.weights @ q_log_q(math.sqrt(snr_eff) * rule.nodes))


def reff_linear(params: SystemParams, overlap: ChannelOverlap,
                rule: Optional[QuadratureRule] = None, tol: float = 1e-10) -> float:
    """Per-transmitter rate of the trained system with Gaussian data symbols,
    in bits per channel use."""
    rule = rule or gauss_hermite()
    s = overlap.snr_eff
    if s == 0.0:
        return 0.0
    dov = solve_qx_linear(s, params.alpha, rule, tol)
    return max(0.0, (dov.f2_value + _entropy_term(params.alpha, s, rule)) / LN2)


def reff_onebit(params: SystemParams, overlap: ChannelOverlap,
                rule: Optional[QuadratureRule] = None, tol: float = 1e-10) -> float:
    """Per-transmitter rate of the trained system with one-bit data symbols,
    in bits per channel use.  Capped at 2 bits by the QPSK input alphabet."""
    rule = rule or gauss_hermite()
    s = overlap.snr_eff
    if s == 0.0:
        return 0.0
    dov = solve_qx_onebit(s, params.alpha, rule, tol)
    # the QPSK input alphabet caps the rate at 2 bits; trim float residue
    return float(np.clip((dov.f2_value + _entropy_term(params.alpha, s, rule)) / LN2, 0.0, 2.0))


def csir_rate(alpha: float, rho: float, rule: Optional[QuadratureRule] = None,
              tol: float = 1e-10) -> float:
    """Rate with perfect receiver channel knowledge and Gaussian inputs:

        R = (1/ln 2) [ 4 alpha E_u( Q(sqrt(rho) u) ln Q(sqrt(rho) u)
                                    - Q(A sqrt(q_x) u) ln Q(A sqrt(q_x) u) )
                       + ln(1 + q_x_hat) - q_x_hat + q_x q_x_hat ],

    with (q_x, q_x_hat, A) the Gaussian data fixed point at snr_eff = rho.
    Upper reference for every training-based linear-transmitter bound.
    """
    if not rho >= 0.0:
        raise ValueError(f"rho must be nonnegative, got {rho}")
    rule = rule or gauss_hermite()
    if rho == 0.0:
        return 0.0
    roots, brackets = overlap_fixed_points(alpha, rho, rule)
    q = _select_root(roots, brackets, alpha, rho, rule, tol,
                     lambda r: f2_linear(r, r / (1.0 - r), alpha, rho, rule),
                     "known-channel data overlap")
    q_hat = q / (1.0 - q)
    a_hat = math.sqrt(rho / (1.0 + rho * (1.0 - q)))
    tails = 4.0 * alpha * float(
        rule.weights @ (q_log_q(math.sqrt(rho) * rule.nodes)
                        - q_log_q(a_hat * math.sqrt(q) * rule.nodes))
    )
    return max(0.0, (tails + math.log1p(q_hat) - q_hat + q * q_hat) / LN2)


def single_pair_capacity(rho: float, rule: Optional[QuadratureRule] = None) -> float:
    """Capacity of a single one-bit transmitter/receiver pair over a Rayleigh
    channel known at the receiver, in bits:

        c(rho) = 2 (1 - E_z[ H_b(Q(sqrt(rho) z)) ]),   z ~ N(0, 1).

    Increases from 0 at rho = 0 to 2 as rho -> inf.
    """
    if not rho >= 0.0:
        raise ValueError(f"rho must be nonnegative, got {rho}")
    rule = rule or gauss_hermite()
    x = math.sqrt(rho) * rule.nodes
    hb = -(q_log_q(x) + q_log_q(-x)) / LN2
    return float(np.clip(2.0 * (1.0 - rule.weights @ hb), 0.0, 2.0))
