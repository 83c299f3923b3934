"""Rate distortion functions for a Gaussian vector observed through a sampling subset.

The reproduction covers all m components while the encoder sees only the
sampled block, so the mean squared error over the full vector splits into an
irreducible estimation floor plus a weighted error on the sampled block.  The
weight matrix below carries that reduction, and the rate distortion function
is a reverse waterfill over the eigenvalues of the weighted sampled
covariance.  All rates are in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BudgetOutOfRange,
    DimensionMismatch,
    EigenFailure,
    InfeasibleDistortion,
    SingularSigmaA,
)
from .model import BlockPartition, CovarianceModel, partition

RATE_CAP_BITS = 64.0        # rates above this are treated as "distortion floor reached"
_WF_MAX_ITER = 200
_WF_INTERVAL_TOL = 1e-14    # relative to the largest eigenvalue


def _solve_sigma_a(sigma_a: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(sigma_a, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSigmaA(f"sampled-block covariance is singular: {exc}") from exc


def weight_matrix(bp: BlockPartition) -> np.ndarray:
    """Distortion weight on the sampled block.

    G = I + Sigma_A^{-1} Sigma_{AA^c} Sigma_{AA^c}^T Sigma_A^{-1}; measuring
    the sampled reproduction under G accounts for the error the linear
    estimate of the unsampled components inherits from it.
    """
    b = _solve_sigma_a(bp.sigma_a, bp.sigma_a_ac)
    g = np.eye(bp.k) + b @ b.T
    return 0.5 * (g + g.T)


def min_distortion(bp: BlockPartition) -> float:
    """Estimation floor: total MSE of the best unsampled-from-sampled estimate."""
    b = _solve_sigma_a(bp.sigma_a, bp.sigma_a_ac)
    explained = float(np.sum(bp.sigma_a_ac * b))
    return max(0.0, float(np.trace(bp.sigma_ac)) - explained)


def max_distortion(model: CovarianceModel) -> float:
    """Distortion of the all-zero reproduction; beyond it the rate is zero."""
    return float(np.trace(model.sigma))


def congruent_spectrum(sigma_a: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Eigenvalues of G Sigma_A via the symmetric form Sigma_A^{1/2} G Sigma_A^{1/2}, descending."""
    try:
        w, v = np.linalg.eigh(sigma_a)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(f"eigendecomposition of sampled block failed: {exc}") from exc
    if np.min(w) <= 0.0:
        raise SingularSigmaA(f"sampled block has nonpositive eigenvalue {np.min(w):.3e}")
    root = (v * np.sqrt(w)) @ v.T
    s = root @ g @ root
    s = 0.5 * (s + s.T)
    try:
        lam = np.linalg.eigvalsh(s)
    except np.linalg.LinAlgError as exc:
        raise EigenFailure(f"eigendecomposition of weighted form failed: {exc}") from exc
    if np.min(lam) <= 0.0:
        raise EigenFailure(f"weighted spectrum has nonpositive eigenvalue {np.min(lam):.3e}")
    return lam[::-1].copy()


def srdf_eigenvalues(bp: BlockPartition) -> np.ndarray:
    """Eigenvalues of G_A Sigma_A, descending; real and positive by construction."""
    return congruent_spectrum(bp.sigma_a, weight_matrix(bp))


@dataclass(frozen=True)
class WaterfillSolution:
    alpha: float
    per_mode_distortion: tuple[float, ...]
    rate_bits: float


def waterfill(lambdas, budget: float) -> WaterfillSolution:
    """Reverse waterfill: spend ``budget`` distortion across eigenvalue modes.

    The water level alpha solves sum_i min(alpha, lambda_i) = budget by
    bisection; each mode contributes (1/2) log2(lambda_i / alpha) bits when
    lambda_i is above the level and nothing otherwise.
    """
    lams = [float(x) for x in np.atleast_1d(np.asarray(lambdas, dtype=float))]
    if len(lams) == 0 or min(lams) <= 0.0:
        raise ValueError(f"eigenvalues must be positive, got {lams}")
    total = sum(lams)
    top = max(lams)
    if not budget > 0.0:
        raise BudgetOutOfRange(f"distortion budget must be positive, got {budget}")
    if budget > total * (1.0 + 1e-9):
        raise BudgetOutOfRange(f"budget {budget} exceeds the spectrum total {total}")
    if budget >= total:
        return WaterfillSolution(alpha=top, per_mode_distortion=tuple(lams), rate_bits=0.0)
    lo = budget / len(lams) * 1e-6
    hi = top
    for _ in range(_WF_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if sum(min(mid, lam) for lam in lams) < budget:
            lo = mid
        else:
            hi = mid
        if hi - lo < _WF_INTERVAL_TOL * top:
            break
    alpha = 0.5 * (lo + hi)
    dist = tuple(min(alpha, lam) for lam in lams)
    rate = sum(0.5 * math.log2(lam / alpha) for lam in lams if lam > alpha)
    return WaterfillSolution(alpha=alpha, per_mode_distortion=dist, rate_bits=rate)


def waterfill_inverse(lambdas, rate_bits: float) -> float:
    """Weighted distortion achieved at ``rate_bits``; inverse of the waterfill rate.

    Returns sum_i min(alpha, lambda_i) where alpha is the level whose
    waterfill rate equals ``rate_bits``.  Rates at or above RATE_CAP_BITS
    collapse to zero weighted distortion.
    """
    lams = np.atleast_1d(np.asarray(lambdas, dtype=float))
    if rate_bits < 0.0:
        raise ValueError(f"rate must be nonnegative, got {rate_bits}")
    top = float(np.max(lams))
    if rate_bits == 0.0:
        return float(np.sum(lams))
    if rate_bits >= RATE_CAP_BITS:
        return 0.0
    lo = math.log2(top) - 2.0 * (rate_bits + 1.0)
    hi = math.log2(top)
    for _ in range(_WF_MAX_ITER):
        mid = 0.5 * (lo + hi)
        alpha = 2.0 ** mid
        rate = float(np.sum(0.5 * np.log2(np.maximum(lams / alpha, 1.0))))
        if rate > rate_bits:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13:
            break
    alpha = 2.0 ** (0.5 * (lo + hi))
    return float(np.sum(np.minimum(alpha, lams)))


@dataclass(frozen=True)
class SrdfPoint:
    delta: float
    rate_bits: float
    trivial: bool = False   # set when delta >= the zero-rate distortion


def _srdf_from_spectrum(lambdas: np.ndarray, dmin: float, delta: float) -> SrdfPoint:
    if delta <= dmin:
        raise InfeasibleDistortion(
            f"delta {delta} is at or below the estimation floor {dmin}; feasible range is open at the floor"
        )
    total = float(np.sum(lambdas))
    budget = delta - dmin
    if budget >= total * (1.0 - 1e-12):
        return SrdfPoint(delta=delta, rate_bits=0.0, trivial=True)
    sol = waterfill(lambdas, budget)
    return SrdfPoint(delta=delta, rate_bits=sol.rate_bits)


def srdf(model: CovarianceModel, sampled, delta: float) -> SrdfPoint:
    """Rate distortion function at distortion ``delta``, sampling set fixed."""
    bp = partition(model, sampled)
    return _srdf_from_spectrum(srdf_eigenvalues(bp), min_distortion(bp), delta)


def distortion_rate(model: CovarianceModel, sampled, rate_bits: float) -> float:
    """Distortion achieved at ``rate_bits``; inverse of srdf along the same curve."""
    bp = partition(model, sampled)
    dmin = min_distortion(bp)
    lam = srdf_eigenvalues(bp)
    return dmin + waterfill_inverse(lam, rate_bits)


def eval_da(g: np.ndarray, x, y) -> float:
    """Weighted squared error (x - y)^T G (x - y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.shape != (g.shape[0],):
        raise DimensionMismatch(
            f"points must both have shape ({g.shape[0]},), got {x.shape} and {y.shape}"
        )
    d = x - y
    return float(d @ g @ d)


def correlation_model(sigmas, corr) -> CovarianceModel:
    """Build a covariance from per-component deviations and a correlation matrix."""
    s = np.asarray(sigmas, dtype=float)
    r = np.asarray(corr, dtype=float)
    if s.ndim != 1 or np.min(s) <= 0.0:
        raise ValueError(f"deviations must be positive, got {s}")
    if r.shape != (s.size, s.size):
        raise DimensionMismatch(f"correlation must be {s.size}x{s.size}, got {r.shape}")
    if np.max(np.abs(np.diag(r) - 1.0)) > 1e-12:
        raise ValueError("correlation matrix must have unit diagonal")
    return CovarianceModel(r * np.outer(s, s))


def single_site_min_distortion(sigmas, corr, j: int) -> float:
    """Estimation floor when only component j (1-based) is sampled."""
    s = np.asarray(sigmas, dtype=float)
    r = np.asarray(corr, dtype=float)
    jj = j - 1
    others = [i for i in range(s.size) if i != jj]
    return float(sum(s[i] ** 2 * (1.0 - r[i, jj] ** 2) for i in others))


def single_site_srdf(sigmas, corr, j: int, delta: float) -> float:
    """Closed-form rate when one component is sampled.

    The weighted sampled variance collapses to a single mode
    sigma_j^2 + sum_{i != j} r_ij^2 sigma_i^2, so the curve is a plain log
    ratio over the distortion left above the floor.
    """
    s = np.asarray(sigmas, dtype=float)
    r = np.asarray(corr, dtype=float)
    jj = j - 1
    dmin = single_site_min_distortion(sigmas, corr, j)
    if delta <= dmin:
        raise InfeasibleDistortion(f"delta {delta} is at or below the floor {dmin}")
    mode = float(s[jj] ** 2 + sum(s[i] ** 2 * r[i, jj] ** 2 for i in range(s.size) if i != jj))
    return max(0.0, 0.5 * math.log2(mode / (delta - dmin)))
