"""Sampling a second-order random field on [0, 1] at finitely many points.

The sampled covariance is the kernel Gram matrix, the weight matrix and the
estimation floor become kernel integrals, and the rate distortion function is
the same reverse waterfill as in the finite case.  Integrals use composite
Simpson panels aligned to the sampling points, because the correlation
kernels below have derivative creases exactly there; a half-resolution
consistency check guards every quadrature result.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, QuadratureUnderResolved
from .model import validate_covariance
from .srdf import SrdfPoint, _srdf_from_spectrum, congruent_spectrum, waterfill_inverse

QUAD_POINTS_DEFAULT = 2048
QUAD_CONSISTENCY_TOL = 1e-7   # relative gap allowed between full and half resolution
SEP_TOL = 1e-6                # minimum spacing kept between optimized points


@dataclass(frozen=True)
class GaussMarkovKernel:
    """Unit-variance kernel r(s, u) = p^|s - u| with 0 < p < 1."""

    p: float

    def __post_init__(self) -> None:
        if not 0.0 < self.p < 1.0:
            raise DomainError(f"kernel parameter must be in (0, 1), got {self.p}")

    def corr(self, s, u) -> np.ndarray:
        return self.p ** np.abs(np.asarray(s, dtype=float) - np.asarray(u, dtype=float))


@dataclass(frozen=True)
class TabulatedKernel:
    """Kernel given by an N x N mesh on the uniform grid s_i = i/(N-1), bilinear in between."""

    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != vals.shape[1] or vals.shape[0] < 2:
            raise DomainError(f"mesh must be square with N >= 2, got shape {vals.shape}")
        scale = max(1e-300, float(np.max(np.abs(vals))))
        if np.max(np.abs(vals - vals.T)) > 1e-9 * scale:
            raise DomainError("mesh must be symmetric")
        object.__setattr__(self, "values", 0.5 * (vals + vals.T))
        self.values.setflags(write=False)

    @property
    def mesh_n(self) -> int:
        return self.values.shape[0]

    def corr(self, s, u) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        u = np.asarray(u, dtype=float)
        n = self.mesh_n
        # bilinear interpolation on the uniform mesh
        fs = np.clip(s, 0.0, 1.0) * (n - 1)
        fu = np.clip(u, 0.0, 1.0) * (n - 1)
        i0 = np.minimum(fs.astype(int), n - 2)
        j0 = np.minimum(fu.astype(int), n - 2)
        ts = fs - i0
        tu = fu - j0
        v = self.values
        return (
            v[i0, j0] * (1 - ts) * (1 - tu)
            + v[i0 + 1, j0] * ts * (1 - tu)
            + v[i0, j0 + 1] * (1 - ts) * tu
            + v[i0 + 1, j0 + 1] * ts * tu
        )

    @classmethod
    def from_mesh_csv(cls, path) -> "TabulatedKernel":
        """Read the mesh format: a header line with N, then N*N rows ``i,j,value``."""
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
        if not rows:
            raise DomainError(f"mesh file {path} is empty")
        try:
            n = int(rows[0][0])
        except (ValueError, IndexError) as exc:
            raise DomainError(f"mesh file {path} must start with a header line holding N") from exc
        if len(rows) - 1 != n * n:
            raise DomainError(f"mesh file {path} must hold N*N={n * n} rows, got {len(rows) - 1}")
        vals = np.full((n, n), np.nan)
        for row in rows[1:]:
            try:
                i, j, v = int(row[0]), int(row[1]), float(row[2])
            except (ValueError, IndexError) as exc:
                raise DomainError(f"bad mesh row {row!r} in {path}") from exc
            if not (0 <= i < n and 0 <= j < n):
                raise DomainError(f"mesh indices {i},{j} outside 0..{n - 1} in {path}")
            vals[i, j] = v
        if np.any(np.isnan(vals)):
            raise DomainError(f"mesh file {path} leaves entries unset")
        return cls(vals)


@dataclass(frozen=True)
class FieldModel:
    kernel: GaussMarkovKernel | TabulatedKernel
    quad_points: int = QUAD_POINTS_DEFAULT

    def __post_init__(self) -> None:
        if self.quad_points < 8 or self.quad_points % 2 != 0:
            raise DomainError(f"quad_points must be an even integer >= 8, got {self.quad_points}")


@dataclass(frozen=True)
class FieldSamplingSet:
    """Strictly increasing sampling points in [0, 1]."""

    points: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", tuple(float(p) for p in self.points))
        if len(self.points) == 0:
            raise DomainError("at least one sampling point is required")
        if any(not 0.0 <= p <= 1.0 for p in self.points):
            raise DomainError(f"sampling points must lie in [0, 1], got {self.points}")
        if any(b <= a for a, b in zip(self.points, self.points[1:])):
            raise DomainError(f"sampling points must be strictly increasing, got {self.points}")

    @property
    def k(self) -> int:
        return len(self.points)


def _as_field_points(spec) -> FieldSamplingSet:
    return spec if isinstance(spec, FieldSamplingSet) else FieldSamplingSet(spec)


def _segment_nodes_weights(points: tuple[float, ...], n_panels: int, min_panels: int = 8):
    """Simpson nodes/weights over [0, 1], panels aligned to the sampling points."""
    knots = sorted({0.0, 1.0, *points})
    segs = [(a, b) for a, b in zip(knots, knots[1:]) if b - a > 1e-13]
    lengths = [b - a for a, b in segs]
    total = sum(lengths)
    nodes, weights = [], []
    for (a, b), length in zip(segs, lengths):
        panels = max(min_panels, 2 * int(round(n_panels * length / total / 2.0)))
        h = (b - a) / panels
        u = a + h * np.arange(panels + 1)
        w = np.full(panels + 1, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        w *= h / 3.0
        nodes.append(u)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def _quad_pair(field: FieldModel, points, integrand):
    """Evaluate ``integrand(u) @ weights`` at full and half resolution.

    Raises when the two disagree beyond the relative consistency tolerance;
    returns the full-resolution value.
    """
    results = []
    for n_panels, min_panels in ((field.quad_points, 8), (field.quad_points // 2, 4)):
        u, w = _segment_nodes_weights(points, n_panels, min_panels)
        vals = integrand(u)
        results.append(np.tensordot(w, vals, axes=(0, 0)))
    full, half = results
    scale = max(1e-300, float(np.max(np.abs(full))))
    gap = float(np.max(np.abs(full - half)))
    if gap > QUAD_CONSISTENCY_TOL * scale:
        raise QuadratureUnderResolved(
            f"quadrature gap {gap:.3e} exceeds {QUAD_CONSISTENCY_TOL:.0e} * scale {scale:.3e};"
            f" raise quad_points (currently {field.quad_points})"
        )
    return full


def field_gram(field: FieldModel, points) -> np.ndarray:
    """Sampled covariance: the kernel Gram matrix at the sampling points."""
    pts = np.asarray(_as_field_points(points).points)
    gram = field.kernel.corr(pts[:, None], pts[None, :])
    return validate_covariance(gram)


def field_weight_matrix(field: FieldModel, points) -> np.ndarray:
    """Weight matrix on the sampled block, with the cross mass integrated over u."""
    fp = _as_field_points(points)
    pts = np.asarray(fp.points)
    sigma_a = field_gram(field, fp)

    def integrand(u):
        c = field.kernel.corr(u[:, None], pts[None, :])
        return c[:, :, None] * c[:, None, :]

    m_mat = _quad_pair(field, fp.points, integrand)
    inv_m = np.linalg.solve(sigma_a, np.linalg.solve(sigma_a, m_mat).T)
    return 0.5 * (inv_m + inv_m.T)


def field_min_distortion(field: FieldModel, points) -> float:
    """Estimation floor: integrated variance left after conditioning on the samples."""
    fp = _as_field_points(points)
    pts = np.asarray(fp.points)
    sigma_a = field_gram(field, fp)

    def integrand(u):
        c = field.kernel.corr(u[:, None], pts[None, :])
        q = np.einsum("ui,iu->u", c, np.linalg.solve(sigma_a, c.T))
        resid = field.kernel.corr(u, u) - q
        return np.maximum(resid, 0.0)

    return max(0.0, float(_quad_pair(field, fp.points, integrand)))


def field_max_distortion(field: FieldModel) -> float:
    """Integrated variance of the field; the zero-rate distortion."""
    return float(_quad_pair(field, (), lambda u: field.kernel.corr(u, u)))


def field_spectrum(field: FieldModel, points) -> np.ndarray:
    """Eigenvalues of the weighted sampled covariance, descending."""
    fp = _as_field_points(points)
    return congruent_spectrum(field_gram(field, fp), field_weight_matrix(field, fp))


def field_srdf(field: FieldModel, points, delta: float) -> SrdfPoint:
    """Rate distortion function of the field sampled at ``points``."""
    fp = _as_field_points(points)
    lam = field_spectrum(field, fp)
    dmin = field_min_distortion(field, fp)
    return _srdf_from_spectrum(lam, dmin, delta)


def field_distortion_rate(field: FieldModel, points, rate_bits: float) -> float:
    fp = _as_field_points(points)
    lam = field_spectrum(field, fp)
    return field_min_distortion(field, fp) + waterfill_inverse(lam, rate_bits)


def gm_segment_explained(p: float, length: float) -> float:
    """Integrated variance explained on a segment bridged by its two endpoint samples.

    For the p^|s-u| kernel the integral over a segment of the given length,
    conditioned on samples at both ends, has the closed form below; both logs
    are natural.  The segment's floor contribution is length minus this value.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"kernel parameter must be in (0, 1), got {p}")
    if not 0.0 < length <= 1.0:
        raise DomainError(f"segment length must be in (0, 1], got {length}")
    lp = math.log(p)
    q = p ** (2.0 * length)
    return (q * (1.0 - 2.0 * length * lp) - 1.0) / (lp * (1.0 - q))


def gm_min_distortion_single(p: float, a: float) -> float:
    """Closed-form estimation floor for one sample of the p^|s-u| field at position a."""
    if not 0.0 < p < 1.0:
        raise DomainError(f"kernel parameter must be in (0, 1), got {p}")
    if not 0.0 <= a <= 1.0:
        raise DomainError(f"sample position must be in [0, 1], got {a}")
    return 1.0 - (p ** (2.0 * a) + p ** (2.0 * (1.0 - a)) - 2.0) / (2.0 * math.log(p))


def gm_min_distortion_pinned(p: float, points) -> float:
    """Closed-form floor for a point set whose first and last samples sit at 0 and 1.

    Interior segments each contribute (length - explained); with both ends
    pinned the floor is one minus the summed explained mass.
    """
    pts = _as_field_points(points).points
    if len(pts) < 2 or pts[0] != 0.0 or pts[-1] != 1.0:
        raise DomainError(f"point set must start at 0 and end at 1, got {pts}")
    return 1.0 - sum(gm_segment_explained(p, b - a) for a, b in zip(pts, pts[1:]))


def _golden_section(fn, lo: float, hi: float, tol: float = 1e-6):
    """Minimize a unimodal scalar function on [lo, hi]; returns (x, fn(x))."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
    x = 0.5 * (a + b)
    return x, fn(x)


@dataclass(frozen=True)
class PlacementResult:
    points: tuple[float, ...]
    value: float
    objective: str
    restarts: int


def _placement_objective(field: FieldModel, objective):
    if objective == "min_delta_min" or objective is None:
        def fn(pts):
            return field_min_distortion(field, pts)
        return fn, "min_delta_min"
    if isinstance(objective, tuple) and len(objective) == 2 and objective[0] == "min_rate_at":
        delta = float(objective[1])

        def fn(pts):
            try:
                return field_srdf(field, pts, delta).rate_bits
            except Exception:
                return math.inf
        return fn, f"min_rate_at:{delta:.9g}"
    raise DomainError(f"unknown placement objective {objective!r}")


def optimize_placement(
    field: FieldModel,
    k: int,
    objective="min_delta_min",
    restarts: int = 16,
    pin_endpoints: bool = False,
    seed: int = 0,
    threads: int = 1,
) -> PlacementResult:
    """Place k sampling points by multi-start coordinate descent.

    Each restart runs golden-section line searches coordinate by coordinate,
    keeping points sorted and separated by SEP_TOL.  Restart 0 starts from the
    equispaced layout; the rest start from sorted uniform draws on
    deterministic per-restart streams.  With ``pin_endpoints`` the first and
    last points are fixed at 0 and 1 and only the interior moves.
    """
    if k < 1:
        raise DomainError(f"need at least one point, got k={k}")
    if pin_endpoints and k < 2:
        raise DomainError("pinned placement needs k >= 2")
    obj_fn, obj_name = _placement_objective(field, objective)

    def run_restart(r: int):
        if r == 0:
            pts = np.linspace(0.0, 1.0, k) if pin_endpoints else (np.arange(k) + 0.5) / k
        else:
            rng = np.random.Generator(
                np.random.Philox(np.random.SeedSequence(entropy=seed, spawn_key=(r,)))
            )
            if pin_endpoints:
                inner = np.sort(rng.uniform(SEP_TOL, 1.0 - SEP_TOL, size=k - 2))
                pts = np.concatenate([[0.0], inner, [1.0]])
            else:
                pts = np.sort(rng.uniform(0.0, 1.0, size=k))
        pts = list(pts)
        free = range(1, k - 1) if pin_endpoints else range(k)
        value = obj_fn(tuple(pts))
        for _ in range(40):
            largest_move = 0.0
            for i in free:
                lo = pts[i - 1] + SEP_TOL if i > 0 else 0.0
                hi = pts[i + 1] - SEP_TOL if i < k - 1 else 1.0
                if hi <= lo:
                    continue

                def line(x, i=i):
                    cand = list(pts)
                    cand[i] = x
                    return obj_fn(tuple(cand))

                x, fx = _golden_section(line, lo, hi)
                if fx < value:
                    largest_move = max(largest_move, abs(x - pts[i]))
                    pts[i] = x
                    value = fx
            if largest_move < 1e-5:
                break
        return tuple(pts), value

    if threads > 1 and restarts > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run_restart, range(restarts)))
    else:
        outcomes = [run_restart(r) for r in range(restarts)]

    best_pts, best_val = outcomes[0]
    for pts, val in outcomes[1:]:
        if val < best_val:
            best_pts, best_val = pts, val
    best_pts = tuple(float(p) for p in best_pts)
    return PlacementResult(points=best_pts, value=float(best_val), objective=obj_name, restarts=restarts)
