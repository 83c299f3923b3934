"""Monte Carlo check of the two-step coding scheme.

Blocks of the sampled components are quantized by a trained codebook under
the weighted metric, then the unsampled components are filled in by the
linear estimate from the reproduced samples.  The per-slot mean squared
error over all components then splits, up to sampling noise, into the
weighted sampled error plus the estimation floor; the reports carry both
sides of that identity with confidence half-widths.

Randomness is counter-based: every consumer draws from its own Philox stream
keyed by (seed, stream id), so reports are bit-reproducible and independent
of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import CodebookTooLarge, DimensionMismatch, TrainingDiverged, ValidationError
from .model import BlockPartition, CovarianceModel, as_sampling_set, partition
from .srdf import min_distortion, srdf_eigenvalues, waterfill_inverse, weight_matrix
from .universal import ParamFamily, bayes_atom_data, project_family

CODEBOOK_CAP = 2 ** 18
_MIN_TRAIN_PER_CODEWORD = 20

_STREAM_TRAIN = 1
_STREAM_EVAL = 2
_STREAM_INIT = 3
_STREAM_TRIAL = 4


def _rng(seed: int, *stream: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(seq))


@dataclass(frozen=True)
class SimConfig:
    n: int = 1
    rate_bits: float = 2.0
    train_blocks: int | None = None   # None: 20 per codeword, at least 2000
    eval_blocks: int = 10_000
    seed: int = 0
    lbg_iters: int = 60
    grid_delta: float = 0.05
    est_length: int = 2048            # universal runs: slots observed per trial
    trace: bool = False

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValidationError(f"block length must be >= 1, got {self.n}")
        if self.rate_bits < 0.0:
            raise ValidationError(f"rate must be nonnegative, got {self.rate_bits}")
        if self.eval_blocks < 2:
            raise ValidationError(f"need at least 2 evaluation blocks, got {self.eval_blocks}")
        if self.lbg_iters < 1:
            raise ValidationError(f"lbg_iters must be >= 1, got {self.lbg_iters}")
        if self.grid_delta <= 0.0:
            raise ValidationError(f"grid_delta must be positive, got {self.grid_delta}")
        if self.est_length < 1:
            raise ValidationError(f"est_length must be >= 1, got {self.est_length}")

    def codeword_count(self) -> int:
        bits = max(0, math.ceil(self.n * self.rate_bits - 1e-9))
        return 2 ** bits

    def resolved_train_blocks(self) -> int:
        j = self.codeword_count()
        if self.train_blocks is None:
            return max(_MIN_TRAIN_PER_CODEWORD * j, 2000)
        if self.train_blocks < _MIN_TRAIN_PER_CODEWORD * j:
            raise ValidationError(
                f"train_blocks={self.train_blocks} is below {_MIN_TRAIN_PER_CODEWORD} per codeword"
                f" (codebook size {j})"
            )
        return self.train_blocks


@dataclass(frozen=True)
class MeanCI:
    mean: float
    half_width_95: float


def _mean_ci(values: np.ndarray) -> MeanCI:
    values = np.asarray(values, dtype=float)
    hw = 1.96 * float(np.std(values, ddof=1)) / math.sqrt(len(values))
    return MeanCI(mean=float(np.mean(values)), half_width_95=hw)


@dataclass(frozen=True)
class SimReport:
    kind: str
    n: int
    rate_bits_target: float
    rate_bits_actual: float
    codeword_count: int
    seed: int
    train_blocks: int
    eval_blocks: int
    delta_min: float
    analytic_distortion_at_rate: float
    total_mse: MeanCI
    weighted_mse: MeanCI
    lift_mse: MeanCI
    lbg_iterations: tuple[int, ...]
    train_distortion: tuple[float, ...]
    estimator_hit_rate: float | None = None
    universal_overhead_bits: float | None = None
    grid_size: int | None = None
    bad_event_mass: float | None = None
    bad_event_mse: float | None = None
    bad_event_mse_cap: float | None = None
    block_trace: tuple | None = None

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("block_trace")
        return {k: v for k, v in out.items() if v is not None}


def sample_gmms(model: CovarianceModel, n: int, blocks: int, seed: int, stream: tuple = (_STREAM_EVAL,)) -> np.ndarray:
    """Draw iid blocks of the source: shape (blocks, m, n), each column N(0, sigma)."""
    return _sample_cov(np.linalg.cholesky(model.sigma), n, blocks, seed, stream)


def _sample_cov(chol: np.ndarray, n: int, blocks: int, seed: int, stream: tuple) -> np.ndarray:
    rng = _rng(seed, *stream)
    z = rng.standard_normal((blocks, chol.shape[0], n))
    return np.einsum("ij,bjt->bit", chol, z)


def mmse_lift(bp: BlockPartition, y_a: np.ndarray) -> np.ndarray:
    """Linear estimate of the unsampled components from a sampled reproduction.

    Accepts one slot (k,) or a block (k, n); returns matching shape over the
    complement.
    """
    y = np.asarray(y_a, dtype=float)
    if y.shape[0] != bp.k:
        raise DimensionMismatch(f"expected leading dimension {bp.k}, got {y.shape}")
    w = np.linalg.solve(bp.sigma_a, bp.sigma_a_ac).T
    return w @ y


def ml_cov_estimate(x_a: np.ndarray) -> np.ndarray:
    """Maximum likelihood covariance of a zero-mean sampled block (k, n)."""
    x = np.asarray(x_a, dtype=float)
    if x.ndim != 2:
        raise DimensionMismatch(f"expected a (k, n) block, got shape {x.shape}")
    return x @ x.T / x.shape[1]


def _assign(x: np.ndarray, cb: np.ndarray):
    """Nearest codeword per row of x; returns (indices, squared distances)."""
    cb_sq = np.einsum("jd,jd->j", cb, cb)
    out_i = np.empty(len(x), dtype=np.int64)
    out_d = np.empty(len(x))
    step = max(1, (1 << 22) // max(1, len(cb)))
    for s in range(0, len(x), step):
        xx = x[s:s + step]
        part = cb_sq[None, :] - 2.0 * (xx @ cb.T)
        idx = np.argmin(part, axis=1)
        out_i[s:s + step] = idx
        out_d[s:s + step] = part[np.arange(len(xx)), idx] + np.einsum("nd,nd->n", xx, xx)
    np.maximum(out_d, 0.0, out=out_d)
    return out_i, out_d


def _train_codebook(train_t: np.ndarray, j: int, iters: int, rng: np.random.Generator):
    """Generalized Lloyd iterations in the whitened space.

    Assignment minimizes the whitened squared distance (the weighted metric),
    the centroid update is the cell mean, and empty cells are reseeded at the
    training points farthest from their codewords.  Training stops early once
    the relative improvement drops below 1e-6.
    """
    n_samples, dim = train_t.shape
    idx = rng.choice(n_samples, size=j, replace=False)
    cb = train_t[np.sort(idx)].copy()
    prev = math.inf
    stole = False
    iters_run = 0
    dist = math.inf
    for it in range(iters):
        assign, d2 = _assign(train_t, cb)
        dist = float(np.mean(d2))
        iters_run = it + 1
        if dist > prev * (1.0 + 1e-9) and not stole:
            raise TrainingDiverged(
                f"training distortion rose from {prev:.6e} to {dist:.6e} at iteration {iters_run}"
            )
        if prev - dist <= 1e-6 * max(dist, 1e-300):
            break
        prev = dist
        counts = np.bincount(assign, minlength=j)
        sums = np.empty((j, dim))
        for d in range(dim):
            sums[:, d] = np.bincount(assign, weights=train_t[:, d], minlength=j)
        nonempty = counts > 0
        cb[nonempty] = sums[nonempty] / counts[nonempty, None]
        empty = np.flatnonzero(~nonempty)
        stole = bool(len(empty))
        if stole:
            far = np.argsort(-d2, kind="stable")
            cb[empty] = train_t[far[: len(empty)]]
    return cb, iters_run, dist


@dataclass(frozen=True)
class TrainedCode:
    """A block code on the sampled components under the weighted metric."""

    transform: np.ndarray          # T with d_A(z) = ||T z||^2
    codebook_whitened: np.ndarray  # (J, n*k), slot-major layout
    codebook_blocks: np.ndarray    # (J, k, n), reproduction blocks
    n: int
    k: int
    lbg_iterations: int
    train_distortion: float

    @property
    def codeword_count(self) -> int:
        return len(self.codebook_whitened)

    def whiten(self, blocks: np.ndarray) -> np.ndarray:
        """(B, k, n) -> (B, n*k) rows in the metric-whitened space."""
        w = np.einsum("ij,bjt->bit", self.transform, blocks)
        return w.transpose(0, 2, 1).reshape(len(blocks), self.n * self.k)

    def encode(self, blocks: np.ndarray):
        """Nearest codeword for each (k, n) block; returns (indices, weighted distances)."""
        idx, d2 = _assign(self.whiten(blocks), self.codebook_whitened)
        return idx, d2

    def decode(self, idx) -> np.ndarray:
        return self.codebook_blocks[np.asarray(idx, dtype=int)]


def build_code(
    sigma_a: np.ndarray,
    g: np.ndarray,
    n: int,
    j: int,
    train_blocks: int,
    lbg_iters: int,
    seed: int,
    stream: tuple = (),
) -> TrainedCode:
    """Train a codebook for blocks of N(0, sigma_a) under the metric g."""
    if j > CODEBOOK_CAP:
        raise CodebookTooLarge(f"codebook size {j} exceeds the cap {CODEBOOK_CAP}")
    if train_blocks < j:
        raise ValidationError(f"cannot train {j} codewords from {train_blocks} blocks")
    k = sigma_a.shape[0]
    t = np.linalg.cholesky(g).T
    train = _sample_cov(np.linalg.cholesky(sigma_a), n, train_blocks, seed, (_STREAM_TRAIN, *stream))
    train_t = np.einsum("ij,bjt->bit", t, train).transpose(0, 2, 1).reshape(train_blocks, n * k)
    cb_t, iters_run, dist = _train_codebook(train_t, j, lbg_iters, _rng(seed, _STREAM_INIT, *stream))
    flat = cb_t.reshape(j * n, k).T
    blocks = solve_triangular(t, flat, lower=False).reshape(k, j, n).transpose(1, 0, 2)
    return TrainedCode(
        transform=t,
        codebook_whitened=cb_t,
        codebook_blocks=np.ascontiguousarray(blocks),
        n=n,
        k=k,
        lbg_iterations=iters_run,
        train_distortion=dist,
    )


def two_step_code(model: CovarianceModel, sampled, cfg: SimConfig) -> SimReport:
    """Train, encode, lift, and report the distortion split for one fixed source."""
    ss = as_sampling_set(sampled)
    bp = partition(model, ss)
    g = weight_matrix(bp)
    dmin = min_distortion(bp)
    lam = srdf_eigenvalues(bp)
    j = cfg.codeword_count()
    train_blocks = cfg.resolved_train_blocks()
    rate_actual = math.log2(j) / cfg.n
    code = build_code(bp.sigma_a, g, cfg.n, j, train_blocks, cfg.lbg_iters, cfg.seed)

    x = sample_gmms(model, cfg.n, cfg.eval_blocks, cfg.seed, (_STREAM_EVAL,))
    a = ss.zero_based()
    ac = ss.complement(model.m)
    x_a = x[:, a, :]
    x_ac = x[:, ac, :]
    idx, d2 = code.encode(x_a)
    y_a = code.decode(idx)
    w = np.linalg.solve(bp.sigma_a, bp.sigma_a_ac).T
    y_ac = np.einsum("ij,bjt->bit", w, y_a)
    weighted_b = d2 / cfg.n
    samp_b = np.sum((x_a - y_a) ** 2, axis=(1, 2)) / cfg.n
    lift_b = np.sum((x_ac - y_ac) ** 2, axis=(1, 2)) / cfg.n
    total_b = samp_b + lift_b

    trace = None
    if cfg.trace:
        trace = tuple(
            (float(t), float(wgt), float(lft)) for t, wgt, lft in zip(total_b, weighted_b, lift_b)
        )
    return SimReport(
        kind="fixed",
        n=cfg.n,
        rate_bits_target=cfg.rate_bits,
        rate_bits_actual=rate_actual,
        codeword_count=j,
        seed=cfg.seed,
        train_blocks=train_blocks,
        eval_blocks=cfg.eval_blocks,
        delta_min=dmin,
        analytic_distortion_at_rate=dmin + waterfill_inverse(lam, rate_actual),
        total_mse=_mean_ci(total_b),
        weighted_mse=_mean_ci(weighted_b),
        lift_mse=_mean_ci(lift_b),
        lbg_iterations=(code.lbg_iterations,),
        train_distortion=(code.train_distortion,),
        block_trace=trace,
    )


def universal_encode(codes, reps: np.ndarray, x_a: np.ndarray):
    """Estimate the sampled block, pick the nearest grid atom, encode with its code.

    ``reps`` stacks the atom representatives (n_atoms, k, k).  Returns
    (atom index, codeword index); the estimate is clamped to the grid by the
    argmin, so far-off blocks still select a valid atom.  Ties keep the
    lowest atom index.
    """
    x = np.asarray(x_a, dtype=float)
    theta_hat = ml_cov_estimate(x)
    dists = np.linalg.norm(reps - theta_hat[None, :, :], axis=(1, 2))
    sel = int(np.argmin(dists))
    code = codes[sel]
    if x.shape != (code.k, code.n):
        raise DimensionMismatch(f"block shape {x.shape} does not match the code ({code.k}, {code.n})")
    idx, _ = code.encode(x[None, :, :])
    return sel, int(idx[0])


def universal_two_step(family: ParamFamily, sampled, cfg: SimConfig) -> SimReport:
    """Universal two-step coding over a family: estimate the atom, then code within it.

    Each trial draws a member from the prior, observes est_length slots of
    the sampled block, picks the atom whose representative is nearest to the
    ML covariance estimate, and codes the slots as consecutive n-blocks with
    that atom's codebook and lift.  The reported rate includes the
    log2(#atoms)/est_length overhead of announcing the atom.
    """
    ss = as_sampling_set(sampled)
    a = ss.zero_based()
    ac = ss.complement(family.m)
    if cfg.est_length % cfg.n != 0:
        raise ValidationError(
            f"est_length={cfg.est_length} must be a multiple of the block length n={cfg.n}"
        )
    part = project_family(family, ss)
    data = [bayes_atom_data(family, ss, atom) for atom in part.atoms]
    j = cfg.codeword_count()
    train_blocks = cfg.resolved_train_blocks()
    codes = [
        build_code(d.sigma_a, d.g_tau1, cfg.n, j, train_blocks, cfg.lbg_iters, cfg.seed, (i,))
        for i, d in enumerate(data)
    ]
    lifts = [np.linalg.solve(d.sigma_a, d.sigma_a_ac_bar).T for d in data]
    reps = np.stack([d.sigma_a for d in data])

    nodes_n = len(family.nodes)
    chols = np.stack([np.linalg.cholesky(s) for s in family.node_sigmas])
    node_weights = family.node_weights
    node_block = family.node_sigmas[np.ix_(np.arange(nodes_n), a, a)]
    blocks_per_trial = cfg.est_length // cfg.n

    trials = cfg.eval_blocks
    total_t = np.empty(trials)
    weighted_t = np.empty(trials)
    lift_t = np.empty(trials)
    hits = np.empty(trials, dtype=bool)
    for t in range(trials):
        rng = _rng(cfg.seed, _STREAM_TRIAL, t)
        node = int(rng.choice(nodes_n, p=node_weights))
        x = chols[node] @ rng.standard_normal((family.m, cfg.est_length))
        x_a = x[a]
        x_ac = x[ac]
        theta_hat = x_a @ x_a.T / cfg.est_length
        sel = int(np.argmin(np.linalg.norm(reps - theta_hat[None, :, :], axis=(1, 2))))
        hits[t] = float(np.linalg.norm(theta_hat - node_block[node])) <= 2.0 * cfg.grid_delta
        xb = x_a.reshape(ss.k, blocks_per_trial, cfg.n).transpose(1, 0, 2)
        idx, d2 = codes[sel].encode(xb)
        y_a = codes[sel].decode(idx).transpose(1, 0, 2).reshape(ss.k, cfg.est_length)
        y_ac = lifts[sel] @ y_a
        weighted_t[t] = float(np.sum(d2)) / cfg.est_length
        samp = float(np.sum((x_a - y_a) ** 2))
        lift_t[t] = float(np.sum((x_ac - y_ac) ** 2)) / cfg.est_length
        total_t[t] = samp / cfg.est_length + lift_t[t]

    hit_rate = float(np.mean(hits))
    bad_mass = 1.0 - hit_rate
    bad_mse = float(np.sum(total_t[~hits])) / trials
    bad_cap = math.sqrt(bad_mass * float(np.mean(total_t ** 2)))
    overhead = math.log2(len(data)) / cfg.est_length if len(data) > 1 else 0.0
    code_rate = math.log2(j) / cfg.n
    analytic = sum(d.weight * (d.delta_min + waterfill_inverse(d.lambdas, code_rate)) for d in data)

    trace = None
    if cfg.trace:
        trace = tuple(
            (float(t_), float(w_), float(l_)) for t_, w_, l_ in zip(total_t, weighted_t, lift_t)
        )
    return SimReport(
        kind="universal",
        n=cfg.n,
        rate_bits_target=cfg.rate_bits,
        rate_bits_actual=code_rate + overhead,
        codeword_count=j,
        seed=cfg.seed,
        train_blocks=train_blocks,
        eval_blocks=trials,
        delta_min=sum(d.weight * d.delta_min for d in data),
        analytic_distortion_at_rate=analytic,
        total_mse=_mean_ci(total_t),
        weighted_mse=_mean_ci(weighted_t),
        lift_mse=_mean_ci(lift_t),
        lbg_iterations=tuple(c.lbg_iterations for c in codes),
        train_distortion=tuple(c.train_distortion for c in codes),
        estimator_hit_rate=hit_rate,
        universal_overhead_bits=overhead,
        grid_size=len(data),
        bad_event_mass=bad_mass,
        bad_event_mse=bad_mse,
        bad_event_mse_cap=bad_cap,
        block_trace=trace,
    )
