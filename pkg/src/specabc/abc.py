"""Rejection ABC on spectral-density and invariant-density summaries.

The engine scores N independent trials: draw a parameter vector from the
prior, simulate one trajectory, summarize it, and measure the distance to a
set of M reference summaries (spectral IAE plus w times density IAE per
reference, aggregated by median or mean). The tolerance is then fixed as a
percentile of all N distances and the trials at or below it are kept.
Candidates whose simulation overflows or whose summaries are degenerate
score +inf, which rejects them without disturbing the trial count.

Reproducibility discipline: every random decision has its own substream of
the master seed, keyed by trial index. Trial i simulates on stream i and
draws its parameters on stream 2^50 + i; reference paths live at 2^48 + k
and the weight-calibration pilot at 2^49 onward. Results are therefore
bitwise independent of the worker count and of how trials are scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np

from .errors import (
    ConfigError,
    ModelConstructionError,
    NumericError,
    RunError,
    StatsError,
    SummaryError,
)
from .models import HamiltonianModel
from .sim import RngStream, SimGrid, simulate
from .summaries import SpectralConfig, SummaryPair, iae, summarize

__all__ = [
    "REFERENCE_STREAM_BASE",
    "PILOT_STREAM_BASE",
    "THETA_STREAM_BASE",
    "UniformPrior",
    "DistanceConfig",
    "ReferenceSet",
    "AbcRun",
    "PosteriorStats",
    "simulate_references",
    "references_from_summaries",
    "distance",
    "pilot_ratio",
    "pilot_ratios",
    "pilot_weight",
    "run_abc",
    "posterior_stats",
]

REFERENCE_STREAM_BASE = 1 << 48
PILOT_STREAM_BASE = 1 << 49
THETA_STREAM_BASE = 1 << 50

_PILOT_MAX_TRIES = 64


@dataclass(frozen=True)
class UniformPrior:
    """Independent uniform box prior over the free parameters."""

    names: tuple[str, ...]
    lows: np.ndarray
    highs: np.ndarray

    def __post_init__(self):
        lows = np.asarray(self.lows, dtype=float)
        highs = np.asarray(self.highs, dtype=float)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "lows", lows)
        object.__setattr__(self, "highs", highs)
        k = len(self.names)
        if k == 0:
            raise ConfigError("prior needs at least one parameter")
        if lows.shape != (k,) or highs.shape != (k,):
            raise ConfigError("prior bounds must match the parameter names")
        if not (np.all(np.isfinite(lows)) and np.all(np.isfinite(highs))):
            raise ConfigError("prior bounds must be finite")
        if not np.all(lows < highs):
            bad = [self.names[i] for i in range(k) if not lows[i] < highs[i]]
            raise ConfigError(f"empty prior box for parameter(s) {bad}")

    @classmethod
    def from_dict(cls, box: dict) -> "UniformPrior":
        # canonical sorted order: each trial draws one uniform per parameter,
        # so the box must sample identically however the config spells it
        names = tuple(sorted(box))
        lows = np.array([float(box[n][0]) for n in names])
        highs = np.array([float(box[n][1]) for n in names])
        return cls(names=names, lows=lows, highs=highs)

    @property
    def dim(self) -> int:
        return len(self.names)

    @property
    def means(self) -> np.ndarray:
        return 0.5 * (self.lows + self.highs)

    @property
    def sds(self) -> np.ndarray:
        return (self.highs - self.lows) / math.sqrt(12.0)

    def sample(self, gen: np.random.Generator) -> np.ndarray:
        u = gen.random(self.dim)
        return self.lows + u * (self.highs - self.lows)

    def contains(self, values) -> bool:
        v = np.asarray(values, dtype=float)
        return bool(np.all(v >= self.lows) and np.all(v <= self.highs))


@dataclass(frozen=True)
class DistanceConfig:
    """Weight on the density term and the across-references aggregator."""

    weight_w: float = 0.0
    aggregator: str = "median"

    def __post_init__(self):
        if not (np.isfinite(self.weight_w) and self.weight_w >= 0.0):
            raise ConfigError(f"weight must be finite and >= 0, got {self.weight_w!r}")
        if self.aggregator not in ("median", "mean"):
            raise ConfigError(f"aggregator must be median or mean, got {self.aggregator!r}")


@dataclass(frozen=True)
class ReferenceSet:
    """Precomputed summaries of the M observed datasets."""

    summaries: tuple[SummaryPair, ...]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "summaries", tuple(self.summaries))
        if len(self.summaries) < 1:
            raise ConfigError("reference set needs at least one summary")

    @property
    def m_count(self) -> int:
        return len(self.summaries)


def references_from_summaries(summaries, provenance=None) -> ReferenceSet:
    return ReferenceSet(summaries=tuple(summaries), provenance=dict(provenance or {}))


def simulate_references(
    model: HamiltonianModel,
    grid: SimGrid,
    scheme: str,
    m_count: int,
    master_seed: int,
    config: SpectralConfig | None = None,
) -> ReferenceSet:
    """Simulate M observed paths at the model's own parameters and summarize."""
    if m_count < 1:
        raise ConfigError(f"need at least one reference path, got {m_count}")
    summaries = []
    for k in range(m_count):
        tr = simulate(model, grid, scheme, RngStream(master_seed, REFERENCE_STREAM_BASE + k))
        summaries.append(summarize(tr, config=config))
    return ReferenceSet(
        summaries=tuple(summaries),
        provenance={
            "source": "simulated",
            "model": model.model_id,
            "params": dict(model.params),
            "scheme": scheme,
            "seed": master_seed,
            "m_count": m_count,
        },
    )


def distance(ref: ReferenceSet, cand: SummaryPair, cfg: DistanceConfig) -> float:
    """Weighted summary distance, aggregated over the reference summaries."""
    per_ref = np.array(
        [
            iae(s.spec, cand.spec) + cfg.weight_w * iae(s.dens, cand.dens)
            for s in ref.summaries
        ]
    )
    if cfg.aggregator == "median":
        return float(np.median(per_ref))
    return float(np.mean(per_ref))


def pilot_ratio(
    model: HamiltonianModel,
    grid: SimGrid,
    scheme: str,
    stream_a: RngStream,
    stream_b: RngStream,
    config: SpectralConfig | None = None,
):
    """Spectral-IAE over density-IAE for two paths of one model.

    Returns None when the ratio is degenerate: either summary fails, the
    density IAE is zero (e.g. both paths identical), or the ratio is not
    finite. Callers treat None as "redraw".
    """
    try:
        s1 = summarize(simulate(model, grid, scheme, stream_a), config=config)
        s2 = summarize(simulate(model, grid, scheme, stream_b), config=config)
    except SummaryError:
        return None
    num = iae(s1.spec, s2.spec)
    den = iae(s1.dens, s2.dens)
    if den <= 0.0:
        return None
    ratio = num / den
    if not np.isfinite(ratio):
        return None
    return float(ratio)


def _pilot_attempt(model, grid, scheme, prior, master_seed, attempt, config):
    base = PILOT_STREAM_BASE + 3 * attempt
    gen = RngStream(master_seed, base).generator()
    theta = prior.sample(gen)
    try:
        candidate = model.with_params(dict(zip(prior.names, theta)))
    except ModelConstructionError:
        return None
    return pilot_ratio(
        candidate,
        grid,
        scheme,
        RngStream(master_seed, base + 1),
        RngStream(master_seed, base + 2),
        config=config,
    )


def pilot_ratios(
    model: HamiltonianModel,
    grid: SimGrid,
    scheme: str,
    prior: UniformPrior,
    l_rounds: int,
    master_seed: int,
    config: SpectralConfig | None = None,
) -> np.ndarray:
    """The L calibration ratios w' = spectral IAE / density IAE.

    Each round draws a fresh parameter vector and simulates two independent
    paths; degenerate rounds are redrawn and do not count toward L.
    """
    if l_rounds < 1:
        raise ConfigError(f"pilot needs at least one round, got {l_rounds}")
    ratios = np.empty(l_rounds)
    for i in range(l_rounds):
        for j in range(_PILOT_MAX_TRIES):
            r = _pilot_attempt(
                model, grid, scheme, prior, master_seed, i * _PILOT_MAX_TRIES + j, config
            )
            if r is not None:
                ratios[i] = r
                break
        else:
            raise RunError(
                f"pilot round {i}: no valid ratio in {_PILOT_MAX_TRIES} attempts"
            )
    return ratios


def pilot_weight(
    model: HamiltonianModel,
    grid: SimGrid,
    scheme: str,
    prior: UniformPrior,
    l_rounds: int,
    master_seed: int,
    config: SpectralConfig | None = None,
) -> float:
    """Median of the L pilot ratios; the run's density weight w."""
    return float(np.median(pilot_ratios(model, grid, scheme, prior, l_rounds, master_seed, config)))


@dataclass(frozen=True)
class AbcRun:
    """All N scored trials plus the realized threshold and kept set."""

    param_names: tuple[str, ...]
    params: np.ndarray
    distances: np.ndarray
    kept_indices: np.ndarray
    epsilon: float
    percentile: float
    n_total: int
    seed: int
    settings: dict = field(default_factory=dict)

    @property
    def kept_params(self) -> np.ndarray:
        return self.params[self.kept_indices]

    @property
    def kept_distances(self) -> np.ndarray:
        return self.distances[self.kept_indices]

    @property
    def kept_count(self) -> int:
        return int(self.kept_indices.size)


@dataclass(frozen=True)
class _RunContext:
    model: HamiltonianModel
    grid: SimGrid
    scheme: str
    prior: UniformPrior
    ref: ReferenceSet
    cfg: DistanceConfig
    seed: int
    spectral: SpectralConfig | None


def _score_trial(ctx: _RunContext, i: int) -> tuple[np.ndarray, float]:
    # i is the 1-based trial index
    gen = RngStream(ctx.seed, THETA_STREAM_BASE + i).generator()
    theta = ctx.prior.sample(gen)
    try:
        candidate = ctx.model.with_params(dict(zip(ctx.prior.names, theta)))
        tr = simulate(candidate, ctx.grid, ctx.scheme, RngStream(ctx.seed, i))
        summary = summarize(tr, config=ctx.spectral)
        d = distance(ctx.ref, summary, ctx.cfg)
    except (SummaryError, ModelConstructionError, NumericError):
        d = math.inf
    if math.isnan(d):
        d = math.inf
    return theta, d


_WORKER_CTX: _RunContext | None = None


def _init_worker(ctx: _RunContext) -> None:
    global _WORKER_CTX
    _WORKER_CTX = ctx


def _score_chunk(bounds: tuple[int, int]):
    lo, hi = bounds
    ctx = _WORKER_CTX
    params = np.empty((hi - lo, ctx.prior.dim))
    dist = np.empty(hi - lo)
    for i in range(lo, hi):
        params[i - lo], dist[i - lo] = _score_trial(ctx, i)
    return lo, params, dist


def run_abc(
    model: HamiltonianModel,
    grid: SimGrid,
    scheme: str,
    prior: UniformPrior,
    ref: ReferenceSet,
    cfg: DistanceConfig,
    n_total: int,
    percentile: float,
    master_seed: int,
    workers: int = 1,
    spectral_config: SpectralConfig | None = None,
) -> AbcRun:
    """Score N prior draws and keep the percentile with smallest distance.

    The threshold epsilon is the nearest-rank percentile of all N distances
    (failed candidates included at +inf); ties at the threshold break by
    trial index, so the kept count is exact. Raises a run error when no
    trial at all produced a valid summary.
    """
    if n_total < 1:
        raise ConfigError(f"need at least one trial, got {n_total}")
    if not (0.0 < percentile <= 100.0):
        raise ConfigError(f"percentile must lie in (0, 100], got {percentile}")
    if workers < 1:
        raise ConfigError(f"worker count must be >= 1, got {workers}")

    ctx = _RunContext(model, grid, scheme, prior, ref, cfg, master_seed, spectral_config)
    params = np.empty((n_total, prior.dim))
    dist = np.empty(n_total)
    if workers == 1:
        for i in range(1, n_total + 1):
            params[i - 1], dist[i - 1] = _score_trial(ctx, i)
    else:
        chunk = max(1, math.ceil(n_total / (workers * 16)))
        bounds = [
            (lo, min(lo + chunk, n_total + 1)) for lo in range(1, n_total + 1, chunk)
        ]
        with ProcessPoolExecutor(
            max_workers=workers,
            mp_context=get_context("fork"),
            initializer=_init_worker,
            initargs=(ctx,),
        ) as pool:
            for lo, p_block, d_block in pool.map(_score_chunk, bounds):
                params[lo - 1 : lo - 1 + len(d_block)] = p_block
                dist[lo - 1 : lo - 1 + len(d_block)] = d_block

    dist[np.isnan(dist)] = math.inf  # nan_to_num would also flatten +inf to a finite max
    if not np.isfinite(dist).any():
        raise RunError("no candidate produced valid summaries")

    k_keep = max(1, int(round(n_total * percentile / 100.0)))
    order = np.lexsort((np.arange(n_total), dist))
    epsilon = float(dist[order[k_keep - 1]])
    head = order[:k_keep]
    kept = head[np.isfinite(dist[head])]

    settings = {
        "model": model.model_id,
        "fixed_params": dict(model.params),
        "scheme": scheme,
        "dt": grid.dt,
        "t_end": grid.t_end,
        "n_steps": grid.n_steps,
        "prior": {n: [float(lo), float(hi)] for n, lo, hi in zip(prior.names, prior.lows, prior.highs)},
        "n_total": n_total,
        "percentile": percentile,
        "weight_w": cfg.weight_w,
        "aggregator": cfg.aggregator,
        "m_count": ref.m_count,
        "seed": master_seed,
    }
    return AbcRun(
        param_names=prior.names,
        params=params,
        distances=dist,
        kept_indices=kept,
        epsilon=epsilon,
        percentile=percentile,
        n_total=n_total,
        seed=master_seed,
        settings=settings,
    )


@dataclass(frozen=True)
class PosteriorStats:
    """Sample statistics of the kept draws."""

    param_names: tuple[str, ...]
    means: np.ndarray
    sds: np.ndarray
    quantiles: np.ndarray  # columns: 2.5%, 50%, 97.5%
    correlation: np.ndarray
    n_kept: int
    degenerate: bool

    def corr(self, name_a: str, name_b: str) -> float:
        ia = self.param_names.index(name_a)
        ib = self.param_names.index(name_b)
        return float(self.correlation[ia, ib])


def posterior_stats(run: AbcRun) -> PosteriorStats:
    """Per-parameter mean, sd and quantiles plus the correlation matrix.

    Parameters with zero sample variance get zero correlation entries and
    set the degeneracy flag.
    """
    kept = run.kept_params
    if kept.shape[0] < 2:
        raise StatsError(f"need at least 2 kept samples, got {kept.shape[0]}")
    means = kept.mean(axis=0)
    sds = kept.std(axis=0, ddof=1)
    quantiles = np.quantile(kept, [0.025, 0.5, 0.975], axis=0).T
    k = kept.shape[1]
    correlation = np.zeros((k, k))
    degenerate = bool(np.any(sds == 0.0))
    live = sds > 0.0
    if np.any(live):
        centered = kept[:, live] - means[live]
        cov = centered.T @ centered / (kept.shape[0] - 1)
        denom = np.outer(sds[live], sds[live])
        correlation[np.ix_(live, live)] = cov / denom
    return PosteriorStats(
        param_names=run.param_names,
        means=means,
        sds=sds,
        quantiles=quantiles,
        correlation=correlation,
        n_kept=kept.shape[0],
        degenerate=degenerate,
    )
