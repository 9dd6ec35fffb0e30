"""Run configuration: YAML documents, environment overrides, validation.

One config document describes a complete experiment: the model and its true
parameter values, the integration scheme and time grid, the prior box over
the free parameters, the ABC settings, where the reference data comes from
(simulated or ingested files), spectral-estimator overrides, and run
plumbing (seed, workers, output directory). The same canonical dict shape
is written into every run manifest, so a manifest's `settings` block is
itself a valid config and reproduces the run.

Any key can be overridden from the environment with the SPECABC_ prefix and
double underscores between section levels, e.g. SPECABC_ABC__N_TOTAL=500 or
SPECABC_GRID__DT=0.002.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import yaml

from .errors import ConfigError, DomainError, ModelConstructionError
from .models import MODEL_IDS, HamiltonianModel, canonical_param_name, make_model
from .sim import SCHEMES, SimGrid, make_grid
from .summaries import SpectralConfig

__all__ = ["ENV_PREFIX", "RunConfig", "load_raw_config", "apply_env_overrides", "parse_config", "load_run_config"]

ENV_PREFIX = "SPECABC_"

_TOP_KEYS = {"model", "scheme", "grid", "prior", "abc", "reference", "spectral", "seed", "workers", "out"}


@dataclass(frozen=True)
class WeightSpec:
    mode: str = "zero"  # zero | fixed | pilot
    value: float = 0.0
    rounds: int = 10000


@dataclass(frozen=True)
class RescaleSpec:
    offset: float = 0.0
    scale: float = 1.0


@dataclass(frozen=True)
class ReferenceSpec:
    source: str = "simulate"  # simulate | files
    m_count: int = 1
    scheme: str | None = None  # None: the run scheme
    params: dict = field(default_factory=dict)  # overrides of the model params
    dt: float | None = None  # None: the run grid
    t_end: float | None = None
    files: tuple[str, ...] = ()
    sample_rate: float | None = None
    rescale: RescaleSpec = field(default_factory=RescaleSpec)
    cut: int | None = None


@dataclass(frozen=True)
class RunConfig:
    model_id: str
    model_params: dict
    free_names: tuple[str, ...]
    scheme: str
    dt: float
    t_end: float
    prior_box: dict
    n_total: int
    percentile: float
    aggregator: str
    weight: WeightSpec
    reference: ReferenceSpec
    spectral_span: float | None
    taper_fraction: float
    demean: bool
    seed: int
    workers: int
    out: str

    def build_model(self) -> HamiltonianModel:
        return make_model(self.model_id, self.model_params, free=self.free_names)

    def build_grid(self) -> SimGrid:
        return make_grid(self.dt, self.t_end)

    def reference_grid(self) -> SimGrid:
        dt = self.reference.dt if self.reference.dt is not None else self.dt
        t_end = self.reference.t_end if self.reference.t_end is not None else self.t_end
        return make_grid(dt, t_end)

    def reference_scheme(self) -> str:
        return self.reference.scheme or self.scheme

    def reference_model(self) -> HamiltonianModel:
        if not self.reference.params:
            return self.build_model()
        return self.build_model().with_params(self.reference.params)

    def spectral_config(self) -> SpectralConfig:
        return SpectralConfig(
            span=self.spectral_span,
            taper_fraction=self.taper_fraction,
            demean=self.demean,
        )

    def to_dict(self) -> dict:
        """Canonical config document; written verbatim into manifests."""
        ref = self.reference
        return {
            "model": {
                "id": self.model_id,
                "params": dict(self.model_params),
                "free": list(self.free_names),
            },
            "scheme": self.scheme,
            "grid": {"dt": self.dt, "t_end": self.t_end},
            "prior": {n: [lo, hi] for n, (lo, hi) in self.prior_box.items()},
            "abc": {
                "n_total": self.n_total,
                "percentile": self.percentile,
                "aggregator": self.aggregator,
                "weight": {
                    "mode": self.weight.mode,
                    "value": self.weight.value,
                    "rounds": self.weight.rounds,
                },
            },
            "reference": {
                "source": ref.source,
                "m_count": ref.m_count,
                "scheme": ref.scheme,
                "params": dict(ref.params),
                "grid": {"dt": ref.dt, "t_end": ref.t_end},
                "files": list(ref.files),
                "sample_rate": ref.sample_rate,
                "rescale": {"offset": ref.rescale.offset, "scale": ref.rescale.scale},
                "cut": ref.cut,
            },
            "spectral": {
                "span": self.spectral_span,
                "taper_fraction": self.taper_fraction,
                "demean": self.demean,
            },
            "seed": self.seed,
            "workers": self.workers,
            "out": self.out,
        }


def load_raw_config(path) -> dict:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"config {path} must be a mapping, got {type(raw).__name__}")
    # a run manifest doubles as a config through its settings block
    if "settings" in raw and "model" in raw.get("settings", {}):
        raw = raw["settings"]
    return raw


def _set_nested(tree: dict, path: list[str], value) -> None:
    node = tree
    for part in path[:-1]:
        key = _match_key(node, part)
        if not isinstance(node.get(key), dict):
            node[key] = {}
        node = node[key]
    node[_match_key(node, path[-1])] = value


def _match_key(node: dict, part: str) -> str:
    # keep the case of an existing key so params like gain_A stay addressable
    for k in node:
        if isinstance(k, str) and k.lower() == part.lower():
            return k
    return part


def apply_env_overrides(raw: dict, environ=None) -> dict:
    env = os.environ if environ is None else environ
    for key, text in sorted(env.items()):
        if not key.startswith(ENV_PREFIX):
            continue
        path = key[len(ENV_PREFIX) :].lower().split("__")
        if not all(path):
            raise ConfigError(f"malformed override variable {key}")
        try:
            value = yaml.safe_load(text)
        except yaml.YAMLError:
            value = text
        _set_nested(raw, path, value)
    return raw


def _section(raw: dict, name: str) -> dict:
    sec = raw.get(name) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"config section {name!r} must be a mapping")
    return sec


def _get_float(sec: dict, key: str, default=None, where: str = ""):
    if key not in sec or sec[key] is None:
        if default is not None:
            return default
        raise ConfigError(f"missing config key {where}{key}")
    try:
        return float(sec[key])
    except (TypeError, ValueError):
        raise ConfigError(f"config key {where}{key} must be a number, got {sec[key]!r}") from None


def _get_int(sec: dict, key: str, default=None, where: str = ""):
    if key not in sec or sec[key] is None:
        if default is not None:
            return default
        raise ConfigError(f"missing config key {where}{key}")
    v = sec[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ConfigError(f"config key {where}{key} must be an integer, got {v!r}")
    return int(v)


def parse_config(raw: dict) -> RunConfig:
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")

    model_sec = _section(raw, "model")
    model_id = model_sec.get("id")
    if model_id not in MODEL_IDS:
        raise ConfigError(f"model.id must be one of {', '.join(MODEL_IDS)}, got {model_id!r}")
    model_params = dict(model_sec.get("params") or {})

    scheme = raw.get("scheme")
    if scheme not in SCHEMES:
        raise ConfigError(f"scheme must be one of {', '.join(SCHEMES)}, got {scheme!r}")

    grid_sec = _section(raw, "grid")
    dt = _get_float(grid_sec, "dt", where="grid.")
    t_end = _get_float(grid_sec, "t_end", where="grid.")

    prior_sec = _section(raw, "prior")
    prior_box = {}
    for name, bounds in prior_sec.items():
        canon = canonical_param_name(model_id, str(name))
        try:
            lo, hi = float(bounds[0]), float(bounds[1])
        except (TypeError, ValueError, IndexError):
            raise ConfigError(f"prior.{name} must be a [low, high] pair, got {bounds!r}") from None
        prior_box[canon] = (lo, hi)
    if not prior_box:
        raise ConfigError("prior must name at least one free parameter")

    free = model_sec.get("free")
    if free is not None:
        free_names = tuple(canonical_param_name(model_id, str(n)) for n in free)
        if set(free_names) != set(prior_box):
            raise ConfigError(
                f"model.free {sorted(free_names)} must match the prior box {sorted(prior_box)}"
            )
    else:
        free_names = tuple(prior_box)

    abc_sec = _section(raw, "abc")
    n_total = _get_int(abc_sec, "n_total", where="abc.")
    if n_total < 1:
        raise ConfigError(f"abc.n_total must be >= 1, got {n_total}")
    percentile = _get_float(abc_sec, "percentile", where="abc.")
    if not 0.0 < percentile <= 100.0:
        raise ConfigError(f"abc.percentile must lie in (0, 100], got {percentile}")
    aggregator = abc_sec.get("aggregator", "median")
    if aggregator not in ("median", "mean"):
        raise ConfigError(f"abc.aggregator must be median or mean, got {aggregator!r}")
    weight_sec = abc_sec.get("weight") or {}
    if not isinstance(weight_sec, dict):
        raise ConfigError("abc.weight must be a mapping")
    mode = weight_sec.get("mode", "zero")
    if mode not in ("zero", "fixed", "pilot"):
        raise ConfigError(f"abc.weight.mode must be zero, fixed or pilot, got {mode!r}")
    weight = WeightSpec(
        mode=mode,
        value=_get_float(weight_sec, "value", default=0.0, where="abc.weight."),
        rounds=_get_int(weight_sec, "rounds", default=10000, where="abc.weight."),
    )
    if weight.value < 0.0:
        raise ConfigError(f"abc.weight.value must be >= 0, got {weight.value}")
    if weight.rounds < 1:
        raise ConfigError(f"abc.weight.rounds must be >= 1, got {weight.rounds}")

    ref_sec = _section(raw, "reference")
    source = ref_sec.get("source", "simulate")
    if source not in ("simulate", "files"):
        raise ConfigError(f"reference.source must be simulate or files, got {source!r}")
    m_count = _get_int(ref_sec, "m_count", default=1, where="reference.")
    if m_count < 1:
        raise ConfigError(f"reference.m_count must be >= 1, got {m_count}")
    ref_scheme = ref_sec.get("scheme")
    if ref_scheme is not None and ref_scheme not in SCHEMES:
        raise ConfigError(f"reference.scheme must be one of {', '.join(SCHEMES)}, got {ref_scheme!r}")
    ref_params = {
        canonical_param_name(model_id, str(k)): float(v)
        for k, v in (ref_sec.get("params") or {}).items()
    }
    ref_grid_sec = ref_sec.get("grid") or {}
    ref_dt = _get_float(ref_grid_sec, "dt", default=dt, where="reference.grid.") if ref_grid_sec.get("dt") is not None else None
    ref_t_end = _get_float(ref_grid_sec, "t_end", default=t_end, where="reference.grid.") if ref_grid_sec.get("t_end") is not None else None
    files = tuple(str(p) for p in (ref_sec.get("files") or []))
    sample_rate = ref_sec.get("sample_rate")
    if sample_rate is not None:
        sample_rate = _get_float(ref_sec, "sample_rate", where="reference.")
        if sample_rate <= 0.0:
            raise ConfigError(f"reference.sample_rate must be > 0, got {sample_rate}")
    rescale_sec = ref_sec.get("rescale") or {}
    rescale = RescaleSpec(
        offset=_get_float(rescale_sec, "offset", default=0.0, where="reference.rescale."),
        scale=_get_float(rescale_sec, "scale", default=1.0, where="reference.rescale."),
    )
    cut = ref_sec.get("cut")
    if cut is not None:
        cut = _get_int(ref_sec, "cut", where="reference.")
        if cut < 1:
            raise ConfigError(f"reference.cut must be >= 1, got {cut}")
    if source == "files":
        if not files:
            raise ConfigError("reference.source is files but reference.files is empty")
        if sample_rate is None:
            raise ConfigError("reference.source is files requires reference.sample_rate")
    reference = ReferenceSpec(
        source=source,
        m_count=m_count,
        scheme=ref_scheme,
        params=ref_params,
        dt=ref_dt,
        t_end=ref_t_end,
        files=files,
        sample_rate=sample_rate,
        rescale=rescale,
        cut=cut,
    )

    spectral_sec = _section(raw, "spectral")
    span = spectral_sec.get("span")
    if span is not None:
        span = _get_float(spectral_sec, "span", where="spectral.")
        if span < 0.0:
            raise ConfigError(f"spectral.span must be >= 0, got {span}")
    taper_fraction = _get_float(spectral_sec, "taper_fraction", default=0.1, where="spectral.")
    if not 0.0 <= taper_fraction < 1.0:
        raise ConfigError(f"spectral.taper_fraction must lie in [0, 1), got {taper_fraction}")
    demean = spectral_sec.get("demean", True)
    if not isinstance(demean, bool):
        raise ConfigError(f"spectral.demean must be boolean, got {demean!r}")

    seed = _get_int(raw, "seed", default=0)
    workers = _get_int(raw, "workers", default=1)
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")
    out = str(raw.get("out") or "runs/out")

    cfg = RunConfig(
        model_id=model_id,
        model_params=model_params,
        free_names=free_names,
        scheme=scheme,
        dt=dt,
        t_end=t_end,
        prior_box=prior_box,
        n_total=n_total,
        percentile=percentile,
        aggregator=aggregator,
        weight=weight,
        reference=reference,
        spectral_span=span,
        taper_fraction=taper_fraction,
        demean=demean,
        seed=seed,
        workers=workers,
        out=out,
    )
    # building the model and grids validates parameter values and steps
    try:
        cfg.reference_model()
        cfg.build_grid()
        cfg.reference_grid()
    except (DomainError, ModelConstructionError) as exc:
        raise ConfigError(str(exc)) from None
    unknown_free = set(cfg.free_names) - set(cfg.build_model().params)
    if unknown_free:
        raise ConfigError(f"free parameter(s) {sorted(unknown_free)} not part of {model_id}")
    return cfg


def load_run_config(path, environ=None, overrides: dict | None = None) -> RunConfig:
    """Load, apply SPECABC_* environment overrides and CLI overrides, validate."""
    raw = load_raw_config(path)
    apply_env_overrides(raw, environ)
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    return parse_config(raw)
