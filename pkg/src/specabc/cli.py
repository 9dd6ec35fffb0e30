"""Command-line front end.

Commands: `simulate` (write reference trajectories), `ingest` (summarize
external series files), `pilot` (calibrate the density weight), `run` (full
rejection-ABC campaign with artifacts), `stats` (posterior table from a
finished run) and `plot-data` (plot-ready curve CSVs). All take a config
document via the global --config flag; --seed, --workers and --out override
the corresponding config keys, and any key can also be overridden through
SPECABC_* environment variables.

Exit codes: 0 success, 2 configuration problems, 3 runtime failures.
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import click
import numpy as np

from .abc import (
    REFERENCE_STREAM_BASE,
    DistanceConfig,
    ReferenceSet,
    AbcRun,
    UniformPrior,
    pilot_ratios,
    posterior_stats,
    references_from_summaries,
    run_abc,
    simulate_references,
)
from .config import RescaleSpec, RunConfig, load_run_config
from .errors import ConfigError, IngestionError, RunError, SpecAbcError, StatsError
from .models import StationaryAnalytics
from .sim import RngStream, make_grid, simulate as simulate_path, write_trajectory_csv
from .summaries import kde, summarize, write_curve_csv

__all__ = ["cli", "main", "IngestedSeries", "read_series"]


@dataclass(frozen=True)
class IngestedSeries:
    """One external recording: samples plus its sampling rate and rescale."""

    samples: np.ndarray
    sample_rate: float
    rescale_offset: float = 0.0
    rescale_scale: float = 1.0

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate


def read_series(path, rescale: RescaleSpec | None = None) -> np.ndarray:
    """Read one-value-per-line text or single-column CSV.

    A leading non-numeric line is treated as a header; in multi-column rows
    (e.g. exported `t,y` trajectories) the last column is the value. Any
    later non-numeric row is an ingestion error naming the line.
    """
    values = []
    try:
        fh = open(path)
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            token = s.split(",")[-1].strip() if "," in s else s
            try:
                values.append(float(token))
            except ValueError:
                if lineno == 1:
                    continue
                raise IngestionError(
                    f"{path}, line {lineno}: not a number: {token!r}"
                ) from None
    if not values:
        raise IngestionError(f"{path}: no numeric samples")
    arr = np.asarray(values, dtype=float)
    if rescale is not None:
        arr = rescale.offset + rescale.scale * arr
    return arr


def _ingest_series_list(cfg: RunConfig, files=None, sample_rate=None, offset=None, scale=None, cut=None):
    ref = cfg.reference
    paths = [str(p) for p in files] if files else list(ref.files)
    if not paths:
        raise ConfigError("no input files: pass them as arguments or set reference.files")
    rate = sample_rate if sample_rate is not None else ref.sample_rate
    if rate is None or rate <= 0.0:
        raise ConfigError("a positive sample rate is required to ingest files")
    rescale = RescaleSpec(
        offset=ref.rescale.offset if offset is None else float(offset),
        scale=ref.rescale.scale if scale is None else float(scale),
    )
    n_cut = ref.cut if cut is None else int(cut)
    series = []
    for path in paths:
        arr = read_series(path, rescale)
        if n_cut and n_cut > 1:
            seg = arr.size // n_cut
            if seg < 10:
                raise IngestionError(
                    f"{path}: {arr.size} samples cannot be cut into {n_cut} usable pieces"
                )
            for k in range(n_cut):
                series.append(
                    IngestedSeries(arr[k * seg : (k + 1) * seg], rate, rescale.offset, rescale.scale)
                )
        else:
            series.append(IngestedSeries(arr, rate, rescale.offset, rescale.scale))
    return series


def _build_references(cfg: RunConfig) -> ReferenceSet:
    spectral = cfg.spectral_config()
    if cfg.reference.source == "simulate":
        return simulate_references(
            cfg.reference_model(),
            cfg.reference_grid(),
            cfg.reference_scheme(),
            cfg.reference.m_count,
            cfg.seed,
            config=spectral,
        )
    series = _ingest_series_list(cfg)
    summaries = [summarize(s.samples, config=spectral, dt=s.dt) for s in series]
    return references_from_summaries(
        summaries,
        provenance={
            "source": "files",
            "files": list(cfg.reference.files),
            "sample_rate": cfg.reference.sample_rate,
            "cut": cfg.reference.cut,
        },
    )


def _resolve_weight(cfg: RunConfig) -> float:
    if cfg.weight.mode == "zero":
        return 0.0
    if cfg.weight.mode == "fixed":
        return cfg.weight.value
    prior = UniformPrior.from_dict(cfg.prior_box)
    ratios = pilot_ratios(
        cfg.build_model(),
        cfg.build_grid(),
        cfg.scheme,
        prior,
        cfg.weight.rounds,
        cfg.seed,
        config=cfg.spectral_config(),
    )
    return float(np.median(ratios))


def _write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _write_rows_csv(path, header: str, rows) -> None:
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _write_accepted_csv(path, run: AbcRun) -> None:
    header = ",".join(run.param_names + ("distance",))
    rows = (
        [f"{v:.17g}" for v in theta] + [f"{d:.17g}"]
        for theta, d in zip(run.kept_params, run.kept_distances)
    )
    _write_rows_csv(path, header, rows)


def _read_accepted_csv(path):
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
    except OSError as exc:
        raise RunError(f"cannot read {path}: {exc}") from None
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0 or data.shape[1] != len(header):
        raise RunError(f"{path}: malformed accepted-samples table")
    names = tuple(header[:-1])
    return names, data[:, :-1], data[:, -1]


def _comparable_settings(settings: dict) -> dict:
    # output location and worker count do not affect results
    d = json.loads(json.dumps(settings))
    d.pop("out", None)
    d.pop("workers", None)
    return d


@click.group()
@click.option("--config", "config_path", type=str, default=None, help="Config document (YAML).")
@click.option("--seed", type=int, default=None, help="Override the master seed.")
@click.option("--workers", type=int, default=None, help="Override the worker count.")
@click.option("--out", type=str, default=None, help="Override the output directory.")
@click.pass_context
def cli(ctx, config_path, seed, workers, out):
    """Spectral-density ABC for stochastic oscillator and neural mass models."""
    ctx.obj = {
        "config_path": config_path,
        "overrides": {"seed": seed, "workers": workers, "out": out},
    }


def _load(ctx) -> RunConfig:
    path = ctx.obj.get("config_path")
    if path is None:
        raise click.UsageError("this command needs --config")
    return load_run_config(path, overrides=ctx.obj["overrides"])


@cli.command("simulate")
@click.pass_context
def simulate_cmd(ctx):
    """Write the M reference trajectories as CSV files."""
    cfg = _load(ctx)
    model = cfg.reference_model()
    grid = cfg.reference_grid()
    scheme = cfg.reference_scheme()
    outdir = Path(cfg.out) / "trajectories"
    outdir.mkdir(parents=True, exist_ok=True)
    files = []
    for k in range(cfg.reference.m_count):
        tr = simulate_path(model, grid, scheme, RngStream(cfg.seed, REFERENCE_STREAM_BASE + k))
        path = outdir / f"ref_{k:03d}.csv"
        write_trajectory_csv(tr, path)
        files.append(str(path))
    _write_json(outdir / "manifest.json", {"settings": cfg.to_dict(), "files": files})
    click.echo(f"wrote {len(files)} trajectories to {outdir}")


@cli.command("ingest")
@click.argument("files", nargs=-1, type=str)
@click.option("--sample-rate", type=float, default=None, help="Samples per time unit.")
@click.option("--offset", type=float, default=None, help="Affine rescale offset.")
@click.option("--scale", type=float, default=None, help="Affine rescale factor.")
@click.option("--cut", type=int, default=None, help="Split each file into this many pieces.")
@click.pass_context
def ingest_cmd(ctx, files, sample_rate, offset, scale, cut):
    """Summarize external series files into reference summaries."""
    cfg = _load(ctx)
    spectral = cfg.spectral_config()
    series = _ingest_series_list(cfg, files, sample_rate, offset, scale, cut)
    outdir = Path(cfg.out) / "references"
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for k, s in enumerate(series):
        pair = summarize(s.samples, config=spectral, dt=s.dt)
        dens_path = outdir / f"ref_{k:03d}_density.csv"
        spec_path = outdir / f"ref_{k:03d}_spectrum.csv"
        write_curve_csv(pair.dens.grid, pair.dens.values, dens_path)
        write_curve_csv(pair.spec.frequencies, pair.spec.values, spec_path)
        written.append({"density": str(dens_path), "spectrum": str(spec_path), "samples": int(s.samples.size)})
    _write_json(
        outdir / "manifest.json",
        {
            "settings": cfg.to_dict(),
            "m_count": len(series),
            "dt": series[0].dt,
            "summaries": written,
        },
    )
    click.echo(f"ingested {len(series)} series into {outdir}")


@cli.command("pilot")
@click.pass_context
def pilot_cmd(ctx):
    """Run the weight-calibration pilot and report w."""
    cfg = _load(ctx)
    prior = UniformPrior.from_dict(cfg.prior_box)
    t0 = time.perf_counter()
    ratios = pilot_ratios(
        cfg.build_model(),
        cfg.build_grid(),
        cfg.scheme,
        prior,
        cfg.weight.rounds,
        cfg.seed,
        config=cfg.spectral_config(),
    )
    weight = float(np.median(ratios))
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    write_curve_csv(np.arange(1, ratios.size + 1), ratios, outdir / "pilot_ratios.csv")
    _write_json(
        outdir / "pilot.json",
        {
            "weight": weight,
            "rounds": int(ratios.size),
            "seed": cfg.seed,
            "elapsed_s": round(time.perf_counter() - t0, 3),
        },
    )
    click.echo(f"pilot weight w = {weight:.6g} ({ratios.size} rounds)")


@cli.command("run")
@click.option("--resume", is_flag=True, help="Skip the run if matching artifacts exist.")
@click.pass_context
def run_cmd(ctx, resume):
    """Run the full rejection-ABC campaign and write its artifacts."""
    cfg = _load(ctx)
    settings = cfg.to_dict()
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest_path = outdir / "manifest.json"
    accepted_path = outdir / "accepted.csv"
    if resume and manifest_path.exists() and accepted_path.exists():
        with open(manifest_path) as fh:
            old = json.load(fh)
        if _comparable_settings(old.get("settings", {})) == _comparable_settings(settings):
            click.echo(f"resume: {outdir} already holds this run")
            return

    timings = {}
    t0 = time.perf_counter()
    refs = _build_references(cfg)
    timings["references_s"] = round(time.perf_counter() - t0, 3)

    t0 = time.perf_counter()
    weight = _resolve_weight(cfg)
    timings["weight_s"] = round(time.perf_counter() - t0, 3)

    prior = UniformPrior.from_dict(cfg.prior_box)
    dist_cfg = DistanceConfig(weight_w=weight, aggregator=cfg.aggregator)
    t0 = time.perf_counter()
    run = run_abc(
        cfg.build_model(),
        cfg.build_grid(),
        cfg.scheme,
        prior,
        refs,
        dist_cfg,
        cfg.n_total,
        cfg.percentile,
        cfg.seed,
        workers=cfg.workers,
        spectral_config=cfg.spectral_config(),
    )
    timings["trials_s"] = round(time.perf_counter() - t0, 3)

    _write_accepted_csv(accepted_path, run)
    stats_payload = None
    try:
        st = posterior_stats(run)
    except StatsError as exc:
        click.echo(f"warning: posterior statistics unavailable: {exc}", err=True)
        st = None
    if st is not None:
        rows = (
            [name]
            + [f"{v:.17g}" for v in (st.means[i], st.sds[i], *st.quantiles[i])]
            for i, name in enumerate(st.param_names)
        )
        _write_rows_csv(
            outdir / "posterior.csv", "parameter,mean,sd,q2.5,q50,q97.5", rows
        )
        stats_payload = {
            "means": dict(zip(st.param_names, st.means.tolist())),
            "sds": dict(zip(st.param_names, st.sds.tolist())),
            "correlation": st.correlation.tolist(),
            "degenerate": st.degenerate,
        }
    for i, name in enumerate(run.param_names):
        lo, hi = cfg.prior_box[name]
        counts, edges = np.histogram(run.kept_params[:, i], bins=40, range=(lo, hi))
        centers = 0.5 * (edges[:-1] + edges[1:])
        write_curve_csv(centers, counts.astype(float), outdir / f"hist_{name}.csv")

    _write_json(
        manifest_path,
        {
            "settings": settings,
            "realized": {
                "epsilon": run.epsilon,
                "kept_count": run.kept_count,
                "weight_w": weight,
                "m_count": refs.m_count,
                "timings": timings,
                "posterior": stats_payload,
            },
        },
    )
    click.echo(
        f"kept {run.kept_count} of {run.n_total} trials at epsilon = {run.epsilon:.6g}"
    )
    if st is not None:
        for i, name in enumerate(st.param_names):
            click.echo(f"  {name}: mean {st.means[i]:.4g}, sd {st.sds[i]:.4g}")
    click.echo(f"artifacts in {outdir}")


@cli.command("stats")
@click.argument("run_dir", required=False, type=str)
@click.pass_context
def stats_cmd(ctx, run_dir):
    """Print posterior statistics of a finished run directory."""
    if run_dir is None:
        run_dir = _load(ctx).out
    names, kept, distances = _read_accepted_csv(Path(run_dir) / "accepted.csv")
    run = AbcRun(
        param_names=names,
        params=kept,
        distances=distances,
        kept_indices=np.arange(kept.shape[0]),
        epsilon=float(distances.max()) if distances.size else float("nan"),
        percentile=100.0,
        n_total=kept.shape[0],
        seed=0,
    )
    st = posterior_stats(run)
    click.echo(f"{'parameter':<12}{'mean':>12}{'sd':>12}{'q2.5':>12}{'q50':>12}{'q97.5':>12}")
    for i, name in enumerate(st.param_names):
        q = st.quantiles[i]
        click.echo(
            f"{name:<12}{st.means[i]:>12.5g}{st.sds[i]:>12.5g}{q[0]:>12.5g}{q[1]:>12.5g}{q[2]:>12.5g}"
        )
    if len(st.param_names) > 1:
        click.echo("correlations:")
        for i, a in enumerate(st.param_names):
            for j in range(i + 1, len(st.param_names)):
                click.echo(f"  corr({a}, {st.param_names[j]}) = {st.correlation[i, j]:.4f}")
    if st.degenerate:
        click.echo("note: at least one parameter is degenerate among the kept draws")


def _write_series_csv(path, blocks) -> None:
    # blocks: iterable of (series_label, x_array, value_array)
    with open(path, "w") as fh:
        fh.write("x,value,series\n")
        for label, xs, vs in blocks:
            for x, v in zip(np.asarray(xs), np.asarray(vs)):
                fh.write(f"{x:.17g},{v:.17g},{label}\n")


def _analytic_density_curve(analytics: StationaryAnalytics, grid: np.ndarray) -> np.ndarray:
    var = analytics.variance
    return np.exp(-0.5 * (grid - analytics.mean) ** 2 / var) / np.sqrt(2.0 * np.pi * var)


@cli.command("plot-data")
@click.option(
    "--kind",
    type=click.Choice(["summary-overlay", "posterior-prior", "invariant-density"]),
    required=True,
)
@click.option("--seeds", default="1,2", help="Stream indices for summary-overlay.")
@click.option("--dts", default=None, help="Comma-separated dt values for invariant-density.")
@click.option("--schemes", default="strang_sde_outer,euler", help="Schemes for invariant-density.")
@click.option("--run-dir", default=None, help="Run directory for posterior-prior.")
@click.pass_context
def plot_data_cmd(ctx, kind, seeds, dts, schemes, run_dir):
    """Write plot-ready `x,value,series` CSV files."""
    cfg = _load(ctx)
    plotdir = Path(cfg.out) / "plot"
    plotdir.mkdir(parents=True, exist_ok=True)
    spectral = cfg.spectral_config()

    if kind == "summary-overlay":
        model = cfg.reference_model()
        grid = cfg.reference_grid()
        scheme = cfg.reference_scheme()
        dens_blocks, spec_blocks = [], []
        for token in seeds.split(","):
            stream = int(token)
            tr = simulate_path(model, grid, scheme, RngStream(cfg.seed, stream))
            pair = summarize(tr, config=spectral)
            dens_blocks.append((f"stream{stream}", pair.dens.grid, pair.dens.values))
            spec_blocks.append((f"stream{stream}", pair.spec.frequencies, pair.spec.values))
        _write_series_csv(plotdir / "summary_overlay_density.csv", dens_blocks)
        _write_series_csv(plotdir / "summary_overlay_spectrum.csv", spec_blocks)
        click.echo(f"wrote overlay curves for streams {seeds} to {plotdir}")
        return

    if kind == "posterior-prior":
        source = Path(run_dir) if run_dir else Path(cfg.out)
        names, kept, _ = _read_accepted_csv(source / "accepted.csv")
        for i, name in enumerate(names):
            if name not in cfg.prior_box:
                raise ConfigError(f"parameter {name!r} from {source} is not in the prior box")
            lo, hi = cfg.prior_box[name]
            post = kde(kept[:, i])
            prior_vals = np.where(
                (post.grid >= lo) & (post.grid <= hi), 1.0 / (hi - lo), 0.0
            )
            _write_series_csv(
                plotdir / f"posterior_{name}.csv",
                [("posterior", post.grid, post.values), ("prior", post.grid, prior_vals)],
            )
        click.echo(f"wrote posterior/prior curves for {len(names)} parameter(s) to {plotdir}")
        return

    model = cfg.reference_model()
    dt_values = [float(s) for s in dts.split(",")] if dts else [cfg.dt]
    scheme_list = [s.strip() for s in schemes.split(",") if s.strip()]
    blocks = []
    for dt_v in dt_values:
        grid = make_grid(dt_v, cfg.t_end)
        for scheme in scheme_list:
            tr = simulate_path(model, grid, scheme, RngStream(cfg.seed, 1))
            label = f"{scheme} dt={dt_v:g}"
            if tr.overflowed:
                click.echo(f"note: {label} overflowed; omitting its density", err=True)
                continue
            dens = kde(tr)
            blocks.append((label, dens.grid, dens.values))
    if model.analytics is not None and blocks:
        widest = max(blocks, key=lambda b: b[1][-1] - b[1][0])
        blocks.append(("analytic", widest[1], _analytic_density_curve(model.analytics, widest[1])))
    _write_series_csv(plotdir / "invariant_density.csv", blocks)
    click.echo(f"wrote {len(blocks)} invariant-density curves to {plotdir}")


def main(argv=None) -> int:
    """Console entry point with the documented exit-code mapping."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 130
    except click.UsageError as exc:
        exc.show()
        return 2
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        return 2
    except (IngestionError, RunError, SpecAbcError) as exc:
        click.echo(f"run error: {exc}", err=True)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
