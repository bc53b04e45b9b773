"""Batch front-end: simulate benchmark data, fit chains, summarize traces.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime
failure.  All output files embed the artifact version and a hash of the
resolved configuration; given fixed seeds the whole simulate -> fit ->
summarize pipeline is byte-identical across runs.
"""

import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np
import yaml

from .measures import Partition
from .mixture import BaseMeasure
from .sampler import MCMCConfig, PRESETS, PriorSpec, run_mcmc
from .scenarios import generate_scenario
from .storage import (
    ARTIFACT_VERSION,
    config_hash,
    load_trace,
    read_dataset_csv,
    save_trace,
    write_dataset_csv,
)
from . import summaries

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4

OUTPUT_DIR_ENV = "ARDP_OUTPUT_DIR"

DEFAULT_CONFIG = {
    "data": None,
    "output_dir": None,
    "model": {
        "kernel": "gaussian",
        "mu0": 0.0,
        "lambda0": 0.01,
        "alpha": 2.0,
        "beta": 1.0,
        "kernel_scale": 1.0,
        "covariates": [],
        "beta_prior_var": 10.0,
    },
    "prior": {
        "process": "ar1dp",
        "psi_prior": "uniform",
        "M_shape": 4.0,
        "M_rate": 4.0,
        "truncation": 50,
    },
    "mcmc": {
        "preset": None,
        "iterations": 20000,
        "burn_in": 10000,
        "thin": 10,
        "particles": 500,
        "psi_step": 0.3,
        "M_step": 0.3,
        "adapt": True,
        "resampling": "multinomial",
        "seed": 0,
    },
}


class ConfigError(Exception):
    pass


def _merge_config(defaults, given, path=""):
    if not isinstance(given, dict):
        raise ConfigError(f"config section {path or '<root>'} must be a mapping")
    merged = {}
    for key, default in defaults.items():
        if key in given and isinstance(default, dict):
            merged[key] = _merge_config(default, given[key], f"{path}{key}.")
        elif key in given:
            merged[key] = given[key]
        else:
            merged[key] = default
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(path + k for k in unknown)}")
    return merged


def resolve_config(raw, seed_override=None, preset_override=None, output_override=None):
    """Merge user config over defaults, apply presets and CLI overrides."""
    cfg = _merge_config(DEFAULT_CONFIG, raw or {})
    preset = preset_override or cfg["mcmc"]["preset"]
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}")
        cfg["mcmc"].update(PRESETS[preset])
        cfg["mcmc"]["preset"] = preset
    if seed_override is not None:
        cfg["mcmc"]["seed"] = int(seed_override)
    if output_override is not None:
        cfg["output_dir"] = str(output_override)
    if cfg["data"] is None:
        raise ConfigError("config must name a data file under the 'data' key")
    if cfg["model"]["kernel"] != "gaussian":
        raise ConfigError("only the gaussian kernel is implemented")
    return cfg


def _build_model(cfg):
    model = cfg["model"]
    base = BaseMeasure(model["mu0"], model["lambda0"], model["alpha"], model["beta"],
                       model["kernel_scale"])
    prior = PriorSpec(kind=cfg["prior"]["process"], J=cfg["prior"]["truncation"], base=base)
    mc = cfg["mcmc"]
    config = MCMCConfig(
        iterations=mc["iterations"], burn_in=mc["burn_in"], thin=mc["thin"],
        particles=mc["particles"], J=cfg["prior"]["truncation"],
        psi_step=mc["psi_step"], M_step=mc["M_step"],
        psi_prior=cfg["prior"]["psi_prior"],
        M_shape=cfg["prior"]["M_shape"], M_rate=cfg["prior"]["M_rate"],
        seed=mc["seed"], adapt=mc["adapt"], resampling=mc["resampling"],
    )
    return prior, config


def _output_dir(explicit=None):
    path = Path(explicit or os.environ.get(OUTPUT_DIR_ENV) or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _limit_threads(threads):
    if threads is None:
        return
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(limits=threads)
    except ImportError:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(threads)


def _write_csv(path, header, rows, meta):
    with Path(path).open("w", newline="") as fh:
        fh.write(f"# artifact_version={ARTIFACT_VERSION}\n")
        for key, value in meta.items():
            fh.write(f"# {key}={value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


@click.group()
@click.version_option(ARTIFACT_VERSION, prog_name="ardp")
def main():
    """Dynamic clustering with time-dependent Dirichlet process mixtures."""


@main.command()
@click.option("--scenario", type=int, required=True, help="Benchmark scenario id (1-7).")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--n", "n", type=int, default=100, show_default=True, help="Units per time point.")
@click.option("--T", "T", type=int, default=None, help="Override the number of time points.")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Output CSV path (default: scenario<k>.csv in the output directory).")
def simulate(scenario, seed, n, T, out):
    """Write one benchmark dataset as a long-format CSV with ground truth."""
    try:
        result = generate_scenario(scenario, seed, n=n, T=T)
    except ValueError as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(EXIT_CONFIG)
    if out is None:
        out = _output_dir() / f"scenario{scenario}.csv"
    meta = {
        "config_hash": config_hash({"scenario": scenario, "seed": seed, "n": n, "T": T}),
        "scenario": scenario,
        "seed": seed,
    }
    try:
        write_dataset_csv(out, result.dataset, result.true_partitions, meta)
    except OSError as err:
        click.echo(f"error: cannot write {out}: {err}", err=True)
        sys.exit(EXIT_DATA)
    click.echo(f"wrote {out}")


def _run_chain(args):
    cfg, seed, trace_path, fmt = args
    cfg = json.loads(cfg)
    cfg["mcmc"]["seed"] = seed
    data = read_dataset_csv(cfg["data"], cfg["model"]["covariates"])
    prior, config = _build_model(cfg)
    trace = run_mcmc(data, prior, config)
    trace.meta["config_hash"] = config_hash(cfg)
    trace.meta["config"] = cfg
    save_trace(trace_path, trace, fmt=fmt)
    return trace_path


@main.command()
@click.argument("config_path", type=click.Path(path_type=Path))
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--preset", type=click.Choice(sorted(PRESETS)), default=None,
              help="Apply a named run-length preset.")
@click.option("--chains", type=int, default=1, show_default=True,
              help="Number of independent seeded chains to run.")
@click.option("--threads", type=int, default=None, help="Bound BLAS/thread parallelism.")
@click.option("--trace-format", type=click.Choice(["npz", "csv"]), default="npz",
              show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), default=None)
def fit(config_path, seed, preset, chains, threads, trace_format, out_dir):
    """Run the posterior sampler as described by a YAML config file."""
    if not Path(config_path).exists():
        click.echo(f"error: config file not found: {config_path}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        raw = yaml.safe_load(Path(config_path).read_text())
        cfg = resolve_config(raw, seed_override=seed, preset_override=preset,
                             output_override=out_dir)
        prior, config = _build_model(cfg)  # validates before any sampling
    except (ConfigError, ValueError, yaml.YAMLError) as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        data = read_dataset_csv(cfg["data"], cfg["model"]["covariates"])
    except (FileNotFoundError, ValueError) as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(EXIT_DATA)
    _limit_threads(threads)
    out = _output_dir(cfg["output_dir"])
    cfg_hash = config_hash(cfg)
    resolved_path = out / "resolved_config.yaml"
    resolved = dict(cfg)
    resolved["config_hash"] = cfg_hash
    resolved["artifact_version"] = ARTIFACT_VERSION
    if seed is not None:
        resolved["seed_overridden_by_cli"] = True
    resolved_path.write_text(yaml.safe_dump(resolved, sort_keys=True))

    if chains < 1:
        click.echo("error: --chains must be >= 1", err=True)
        sys.exit(EXIT_CONFIG)
    seeds = [cfg["mcmc"]["seed"]] if chains == 1 else [
        int(s.generate_state(1)[0]) for s in np.random.SeedSequence(cfg["mcmc"]["seed"]).spawn(chains)
    ]
    jobs = []
    for idx, chain_seed in enumerate(seeds):
        name = "trace.npz" if chains == 1 else f"trace_chain{idx + 1}.npz"
        jobs.append((json.dumps(cfg), chain_seed, str(out / name), trace_format))
    try:
        if chains == 1:
            paths = [_run_chain(jobs[0])]
        else:
            with ProcessPoolExecutor(max_workers=chains) as pool:
                paths = list(pool.map(_run_chain, jobs))
    except Exception as err:  # surface sampler failures with the runtime exit code
        click.echo(f"error: sampling failed: {err}", err=True)
        sys.exit(EXIT_RUNTIME)

    for idx, trace_path in enumerate(paths):
        trace = load_trace(trace_path)
        acc = trace.diagnostics
        log_name = "acceptance_log.csv" if chains == 1 else f"acceptance_log_chain{idx + 1}.csv"
        psi_acc = np.cumsum(acc["psi_accepts"]) / np.arange(1, acc["psi_accepts"].size + 1)
        M_acc = np.cumsum(acc["M_accepts"]) / np.arange(1, acc["M_accepts"].size + 1)
        rows = [
            [i + 1, repr(float(psi_acc[i])), repr(float(M_acc[i]))]
            for i in range(psi_acc.size)
        ]
        _write_csv(out / log_name, ["iteration", "psi_accept_rate", "M_accept_rate"], rows,
                   {"config_hash": cfg_hash, "seed": trace.seed})
        click.echo(f"wrote {trace_path}")
    click.echo(f"wrote {resolved_path}")


def _summary_meta(trace):
    return {
        "config_hash": trace.meta.get("config_hash", "unknown"),
        "seed": trace.seed,
    }


@main.command()
@click.argument("trace_path", type=click.Path(path_type=Path))
@click.option("--what", type=click.Choice(["coclust", "binder", "labels", "predictive",
                                           "psi-posterior"]), required=True)
@click.option("--data", "data_path", type=click.Path(path_type=Path), default=None,
              help="Original data CSV (required for binder and labels).")
@click.option("--grid-points", type=int, default=512, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False, path_type=Path), default=None)
def summarize(trace_path, what, data_path, grid_points, out_dir):
    """Emit posterior summary artifacts from a stored trace."""
    try:
        trace = load_trace(trace_path)
    except (FileNotFoundError, ValueError) as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(EXIT_DATA)
    out = _output_dir(out_dir)
    meta = _summary_meta(trace)
    time_labels = trace.meta.get("time_labels", list(range(trace.T)))
    unit_labels = trace.meta.get("unit_labels", list(range(trace.n)))

    data = None
    if what in ("binder", "labels") and data_path is None:
        click.echo(f"error: --data is required for --what {what}", err=True)
        sys.exit(EXIT_CONFIG)
    if data_path is not None:
        covs = trace.meta.get("config", {}).get("model", {}).get("covariates", [])
        try:
            data = read_dataset_csv(data_path, covs)
        except (FileNotFoundError, ValueError) as err:
            click.echo(f"error: {err}", err=True)
            sys.exit(EXIT_DATA)
        if data.T != trace.T or data.n != trace.n:
            click.echo("error: data panel does not match the trace dimensions", err=True)
            sys.exit(EXIT_DATA)

    try:
        if what == "coclust":
            for t in range(trace.T):
                probs = summaries.coclustering(trace, t)
                rows = [[unit_labels[i]] + [repr(float(v)) for v in probs[i]]
                        for i in range(trace.n)]
                _write_csv(out / f"coclust_t{time_labels[t]}.csv",
                           ["unit"] + [str(u) for u in unit_labels], rows, meta)
                click.echo(f"wrote {out / f'coclust_t{time_labels[t]}.csv'}")
        elif what in ("binder", "labels"):
            for t in range(trace.T):
                probs = summaries.coclustering(trace, t)
                candidates = summaries.sampled_partitions(trace, t)
                part = summaries.binder_partition(probs, candidates)
                stats = summaries.cluster_summary(data, part, t)
                if what == "binder":
                    rows = [[unit_labels[j], int(part.labels[j]) + 1,
                             stats[part.labels[j]]["label"]] for j in range(trace.n)]
                    name = out / f"binder_t{time_labels[t]}.csv"
                    _write_csv(name, ["unit", "cluster", "label"], rows,
                               {**meta, "scale": "as-ingested"})
                else:
                    rows = [[row["cluster"] + 1, row["label"], row["size"],
                             repr(row["mean"]), repr(row["sd"])] for row in stats]
                    name = out / f"labels_t{time_labels[t]}.csv"
                    _write_csv(name, ["cluster", "label", "size", "mean", "sd"], rows,
                               {**meta, "scale": "as-ingested"})
                click.echo(f"wrote {name}")
        elif what == "predictive":
            if data is not None:
                grid = summaries.default_grid(data, points=grid_points)
            else:
                grid = _predictive_grid(trace, grid_points)
            for t in range(trace.T):
                dens = summaries.posterior_predictive_grid(trace, t, grid)
                rows = [[repr(float(y)), repr(float(v))] for y, v in zip(grid, dens.values)]
                name = out / f"predictive_t{time_labels[t]}.csv"
                _write_csv(name, ["y", "density"], rows, meta)
                click.echo(f"wrote {name}")
        else:  # psi-posterior
            payload = {
                "artifact_version": ARTIFACT_VERSION,
                "config_hash": meta["config_hash"],
                "seed": meta["seed"],
                "psi": _scalar_summary(trace.psi, include_positive=True),
                "M": _scalar_summary(trace.M),
            }
            name = out / "psi_posterior.json"
            name.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
            click.echo(f"wrote {name}")
    except Exception as err:
        click.echo(f"error: summary failed: {err}", err=True)
        sys.exit(EXIT_RUNTIME)


def _predictive_grid(trace, points):
    # span the atoms that carry appreciable weight, padded by 3 of their sd
    w_max = trace.weights.max(axis=1)  # (draw, component)
    used = trace.theta_mu[w_max > 1e-4]
    if used.size == 0:
        used = trace.theta_mu.ravel()
    sd = used.std() if used.size > 1 else 1.0
    sd = max(sd, 1e-6)
    return np.linspace(used.min() - 3 * sd, used.max() + 3 * sd, points)


def _scalar_summary(draws, include_positive=False):
    lo, hi = np.percentile(draws, [2.5, 97.5])
    out = {
        "mean": float(np.mean(draws)),
        "median": float(np.median(draws)),
        "lower95": float(lo),
        "upper95": float(hi),
    }
    if include_positive:
        out["prob_positive"] = float(np.mean(draws > 0))
    return out


if __name__ == "__main__":
    main()
