"""File formats: long-format dataset CSV, trace archives, provenance headers.

Every artifact written here embeds the package version and a hash of the
resolved configuration, either as leading ``#`` comment lines (CSV) or as
top-level keys (JSON).  All writers are deterministic given their inputs.
"""

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .mixture import Dataset
from .sampler import Trace

ARTIFACT_VERSION = "0.1.0"
TRACE_SCHEMA_VERSION = 1


def config_hash(obj):
    """Short stable hash of a JSON-serializable configuration object."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _meta_lines(meta):
    lines = [f"# artifact_version={ARTIFACT_VERSION}"]
    for key, value in meta.items():
        lines.append(f"# {key}={value}")
    return lines


def write_dataset_csv(path, dataset, true_partitions=None, meta=None):
    """Write a panel to long-format CSV: time,unit,value[,covariates][,true_cluster]."""
    path = Path(path)
    cov_names = [f"x{k + 1}" for k in range(dataset.p)]
    header = ["time", "unit", "value"] + cov_names
    if true_partitions is not None:
        header.append("true_cluster")
    rows = []
    for t in range(dataset.T):
        for j in range(dataset.n):
            row = [dataset.time_labels[t], dataset.unit_labels[j], repr(float(dataset.y[t, j]))]
            if dataset.p:
                row += [repr(float(v)) for v in dataset.x[t, j]]
            if true_partitions is not None:
                row.append(int(true_partitions[t].labels[j]) + 1)
            rows.append(row)
    with path.open("w", newline="") as fh:
        for line in _meta_lines(meta or {}):
            fh.write(line + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def read_dataset_csv(path, covariates=None):
    """Load a long-format CSV panel back into a Dataset.

    The panel must be complete (every unit observed at every time).  Time
    and unit ordering follows first appearance in the file.  ``covariates``
    names the columns to load as per-observation covariate vectors.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"data file not found: {path}")
    covariates = list(covariates or [])
    with path.open() as fh:
        rows = [line for line in fh if not line.startswith("#")]
    reader = csv.DictReader(rows)
    required = {"time", "unit", "value"} | set(covariates)
    fields = set(reader.fieldnames or [])
    missing = required - fields
    if missing:
        raise ValueError(f"data file {path} lacks required columns: {sorted(missing)}")
    times, units = [], []
    seen_units = set()
    values = {}
    for rec in reader:
        tkey, ukey = rec["time"], rec["unit"]
        if tkey not in values:
            values[tkey] = {}
            times.append(tkey)
        if ukey in values[tkey]:
            raise ValueError(f"duplicate observation for unit {ukey!r} at time {tkey!r}")
        if ukey not in seen_units:
            seen_units.add(ukey)
            units.append(ukey)
        try:
            y = float(rec["value"])
            x = [float(rec[c]) for c in covariates]
        except (TypeError, ValueError) as err:
            raise ValueError(f"non-numeric entry in {path}: {err}") from None
        values[tkey][ukey] = (y, x)
    if not times or not units:
        raise ValueError(f"data file {path} contains no observations")
    T, n = len(times), len(units)
    y = np.empty((T, n))
    x = np.empty((T, n, len(covariates))) if covariates else None
    for t, tkey in enumerate(times):
        if len(values[tkey]) != n:
            raise ValueError(f"incomplete panel: time {tkey!r} has {len(values[tkey])} of {n} units")
        for j, ukey in enumerate(units):
            if ukey not in values[tkey]:
                raise ValueError(f"incomplete panel: unit {ukey!r} missing at time {tkey!r}")
            y[t, j], xv = values[tkey][ukey]
            if covariates:
                x[t, j] = xv
    return Dataset(y, x, time_labels=times, unit_labels=units)


def save_trace(path, trace, fmt="npz"):
    """Persist a trace: compact .npz plus a self-describing .json sidecar.

    With fmt='csv' the draws are additionally exported as plain CSV files
    next to the archive, for consumption outside this package.
    """
    path = Path(path)
    arrays = {
        "psi": trace.psi,
        "M": trace.M,
        "alloc": trace.alloc,
        "theta_mu": trace.theta_mu,
        "theta_tau": trace.theta_tau,
        "weights": trace.weights,
        "iteration": trace.iterations,
        "psi_accepts": trace.diagnostics.get("psi_accepts", np.zeros(0, dtype=np.uint8)),
        "M_accepts": trace.diagnostics.get("M_accepts", np.zeros(0, dtype=np.uint8)),
    }
    if trace.beta is not None:
        arrays["beta"] = trace.beta
    np.savez_compressed(path, **arrays)
    sidecar = {
        "schema_version": TRACE_SCHEMA_VERSION,
        "artifact_version": ARTIFACT_VERSION,
        "seed": int(trace.seed),
        "num_draws": len(trace),
        "fields": {
            "iteration": "sweep index of each retained draw",
            "psi": "dependence parameter, one value per draw",
            "M": "total mass parameter, one value per draw",
            "alloc": "component allocations, shape (draw, time, unit)",
            "theta_mu": "component locations, shape (draw, component)",
            "theta_tau": "component precisions, shape (draw, component)",
            "weights": "mixture weights, shape (draw, time, component)",
            "beta": "regression coefficients, shape (draw, time, covariate)",
        },
        "meta": _jsonable(trace.meta),
    }
    side_path = path.with_suffix(".json")
    side_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    if fmt == "csv":
        _export_trace_csv(path, trace)
    elif fmt != "npz":
        raise ValueError(f"unknown trace format {fmt!r}")
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def _export_trace_csv(path, trace):
    stem = path.with_suffix("")
    scalars = Path(f"{stem}.scalars.csv")
    with scalars.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["draw", "iteration", "psi", "M"])
        for d in range(len(trace)):
            writer.writerow([d, int(trace.iterations[d]), repr(float(trace.psi[d])),
                             repr(float(trace.M[d]))])
    alloc = Path(f"{stem}.alloc.csv")
    time_labels = trace.meta.get("time_labels", list(range(trace.T)))
    unit_labels = trace.meta.get("unit_labels", list(range(trace.n)))
    with alloc.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["draw", "time", "unit", "component"])
        for d in range(len(trace)):
            for t in range(trace.T):
                for j in range(trace.n):
                    writer.writerow([d, time_labels[t], unit_labels[j],
                                     int(trace.alloc[d, t, j]) + 1])
    theta = Path(f"{stem}.theta.csv")
    with theta.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["draw", "component", "mu", "tau"])
        for d in range(len(trace)):
            for h in range(trace.J):
                writer.writerow([d, h + 1, repr(float(trace.theta_mu[d, h])),
                                 repr(float(trace.theta_tau[d, h]))])


def load_trace(path):
    """Load a trace archive written by :func:`save_trace` (.npz or .json path)."""
    path = Path(path)
    if path.suffix == ".json":
        path = path.with_suffix(".npz")
    if not path.exists():
        raise FileNotFoundError(f"trace file not found: {path}")
    side_path = path.with_suffix(".json")
    if not side_path.exists():
        raise ValueError(f"trace sidecar missing: {side_path}")
    sidecar = json.loads(side_path.read_text())
    if sidecar.get("schema_version") != TRACE_SCHEMA_VERSION:
        raise ValueError(f"unsupported trace schema: {sidecar.get('schema_version')}")
    with np.load(path) as archive:
        beta = archive["beta"] if "beta" in archive.files else None
        diagnostics = {"psi_accepts": archive["psi_accepts"], "M_accepts": archive["M_accepts"]}
        trace = Trace(
            archive["psi"], archive["M"], archive["alloc"],
            archive["theta_mu"], archive["theta_tau"], archive["weights"],
            beta, archive["iteration"], sidecar["seed"],
            sidecar.get("meta", {}), diagnostics,
        )
    return trace
