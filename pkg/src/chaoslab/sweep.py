"""Config-driven parameter sweeps with deterministic seeding, resume and CSV output.

A sweep is a grid over named model parameters. Each (grid point, realization)
pair expands into independent tasks, one per requested metric:

* ``spectrum``  mean spacing ratio in a symmetry sector at ``L_spectrum``
* ``purity``    averaged probe purity at ``L_dynamics``
* ``echo``      time-averaged Haar Choi echo at ``L_dynamics``

Example config (JSON)::

    {
      "model": "ising",
      "grid": {"hz": [0.48, 1.446], "J": [0.8, 0.05]},
      "fixed": {"hx": 1.0},
      "L_dynamics": 7, "L_spectrum": 12,
      "sector": {"kind": "parity", "label": "even"},
      "N": 50, "T": 100, "dt": 0.1,
      "n_realizations": 1, "base_seed": 0,
      "estimator": "exact", "metrics": ["spectrum", "purity", "echo"]
    }
"""
from __future__ import annotations

import csv
import hashlib
import itertools
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .echo import averaged_subsystem_purity, time_averaged_choi_echo
from .models import build_model, default_defect_site
from .spectra import eigh, spacing_ratios
from .spinops import sector_basis

log = logging.getLogger(__name__)

MODELS = ("ising", "heisenberg", "xxz_defect")
METRICS = ("spectrum", "purity", "echo")
MODEL_PARAMS = {
    "ising": ("hx", "hz", "J"),
    "heisenberg": ("h",),
    "xxz_defect": ("Jxy", "Jz", "eps", "d"),
}

DEFAULT_GRIDS = {
    "ising": {
        "hz": [round(0.25 * k, 2) for k in range(13)],
        "J": [0.05] + [round(0.25 * k, 2) for k in range(1, 9)],
    },
    "heisenberg": {"h": [0.5, 1.0, 2.0, 3.0, 4.0, 6.0]},
    "xxz_defect": {
        "Jxy": [0.1] + [round(0.25 * k, 2) for k in range(1, 9)],
        "eps": [round(0.25 * k, 2) for k in range(7)],
    },
}

CSV_COLUMNS_TAIL = [
    "realization", "seed", "mean_r", "n_degenerate", "P_bar", "echo",
    "trim_fraction", "T", "dt", "estimator", "error",
]


class ConfigError(ValueError):
    pass


@dataclass
class SweepConfig:
    model: str
    grid: dict = field(default_factory=dict)
    fixed: dict = field(default_factory=dict)
    L_dynamics: int = 7
    L_spectrum: int = 12
    sector: dict | None = None
    probe_site: int = 1
    N: int = 50
    T: float = 100.0
    dt: float = 0.1
    n_realizations: int | None = None
    base_seed: int = 0
    estimator: str = "exact"
    M: int = 200
    trim_fraction: float = 0.05
    metrics: list = field(default_factory=lambda: list(METRICS))
    defect_dynamics: int | None = None
    defect_spectrum: int | None = None
    output: str | None = None

    def __post_init__(self):
        if self.model == "xxz":
            self.model = "xxz_defect"
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; choose from {MODELS}")
        if not self.grid:
            self.grid = dict(DEFAULT_GRIDS[self.model])
        allowed = MODEL_PARAMS[self.model]
        for name, values in list(self.grid.items()) + [(k, [v]) for k, v in self.fixed.items()]:
            if name not in allowed:
                raise ConfigError(f"parameter {name!r} not valid for {self.model}; expected {allowed}")
            if not isinstance(values, (list, tuple)) or not values:
                raise ConfigError(f"grid axis {name!r} must be a non-empty list")
        if self.n_realizations is None:
            self.n_realizations = 30 if self.model == "heisenberg" else 1
        if self.n_realizations < 1:
            raise ConfigError("n_realizations must be >= 1")
        bad = set(self.metrics) - set(METRICS)
        if bad or not self.metrics:
            raise ConfigError(f"unknown metrics {sorted(bad)}; choose from {METRICS}")
        if self.estimator not in ("exact", "exact_pauli", "mc", "design"):
            raise ConfigError(f"estimator {self.estimator!r} not usable in sweeps")
        limits = {"exact": 12, "exact_pauli": 8, "design": 5, "mc": 14}
        if "echo" in self.metrics and self.L_dynamics > limits[self.estimator]:
            raise ConfigError(
                f"L_dynamics={self.L_dynamics} exceeds the {self.estimator} estimator limit"
            )
        if not 1 <= self.probe_site <= self.L_dynamics:
            raise ConfigError("probe_site outside the chain")
        if not 0 <= self.trim_fraction < 0.5:
            raise ConfigError("trim_fraction must lie in [0, 0.5)")
        if self.T <= 0 or self.dt <= 0:
            raise ConfigError("T and dt must be positive")
        if self.sector is None:
            self.sector = default_sector(self.model, self.L_spectrum)

    @classmethod
    def from_json(cls, path) -> "SweepConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"malformed config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def axes(self) -> list[str]:
        return list(self.grid)

    def points(self) -> list[dict]:
        names = self.axes()
        return [dict(zip(names, combo)) for combo in itertools.product(*(self.grid[k] for k in names))]

    def digest(self) -> str:
        blob = json.dumps(asdict(self) | {"output": None}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def default_sector(model: str, L: int) -> dict:
    if model == "ising":
        return {"kind": "parity", "label": "even"}
    if model == "heisenberg":
        return {"kind": "magnetization", "label": L // 2}
    # N_up = 7 of 18 in the reference setup; keep the same filling away from half
    return {"kind": "magnetization", "label": max(1, round(7 * L / 18))}


def task_seed(base_seed: int, grid_index: int, realization: int) -> int:
    ss = np.random.SeedSequence([base_seed, grid_index, realization])
    return int(ss.generate_state(1, np.uint32)[0])


def _params(cfg: SweepConfig, point: dict, L: int, seed: int, defect: int | None) -> dict:
    p = dict(cfg.fixed)
    p.update(point)
    p["L"] = L
    if cfg.model == "heisenberg":
        p["seed"] = seed
    if cfg.model == "xxz_defect" and "d" not in p:
        p["d"] = defect if defect is not None else default_defect_site(L)
    return p


def run_task(cfg: SweepConfig, grid_index: int, realization: int, metric: str) -> dict:
    """Evaluate one metric at one grid point; returns a flat result dict."""
    point = cfg.points()[grid_index]
    seed = task_seed(cfg.base_seed, grid_index, realization)
    start = time.perf_counter()
    with threadpool_limits(1):
        if metric == "spectrum":
            B = sector_basis(cfg.L_spectrum, cfg.sector["kind"], cfg.sector.get("label"))
            H = build_model(cfg.model, _params(cfg, point, cfg.L_spectrum, seed, cfg.defect_spectrum),
                            sector=B)
            stats = spacing_ratios(eigh(H, vectors=False).eigenvalues, cfg.trim_fraction)
            out = {"mean_r": stats.mean_r, "n_degenerate": stats.n_degenerate}
            if not 0 <= stats.mean_r <= 1:
                raise ValueError(f"mean_r={stats.mean_r} out of bounds")
        else:
            H = build_model(cfg.model, _params(cfg, point, cfg.L_dynamics, seed, cfg.defect_dynamics))
            eig = eigh(H)
            if metric == "purity":
                p_bar, _ = averaged_subsystem_purity(eig, cfg.N, cfg.T, cfg.dt, seed=[seed, 1],
                                                     probe_site=cfg.probe_site)
                if not 0.5 - 1e-9 <= p_bar <= 1 + 1e-9:
                    raise ValueError(f"P_bar={p_bar} out of bounds")
                out = {"P_bar": p_bar}
            else:
                value = time_averaged_choi_echo(eig, cfg.T, cfg.dt, cfg.estimator, M=cfg.M,
                                                seed=[seed, 2], probe_site=cfg.probe_site)
                if not 0.25 - 1e-9 <= value <= 1 + 1e-9:
                    raise ValueError(f"echo={value} out of bounds")
                out = {"echo": value}
    out["wall_time"] = time.perf_counter() - start
    return out


def _run_task_safe(args):
    cfg, gi, ri, metric = args
    try:
        return (gi, ri, metric), run_task(cfg, gi, ri, metric), None
    except Exception as exc:  # recorded per task, the sweep keeps going
        return (gi, ri, metric), None, f"{metric}: {type(exc).__name__}: {exc}"


def resolve_jobs(jobs: int | None) -> int:
    if jobs is None:
        jobs = int(os.environ.get("CHAOSLAB_JOBS", "1"))
    return max(1, int(jobs))


def _task_key(gi, ri, metric) -> str:
    return f"{gi}:{ri}:{metric}"


def _load_manifest(path: Path, digest: str) -> dict:
    done = {}
    if not path.exists():
        return done
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            entry = json.loads(line)
            if entry.get("config") == digest:
                done[entry["task"]] = entry["result"]
    return done


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def run_sweep(cfg: SweepConfig, out_dir=None, jobs: int | None = None) -> list[dict]:
    """Run every (grid point, realization, metric) task and write CSV output.

    Completed tasks are appended to ``manifest.jsonl`` in the output
    directory and skipped on rerun. Records are ordered by grid index and
    realization regardless of execution order.
    """
    jobs = resolve_jobs(jobs)
    out_dir = Path(out_dir or cfg.output or "sweep_out")
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = cfg.digest()
    manifest = out_dir / "manifest.jsonl"
    done = _load_manifest(manifest, digest)

    points = cfg.points()
    tasks = [
        (cfg, gi, ri, m)
        for gi in range(len(points))
        for ri in range(cfg.n_realizations)
        for m in cfg.metrics
        if _task_key(gi, ri, m) not in done
    ]
    log.info("sweep %s: %d tasks (%d already done), %d workers", digest, len(tasks), len(done), jobs)

    errors = {}
    with open(manifest, "a", encoding="utf-8") as fh:
        if jobs == 1 or len(tasks) <= 1:
            results = map(_run_task_safe, tasks)
        else:
            pool = ProcessPoolExecutor(max_workers=jobs)
            results = pool.map(_run_task_safe, tasks)
        for (gi, ri, m), result, err in results:
            key = _task_key(gi, ri, m)
            if err is not None:
                errors[(gi, ri)] = errors.get((gi, ri), []) + [err]
                log.warning("task %s failed: %s", key, err)
                continue
            done[key] = result
            fh.write(json.dumps({"config": digest, "task": key, "result": result}) + "\n")
            fh.flush()
        if jobs > 1 and len(tasks) > 1:
            pool.shutdown()

    records = []
    timings = {}
    for gi, point in enumerate(points):
        for ri in range(cfg.n_realizations):
            rec = {"grid_index": gi, **point, "realization": ri,
                   "seed": task_seed(cfg.base_seed, gi, ri)}
            for m in cfg.metrics:
                res = done.get(_task_key(gi, ri, m))
                if res is not None:
                    rec.update({k: v for k, v in res.items() if k != "wall_time"})
                    timings[_task_key(gi, ri, m)] = res.get("wall_time")
            rec.update({"trim_fraction": cfg.trim_fraction, "T": cfg.T, "dt": cfg.dt,
                        "estimator": cfg.estimator})
            rec["error"] = "; ".join(errors.get((gi, ri), []))
            records.append(rec)

    write_records_csv(out_dir / "records.csv", records, cfg.axes())
    meta = {
        "config": asdict(cfg),
        "config_digest": digest,
        "version": __version__,
        "seeds": {f"{gi}:{ri}": task_seed(cfg.base_seed, gi, ri)
                  for gi in range(len(points)) for ri in range(cfg.n_realizations)},
        "rng": "numpy Philox4x64 seeded from SeedSequence([base_seed, grid_index, realization])",
        "wall_time": timings,
        "n_failed": sum(len(v) for v in errors.values()),
    }
    with open(out_dir / "run_metadata.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
    return records


def write_records_csv(path, records, axes) -> None:
    columns = ["grid_index", *axes, *CSV_COLUMNS_TAIL]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for rec in records:
            w.writerow([_fmt(rec.get(c)) for c in columns])


def aggregate_disorder(records, axis: str = "h") -> list[dict]:
    """Per-``axis`` mean and standard deviation over realizations."""
    groups: dict = {}
    for rec in records:
        groups.setdefault(rec[axis], []).append(rec)
    rows = []
    for value, recs in groups.items():
        row = {axis: value, "n": len(recs)}
        for key, src, flip in (("impurity", "P_bar", True), ("echo_deviation", "echo", True),
                               ("mean_r", "mean_r", False)):
            vals = np.array([r[src] for r in recs if r.get(src) is not None], dtype=float)
            if flip:
                vals = 1 - vals
            row[f"{key}_mean"] = float(vals.mean()) if vals.size else None
            row[f"{key}_std"] = float(vals.std()) if vals.size else None
        for src in ("P_bar", "echo"):
            vals = np.array([r[src] for r in recs if r.get(src) is not None], dtype=float)
            row[f"{src}_std"] = float(vals.std()) if vals.size else None
        rows.append(row)
    return rows


def run_disorder_scan(cfg: SweepConfig, out_dir=None, jobs: int | None = None) -> list[dict]:
    """Heisenberg disorder scan: sweep over ``h`` then aggregate over realizations."""
    if cfg.model != "heisenberg":
        raise ConfigError("disorder scans need the heisenberg model")
    if cfg.n_realizations < 2:
        raise ConfigError("disorder scans need n_realizations >= 2")
    if list(cfg.grid) != ["h"]:
        raise ConfigError("disorder scans take a single grid axis 'h'")
    out_dir = Path(out_dir or cfg.output or "scan_out")
    records = run_sweep(cfg, out_dir, jobs)
    rows = aggregate_disorder(records)
    columns = list(rows[0])
    with open(out_dir / "disorder_scan.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])
    return rows
