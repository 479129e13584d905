"""Command-line interface: ``chaoslab <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channel import choi_from_unitary, propagator, write_ptm_csv
from .echo import (
    ESTIMATORS,
    averaged_subsystem_purity,
    choi_echo_series,
    random_env_kets,
    time_grid,
    write_series_csv,
)
from .models import build_model, default_defect_site
from .spectra import eigh, spacing_ratios, write_histogram_csv
from .spinops import sector_basis
from .sweep import ConfigError, SweepConfig, run_disorder_scan, run_sweep

log = logging.getLogger("chaoslab")


def _model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", required=True, choices=["ising", "heisenberg", "xxz", "xxz_defect"])
    p.add_argument("--L", type=int, default=7)
    p.add_argument("--hx", type=float, default=1.0)
    p.add_argument("--hz", type=float, default=0.48)
    p.add_argument("--J", type=float, default=0.8)
    p.add_argument("--h", type=float, default=0.0, help="disorder strength")
    p.add_argument("--Jxy", type=float, default=1.0)
    p.add_argument("--Jz", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=0.0)
    p.add_argument("--defect", type=int, default=None)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)


def _seed(args) -> int:
    return 0 if args.seed is None else args.seed


def _params(args) -> dict:
    if args.model == "ising":
        return {"L": args.L, "hx": args.hx, "hz": args.hz, "J": args.J}
    if args.model == "heisenberg":
        return {"L": args.L, "h": args.h, "seed": _seed(args)}
    d = args.defect if args.defect is not None else default_defect_site(args.L)
    return {"L": args.L, "Jxy": args.Jxy, "Jz": args.Jz, "eps": args.eps, "d": d}


def _sector(text: str, L: int):
    if text in ("even", "odd"):
        return sector_basis(L, "parity", text)
    if text == "full":
        return None
    try:
        return sector_basis(L, "magnetization", int(text))
    except ValueError as exc:
        raise ConfigError(f"bad sector {text!r}: use even, odd, full or an N_up count") from exc


def _dynamics_eig(args):
    model = "xxz_defect" if args.model == "xxz" else args.model
    return eigh(build_model(model, _params(args)))


def cmd_spectrum(args) -> int:
    model = "xxz_defect" if args.model == "xxz" else args.model
    B = _sector(args.sector, args.L)
    H = build_model(model, _params(args), sector=B, sparse=B is None)
    if B is None:
        H = H.toarray()
    stats = spacing_ratios(eigh(H, vectors=False).eigenvalues, args.trim)
    write_histogram_csv(args.out, stats.ratios, args.bins)
    summary = {
        "mean_r": stats.mean_r,
        "n_ratios": int(stats.ratios.size),
        "n_levels_used": stats.n_levels_used,
        "n_degenerate": stats.n_degenerate,
        "trim_fraction": stats.trim_fraction,
        "sector": args.sector,
        "sector_dim": int(H.shape[0]),
        "params": _params(args),
        "version": __version__,
    }
    with open(Path(args.out).with_suffix(".json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
    print(f"mean_r = {stats.mean_r:.6f}  ({stats.ratios.size} ratios, sector dim {H.shape[0]})")
    return 0


def cmd_echo(args) -> int:
    eig = _dynamics_eig(args)
    series = choi_echo_series(eig, time_grid(args.T, args.dt), args.estimator,
                              probe_site=args.probe, M=args.M, seed=_seed(args))
    write_series_csv(args.out, series)
    print(f"time-averaged Choi echo = {series.time_average():.6f}")
    return 0


def cmd_purity(args) -> int:
    eig = _dynamics_eig(args)
    p_bar, series = averaged_subsystem_purity(eig, args.N, args.T, args.dt, _seed(args), args.probe)
    write_series_csv(args.out, series)
    print(f"averaged subsystem purity = {p_bar:.6f}")
    return 0


def cmd_ptm(args) -> int:
    eig = _dynamics_eig(args)
    if args.env == "random":
        env = random_env_kets(args.L, 1, _seed(args))[0]
    else:
        env = np.eye(2 ** (args.L - 1)) / 2 ** (args.L - 1)
    times = time_grid(args.T, args.dt)
    channels = [choi_from_unitary(propagator(eig, t), env, args.probe) for t in times]
    write_ptm_csv(args.out, times, channels)
    return 0


def _load_config(args, **overrides) -> SweepConfig:
    if not args.config:
        raise ConfigError("--config is required")
    cfg = SweepConfig.from_json(args.config)
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    return cfg


def cmd_sweep(args) -> int:
    cfg = _load_config(args, base_seed=args.seed)
    records = run_sweep(cfg, args.out, args.jobs)
    failed = sum(bool(r["error"]) for r in records)
    print(f"{len(records)} records written to {args.out} ({failed} with errors)")
    return 0


def cmd_scan(args) -> int:
    cfg = _load_config(args, base_seed=args.seed)
    rows = run_disorder_scan(cfg, args.out, args.jobs)
    for row in rows:
        print(f"h={row['h']}: 1-P={row['impurity_mean']}, 1-echo={row['echo_deviation_mean']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chaoslab", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="level spacing ratios in a symmetry sector")
    _model_args(p)
    _common(p)
    p.add_argument("--sector", default="full", help="even, odd, full or an N_up count")
    p.add_argument("--trim", type=float, default=0.05)
    p.add_argument("--bins", type=int, default=20)
    p.set_defaults(func=cmd_spectrum)

    for name, func, helptext in (("echo", cmd_echo, "Choi echo time series"),
                                 ("purity", cmd_purity, "averaged probe purity"),
                                 ("ptm", cmd_ptm, "Pauli transfer matrices over time")):
        p = sub.add_parser(name, help=helptext)
        _model_args(p)
        _common(p)
        p.add_argument("--T", type=float, default=100.0)
        p.add_argument("--dt", type=float, default=0.1)
        p.add_argument("--probe", type=int, default=1)
        if name == "echo":
            p.add_argument("--estimator", default="exact", choices=ESTIMATORS + ("design_enum",))
            p.add_argument("--M", type=int, default=200)
        if name == "purity":
            p.add_argument("--N", type=int, default=50)
        if name == "ptm":
            p.add_argument("--env", choices=["random", "mixed"], default="random")
        p.set_defaults(func=func)

    p = sub.add_parser("sweep", help="parameter sweep from a JSON config")
    _common(p)
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("scan-disorder", help="Heisenberg disorder scan from a JSON config")
    _common(p)
    p.set_defaults(func=cmd_scan)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "estimator", None) == "design_enum":
        args.estimator = "design"
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"chaoslab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
