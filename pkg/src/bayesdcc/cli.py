"""
Command-line interface.

    bayesdcc fit --input returns.csv --error-dist 2 --n-sim 10000 --out-dir out/
    bayesdcc simulate --omega 0.05 --alpha 0.05 --beta 0.85 --a 0.05 --b 0.9 \
        --gamma 0.8 1.25 --error-dist 1 --T 1500 --output sim.csv

``fit`` writes chain.csv, summary.json, volatility.csv, correlation.csv,
acf.csv and density.csv into the output directory.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from bayesdcc import diagnostics
from bayesdcc.config import INIT_KEYS, RunConfig
from bayesdcc.distributions import FAMILY_CODES
from bayesdcc.errors import InvalidInputError, NumericalDomainError
from bayesdcc.io import SAMPLE_DATA, load_returns, write_table
from bayesdcc.mcmc import fit
from bayesdcc.model import ParamVector, simulate_path

PRIOR_KEYS = ("omega", "alpha", "beta", "a", "b", "gamma", "tail")
OUTPUT_FILES = ("chain.csv", "summary.json", "volatility.csv", "correlation.csv", "acf.csv", "density.csv")


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (InvalidInputError, NumericalDomainError, OSError, ValueError, np.linalg.LinAlgError) as exc:
        raise StageError(name, exc) from exc


def _safe(fn, series, *args):
    try:
        return fn(series, *args)
    except NumericalDomainError:
        return None


def _write_outputs(cfg: RunConfig, rm, chain, out: Path, written: list) -> None:
    names = chain.param_names
    burn_in = cfg.effective_burn_in
    summary = diagnostics.summarize(chain, burn_in, cfg.thin)
    kept = diagnostics.retained_draws(chain.draws, burn_in, cfg.thin)
    paths = diagnostics.posterior_paths(chain, rm, burn_in, cfg.thin, cfg.max_draws)

    written.append(write_table(out / "chain.csv", names, chain.draws))

    route = next((e.get("route") for e in chain.phase_log if e.get("phase") == "route"), None)
    summary.extra = {
        "elapsed_seconds": chain.elapsed,
        "route": route,
        "family": chain.family,
        "series_names": rm.series_names,
        "config": cfg.to_dict(),
    }
    p = out / "summary.json"
    p.write_text(json.dumps(summary.to_dict(), indent=2) + "\n", encoding="utf-8")
    written.append(p)

    k = rm.k
    t = np.arange(1, rm.T + 1)
    cols, data = ["t"], [t]
    for i in range(k):
        for stat, arr in (("mean", paths.h_mean), ("lower", paths.h_lower), ("upper", paths.h_upper)):
            cols.append(f"h_{stat}_{i + 1}")
            data.append(arr[:, i])
    written.append(write_table(out / "volatility.csv", cols, np.column_stack(data)))

    cols, data = ["t"], [t]
    pairs = list(zip(*np.triu_indices(k, 1)))
    for c, (i, j) in enumerate(pairs):
        for stat, arr in (("mean", paths.corr_mean), ("lower", paths.corr_lower), ("upper", paths.corr_upper)):
            cols.append(f"rho_{stat}_{i + 1}_{j + 1}")
            data.append(arr[:, c])
    written.append(write_table(out / "correlation.csv", cols, np.column_stack(data)))

    max_lag = min(cfg.max_lag, kept.shape[0] - 1)
    acf = [np.arange(max_lag + 1)]
    for j in range(kept.shape[1]):
        r = _safe(diagnostics.autocorrelation, kept[:, j], max_lag)
        acf.append(np.full(max_lag + 1, np.nan) if r is None else r)
    written.append(write_table(out / "acf.csv", ["lag", *names], np.column_stack(acf)))

    cols, data = [], []
    for j, name in enumerate(names):
        est = _safe(diagnostics.density_estimate, kept[:, j], cfg.density_grid) if kept.shape[0] >= 10 else None
        x, d = est if est is not None else (np.full(cfg.density_grid, np.nan),) * 2
        cols += [f"{name}_x", f"{name}_density"]
        data += [x, d]
    written.append(write_table(out / "density.csv", cols, np.column_stack(data)))


def run_fit(cfg: RunConfig) -> int:
    """Load, estimate, summarise and write outputs. Returns a process exit code."""
    out = Path(cfg.out_dir)
    written: list[Path] = []
    try:
        rm = _stage("load", load_returns, cfg.input_path, cfg.columns)
        init = _stage("config", cfg.build_init, rm.k)
        priors = _stage("config", cfg.build_priors, rm.k)
        sampler = _stage("config", cfg.sampler_config)
        chain = _stage("sample", fit, rm, priors, init, sampler, cfg.family)
        _stage("write", out.mkdir, parents=True, exist_ok=True)
        _stage("diagnostics", _write_outputs, cfg, rm, chain, out, written)
    except StageError as exc:
        for p in written:
            Path(p).unlink(missing_ok=True)
        print(f"bayesdcc fit failed: {exc}", file=sys.stderr)
        return 1
    if cfg.progress:
        print(f"wrote {len(written)} files to {out}", file=sys.stderr)
    return 0


def run_simulate(params, T: int, seed: int, output, R_bar=None) -> int:
    """Write a simulated returns CSV plus ``<output>.json``, a fit config for it."""
    output = Path(output)
    sidecar = output.with_suffix(".json")
    try:
        rm = simulate_path(params, T, seed, R_bar)
        output.parent.mkdir(parents=True, exist_ok=True)
        write_table(output, [f"y{i + 1}" for i in range(rm.k)], rm.values)
        init = {key: v for key, v in params.to_dict().items() if key in INIT_KEYS}
        code = {v: c for c, v in FAMILY_CODES.items()}[params.family]
        cfg = RunConfig(
            input_path=str(output),
            error_dist=code,
            init=init,
            seed=int(seed),
            simulation={
                "T": int(T),
                "seed": int(seed),
                "R_bar": (np.eye(params.k) if R_bar is None else np.asarray(R_bar)).tolist(),
                "params": params.to_dict(),
            },
        )
        cfg.save(sidecar)
    except (InvalidInputError, OSError) as exc:
        output.unlink(missing_ok=True)
        sidecar.unlink(missing_ok=True)
        print(f"bayesdcc simulate failed: {exc}", file=sys.stderr)
        return 1
    return 0


def _add_param_flags(p: argparse.ArgumentParser, suffix: str, help_prefix: str) -> None:
    for key in INIT_KEYS:
        vec = key in ("omega", "alpha", "beta", "gamma")
        p.add_argument(
            f"--{key}{suffix}",
            type=float,
            nargs="+" if vec else None,
            default=None,
            help=f"{help_prefix} {key}" + (" (one value or one per series)" if vec else ""),
        )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bayesdcc", description="Bayesian DCC-GARCH(1,1) estimation")
    sub = parser.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="estimate a model by MCMC")
    f.add_argument("--config", help="JSON run config; flags override its values")
    src = f.add_mutually_exclusive_group()
    src.add_argument("--input", help="returns CSV (comma-separated, optional header)")
    src.add_argument("--sample-data", action="store_true", help="use the bundled synthetic sample")
    f.add_argument("--columns", nargs="+", help="column names or 0-based indices")
    f.add_argument("--error-dist", type=int, choices=(1, 2, 3),
                   help="1 skew-normal, 2 skew-t (default), 3 skew-GED")
    f.add_argument("--n-sim", type=int)
    f.add_argument("--seed", type=int)
    f.add_argument("--burn-in", type=int)
    f.add_argument("--thin", type=int)
    f.add_argument("--out-dir")
    f.add_argument("--mode", choices=("auto", "block", "per-parameter"))
    f.add_argument("--proposal-sds", type=float, nargs="+")
    f.add_argument("--progress", action=argparse.BooleanOptionalAction, default=None)
    f.add_argument("--save-config", help="write the effective config to this path")
    _add_param_flags(f, "-ini", "initial value of")
    for key in PRIOR_KEYS:
        vec = key in ("omega", "alpha", "beta", "gamma")
        for kind in ("mu", "sigma"):
            f.add_argument(f"--{kind}-{key}", type=float, nargs="+" if vec else None, default=None)

    s = sub.add_parser("simulate", help="simulate returns from known parameters")
    s.add_argument("--params", help="JSON file with omega, alpha, beta, a, b, gamma, tail, family")
    _add_param_flags(s, "", "")
    s.add_argument("--error-dist", type=int, choices=(1, 2, 3), default=2)
    s.add_argument("--T", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--r-bar", type=float, nargs="+", help="target correlation matrix, row-major")
    s.add_argument("--output", required=True)
    return parser


def _config_from_args(args) -> RunConfig:
    base = RunConfig.load(args.config).to_dict() if args.config else {}
    base.pop("schema_version", None)
    flags = {
        "input_path": str(SAMPLE_DATA) if args.sample_data else args.input,
        "columns": args.columns,
        "error_dist": args.error_dist,
        "n_sim": args.n_sim,
        "seed": args.seed,
        "burn_in": args.burn_in,
        "thin": args.thin,
        "out_dir": args.out_dir,
        "sampler_mode": args.mode,
        "proposal_sds": args.proposal_sds,
        "progress": args.progress,
    }
    base.update({k: v for k, v in flags.items() if v is not None})
    init = dict(base.get("init", {}))
    priors = dict(base.get("priors", {}))
    for key in INIT_KEYS:
        v = getattr(args, f"{key}_ini")
        if v is not None:
            init[key] = v
    for key in PRIOR_KEYS:
        for kind in ("mu", "sigma"):
            v = getattr(args, f"{kind}_{key}")
            if v is not None:
                priors[f"{kind}_{key}"] = v
    base["init"], base["priors"] = init, priors
    return RunConfig.from_dict(base)


def _params_from_args(args):
    if args.params:
        d = json.loads(Path(args.params).read_text(encoding="utf-8"))
    else:
        d = {key: getattr(args, key) for key in INIT_KEYS if getattr(args, key) is not None}
        d["family"] = FAMILY_CODES[args.error_dist]
    k = len(np.atleast_1d(d["omega"]))
    for key in ("alpha", "beta", "gamma"):
        d.setdefault(key, [1.0] if key == "gamma" else [0.0])
        d[key] = np.broadcast_to(np.asarray(d[key], dtype=float), (k,))
    d.setdefault("a", 0.0)
    d.setdefault("b", 0.0)
    return ParamVector(**d)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "fit":
        try:
            cfg = _config_from_args(args)
        except (InvalidInputError, OSError, TypeError, ValueError) as exc:
            print(f"bayesdcc fit failed: [config] {exc}", file=sys.stderr)
            return 2
        if args.save_config:
            cfg.save(args.save_config)
        return run_fit(cfg)

    try:
        params = _params_from_args(args)
        r_bar = None
        if args.r_bar:
            r_bar = np.asarray(args.r_bar).reshape(params.k, params.k)
    except (InvalidInputError, OSError, TypeError, ValueError, KeyError) as exc:
        print(f"bayesdcc simulate failed: {exc}", file=sys.stderr)
        return 2
    return run_simulate(params, args.T, args.seed, args.output, r_bar)


if __name__ == "__main__":
    sys.exit(main())
