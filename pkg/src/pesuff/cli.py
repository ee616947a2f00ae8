"""Command-line entry point.

One binary with subcommands covering the full workflow::

    pesuff simulate   write simulated paths as CSV
    pesuff calibrate  Monte Carlo independence critical value (cached JSON fixture)
    pesuff fit        fit a forecaster, report parameters as JSON
    pesuff test       run the sufficiency test, write verdict JSON and a row CSV
    pesuff bench      full DGP x model grid with metrics, K statistics, verdicts
    pesuff bds        the log-residual BDS experiment (grid CSV + verdict JSON)
    pesuff rv         tick CSV -> hourly realized-volatility CSV

Options may come from a JSON config file (``--config``); explicit flags
win over config values.  All randomness flows from ``--seed``; every
output embeds the effective-config hash so reruns are byte-identical.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 estimation
failure, 1 unexpected error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__, rng
from .bds import BdsConfig, appendix_experiment
from .dgp import DgpKind, DgpSpec, signal_to_noise, simulate
from .errors import (
    ConfigError,
    DegenerateDataError,
    EstimationFailedError,
    InsufficientDataError,
    InvalidArgumentError,
    InvalidDataError,
    PesuffError,
)
from .inference import BootstrapConfig, IndependenceCalibration, calibrate_independence
from .models import FitResult, GpGrid, ModelKind, fit, fit_with_validation, forecast
from .models import metrics as compute_metrics
from .ordinal import SegmentConfig
from .rvpipe import TickTable, build_hourly_rv, make_synthetic_ticks, year_window
from .sufftest import run_sufficiency_test

EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_ESTIMATION = 4

_MODEL_CHOICES = ("oracle", "mean", "arma11", "garch11", "gp_mean", "svr")


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    _atomic_write(path, "\n".join(lines) + "\n")


def _write_json(path: str, payload: dict) -> None:
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _config_hash(params: dict) -> str:
    semantic = {k: v for k, v in params.items() if k not in ("out_dir", "jobs")}
    canonical = json.dumps(semantic, sort_keys=True, default=str).encode()
    return hashlib.sha256(canonical).hexdigest()[:16]


def _provenance(params: dict, **extra) -> dict:
    return {"config_hash": _config_hash(params), "package_version": __version__, **extra}


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return cfg


def _effective(args: argparse.Namespace, parser_defaults: dict) -> dict:
    """Merge config-file values under explicit flags (flags win)."""
    cfg = _load_config(args.config)
    merged = {}
    for key, default in parser_defaults.items():
        flag_value = getattr(args, key)
        if flag_value != default:
            merged[key] = flag_value
        elif key in cfg:
            merged[key] = cfg[key]
        else:
            merged[key] = default
    unknown = set(cfg) - set(parser_defaults)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return merged


def _dgp_kind(name: str) -> DgpKind:
    try:
        return DgpKind(name)
    except ValueError:
        raise ConfigError(f"unknown DGP kind {name!r}; choose from {[k.value for k in DgpKind]}")


def _ensure_out_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


# --- calibration cache -----------------------------------------------------------

def _calibration_key(d, tau, n, paths, replications, quantile, seed, distribution) -> str:
    return _config_hash(
        {
            "d": d,
            "tau": tau,
            "n": n,
            "paths": paths,
            "replications": replications,
            "quantile": quantile,
            "seed": seed,
            "distribution": distribution,
        }
    )


def _calibration_path(out_dir: str, key: str) -> str:
    return os.path.join(out_dir, f"calibration_{key}.json")


def _load_calibration(path: str) -> IndependenceCalibration:
    if not os.path.exists(path):
        raise ConfigError(
            f"calibration fixture not found: {path}; run `pesuff calibrate` first "
            "with matching --d/--tau/--n/--replications"
        )
    return IndependenceCalibration.load(path)


# --- subcommands -----------------------------------------------------------------

def cmd_simulate(p: dict) -> int:
    kind = _dgp_kind(p["kind"])
    out_dir = _ensure_out_dir(p["out_dir"])
    spec = DgpSpec(kind, length=p["n"], seed=p["seed"])
    path = simulate(spec)
    rows = [
        [t, x, o, e]
        for t, (x, o, e) in enumerate(zip(path.observations, path.oracle, path.innovations))
    ]
    out = os.path.join(out_dir, f"{kind.value}_seed{p['seed']}.csv")
    _write_csv(out, ["t", "x", "oracle", "innovation"], rows)
    meta = _provenance(p, seed=p["seed"], snr=signal_to_noise(path))
    _write_json(out + ".meta.json", meta)
    print(f"wrote {out} ({len(rows)} rows)")
    return 0


def cmd_calibrate(p: dict) -> int:
    out_dir = _ensure_out_dir(p["out_dir"])
    paths = 100 if p["quick"] else p["paths"]
    warning = "quick mode: only 100 paths; critical value is noisy" if p["quick"] else None
    key = _calibration_key(p["d"], p["tau"], p["n"], paths, p["replications"], p["quantile"], p["seed"], "normal")
    out = _calibration_path(out_dir, key)
    if os.path.exists(out):
        calib = IndependenceCalibration.load(out)
        print(f"reusing cached calibration {out} (critical value {calib.critical_value:.3f})")
        return 0
    cfg = SegmentConfig(p["d"], p["tau"])
    calib = calibrate_independence(
        cfg,
        p["n"],
        paths=paths,
        seed=p["seed"],
        quantile=p["quantile"],
        replications=p["replications"],
        n_jobs=p["jobs"],
        quick_warning=warning,
    )
    calib.save(out)
    print(f"wrote {out} (critical value {calib.critical_value:.3f})")
    return 0


def _full_series_predictions(kind_name: str, x: np.ndarray, path, p: dict, seed: int):
    """Predictions aligned with the full series, plus the fitted model (if any)."""
    n = x.size
    if kind_name == "oracle":
        return path.oracle, None
    if kind_name == "mean":
        return np.full(n, x.mean()), None
    if kind_name == "svr":
        raise ConfigError(
            "support-vector regression is not available in this package; "
            "choose one of oracle, mean, arma11, garch11, gp_mean"
        )
    train_len = p["train"]
    if not 200 <= train_len < n:
        raise ConfigError(f"--train must be in [200, {n})")
    if kind_name == "gp_mean":
        val_len = p["validation"]
        if not 10 <= val_len < train_len - 100:
            raise ConfigError("--validation must leave at least 100 training observations")
        grid = GpGrid(
            lengthscales=(1.0, 2.0),
            signal_vars=(1.0,),
            noise_vars=(0.1, 1.0),
            lags=(1, 2, 5) if p["quick"] else (1, 2, 3, 5, 10),
        )
        fit_res = fit_with_validation(x[: train_len - val_len], x[train_len - val_len:train_len], grid)
        d = fit_res.params["lag"]
        preds = np.empty(n)
        preds[:d] = float(x[:train_len].mean())
        preds[d:] = forecast(fit_res, x, n - d)
        return preds, fit_res
    kind = ModelKind(kind_name)
    fit_res = fit(kind, x[:train_len], seed=rng.child_seed(seed, "fit"))
    preds = np.empty(n)
    if kind == ModelKind.ARMA11:
        preds[0] = fit_res.params["phi0"] / (1.0 - fit_res.params["phi1"])
    else:
        preds[0] = float(x[:train_len].mean())
    preds[1:] = forecast(fit_res, x, n - 1)
    return preds, fit_res


def _test_one(p: dict, kind_name: str, calib: IndependenceCalibration, seed: int):
    dgp = _dgp_kind(p["dgp"])
    spec = DgpSpec(dgp, length=calib.series_length, seed=rng.child_seed(seed, "path"))
    path = simulate(spec)
    x = path.observations
    preds, fit_res = _full_series_predictions(kind_name, x, path, p, seed)
    bcfg = BootstrapConfig(
        block_length=p["block_length"],
        replications=50 if p["quick"] else p["bootstrap"],
        seed=rng.child_seed(seed, "bootstrap-cfg"),
    )
    verdict = run_sufficiency_test(x, preds, calib.cfg, calib, bcfg, calib.replications, seed=seed)
    test_metrics = compute_metrics(x, preds, path.oracle)
    return path, preds, fit_res, verdict, test_metrics


def _verdict_row(dgp: str, model: str, verdict, m, fit_res, seed: int) -> list:
    params = "" if fit_res is None else ";".join(f"{k}={v:.4g}" for k, v in fit_res.params.items() if isinstance(v, (int, float)))
    return [
        dgp,
        model,
        params,
        m.mse_over_sumsq,
        m.adj_mse_ratio,
        m.bias_ratio,
        m.prediction_error_rate,
        m.performance_class,
        verdict.k_self,
        verdict.k_cross,
        verdict.c_independence,
        "" if verdict.c_difference is None else verdict.c_difference,
        verdict.decision.value,
        seed,
    ]


_ROW_HEADER = [
    "dgp", "model", "params", "mse_over_sumsq", "adj_mse_ratio", "bias_ratio",
    "prediction_error_rate", "performance_class", "k_self", "k_cross",
    "c_independence", "c_difference", "decision", "seed",
]


def cmd_test(p: dict) -> int:
    out_dir = _ensure_out_dir(p["out_dir"])
    calib = _load_calibration(p["calibration"])
    model = p["model"]
    if model not in _MODEL_CHOICES:
        raise ConfigError(f"unknown model {model!r}; choose from {_MODEL_CHOICES}")
    path, preds, fit_res, verdict, m = _test_one(p, model, calib, p["seed"])
    payload = verdict.to_payload()
    payload["provenance"].update(_provenance(p, calibration_file=p["calibration"]))
    payload["metrics"] = {
        "mse_over_sumsq": m.mse_over_sumsq,
        "adj_mse_ratio": m.adj_mse_ratio,
        "bias_ratio": m.bias_ratio,
        "prediction_error_rate": m.prediction_error_rate,
        "performance_class": m.performance_class,
    }
    base = os.path.join(out_dir, f"test_{p['dgp']}_{model}_seed{p['seed']}")
    _write_json(base + ".json", payload)
    _write_csv(base + ".csv", _ROW_HEADER, [_verdict_row(p["dgp"], model, verdict, m, fit_res, p["seed"])])
    print(f"{p['dgp']} + {model}: {verdict.decision.value} "
          f"(k_self={verdict.k_self:.2f}, k_cross={verdict.k_cross:.2f}, c={verdict.c_independence:.2f})")
    print(f"wrote {base}.json and {base}.csv")
    return 0


def cmd_bench(p: dict) -> int:
    out_dir = _ensure_out_dir(p["out_dir"])
    calib = _load_calibration(p["calibration"])
    models = ("arma11", "garch11", "gp_mean")
    rows = []
    for kind in DgpKind:
        sub = dict(p, dgp=kind.value)
        row_seed = rng.child_seed(p["seed"], f"bench/{kind.value}")
        for model in models:
            path, preds, fit_res, verdict, _ = _test_one(sub, model, calib, row_seed)
            n_test = p["test"]
            m = compute_metrics(
                path.observations[-n_test:], preds[-n_test:], path.oracle[-n_test:]
            )
            rows.append(_verdict_row(kind.value, model, verdict, m, fit_res, row_seed))
    out = os.path.join(out_dir, "bench.csv")
    _write_csv(out, _ROW_HEADER, rows)
    meta = _provenance(p, seed=p["seed"], calibration_id=calib.fixture_id, rows=len(rows))
    _write_json(out + ".meta.json", meta)
    print(f"wrote {out} ({len(rows)} rows)")
    return 0


def cmd_bds(p: dict) -> int:
    out_dir = _ensure_out_dir(p["out_dir"])
    calib = _load_calibration(p["calibration"])
    bcfg = BootstrapConfig(
        block_length=p["block_length"],
        replications=50 if p["quick"] else p["bootstrap"],
        seed=rng.child_seed(p["seed"], "bootstrap-cfg"),
    )
    result = appendix_experiment(p["seed"], calib, bcfg, calib.replications, BdsConfig())
    table_path = os.path.join(out_dir, f"bds_seed{p['seed']}.csv")
    result.bds.write_csv(table_path)
    payload = result.verdict.to_payload()
    payload["provenance"].update(_provenance(p))
    payload["bds_fraction_insignificant_5pct"] = result.bds.fraction_insignificant(0.05)
    _write_json(os.path.join(out_dir, f"bds_seed{p['seed']}.verdict.json"), payload)
    print(
        f"BDS grid: {result.bds.fraction_insignificant(0.05) * 100:.1f}% of cells insignificant at 5%; "
        f"sufficiency test: {result.verdict.decision.value}"
    )
    print(f"wrote {table_path}")
    return 0


def cmd_rv(p: dict) -> int:
    out_dir = _ensure_out_dir(p["out_dir"])
    if p["demo"]:
        import pandas as pd

        start, end = year_window(p["demo_year"])
        ticks = make_synthetic_ticks(start - pd.Timedelta(days=2, minutes=10), end, seed=p["seed"])
    elif p["input"]:
        ticks = _read_ticks(p["input"])
    else:
        raise ConfigError("rv needs --input ticks.csv or --demo")
    raw, des = build_hourly_rv(ticks, max_ffill=p["max_ffill"], train_length=p["train_length"])
    rows = [
        [t, int(h), rv_raw, rv_des]
        for t, (h, rv_raw, rv_des) in enumerate(zip(raw.hour_of_day, raw.values, des.values))
    ]
    out = os.path.join(out_dir, "rv.csv")
    _write_csv(out, ["t", "hour", "rv_raw", "rv_deseasonalized"], rows)
    meta = _provenance(p, rows=len(rows), seasonal_factors={str(k): v for k, v in des.seasonal_factors.items()})
    _write_json(out + ".meta.json", meta)
    print(f"wrote {out} ({len(rows)} hourly values)")
    return 0


def _read_ticks(path: str) -> TickTable:
    import pandas as pd

    if not os.path.exists(path):
        raise ConfigError(f"input file not found: {path}")
    df = pd.read_csv(path)
    if list(df.columns) != ["timestamp", "close_bid"]:
        raise InvalidDataError(
            f"{path}: expected header 'timestamp,close_bid', got {','.join(df.columns)}"
        )
    parsed = pd.to_datetime(df["timestamp"], utc=True, errors="coerce")
    if parsed.isna().any():
        line = int(parsed.isna().idxmax()) + 2  # header is line 1
        raise InvalidDataError(f"{path}, line {line}: unparseable timestamp {df['timestamp'][line - 2]!r}")
    prices = pd.to_numeric(df["close_bid"], errors="coerce")
    if prices.isna().any():
        line = int(prices.isna().idxmax()) + 2
        raise InvalidDataError(f"{path}, line {line}: unparseable close_bid {df['close_bid'][line - 2]!r}")
    return TickTable(pd.DataFrame({"timestamp": parsed, "close_bid": prices.astype(float)}))


def cmd_fit(p: dict) -> int:
    out_dir = _ensure_out_dir(p["out_dir"])
    if p["model"] == "svr":
        raise ConfigError("support-vector regression is not available in this package")
    kind = _dgp_kind(p["dgp"])
    spec = DgpSpec(kind, length=p["n"], seed=rng.child_seed(p["seed"], "path"))
    path = simulate(spec)
    train = path.observations[: p["train"]]
    if p["model"] == "gp_mean":
        val = p["validation"]
        grid = GpGrid(lengthscales=(1.0, 2.0), signal_vars=(1.0,), noise_vars=(0.1, 1.0), lags=(1, 2, 5)) if p["quick"] else None
        fit_res = fit_with_validation(train[:-val], train[-val:], grid)
    else:
        fit_res = fit(ModelKind(p["model"]), train, seed=rng.child_seed(p["seed"], "fit"))
    payload = {
        "model": p["model"],
        "dgp": kind.value,
        "params": fit_res.params,
        "convergence": fit_res.convergence,
        "provenance": _provenance(p, seed=p["seed"]),
    }
    out = os.path.join(out_dir, f"fit_{kind.value}_{p['model']}_seed{p['seed']}.json")
    _write_json(out, payload)
    print(f"wrote {out}")
    return 0


# --- parser ---------------------------------------------------------------------

def _add_common(sp, out_default="pesuff-out"):
    sp.add_argument("--config", default=None, help="JSON config file; explicit flags override it")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out-dir", dest="out_dir", default=out_default)
    sp.add_argument("--quick", action="store_true", help="reduced path/replication counts for smoke tests")
    sp.set_defaults(parser_ref=sp)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pesuff", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"pesuff {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="write a simulated path as CSV")
    _add_common(sp)
    sp.add_argument("--kind", default="x1", help="x1..x6")
    sp.add_argument("--n", type=int, default=6360)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("calibrate", help="Monte Carlo independence critical value")
    _add_common(sp)
    sp.add_argument("--d", type=int, default=4)
    sp.add_argument("--tau", type=int, default=1)
    sp.add_argument("--n", type=int, default=6360)
    sp.add_argument("--paths", type=int, default=1000)
    sp.add_argument("--replications", type=int, default=500)
    sp.add_argument("--quantile", type=float, default=0.95)
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("fit", help="fit a forecaster to a simulated path")
    _add_common(sp)
    sp.add_argument("--model", default="arma11", choices=[m for m in _MODEL_CHOICES if m not in ("oracle", "mean")])
    sp.add_argument("--dgp", default="x1")
    sp.add_argument("--n", type=int, default=6360)
    sp.add_argument("--train", type=int, default=5160)
    sp.add_argument("--validation", type=int, default=1160)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("test", help="run the sufficiency test on one DGP/model pair")
    _add_common(sp)
    sp.add_argument("--dgp", default="x1")
    sp.add_argument("--model", default="oracle", help="|".join(_MODEL_CHOICES))
    sp.add_argument("--calibration", required=True, help="calibration fixture JSON")
    sp.add_argument("--train", type=int, default=5160)
    sp.add_argument("--validation", type=int, default=1160)
    sp.add_argument("--block-length", dest="block_length", type=int, default=20)
    sp.add_argument("--bootstrap", type=int, default=500)
    sp.set_defaults(func=cmd_test)

    sp = sub.add_parser("bench", help="full DGP x model experiment grid")
    _add_common(sp)
    sp.add_argument("--calibration", required=True)
    sp.add_argument("--train", type=int, default=5160)
    sp.add_argument("--validation", type=int, default=1160)
    sp.add_argument("--test", type=int, default=1200)
    sp.add_argument("--block-length", dest="block_length", type=int, default=20)
    sp.add_argument("--bootstrap", type=int, default=500)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("bds", help="BDS log-residual experiment")
    _add_common(sp)
    sp.add_argument("--calibration", required=True)
    sp.add_argument("--block-length", dest="block_length", type=int, default=20)
    sp.add_argument("--bootstrap", type=int, default=500)
    sp.set_defaults(func=cmd_bds)

    sp = sub.add_parser("rv", help="hourly realized volatility pipeline")
    _add_common(sp)
    sp.add_argument("--input", default=None, help="ticks CSV (timestamp,close_bid)")
    sp.add_argument("--demo", action="store_true", help="use a synthetic one-year tick fixture")
    sp.add_argument("--demo-year", dest="demo_year", type=int, default=2013)
    sp.add_argument("--train-length", dest="train_length", type=int, default=5160)
    sp.add_argument("--max-ffill", dest="max_ffill", type=int, default=3)
    sp.set_defaults(func=cmd_rv)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    sp = args.parser_ref
    defaults = {
        k: sp.get_default(k)
        for k in vars(args)
        if k not in ("command", "func", "config", "parser_ref")
    }
    try:
        params = _effective(args, defaults)
        params["command"] = args.command
        return args.func(params)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvalidArgumentError, InvalidDataError, InsufficientDataError, DegenerateDataError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except EstimationFailedError as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except PesuffError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
