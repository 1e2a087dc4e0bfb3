"""Command-line front end: scans, ensembles and tables as CSV or JSON.

Five subcommands cover the reproduction scenarios: `qfim-scan` (analytic vs
numeric quantum information over mode order and parameter offset),
`cfim-mle` (position-readout information and the tradeoff trace),
`ellipse` (maximum-likelihood ensemble covariance vs theory), `homodyne-mc`
(shot-noise Monte Carlo vs closed-form floors and the homodyne CCRB) and
`expt-limits` (minimal detectable displacement / tilt over mode order).

Option precedence is defaults < config file < command line.  The config
file is an INI document with one section per scenario, keys named like the
long options with underscores.  Stochastic scenarios require a seed and
reproduce their outputs bit-exactly when re-run with it.

Exit codes: 0 success, 2 usage error, 3 physics/precondition error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import os
import sys
import time
from typing import Dict, Optional, Sequence

import numpy as np

from . import __version__
from .errors import NumericalError, PhysicsError
from .estimate import ELLIPSE_CONFIDENCE_1SIGMA, EnsembleConfig, run_ensemble
from .fisher import (
    cfim_homodyne,
    cfim_mle_analytic,
    cfim_mle_numeric,
    qcrb,
    qfim_analytic,
    qfim_numeric,
    tradeoff_trace,
)
from .homodyne import (
    HomodyneConfig,
    beam_splitter_lo_pair,
    checked_weak_value,
    min_detectable,
    shot_noise_mc,
)
from .modes import make_grid
from .weak import final_state_exact, nearly_orthogonal_selection, weak_value

OUTPUT_DIR_ENV = "HGWEAK_OUTPUT_DIR"

STOCHASTIC = {"ellipse", "homodyne-mc"}

# Scenario option defaults, applied after the config file.
DEFAULTS: Dict[str, Dict[str, object]] = {
    "qfim-scan": {
        "n_min": 0, "n_max": 5, "sigma": 1.0, "epsilon": 0.01,
        "g_max": 1e-3, "g_points": 5, "grid_size": 4096,
    },
    "cfim-mle": {
        "n_min": 0, "n_max": 5, "sigma": 1.0, "epsilon": 0.01,
        "d": 0.0, "k": 0.0,
    },
    "ellipse": {
        "n": 1, "sigma": 1.0, "epsilon": 0.01, "n_prime": 500,
        "trials": 2000, "d": 0.0, "k": 0.0,
        "confidence": ELLIPSE_CONFIDENCE_1SIGMA, "allow_singular": False,
    },
    "homodyne-mc": {
        "n": 1, "sigma": 1.0, "epsilon": 0.01, "n_prime": 500.0,
        "n_lo": 1e9, "lambda0": 633e-9, "trials": 10000,
        "d": 0.0, "k": 0.0, "noiseless": False, "noise_model": "gaussian",
    },
    "expt-limits": {
        "n_min": 0, "n_max": 5, "sigma": 1.0, "epsilon": 0.01,
        "n_input": 1e7, "n_lo": 1e9, "lambda0": 633e-9,
    },
}

_BOOL_KEYS = {"allow_singular", "noiseless"}
_INT_KEYS = {"n", "n_min", "n_max", "trials", "g_points", "grid_size", "seed"}
_STR_KEYS = {"noise_model", "format", "out"}


class UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hgweak",
        description="Weak-measurement pointer metrology: information matrices, "
        "ensembles and homodyne precision tables.",
    )
    parser.add_argument("--version", action="version", version=f"hgweak {__version__}")
    sub = parser.add_subparsers(dest="scenario", required=True)

    def common(p):
        p.add_argument("--config", help="INI file with a section per scenario")
        p.add_argument("--seed", type=int, help="RNG seed (required for stochastic runs)")
        p.add_argument("--out", help="output path (default: stdout); relative paths "
                       f"resolve under ${OUTPUT_DIR_ENV} when set")
        p.add_argument("--format", choices=("csv", "json"), help="output format (default csv)")

    p = sub.add_parser("qfim-scan", help="analytic vs numeric quantum information")
    common(p)
    p.add_argument("--n-min", type=int)
    p.add_argument("--n-max", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--g-max", type=float, help="largest d (and k) offset scanned")
    p.add_argument("--g-points", type=int, help="scan points per parameter axis")
    p.add_argument("--grid-size", type=int)

    p = sub.add_parser("cfim-mle", help="position-readout information and tradeoff trace")
    common(p)
    p.add_argument("--n-min", type=int)
    p.add_argument("--n-max", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--d", type=float)
    p.add_argument("--k", type=float)

    p = sub.add_parser("ellipse", help="maximum-likelihood ensemble vs theory covariance")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--n-prime", type=int, help="post-selected samples per trial")
    p.add_argument("--trials", type=int)
    p.add_argument("--d", type=float)
    p.add_argument("--k", type=float)
    p.add_argument("--confidence", type=float)
    p.add_argument("--allow-singular", action="store_true", default=None,
                   help="permit the degenerate n = 0 readout")

    p = sub.add_parser("homodyne-mc", help="shot-noise Monte Carlo vs precision floors")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--n-prime", type=float, help="post-selected photons N'")
    p.add_argument("--n-lo", type=float, help="local-oscillator photons N_LO")
    p.add_argument("--lambda0", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--d", type=float)
    p.add_argument("--k", type=float)
    p.add_argument("--noiseless", action="store_true", default=None)
    p.add_argument("--noise-model", choices=("gaussian", "poisson"))

    p = sub.add_parser("expt-limits", help="minimal detectable displacement / tilt table")
    common(p)
    p.add_argument("--n-min", type=int)
    p.add_argument("--n-max", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--n-input", type=float, help="input photons N before post-selection")
    p.add_argument("--n-lo", type=float)
    p.add_argument("--lambda0", type=float)
    return parser


def _cast(key: str, raw: str):
    if key in _BOOL_KEYS:
        states = configparser.ConfigParser.BOOLEAN_STATES
        if raw.lower() not in states:
            raise UsageError(f"config key {key}: expected a boolean, got {raw!r}")
        return states[raw.lower()]
    if key in _INT_KEYS:
        return int(raw)
    if key in _STR_KEYS:
        return raw
    return float(raw)


def _resolve_options(args: argparse.Namespace) -> Dict[str, object]:
    """Merge defaults < config file < command line into one dict."""
    opts = dict(vars(args))
    scenario = opts.pop("scenario")
    config_path = opts.pop("config", None)
    if config_path:
        ini = configparser.ConfigParser()
        read = ini.read(config_path)
        if not read:
            raise UsageError(f"config file not found: {config_path}")
        if ini.has_section(scenario):
            for key, raw in ini.items(scenario):
                key = key.replace("-", "_")
                if key not in opts:
                    raise UsageError(f"config key {key!r} unknown for scenario {scenario}")
                if opts[key] is None:
                    opts[key] = _cast(key, raw)
    for key, value in DEFAULTS[scenario].items():
        if opts.get(key) is None:
            opts[key] = value
    if opts.get("format") is None:
        opts["format"] = "csv"
    opts["scenario"] = scenario
    return opts


def _require_range(opts) -> range:
    n_min, n_max = int(opts["n_min"]), int(opts["n_max"])
    if n_min < 0 or n_max < n_min:
        raise UsageError(f"empty or invalid mode-order range {n_min}..{n_max}")
    return range(n_min, n_max + 1)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def _jsonable(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return value


def _matrix_named(m: Optional[np.ndarray]) -> Optional[Dict[str, float]]:
    """2x2 matrix flattened row-major with named entries."""
    if m is None:
        return None
    m = np.asarray(m, dtype=float)
    return {"dd": m[0, 0], "dk": m[0, 1], "kd": m[1, 0], "kk": m[1, 1]}


# ----------------------------------------------------------------------
# scenario runners: each returns (columns, rows, extras)

def _run_qfim_scan(opts):
    sigma, eps = float(opts["sigma"]), float(opts["epsilon"])
    sel = nearly_orthogonal_selection(eps)
    a_w = weak_value(sel)
    if int(opts["g_points"]) < 1:
        raise UsageError("need at least one scan point")
    offsets = np.linspace(0.0, float(opts["g_max"]), int(opts["g_points"]))
    rows = []
    for n in _require_range(opts):
        grid = make_grid(n + 2, sigma, int(opts["grid_size"]))

        def state(g, n=n, grid=grid):
            return final_state_exact(sel, n, sigma, g, grid).amplitudes

        analytic = qfim_analytic(n, sigma, a_w).m
        for axis in ("d", "k"):
            for off in offsets:
                g0 = (off, 0.0) if axis == "d" else (0.0, off)
                numeric = qfim_numeric(state, g0, grid=grid, check=False).m
                rows.append([
                    n, g0[0], g0[1],
                    analytic[0, 0], numeric[0, 0],
                    analytic[1, 1], numeric[1, 1],
                ])
    columns = ["n", "d", "k", "q_dd_analytic", "q_dd_numeric",
               "q_kk_analytic", "q_kk_numeric"]
    return columns, rows, {"a_w": {"re": a_w.real, "im": a_w.imag}}


def _run_cfim_mle(opts):
    sigma, eps = float(opts["sigma"]), float(opts["epsilon"])
    g0 = (float(opts["d"]), float(opts["k"]))
    a_w = weak_value(nearly_orthogonal_selection(eps))
    rows = []
    for n in _require_range(opts):
        grid = make_grid(n + 1, sigma)
        analytic = cfim_mle_analytic(n, sigma, a_w)
        numeric = cfim_mle_numeric(n, sigma, a_w, g0, grid)
        quantum = qfim_analytic(n, sigma, a_w)
        rows.append([
            n, g0[0], g0[1],
            analytic.m[0, 0], analytic.m[0, 1], analytic.m[1, 1],
            numeric.m[0, 0], numeric.m[0, 1], numeric.m[1, 1],
            tradeoff_trace(analytic, quantum),
            qcrb(analytic).unbounded,
        ])
    columns = ["n", "d", "k",
               "f_dd_analytic", "f_dk_analytic", "f_kk_analytic",
               "f_dd_numeric", "f_dk_numeric", "f_kk_numeric",
               "trace_f_qinv", "singular"]
    return columns, rows, {"a_w": {"re": a_w.real, "im": a_w.imag}}


def _run_ellipse(opts):
    n = int(opts["n"])
    if n == 0 and not opts["allow_singular"]:
        raise PhysicsError(
            "n = 0 position readout has a singular information matrix; "
            "rerun with --allow-singular to proceed"
        )
    sel = nearly_orthogonal_selection(float(opts["epsilon"]))
    config = EnsembleConfig(
        n=n,
        sigma=float(opts["sigma"]),
        a_w=weak_value(sel),
        g_true=(float(opts["d"]), float(opts["k"])),
        n_samples=int(opts["n_prime"]),
        trials=int(opts["trials"]),
        seed=int(opts["seed"]),
        confidence=float(opts["confidence"]),
    )
    result = run_ensemble(config)
    rows = [[i, e[0], e[1]] for i, e in enumerate(result.estimates)]
    extras = {
        "sample_cov": _matrix_named(result.sample_cov),
        "theory_cov": _matrix_named(result.theory_cov),
        "theory_singular": result.theory_singular,
        "null_direction": None if result.null_direction is None
        else [float(v) for v in result.null_direction],
        "ellipse": None if result.ellipse is None else {
            "semi_major": result.ellipse.semi_axes[0],
            "semi_minor": result.ellipse.semi_axes[1],
            "angle": result.ellipse.angle,
            "confidence": result.ellipse.confidence,
        },
        "n_failed": result.n_failed,
        "n_pinned": result.n_pinned,
    }
    return ["trial", "d_hat", "k_hat"], rows, extras


def _run_homodyne_mc(opts):
    n_prime, n_lo = float(opts["n_prime"]), float(opts["n_lo"])
    if n_lo < 100.0 * n_prime:
        raise UsageError(
            f"n_lo = {n_lo:g} must be at least 100 * n_prime = {100.0 * n_prime:g}"
        )
    cfg = HomodyneConfig(
        a_f=float(np.sqrt(n_prime)),
        a_lo=float(np.sqrt(n_lo)),
        epsilon=float(opts["epsilon"]),
        lambda0=float(opts["lambda0"]),
        sigma=float(opts["sigma"]),
        n=int(opts["n"]),
    )
    g_true = (float(opts["d"]), float(opts["k"]))
    noiseless = bool(opts["noiseless"])
    result = shot_noise_mc(
        g_true, cfg, int(opts["trials"]),
        None if opts["seed"] is None else int(opts["seed"]),
        noiseless=noiseless, noise_model=str(opts["noise_model"]),
    )
    # CCRB of the beam-splitter LO readout, available above the degenerate
    # order; reported beside the Monte-Carlo spread.
    ccrb = {"d": float("nan"), "k": float("nan")}
    if cfg.n >= 1:
        lo1, lo2 = beam_splitter_lo_pair(cfg.n)
        f = cfim_homodyne(
            cfg.n, cfg.sigma, result.a_w,
            (lo1.alpha, lo1.beta), (lo2.alpha, lo2.beta),
            n_trials=cfg.n_signal, n_lo=cfg.n_lo, p_success=1.0,
        )
        bound = qcrb(f)
        if not bound.unbounded:
            ccrb = {"d": float(np.sqrt(bound.matrix[0, 0])),
                    "k": float(np.sqrt(bound.matrix[1, 1]))}
    truth = {
        "d": g_true[0], "k": g_true[1],
        "delta": g_true[0] / 2.0,
        "theta": cfg.lambda0 * g_true[1] / (8.0 * np.pi),
    }
    floor = {
        "d": 2.0 * result.floor_delta,
        "k": 8.0 * np.pi * result.floor_theta / cfg.lambda0,
        "delta": result.floor_delta,
        "theta": result.floor_theta,
    }
    ccrb["delta"] = ccrb["d"] / 2.0
    ccrb["theta"] = cfg.lambda0 * ccrb["k"] / (8.0 * np.pi)
    means = dict(zip(("d", "k", "delta", "theta"), result.mean))
    stds = dict(zip(("d", "k", "delta", "theta"), result.std))
    rows = []
    for q in ("d", "k", "delta", "theta"):
        ratio = stds[q] / floor[q] if floor[q] > 0 else float("nan")
        rows.append([q, truth[q], means[q], stds[q], floor[q], ccrb[q], ratio])
    columns = ["quantity", "truth", "mc_mean", "mc_std", "shot_noise_floor",
               "ccrb_std", "std_over_floor"]
    extras = {
        "a_w": {"re": result.a_w.real, "im": result.a_w.imag},
        "noiseless": noiseless,
        "ccrb_available": cfg.n >= 1,
    }
    return columns, rows, extras


def _run_expt_limits(opts):
    n_prime = float(opts["epsilon"]) ** 2 * float(opts["n_input"]) / 2.0
    if float(opts["n_lo"]) < 100.0 * n_prime:
        raise UsageError(
            f"n_lo = {float(opts['n_lo']):g} must be at least 100 * post-selected "
            f"photons = {100.0 * n_prime:g}"
        )
    rows = []
    for n in _require_range(opts):
        cfg = HomodyneConfig(
            a_f=float(np.sqrt(n_prime)),
            a_lo=float(np.sqrt(float(opts["n_lo"]))),
            epsilon=float(opts["epsilon"]),
            lambda0=float(opts["lambda0"]),
            sigma=float(opts["sigma"]),
            n=n,
        )
        lim = min_detectable(cfg, float(opts["n_input"]))
        rows.append([n, lim.delta, lim.theta, lim.delta_asymptotic, lim.theta_asymptotic])
    columns = ["n", "delta_min", "theta_min", "delta_min_asymptotic", "theta_min_asymptotic"]
    return columns, rows, {}


RUNNERS = {
    "qfim-scan": _run_qfim_scan,
    "cfim-mle": _run_cfim_mle,
    "ellipse": _run_ellipse,
    "homodyne-mc": _run_homodyne_mc,
    "expt-limits": _run_expt_limits,
}


# ----------------------------------------------------------------------
# output

def _config_echo(opts) -> Dict[str, object]:
    echo = {}
    for key, value in sorted(opts.items()):
        if key in ("out", "format"):
            continue
        echo[key] = _jsonable(value)
    return echo


def _render_csv(columns, rows, extras, opts) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for key, value in sorted(extras.items()):
        buf.write(f"# {key} = {json.dumps(_flatten_extra(value))}\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _flatten_extra(value):
    if isinstance(value, dict):
        return {k: _flatten_extra(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_flatten_extra(v) for v in value]
    return _jsonable(value)


def _render_json(columns, rows, extras, opts, wall_time) -> str:
    record = {
        "tool": "hgweak",
        "version": __version__,
        "scenario": opts["scenario"],
        "seed": _jsonable(opts.get("seed")),
        "config": _config_echo(opts),
        "wall_time_s": wall_time,
        "outputs": {
            "columns": list(columns),
            "rows": [[_jsonable(v) for v in row] for row in rows],
            "extras": _flatten_extra(extras),
        },
    }
    return json.dumps(record, indent=2) + "\n"


def _output_path(opts) -> Optional[str]:
    out = opts.get("out")
    if out is None:
        return None
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not os.path.isabs(out):
        return os.path.join(base, out)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _resolve_options(args)
        scenario = opts["scenario"]
        if scenario in STOCHASTIC and opts.get("seed") is None:
            if not (scenario == "homodyne-mc" and opts.get("noiseless")):
                raise UsageError(f"scenario {scenario} is stochastic; --seed is required")
        start = time.perf_counter()
        columns, rows, extras = RUNNERS[scenario](opts)
        wall = time.perf_counter() - start
        if opts["format"] == "csv":
            text = _render_csv(columns, rows, extras, opts)
        else:
            text = _render_json(columns, rows, extras, opts, wall)
        path = _output_path(opts)
        if path is None:
            sys.stdout.write(text)
        else:
            directory = os.path.dirname(path)
            try:
                if directory:
                    os.makedirs(directory, exist_ok=True)
                with open(path, "w", encoding="utf-8", newline="") as fh:
                    fh.write(text)
            except OSError as exc:
                raise UsageError(f"cannot write output file {path}: {exc}") from exc
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except PhysicsError as exc:
        print(f"physics error: {exc}", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
