"""Command-line front end: ``simulate``, ``track`` and ``compare``.

Configuration is an INI file with two sections. Every key is optional; the
defaults are listed in :data:`DEFAULTS`::

    [scenario]
    duration = 60          ; s
    period = 0.1           ; s
    profile = sinusoid     ; constant | ramp | sinusoid | waypoints
    theta = 0              ; constant: azimuth (rad)
    omega = 0.5            ; ramp: rate (rad/s)
    theta0 = 0             ; ramp: start azimuth (rad)
    amplitude = 1.0        ; sinusoid (rad)
    frequency = 0.05       ; sinusoid (Hz)
    offset = 0             ; sinusoid (rad)
    phase = 0              ; sinusoid (rad)
    waypoint_times =       ; waypoints: comma-separated s
    waypoint_angles =      ; waypoints: comma-separated rad
    sigma_r = 0.1          ; measurement noise std (rad)
    outlier_prob = 0       ; clutter probability
    dropout_prob = 0       ; missing-measurement probability
    seed = 0

    [tracker]
    filter = lgekf         ; lgekf | wrapped-ekf
    model = const-accel    ; stationary | pendulum | const-accel | const-vel
    sigma_r = 0.1
    process_noise = 0.01
    c1 = 0.1
    c2 = 0.05
    gate_alpha = 0.95      ; "none" disables gating
    rate_var = 1.0
    reset_after = 5        ; re-initialize after this many consecutive gated
                           ; measurements; "none" disables

Exit codes: 0 success, 1 I/O error, 2 configuration error, 3 equivalence
failure. ``MANIFOLD_KF_LOG`` sets the log level (default ``WARNING``).
"""
from __future__ import annotations

import argparse
import configparser
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__, simkit, tracking
from .tracking import FILTER_KINDS, MODEL_KINDS

log = logging.getLogger("manifold_kf.cli")

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_MISMATCH = 3

EQUIVALENCE_TOL = 1e-9
PROFILES = ("constant", "ramp", "sinusoid", "waypoints")

DEFAULTS = {
    "scenario": {
        "duration": "60",
        "period": "0.1",
        "profile": "sinusoid",
        "theta": "0",
        "omega": "0.5",
        "theta0": "0",
        "amplitude": "1.0",
        "frequency": "0.05",
        "offset": "0",
        "phase": "0",
        "waypoint_times": "",
        "waypoint_angles": "",
        "sigma_r": "0.1",
        "outlier_prob": "0",
        "dropout_prob": "0",
        "seed": "0",
    },
    "tracker": {
        "filter": "lgekf",
        "model": "const-accel",
        "sigma_r": "0.1",
        "process_noise": "0.01",
        "c1": "0.1",
        "c2": "0.05",
        "gate_alpha": "0.95",
        "rate_var": "1.0",
        "reset_after": "5",
    },
}


class ConfigError(ValueError):
    """Bad configuration; the message names the offending key."""


# -- configuration ------------------------------------------------------------


def load_config(path: Optional[str]) -> dict:
    """Merged ``{section: {key: str}}`` view of defaults and ``path``.

    Raises :class:`OSError` if the file cannot be read and
    :class:`ConfigError` on unknown sections or keys.
    """
    merged = {sec: dict(keys) for sec, keys in DEFAULTS.items()}
    if path is None:
        return merged
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    with open(path, encoding="utf-8") as fh:
        try:
            parser.read_file(fh)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
    for sec in parser.sections():
        if sec not in merged:
            raise ConfigError(f"unknown section [{sec}]; expected one of {', '.join(merged)}")
        for key, value in parser.items(sec):
            if key not in merged[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            merged[sec][key] = value.strip()
    return merged


def _number(cfg: dict, sec: str, key: str, kind=float):
    raw = cfg[sec][key]
    try:
        v = kind(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} in [{sec}]") from None
    if kind is float and not math.isfinite(v):
        raise ConfigError(f"{key}: must be finite in [{sec}]")
    return v


def _floats(cfg: dict, sec: str, key: str) -> tuple:
    raw = cfg[sec][key]
    try:
        return tuple(float(s) for s in raw.split(",") if s.strip())
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers in [{sec}], got {raw!r}") from None


def _profile(cfg: dict):
    kind = cfg["scenario"]["profile"]
    try:
        if kind == "constant":
            return simkit.Constant(_number(cfg, "scenario", "theta"))
        if kind == "ramp":
            return simkit.Ramp(_number(cfg, "scenario", "omega"), _number(cfg, "scenario", "theta0"))
        if kind == "sinusoid":
            return simkit.Sinusoid(*(_number(cfg, "scenario", k) for k in ("amplitude", "frequency", "offset", "phase")))
        if kind == "waypoints":
            return simkit.Waypoints(_floats(cfg, "scenario", "waypoint_times"), _floats(cfg, "scenario", "waypoint_angles"))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"waypoint_times/waypoint_angles: {exc}") from None
    raise ConfigError(f"profile: unknown value {kind!r}; expected one of {', '.join(PROFILES)}")


def scenario_from(cfg: dict) -> simkit.ScenarioConfig:
    num = lambda k: _number(cfg, "scenario", k)  # noqa: E731
    try:
        return simkit.ScenarioConfig(
            duration=num("duration"),
            period=num("period"),
            profile=_profile(cfg),
            sigma_r=num("sigma_r"),
            outlier_prob=num("outlier_prob"),
            dropout_prob=num("dropout_prob"),
            seed=_number(cfg, "scenario", "seed", int),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def tracker_from(cfg: dict) -> tuple[str, tracking.TrackerConfig]:
    sec = cfg["tracker"]
    filt = sec["filter"]
    if filt not in FILTER_KINDS:
        raise ConfigError(f"filter: unknown value {filt!r}; expected one of {', '.join(FILTER_KINDS)}")
    if sec["model"] not in MODEL_KINDS:
        raise ConfigError(f"model: unknown value {sec['model']!r}; expected one of {', '.join(MODEL_KINDS)}")
    gate = None if sec["gate_alpha"].lower() == "none" else _number(cfg, "tracker", "gate_alpha")
    reset = None if sec["reset_after"].lower() == "none" else _number(cfg, "tracker", "reset_after", int)
    num = lambda k: _number(cfg, "tracker", k)  # noqa: E731
    try:
        tc = tracking.TrackerConfig(
            model=sec["model"],
            sigma_r=num("sigma_r"),
            process_noise=num("process_noise"),
            c1=num("c1"),
            c2=num("c2"),
            gate_alpha=gate,
            rate_var=num("rate_var"),
            reset_after=reset,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return filt, tc


def _apply_overrides(cfg: dict, args) -> None:
    for flag, sec, key in (
        ("filter", "tracker", "filter"),
        ("model", "tracker", "model"),
        ("gate_alpha", "tracker", "gate_alpha"),
        ("seed", "scenario", "seed"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            cfg[sec][key] = str(value)


# -- manifest -----------------------------------------------------------------


def _seed_or_raw(raw: str):
    try:
        return int(raw)
    except ValueError:
        return raw


def write_manifest(path: Path, command: str, cfg: dict, inputs: dict, outputs: dict, extra=None) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "seed": _seed_or_raw(cfg["scenario"]["seed"]),
        "config": cfg,
        "inputs": inputs,
        "outputs": outputs,
    }
    if extra:
        manifest.update(extra)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# -- commands -----------------------------------------------------------------


def cmd_simulate(args, cfg: dict) -> int:
    scenario = scenario_from(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    truth = simkit.gen_truth(scenario)
    meas = simkit.gen_measurements(truth, scenario)
    paths = {"measurements": out / "measurements.csv", "truth": out / "truth.csv"}
    simkit.write_csv(paths["measurements"], meas)
    simkit.write_csv(paths["truth"], truth)
    write_manifest(out / "manifest.json", "simulate", cfg, {"config": args.config},
                   {k: str(v) for k, v in paths.items()})
    print(f"wrote {len(meas)} steps to {out}")
    return EXIT_OK


def _read_kind(path, kind, what: str) -> list:
    records = simkit.read_csv(path)
    if records and not isinstance(records[0], kind):
        raise simkit.CsvFormatError(path, 1, f"expected a {what} file")
    return records


def _fmt_rmse(value: Optional[float]) -> str:
    if value is None:
        return "n/a"
    return f"{value:.6g} rad ({math.degrees(value):.6g} deg)"


def cmd_track(args, cfg: dict) -> int:
    filt, tc = tracker_from(cfg)
    meas = _read_kind(args.inp, tracking.Measurement, "measurement")
    truth_path = args.truth
    if truth_path is None:
        sibling = Path(args.inp).with_name("truth.csv")
        if sibling.exists() and sibling != Path(args.inp):
            truth_path = str(sibling)
            log.info("using truth from %s", truth_path)
    truth = None
    if truth_path is not None:
        truth = _read_kind(truth_path, tracking.TruthSample, "truth")
        if len(truth) != len(meas):
            raise simkit.CsvFormatError(truth_path, 1, f"{len(truth)} truth rows for {len(meas)} measurements")
    try:
        records = tracking.run_tracker(filt, tc, meas, truth)
    except ValueError as exc:
        # bad timestamps or an empty file are input problems
        raise simkit.CsvFormatError(args.inp, 1, str(exc)) from None
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    simkit.write_csv(out, records)

    theta_rmse = omega_rmse = None
    if truth is not None:
        theta_rmse = tracking.angular_rmse([r.mean[0] for r in records], [s.theta for s in truth])
        if tc.state_dim >= 2:
            omega_rmse = tracking.rmse([r.mean[1] for r in records], [s.omega for s in truth])
    n_gated = sum(r.gated for r in records)
    print(f"filter={filt} model={tc.model} steps={len(records)} gated={n_gated}")
    print(f"azimuth RMSE: {_fmt_rmse(theta_rmse)}")
    print(f"omega RMSE: {_fmt_rmse(omega_rmse).replace(' rad ', ' rad/s ').replace(' deg)', ' deg/s)')}")
    write_manifest(
        out.with_name(out.stem + ".manifest.json"), "track", cfg,
        {"measurements": args.inp, "truth": truth_path, "config": args.config},
        {"results": str(out)},
        {"azimuth_rmse": theta_rmse, "omega_rmse": omega_rmse, "gated": n_gated},
    )
    return EXIT_OK


def cmd_compare(args, cfg: dict) -> int:
    _, tc = tracker_from(cfg)
    scenario = scenario_from(cfg)
    meas = simkit.gen_measurements(simkit.gen_truth(scenario), scenario)
    scale = 2.0 if args.mismatch_q else 1.0
    report = tracking.compare_filters(tc, meas, wrapped_q_scale=scale)
    div = report.max_divergence
    ok = div <= EQUIVALENCE_TOL and report.gate_mismatches == 0
    print(f"model={tc.model} steps={len(meas)} max divergence: {div:.3e} "
          f"(mean {report.max_mean:.3e}, cov {report.max_cov:.3e}, gate mismatches {report.gate_mismatches})")
    print("equivalent" if ok else f"NOT equivalent (tolerance {EQUIVALENCE_TOL:g})")
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_manifest(out / "manifest.json", "compare", cfg, {"config": args.config}, {},
                       {"max_divergence": div, "gate_mismatches": report.gate_mismatches,
                        "mismatch_q": bool(args.mismatch_q), "equivalent": ok})
    return EXIT_OK if ok else EXIT_MISMATCH


# -- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="manifold-kf", description="Azimuth filtering on SO(2) x R^n.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="INI configuration file")
        sp.add_argument("--seed", type=int, help="override [scenario] seed")

    def filters(sp):
        sp.add_argument("--filter", choices=FILTER_KINDS, help="override [tracker] filter")
        sp.add_argument("--model", choices=MODEL_KINDS, help="override [tracker] model")
        sp.add_argument("--gate-alpha", help='override [tracker] gate_alpha ("none" disables)')

    sp = sub.add_parser("simulate", help="generate measurement and truth CSVs")
    common(sp)
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("track", help="run a filter over a measurement CSV")
    common(sp)
    filters(sp)
    sp.add_argument("--in", dest="inp", required=True, help="measurement CSV")
    sp.add_argument("--truth", help="truth CSV (default: truth.csv beside --in, if present)")
    sp.add_argument("--out", required=True, help="results CSV")
    sp.set_defaults(func=cmd_track)

    sp = sub.add_parser("compare", help="check the two filters agree on a simulated scenario")
    common(sp)
    filters(sp)
    sp.add_argument("--out", help="directory for the run manifest")
    sp.add_argument("--mismatch-q", action="store_true",
                    help="debug: double the wrapped filter's process noise")
    sp.set_defaults(func=cmd_compare)
    return p


def _setup_logging() -> None:
    level_name = os.environ.get("MANIFOLD_KF_LOG", "WARNING").upper()
    level = logging.getLevelName(level_name)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        _apply_overrides(cfg, args)
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, simkit.CsvFormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
