"""Command-line front end writing CSV tables.

Every subcommand reads an optional flat ``key = value`` config file. Lines
starting with ``#`` and trailing ``# ...`` are comments. Any key can also be
given as a flag, e.g. ``--eta-b 0.1``, and flags override the file. Floats are
written with 17 significant digits so that outputs are bit-stable.

Exit codes: 0 on success, 2 for configuration errors, 3 for numerical errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys

import numpy as np

from .bounds import CalibrationSet, calibration_set, measure_probabilities, no_click_curves
from .detectors import DetectorSpec, bloch_vector, seen_prob_coherent
from .errors import ConfigError, EyeWitnessError
from .montecarlo import McConfig, estimate_measured_probabilities, estimate_witness, run_tally
from .source import ExperimentParams, expected_w_closed_form, photon_number_distribution
from .sweep import run_sweep

__all__ = ["main", "parse_config_text", "load_config", "grid"]

_PARAM_DEFAULTS = {
    "g": 0.1,
    "eta_h": 0.5,
    "eta_t": 0.9,
    "T": 0.5,
    "eta_a": 0.8,
    "eta_b": 0.08,
    "theta_a": 1,
    "theta_b": 7,
    "alpha": None,
    "beta": None,
}

DEFAULTS = {
    "eye-curve": {"theta": 7, "eta": 0.08, "nbar_start": 0.0, "nbar_stop": 300.0, "nbar_step": 1.0},
    "calibrate": {"theta": 7, "dim": 64, "n_check": 10, "beta_start": 0.5, "beta_stop": 6.0,
                  "beta_step": 0.05, "curve_nmax": 4, "curves_out": None},
    "sweep": {**_PARAM_DEFAULTS, "T_start": 0.05, "T_stop": 0.95, "T_step": 0.05, "g_lo": 1e-3,
              "g_hi": 1.0, "tol": 1e-7, "pA_star": None, "dim": 64, "workers": 1},
    "validate": {**_PARAM_DEFAULTS, "n_samples": 1_000_000, "seed": 0, "dim": 64, "workers": 1},
    "bloch": {"theta": 7, "eta": 0.08, "amp_start": 0.0, "amp_stop": 12.0, "amp_step": 0.25,
              "phase": 0.0, "dim": 2},
}

HELP = {
    "eye-curve": "probability of seeing a coherent pulse versus mean photon number",
    "calibrate": "calibration amplitudes and displaced-Fock no-click curves",
    "sweep": "witness gap versus beamsplitter transmission, optimized over squeezing",
    "validate": "Monte Carlo estimates against analytic values",
    "bloch": "qubit Bloch vector of the displaced detector observable",
}


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc


def _convert(key: str, raw, default):
    if raw is None or isinstance(raw, (int, float, complex)) and not isinstance(raw, bool):
        return raw
    text = str(raw).strip()
    if text.lower() in ("", "none", "default"):
        return None
    try:
        if isinstance(default, int) and not isinstance(default, bool):
            return int(text)
        if key in ("alpha", "beta"):
            return complex(text.replace(" ", ""))
        if default is None and key.endswith(("_out", "out")):
            return text
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from exc


def resolve(cmd: str, file_values: dict, flag_values: dict) -> dict:
    defaults = DEFAULTS[cmd]
    unknown = set(file_values) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown key(s) for {cmd}: {', '.join(sorted(unknown))}")
    merged = dict(defaults)
    for src in (file_values, flag_values):
        for k, v in src.items():
            if v is not None:
                merged[k] = _convert(k, v, defaults[k])
    return merged


def grid(start: float, stop: float, step: float) -> list[float]:
    """Inclusive arithmetic grid; values rounded to 12 decimals to avoid drift."""
    if not step > 0:
        raise ConfigError("grid step must be positive")
    if stop < start:
        raise ConfigError("grid stop must not precede start")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(n)]


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return format(float(x) + 0.0, ".17g")  # + 0.0 turns -0.0 into 0.0


def _write_csv(path: str | None, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    if path in (None, "-"):
        sys.stdout.write(buf.getvalue())
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    except OSError as exc:
        raise ConfigError(f"cannot write {path!r}: {exc}") from exc


def _params(c: dict) -> ExperimentParams:
    try:
        return ExperimentParams(**{k: c[k] for k in _PARAM_DEFAULTS})
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _detector(theta, eta) -> DetectorSpec:
    try:
        return DetectorSpec(theta, eta)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_eye_curve(c: dict, out: str | None) -> None:
    det = _detector(c["theta"], c["eta"])
    nb = grid(c["nbar_start"], c["nbar_stop"], c["nbar_step"])
    if nb[0] < 0:
        raise ConfigError("nbar must be non-negative")
    p = np.atleast_1d(seen_prob_coherent(det, np.array(nb)))
    _write_csv(out, ["nbar", "p_seen"], zip(nb, p))


def cmd_calibrate(c: dict, out: str | None) -> None:
    det = _detector(c["theta"], 1.0)
    cal = calibration_set(det, dim=c["dim"], n_check=c["n_check"])
    _write_csv(out, ["name", "amplitude"], [("beta0", cal.beta0), ("beta1", cal.beta1), ("beta2", cal.beta2)])
    curves_out = c["curves_out"]
    if curves_out is None and out not in (None, "-"):
        curves_out = out[:-4] + "_curves.csv" if out.endswith(".csv") else out + "_curves.csv"
    rows = []
    for b in grid(c["beta_start"], c["beta_stop"], c["beta_step"]):
        P = no_click_curves(det, b, c["curve_nmax"] + 1, c["dim"])
        rows.extend((b, n, P[n]) for n in range(c["curve_nmax"] + 1))
    if curves_out is not None:
        _write_csv(curves_out, ["beta", "n", "p_no_click"], rows)


def _calibration(c: dict, theta: int) -> CalibrationSet:
    return calibration_set(DetectorSpec(theta), dim=c["dim"])


def cmd_sweep(c: dict, out: str | None) -> None:
    params = _params(c)
    Ts = grid(c["T_start"], c["T_stop"], c["T_step"])
    if Ts[0] < 0 or Ts[-1] > 1:
        raise ConfigError("T grid must lie in [0, 1]")
    if not 0 < c["g_lo"] < c["g_hi"]:
        raise ConfigError("need 0 < g_lo < g_hi")
    cal = _calibration(c, params.theta_b)
    rows = run_sweep(params, Ts, cal, workers=c["workers"], g_lo=c["g_lo"], g_hi=c["g_hi"],
                     tol=c["tol"], pA_star=c["pA_star"])
    _write_csv(out, ["T", "g_opt", "expected_w", "w_ppt", "delta_w"],
               [(r.T, r.g_opt, r.expected_w, r.w_ppt, r.delta_w) for r in rows])


def cmd_validate(c: dict, out: str | None) -> None:
    params = _params(c)
    if c["n_samples"] < 1:
        raise ConfigError("n_samples must be positive")
    cfg = McConfig(c["n_samples"], c["seed"], params)
    cal = _calibration(c, params.theta_b)
    tally = run_tally(cfg, c["workers"])
    rows = []
    w = estimate_witness(cfg, tally=tally)
    rows.append(("expected_w", expected_w_closed_form(params), w.value, w.std_err))
    mc = estimate_measured_probabilities(cfg, cal, tally=tally)
    exact = measure_probabilities(photon_number_distribution(params), DetectorSpec(1), cal.det, cal)
    for key in ("pA_plus", "pAB_pp_b0", "pAB_mp_b0", "pAB_pp_b1", "pAB_mp_b1", "pB_plus_b2"):
        rows.append((key, getattr(exact, key), getattr(mc, key), mc.std_err[key]))
    _write_csv(out, ["quantity", "analytic", "mc_estimate", "std_err", "z"],
               [(q, a, m, s, (m - a) / s if s > 0 else float("nan")) for q, a, m, s in rows])


def cmd_bloch(c: dict, out: str | None) -> None:
    det = _detector(c["theta"], c["eta"])
    amps = grid(c["amp_start"], c["amp_stop"], c["amp_step"])
    phase = np.exp(1j * c["phase"])
    rows = []
    for a in amps:
        bv = bloch_vector(det, a * phase, c["dim"])
        rows.append((a, bv.x, bv.y, bv.z, bv.offset))
    _write_csv(out, ["amplitude", "v_x", "v_y", "v_z", "offset"], rows)


COMMANDS = {
    "eye-curve": cmd_eye_curve,
    "calibrate": cmd_calibrate,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
    "bloch": cmd_bloch,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eyewitness", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, defaults in DEFAULTS.items():
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--out", help="output CSV path (default: stdout)")
        if "seed" not in defaults:
            p.add_argument("--seed", help="random seed (ignored: this command is deterministic)")
        if "dim" not in defaults:
            p.add_argument("--dim", help="truncation (ignored: this command needs none)")
        for key, val in defaults.items():
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=key, default=None, metavar=key.upper(),
                           help=f"default: {val}")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    cmd = args.command
    try:
        file_values = load_config(args.config) if args.config else {}
        flags = {k: getattr(args, k) for k in DEFAULTS[cmd]}
        cfg = resolve(cmd, file_values, flags)
        COMMANDS[cmd](cfg, args.out)
    except ConfigError as exc:
        print(f"ConfigError: {exc}", file=sys.stderr)
        return 2
    except EyeWitnessError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except (ValueError, ArithmeticError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
