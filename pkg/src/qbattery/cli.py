"""Command-line front end: parameter scans to CSV plus JSON summaries,
analytic singularity predictions, and the Haldane phase diagnosis.

Exit codes: 0 success, 1 numeric failure, 2 validation failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import criticality, models, scans
from .kernel import EnergyConvention

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_VALIDATION = 2

MODEL_NAMES = ("dirac1d", "dirac2d", "ising", "haldane")

CSV_HEADER = "x,energy,d1_energy,d2_energy,dropped_modes"

_DEFAULT_CONSTANTS = {
    "dirac1d": {"cutoff": 10.0, "panels": 512, "integrand": "simplified"},
    "dirac2d": {"cutoff": 10.0, "panels": 512, "integrand": "simplified"},
    "ising": {"n_k": 8192},
    "haldane": {"t1": 1.0, "m": 1.0, "a": 1.0, "grid": 256},
}


class ConfigError(ValueError):
    """Invalid run configuration (exit code 2)."""


class NumericError(RuntimeError):
    """Non-finite result during a scan (exit code 1)."""


@dataclass
class RunConfig:
    """Validated scan configuration (see README for the JSON schema)."""

    model: str
    start: float
    stop: float
    steps: int
    delta: float
    constants: dict
    tau: float | None = None
    convention: EnergyConvention = EnergyConvention.PER_MODE
    analyses: list = field(default_factory=list)
    csv_path: str | None = None
    report_path: str | None = None
    sweep_t1: list | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        model = raw.get("model")
        if model not in MODEL_NAMES:
            raise ConfigError(f"model must be one of {MODEL_NAMES}, got {model!r}")
        scan = raw.get("scan")
        if not isinstance(scan, dict):
            raise ConfigError("config needs a 'scan' object with start/stop/steps")
        try:
            start = float(scan["start"])
            stop = float(scan["stop"])
            steps = int(scan["steps"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad scan range: {exc}") from None
        if steps < 8:
            raise ConfigError("scan needs at least 8 steps")
        if not start < stop:
            raise ConfigError("scan range must have start < stop")
        try:
            delta = float(raw["delta"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("config needs a numeric quench increment 'delta'") from None
        if delta == 0.0 or not math.isfinite(delta):
            raise ConfigError("quench increment must be finite and nonzero")

        constants = dict(_DEFAULT_CONSTANTS[model])
        constants.update(raw.get("constants", {}))
        tau = raw.get("tau")
        if tau is not None:
            tau = float(tau)
            if tau < 0.0:
                raise ConfigError("tau must be nonnegative")
        conv_name = raw.get("convention", "per_mode")
        try:
            convention = EnergyConvention(conv_name)
        except ValueError:
            raise ConfigError(f"unknown convention {conv_name!r}") from None

        analyses = raw.get("analyses", [])
        if not isinstance(analyses, list):
            raise ConfigError("'analyses' must be a list")
        for spec in analyses:
            if spec.get("kind") not in ("jump", "log_divergence"):
                raise ConfigError(f"unknown analysis kind in {spec!r}")

        output = raw.get("output", {})
        sweep = raw.get("sweep", {})
        sweep_t1 = sweep.get("t1") if isinstance(sweep, dict) else None
        if sweep_t1 is not None:
            if model != "haldane" or not sweep_t1:
                raise ConfigError("'sweep.t1' is only valid for non-empty haldane sweeps")
            sweep_t1 = [float(v) for v in sweep_t1]

        cfg = cls(
            model=model,
            start=start,
            stop=stop,
            steps=steps,
            delta=delta,
            constants=constants,
            tau=tau,
            convention=convention,
            analyses=analyses,
            csv_path=output.get("csv"),
            report_path=output.get("report"),
            sweep_t1=sweep_t1,
        )
        cfg._validate_model()
        return cfg

    def _validate_model(self):
        c = self.constants
        if self.model in ("dirac1d", "dirac2d"):
            if self.start <= 0.0 <= self.stop:
                raise ConfigError("Dirac scans must keep the battery mass nonzero")
            if not float(c["cutoff"]) > 0.0:
                raise ConfigError("cutoff must be positive")
            if int(c["panels"]) < 16:
                raise ConfigError("need at least 16 quadrature panels")
            if c["integrand"] not in ("simplified", "full"):
                raise ConfigError("integrand must be 'simplified' or 'full'")
        elif self.model == "ising":
            if int(c["n_k"]) < 2:
                raise ConfigError("need at least 2 chain momenta")
        else:
            if not float(c["a"]) > 0.0:
                raise ConfigError("lattice constant must be positive")
            if int(c["grid"]) < 2:
                raise ConfigError("Brillouin-zone grid must be at least 2 x 2")

    def echo(self) -> dict:
        return {
            "model": self.model,
            "scan": {"start": self.start, "stop": self.stop, "steps": self.steps},
            "delta": self.delta,
            "constants": self.constants,
            "tau": self.tau,
            "convention": self.convention.value,
            "analyses": self.analyses,
            "sweep": {"t1": self.sweep_t1} if self.sweep_t1 else None,
        }


def thread_budget() -> int | None:
    """Worker cap from QBATTERY_THREADS (0 or unset = auto, 1 = serial)."""
    raw = os.environ.get("QBATTERY_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"QBATTERY_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError("QBATTERY_THREADS must be >= 0")
    if n == 0:
        return min(os.cpu_count() or 1, 8)
    return n


def _run_one_scan(cfg: RunConfig, t1_override: float | None, workers) -> scans.ScanResult:
    xs = scans.scan_grid(cfg.start, cfg.stop, cfg.steps)
    c = cfg.constants
    if cfg.model == "ising":
        return scans.ising_scan(xs, cfg.delta, int(c["n_k"]), max_workers=workers)
    if cfg.model in ("dirac1d", "dirac2d"):
        dim = 1 if cfg.model == "dirac1d" else 2
        return scans.dirac_scan(
            dim, xs, cfg.delta, float(c["cutoff"]), int(c["panels"]),
            simplified=(c["integrand"] == "simplified"), max_workers=workers,
        )
    t1 = float(c["t1"]) if t1_override is None else t1_override
    return scans.haldane_scan(
        xs, cfg.delta, t1, float(c["m"]), float(c["a"]), int(c["grid"]),
        tau=cfg.tau, convention=cfg.convention, max_workers=workers,
    )


def _auto_critical_values(cfg: RunConfig) -> list[float]:
    """Critical scan values where the drive Hamiltonian closes its gap."""
    if cfg.model == "ising":
        cands = [1.0 - cfg.delta, -1.0 - cfg.delta]
    elif cfg.model in ("dirac1d", "dirac2d"):
        cands = [-cfg.delta]
    else:
        t2c = models.critical_t2(float(cfg.constants["m"]))
        cands = [t2c - cfg.delta, -t2c - cfg.delta]
    return [x for x in cands if cfg.start < x < cfg.stop]


def _run_analyses(cfg: RunConfig, result: scans.ScanResult) -> list[dict]:
    reports = []
    for spec in cfg.analyses:
        kind = spec["kind"]
        xc_raw = spec.get("x_c", "auto")
        xcs = _auto_critical_values(cfg) if xc_raw == "auto" else [float(xc_raw)]
        for xc in xcs:
            if kind == "jump":
                rep = criticality.estimate_jump(
                    result.d1, xc,
                    exclusion=int(spec.get("exclusion", criticality.JUMP_EXCLUSION)),
                    window=int(spec.get("window", criticality.JUMP_WINDOW)),
                )
                entry = rep.to_dict()
                entry["located"] = criticality.locate_jump(result.d1)
            else:
                h = result.d2.step
                w_steps = spec.get("window", list(criticality.LOG_WINDOW_STEPS))
                window = (float(w_steps[0]) * h, float(w_steps[1]) * h)
                rep = criticality.fit_log_divergence(result.d2, xc, window)
                entry = rep.to_dict()
                entry["linear_fit_residual"] = criticality.linear_fit_residual(
                    result.d2, xc, window
                )
            reports.append(entry)
    return reports


def _predictions(cfg: RunConfig) -> dict:
    if cfg.model == "dirac1d":
        return {"jump": criticality.predicted_jump(1, abs(cfg.delta), abs(cfg.delta))}
    if cfg.model == "dirac2d":
        return {"log_coefficient": criticality.predicted_log_coefficient(2, abs(cfg.delta))}
    if cfg.model == "ising":
        return {"critical_h0": 1.0 - cfg.delta}
    t2c = models.critical_t2(float(cfg.constants["m"]))
    return {
        "t2_critical": t2c,
        "critical_scan_values": [t2c - cfg.delta, -t2c - cfg.delta],
    }


def _format_csv(result: scans.ScanResult) -> str:
    n = len(result.scan)
    d1 = {i + 1: v for i, v in enumerate(result.d1.y)}
    d2 = {i + 1: v for i, v in enumerate(result.d2.y)}
    lines = [CSV_HEADER]
    for i in range(n):
        cells = [
            f"{result.scan.x[i]:.17g}",
            f"{result.scan.y[i]:.17g}",
            f"{d1[i]:.17g}" if i in d1 else "",
            f"{d2[i]:.17g}" if i in d2 else "",
            str(int(result.dropped[i])),
        ]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _variant_csv_path(base: str, t1: float) -> str:
    stem, ext = os.path.splitext(base)
    return f"{stem}_t1_{t1:g}{ext or '.csv'}"


def cmd_scan(args) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        cfg = RunConfig.from_dict(raw)
        workers = thread_budget()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    csv_path = args.out or cfg.csv_path
    report_path = args.report or cfg.report_path

    variants = cfg.sweep_t1 if cfg.sweep_t1 else [None]
    runs = []
    try:
        for t1 in variants:
            result = _run_one_scan(cfg, t1, workers)
            runs.append((t1, result))
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # model/grid preconditions surfaced during evaluation
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    report = {
        "model": cfg.model,
        "config": cfg.echo(),
        "singularities": [],
        "predictions": _predictions(cfg),
        "diagnostics": {
            "dropped_modes": int(sum(int(r.dropped.sum()) for _, r in runs)),
            "grid": {
                k: cfg.constants[k]
                for k in ("n_k", "grid", "panels")
                if k in cfg.constants
            },
            "scan_points": cfg.steps,
        },
    }
    for t1, result in runs:
        entries = _run_analyses(cfg, result)
        if t1 is not None:
            for e in entries:
                e["t1"] = t1
        report["singularities"].extend(entries)
        report.setdefault("summary", []).append(
            {
                "t1": t1,
                "max_energy": float(np.max(result.scan.y)),
                "argmax": float(result.scan.x[int(np.argmax(result.scan.y))]),
            }
        )

    if csv_path:
        for t1, result in runs:
            path = csv_path if t1 is None else _variant_csv_path(csv_path, t1)
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(_format_csv(result))
    if report_path:
        with open(report_path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if not csv_path and not report_path:
        json.dump(report, sys.stdout, indent=2, sort_keys=True)
        print()
    return EXIT_OK


def cmd_predict(args) -> int:
    d = args.dim
    if d < 1:
        print("error: dimension must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    if args.delta == 0.0 or not math.isfinite(args.delta):
        print("error: delta must be finite and nonzero", file=sys.stderr)
        return EXIT_VALIDATION
    from .quadrature import sphere_surface

    out = {
        "dim": d,
        "delta": args.delta,
        "sphere_surface": sphere_surface(d),
        "harmonic_number": criticality.harmonic_alt(d),
    }
    if d % 2 == 1:
        out["kind"] = "jump"
        out["jump"] = criticality.predicted_jump(d, abs(args.delta), abs(args.delta))
    else:
        out["kind"] = "log_divergence"
        out["log_coefficient"] = criticality.predicted_log_coefficient(d, abs(args.delta))
    json.dump(out, sys.stdout, indent=2, sort_keys=True)
    print()
    return EXIT_OK


def cmd_phase(args) -> int:
    p = models.HaldaneParams(t1=1.0, t2=args.t2, m=args.m)
    m_minus, m_plus = models.haldane_masses(p)
    out = {
        "m": args.m,
        "t2": args.t2,
        "masses": {"m_minus": m_minus, "m_plus": m_plus},
        "t2_critical": models.critical_t2(args.m),
    }
    try:
        out["chern"] = models.chern_sign(p)
        out["kind"] = "gapped"
    except models.CriticalityError:
        out["chern"] = None
        out["kind"] = "critical"
    if args.numeric_chern:
        if out["kind"] == "critical":
            out["chern_numeric"] = None
        else:
            try:
                out["chern_numeric"] = models.chern_numeric(p, n=args.chern_grid)
            except models.GapTooSmallError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_NUMERIC
    json.dump(out, sys.stdout, indent=2, sort_keys=True)
    print()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qbattery",
        description="Stored energy of double-quench free-fermion batteries "
        "and its critical non-analyticities.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_scan = sub.add_parser("scan", help="run a parameter scan from a JSON config")
    p_scan.add_argument("--config", required=True, help="path to the JSON run config")
    p_scan.add_argument("--out", help="CSV output path (overrides config)")
    p_scan.add_argument("--report", help="JSON summary path (overrides config)")
    p_scan.set_defaults(func=cmd_scan)

    p_pred = sub.add_parser("predict", help="analytic singularity predictors")
    p_pred.add_argument("--dim", type=int, required=True)
    p_pred.add_argument("--delta", type=float, required=True)
    p_pred.set_defaults(func=cmd_predict)

    p_phase = sub.add_parser("phase", help="Haldane phase diagnosis")
    p_phase.add_argument("--m", type=float, required=True)
    p_phase.add_argument("--t2", type=float, required=True)
    p_phase.add_argument("--numeric-chern", action="store_true")
    p_phase.add_argument("--chern-grid", type=int, default=24)
    p_phase.set_defaults(func=cmd_phase)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
