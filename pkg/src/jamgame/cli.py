"""Command-line entry point: equilibrium, sweep, simulate, verify."""

from __future__ import annotations

import argparse
import dataclasses
import io
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core_model import BASELINE, GameParams, MarkovParams
from .equilibrium import SOLVERS, SingularSystemError, compute_equilibrium
from .estimation import InfeasibleObservationError, expected_census, observe
from .simulation import PlacementError, run
from .verification import best_response_scan, indifference_check, joint_scan

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DEGENERATE = 3
EXIT_VERIFY = 4

SWEEPABLE = ("G_s", "G_m", "C_s", "C_m", "L_s", "n_m", "n_s", "alpha", "beta")
INT_KEYS = ("n_N", "n_s", "n_m", "steps", "slots", "seed")
FLOAT_KEYS = ("C_s", "C_m", "G_s", "G_m", "L_s", "alpha", "beta", "from", "to")
STR_KEYS = ("sweep", "output", "mode")

SWEEP_HEADER = ("param_value", "P_ad", "P_bd", "P_cd", "P_AD", "P_BD", "P_CD",
                "U_s", "U_m", "degenerate_flags")
SIM_HEADER = ("slot", "n_1", "n_2", "n_3", "n_4", "n_5", "n_6", "n_7", "n_8",
              "U_s", "U_m", "jam_count", "success_count", "left_network")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    param: str
    start: float
    stop: float
    steps: int

    def values(self) -> list[float]:
        vals = np.linspace(self.start, self.stop, self.steps)
        if self.param in ("n_m", "n_s"):
            return [int(round(v)) for v in vals]
        return [float(v) for v in vals]


@dataclass(frozen=True)
class RunConfig:
    params: GameParams = BASELINE
    sweep: SweepSpec | None = None
    slots: int = 1000
    seed: int = 0
    output: str | None = None
    mode: str = "nash"


def _baseline_values() -> dict:
    p = BASELINE
    return {"n_N": p.n_N, "n_s": p.n_s, "n_m": p.n_m, "C_s": p.C_s, "C_m": p.C_m,
            "G_s": p.G_s, "G_m": p.G_m, "L_s": p.L_s, "alpha": p.alpha, "beta": p.beta}


def make_params(values: dict) -> GameParams:
    return GameParams(
        n_N=values["n_N"], n_s=values["n_s"], n_m=values["n_m"],
        C_s=values["C_s"], C_m=values["C_m"], G_s=values["G_s"], G_m=values["G_m"],
        L_s=values["L_s"], markov=MarkovParams(values["alpha"], values["beta"]),
    )


def with_param(params: GameParams, name: str, value) -> GameParams:
    if name in ("alpha", "beta"):
        return dataclasses.replace(
            params, markov=dataclasses.replace(params.markov, **{name: value}))
    return dataclasses.replace(params, **{name: value})


def parse_config_text(text: str) -> RunConfig:
    raw: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            if key in INT_KEYS:
                number = float(value)
                if number != int(number):
                    raise ValueError
                raw[key] = int(number)
            elif key in FLOAT_KEYS:
                raw[key] = float(value)
            elif key in STR_KEYS:
                if not value:
                    raise ValueError
                raw[key] = value
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value {value!r} for {key}") from None

    values = _baseline_values()
    values.update({k: v for k, v in raw.items() if k in values})
    try:
        params = make_params(values)
    except ValueError as exc:
        raise ConfigError(f"invalid parameters: {exc}") from None

    sweep = None
    if "sweep" in raw:
        name = raw["sweep"]
        if name not in SWEEPABLE:
            raise ConfigError(f"sweep: unknown parameter {name!r}")
        for key in ("from", "to", "steps"):
            if key not in raw:
                raise ConfigError(f"{key}: required when sweep is set")
        if raw["steps"] < 2:
            raise ConfigError("steps: must be at least 2")
        sweep = SweepSpec(name, raw["from"], raw["to"], raw["steps"])
        if name in ("n_m", "n_s"):
            for v in np.linspace(sweep.start, sweep.stop, sweep.steps):
                if abs(v - round(v)) > 1e-9:
                    raise ConfigError(f"sweep: {name} values must be integers, got {v}")
        try:
            for v in sweep.values():
                with_param(params, name, v)
        except ValueError as exc:
            raise ConfigError(f"sweep: {exc}") from None
    elif any(k in raw for k in ("from", "to", "steps")):
        raise ConfigError("from/to/steps given without sweep")

    if raw.get("slots", 1) < 1:
        raise ConfigError("slots: must be at least 1")
    mode = raw.get("mode", "nash")
    if mode not in SOLVERS:
        raise ConfigError(f"mode: expected one of {sorted(SOLVERS)}")
    return RunConfig(params, sweep, raw.get("slots", 1000), raw.get("seed", 0),
                     raw.get("output"), mode)


def parse_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config_text(text)


def fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_csv(rows, header, path: str | None) -> None:
    buf = io.StringIO(newline="")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")
    if path is None:
        sys.stdout.write(buf.getvalue())
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())


def baseline_result(params: GameParams, mode: str = "nash"):
    """Equilibrium when both stations observe the expected census."""
    s_obs, m_obs = observe(expected_census(params))
    return compute_equilibrium(s_obs, m_obs, params, mode)


def thread_count() -> int:
    try:
        return max(int(os.environ.get("JAMGAME_THREADS", "0")), 0)
    except ValueError:
        return 0


def sweep_rows(config: RunConfig) -> list[tuple]:
    spec = config.sweep

    def point(value):
        params = with_param(config.params, spec.param, value)
        try:
            r = baseline_result(params, config.mode)
        except (InfeasibleObservationError, SingularSystemError, ValueError) as exc:
            nan = float("nan")
            return (value, nan, nan, nan, nan, nan, nan, nan, nan,
                    f"error:{type(exc).__name__}")
        flags = list(r.degenerate)
        if r.leave:
            flags.append("leave")
        return (value, *r.secondary.switch(), *r.malicious.switch(), r.U_s, r.U_m,
                ";".join(flags))

    values = spec.values()
    workers = thread_count()
    if workers:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(point, values))
    return [point(v) for v in values]


def cmd_equilibrium(config: RunConfig, strict: bool = False) -> int:
    r = baseline_result(config.params, config.mode)
    print(f"mode      {config.mode}")
    for name, value in zip(("P_ad", "P_bd", "P_cd"), r.secondary.switch()):
        print(f"{name:<9} {value:.10f}")
    for name, value in zip(("P_AD", "P_BD", "P_CD"), r.malicious.switch()):
        print(f"{name:<9} {value:.10f}")
    print(f"U_s       {r.U_s:.10f}")
    print(f"U_m       {r.U_m:.10f}")
    print(f"leave     {'yes' if r.leave else 'no'}")
    for name, bound in sorted(r.boundary.items()):
        print(f"clamped   {name}={bound:g}")
    for side, res in r.residuals.items():
        print(f"residual  {side} {res:.3e}")
    for note in r.degenerate:
        print(f"note      {note}")
    if strict and any("fallback" in n for n in r.degenerate):
        return EXIT_DEGENERATE
    return EXIT_OK


def cmd_sweep(config: RunConfig, out: str | None, strict: bool = False) -> int:
    if config.sweep is None:
        raise ConfigError("sweep: no sweep parameter configured")
    rows = sweep_rows(config)
    write_csv(rows, SWEEP_HEADER, out)
    if strict and any("error" in r[-1] or "fallback" in r[-1] for r in rows):
        return EXIT_DEGENERATE
    return EXIT_OK


def cmd_simulate(config: RunConfig, out: str | None, seed: int) -> int:
    logs = run(config.params, seed, config.slots, mode=config.mode)
    rows = [(log.slot, *(int(round(v)) for v in log.census.counts()), log.U_s, log.U_m,
             log.jam_count, log.success_count, log.left_network) for log in logs]
    write_csv(rows, SIM_HEADER, out)
    return EXIT_OK


def cmd_verify(config: RunConfig, perturb: bool = False) -> int:
    params = config.params
    r = baseline_result(params, config.mode)
    x, y = r.secondary, r.malicious
    if perturb:
        values = list(x.switch())
        values[0] = values[0] + 0.05 if values[0] <= 0.95 else values[0] - 0.05
        x = type(x)(*values)
    ok = True
    print(f"verify mode={config.mode}" + (" (perturbed P_ad by 0.05)" if perturb else ""))
    for note in r.degenerate:
        print(f"note   {note}")
    for side, census, own, rival in (("secondary", r.secondary_census, x, y),
                                     ("malicious", r.malicious_census, y, x)):
        for rep in best_response_scan(census, params, own, rival, side):
            ok &= rep.passed
            status = "skip (no equation)" if rep.skipped else ("PASS" if rep.passed else "FAIL")
            print(f"scan   {rep.variable:<5} best={rep.best_value:.2f} gain={rep.gain:+.3e} "
                  f"{status}")
        rep = joint_scan(census, params, own, rival, side)
        print(f"joint  {side:<9} gain={rep.gain:+.3e} "
              f"{'pass' if rep.passed else 'fail'} (advisory)")
    for item in indifference_check(r, params, s_profile=x, m_profile=y):
        ok &= item.passed
        print(f"indiff {item.variable:<5} {item.kind:<8} switch-stay={item.gap:+.3e} "
              f"{'PASS' if item.passed else 'FAIL'}")
    print("verification " + ("passed" if ok else "FAILED"))
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jamgame", description=__doc__)
    parser.add_argument("command", choices=("equilibrium", "sweep", "simulate", "verify"))
    parser.add_argument("--config", required=True, help="key = value configuration file")
    parser.add_argument("--out", help="output CSV path (default: config output, else stdout)")
    parser.add_argument("--seed", type=int, help="override the configured seed")
    parser.add_argument("--strict", action="store_true",
                        help="exit with status 3 on numerical degeneracy")
    parser.add_argument("--perturb", action="store_true",
                        help="verify: nudge P_ad by 0.05 before checking")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = parse_config(args.config)
        out = args.out or config.output
        seed = config.seed if args.seed is None else args.seed
        if args.command == "equilibrium":
            return cmd_equilibrium(config, args.strict)
        if args.command == "sweep":
            return cmd_sweep(config, out, args.strict)
        if args.command == "simulate":
            return cmd_simulate(config, out, seed)
        return cmd_verify(config, args.perturb)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InfeasibleObservationError, PlacementError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SingularSystemError as exc:
        print(f"degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
