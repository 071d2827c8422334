"""Command-line entry point: ``hemadde <command> [options]``.

Commands: equilibria, stability, hopf, simulate, sweep, verify.
Exit codes: 0 ok, 2 bad configuration, 3 numerical failure, 4 failed verification.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .diagnostics import (NotOscillating, convergence_check, estimate_period, limit_check,
                          period_agreement)
from .integrator import NumericalError, y_explicit
from .kernel import moments, weighted_cos_sin, weighted_cos_sin_prime
from .model import (ModelParams, equilibria, existence, positive_equilibrium,
                    positive_root_bisect)
from .simulation import RunSpec, simulate
from .stability import (NoCrossing, NoInversion, char_trivial_classify, classify_positive,
                        delta_tilde, hopf_locate, stability_report, trivial_real_root)
from .trajectory import format_float

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4

MODEL_KEYS = ("delta", "gamma", "beta0", "theta", "n", "density")
RUN_DEFAULTS = {"mu": 1.0, "t_end": 1000.0, "step": 0.01, "history_step": None,
                "correction_passes": 2, "t_discard": 300.0}


class ConfigError(ValueError):
    pass


# -- configuration --------------------------------------------------------------

def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_set(cfg: dict, item: str) -> None:
    if "=" not in item:
        raise ConfigError(f"--set expects key=value, got {item!r}")
    key, text = item.split("=", 1)
    parts = key.strip().split(".")
    node = cfg
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"--set {key}: {p!r} is not a section")
    node[parts[-1]] = _parse_value(text)


@dataclass(frozen=True)
class Config:
    params: ModelParams
    run: dict

    def run_spec(self) -> RunSpec:
        r = self.run
        return RunSpec(self.params, float(r["mu"]), float(r["t_end"]), float(r["step"]),
                       None if r["history_step"] is None else float(r["history_step"]),
                       int(r["correction_passes"]))

    def to_dict(self) -> dict:
        return {**self.params.to_dict(), **self.run}


def load_config(path: str | None, sets: list[str] | None = None) -> Config:
    raw: dict = {}
    base_dir = None
    if path:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e.strerror}") from e
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be an object")
        base_dir = p.parent
    for item in sets or []:
        apply_set(raw, item)
    unknown = set(raw) - set(MODEL_KEYS) - set(RUN_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    try:
        params = ModelParams.from_dict({k: raw[k] for k in MODEL_KEYS if k in raw}, base_dir)
    except (KeyError, ValueError, TypeError, OSError) as e:
        raise ConfigError(f"model parameters: {e}") from e
    run = {k: raw.get(k, v) for k, v in RUN_DEFAULTS.items()}
    for k, v in run.items():
        if v is None and k == "history_step":
            continue
        if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
            raise ConfigError(f"key {k!r}: expected a finite number, got {v!r}")
    if run["t_end"] <= 0 or run["step"] <= 0 or run["mu"] < 0:
        raise ConfigError("t_end and step must be > 0, mu >= 0")
    return Config(params, run)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(type(o).__name__)


# -- commands -------------------------------------------------------------------

def cmd_equilibria(cfg: Config) -> dict:
    p = cfg.params
    ex = existence(p)
    eqs = equilibria(p)
    pos = positive_equilibrium(p)
    return {"alpha": ex.threshold_alpha, "exists_positive": ex.exists_positive,
            "boundary": ex.boundary, "delta_tilde": delta_tilde(p),
            "equilibria": [e.to_dict() for e in eqs],
            "beta_star": None if pos is None else pos.beta_star,
            "gamma_zero_branch": p.gamma == 0.0, "params": p.to_dict()}


def cmd_stability(cfg: Config) -> dict:
    rep = stability_report(cfg.params)
    return {"trivial": rep.trivial, "positive": rep.positive,
            "delta_tilde": rep.delta_tilde, **rep.details}


def cmd_hopf(cfg: Config) -> dict:
    return hopf_locate(cfg.params).to_dict()


def cmd_simulate(cfg: Config, out_path, stride: float | None = 0.1, plot: bool = False) -> dict:
    spec = cfg.run_spec()
    traj = simulate(spec)
    out = Path(out_path)
    traj.to_csv(out, stride)
    summary = summarize_run(cfg, traj)
    sidecar = {"config": cfg.to_dict(), "csv": out.name, "output_stride": stride,
               "diagnostics": summary}
    if plot:
        from .plotting import plot_run
        pos = positive_equilibrium(cfg.params)
        written = plot_run(traj, out, None if pos is None else pos.x_star,
                           title=f"n={cfg.params.hill.n:g}, delta={cfg.params.delta:g}")
        sidecar["figures"] = [p.name for p in written]
    out.with_suffix(".json").write_text(_dump(sidecar) + "\n")
    return sidecar


def summarize_run(cfg: Config, traj) -> dict:
    p = cfg.params
    t_discard = float(cfg.run["t_discard"])
    res: dict = {"t_end": float(traj.t[-1]), "x_end": float(traj.x[-1]),
                 "y_end": float(traj.y[-1])}
    pos = positive_equilibrium(p)
    target = pos if pos is not None else equilibria(p)[0]
    if traj.t[-1] - traj.t[0] > 200.0:
        conv = convergence_check(traj, target, 200.0, p)
        res["converged_to"] = target.kind if conv.converged else None
        res["max_deviation"] = conv.max_dev
    res["period_x"] = res["period_y"] = None
    if traj.t[-1] > t_discard:
        try:
            px = estimate_period(traj, "x", t_discard)
            py = estimate_period(traj, "y", t_discard)
        except NotOscillating:
            pass
        else:
            res.update(period_x=px.period, period_y=py.period, period_stderr=px.period_stderr,
                       n_cycles=px.n_cycles, x_min=px.amplitude_min, x_max=px.amplitude_max,
                       confident=px.confident, xy_period_mismatch=period_agreement(px, py))
    return res


SWEEP_PARAMS = ("delta", "gamma", "beta0", "theta", "n")
SWEEP_FIELDS = ["index", "param", "value", "exists_positive", "trivial", "positive",
                "beta_star", "beta_star_c", "period"]


def _sweep_point(args) -> dict:
    i, name, value, cfg, with_period = args
    p = cfg.params.with_values(**{name: value})
    row = {"index": i, "param": name, "value": value, "exists_positive": False,
           "trivial": char_trivial_classify(p), "positive": "", "beta_star": "",
           "beta_star_c": "", "period": ""}
    pos = positive_equilibrium(p)
    if pos is not None:
        row["exists_positive"] = True
        row["beta_star"] = pos.beta_star
        hopf = None
        if pos.beta_star < delta_tilde(p):
            hopf = hopf_locate(p)
            row["beta_star_c"] = hopf.beta_star_c
        row["positive"] = classify_positive(p, hopf)
    if with_period:
        traj = simulate(Config(p, cfg.run).run_spec())
        try:
            row["period"] = estimate_period(traj, "x", float(cfg.run["t_discard"])).period
        except NotOscillating:
            pass
    return row


def cmd_sweep(cfg: Config, name: str, lo: float, hi: float, count: int, jobs: int = 1,
              with_period: bool = False) -> list[dict]:
    if name not in SWEEP_PARAMS:
        raise ConfigError(f"cannot sweep {name!r}; choose from {', '.join(SWEEP_PARAMS)}")
    if count < 1 or not lo <= hi or (count > 1 and lo == hi):
        raise ConfigError(f"empty sweep range [{lo}, {hi}] with {count} points")
    values = np.linspace(lo, hi, count) if count > 1 else np.array([lo])
    tasks = [(i, name, float(v), cfg, with_period) for i, v in enumerate(values)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]
    return sorted(rows, key=lambda r: r["index"])


def write_sweep_csv(rows: list[dict], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SWEEP_FIELDS)
    for r in rows:
        w.writerow([format_float(v) if isinstance(v, float) else v
                    for v in (r[k] for k in SWEEP_FIELDS)])


# -- verification suite ---------------------------------------------------------

@dataclass
class Check:
    name: str
    passed: bool
    value: float
    tol: str

    def line(self) -> str:
        v = "nan" if self.value is None else format_float(self.value)
        return f"{self.name:<34} {'PASS' if self.passed else 'FAIL'}  {v}  {self.tol}"


def _uniform_closed_form(gamma: float, omega: float, tau: float = 7.0):
    s = complex(gamma, omega)
    L = (1.0 - np.exp(-tau * s)) / (tau * s) if s != 0 else 1.0
    return L.real, -L.imag


def _run(params: ModelParams, t_end: float, step: float = 0.01, mu: float = 1.0,
         history_step: float | None = None):
    return simulate(RunSpec(params, mu, t_end, step, history_step))


def order_factor(params: ModelParams, base_step: float, t: float = 100.0) -> float:
    xs = []
    for h in (base_step, base_step / 2, base_step / 4):
        xs.append(float(_run(params, t, h, history_step=h).x_at(t)))
    return abs(xs[0] - xs[1]) / abs(xs[1] - xs[2])


def verify_checks(order_step: float = 0.1, runs: bool = True) -> list[Check]:
    base = ModelParams()
    d = base.density
    out: list[Check] = []

    errs = [abs(moments(d, base.gamma).K - (1 - math.exp(-1.4)) / 1.4)]
    for w in (0.0, 0.1, 1.0, 5.0, 20.0):
        C, S = weighted_cos_sin(d, base.gamma, w)
        Cc, Sc = _uniform_closed_form(base.gamma, w)
        errs += [abs(C - Cc), abs(S - Sc)]
    out.append(Check("a_kernel_closed_form", max(errs) <= 1e-10, max(errs), "<= 1e-10"))

    errs = []
    h = 1e-5
    for w in (0.1, 1.0, 5.0, 20.0):
        dC, dS = weighted_cos_sin_prime(d, base.gamma, w)
        Cp, Sp = weighted_cos_sin(d, base.gamma, w + h)
        Cm, Sm = weighted_cos_sin(d, base.gamma, w - h)
        errs += [abs(dC - (Cp - Cm) / (2 * h)), abs(dS - (Sp - Sm) / (2 * h))]
    out.append(Check("f_derivative_vs_fd", max(errs) <= 1e-6, max(errs), "<= 1e-6"))

    errs = []
    for n in (1.5, 2.42, 3.0, 4.0, 8.0):
        p = base.with_values(n=n)
        errs.append(abs(positive_equilibrium(p).x_star - positive_root_bisect(p)))
    out.append(Check("e_equilibrium_vs_bisection", max(errs) <= 1e-10, max(errs), "<= 1e-10"))

    g0 = ModelParams(gamma=0.0)
    m0 = g0.moments
    err = abs(m0.Y0w - 3.5)
    out.append(Check("g0_weighted_mean_branch", err <= 1e-12, err, "<= 1e-12"))
    eq = positive_equilibrium(g0.with_values(n=3.0))
    err = abs(eq.y_star - g0.delta * eq.x_star * 3.5) / eq.y_star
    out.append(Check("g0_y_star_branch", err <= 1e-12, err, "<= 1e-12 rel"))

    if not runs:
        return out

    p3 = base.with_values(n=3.0)
    tr = _run(p3, 500.0)
    errs = [abs(y_explicit(tr, p3, t) - float(tr.y_at(t))) / abs(float(tr.y_at(t)))
            for t in (100.0, 500.0)]
    out.append(Check("b_y_explicit_vs_integrated", max(errs) <= 1e-5, max(errs), "<= 1e-5 rel"))

    p242 = base.with_values(n=2.42)
    tr = _run(p242, 1000.0)
    try:
        r = limit_check(tr, p242, positive_equilibrium(p242))
    except ValueError:
        r = math.inf
    out.append(Check("c_limit_residual", r < 1e-3, r, "< 1e-3"))

    try:
        fac = order_factor(p242, order_step)
    except (ValueError, NumericalError):
        fac = math.nan
    out.append(Check("d_integrator_order", 8.0 <= fac <= 32.0, fac, "in [8, 32]"))

    pg = g0.with_values(n=3.0)
    tr = _run(pg, 1000.0, mu=3.0)
    try:
        r = limit_check(tr, pg, positive_equilibrium(pg))
    except ValueError:
        r = math.inf
    out.append(Check("g0_limit_residual", r < 1e-3, r, "< 1e-3"))
    return out


# -- argument handling ------------------------------------------------------------

def _table(d: dict, keys) -> str:
    lines = []
    for k in keys:
        v = d.get(k)
        lines.append(f"  {k:<22} {format_float(v) if isinstance(v, float) else v}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hemadde", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config key (dotted for density, e.g. density.tau_min=1)")

    sp = sub.add_parser("equilibria", help="equilibria and existence threshold (JSON)")
    common(sp)
    for name, help_ in (("stability", "stability verdicts"), ("hopf", "locate the Hopf point")):
        sp = sub.add_parser(name, help=help_)
        common(sp)
        sp.add_argument("--json", action="store_true", help="print JSON instead of a table")

    sp = sub.add_parser("simulate", help="integrate and write CSV + JSON sidecar")
    common(sp)
    sp.add_argument("--out", required=True, help="CSV output path")
    sp.add_argument("--stride", type=float, default=0.1, help="output sampling (days)")
    sp.add_argument("--plot", action="store_true", help="also write PNG figures")

    sp = sub.add_parser("sweep", help="verdict (and period) across a parameter range")
    common(sp)
    sp.add_argument("--param", required=True)
    sp.add_argument("--range", nargs=2, type=float, required=True, metavar=("LO", "HI"))
    sp.add_argument("--count", type=int, required=True)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--period", action="store_true", help="simulate each point for its period")
    sp.add_argument("--out", help="CSV path (default stdout)")

    sp = sub.add_parser("verify", help="run the oracle checks")
    sp.add_argument("--step", type=float, default=0.1, help="base step of the order check")
    sp.add_argument("--no-runs", action="store_true", help="skip simulation-based checks")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            checks = verify_checks(args.step, not args.no_runs)
            for c in checks:
                print(c.line())
            ok = all(c.passed for c in checks)
            print(f"{sum(c.passed for c in checks)}/{len(checks)} passed")
            return EXIT_OK if ok else EXIT_VERIFY

        cfg = load_config(args.config, args.set)
        if args.command == "equilibria":
            print(_dump(cmd_equilibria(cfg)))
        elif args.command == "stability":
            rep = cmd_stability(cfg)
            if args.json:
                print(_dump(rep))
            else:
                print(f"trivial: {rep['trivial']}; positive: {rep['positive'] or 'absent'}")
                print(_table(rep, [k for k in rep if k not in ("trivial", "positive")]))
        elif args.command == "hopf":
            res = cmd_hopf(cfg)
            if args.json:
                print(_dump(res))
            else:
                tag = " (outside proved regime)" if res["outside_proved_regime"] else ""
                sign = "+" if res["transversal_sign"] > 0 else "-"
                print(f"Hopf at beta*_c={res['beta_star_c']:.6g}, n_c={res['n_c']}, "
                      f"period={res['period']:.6g} d, transversality {sign}{tag}")
                print(_table(res, ["beta_star_c", "omega_c", "period", "n_c", "transversal",
                                   "degenerate", "tie"]))
                for note in res["notes"]:
                    print(f"  note: {note}")
        elif args.command == "simulate":
            side = cmd_simulate(cfg, args.out, args.stride, args.plot)
            print(_dump(side["diagnostics"]))
        elif args.command == "sweep":
            rows = cmd_sweep(cfg, args.param, args.range[0], args.range[1], args.count,
                             args.jobs, args.period)
            if args.out:
                with open(args.out, "w", newline="") as fh:
                    write_sweep_csv(rows, fh)
            else:
                write_sweep_csv(rows, sys.stdout)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, NoCrossing, NoInversion, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
