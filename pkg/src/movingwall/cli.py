"""Command-line front end ``mws``.

Every subcommand reads an optional JSON run configuration (``--config``)
and applies flag overrides on top. Outputs go to ``--out`` (default
``mws-out``); a one-line JSON summary is printed to stdout.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 numerical-solver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import control, energy, exact, observability as obs, pde, spectral, verify
from .curves import BoundaryCurve, check_observability_window, curve_from_config
from .errors import ConfigError, MovingWallError, NonObservableError, SolverError

log = logging.getLogger("movingwall")

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


# -- output helpers -----------------------------------------------------------


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written as %.17g (non-finite values as strings)."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return f"{v:.17g}" if math.isfinite(v) else json.dumps(str(v))
    return json.dumps(str(obj))


def _emit(summary: dict) -> None:
    print(dumps(summary))


# -- configuration -------------------------------------------------------------


@dataclass
class RunConfig:
    curve: dict = field(default_factory=lambda: {"kind": "linear", "epsilon": 0.5})
    spectrum: str = "random"
    tau: float = 1.0
    M: int = 256
    steps: int | None = None
    N: int = 8
    quadrature_points: int | None = None
    obs_kind: str = "boundary_both"
    obs_a: float | None = None
    p: float = 1.0
    out: str = "mws-out"
    seed: int = 0
    base_dir: str = field(default=".", compare=False, repr=False)

    def to_dict(self) -> dict:
        return {
            "curve": dict(self.curve),
            "spectrum": self.spectrum,
            "tau": self.tau,
            "discretization": {"M": self.M, "steps": self.steps, "quadrature_points": self.quadrature_points},
            "truncation": {"N": self.N},
            "observation": {"kind": self.obs_kind, "a": self.obs_a, "p": self.p},
            "out": self.out,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict, base_dir: str | Path = ".") -> "RunConfig":
        known = {"curve", "spectrum", "tau", "discretization", "truncation", "observation", "out", "seed"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        disc = d.get("discretization") or {}
        trunc = d.get("truncation") or {}
        ob = d.get("observation") or {}
        try:
            cfg = cls(
                curve=dict(d.get("curve") or cls().curve),
                spectrum=str(d.get("spectrum", "random")),
                tau=float(d.get("tau", 1.0)),
                M=int(disc.get("M", 256)),
                steps=None if disc.get("steps") is None else int(disc["steps"]),
                N=int(trunc.get("N", 8)),
                quadrature_points=None if disc.get("quadrature_points") is None else int(disc["quadrature_points"]),
                obs_kind=str(ob.get("kind", "boundary_both")),
                obs_a=None if ob.get("a") is None else float(ob["a"]),
                p=float(ob.get("p", 1.0)),
                out=str(d.get("out", "mws-out")),
                seed=int(d.get("seed", 0)),
                base_dir=str(base_dir),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed config value: {exc}") from exc
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if self.M < 8:
            raise ConfigError(f"grid M must be >= 8, got {self.M}")
        if self.steps is not None and self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if self.N < 1:
            raise ConfigError("N must be >= 1")
        if self.obs_kind not in obs.KINDS:
            raise ConfigError(f"observation kind must be one of {obs.KINDS}, got {self.obs_kind!r}")
        if self.obs_kind == "point" and (self.obs_a is None or not 0 < self.obs_a < 1):
            raise ConfigError(f"point observation needs a in (0, 1), got {self.obs_a}")
        if not 0 < self.p < 2:
            raise ConfigError(f"p must lie in (0, 2), got {self.p}")
        if self.curve.get("kind") == "tabulated":
            path = self._resolve(self.curve.get("path", ""))
            if not path.is_file():
                raise ConfigError(f"curve file not found: {path}")
        if self.spectrum.endswith(".csv") and not self._resolve(self.spectrum).is_file():
            raise ConfigError(f"spectrum file not found: {self._resolve(self.spectrum)}")

    def _resolve(self, p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else Path(self.base_dir) / path

    # -- realised objects

    def build_curve(self, tau: float | None = None) -> BoundaryCurve:
        try:
            return curve_from_config(self.curve, self.tau if tau is None else tau, Path(self.base_dir))
        except KeyError as exc:
            raise ConfigError(f"curve config missing key {exc}") from exc

    @property
    def chirp(self) -> float:
        """Basis chirp l'(0): equals eps for a linear wall, keeps sine data corner-compatible otherwise."""
        return float(self.build_curve().eval(0.0)[1])

    def build_spectrum(self) -> spectral.SineSpectrum:
        if self.spectrum.endswith(".csv"):
            return spectral.read_csv(self._resolve(self.spectrum), self.chirp)
        name = f"random:{self.seed}" if self.spectrum == "random" else self.spectrum
        return spectral.preset(name, self.N, self.chirp, self.quadrature_points)


def _curve_dict(text: str) -> dict:
    kind, _, rest = text.partition(":")
    try:
        if kind == "linear":
            return {"kind": "linear", "epsilon": float(rest)}
        if kind == "periodic":
            eps, omega = rest.split(":")
            return {"kind": "periodic", "epsilon": float(eps), "omega": float(omega)}
        if kind == "tabulated":
            return {"kind": "tabulated", "path": str(Path(rest).resolve())}
    except ValueError as exc:
        raise ConfigError(f"cannot parse --curve {text!r}: {exc}") from exc
    raise ConfigError(f"unknown curve kind in --curve {text!r}")


def _obs_spec(text: str):
    kind, _, a = text.partition(":")
    kind = {"left": "boundary_left", "right": "boundary_right", "both": "boundary_both"}.get(kind, kind)
    try:
        return kind, (float(a) if a else None)
    except ValueError as exc:
        raise ConfigError(f"cannot parse --obs {text!r}") from exc


def load_config(args: argparse.Namespace) -> RunConfig:
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        cfg = RunConfig.from_dict(raw, base_dir=path.parent)
    else:
        cfg = RunConfig()
    if args.curve is not None:
        cfg.curve = _curve_dict(args.curve)
    if args.spectrum is not None:
        cfg.spectrum = str(Path(args.spectrum).resolve()) if args.spectrum.endswith(".csv") else args.spectrum
    for attr, flag in (("tau", "tau"), ("M", "grid"), ("steps", "steps"), ("N", "modes"), ("p", "p"),
                       ("out", "out"), ("seed", "seed"), ("quadrature_points", "quadrature_points")):
        v = getattr(args, flag)
        if v is not None:
            setattr(cfg, attr, v)
    if args.obs is not None:
        cfg.obs_kind, cfg.obs_a = _obs_spec(args.obs)
    cfg.validate()
    return cfg


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _window(curve: BoundaryCurve, tau: float, strict: bool) -> dict | None:
    if curve.kind == "linear" and curve.epsilon <= 0 and not strict:
        return None
    rep = check_observability_window(curve, tau)
    if strict and not rep.admissible:
        raise ConfigError("growth window violated: " + "; ".join(rep.violations() or ["curve not admissible"]))
    return asdict(rep)


# -- subcommands ----------------------------------------------------------------


def cmd_simulate(cfg: RunConfig, args) -> int:
    curve = cfg.build_curve()
    window = _window(curve, cfg.tau, args.check_window) if (args.check_window or curve.kind == "periodic") else None
    spec = cfg.build_spectrum()
    traj = pde.solve(spec, curve, cfg.tau, cfg.M, cfg.steps)
    out = _out_dir(cfg)
    left, right = traj.ux_traces()
    exact.write_trace_csv(out / "traces.csv", traj.times, left, right)
    if args.dump:
        pde.write_dump(traj, out / "states.bin")
    tr = energy.energies(traj)
    summary = {"command": "simulate", "M": traj.M, "steps": traj.times.size - 1, "tau": cfg.tau,
               "E_final": tr.E[-1], "F_final": tr.F[-1],
               "lE_residual": energy.check_first_identity(tr, curve),
               "F_var_residual": energy.f_variation_residual(tr, curve),
               "files": sorted(p.name for p in out.iterdir())}
    if window is not None:
        summary["window"] = window
    _emit(summary)
    return EXIT_OK


def _exact_solution(cfg: RunConfig) -> exact.ExactSolution:
    if cfg.curve.get("kind") != "linear":
        raise ConfigError("exact series needs a linear curve")
    return exact.ExactSolution(cfg.build_spectrum())


def cmd_traces(cfg: RunConfig, args) -> int:
    sol = _exact_solution(cfg)
    steps = cfg.steps or max(1, math.ceil(cfg.M * cfg.tau))
    t = np.linspace(0.0, cfg.tau, steps + 1)
    out = _out_dir(cfg)
    left, right = exact.neumann_trace_left(sol, t), exact.neumann_trace_right(sol, t)
    exact.write_trace_csv(out / "traces.csv", t, left, right)
    _emit({"command": "traces", "samples": t.size, "max_abs_left": np.max(np.abs(left)),
           "max_abs_right": np.max(np.abs(right))})
    return EXIT_OK


def cmd_energy(cfg: RunConfig, args) -> int:
    curve = cfg.build_curve()
    if args.exact:
        sol = _exact_solution(cfg)
        traj = exact.sample_trajectory(sol, cfg.tau, cfg.M, cfg.steps or max(1, math.ceil(cfg.M * cfg.tau)))
    else:
        traj = pde.solve(cfg.build_spectrum(), curve, cfg.tau, cfg.M, cfg.steps)
    tr = energy.energies(traj)
    out = _out_dir(cfg)
    energy.write_energy_csv(tr, curve, out / "energy.csv")
    b = energy.check_second_bounds(tr, curve)
    _emit({"command": "energy", "source": traj.source, "lE_residual": energy.check_first_identity(tr, curve),
           "F_var_residual": energy.f_variation_residual(tr, curve), "bounds": asdict(b),
           "min_poincare_margin": float(np.min(energy.poincare_margin(tr)))})
    return EXIT_OK


def cmd_admissibility(cfg: RunConfig, args) -> int:
    curve = cfg.build_curve()
    c_left = obs.admissibility_constant(curve, cfg.tau, obs.MultiplierFunction.left())
    c_right = obs.admissibility_constant(curve, cfg.tau, obs.MultiplierFunction.right())
    summary = {"command": "admissibility", "tau": cfg.tau, "C1_left": c_left, "C1_right": c_right,
               "bound": 2.0 * (c_left + c_right)}
    if cfg.curve.get("kind") == "linear":
        ratio = obs.admissibility_ratio(_exact_solution(cfg), cfg.tau)
        summary |= {"ratio": ratio, "within_bound": ratio <= summary["bound"]}
    _emit(summary)
    return EXIT_OK


def _observability_row(kind: str, eps: float, tau: float, N: int, a):
    row = obs.sweep_row(kind, eps, tau, N, a)
    row["observable"] = math.isfinite(row["cond"])
    return row


def cmd_observability(cfg: RunConfig, args) -> int:
    eps = _linear_eps(cfg)
    row = _observability_row(cfg.obs_kind, eps, cfg.tau, cfg.N, cfg.obs_a)
    out = _out_dir(cfg)
    obs.write_sweep_csv([row], out / "observability.csv")
    _emit({"command": "observability"} | row)
    return EXIT_OK


def _linear_eps(cfg: RunConfig) -> float:
    if cfg.curve.get("kind") != "linear":
        raise ConfigError("Gramians are built from the exact series and need a linear curve")
    return float(cfg.curve["epsilon"])


def cmd_point_obs(cfg: RunConfig, args) -> int:
    if cfg.obs_kind != "point":
        raise ConfigError("point-obs needs --obs point:a")
    sol = _exact_solution(cfg)
    row = _observability_row("point", sol.epsilon, cfg.tau, cfg.N, cfg.obs_a)
    steps = cfg.steps or max(1, math.ceil(cfg.M * cfg.tau))
    t = np.linspace(0.0, cfg.tau, steps + 1)
    u = exact.point_observation(sol, cfg.obs_a, t)
    out = _out_dir(cfg)
    with (out / "point.csv").open("w") as fh:
        fh.write("t,re,im,abs\n")
        for tk, uk in zip(t, u):
            fh.write(f"{tk:.17g},{uk.real:.17g},{uk.imag:.17g},{abs(uk):.17g}\n")
    obs.write_sweep_csv([row], out / "observability.csv")
    _emit({"command": "point-obs", "a": cfg.obs_a} | row)
    return EXIT_OK


def cmd_lp(cfg: RunConfig, args) -> int:
    if cfg.obs_a is None:
        raise ConfigError("lp needs an observation point (--obs point:a)")
    sol = _exact_solution(cfg)
    rep = obs.holder_chain(sol, cfg.obs_a, cfg.tau, cfg.p, cfg.quadrature_points)
    k_p, K_p = obs.lp_constants(sol.epsilon, cfg.obs_a, cfg.tau, sol.N, cfg.p)
    ratio = obs.lp_ratio(sol, cfg.obs_a, cfg.tau, cfg.p, cfg.quadrature_points)
    _emit({"command": "lp", "p": cfg.p, "a": cfg.obs_a,
           "lp_norm": obs.lp_observation(sol, cfg.obs_a, cfg.tau, cfg.p, cfg.quadrature_points),
           "ratio": ratio, "k_p": k_p, "K_p": K_p, "two_sided_ok": k_p <= ratio <= K_p} | asdict(rep))
    return EXIT_OK


def cmd_gramian(cfg: RunConfig, args) -> int:
    g = obs.observation_gramian(cfg.obs_kind, _linear_eps(cfg), cfg.tau, cfg.N, cfg.obs_a)
    out = _out_dir(cfg)
    with (out / "gramian.csv").open("w") as fh:
        fh.write("m,n,re_G,im_G,W\n")
        for m in range(g.N):
            for n in range(g.N):
                fh.write(f"{m + 1},{n + 1},{g.G[m, n].real:.17g},{g.G[m, n].imag:.17g},{g.W[m, n].real:.17g}\n")
    c, C = obs.observability_constant_estimate(g)
    _emit({"command": "gramian", "kind": g.kind, "N": g.N, "c_est": c, "C_est": C,
           "hermitian_defect": float(np.max(np.abs(g.G - g.G.conj().T)))})
    return EXIT_OK


def cmd_steer(cfg: RunConfig, args) -> int:
    g = obs.observation_gramian(cfg.obs_kind, _linear_eps(cfg), cfg.tau, cfg.N, cfg.obs_a)
    target = cfg.build_spectrum().padded(max(cfg.N, 1))
    if target.N > cfg.N:
        raise ConfigError(f"target spectrum has {target.N} modes, more than N={cfg.N}")
    sol = control.steer(g, target.coefficients)
    out = _out_dir(cfg)
    control.write_control_json(g, sol, out / "control.json")
    _emit({"command": "steer"} | control.control_report(g, sol))
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    if args.acceptance:
        results = [f() for f in verify.criteria()]
    else:
        curve = cfg.build_curve()
        results = verify.config_suite(curve, cfg.build_spectrum(), cfg.tau, cfg.M, cfg.steps, cfg.N)
    out = _out_dir(cfg)
    report = {"passed": all(r.passed for r in results), "checks": [r.to_json() for r in results]}
    (out / "verify.json").write_text(dumps(report) + "\n")
    for r in results:
        print(r.line(), file=sys.stderr)
        for f in r.failures:
            print(f"    {f}", file=sys.stderr)
    _emit({"command": "verify", "passed": report["passed"],
           "failed": [r.name for r in results if not r.passed]})
    return EXIT_OK if report["passed"] else EXIT_VERIFY


def _parse_list(text: str | None, cast, default):
    if not text:
        return list(default)
    try:
        return [cast(x) for x in text.split(",") if x]
    except ValueError as exc:
        raise ConfigError(f"cannot parse list {text!r}") from exc


def _sweep_cell(cell):
    kind, eps, tau, N, a = cell
    return _observability_row(kind, eps, tau, N, a)


def cmd_sweep(cfg: RunConfig, args) -> int:
    eps_list = _parse_list(args.eps, float, [_linear_eps(cfg)])
    taus = _parse_list(args.taus, float, [cfg.tau])
    Ns = _parse_list(args.Ns, int, [cfg.N])
    kinds = []
    for text in _parse_list(args.kinds, str, [cfg.obs_kind]):
        k, a = _obs_spec(text)
        if k not in obs.KINDS:
            raise ConfigError(f"unknown observation kind {k!r}")
        if k == "point":
            a = cfg.obs_a if a is None else a
            if a is None:
                raise ConfigError("point kind needs a position: use point:A in --kinds or set --obs point:A")
        kinds.append((k, a))
    cells = [(k, e, t, n, a) for k, a in kinds for e in eps_list for t in taus for n in Ns]
    jobs = max(1, args.jobs or 1)
    if jobs == 1:
        rows = [_sweep_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_cell, cells))
    out = _out_dir(cfg)
    obs.write_sweep_csv(rows, out / "sweep.csv")
    _emit({"command": "sweep", "cells": len(rows), "non_observable": sum(not r["observable"] for r in rows)})
    return EXIT_OK


COMMANDS = {
    "simulate": (cmd_simulate, "solve the fixed-domain problem and write boundary traces"),
    "traces": (cmd_traces, "exact-series Neumann traces (linear wall)"),
    "energy": (cmd_energy, "first/second energies and their identities"),
    "admissibility": (cmd_admissibility, "explicit admissibility constant and trace ratio"),
    "observability": (cmd_observability, "Gramian observability constants for one cell"),
    "point-obs": (cmd_point_obs, "internal point observation and its Gramian"),
    "lp": (cmd_lp, "L_p point observation estimates"),
    "gramian": (cmd_gramian, "write an observation Gramian"),
    "steer": (cmd_steer, "steer the retrograde adjoint to a target spectrum"),
    "verify": (cmd_verify, "run verification checks"),
    "sweep": (cmd_sweep, "Gramian constants over an (eps, tau, N, kind) grid"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--curve", help="linear:EPS | periodic:EPS:OMEGA | tabulated:PATH")
    common.add_argument("--spectrum", help="preset (mode:k, hat, parabola, random:seed) or CSV file")
    common.add_argument("--tau", type=float)
    common.add_argument("--grid", type=int, help="grid intervals M")
    common.add_argument("--steps", type=int)
    common.add_argument("--modes", type=int, help="truncation N")
    common.add_argument("--quadrature-points", dest="quadrature_points", type=int)
    common.add_argument("--obs", help="boundary_left|boundary_right|boundary_both|point:A")
    common.add_argument("--p", type=float)
    common.add_argument("--out")
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int)
    common.add_argument("--check-window", action="store_true", help="fail with exit 2 outside the growth window")

    parser = argparse.ArgumentParser(prog="mws", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_)
        if name == "simulate":
            p.add_argument("--dump", action="store_true", help="also write states.bin")
        if name == "energy":
            p.add_argument("--exact", action="store_true", help="use the exact series instead of the solver")
        if name == "verify":
            p.add_argument("--acceptance", action="store_true", help="run the pinned acceptance criteria")
        if name == "sweep":
            p.add_argument("--eps", help="comma-separated rates")
            p.add_argument("--taus", help="comma-separated horizons")
            p.add_argument("--Ns", help="comma-separated truncations")
            p.add_argument("--kinds", help="comma-separated observation kinds")
    return parser


def _setup_logging() -> None:
    level = os.environ.get("MWS_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        if args.check_window and args.command != "simulate":
            _window(cfg.build_curve(), cfg.tau, strict=True)
        return COMMANDS[args.command][0](cfg, args)
    except NonObservableError as exc:
        print(f"mws: non-observable: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except SolverError as exc:
        print(f"mws: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigError, MovingWallError) as exc:
        print(f"mws: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
