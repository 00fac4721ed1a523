"""Command-line entry point: ``hybridion <command> --config run.yaml --out result.csv``."""
from __future__ import annotations

import argparse
import dataclasses
import math
import sys
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from . import cvqc, laserfree, output
from . import hilbert as hb
from .drives import Interaction
from .experiments import (CSV_COLUMNS, FIGURES, MAGNUS_FLOOR, ScanError, ScanSpec, default_K_list,
                          magnus_defects, mod3_offsupport, offdiagonal_population, parameter_to_action,
                          phonon_histogram, run_scan, scan_row, swap_trace)
from .propagate import LeakageError

EXIT_OK, EXIT_VALIDATION, EXIT_FAILURE = 0, 2, 3


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ config

@dataclass
class Units:
    mode: str = "dimensionless"
    rabi_hz: float | None = None        # Omega/2pi in Hz, hertz mode only


@dataclass
class KRange:
    lo: float = 0.3
    hi: float = 3.0
    points: int = 16


@dataclass
class EvolveSection:
    K: int | None = None
    tf_omega_over_2pi: float | None = None
    samples: int = 0


@dataclass
class MagnusSection:
    K: int = 4
    cutoff: int = 12
    guard_levels: int = 3
    quad_points: int = 64


@dataclass
class LaserFreeSection:
    delta_over_2pi: float = 50.0
    gradient_over_2pi: float = 1.0
    bessel_argument: float | None = None     # None: J2*J3 optimum
    n: int = -1
    K: int = 4
    action: float = 0.2
    frame_cutoff: int = 6
    ramp_periods: list[float] = field(default_factory=lambda: [10.0, 20.0])
    rwa_cutoff: int = 24
    rwa_ratios: list[float] = field(default_factory=lambda: [50.0, 100.0, 200.0, 400.0])
    frame_tol: float = 1e-3


@dataclass
class CvqcSection:
    dt: float = 0.02
    omega: float = 1.0
    cutoff: int = 24
    halvings: int = 4
    slope_tol: float = 0.3
    population_tol: float = 1e-3


@dataclass
class RunConfig:
    interaction: str = "OneModeSqueeze"
    parameter: float | None = None      # r_s, r_2s, r_bs, r_3s as usually quoted
    action: float | None = None         # Omega2*t_f or Omega3*t_f directly
    K: list[int] | None = None
    K_range: KRange = field(default_factory=KRange)
    phi: float = 0.0
    axes: list[str] = field(default_factory=lambda: ["y", "x"])
    cutoffs: list[int] | None = None
    initial_state: str | None = None
    steps_per_period: int = 200
    leakage_tol: float | None = None
    omega: float = 1.0
    out: str | None = None
    units: Units = field(default_factory=Units)
    evolve: EvolveSection = field(default_factory=EvolveSection)
    magnus: MagnusSection = field(default_factory=MagnusSection)
    laserfree: LaserFreeSection = field(default_factory=LaserFreeSection)
    cvqc: CvqcSection = field(default_factory=CvqcSection)

    # -------------------------------------------------------------- derived
    @property
    def kind(self) -> Interaction:
        return Interaction.parse(self.interaction)

    @property
    def preset(self):
        return next((p for p in FIGURES.values() if p.kind is self.kind), None)

    def resolved_action(self) -> float:
        if (self.parameter is None) == (self.action is None):
            raise ConfigError("give exactly one of 'parameter' or 'action'")
        return self.action if self.action is not None else parameter_to_action(self.kind, self.parameter)

    def scan_spec(self, K_list=None) -> ScanSpec:
        kind, preset = self.kind, self.preset
        action = self.resolved_action()
        if K_list is None:
            if self.K is not None:
                K_list = self.K
            else:
                r = self.K_range
                K_list = default_K_list(kind, action, r.lo, r.hi, r.points, self.omega)
        cutoffs = self.cutoffs or (preset.cutoffs if preset else ([20] if kind.same_mode else [20, 20]))
        init = self.initial_state or (preset.initial_state if preset else "down_vacuum")
        tol = self.leakage_tol if self.leakage_tol is not None else (preset.leakage_tol if preset else 1e-6)
        return ScanSpec(kind=kind, action=action, K_list=tuple(K_list), cutoffs=tuple(cutoffs),
                        initial_state=init, phi=self.phi, omega=self.omega, axis_a=self.axes[0],
                        axis_ap=self.axes[1], steps_per_period=self.steps_per_period, leakage_tol=tol)


def _build(cls, data, where: str):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{where or 'config'} must be a mapping")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        path = f"{where}.{key}" if where else str(key)
        if key not in names:
            raise ConfigError(f"unknown config key {path!r}")
        hint = hints[key]
        if dataclasses.is_dataclass(hint):
            kwargs[key] = _build(hint, value, path)
        else:
            kwargs[key] = _coerce(hint, value, path)
    return cls(**kwargs)


def _coerce(hint, value, path):
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if origin in (typing.Union, types.UnionType):
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(inner[0], value, path)
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError(f"{path!r} must be a list")
        return [_coerce(args[0], v, f"{path}[{i}]") for i, v in enumerate(value)]
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path!r} must be a number")
        return float(value)
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path!r} must be an integer")
        return value
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path!r} must be a string")
        return value
    return value


def _validate(cfg: RunConfig) -> None:
    try:
        cfg.kind
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.units.mode not in ("dimensionless", "hertz"):
        raise ConfigError("units.mode must be 'dimensionless' or 'hertz'")
    if cfg.units.mode == "hertz" and not (cfg.units.rabi_hz and cfg.units.rabi_hz > 0):
        raise ConfigError("units.rabi_hz (Omega/2pi in Hz) is required in hertz mode")
    if len(cfg.axes) != 2:
        raise ConfigError("axes must list two Pauli axes")
    if cfg.K is not None and not cfg.K:
        raise ConfigError("K list is empty")
    if not cfg.omega > 0:
        raise ConfigError("omega must be positive")


def load_config(path: str | None) -> RunConfig:
    if path is None:
        cfg = RunConfig()
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        cfg = _build(RunConfig, data, "")
    _validate(cfg)
    return cfg


def config_echo(cfg: RunConfig, **resolved) -> dict:
    echo = dataclasses.asdict(cfg)
    echo.update(resolved)
    return echo


# ---------------------------------------------------------------- commands

def _rate_list(cfg: RunConfig):
    rates = list(output.REFERENCE_RATES_HZ)
    if cfg.units.mode == "hertz" and cfg.units.rabi_hz not in rates:
        rates.append(cfg.units.rabi_hz)
    return rates


def _report(command: str, cfg: RunConfig, body: dict, **resolved) -> dict:
    return {"command": command, "version": __version__, "config": config_echo(cfg, **resolved), **body}


def _emit(report: dict, out: Path | None) -> None:
    if out is not None:
        output.write_atomic(out.with_name(out.name + ".report.json"), output.json_text(report))


def cmd_list_interactions(cfg, args) -> int:
    header = ("kind", "n", "j=j'", "gaussian", "rabi rate", "H_eff / hbar", "action")
    rows = [(k.label, str(k.n), "yes" if k.same_mode else "no", "yes" if k.gaussian else "no",
             k.rabi_formula, k.formula, k.action_symbol) for k in Interaction]
    widths = [max(len(r[i]) for r in rows + [header]) for i in range(len(header))]
    for r in [header] + rows:
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return EXIT_OK


def _rows_payload(result, rates):
    rows = []
    for r in result.rows:
        d = dataclasses.asdict(r)
        d["t_f_wall"] = output.conversions(r.tf_omega_over_2pi, rates)
        rows.append(d)
    return rows


def _out_path(cfg: RunConfig, args, default: str) -> Path:
    return Path(args.out or cfg.out or default)


def cmd_scan(cfg: RunConfig, args) -> int:
    try:
        spec = cfg.scan_spec()
    except (ValueError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out = _out_path(cfg, args, f"scan_{spec.kind.label}.csv")
    try:
        result = run_scan(spec, workers=args.threads)
    except ScanError as exc:
        print(f"error: scan failed at K={exc.K}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    rows = [[getattr(r, c) for c in CSV_COLUMNS] for r in result.rows]
    output.write_atomic(out, output.csv_text(CSV_COLUMNS, rows))

    rates = _rate_list(cfg)
    body = {"rows": _rows_payload(result, rates)}
    crossing = result.crossing(0.01)
    body["crossing_infidelity_0.01"] = None if crossing is None else {
        "tf_omega_over_2pi": crossing, "t_f_wall": output.conversions(crossing, rates)}
    preset = cfg.preset
    if preset is not None:
        param, tf_ref = preset.quoted
        near = result.nearest(tf_ref)
        body["reference_point"] = {
            "parameter": param, "tf_omega_over_2pi": tf_ref,
            "t_f_wall": output.conversions(tf_ref, rates),
            "nearest_row": {"K": near.K, "tf_omega_over_2pi": near.tf_omega_over_2pi,
                            "infidelity": near.infidelity},
        }
    report = _report("scan", cfg, body, resolved_action=spec.action, resolved_K=list(spec.K_list),
                     resolved_cutoffs=list(spec.cutoffs), resolved_initial_state=spec.initial_state,
                     resolved_leakage_tol=spec.leakage_tol)
    _emit(report, out)

    print(f"{spec.kind.label}: {len(result.rows)} rows -> {out}")
    if crossing is not None:
        conv = output.conversions(float(f"{crossing:.3g}"), rates)
        print(f"  1-F < 0.01 beyond t_f*Omega/2pi = {crossing:.4g}  ("
              + ", ".join(f"{v['text']} at {k}" for k, v in conv.items()) + ")")
    if preset is not None:
        ref = body["reference_point"]
        print(f"  reference t_f*Omega/2pi = {ref['tf_omega_over_2pi']}: "
              + ", ".join(f"{v['text']} at {k}" for k, v in ref["t_f_wall"].items())
              + f"; nearest row K={ref['nearest_row']['K']} has 1-F = {ref['nearest_row']['infidelity']:.4g}")
    return EXIT_OK


def cmd_evolve(cfg: RunConfig, args) -> int:
    try:
        spec = cfg.scan_spec(K_list=[1])
        ev = cfg.evolve
        if ev.K is not None:
            K = ev.K
        elif ev.tf_omega_over_2pi is not None:
            cands = default_K_list(spec.kind, spec.action, ev.tf_omega_over_2pi / 1.5, ev.tf_omega_over_2pi * 1.5, 64)
            K = min(cands, key=lambda k: abs(_tf(spec, k) - ev.tf_omega_over_2pi))
        else:
            raise ConfigError("evolve needs evolve.K or evolve.tf_omega_over_2pi")
        spec = dataclasses.replace(spec, K_list=(K,))
    except (ValueError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out = _out_path(cfg, args, f"evolve_{spec.kind.label}.csv")
    try:
        row = scan_row(spec, K)
        probs = phonon_histogram(spec, K)
        body = {"rows": [dataclasses.asdict(row)], "phonon_populations": probs.tolist(),
                "t_f_wall": output.conversions(row.tf_omega_over_2pi, _rate_list(cfg))}
        if spec.kind.same_mode:
            body["mod3_offsupport"] = mod3_offsupport(probs)
        else:
            body["offdiagonal_population"] = offdiagonal_population(probs)
        if ev.samples > 0 and spec.kind is Interaction.BEAM_SPLITTER:
            times = np.linspace(0, row.t_f, ev.samples)
            tr = swap_trace(spec, K, times)
            body["swap_trace"] = {"t": tr.times.tolist(), "P10": tr.p10.tolist(), "P01": tr.p01.tolist()}
    except ScanError as exc:
        print(f"error: evolve failed at K={exc.K}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    output.write_atomic(out, output.csv_text(CSV_COLUMNS, [[getattr(row, c) for c in CSV_COLUMNS]]))
    _emit(_report("evolve", cfg, body, resolved_K=K, resolved_action=spec.action), out)
    print(f"{spec.kind.label} K={K}: t_f*Omega/2pi = {row.tf_omega_over_2pi:.6g}, 1-F = {row.infidelity:.6g}, "
          f"leakage = {row.leakage:.3g}")
    return EXIT_OK


def _tf(spec: ScanSpec, K: int) -> float:
    return spec.drive(K).t_i * K * spec.omega / (2 * math.pi)


def _checks_exit(checks: dict) -> int:
    failed = [name for name, c in checks.items() if not c["pass"]]
    for name, c in checks.items():
        extra = {k: v for k, v in c.items() if k != "pass"}
        print(f"[{'PASS' if c['pass'] else 'FAIL'}] {name}: " + ", ".join(f"{k}={_short(v)}" for k, v in extra.items()))
    if failed:
        print(f"error: property failure: {', '.join(failed)}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def _short(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, list):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    return str(v)


def cmd_magnus_check(cfg: RunConfig, args) -> int:
    try:
        kind = cfg.kind
        action = cfg.resolved_action()
        m = cfg.magnus
        if m.K < 1 or m.cutoff < m.guard_levels + 2:
            raise ConfigError("magnus.K must be >= 1 and magnus.cutoff must exceed guard_levels + 1")
    except (ValueError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    factor = 4 if kind.order == 2 else 8       # Delta doubles at fixed action
    a = magnus_defects(kind, action, m.K, m.cutoff, cfg.phi, cfg.axes[0], cfg.axes[1], m.guard_levels, m.quad_points)
    b = magnus_defects(kind, action, factor * m.K, m.cutoff, cfg.phi, cfg.axes[0], cfg.axes[1], m.guard_levels,
                       m.quad_points)
    floor = MAGNUS_FLOOR
    checks = {
        "first_order_vanishes": {"pass": max(a.first_order, b.first_order) < 1e-8,
                                 "norm": max(a.first_order, b.first_order)},
        f"order{kind.order}_matches_effective": {
            "pass": b.term_defect <= max(a.term_defect / 3, floor) and a.term_defect < 1e-6,
            "defect_at_delta": a.term_defect, "defect_at_2delta": b.term_defect, "floor": floor,
            "delta": [a.delta, b.delta]},
    }
    body = {"checks": checks}
    out = Path(args.out) if args.out else (Path(cfg.out) if cfg.out else None)
    _emit(_report("magnus-check", cfg, body, resolved_action=action), out)
    return _checks_exit(checks)


def cmd_laserfree_check(cfg: RunConfig, args) -> int:
    lf = cfg.laserfree
    try:
        if lf.n not in (-2, -1, 1, 2):
            raise ConfigError("laserfree.n must be one of -2, -1, 1, 2")
        if not lf.ramp_periods or not lf.rwa_ratios:
            raise ConfigError("laserfree.ramp_periods and laserfree.rwa_ratios must be non-empty")
        og = 2 * math.pi * lf.gradient_over_2pi
        ratio = lf.delta_over_2pi / lf.gradient_over_2pi
        base = laserfree.desk_scenario(ratio, og, lf.bessel_argument, lf.n, lf.K, lf.action)
    except (ValueError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    sol = base.sideband
    z_opt, prod = laserfree.bessel_product_optimum()
    checks = {"sideband_residuals": {"pass": max(map(abs, sol.residuals)) < 1e-12,
                                     "delta": sol.delta, "omega_g": sol.omega_g,
                                     "residuals": [float(r) for r in sol.residuals]}}
    frame_space = hb.SpaceDescriptor((lf.frame_cutoff,))
    frames = []
    for p in lf.ramp_periods:
        sc = laserfree.desk_scenario(ratio, og, lf.bessel_argument, lf.n, lf.K, lf.action, ramp_periods=p)
        frames.append(laserfree.frame_infidelity(sc, frame_space))
    checks["frame_equivalence"] = {
        "pass": all(f <= lf.frame_tol for f in frames) and all(y <= x for x, y in zip(frames, frames[1:])),
        "ramp_periods": lf.ramp_periods, "infidelity": frames}
    rwa_space = hb.SpaceDescriptor((lf.rwa_cutoff,))
    rwa = []
    try:
        for r in lf.rwa_ratios:
            sc = laserfree.desk_scenario(r, og, lf.bessel_argument, lf.n, lf.K, lf.action)
            rwa.append(laserfree.rwa_infidelity(sc, rwa_space))
    except LeakageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    checks["rwa_convergence"] = {"pass": all(y < x or y < 1e-10 for x, y in zip(rwa, rwa[1:])),
                                 "ratios": lf.rwa_ratios, "infidelity": rwa}
    body = {"checks": checks, "bessel_optimum": {"argument": z_opt, "J2J3": prod,
                                                 "omega_mu_over_delta": z_opt / 4}}
    out = Path(args.out) if args.out else (Path(cfg.out) if cfg.out else None)
    _emit(_report("laserfree-check", cfg, body), out)
    print(f"sidebands: delta = {sol.delta:.17g}, omega_g = {sol.omega_g:.17g}")
    print(f"J2*J3 optimum at 4*Omega_mu/delta = {z_opt:.6f} (J2*J3 = {prod:.6f})")
    return _checks_exit(checks)


def cmd_cvqc_demo(cfg: RunConfig, args) -> int:
    c = cfg.cvqc
    if not (c.dt > 0 and c.omega > 0 and c.halvings >= 1 and c.cutoff >= 4):
        print("error: cvqc.dt, cvqc.omega must be > 0, halvings >= 1, cutoff >= 4", file=sys.stderr)
        return EXIT_VALIDATION
    space = hb.SpaceDescriptor((c.cutoff,))
    H = cvqc.linear_hamiltonian(cvqc.LinearDrive(0.0, "x", 0, c.omega), space)
    Hp = cvqc.linear_hamiltonian(cvqc.LinearDrive(0.0, "y", 0, c.omega), space)
    dts = [c.dt * 2.0 ** -k for k in range(c.halvings + 1)]
    g = [cvqc.gadget_defect(H, Hp, dt) for dt in dts]
    cub = [cvqc.cubic_defect(dt, c.omega, space) for dt in dts]
    s_g, s_c = cvqc.scaling_exponent(dts, g), cvqc.scaling_exponent(dts, cub)
    psi = cvqc.sigma_y_eigenstate(space)
    U = cvqc.cubic_phase_gate(c.dt, c.omega, 0, space)
    T = cvqc.cubic_target(c.dt, c.omega, 0, space)
    pop = float(np.max(np.abs(hb.trace_over_spin(U @ psi) - hb.trace_over_spin(T @ psi))))
    comm = cvqc.gadget(H, 0.5 * H, c.dt)
    checks = {
        "gadget_error_order": {"pass": abs(s_g - 3) <= c.slope_tol, "slope": s_g, "defects": g},
        "cubic_error_order": {"pass": abs(s_c - 4) <= c.slope_tol, "slope": s_c, "defects": cub},
        "cubic_populations": {"pass": pop <= c.population_tol, "max_abs_difference": pop,
                              "leakage": hb.leakage(U @ psi)},
        "commuting_identity": {"pass": comm.allclose(hb.identity(space), 1e-12),
                               "defect": float(np.max(np.abs(comm.matrix - np.eye(space.dim))))},
        "unitarity": {"pass": U.is_unitary(1e-9), "defect": U.unitarity_defect()},
    }
    out = Path(args.out) if args.out else (Path(cfg.out) if cfg.out else None)
    _emit(_report("cvqc-demo", cfg, {"checks": checks, "dt": dts}), out)
    print(f"gadget error exponent {s_g:.3f} (expected 3), cubic gate exponent {s_c:.3f} (expected 4)")
    return _checks_exit(checks)


COMMANDS = {
    "list-interactions": cmd_list_interactions,
    "scan": cmd_scan,
    "evolve": cmd_evolve,
    "magnus-check": cmd_magnus_check,
    "laserfree-check": cmd_laserfree_check,
    "cvqc-demo": cmd_cvqc_demo,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--out", help="output path (CSV for scan/evolve; report JSON lands next to it)")
    common.add_argument("--threads", type=int, default=1, help="worker processes for scan rows")
    common.add_argument("--seed", type=int, default=None, help="reserved; the core is deterministic")
    p = argparse.ArgumentParser(prog="hybridion", description="Two-tone trapped-ion drive simulator and checks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common])
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return COMMANDS[args.command](cfg, args)


if __name__ == "__main__":
    sys.exit(main())
