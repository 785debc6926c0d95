"""Command-line driver for the conversion-dynamics toolkit.

Subcommands: evolve, fixed-points, regimes, sweep, trap, portrait.
Every run writes its data files plus a manifest.json carrying the full
resolved parameter set; rerunning with --from-manifest reproduces the
data files byte for byte.  Flags mirror config keys and override the
config file.

Exit codes: 0 success, 2 config error, 3 numerical failure (step-size
underflow), 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io as aio
from .experiments import (
    SweepProtocol,
    default_ic_grid,
    oscillation_amplitude,
    phase_portrait,
    self_trapping_run,
    sweep_conversion,
)
from .fixed_points import all_fixed_points
from .integrate import IntegratorConfig, StepUnderflowError, evolve
from .io import ConfigError
from .model import CanonicalState, Params, ReducedParams, \
    amplitudes_from_canonical
from .regimes import boundary_fp_existence_curve, scan_plane, trace_boundaries

# per-command flag -> config key wiring; plain entries are parsed with
# the schema type, special entries expand to several keys
_COMMON_FLAGS = [("--output", "output.path", str), ("--format", "output.format", str)]
_INTEGRATOR_FLAGS = [
    ("--method", "integrator.method", str),
    ("--rtol", "integrator.rtol", float),
    ("--atol", "integrator.atol", float),
    ("--dt", "integrator.dt", float),
    ("--t-final", "integrator.t_final", float),
    ("--record-every", "integrator.record_every", int),
]
_MODEL_FLAGS = [
    ("--v", "model.v", float),
    ("--u", "model.u", float),
    ("--r", "model.r", float),
    ("--gamma-a", "model.gamma_a", float),
    ("--gamma-b", "model.gamma_b", float),
]
_REDUCED_FLAGS = [
    ("--c", "reduced.c", float),
    ("--omega", "reduced.omega", float),
    ("--r", "reduced.r", float),
    ("--gamma", "reduced.gamma", float),
]

_FLAGS = {
    "evolve": _MODEL_FLAGS + _INTEGRATOR_FLAGS + [
        ("--a0-sq", "initial.a0_sq", float),
        ("--theta0", "initial.theta0", float),
    ],
    "fixed-points": _REDUCED_FLAGS,
    "regimes": [
        ("--omega", "reduced.omega", float),
        ("--gamma", "reduced.gamma", float),
        ("--refine-tol", "scan.refine_tol", float),
    ],
    "sweep": [
        ("--v", "model.v", float),
        ("--u", "model.u", float),
        ("--r-max", "sweep.r_max", float),
        ("--rtol", "integrator.rtol", float),
        ("--atol", "integrator.atol", float),
    ],
    "trap": [
        ("--v", "model.v", float),
        ("--u", "model.u", float),
        ("--r", "model.r", float),
        ("--gamma", "trap.gamma", float),
        ("--a0-sq", "trap.a0_sq", float),
        ("--theta0", "trap.theta0", float),
        ("--t-span", "trap.t_span", float),
        ("--rtol", "integrator.rtol", float),
        ("--atol", "integrator.atol", float),
    ],
    "portrait": _REDUCED_FLAGS + [
        ("--t-span", "portrait.t_span", float),
        ("--n-s", "portrait.n_s", int),
        ("--n-theta", "portrait.n_theta", int),
        ("--rtol", "integrator.rtol", float),
        ("--atol", "integrator.atol", float),
    ],
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="atomol",
        description="Mean-field dynamics of dissipative atom-molecule conversion.")
    parser.add_argument("--version", action="version",
                        version=f"{aio.TOOL_NAME} {aio.__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in ("evolve", "fixed-points", "regimes", "sweep", "trap",
                    "portrait"):
        sp = sub.add_parser(command)
        sp.add_argument("--config", help="INI config file")
        sp.add_argument("--from-manifest",
                        help="replay the resolved parameters of a manifest")
        for flag, key, typ in _FLAGS[command] + _COMMON_FLAGS:
            sp.add_argument(flag, dest=key, type=typ, default=None)
        if command == "regimes":
            sp.add_argument("--window", default=None,
                            help="scan window as cmin,cmax,rmin,rmax")
            sp.add_argument("--resolution", default=None,
                            help="grid points per axis: n or nc,nr")
        if command == "sweep":
            sp.add_argument("--beta", default=None,
                            help="comma list of sweeping rates")
            sp.add_argument("--gamma", default=None,
                            help="comma list of relative decoherence rates")
    return parser


def _collect_overrides(args) -> dict:
    overrides = {}
    for flags in (_FLAGS[args.command], _COMMON_FLAGS):
        for _, key, _typ in flags:
            val = getattr(args, key, None)
            if val is not None:
                overrides[key] = val
    if args.command == "regimes":
        if args.window is not None:
            parts = [p for p in args.window.split(",") if p.strip()]
            if len(parts) != 4:
                raise ConfigError("--window takes cmin,cmax,rmin,rmax")
            for key, raw in zip(("c_min", "c_max", "r_min", "r_max"), parts):
                overrides[f"scan.{key}"] = float(raw)
        if args.resolution is not None:
            parts = [p for p in args.resolution.split(",") if p.strip()]
            if len(parts) == 1:
                overrides["scan.resolution_c"] = int(parts[0])
                overrides["scan.resolution_r"] = int(parts[0])
            elif len(parts) == 2:
                overrides["scan.resolution_c"] = int(parts[0])
                overrides["scan.resolution_r"] = int(parts[1])
            else:
                raise ConfigError("--resolution takes n or nc,nr")
    if args.command == "sweep":
        if args.beta is not None:
            overrides["sweep.betas"] = [float(p) for p in args.beta.split(",") if p.strip()]
        if args.gamma is not None:
            overrides["sweep.gammas"] = [float(p) for p in args.gamma.split(",") if p.strip()]
    return overrides


def _resolve(args) -> dict:
    file_values = None
    if getattr(args, "from_manifest", None):
        manifest = aio.load_manifest(args.from_manifest)
        if manifest["command"] != args.command:
            raise ConfigError(
                f"manifest records command {manifest['command']!r}, "
                f"not {args.command!r}")
        file_values = dict(manifest["parameters"])
        if "sweep.betas" in file_values:
            file_values["sweep.betas"] = [float(v) for v in file_values["sweep.betas"]]
        if "sweep.gammas" in file_values:
            file_values["sweep.gammas"] = [float(v) for v in file_values["sweep.gammas"]]
    elif getattr(args, "config", None):
        file_values = aio.load_config(args.config)
    return aio.resolve_config(file_values, _collect_overrides(args))


def _integrator_config(resolved, t_final=None) -> IntegratorConfig:
    return IntegratorConfig(
        method=resolved["integrator.method"],
        rtol=resolved["integrator.rtol"],
        atol=resolved["integrator.atol"],
        dt=resolved["integrator.dt"],
        t_final=resolved["integrator.t_final"] if t_final is None else t_final,
        record_every=resolved["integrator.record_every"],
    )


def _model_params(resolved) -> Params:
    return Params(v=resolved["model.v"], u=resolved["model.u"],
                  r=resolved["model.r"], gamma_a=resolved["model.gamma_a"],
                  gamma_b=resolved["model.gamma_b"])


def _reduced_params(resolved) -> ReducedParams:
    return ReducedParams(c=resolved["reduced.c"], omega=resolved["reduced.omega"],
                         r=resolved["reduced.r"], gamma=resolved["reduced.gamma"])


def _finish(command, resolved, derived, outdir, outputs):
    manifest = aio.build_manifest(command, resolved, derived,
                                  [p.name for p in outputs])
    aio.write_manifest(outdir / "manifest.json", manifest)
    for p in outputs:
        print(f"wrote {p}")
    print(f"wrote {outdir / 'manifest.json'}")
    return 0


def cmd_evolve(resolved, outdir, fmt):
    p = _model_params(resolved)
    a0_sq = resolved["initial.a0_sq"]
    if not 0.0 <= a0_sq <= 1.0:
        raise ConfigError(f"[initial] a0_sq must be in [0, 1], got {a0_sq}")
    x0 = amplitudes_from_canonical(
        CanonicalState(s=2.0 * a0_sq - 1.0, theta=resolved["initial.theta0"],
                       n=1.0))
    tr = evolve(x0, p, _integrator_config(resolved))
    header = ["t", "re_a", "im_a", "re_b", "im_b", "n", "s", "theta",
              "hx", "hy", "hz", "energy"]
    rows = [
        [float(tr.times[i]),
         float(tr.states[i, 0].real), float(tr.states[i, 0].imag),
         float(tr.states[i, 1].real), float(tr.states[i, 1].imag),
         float(tr.n[i]), float(tr.s[i]), float(tr.theta[i]),
         float(tr.hx[i]), float(tr.hy[i]), float(tr.hz[i]),
         float(tr.energy[i])]
        for i in range(len(tr.times))
    ]
    out = aio.write_table(outdir, "trajectory", header, rows, fmt)
    derived = {"gamma_plus": p.gamma_plus, "gamma_minus": p.gamma_minus,
               "c": p.u, "omega": p.v}
    return _finish("evolve", resolved, derived, outdir, [out])


def _fixed_point_rows(points):
    rows = []
    for fp in points:
        e1, e2 = fp.eigenvalues
        rows.append([float(fp.s), float(fp.theta), fp.kind,
                     float(e1.real), float(e1.imag), float(e2.real),
                     float(e2.imag), float(fp.residual), fp.on_boundary])
    return rows


def cmd_fixed_points(resolved, outdir, fmt):
    q = _reduced_params(resolved)
    points = all_fixed_points(q)
    header = ["s", "theta", "kind", "eig1_re", "eig1_im", "eig2_re",
              "eig2_im", "residual", "on_boundary"]
    out = aio.write_table(outdir, "fixed_points", header,
                          _fixed_point_rows(points), fmt)
    derived = {"gamma_plus": None, "gamma_minus": q.gamma, "c": q.c,
               "omega": q.omega}
    return _finish("fixed-points", resolved, derived, outdir, [out])


def cmd_regimes(resolved, outdir, fmt):
    omega = resolved["reduced.omega"]
    gamma = resolved["reduced.gamma"]
    c_range = (resolved["scan.c_min"], resolved["scan.c_max"])
    r_range = (resolved["scan.r_min"], resolved["scan.r_max"])
    rmap = scan_plane(c_range=c_range, r_range=r_range,
                      resolution=(resolved["scan.resolution_c"],
                                  resolved["scan.resolution_r"]),
                      omega=omega, gamma=gamma)
    header = ["c", "r", "label", "n_interior", "has_boundary_fp"]
    rows = [[c, r, lab.label, lab.n_interior, lab.has_boundary_fp]
            for c, r, lab in rmap.cells()]
    cells_out = aio.write_table(outdir, "cells", header, rows, fmt)
    polylines = trace_boundaries(rmap, refine_tol=resolved["scan.refine_tol"])
    aux = boundary_fp_existence_curve(omega, c_range, r_range)
    boundaries = {
        "window": {"c": list(c_range), "r": list(r_range)},
        "omega": omega,
        "gamma": gamma,
        "refine_tol": resolved["scan.refine_tol"],
        "polylines": [
            {"labels": list(poly.labels),
             "points": [[float(c), float(r)] for c, r in poly.points]}
            for poly in polylines
        ],
        "boundary_fp_exists": [
            [[float(c), float(r)] for c, r in curve] for curve in aux
        ],
    }
    bnd_out = outdir / "boundaries.json"
    aio.write_json(bnd_out, boundaries)
    derived = {"gamma_plus": None, "gamma_minus": gamma, "c": None,
               "omega": omega}
    return _finish("regimes", resolved, derived, outdir, [cells_out, bnd_out])


def cmd_sweep(resolved, outdir, fmt):
    v, u = resolved["model.v"], resolved["model.u"]
    cfg = _integrator_config(resolved)
    # w tops out at 1/2 (a pure molecular state has |b|^2 = n/2);
    # molecular_fraction = 2w rescales it to [0, 1] for readability
    header = ["beta", "gamma", "w", "m", "m_defined", "molecular_fraction"]
    rows = []
    for beta in resolved["sweep.betas"]:
        protocol = SweepProtocol(beta=beta, r_max=resolved["sweep.r_max"])
        for gamma in resolved["sweep.gammas"]:
            p = Params(v=v, u=u, gamma_a=gamma, gamma_b=-gamma)
            report = sweep_conversion(protocol, p, cfg)
            m, defined = (report.m, True) if report.m is not None else ("", False)
            rows.append([beta, gamma, report.w, m, defined, 2.0 * report.w])
    out = aio.write_table(outdir, "efficiency", header, rows, fmt)
    derived = {"gamma_plus": 0.0, "gamma_minus": resolved["sweep.gammas"],
               "c": u, "omega": v}
    return _finish("sweep", resolved, derived, outdir, [out])


def cmd_trap(resolved, outdir, fmt):
    cfg = _integrator_config(resolved, t_final=resolved["trap.t_span"])
    run = self_trapping_run(
        u=resolved["model.u"], v=resolved["model.v"], r=resolved["model.r"],
        gamma_minus=resolved["trap.gamma"], a0_sq=resolved["trap.a0_sq"],
        t_span=resolved["trap.t_span"], theta0=resolved["trap.theta0"],
        cfg=cfg)
    header = ["t", "p_atom", "s", "theta"]
    rows = [[float(run.times[i]), float(run.p_atom[i]), float(run.s[i]),
             float(run.theta[i])] for i in range(len(run.times))]
    out = aio.write_table(outdir, "population", header, rows, fmt)
    summary = {
        "trapped": run.trapped,
        "min_p_atom": run.min_p_atom,
        "oscillation_amplitude": oscillation_amplitude(run.p_atom),
        "gamma_minus": run.gamma,
        "u": run.u,
    }
    sum_out = outdir / "summary.json"
    aio.write_json(sum_out, summary)
    derived = {"gamma_plus": 0.0, "gamma_minus": resolved["trap.gamma"],
               "c": resolved["model.u"], "omega": resolved["model.v"]}
    return _finish("trap", resolved, derived, outdir, [out, sum_out])


def cmd_portrait(resolved, outdir, fmt):
    q = _reduced_params(resolved)
    cfg = _integrator_config(resolved, t_final=resolved["portrait.t_span"])
    grid = default_ic_grid(n_s=resolved["portrait.n_s"],
                           n_theta=resolved["portrait.n_theta"])
    portrait = phase_portrait(q, ic_grid=grid,
                              t_span=resolved["portrait.t_span"], cfg=cfg)
    header = ["traj_id", "t", "s", "theta"]
    rows = []
    for k, tr in enumerate(portrait.trajectories):
        for i in range(len(tr.times)):
            rows.append([k, float(tr.times[i]), float(tr.s[i]),
                         float(tr.theta[i])])
    out = aio.write_table(outdir, "portrait", header, rows, fmt)
    fp_header = ["s", "theta", "kind", "eig1_re", "eig1_im", "eig2_re",
                 "eig2_im", "residual", "on_boundary"]
    fp_out = aio.write_table(outdir, "fixed_points", fp_header,
                             _fixed_point_rows(portrait.fixed_points), fmt)
    events = [
        None if ev is None else {"time": ev.time, "s": ev.s, "theta": ev.theta}
        for ev in portrait.pole_events
    ]
    sum_out = outdir / "portrait_summary.json"
    aio.write_json(sum_out, {"pole_events": events})
    derived = {"gamma_plus": None, "gamma_minus": q.gamma, "c": q.c,
               "omega": q.omega}
    return _finish("portrait", resolved, derived, outdir,
                   [out, fp_out, sum_out])


_HANDLERS = {
    "evolve": cmd_evolve,
    "fixed-points": cmd_fixed_points,
    "regimes": cmd_regimes,
    "sweep": cmd_sweep,
    "trap": cmd_trap,
    "portrait": cmd_portrait,
}


def run(args) -> int:
    resolved = _resolve(args)
    fmt = resolved["output.format"]
    if fmt not in ("csv", "json"):
        raise ConfigError(f"[output] format must be csv or json, got {fmt!r}")
    outdir = Path(resolved["output.path"])
    outdir.mkdir(parents=True, exist_ok=True)
    return _HANDLERS[args.command](resolved, outdir, fmt)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError,) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except StepUnderflowError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
