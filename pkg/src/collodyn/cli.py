"""Command-line interface: collocation checks, charts, and experiments.

Machine-readable JSON goes to stdout (or files); human diagnostics go to
stderr.  Exit codes: 0 success / all columns integrable, 2 any column
non-integrable (or chart construction failed), 3 inconclusive test,
64 unknown model or bad usage.
"""

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import numdiff
from .charts import (
    INTEGRABLE,
    NON_INTEGRABLE,
    OVERACTUATED,
    build_chart,
    check_integrability,
    infer_regime,
    transform_force,
    verify_power_invariance,
)
from .control import (
    Gains,
    PDFeedforwardController,
    PSatIDController,
    QSpacePDController,
    ThetaView,
    equilibrium_config,
)
from .core import ConfigState
from .errors import CollodynError, NotCollocatedError, SingularConfigurationError
from .models import MODEL_REGISTRY, make_model
from .simulate import ReferenceSchedule, export_csv, integrate

EXIT_OK = 0
EXIT_NON_INTEGRABLE = 2
EXIT_INCONCLUSIVE = 3
EXIT_USAGE = 64

OUT_DIR_ENV = "COLLODYN_OUT_DIR"


def _parse_box(spec: str, n: int):
    """Parse 'lo..hi[,lo..hi...]'; a single range broadcasts to all axes."""
    parts = spec.split(",")
    ranges = []
    for part in parts:
        lo, _, hi = part.partition("..")
        ranges.append((float(lo), float(hi)))
    if len(ranges) == 1:
        ranges = ranges * n
    if len(ranges) != n:
        raise ValueError(f"box needs 1 or {n} ranges, got {len(ranges)}")
    return ranges


def _parse_vector(spec: str):
    return np.array([float(x) for x in spec.split(",")])


def _load_model(args):
    try:
        return make_model(args.model, params_path=getattr(args, "params", None))
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def cmd_check(args) -> int:
    model = _load_model(args)
    act = model.actuation
    box = _parse_box(args.box, act.n) if args.box else act.default_box()
    report = check_integrability(
        act, box, tol=args.tol, samples=args.samples, seed=args.seed
    )
    json.dump(report.to_dict(), sys.stdout, indent=2)
    print()
    if report.any_non_integrable:
        return EXIT_NON_INTEGRABLE
    if not report.all_integrable:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def _chart_summary(chart, act, q0, seed=0, samples=32):
    A0 = act(q0)
    if chart.regime == OVERACTUATED:
        block = A0[:, list(chart.columns)]
    else:
        block = A0[list(chart.actuated_rows), :]
    sigma_min = float(np.linalg.svd(block, compute_uv=False)[-1])

    rng = np.random.default_rng(seed)
    r = chart.r
    worst_decouple = 0.0
    worst_power = 0.0
    worst_grad = 0.0
    for _ in range(samples):
        q = q0 + 0.1 * rng.standard_normal(act.n)
        u = rng.standard_normal(act.m)
        qd = rng.standard_normal(act.n)
        tau = transform_force(chart, act, q, u)
        if chart.regime == OVERACTUATED:
            expected = np.linalg.solve(block.T @ block, block.T @ (A0 @ u))
            # decoupling means the selected channels carry u exactly at q0
            del expected
        else:
            worst_decouple = max(
                worst_decouple, float(np.abs(tau[:r] - u[:r]).max())
            )
            if r < act.n:
                worst_decouple = max(worst_decouple, float(np.abs(tau[r:]).max()))
        worst_power = max(worst_power, verify_power_invariance(chart, act, q, qd, u))
        J_fd = numdiff.jacobian(chart.h, q, h=1e-6)
        worst_grad = max(worst_grad, float(np.abs(J_fd - chart.jacobian(q)).max()))
    summary = {
        "regime": chart.regime,
        "actuated_rows": list(chart.actuated_rows),
        "unactuated_rows": list(chart.unactuated_rows),
        "columns": list(chart.columns),
        "sigma_min": sigma_min,
        "power_invariance_residual": worst_power,
        "jacobian_fd_residual": worst_grad,
    }
    if chart.regime != OVERACTUATED:
        summary["decoupling_residual"] = worst_decouple
    return summary


def cmd_chart(args) -> int:
    model = _load_model(args)
    act = model.actuation
    q0 = _parse_vector(args.q0)
    if q0.size != act.n:
        print(f"error: q0 needs {act.n} entries", file=sys.stderr)
        return EXIT_USAGE
    rows = tuple(int(r) for r in args.rows.split(",")) if args.rows else None
    try:
        charts = []
        if infer_regime(act) == OVERACTUATED and rows is None:
            # one chart per admissible single-column choice when n == 1,
            # otherwise the greedy default
            if act.n == 1:
                for col in range(act.m):
                    try:
                        charts.append(build_chart(act, q0=q0, columns=(col,)))
                    except SingularConfigurationError:
                        continue
            else:
                charts.append(build_chart(act, q0=q0))
        else:
            charts.append(build_chart(act, q0=q0, rows=rows))
    except NotCollocatedError as exc:
        json.dump(
            {"error": "NotCollocated", "report": exc.report.to_dict()},
            sys.stdout,
            indent=2,
        )
        print()
        return EXIT_NON_INTEGRABLE
    except SingularConfigurationError as exc:
        json.dump({"error": "SingularConfiguration", "message": str(exc)}, sys.stdout)
        print()
        return EXIT_NON_INTEGRABLE
    doc = {
        "model": args.model,
        "q0": q0.tolist(),
        "charts": [_chart_summary(c, act, q0) for c in charts],
    }
    json.dump(doc, sys.stdout, indent=2)
    print()
    return EXIT_OK


def _build_controller(conf, model, act, chart, schedule_values, guesses):
    name = conf.get("name", "none")
    if name == "none":
        return None
    m_channels = act.n if act.m > act.n else act.m
    if "gains" in conf:
        g = conf["gains"]
        gains = Gains(
            K_P=np.asarray(g["K_P"], dtype=float),
            K_D=np.asarray(g["K_D"], dtype=float),
            K_I=np.asarray(g["K_I"], dtype=float),
            gamma=float(g.get("gamma", 1.0)),
            k_P=float(g.get("k_P", 2.5e3)),
            k_D=float(g.get("k_D", 10.0)),
        )
    else:
        gains = Gains.defaults(m_channels, scale=float(conf.get("scale", 1.0)))
    if name == "p_sat_i_d":
        return PSatIDController(gains, m_channels, chart)
    if name == "pd_plus_feedforward":
        view = ThetaView(model, act, chart)
        controller = PDFeedforwardController(gains, view)
        if guesses is not None:
            for theta_ad, q_guess in zip(schedule_values, guesses):
                controller.prepare(
                    theta_ad, chart.h(q_guess)[chart.m:], guess_q=q_guess
                )
        return controller
    if name == "pd_plus_q_space":
        return QSpacePDController(gains, model, act)
    raise ValueError(f"unknown controller {name!r}")


def _resolve_schedule(conf, model, act):
    """Build the reference schedule; tension patterns generate equilibrium
    shape targets via the statics solver (optionally rounded, mirroring
    printed shape commands)."""
    spacing = float(conf.get("spacing", 2.0))
    if "tension_patterns" in conf:
        patterns = [np.asarray(p, dtype=float) for p in conf["tension_patterns"]]
        decimals = conf.get("round_decimals")
        guess = (
            model.bend_guess(patterns[0])
            if hasattr(model, "bend_guess")
            else np.zeros(model.dof)
        )
        targets = []
        for u_ss in patterns:
            if hasattr(model, "bend_guess"):
                guess = model.bend_guess(u_ss)
            q_eq = equilibrium_config(model, act, u_ss, guess)
            if not hasattr(model, "bend_guess"):
                guess = q_eq
            if decimals is not None:
                q_eq = np.round(q_eq, int(decimals))
            targets.append(q_eq)
        times = tuple(spacing * i for i in range(len(targets)))
        kind = conf.get("kind", "theta")
        if kind == "theta":
            values = tuple(act.closed_form_g(q) for q in targets)
        else:
            values = tuple(targets)
        return ReferenceSchedule(times=times, values=values, kind=kind), targets
    times = tuple(float(t) for t in conf["times"])
    values = tuple(np.asarray(v, dtype=float) for v in conf["values"])
    return ReferenceSchedule(times=times, values=values, kind=conf.get("kind", "theta")), None


def _write_backbone(model, traj, path, every):
    rows = []
    for k in range(0, len(traj.t), every):
        pts = model.backbone(traj.q[k])
        for i, p in enumerate(pts):
            rows.append((traj.t[k], i, p[0], p[1], p[2]))
    with open(path, "w") as handle:
        handle.write("t,point,x,y,z\n")
        for r in rows:
            handle.write(",".join(f"{x:.17g}" for x in r) + "\n")


def cmd_simulate(args) -> int:
    with open(args.config) as handle:
        conf = json.load(handle)
    if conf.get("schema") != 1:
        print("error: config schema must be 1", file=sys.stderr)
        return EXIT_USAGE
    mconf = conf["model"]
    try:
        model = make_model(
            mconf["name"],
            params_path=mconf.get("params_file"),
            overrides=mconf.get("params"),
        )
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    act = model.actuation

    schedule, targets = _resolve_schedule(conf["schedule"], model, act)

    chart = None
    chart_conf = conf.get("chart")
    if chart_conf is not None:
        rows = chart_conf.get("rows")
        cols = chart_conf.get("columns")
        q0 = np.asarray(
            chart_conf.get("q0", targets[0] if targets is not None else np.zeros(model.dof)),
            dtype=float,
        )
        chart = build_chart(
            act,
            q0=q0,
            rows=tuple(rows) if rows else None,
            columns=tuple(cols) if cols else None,
        )

    controller = _build_controller(
        conf.get("controller", {}), model, act, chart,
        schedule.values if schedule is not None else (), targets,
    )

    integ = conf.get("integrator", {})
    dt = float(integ.get("dt", 1e-3))
    t_final = float(integ.get("t_final", 6.0))
    init = conf.get("initial_state", {})
    q0v = np.asarray(init.get("q", np.zeros(model.dof)), dtype=float)
    qd0 = np.asarray(init.get("qdot", np.zeros(model.dof)), dtype=float)

    out_conf = conf.get("output", {})
    out_dir = Path(
        args.out
        or out_conf.get("dir")
        or os.environ.get(OUT_DIR_ENV, ".")
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    base = out_conf.get("basename", "trajectory")

    traj = integrate(
        model, act, controller, schedule, t_final, dt,
        state0=ConfigState(q0v, qd0), chart=chart,
        metadata={
            "model": mconf["name"],
            "controller": conf.get("controller", {}).get("name", "none"),
            "seed": conf.get("seed", 0),
            "schema": 1,
        },
    )

    export_csv(traj, out_dir / f"{base}.csv", out_dir / f"{base}.meta.json")

    # steady-state errors at the end of each reference window
    window_errors = []
    if schedule is not None:
        r = min(act.m, act.n)
        boundaries = list(schedule.times[1:]) + [t_final]
        for t_end, value in zip(boundaries, schedule.values):
            k = traj.sample_at(t_end - dt)
            if schedule.kind == "theta":
                target = value
            else:
                target = act.closed_form_g(value) if act.closed_form_g else None
            if target is not None:
                err = float(np.linalg.norm(traj.theta[k][: len(target[:r])] - target[:r]))
            else:
                err = float("nan")
            window_errors.append({"t_end": t_end, "theta_error": err})
    summary = {
        "schema": 1,
        "model": mconf["name"],
        "controller": conf.get("controller", {}).get("name", "none"),
        "failed": traj.failed,
        "failure_reason": traj.failure_reason,
        "min_tension": float(traj.u.min()) if traj.u.size else 0.0,
        "energy_residual": traj.metadata["energy_residual"],
        "window_errors": window_errors,
    }
    with open(out_dir / f"{base}.summary.json", "w") as handle:
        json.dump(summary, handle, indent=2)
        handle.write("\n")

    if out_conf.get("backbone") and hasattr(model, "backbone"):
        every = int(out_conf.get("backbone_every", 100))
        _write_backbone(model, traj, out_dir / f"{base}.backbone.csv", every)

    print(json.dumps(summary, indent=2))
    return EXIT_OK if not traj.failed else EXIT_NON_INTEGRABLE


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="collodyn",
        description="Collocation tests and input-decoupling charts for "
                    "Lagrangian systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="test actuation-matrix integrability")
    p_check.add_argument("--model", required=True, help=f"one of {sorted(MODEL_REGISTRY)}")
    p_check.add_argument("--params", help="JSON parameter file")
    p_check.add_argument("--box", help="sampling box lo..hi[,lo..hi...]")
    p_check.add_argument("--tol", type=float, default=1e-4)
    p_check.add_argument("--samples", type=int, default=512)
    p_check.add_argument("--seed", type=int, default=0)
    p_check.set_defaults(func=cmd_check)

    p_chart = sub.add_parser("chart", help="build the decoupling chart at q0")
    p_chart.add_argument("--model", required=True)
    p_chart.add_argument("--params", help="JSON parameter file")
    p_chart.add_argument("--q0", required=True, help="comma-separated configuration")
    p_chart.add_argument("--rows", help="explicit actuated row selection")
    p_chart.set_defaults(func=cmd_chart)

    p_sim = sub.add_parser("simulate", help="run an experiment config")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--out", help=f"output directory (default ${OUT_DIR_ENV} or .)")
    p_sim.set_defaults(func=cmd_simulate)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CollodynError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NON_INTEGRABLE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
