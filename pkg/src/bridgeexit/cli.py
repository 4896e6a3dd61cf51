"""Command-line front end.

Subcommands: distance, geodesic, exit, mc, figure.  Every run is driven by a
flat key = value config (--config takes a file path or the name of a bundled
config); results go to stdout and, with --out, to CSV or SVG.

Exit codes: 0 success, 2 configuration or input problem, 3 solver failure,
4 degenerate Monte Carlo estimate.
"""

from __future__ import annotations

import argparse
import importlib.resources
import sys
from pathlib import Path

import numpy as np

from .config import (
    ConfigView,
    boundary_from_view,
    endpoints_from_view,
    freeze_points_from_view,
    model_from_view,
    parse_config_text,
    solver_from_view,
    t_list_from_view,
)
from .errors import (
    BridgeExitError,
    ConfigError,
    DegenerateCorrelation,
    DegenerateEstimate,
    IncompleteModel,
    OutsideDomain,
    RejectionBudgetExceeded,
)
from .exits import (
    VerticalBarrier,
    _as_plane,
    compare_freezing,
    exit_asymptotics,
    model_distance,
)
from .geodesic import solve_geodesic
from .hyperbolic import hw_geodesic_image
from .model import ConstantGeometry, HullWhiteGeometry, diffusion_matrix
from .montecarlo import (
    RngSpec,
    crossing_curve,
    estimates_to_csv,
    hw_crossing_probability,
    ld_slope,
)
from .paths import format_sig, path_to_csv
from .svgplot import Curve, Marker, render_svg

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_DEGENERATE = 4


def _resolve_config_text(spec: str) -> str:
    p = Path(spec)
    if p.is_file():
        return p.read_text(encoding="utf-8")
    name = spec if spec.endswith(".cfg") else spec + ".cfg"
    res = importlib.resources.files("bridgeexit") / "configs" / name
    if res.is_file():
        return res.read_text(encoding="utf-8")
    raise ConfigError(f"config {spec!r} is neither a file nor a bundled config")


def _write_out(args, content: str) -> None:
    if args.out:
        Path(args.out).write_text(content, encoding="utf-8")
        print(f"wrote {args.out}")


# ---- distance ---- #


def _consume_shared_extras(view: ConfigView, model) -> None:
    # Bundled configs carry barrier/freeze/t/mc blocks so one file can drive
    # every subcommand; commands that do not use a block still accept it.
    # Keys a command already consumed are simply revisited.
    boundary_from_view(view, model.dim)
    freeze_points_from_view(view, model.dim)
    t_list_from_view(view)
    view.get_float("exit.truncation_factor", default=4.0)
    view.get_bool("exit.force_numeric", default=False)
    view.get_int("mc.n_paths", default=0)
    view.get_int("mc.n_steps", default=0)
    view.get_int("mc.batch_size", default=0)
    view.get_bool("mc.per_step_correction", default=True)
    view.get_int("mc.seed", default=0)
    view.get_int("mc.stream", default=0)
    view.get_int("mc.workers", default=1)
    view.get_float("mc.eps", default=0.0)
    view.get_int("mc.n_attempts", default=0)
    view.get_int("mc.min_accepted", default=0)
    view.get_int("figure.n", default=0)


def cmd_distance(view: ConfigView, args) -> int:
    model = model_from_view(view)
    x, y = endpoints_from_view(view, model.dim)
    opts = solver_from_view(view)
    _consume_shared_extras(view, model)
    view.finish()

    numeric = solve_geodesic(model, x, y, opts).distance
    closed = model_distance(model, x, y) if model.geometry is not None else None
    print(f"numeric = {format_sig(numeric)}")
    if closed is not None:
        gap = abs(closed - numeric) / max(abs(closed), 1e-300)
        print(f"closed_form = {format_sig(closed)}")
        print(f"rel_gap = {format_sig(gap)}")
        row = f"{format_sig(closed)},{format_sig(numeric)},{format_sig(gap)}"
    else:
        row = f",{format_sig(numeric)},"
    _write_out(args, "closed_form,numeric,rel_gap\n" + row + "\n")
    return EXIT_OK


# ---- geodesic ---- #


def cmd_geodesic(view: ConfigView, args) -> int:
    model = model_from_view(view)
    x, y = endpoints_from_view(view, model.dim)
    opts = solver_from_view(view)
    _consume_shared_extras(view, model)
    view.finish()

    res = solve_geodesic(model, x, y, opts)
    print(f"distance = {format_sig(res.distance)}")
    print(f"energy = {format_sig(res.energy)}")
    print(f"iterations = {res.iterations}")
    print(f"grad_sup = {format_sig(res.grad_sup)}")
    print(f"stalled = {res.stalled}")
    if res.multistart_spread:
        print(f"multistart_spread = {format_sig(res.multistart_spread)}")
    _write_out(args, path_to_csv(res.path))
    return EXIT_OK


# ---- exit ---- #


def _probability_header(t_list) -> list[str]:
    return [f"p_at_{format(t, 'g')}" for t in t_list]


def cmd_exit(view: ConfigView, args) -> int:
    model = model_from_view(view)
    x, y = endpoints_from_view(view, model.dim)
    boundary = boundary_from_view(view, model.dim, required=True)
    opts = solver_from_view(view)
    t_list = t_list_from_view(view)
    freeze = freeze_points_from_view(view, model.dim)
    trunc = view.get_float("exit.truncation_factor", default=4.0)
    force = view.get_bool("exit.force_numeric", default=False)
    _consume_shared_extras(view, model)
    view.finish()
    workers = args.workers or 1

    if freeze:
        comp = compare_freezing(model, x, y, boundary, freeze, t_list=t_list,
                                opts=opts, workers=workers)
        rows = comp.rows
    else:
        res = exit_asymptotics(model, x, y, boundary, opts=opts,
                               workers=workers, truncation_factor=trunc,
                               force_numeric=force)
        from .exits import FreezingRow, exit_probability_equivalent

        probs = tuple(exit_probability_equivalent(res.J, t) for t in t_list)
        rows = (FreezingRow("true", res, probs),)

    for row in rows:
        r = row.result
        zs = ", ".join(format_sig(v) for v in r.z_star)
        print(f"[{row.label}] J = {format_sig(r.J)}  u_bar = {format_sig(r.u_bar)}"
              f"  z_star = ({zs})  method = {r.method}")
        flags = []
        if r.geodesic_exits:
            flags.append("geodesic exits the domain")
        if r.degenerate:
            flags.append("an endpoint sits on the barrier")
        if flags:
            print("  note: " + "; ".join(flags))
        for t, p in zip(t_list, row.probabilities):
            print(f"  p(t={format(t, 'g')}) ~ {format_sig(p)}")

    d = model.dim
    header = (["label", "J"] + [f"z_star_{i}" for i in range(d)]
              + ["u_bar", "d_xy", "d_xz", "d_zy", "method"]
              + _probability_header(t_list))
    lines = [",".join(header)]
    for row in rows:
        r = row.result
        cells = [row.label, format_sig(r.J)]
        cells += [format_sig(v) for v in r.z_star]
        cells += [
            format_sig(r.u_bar) if np.isfinite(r.u_bar) else "nan",
            format_sig(r.d_xy),
            format_sig(r.d_xz),
            format_sig(r.d_zy),
            r.method,
        ]
        cells += [format_sig(p) for p in row.probabilities]
        lines.append(",".join(cells))
    _write_out(args, "\n".join(lines) + "\n")
    return EXIT_OK


# ---- mc ---- #


def cmd_mc(view: ConfigView, args) -> int:
    model = model_from_view(view)
    x, y = endpoints_from_view(view, model.dim)
    boundary = boundary_from_view(view, model.dim, required=True)
    t_list = t_list_from_view(view, required=True)
    n_paths = view.get_int("mc.n_paths", default=100000)
    n_steps = view.get_int("mc.n_steps", default=50)
    batch_size = view.get_int("mc.batch_size", default=16384)
    per_step = view.get_bool("mc.per_step_correction", default=True)
    seed = args.seed if args.seed is not None else view.get_int("mc.seed", default=0)
    stream = view.get_int("mc.stream", default=0)
    workers = (args.workers if args.workers is not None
               else view.get_int("mc.workers", default=1))
    geom = model.geometry
    is_hw = isinstance(geom, HullWhiteGeometry)
    if is_hw:
        eps = view.get_float("mc.eps", default=0.02)
        n_attempts = view.get_int("mc.n_attempts", default=200000)
        min_accepted = view.get_int("mc.min_accepted", default=50)
        b = view.get_float("model.b", default=0.0)
        mu = view.get_float("model.mu", default=0.0)
    _consume_shared_extras(view, model)
    view.finish()
    if n_paths < 1 or n_steps < 1:
        raise ConfigError("mc.n_paths and mc.n_steps must be positive")
    rng = RngSpec(seed, stream)

    if isinstance(geom, ConstantGeometry):
        cov = diffusion_matrix(model, np.zeros(model.dim))
        estimates = crossing_curve(
            x, y, t_list, cov, boundary, n_paths, n_steps, rng,
            workers=workers, batch_size=batch_size,
            per_step_correction=per_step,
        )
    elif is_hw:
        estimates = []
        for k, t in enumerate(t_list):
            estimates.append(
                hw_crossing_probability(
                    geom.sigma_vol, geom.rho, b, mu, x, y, t, boundary,
                    n_attempts, n_steps, rng.with_stream(stream + k), eps,
                    min_accepted=min_accepted, workers=workers,
                    batch_size=batch_size, per_step_correction=per_step,
                )
            )
    else:
        raise ConfigError(
            "mc supports constant and volatility models only"
        )

    analytic = exit_asymptotics(model, x, y, boundary).J
    for e in estimates:
        print(
            f"t = {format(e.t, 'g')}  p_hat = {format_sig(e.p_hat)} "
            f"+/- {format_sig(e.ci_half_width)}  n = {e.n_paths}  "
            f"exponent = "
            + (format_sig(e.exponent) if np.isfinite(e.exponent) else "inf")
        )
    print(f"analytic_J = {format_sig(analytic)}")

    fit_val = None
    degenerate_msg = None
    if len(t_list) >= 3:
        try:
            fit = ld_slope(estimates)
            fit_val = fit.intercept
            print(f"extrapolated_exponent = {format_sig(fit.intercept)}")
            print(f"slope = {format_sig(fit.slope)}")
        except DegenerateEstimate as exc:
            degenerate_msg = str(exc)
    _write_out(args, estimates_to_csv(estimates, extrapolated=fit_val,
                                      analytic_J=analytic))
    if degenerate_msg is not None:
        print(f"error: {degenerate_msg}", file=sys.stderr)
        return EXIT_DEGENERATE
    return EXIT_OK


# ---- figure ---- #


def _geodesic_curve(model, p, q, opts, n):
    g = model.geometry
    if isinstance(g, HullWhiteGeometry):
        return hw_geodesic_image(g.sigma_vol, g.rho, p, q, n=n).path.points
    if isinstance(g, ConstantGeometry):
        u = np.linspace(0.0, 1.0, n + 1)[:, None]
        return (1.0 - u) * np.asarray(p) + u * np.asarray(q)
    return solve_geodesic(model, p, q, opts).path.points


def cmd_figure(view: ConfigView, args) -> int:
    if not args.out:
        raise ConfigError("figure needs --out <file.svg>")
    model = model_from_view(view)
    if model.dim != 2:
        raise ConfigError("figure supports two-dimensional models only")
    x, y = endpoints_from_view(view, model.dim)
    boundary = boundary_from_view(view, model.dim)
    opts = solver_from_view(view)
    freeze = freeze_points_from_view(view, model.dim)
    n = view.get_int("figure.n", default=200)
    _consume_shared_extras(view, model)
    view.finish()
    workers = args.workers or 1

    curves = [Curve(_geodesic_curve(model, x, y, opts, n), "solid", "geodesic")]
    markers = [
        Marker(float(x[0]), float(x[1]), role="start", label="x"),
        Marker(float(y[0]), float(y[1]), role="end", label="y"),
    ]
    if boundary is not None:
        res = exit_asymptotics(model, x, y, boundary, opts=opts, workers=workers)
        z = res.z_star
        curves.append(Curve(_geodesic_curve(model, x, z, opts, n), "dotted",
                            "crossing_leg_in", color="#d62728"))
        curves.append(Curve(_geodesic_curve(model, z, y, opts, n), "dotted",
                            "crossing_leg_out", color="#d62728"))
        markers.append(Marker(float(z[0]), float(z[1]), role="crossing",
                              label="z*", color="#d62728"))
        for k, z0 in enumerate(freeze):
            from .exits import frozen_exit_asymptotics

            fr = frozen_exit_asymptotics(model, x, y, boundary, z0, opts=opts)
            markers.append(
                Marker(float(fr.z_star[0]), float(fr.z_star[1]),
                       role=f"frozen_crossing_{k}", label=f"z*froz{k}",
                       color="#9467bd")
            )
        pts = np.concatenate([c.points for c in curves])
        ymin, ymax = float(pts[:, 1].min()), float(pts[:, 1].max())
        pad = 0.15 * max(ymax - ymin, 1e-9)
        plane = _as_plane(boundary, 2)
        nvec, c0 = plane.normal, plane.offset
        tangent = np.array([-nvec[1], nvec[0]])
        mid = 0.5 * (x + y)
        anchor = mid - (float(nvec @ mid) - c0) * nvec
        xmin, xmax = float(pts[:, 0].min()), float(pts[:, 0].max())
        span = float(np.hypot(xmax - xmin, ymax - ymin)) + 2.0 * pad
        seg = np.stack([anchor - span * tangent, anchor + span * tangent])
        if isinstance(boundary, VerticalBarrier) or abs(nvec[0]) == 1.0:
            lo = ymin - pad
            if isinstance(model.geometry, HullWhiteGeometry):
                lo = max(lo, 1e-9)
            seg = np.array([[anchor[0], lo], [anchor[0], ymax + pad]])
        curves.insert(0, Curve(seg, "dashed", "barrier", color="#7f7f7f",
                               width=1.5))
    svg = render_svg(curves, markers)
    Path(args.out).write_text(svg, encoding="utf-8")
    print(f"wrote {args.out}")
    return EXIT_OK


# ---- wiring ---- #


COMMANDS = {
    "distance": (cmd_distance, "geodesic distance between x and y"),
    "geodesic": (cmd_geodesic, "solve and export the minimizing path"),
    "exit": (cmd_exit, "exit exponent against a barrier, with freezing rows"),
    "mc": (cmd_mc, "Monte Carlo barrier-crossing estimates and slope fit"),
    "figure": (cmd_figure, "render geodesic, barrier and crossing as SVG"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bridgeexit",
        description="Small-time exit asymptotics for pinned diffusions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (fn, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True,
                       help="config file path or bundled config name")
        p.add_argument("--out", default=None, help="output CSV or SVG path")
        p.add_argument("--workers", type=int, default=None,
                       help="worker threads (default: config or 1)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the Monte Carlo seed")
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = parse_config_text(_resolve_config_text(args.config))
        view = ConfigView(raw)
        return args.func(view, args)
    except (ConfigError, OutsideDomain, IncompleteModel,
            DegenerateCorrelation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateEstimate, RejectionBudgetExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except BridgeExitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
