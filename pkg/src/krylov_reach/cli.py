"""Command-line front end: reach, simulate, check, info."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import CertificateError, InputError, ReachError
from .homogeneous import KrylovOperator
from .input_solution import input_columns
from .io import (Scenario, load_scenario, write_hulls_csv, write_polygons_csv, write_trajectories_csv)
from .reach import check_safety, reach
from .sets import linear_map, polygon_2d, project

EXIT_OK, EXIT_UNSAFE, EXIT_INPUT, EXIT_CERT = 0, 1, 2, 3


def _run_reach(sc: Scenario):
    return reach(sc.A, sc.B, sc.X0, sc.U, sc.cfg)


def _trajectories(sc: Scenario, count: int, seed: int, resolution: float | None):
    from .oracle import random_signal, sample_zonotope, simulate_many
    rng = np.random.default_rng(seed)
    t_f = sc.cfg.steps * sc.cfg.delta
    res = resolution or sc.cfg.delta / 16
    X0s = sample_zonotope(sc.X0, rng, count)
    sigs = [random_signal(sc.U, t_f, res, rng) for _ in range(count)]
    t_eval = np.arange(0, sc.cfg.steps + 1) * sc.cfg.delta
    return simulate_many(sc.A, sc.B, X0s, sigs, t_f, tol=float(sc.simulation.get("tol", 1e-10)), t_eval=t_eval)


def cmd_reach(args) -> int:
    sc = load_scenario(args.scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    res = _run_reach(sc)
    write_hulls_csv(out / "hulls.csv", res, "interval")
    write_hulls_csv(out / "points.csv", res, "point")
    (out / "diagnostics.json").write_text(json.dumps(res.diagnostics, indent=1, sort_keys=True) + "\n")
    trajs = None
    if args.plot and args.trajectories:
        trajs = _trajectories(sc, args.trajectories, args.seed, None)
    for dims in sc.projections:
        polys = write_polygons_csv(out / f"projection_{dims[0]}_{dims[1]}.csv", res, dims)
        if args.plot:
            from .plotting import plot_projection
            plot_projection(out / f"projection_{dims[0]}_{dims[1]}.png", polys, dims, trajs,
                            initial=polygon_2d(project(sc.X0, dims)))
    if args.plot:
        from .io import read_hulls_csv
        from .plotting import plot_bounds
        _, tl, th, lo, hi = read_hulls_csv(out / "hulls.csv")
        for i in sorted(sc.unsafe) or [0]:
            plot_bounds(out / f"bounds_{i}.png", tl, th, lo, hi, i, sc.unsafe.get(i))
    print(f"{res.steps} steps written to {out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = load_scenario(args.scenario)
    trajs = _trajectories(sc, args.count, args.seed, args.resolution)
    write_trajectories_csv(args.out, trajs)
    print(f"{len(trajs)} trajectories written to {args.out}")
    return EXIT_OK


def cmd_check(args) -> int:
    sc = load_scenario(args.scenario)
    if not sc.unsafe:
        raise InputError("scenario has no unsafe sets under outputs.unsafe")
    res = _run_reach(sc)
    v = check_safety(res, sc.unsafe)
    if v.safe:
        print(f"SAFE ({res.steps} steps)")
        return EXIT_OK
    print(f"UNSAFE at step {v.first_violation} "
          f"(t in [{(v.first_violation - 1) * sc.cfg.delta!r}, {v.first_violation * sc.cfg.delta!r}])")
    return EXIT_UNSAFE


def cmd_info(args) -> int:
    sc = load_scenario(args.scenario)
    cfg = sc.cfg
    op = KrylovOperator(sc.A, cfg.xi_policy, strict=cfg.strict_soundness)
    b = op.info.bounds
    print(f"n = {op.n}, nnz = {sc.A.nnz}, 2-norm bound = {op.info.norm:.6g}")
    print(f"spectral bounds: a = {b.a:.6g}, b = {b.b:.6g}, c = {b.c:.6g} ({b.method})")
    ch = op.dimension(cfg.delta)
    c = ch.certificate
    print(f"state columns: xi = {ch.xi}, eps_norm = {c.eps_norm:.3e}, error/step = {c.error:.3e}, "
          f"method = {c.method}, target met = {ch.met}")
    U = sc.U if sc.B is None else linear_map(sc.B, sc.U)
    W = np.column_stack([U.center, U.generators])
    ic = input_columns(op, W, cfg.delta, cfg.eta_policy, strict=cfg.strict_soundness)
    for j in range(W.shape[1]):
        name = "center" if j == 0 else f"generator {j}"
        if not np.any(W[:, j]):
            print(f"input {name}: zero")
            continue
        print(f"input {name}: xi = {ic.xi[j]}, eta = {ic.eta[j]}, eps_norm = {ic.eps_norm[j]:.3e}, "
              f"method = {ic.methods[j]}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="krylov-reach", description="Reachability of sparse linear systems.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("reach", help="compute reachable sets and write hulls and projections")
    r.add_argument("scenario")
    r.add_argument("-o", "--out", default="reach_out")
    r.add_argument("--plot", action="store_true", help="also render PNG figures")
    r.add_argument("--trajectories", type=int, default=0, help="random trajectories drawn in the figures")
    r.add_argument("--seed", type=int, default=0)
    r.set_defaults(func=cmd_reach)
    s = sub.add_parser("simulate", help="simulate random trajectories")
    s.add_argument("scenario")
    s.add_argument("-o", "--out", default="trajectories.csv")
    s.add_argument("-n", "--count", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--resolution", type=float, default=None, help="input switching period (default delta/16)")
    s.set_defaults(func=cmd_simulate)
    c = sub.add_parser("check", help="check the unsafe sets of a scenario")
    c.add_argument("scenario")
    c.set_defaults(func=cmd_check)
    i = sub.add_parser("info", help="print certificate diagnostics")
    i.add_argument("scenario")
    i.set_defaults(func=cmd_info)
    return p


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CertificateError as exc:
        print(f"certificate failure: {exc}", file=sys.stderr)
        return EXIT_CERT
    except (ReachError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
