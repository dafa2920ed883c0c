"""Command-line front end: junction solves, network simulation, capacity-drop sweeps.

Exit codes: 0 success, 2 scenario/argument errors, 3 numerical solver failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import fundamental as fd
from . import junction as jn
from . import oracle, scenario, sim
from .junction import JunctionKind
from .rootfind import SolverFailure
from .scenario import ScenarioError

EXIT_OK = 0
EXIT_SCENARIO = 2
EXIT_NUMERIC = 3


def _threads_hint() -> int | None:
    val = os.environ.get("ARZNET_THREADS")
    return int(val) if val else None


def _load_single_junction(path):
    sc = scenario.load(path)
    if len(sc.junctions) != 1:
        raise ScenarioError(f"{path}: expected exactly one junction, found {len(sc.junctions)}")
    decl = sc.junctions[0]
    return sc, decl, scenario.build_junction_spec(sc, decl), scenario.junction_states(sc, decl)


def cmd_solve(args) -> int:
    sc, decl, spec, states = _load_single_junction(args.scenario)
    sol = jn.solve(spec, states)
    print(f"kind: {decl.kind.value}")
    for rid, q, w in zip(decl.in_ids, sol.q_in, sol.w_in):
        print(f"in  {rid}: q={q:.6f} w={w:.6f}")
    for rid, q, w in zip(decl.out_ids, sol.q_out, sol.w_out):
        print(f"out {rid}: q={q:.6f} w_mix={w:.6f}")
    if sol.ratio is not None:
        print(f"ratio: {sol.ratio:.6f} (1 - ratio: {1 - sol.ratio:.6f})")
    for rid, b in zip(decl.in_ids + decl.out_ids, sol.boundary_in + sol.boundary_out):
        print(f"boundary {rid}: rho={b.rho:.6f} v={b.v:.6f}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = scenario.load(args.scenario)
    network = scenario.build_network(sc)
    cfg = scenario.sim_config(sc, cfl=args.cfl, t_end=args.t_end)
    result = sim.run(network, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sim.write_flux_csv(result, out / "fluxes.csv")
    sim.write_profile_csv(result, out / "profiles.csv")
    r_mass, r_mom = result.ledger.residuals()
    with open(out / "ledger.csv", "w") as fh:
        fh.write("quantity,initial,final,inflow,outflow,relative_residual\n")
        led = result.ledger
        fh.write(f"mass,{led.initial_mass!r},{led.final_mass!r},"
                 f"{led.mass_in!r},{led.mass_out!r},{r_mass!r}\n")
        fh.write(f"momentum,{led.initial_momentum!r},{led.final_momentum!r},"
                 f"{led.momentum_in!r},{led.momentum_out!r},{r_mom!r}\n")
    print(f"steps: {result.steps}  t_end: {result.times[-1]:.6f}  steady: {result.steady}")
    for rid, q in result.steady_fluxes.items():
        print(f"junction flux {rid}: {q:.6f}")
    return EXIT_OK


def _merge_scenario_pieces(sc):
    if len(sc.junctions) != 1 or sc.junctions[0].kind is not JunctionKind.MERGE:
        raise ScenarioError("scenario must contain exactly one merge junction")
    return sc.junctions[0]


def cmd_capacity_drop(args) -> int:
    sc = scenario.load(args.scenario)
    decl = _merge_scenario_pieces(sc)
    road1 = sc.road(decl.in_ids[0])
    road2 = sc.road(decl.in_ids[1])
    sweep = [float(v) for v in args.sweep.split(",") if v.strip() != ""]
    if not sweep:
        raise ScenarioError("empty sweep")
    q2_cap = road2.params.v_ref * road2.params.rho_max / 4.0
    for q in sweep:
        if not 0.0 <= q <= q2_cap:
            raise ScenarioError(f"sweep value {q} outside [0, {q2_cap}]")
    s1 = road1.initial_state
    desired1 = s1.rho * s1.v

    rows = []
    for q2_desired in sweep:
        rho2 = float(fd.equilibrium_density(road2.params, q2_desired))
        roads = [r if r.road_id != road2.road_id else
                 scenario.RoadSpec(r.road_id, r.params, r.length, r.cells, rho2)
                 for r in sc.roads]
        sc_k = scenario.Scenario(roads=roads, junctions=sc.junctions, sim=sc.sim)
        if args.direct:
            spec = scenario.build_junction_spec(sc_k, decl)
            sol = jn.solve(spec, scenario.junction_states(sc_k, decl))
            q1, q2 = sol.q_in
            outflow = sol.q_out[0]
        else:
            network = scenario.build_network(sc_k)
            cfg = scenario.sim_config(sc_k, cfl=args.cfl, t_end=args.t_end)
            result = sim.run(network, cfg)
            q1 = result.steady_fluxes[decl.in_ids[0]]
            q2 = result.steady_fluxes[decl.in_ids[1]]
            outflow = result.steady_fluxes[decl.out_ids[0]]
        total = q1 + q2
        r1 = q1 / total if total > 0 else float("nan")
        rows.append((desired1, q1, q2_desired, q2, outflow, r1, 1.0 - r1))

    header = ["desired1", "actual1", "desired2", "actual2", "outflow", "ratio1", "ratio2"]
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(float(x)) for x in row))
    csv_text = "\n".join(lines) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "capacity_drop.csv").write_text(csv_text)
    print(" desired1  actual1  desired2  actual2  outflow  ratio1  ratio2")
    for d1, a1, d2, a2, of, r1, r2 in rows:
        print(f" {d1:8.1f} {a1:8.1f}  {d2:8.1f} {a2:8.1f} {of:8.1f}   {r1:.3f}   {r2:.3f}")
    return EXIT_OK


def cmd_pareto_dump(args) -> int:
    sc, decl, spec, states = _load_single_junction(args.scenario)
    if decl.kind is not JunctionKind.MERGE:
        raise ScenarioError("pareto-dump requires a merge scenario")
    n = args.grid
    if n < 100:
        raise ScenarioError(f"grid resolution must be at least 100, got {n}")
    in1 = (spec.incoming[0], states[0])
    in2 = (spec.incoming[1], states[1])
    out3 = (spec.outgoing[0], states[2])
    ctx = oracle.MergeContext(in1, in2, out3)
    sample = oracle.sample_pareto(ctx, n=n, threads=_threads_hint())

    sol = jn.solve(spec, states)
    geom = jn.merge_geometry(in1, in2, out3)
    priority = spec.priority
    f_p = min(ctx.delta1 / priority, ctx.delta2 / (1.0 - priority),
              jn.sigma_tilde(geom, priority))
    markers = [
        ("solver", sol.q_in[0], sol.q_in[1]),
        ("priority_split", priority * f_p, (1.0 - priority) * f_p),
    ]
    if geom.p_star is not None and 0.0 <= geom.p_star <= 1.0:
        s_star = jn.sigma_tilde(geom, geom.p_star)
        markers.append(("stationary", geom.p_star * s_star, (1.0 - geom.p_star) * s_star))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    oracle.write_sample_csv(sample, out / "feasible.csv", extra_points=markers)
    print(f"wrote {out / 'feasible.csv'} (grid {n}x{n}, "
          f"resolution {sample.resolution[0]:.6g} x {sample.resolution[1]:.6g})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arznet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a single-junction Riemann problem")
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="run the Godunov network simulation")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--cfl", type=float, default=None)
    p.add_argument("--t-end", type=float, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("capacity-drop", help="sweep desired inflow of the second merge road")
    p.add_argument("--scenario", required=True)
    p.add_argument("--sweep", required=True, help="comma-separated desired fluxes [veh/h]")
    p.add_argument("--out", default=None)
    p.add_argument("--direct", action="store_true", help="use the direct Riemann solver")
    p.add_argument("--cfl", type=float, default=None)
    p.add_argument("--t-end", type=float, default=None)
    p.set_defaults(func=cmd_capacity_drop)

    p = sub.add_parser("pareto-dump", help="dump the sampled feasible set of a merge")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--grid", type=int, default=512)
    p.set_defaults(func=cmd_pareto_dump)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SolverFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ScenarioError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO


if __name__ == "__main__":
    sys.exit(main())
