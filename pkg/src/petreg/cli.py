"""``petreg`` command line: ``bounds``, ``run`` and ``sweep``."""

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import yaml

from .controller import error_bound_chain, sensor_period_bound
from .errors import DivergenceError, InfeasibleParametersError, PreconditionError, ScenarioError
from .graph import check_spanning_tree, observer_period_bound
from .plant import solve_regulator_direct
from .scenario import bundled_names, bundled_path, load_raw, parse_scenario, with_overrides
from .sim import compute_metrics, period_violations, run_scenario

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_INFEASIBLE = 3
EXIT_DIVERGED = 4


def _resolve(doc):
    """A path on disk, or the name of a bundled scenario."""
    p = Path(doc)
    if p.exists():
        return p
    if doc in bundled_names():
        return bundled_path(doc)
    raise ScenarioError("", f"no such file or bundled scenario: {doc}")


def _load(doc):
    raw = load_raw(_resolve(doc))
    return raw, parse_scenario(raw)


def bounds_report(sc):
    """Admissible periods and, under PETM-C, the steady-state error bounds.

    Returns ``(lines, feasible)``.
    """
    lines = []
    feasible = True
    if not check_spanning_tree(sc.graph):
        return ["graph: no directed spanning tree rooted at the leader"], False
    t_bound = observer_period_bound(sc.graph, sc.observer.mu1, sc.observer.mu2)
    ok = sc.sim.comm_period < t_bound
    feasible &= ok
    lines.append(f"T bound {t_bound:.6g}  configured T={sc.sim.comm_period:g}  "
                 f"{'configured period admissible' if ok else 'VIOLATED'}")
    for i, ag in enumerate(sc.agents):
        mode = "C" if ag.trigger.petm_c_enabled else "B"
        b = sensor_period_bound(ag.model, ag.k_gain, ag.l_gain, mode)
        per = sc.sim.sensor_periods[i]
        ok = per < b
        feasible &= ok
        lines.append(f"agent {i + 1}: Ts bound (mode {mode}) {b:.6g}  configured Ts={per:g}  "
                     f"{'configured period admissible' if ok else 'VIOLATED'}")
    if sc.petm_c:
        if sc.bound_params is None:
            lines.append("error bound: no bound_params section")
            return lines, feasible
        worst = 0.0
        for i, ag in enumerate(sc.agents):
            tr = ag.trigger
            try:
                sol = solve_regulator_direct(ag.model, sc.leader.s_matrix)
                chain = error_bound_chain(ag.model, ag.k_gain, ag.l_gain, sol.u_sol, sc.bound_params,
                                          tr.iota_psi_bar, tr.iota_omega_bar, sc.sim.sensor_periods[i])
            except InfeasibleParametersError as exc:
                lines.append(f"agent {i + 1}: error bound infeasible: {exc}")
                feasible = False
                continue
            worst = max(worst, chain.phi8)
            lines.append(f"agent {i + 1}: steady error bound phi8 {chain.phi8:.6g}")
        lines.append(f"max steady error bound {worst:.6g}")
    return lines, feasible


def cmd_bounds(args):
    _, sc = _load(args.doc)
    lines, feasible = bounds_report(sc)
    print("\n".join(lines))
    return EXIT_OK if feasible else EXIT_INFEASIBLE


def _write_run(sc, out):
    out.mkdir(parents=True, exist_ok=True)
    traj, log = run_scenario(sc)
    metrics = compute_metrics(traj, log, tail_window=min(5.0, sc.sim.t_end / 2))
    traj.to_csv(out / "trajectory.csv")
    log.to_csv(out / "events.csv")
    (out / "metrics.json").write_text(json.dumps(metrics.summary(), indent=2, sort_keys=True) + "\n")
    return metrics


def cmd_run(args):
    raw, _ = _load(args.doc)
    if args.override_bounds:
        raw = with_overrides(raw, {"sim.override_bounds": True})
    sc = parse_scenario(raw)
    metrics = _write_run(sc, Path(args.out))
    print(f"tail error {metrics.tail_error:.6g}  counts {metrics.counts}  min gaps {metrics.min_gap}")
    return EXIT_OK


def parse_axis(axis, values):
    """Expand sweep arguments into ``[{path: value, ...}, ...]``.

    ``axis`` lists comma-separated groups; paths in one group are joined with
    ``+`` and receive the same value.  ``values`` lists comma-separated rows
    with one ``:``-separated component per group.
    """
    groups = [g.split("+") for g in axis.split(",")]
    rows = []
    for row in values.split(","):
        comps = row.split(":")
        if len(comps) != len(groups):
            raise ScenarioError("--values", f"row {row!r} needs {len(groups)} components")
        assign = {}
        for paths, c in zip(groups, comps):
            v = yaml.safe_load(c)
            for p in paths:
                assign[p.strip()] = v
        rows.append(assign)
    return groups, rows


def _sweep_row(raw, assign):
    sc = parse_scenario(with_overrides(raw, assign))
    try:
        traj, log = run_scenario(sc)
    except DivergenceError as exc:
        return {"status": f"diverged at t={exc.t:g}"}
    m = compute_metrics(traj, log, tail_window=min(5.0, sc.sim.t_end / 2))
    return {
        "status": "ok",
        "tail_error": m.tail_error,
        "tail_error_max": m.tail_error_max,
        **{f"{ch}_count": n for ch, n in m.counts.items()},
    }


SWEEP_FIELDS = ("tail_error", "tail_error_max", "petm_a_count", "petm_b_count", "petm_c_count", "status")


def run_sweep(raw, rows, workers=None):
    # validate every row up front so a bad path fails before any simulation
    for assign in rows:
        parse_scenario(with_overrides(raw, assign))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_row, [raw] * len(rows), rows))


def cmd_sweep(args):
    raw, _ = _load(args.doc)
    groups, rows = parse_axis(args.axis, args.values)
    results = run_sweep(raw, rows, args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    heads = ["+".join(g) for g in groups]
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(heads + list(SWEEP_FIELDS))
        for assign, res in zip(rows, results):
            w.writerow([assign[g[0].strip()] for g in groups] + [res.get(k, "") for k in SWEEP_FIELDS])
    for assign, res in zip(rows, results):
        print(assign, {k: res.get(k, "") for k in SWEEP_FIELDS})
    return EXIT_DIVERGED if any(r["status"] != "ok" for r in results) else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="petreg", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bounds", help="admissible sampling periods and error bounds")
    b.add_argument("doc", help="scenario file or bundled scenario name")
    b.set_defaults(func=cmd_bounds)

    r = sub.add_parser("run", help="simulate one scenario")
    r.add_argument("doc")
    r.add_argument("--out", required=True)
    r.add_argument("--override-bounds", action="store_true", help="warn instead of refusing inadmissible periods")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="simulate one scenario per parameter value")
    s.add_argument("doc")
    s.add_argument("--axis", required=True, help="e.g. 'observer.iota_s+observer.iota_v,observer.gamma_s'")
    s.add_argument("--values", required=True, help="e.g. '2:1,1:2,0.5:2.5'")
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int, default=None)
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (PreconditionError, InfeasibleParametersError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except DivergenceError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
