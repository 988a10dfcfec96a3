"""End-to-end acceptance checks.

Each test records a one-line verdict through ``record``; the verdicts print
in a block at the end of the pytest session.
"""

import filecmp

import numpy as np
import pytest

from conftest import record, simulate
from petreg import cli, matops
from petreg.controller import sensor_period_bound, steady_error_bound
from petreg.graph import Graph, check_spanning_tree, observer_period_bound
from petreg.plant import FollowerModel, regulator_residuals, solve_regulator_direct
from petreg.sim import compute_metrics

THRESHOLD_ROWS = [(2.0, 1.0), (1.0, 2.0), (0.5, 2.5)]
EXPECTED_EDGE_COUNTS = {(1, 2): 18, (1, 3): 18, (2, 4): 26, (3, 4): 25}
BIAS_LEVELS = [0.0, 0.001, 0.01, 0.02]
EXPECTED_TAIL_ERRORS = [0.0008, 0.0013, 0.0070, 0.0132]


def threshold_overrides(iota, gamma):
    return {"observer.iota_s": iota, "observer.iota_v": iota,
            "observer.gamma_s": gamma, "observer.gamma_v": gamma}


def bias_overrides(bar):
    return {"controller.iota_psi_bar": bar, "controller.iota_omega_bar": bar}


ACCEPTANCE_RUNS = (
    [("four_followers", {}), ("four_followers_petm_c", {}), ("constant_leader", {}),
     ("four_followers", {"followers[*].sigma": 0, "followers[*].rho": 0})]
    + [("four_followers", threshold_overrides(*row)) for row in THRESHOLD_ROWS]
    + [("four_followers_petm_c", bias_overrides(bar)) for bar in BIAS_LEVELS]
)


def sample_at(traj, t):
    return int(np.argmin(np.abs(traj.t - t)))


def test_01_observer_convergence(four_followers):
    _, traj, _, seconds = four_followers
    k = sample_at(traj, 20.0)
    s_err, v_err = traj.s_err[k].max(), traj.v_err[k].max()
    ok = s_err < 1e-3 and v_err < 1e-3 and seconds < 10
    record(1, "observer convergence at t=20",
           ok, f"max S err {s_err:.2e}, max v err {v_err:.2e}, runtime {seconds:.1f}s")
    assert ok


def test_02_regulation(four_followers):
    _, traj, _, _ = four_followers
    mask = traj.t >= 25.0 - 1e-9
    worst = traj.e_norm()[mask].max()
    record(2, "regulation error on [25, 30]", worst < 1e-2, f"max ||e|| {worst:.2e}")
    assert worst < 1e-2


def test_03_period_bounds(four_followers):
    sc = four_followers[0]
    t_bound = observer_period_bound(sc.graph, sc.observer.mu1, sc.observer.mu2)
    ts = [sensor_period_bound(a.model, a.k_gain, a.l_gain, mode) for a in sc.agents for mode in "BC"]
    toy_graph = Graph.from_edges(1, [], [1])
    toy_t = observer_period_bound(toy_graph, 3.0, 3.0)
    one = [[1.0]]
    toy_model = FollowerModel(a=[[0.0]], b=one, c=one, d=[[0.0]], e=[[0.0]], f=[[0.0]],
                              c_m=one, d_m=[[0.0]], f_m=[[0.0]], x0=[0.0])
    toy_ts = sensor_period_bound(toy_model, [[-1.0]], [[-1.0]], "B")
    ok = (t_bound > 0.01 and min(ts) > 0.01
          and abs(toy_t - 1 / 6) <= 1e-15 and abs(toy_ts - 0.5) <= 1e-14)
    record(3, "period bounds", ok,
           f"T bound {t_bound:.4g}, min Ts bound {min(ts):.4g}, toys {toy_t!r} and {toy_ts!r}")
    assert ok


def test_05_event_count_trend():
    counts = []
    for row in THRESHOLD_ROWS:
        _, _, log, _ = simulate("four_followers", threshold_overrides(*row))
        counts.append({e: log.count("petm_a", agent=e[1], src_agent=e[0]) for e in EXPECTED_EDGE_COUNTS})
    increasing = all(counts[r][e] < counts[r + 1][e] for r in range(2) for e in EXPECTED_EDGE_COUNTS)
    within = all(0.5 * ref <= counts[0][e] <= 1.5 * ref for e, ref in EXPECTED_EDGE_COUNTS.items())
    rows = "; ".join(",".join(str(c[e]) for e in EXPECTED_EDGE_COUNTS) for c in counts)
    record(5, "PETM-A counts vs (iota, gamma)", increasing and within,
           f"rows {rows}; strictly increasing {increasing}; row 1 within 50% of 18,18,26,25 {within}")
    assert increasing
    assert within


def test_06_sensor_event_ratio(four_followers):
    with_ref = four_followers[2].count("petm_b")
    without = simulate("four_followers", {"followers[*].sigma": 0, "followers[*].rho": 0})[2].count("petm_b")
    ratio = without / with_ref
    record(6, "PETM-B count ratio sigma=rho=0 vs 1", ratio > 10, f"{without} / {with_ref} = {ratio:.1f}")
    assert ratio > 10


def test_07_bias_trends():
    errs, counts = [], []
    for bar in BIAS_LEVELS:
        sc, traj, log, _ = simulate("four_followers_petm_c", bias_overrides(bar))
        errs.append(compute_metrics(traj, log).tail_error)
        counts.append(log.count("petm_c"))
    err_up = all(a < b for a, b in zip(errs, errs[1:]))
    count_down = all(a > b for a, b in zip(counts, counts[1:]))
    ratios = [e / ref for e, ref in zip(errs, EXPECTED_TAIL_ERRORS)]
    magnitude = all(0.1 <= r <= 10 for r in ratios)
    ok = err_up and count_down and magnitude
    record(7, "tail error and PETM-C counts vs bias threshold", ok,
           "errors " + ", ".join(f"{e:.2e}" for e in errs)
           + "; counts " + ", ".join(map(str, counts))
           + "; ratios to reference " + ", ".join(f"{r:.2f}" for r in ratios))
    assert err_up and count_down and magnitude


def test_08_steady_error_bound(four_followers_petm_c):
    sc, traj, log, _ = four_followers_petm_c
    bounds = []
    for i, ag in enumerate(sc.agents):
        sol = solve_regulator_direct(ag.model, sc.leader.s_matrix)
        bounds.append(steady_error_bound(ag.model, ag.k_gain, ag.l_gain, sol.u_sol, ag.trigger,
                                         sc.bound_params, sc.sim.sensor_periods[i]))
    mask = traj.t >= traj.t[-1] - 5.0 - 1e-12
    tail = traj.e_norm()[mask].max(axis=0)
    ok = max(bounds) <= 0.43 and all(t <= b for t, b in zip(tail, bounds))
    record(8, "steady-state error bound", ok,
           f"max bound {max(bounds):.4g}; tail max {tail.max():.2e}")
    assert ok


def test_09_constant_leader():
    sc, traj, log, _ = simulate("constant_leader")
    err = compute_metrics(traj, log).tail_error
    final = traj.e_norm()[-1].max()
    ok = err < 1e-6 and final < 1e-6
    record(9, "constant leader exact regulation", ok, f"tail error {err:.2e}, final {final:.2e}")
    assert ok


def test_10_solver_oracles(four_followers):
    sc = four_followers[0]
    m = sc.agents[0].model
    sol = solve_regulator_direct(m, sc.leader.s_matrix)
    # with S a rotation and A = [[0,1],[0,-0.3]], X = I and U = [-1, 0.3] by hand
    reg_err = max(np.abs(sol.x_sol - np.eye(2)).max(), np.abs(sol.u_sol - [[-1.0, 0.3]]).max())
    rng = np.random.default_rng(10)
    worst = 0.0
    done = 0
    while done < 100:
        n = int(rng.integers(1, 5))
        a = rng.normal(size=(n, n))
        a -= (np.linalg.eigvals(a).real.max() + rng.uniform(0.1, 2.0)) * np.eye(n)
        x = matops.solve_sym_lyapunov(a, -2.0)
        res = np.abs(x @ a + a.T @ x + 2.0 * np.eye(n)).max()
        worst = max(worst, res / max(1.0, np.abs(x).max()))
        done += 1
    r1, r2 = regulator_residuals(m, sc.leader.s_matrix, sol)
    ok = reg_err <= 1e-9 and worst <= 1e-10
    record(10, "regulator and Lyapunov solvers", ok,
           f"regulator deviation {reg_err:.1e} (residuals {r1:.1e}, {r2:.1e}); "
           f"worst Lyapunov residual {worst:.1e}")
    assert ok


def test_11_matrix_lemmas():
    rng = np.random.default_rng(11)
    norm = matops.spectral_norm
    bad = [0, 0, 0]
    for _ in range(1000):
        n = int(rng.integers(1, 6))
        a = rng.normal(size=(n, n))
        b = rng.normal(size=(n, n))
        a *= rng.uniform(0, 2) / max(norm(a), 1e-12)
        b *= rng.uniform(0, 2) / max(norm(b), 1e-12)
        lhs = norm(matops.mat_exp(a + b) - matops.mat_exp(a))
        bad[0] += lhs > np.exp(norm(a) + norm(b)) * norm(b) + 1e-9
    for _ in range(1000):
        n = int(rng.integers(1, 6))
        a = rng.normal(size=(n, n)) * rng.uniform(0.01, 10)
        s, f = norm(a), matops.frobenius_norm(a)
        bad[1] += not (s <= f + 1e-9 and f <= np.sqrt(n) * s + 1e-9)
    for _ in range(1000):
        n = int(rng.integers(1, 6))
        a = rng.normal(size=(n, n)) * rng.uniform(0.01, 3)
        bad[2] += norm(matops.mat_exp(a)) > np.exp(norm(a)) + 1e-9
    record(11, "matrix norm and exponential inequalities", sum(bad) == 0,
           f"violations {bad[0]}, {bad[1]}, {bad[2]} out of 1000 each")
    assert sum(bad) == 0


def test_12_determinism(tmp_path):
    outs = [tmp_path / "a", tmp_path / "b"]
    codes = [cli.main(["run", "four_followers", "--out", str(o)]) for o in outs]
    names = ["trajectory.csv", "events.csv", "metrics.json"]
    same = all(filecmp.cmp(outs[0] / f, outs[1] / f, shallow=False) for f in names)
    ok = codes == [0, 0] and same
    record(12, "identical runs give identical files", ok, f"exit codes {codes}, identical {same}")
    assert ok


# runs last so that it sees every cached acceptance run
def test_04_event_grid():
    checked, bad = 0, []
    for name, assign in ACCEPTANCE_RUNS:
        _, traj, log, _ = simulate(name, assign)
        checked += 1
        if not compute_metrics(traj, log).multiples_ok:
            bad.append(name)
        assert check_spanning_tree(simulate(name, assign)[0].graph)
    record(4, "inter-event gaps are whole multiples of the period", not bad,
           f"{checked} runs checked, offending {bad or 'none'}")
    assert not bad
