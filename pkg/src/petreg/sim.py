"""Deterministic closed-loop simulator.

Time is kept as an integer number of microsecond ticks.  The integration
grid is the greatest common divisor of every configured period and phase, so
membership in any sampling grid is an exact integer test.  Between grid
instants all transmitted quantities are held and the continuous states
(plant, estimator, observer, adaptive regulator) are advanced with
classical RK4.

At each grid instant events are processed in a fixed order:

1. sensor sampler caches (per agent, on its sensor grid);
2. sensor-to-controller trigger (PETM-B);
3. controller-to-actuator trigger (PETM-C, when enabled);
4. inter-agent broadcast trigger (PETM-A, on the communication grid).

Every channel transmits unconditionally at ``t = 0``.
"""

import csv
import math
import warnings
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from . import matops
from .controller import (
    BoundParams,
    ControllerState,
    TriggerConfig,
    control_signal,
    petm_b_evaluate,
    petm_c_evaluate,
    psi_signal,
    sensor_period_bound,
)
from .errors import DivergenceError, InvalidInputError, PreconditionError
from .graph import Graph, check_spanning_tree, observer_period_bound
from .observer import ObserverState, PetmAConfig, petm_a_evaluate
from .plant import FollowerModel, LeaderModel, regulator_operator, regulator_rhs

TICKS_PER_SECOND = 1_000_000
DIVERGENCE_GUARD = 1e9
CHANNELS = ("petm_a", "petm_b", "petm_c")


def to_ticks(seconds, name="period"):
    ticks = round(seconds * TICKS_PER_SECOND)
    if abs(seconds * TICKS_PER_SECOND - ticks) > 1e-6 * max(1.0, abs(ticks)):
        raise InvalidInputError(f"{name}={seconds} is not a multiple of 1e-6 s")
    return ticks


@dataclass(frozen=True, eq=False)
class Agent:
    model: FollowerModel
    k_gain: np.ndarray
    l_gain: np.ndarray
    trigger: TriggerConfig
    kappa: float = 30.0

    def __post_init__(self):
        m = self.model
        k = matops.as_matrix(self.k_gain, "K")
        l = matops.as_matrix(self.l_gain, "L")
        if k.shape != (m.nu, m.n):
            raise InvalidInputError(f"K: expected shape {(m.nu, m.n)}, got {k.shape}")
        if l.shape != (m.n, m.ny):
            raise InvalidInputError(f"L: expected shape {(m.n, m.ny)}, got {l.shape}")
        if not matops.is_hurwitz(m.a + m.b @ k):
            raise PreconditionError("A + B K is not Hurwitz")
        if not matops.is_hurwitz(m.a + l @ m.c_m):
            raise PreconditionError("A + L C_m is not Hurwitz")
        if self.kappa <= 0:
            raise InvalidInputError("kappa must be positive")
        object.__setattr__(self, "k_gain", k)
        object.__setattr__(self, "l_gain", l)


@dataclass(frozen=True)
class ObserverParams:
    mu1: float
    mu2: float
    petm_a: PetmAConfig

    def __post_init__(self):
        if not (self.mu1 > 0 and self.mu2 > 0):
            raise InvalidInputError("mu1 and mu2 must be positive")


@dataclass(frozen=True)
class SimConfig:
    t_end: float
    comm_period: float
    sensor_periods: tuple
    sensor_phases: tuple = None
    substeps: int = 2
    override_bounds: bool = False

    def __post_init__(self):
        if self.t_end <= 0:
            raise InvalidInputError("t_end must be positive")
        if self.comm_period <= 0 or any(p <= 0 for p in self.sensor_periods):
            raise InvalidInputError("periods must be positive")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise InvalidInputError("substeps must be a positive integer")
        phases = self.sensor_phases
        if phases is None:
            phases = (0.0,) * len(self.sensor_periods)
        phases = tuple(float(p) for p in phases)
        if len(phases) != len(self.sensor_periods):
            raise InvalidInputError("one sensor phase per agent is required")
        for p, per in zip(phases, self.sensor_periods):
            if not 0 <= p < per:
                raise InvalidInputError("sensor phases must lie in [0, period)")
        object.__setattr__(self, "sensor_periods", tuple(float(p) for p in self.sensor_periods))
        object.__setattr__(self, "sensor_phases", phases)
        object.__setattr__(self, "substeps", int(self.substeps))


@dataclass(frozen=True, eq=False)
class Scenario:
    graph: Graph
    leader: LeaderModel
    agents: tuple
    observer: ObserverParams
    sim: SimConfig
    bound_params: BoundParams = None

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        if len(self.agents) != self.graph.n:
            raise InvalidInputError("number of agents must match the graph")
        if len(self.sim.sensor_periods) != self.graph.n:
            raise InvalidInputError("one sensor period per agent is required")
        for i, ag in enumerate(self.agents):
            if ag.model.nv != self.leader.nv:
                raise InvalidInputError(f"agent {i + 1}: leader dimension mismatch")

    @property
    def petm_c(self):
        return any(a.trigger.petm_c_enabled for a in self.agents)


def period_violations(sc):
    """Configured periods that exceed their admissible bounds, as messages."""
    out = []
    if not check_spanning_tree(sc.graph):
        return ["graph has no directed spanning tree rooted at the leader"]
    t_bound = observer_period_bound(sc.graph, sc.observer.mu1, sc.observer.mu2)
    if not sc.sim.comm_period < t_bound:
        out.append(f"T={sc.sim.comm_period} is not below the observer bound {t_bound:.6g}")
    for i, ag in enumerate(sc.agents):
        mode = "C" if ag.trigger.petm_c_enabled else "B"
        b = sensor_period_bound(ag.model, ag.k_gain, ag.l_gain, mode)
        if not sc.sim.sensor_periods[i] < b:
            out.append(f"agent {i + 1}: Ts={sc.sim.sensor_periods[i]} is not below the mode-{mode} bound {b:.6g}")
    return out


# -- outputs -------------------------------------------------------------------


@dataclass
class Trajectory:
    t: np.ndarray
    v: np.ndarray
    x: list
    xhat: list
    e: list
    ym: list
    u: list
    s_err: np.ndarray
    v_err: np.ndarray

    @property
    def n_agents(self):
        return len(self.x)

    def e_norm(self):
        """``||e_i(t)||`` as an array of shape ``(len(t), n_agents)``."""
        return np.stack([np.linalg.norm(e, axis=1) for e in self.e], axis=1)

    def columns(self):
        names = ["t"] + [f"v[{k}]" for k in range(self.v.shape[1])]
        cols = [self.t[:, None], self.v]
        for i in range(self.n_agents):
            for key, arr in (("x", self.x[i]), ("xhat", self.xhat[i]), ("e", self.e[i]), ("u", self.u[i])):
                names += [f"agent{i + 1}.{key}[{k}]" for k in range(arr.shape[1])]
                cols.append(arr)
            names += [f"agent{i + 1}.Serr", f"agent{i + 1}.verr"]
            cols += [self.s_err[:, i:i + 1], self.v_err[:, i:i + 1]]
        return names, np.hstack(cols)

    def to_csv(self, path):
        names, data = self.columns()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(names)
            for row in data:
                w.writerow([_fmt(x) for x in row])


def _fmt(x):
    s = f"{x:.12g}"
    return "0" if s == "-0" else s


@dataclass(frozen=True)
class EventRecord:
    channel: str
    agent: int
    src_agent: int
    tick: int

    @property
    def t(self):
        return self.tick / TICKS_PER_SECOND


@dataclass
class EventLog:
    """Transmission records.

    ``petm_a`` rows are per directed edge (``agent`` receives from
    ``src_agent``); ``petm_b``/``petm_c`` rows carry ``src_agent = None``.
    Agent ids are 1-based.
    """

    comm_period_ticks: int
    sensor_period_ticks: tuple
    records: list = field(default_factory=list)

    def add(self, channel, agent, tick, src_agent=None):
        self.records.append(EventRecord(channel, agent, src_agent, tick))

    def streams(self):
        """``{(channel, agent, src): [ticks...]}`` in insertion order."""
        out = {}
        for r in self.records:
            out.setdefault((r.channel, r.agent, r.src_agent), []).append(r.tick)
        return out

    def period_ticks(self, channel, agent):
        if channel == "petm_a":
            return self.comm_period_ticks
        return self.sensor_period_ticks[agent - 1]

    def count(self, channel, agent=None, src_agent=None):
        return sum(
            1 for r in self.records
            if r.channel == channel
            and (agent is None or r.agent == agent)
            and (src_agent is None or r.src_agent == src_agent)
        )

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["channel", "agent", "src_agent", "t"])
            for r in self.records:
                w.writerow([r.channel, r.agent, "" if r.src_agent is None else r.src_agent, _fmt(r.t)])


# -- simulation ----------------------------------------------------------------


class _AgentCache:
    """Per-agent constants used inside the right-hand side."""

    def __init__(self, ag, nv):
        m = ag.model
        self.m = m
        self.k = ag.k_gain
        self.l = ag.l_gain
        self.kappa = ag.kappa
        self.petm_c = ag.trigger.petm_c_enabled
        self.nv = nv
        self.p = (m.n + m.nu) * nv
        sel = np.zeros((m.n + m.ne, m.n + m.nu))
        sel[: m.n, : m.n] = np.eye(m.n)
        basis = []
        for a in range(nv):
            for b in range(nv):
                eba = np.zeros((nv, nv))
                eba[b, a] = 1.0
                basis.append(np.kron(eba, sel))
        # regulator operator = tensordot(S.ravel(), basis) - plant_part
        self.op_basis = np.array(basis).reshape(nv * nv, -1)
        self.op_plant = -regulator_operator(m, np.zeros((nv, nv)))
        self.op_shape = self.op_plant.shape
        self.n = m.n
        self.nu = m.nu
        self.a, self.b, self.e = m.a, m.b, m.e
        self.beta = regulator_rhs(m)


def run_scenario(sc):
    """Simulate a scenario.

    Returns
    -------
    (Trajectory, EventLog)

    Raises
    ------
    PreconditionError
        Configured periods violate their bounds and ``override_bounds`` is off.
    DivergenceError
        Any state norm exceeds ``1e9`` or becomes non-finite.
    """
    violations = period_violations(sc)
    if violations:
        if not sc.sim.override_bounds:
            raise PreconditionError("; ".join(violations))
        for msg in violations:
            warnings.warn(msg, stacklevel=2)
    return _Simulator(sc).run()


class _Simulator:
    def __init__(self, sc):
        self.sc = sc
        cfg = sc.sim
        self.g = sc.graph
        self.N = sc.graph.n
        self.nv = sc.leader.nv
        self.S = sc.leader.s_matrix
        self.mu1 = sc.observer.mu1
        self.mu2 = sc.observer.mu2
        self.petm_a = sc.observer.petm_a
        self.agents = sc.agents
        self.caches = [_AgentCache(a, self.nv) for a in sc.agents]

        self.comm_ticks = to_ticks(cfg.comm_period, "comm_period")
        self.sensor_ticks = [to_ticks(p, "sensor_period") for p in cfg.sensor_periods]
        self.phase_ticks = [to_ticks(p, "sensor_phase") for p in cfg.sensor_phases]
        base = reduce(math.gcd, [self.comm_ticks, *self.sensor_ticks, *[p for p in self.phase_ticks if p]])
        self.base_ticks = base
        self.n_steps = to_ticks(cfg.t_end, "t_end") // base
        self.substeps = cfg.substeps
        self.h = base / TICKS_PER_SECOND / self.substeps

        self.in_nbrs = [list(np.nonzero(self.g.adjacency[i])[0]) for i in range(self.N)]
        self.out_nbrs = [self.g.out_neighbors(j) for j in range(self.N)]

        # flat state layout per agent: x, xhat, S_hat (row-major), d, chi_hat
        # where d = v_hat - v_bar is the deviation from the agent's own
        # extrapolated broadcast.  Integrating d rather than v_hat keeps the
        # integrator error proportional to d, so a quiet agent stays exactly
        # on its broadcast and PETM-A does not fire on round-off.
        self.slices = []
        off = 0
        for c in self.caches:
            n = c.m.n
            sl = {}
            for key, size in (("x", n), ("xhat", n), ("S", self.nv * self.nv), ("d", self.nv), ("chi", c.p)):
                sl[key] = slice(off, off + size)
                off += size
            self.slices.append(sl)
        self.size = off

    def _t(self, k):
        return k * self.base_ticks / TICKS_PER_SECOND

    def _half_propagator(self, s):
        return matops.mat_exp(s * (0.5 * self.h))

    def run(self):
        N, nv = self.N, self.nv
        y = np.zeros(self.size)
        for i, ag in enumerate(self.agents):
            y[self.slices[i]["x"]] = ag.model.x0
        obs = [ObserverState.initial(nv) for _ in range(N)]
        ctl = []
        for i, ag in enumerate(self.agents):
            ctl.append(ControllerState(
                x_hat=np.zeros(ag.model.n),
                chi_hat=np.zeros(self.caches[i].p),
                sensor_period=self.sc.sim.sensor_periods[i],
                phase=self.sc.sim.sensor_phases[i],
            ))
        log = EventLog(self.comm_ticks, tuple(self.sensor_ticks))

        n_rec = self.n_steps + 1
        traj = Trajectory(
            t=np.array([self._t(k) for k in range(n_rec)]),
            v=np.zeros((n_rec, nv)),
            x=[np.zeros((n_rec, a.model.n)) for a in self.agents],
            xhat=[np.zeros((n_rec, a.model.n)) for a in self.agents],
            e=[np.zeros((n_rec, a.model.ne)) for a in self.agents],
            ym=[np.zeros((n_rec, a.model.ny)) for a in self.agents],
            u=[np.zeros((n_rec, a.model.nu)) for a in self.agents],
            s_err=np.zeros((n_rec, N)),
            v_err=np.zeros((n_rec, N)),
        )

        n_pts = 2 * self.substeps + 1
        phi_leader = self._half_propagator(self.S)
        phi_agent = [self._half_propagator(o.s_held) for o in obs]
        v_now = self.sc.leader.v0.copy()
        vbar_now = [o.v_anchor.copy() for o in obs]

        for k in range(n_rec):
            tick = k * self.base_ticks
            t = tick / TICKS_PER_SECOND
            self._sync(y, obs, ctl, vbar_now)
            self._events(k, tick, t, y, obs, ctl, v_now, vbar_now, phi_agent, log)
            self._record(k, traj, y, obs, ctl, v_now)
            if k == self.n_steps:
                break

            # held quantities on [t_k, t_{k+1})
            v_pts = [v_now]
            for _ in range(n_pts - 1):
                v_pts.append(phi_leader @ v_pts[-1])
            vbar_pts = []
            for j in range(N):
                pts = [vbar_now[j]]
                for _ in range(n_pts - 1):
                    pts.append(phi_agent[j] @ pts[-1])
                vbar_pts.append(pts)
            held = self._held_terms(obs, ctl, v_pts, vbar_pts)

            h = self.h
            for s in range(self.substeps):
                q = 2 * s
                k1 = self._rhs(y, q, held)
                k2 = self._rhs(y + 0.5 * h * k1, q + 1, held)
                k3 = self._rhs(y + 0.5 * h * k2, q + 1, held)
                k4 = self._rhs(y + h * k3, q + 2, held)
                y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

            v_now = v_pts[-1]
            vbar_now = [pts[-1] for pts in vbar_pts]
            norm = float(np.linalg.norm(y))
            if not np.isfinite(norm) or norm > DIVERGENCE_GUARD:
                raise DivergenceError(self._t(k + 1), norm)

        return traj, log

    def _sync(self, y, obs, ctl, vbar_now):
        """Copy integrated states into the observer/controller records."""
        nv = self.nv
        for i in range(self.N):
            sl = self.slices[i]
            obs[i].s_hat = y[sl["S"]].reshape(nv, nv).copy()
            obs[i].v_hat = vbar_now[i] + y[sl["d"]]
            ctl[i].x_hat = y[sl["xhat"]].copy()
            ctl[i].chi_hat = y[sl["chi"]].copy()

    def _applied_input(self, i, ctl, omega):
        return ctl[i].omega_held if self.caches[i].petm_c and ctl[i].omega_held is not None else omega

    def _events(self, k, tick, t, y, obs, ctl, v_now, vbar_now, phi_agent, log):
        first = k == 0
        for i, ag in enumerate(self.agents):
            m = ag.model
            st = ctl[i]
            omega = control_signal(st, m, ag.k_gain, obs[i].v_hat)
            sensor_instant = first or (
                tick >= self.phase_ticks[i] and (tick - self.phase_ticks[i]) % self.sensor_ticks[i] == 0
            )
            if not sensor_instant:
                continue
            x = y[self.slices[i]["x"]]
            u = self._applied_input(i, ctl, omega)
            y_m = m.c_m @ x + m.d_m @ u + m.f_m @ v_now
            st.sample(t, omega, vbar_now[i])
            psi = psi_signal(m, ag.trigger, vbar_now[i], y_m)
            if first or petm_b_evaluate(st, ag.trigger, t, psi, y_m).fire:
                st.psi_held = psi
                st.y_held = y_m.copy()
                st.psi_t = t
                log.add("petm_b", i + 1, tick)
            if ag.trigger.petm_c_enabled:
                if first or petm_c_evaluate(st, ag.trigger, t, omega).fire:
                    st.omega_held = omega.copy()
                    st.omega_t = t
                    log.add("petm_c", i + 1, tick)

        if tick % self.comm_ticks != 0:
            return
        for j in range(self.N):
            fire = first or petm_a_evaluate(obs[j], self.petm_a, t, self.sc.sim.comm_period, vbar_now[j]).fire
            if not fire:
                continue
            if not first:
                obs[j].reanchor(t)
                vbar_now[j] = obs[j].v_anchor.copy()
                y[self.slices[j]["d"]] = 0.0
                phi_agent[j] = self._half_propagator(obs[j].s_held)
            for i in self.out_nbrs[j]:
                log.add("petm_a", i + 1, tick, src_agent=j + 1)

    def _held_terms(self, obs, ctl, v_pts, vbar_pts):
        """Quantities frozen over one grid interval."""
        mu1, mu2 = self.mu1, self.mu2
        n_pts = len(v_pts)
        held = []
        for i in range(self.N):
            c = self.caches[i]
            st = ctl[i]
            tr = self.agents[i].trigger
            m = c.m
            ds = np.zeros((self.nv, self.nv))
            cons = [np.zeros(self.nv) for _ in range(n_pts)]
            for j in self.in_nbrs[i]:
                ds += obs[j].s_held - obs[i].s_held
                for q in range(n_pts):
                    cons[q] += vbar_pts[j][q] - vbar_pts[i][q]
            if self.g.pinning[i]:
                ds += self.S - obs[i].s_held
                for q in range(n_pts):
                    cons[q] += v_pts[q] - vbar_pts[i][q]
            innov = m.c_m @ st.x_hat_s + m.d_m @ st.omega_s + (1.0 - tr.sigma) * (m.f_m @ st.vbar_s) + st.psi_held
            if tr.rho != 0:
                innov = innov + tr.rho * (m.f @ st.vbar_s)
            held.append({
                "dS": (mu1 * ds).ravel(),
                "cons": [mu2 * cq for cq in cons],
                "s_held": obs[i].s_held,
                "inj": c.l @ innov,
                "u_held": st.omega_held if c.petm_c else None,
                "v": v_pts,
                "vbar": vbar_pts[i],
            })
        return held

    def _rhs(self, y, q, held):
        dy = np.empty_like(y)
        nv = self.nv
        for c, sl, hd in zip(self.caches, self.slices, held):
            xh = y[sl["xhat"]]
            d = y[sl["d"]]
            chi = y[sl["chi"]]
            v = hd["v"][q]
            vh = hd["vbar"][q] + d

            z = chi.reshape(nv, c.n + c.nu).T
            omega = c.k @ xh + (z[c.n:] - c.k @ z[: c.n]) @ vh
            u = omega if hd["u_held"] is None else hd["u_held"]
            op = (y[sl["S"]] @ c.op_basis).reshape(c.op_shape) - c.op_plant
            ev = c.e @ v

            dy[sl["x"]] = c.a @ y[sl["x"]] + c.b @ u + ev
            dy[sl["xhat"]] = c.a @ xh + c.b @ omega + c.e @ vh + hd["inj"]
            dy[sl["S"]] = hd["dS"]
            dy[sl["d"]] = hd["s_held"] @ d + hd["cons"][q]
            dy[sl["chi"]] = -c.kappa * (op.T @ (op @ chi - c.beta))
        return dy

    def _record(self, k, traj, y, obs, ctl, v_now):
        traj.v[k] = v_now
        for i, ag in enumerate(self.agents):
            m = ag.model
            sl = self.slices[i]
            x = y[sl["x"]]
            omega = control_signal(ctl[i], m, ag.k_gain, obs[i].v_hat)
            u = self._applied_input(i, ctl, omega)
            traj.x[i][k] = x
            traj.xhat[i][k] = y[sl["xhat"]]
            traj.u[i][k] = u
            traj.e[i][k] = m.c @ x + m.d @ u + m.f @ v_now
            traj.ym[i][k] = m.c_m @ x + m.d_m @ u + m.f_m @ v_now
            traj.s_err[k, i] = matops.frobenius_norm(obs[i].s_hat - self.S)
            traj.v_err[k, i] = np.linalg.norm(obs[i].v_hat - v_now)


# -- metrics -------------------------------------------------------------------


def gap_stats(ticks, period_ticks):
    """Minimum/mean inter-event gap (seconds) and whether all gaps are whole periods."""
    gaps = np.diff(np.asarray(ticks, dtype=np.int64))
    if gaps.size == 0:
        return None, None, True
    multiples = bool(np.all(gaps % period_ticks == 0) and np.all(gaps >= period_ticks))
    return gaps.min() / TICKS_PER_SECOND, gaps.mean() / TICKS_PER_SECOND, multiples


def event_gap_check(times, period):
    """Float-time front end of :func:`gap_stats`."""
    return gap_stats([to_ticks(t, "event time") for t in times], to_ticks(period))


@dataclass
class Metrics:
    counts: dict
    stream_counts: dict
    min_gap: dict
    mean_gap: dict
    multiples_ok: bool
    tail_error: float
    tail_error_max: float
    tail_error_per_agent: list
    s_err_tail: float
    v_err_tail: float

    def summary(self):
        return {
            "counts": self.counts,
            "stream_counts": {"/".join(str(p) for p in k): v for k, v in self.stream_counts.items()},
            "min_gap": self.min_gap,
            "mean_gap": self.mean_gap,
            "multiples_of_period": self.multiples_ok,
            "tail_error": self.tail_error,
            "tail_error_max": self.tail_error_max,
            "tail_error_per_agent": self.tail_error_per_agent,
            "s_err_tail": self.s_err_tail,
            "v_err_tail": self.v_err_tail,
        }


def compute_metrics(traj, log, tail_window=5.0):
    """Event statistics and tail regulation error.

    ``tail_error`` is the largest, over agents, time average of ``||e_i||``
    over the final ``tail_window`` seconds; ``tail_error_max`` is the largest
    pointwise value over the same window.
    """
    if traj.t.size == 0:
        raise InvalidInputError("empty trajectory")
    span = traj.t[-1] - traj.t[0]
    if not 0 < tail_window < span:
        raise InvalidInputError("tail_window must be positive and shorter than the simulation")
    mask = traj.t >= traj.t[-1] - tail_window - 1e-12
    en = traj.e_norm()[mask]
    per_agent = en.mean(axis=0)

    counts = {ch: log.count(ch) for ch in CHANNELS}
    streams = log.streams()
    min_gap, mean_gap = {}, {}
    multiples_ok = True
    gaps_by_channel = {ch: [] for ch in CHANNELS}
    for (ch, agent, _src), ticks in streams.items():
        per = log.period_ticks(ch, agent)
        g = np.diff(np.asarray(ticks, dtype=np.int64))
        if g.size:
            multiples_ok &= bool(np.all(g % per == 0) and np.all(g >= per))
            gaps_by_channel[ch].append(g)
    for ch, gs in gaps_by_channel.items():
        if gs:
            allg = np.concatenate(gs)
            min_gap[ch] = float(allg.min() / TICKS_PER_SECOND)
            mean_gap[ch] = float(allg.mean() / TICKS_PER_SECOND)
    return Metrics(
        counts=counts,
        stream_counts={k: len(v) for k, v in streams.items()},
        min_gap=min_gap,
        mean_gap=mean_gap,
        multiples_ok=multiples_ok,
        tail_error=float(per_agent.max()),
        tail_error_max=float(en.max()),
        tail_error_per_agent=[float(x) for x in per_agent],
        s_err_tail=float(traj.s_err[mask].max()),
        v_err_tail=float(traj.v_err[mask].max()),
    )
