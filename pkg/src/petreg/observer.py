"""Periodic event-triggered distributed observer of the leader's ``(S, v)``.

Each follower integrates estimates ``S_hat`` and ``v_hat`` driven only by
what its neighbours last broadcast.  A broadcast carries the pair
``(S_hat(t_l), v_hat(t_l))``; receivers extrapolate the state between
broadcasts with the broadcast matrix, ``exp(S_hat(t_l) (t - t_l)) v_hat(t_l)``.
Trigger conditions (PETM-A) are checked only on the communication grid
``{k T}``.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import matops
from .errors import InvalidInputError
from .plant import leader_flow

GRID_TOL = 1e-9


@dataclass
class ObserverState:
    s_hat: np.ndarray
    v_hat: np.ndarray
    s_held: np.ndarray
    anchor_t: float
    v_anchor: np.ndarray

    @classmethod
    def initial(cls, nv, s0=None, v0=None):
        """Zero estimates (unless given) with the initial broadcast at ``t = 0``."""
        s = np.zeros((nv, nv)) if s0 is None else np.array(s0, dtype=float)
        v = np.zeros(nv) if v0 is None else np.array(v0, dtype=float)
        return cls(s, v, s.copy(), 0.0, v.copy())

    def reanchor(self, t):
        """Record a broadcast of the current estimates at time ``t``."""
        self.s_held = self.s_hat.copy()
        self.v_anchor = self.v_hat.copy()
        self.anchor_t = float(t)


@dataclass(frozen=True)
class PetmAConfig:
    iota_s: float
    gamma_s: float
    iota_v: float
    gamma_v: float
    combine_mode: str = "and"

    def __post_init__(self):
        for k in ("iota_s", "gamma_s", "iota_v", "gamma_v"):
            if not getattr(self, k) > 0:
                raise InvalidInputError(f"{k} must be positive")
        mode = self.combine_mode.lower()
        if mode not in ("and", "or"):
            raise InvalidInputError("combine_mode must be 'and' or 'or'")
        object.__setattr__(self, "combine_mode", mode)


class PetmADecision(NamedTuple):
    fire: bool
    f_s: float
    f_v: float


def on_grid(tau, period):
    if period <= 0:
        raise InvalidInputError("period must be positive")
    k = round(tau / period)
    return k >= 0 and abs(tau - k * period) <= GRID_TOL * max(1.0, abs(tau))


def held_leader_estimate(st, t):
    """Broadcast state of one agent extrapolated to time ``t``."""
    dt = t - st.anchor_t
    if dt < -GRID_TOL:
        raise InvalidInputError(f"t={t} precedes the anchor time {st.anchor_t}")
    if dt <= 0:
        return st.v_anchor.copy()
    return matops.mat_exp(st.s_held * dt) @ st.v_anchor


def observer_derivatives(states, g, leader, mu1, mu2, t):
    """Right-hand side of the observer ODEs for every follower.

    The leader's channel uses the true ``S`` and ``v(t)``.  Returns a list of
    ``(dS_hat, dv_hat)`` pairs, one per follower.
    """
    if len(states) != g.n:
        raise InvalidInputError(f"expected {g.n} observer states, got {len(states)}")
    s = leader.s_matrix
    v = leader_flow(leader, t)
    vbar = [held_leader_estimate(st, t) for st in states]
    out = []
    for i, st in enumerate(states):
        if st.s_hat.shape != s.shape or st.v_hat.shape != v.shape:
            raise InvalidInputError(f"observer state {i} has wrong dimensions")
        ds = np.zeros_like(s)
        dv_cons = np.zeros_like(v)
        for j in np.nonzero(g.adjacency[i])[0]:
            ds += states[j].s_held - st.s_held
            dv_cons += vbar[j] - vbar[i]
        if g.pinning[i]:
            ds += s - st.s_held
            dv_cons += v - vbar[i]
        out.append((mu1 * ds, st.s_held @ st.v_hat + mu2 * dv_cons))
    return out


def petm_a_evaluate(st, cfg, tau, period, v_bar=None):
    """Evaluate the inter-agent trigger for one follower at grid time ``tau``.

    Parameters
    ----------
    st : ObserverState
    cfg : PetmAConfig
    tau : float
        Evaluation instant; must lie on ``{k * period}`` and after the last
        broadcast.
    period : float
        Communication period ``T``.
    v_bar : ndarray, optional
        Precomputed extrapolated broadcast at ``tau``; computed if omitted.

    Returns
    -------
    PetmADecision
        ``fire`` plus the two trigger-function values.  A function fires only
        when strictly positive.
    """
    if not on_grid(tau, period):
        raise InvalidInputError(f"tau={tau} is not on the communication grid (T={period})")
    if tau <= st.anchor_t - GRID_TOL:
        raise InvalidInputError("tau must not precede the last broadcast")
    if v_bar is None:
        v_bar = held_leader_estimate(st, tau)
    f_s = matops.frobenius_norm(st.s_hat - st.s_held) - cfg.iota_s * np.exp(-cfg.gamma_s * tau)
    f_v = float(np.linalg.norm(st.v_hat - v_bar)) - cfg.iota_v * np.exp(-cfg.gamma_v * tau)
    if cfg.combine_mode == "and":
        fire = f_s > 0 and f_v > 0
    else:
        fire = f_s > 0 or f_v > 0
    return PetmADecision(bool(fire), float(f_s), float(f_v))
