"""Periodic event-triggered dynamic output-feedback controller.

Per follower the controller runs a state estimator ``x_hat`` fed by sampled
measurements, computes the control ``omega`` from the adaptive regulator
solution and the leader estimate, and talks to two network channels:

* sensor -> controller (PETM-B): the sensor transmits ``psi`` when it has
  drifted from the last transmitted value by more than a decaying threshold;
* controller -> actuator (PETM-C, optional): the actuator holds the last
  transmitted ``omega``.

Both channels are checked on the per-agent sensor grid ``{phase + p * Ts}``.

The module also carries the two admissible-sensor-period bounds and the
steady-state regulation-error bound chain used when PETM-C is active.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import matops
from .errors import InfeasibleParametersError, InvalidInputError, PreconditionError
from .observer import GRID_TOL
from .plant import unpack_chi

BISECT_LO = 1e-6
BISECT_HI = 10.0
BISECT_ITERS = 60


@dataclass(frozen=True)
class TriggerConfig:
    iota_psi: float
    gamma_psi: float
    iota_psi_bar: float = 0.0
    iota_omega: float = 0.0
    gamma_omega: float = 0.0
    iota_omega_bar: float = 0.0
    sigma: float = 1.0
    rho: float = 1.0
    petm_c_enabled: bool = False
    variant_e: bool = False

    def __post_init__(self):
        for k in ("iota_psi", "gamma_psi", "iota_psi_bar", "iota_omega",
                  "gamma_omega", "iota_omega_bar", "sigma", "rho"):
            if getattr(self, k) < 0:
                raise InvalidInputError(f"{k} must be non-negative")

    def psi_threshold(self, tau):
        thr = self.iota_psi * np.exp(-self.gamma_psi * tau)
        if self.petm_c_enabled or self.variant_e:
            thr += self.iota_psi_bar
        return thr

    def omega_threshold(self, tau):
        return self.iota_omega * np.exp(-self.gamma_omega * tau) + self.iota_omega_bar


@dataclass(frozen=True)
class BoundParams:
    zeta1: float
    zeta2: float
    zeta3: float
    epsilon: float

    def __post_init__(self):
        if not (self.zeta1 > 0 and self.zeta3 > 0 and self.epsilon > 0 and self.zeta2 >= 0):
            raise InvalidInputError("zeta1, zeta3, epsilon must be positive and zeta2 non-negative")


@dataclass
class ControllerState:
    """Mutable per-agent controller state owned by the simulation loop.

    ``psi_held``/``omega_held`` are the last values transmitted on the
    sensor and actuator channels; ``y_held`` is the measurement at the last
    sensor transmission (used by the measurement-based trigger variant).
    The ``*_s`` fields cache the local sampler at the latest sensor instant.
    """

    x_hat: np.ndarray
    chi_hat: np.ndarray
    sensor_period: float
    phase: float = 0.0
    psi_held: np.ndarray = None
    psi_t: float = 0.0
    y_held: np.ndarray = None
    omega_held: np.ndarray = None
    omega_t: float = 0.0
    x_hat_s: np.ndarray = None
    omega_s: np.ndarray = None
    vbar_s: np.ndarray = None
    cache_t: float = None

    def on_sensor_grid(self, tau):
        if tau == 0.0:
            return True
        k = round((tau - self.phase) / self.sensor_period)
        return k >= 0 and abs(tau - self.phase - k * self.sensor_period) <= GRID_TOL * max(1.0, abs(tau))

    def sample(self, t, omega, v_bar):
        """Refresh the sampler cache at a sensor instant."""
        self.x_hat_s = self.x_hat.copy()
        self.omega_s = np.array(omega, dtype=float)
        self.vbar_s = np.array(v_bar, dtype=float)
        self.cache_t = float(t)


class TriggerDecision(NamedTuple):
    fire: bool
    f: float


def control_signal(st, m, k_gain, v_hat):
    """``omega = K x_hat + (U_hat - K X_hat) v_hat``."""
    x_est, u_est = unpack_chi(st.chi_hat, m)
    v_hat = np.asarray(v_hat, dtype=float).reshape(-1)
    if v_hat.shape[0] != m.nv or st.x_hat.shape[0] != m.n:
        raise InvalidInputError("control_signal: dimension mismatch")
    return k_gain @ st.x_hat + (u_est - k_gain @ x_est) @ v_hat


def psi_signal(m, trig, v_bar, y_m):
    """Signal the sensor transmits: ``sigma F_m v_bar - rho F v_bar - y_m``."""
    v_bar = np.asarray(v_bar, dtype=float).reshape(-1)
    y_m = np.asarray(y_m, dtype=float).reshape(-1)
    if v_bar.shape[0] != m.nv or y_m.shape[0] != m.ny:
        raise InvalidInputError("psi_signal: dimension mismatch")
    # rho multiplies F (regulated-output map); rows must match the measurement
    if m.ne != m.ny and trig.rho != 0:
        raise InvalidInputError("rho != 0 requires as many regulated outputs as measurements")
    psi = trig.sigma * (m.f_m @ v_bar) - y_m
    if trig.rho != 0:
        psi = psi - trig.rho * (m.f @ v_bar)
    return psi


def controller_observer_derivative(st, m, l_gain, trig, omega, v_hat, t):
    """Right-hand side of the sampled-data state estimator.

    ``A x_hat + B omega + E v_hat`` plus output injection through ``L`` of the
    sampled prediction ``C_m x_hat(tp) + D_m omega(tp)``, the sampled leader
    feed-through ``(rho F + (1 - sigma) F_m) v_bar(tp)`` and the last
    transmitted ``psi``.
    """
    if st.cache_t is None or t < st.cache_t - GRID_TOL or t > st.cache_t + st.sensor_period + GRID_TOL:
        raise InvalidInputError(f"sampler cache (t={st.cache_t}) is stale at t={t}")
    v_hat = np.asarray(v_hat, dtype=float).reshape(-1)
    omega = np.asarray(omega, dtype=float).reshape(-1)
    if v_hat.shape[0] != m.nv or omega.shape[0] != m.nu:
        raise InvalidInputError("controller_observer_derivative: dimension mismatch")
    innov = m.c_m @ st.x_hat_s + m.d_m @ st.omega_s + (1.0 - trig.sigma) * (m.f_m @ st.vbar_s) + st.psi_held
    if trig.rho != 0:
        innov = innov + trig.rho * (m.f @ st.vbar_s)
    return m.a @ st.x_hat + m.b @ omega + m.e @ v_hat + l_gain @ innov


def _check_anchor(st, tau, anchor_t):
    if not st.on_sensor_grid(tau):
        raise InvalidInputError(f"tau={tau} is not on the sensor grid")
    if tau < anchor_t - GRID_TOL:
        raise InvalidInputError("tau must not precede the last transmission")


def petm_b_evaluate(st, trig, tau, psi_now, y_now=None):
    """Sensor-to-controller trigger.

    Measures drift of ``psi`` (or of ``y_m`` in the measurement-based
    variant) since the last transmission against the decaying threshold,
    plus the constant offset when PETM-C or the variant is active.
    """
    _check_anchor(st, tau, st.psi_t)
    if trig.variant_e:
        if y_now is None:
            raise InvalidInputError("measurement-based trigger needs y_now")
        dev = np.linalg.norm(np.asarray(y_now) - st.y_held)
    else:
        dev = np.linalg.norm(np.asarray(psi_now) - st.psi_held)
    f = float(dev - trig.psi_threshold(tau))
    return TriggerDecision(f > 0, f)


def petm_c_evaluate(st, trig, tau, omega_now):
    """Controller-to-actuator trigger."""
    if not trig.petm_c_enabled:
        raise InvalidInputError("PETM-C is disabled for this agent")
    _check_anchor(st, tau, st.omega_t)
    f = float(np.linalg.norm(np.asarray(omega_now) - st.omega_held) - trig.omega_threshold(tau))
    return TriggerDecision(f > 0, f)


# -- admissible sensor periods ------------------------------------------------


def _lyap_neg2(closed_loop, what):
    if not matops.is_hurwitz(closed_loop):
        raise PreconditionError(f"{what} is not Hurwitz")
    return matops.solve_sym_lyapunov(closed_loop, -2.0)


def _growth(closed_loop, a, period):
    """``period * ||closed_loop|| * exp(||A|| period)``."""
    return period * matops.spectral_norm(closed_loop) * np.exp(matops.spectral_norm(a) * period)


def _bisect_sup(feasible):
    if feasible(BISECT_HI):
        return BISECT_HI
    if not feasible(BISECT_LO):
        return 0.0
    lo, hi = BISECT_LO, BISECT_HI
    for _ in range(BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _ratio_constraint(gain_norm, delta):
    return delta < 1.0 and gain_norm * delta / (1.0 - delta) < 1.0


def sensor_period_bound(m, k_gain, l_gain, mode="B"):
    """Largest sensor period satisfying the sampled-estimator constraint.

    Mode ``"B"`` enforces ``||Q L C_m|| d3 / (1 - d3) < 1`` with
    ``d3 = Ts ||A + L C_m|| exp(||A|| Ts)`` and ``Q (A+LC_m) + (A+LC_m)^T Q = -2I``.
    Mode ``"C"`` also enforces the analogous constraint on ``A + B K`` and
    returns the smaller admissible period.  The returned value is a
    feasible point within ~1e-17 of the supremum.
    """
    mode = mode.upper()
    if mode not in ("B", "C"):
        raise InvalidInputError("mode must be 'B' or 'C'")
    a_lc = m.a + l_gain @ m.c_m
    q = _lyap_neg2(a_lc, "A + L C_m")
    qlc = matops.spectral_norm(q @ l_gain @ m.c_m)
    constraints = [lambda T: _ratio_constraint(qlc, _growth(a_lc, m.a, T))]
    if mode == "C":
        a_bk = m.a + m.b @ k_gain
        r = _lyap_neg2(a_bk, "A + B K")
        rbk = matops.spectral_norm(r @ m.b @ k_gain)
        constraints.append(lambda T: _ratio_constraint(rbk, _growth(a_bk, m.a, T)))
    return _bisect_sup(lambda T: all(c(T) for c in constraints))


# -- steady-state error bound --------------------------------------------------


@dataclass(frozen=True)
class BoundChain:
    phi1: float
    phi2: float
    phi3: float
    phi4: float
    phi5: float
    phi6: float
    phi7: float
    phi8: float


def error_bound_chain(m, k_gain, l_gain, u_sol, bp, iota_psi_bar, iota_omega_bar, period):
    """Evaluate the full bound chain and return every intermediate value.

    Raises
    ------
    InfeasibleParametersError
        When one of the chain's denominators is non-positive; the message
        names the violated inequality.
    """
    if period < 0 or iota_psi_bar < 0 or iota_omega_bar < 0:
        raise InvalidInputError("thresholds and period must be non-negative")
    a_lc = m.a + l_gain @ m.c_m
    a_bk = m.a + m.b @ k_gain
    q = _lyap_neg2(a_lc, "A + L C_m")
    r = _lyap_neg2(a_bk, "A + B K")
    nrm = matops.spectral_norm
    grow = np.exp(nrm(m.a) * period)
    d3 = period * nrm(a_lc) * grow
    d4 = period * nrm(a_bk) * grow
    if d3 >= 1:
        raise InfeasibleParametersError(f"delta3 = {d3:.4g} must be < 1")
    if d4 >= 1:
        raise InfeasibleParametersError(f"delta4 = {d4:.4g} must be < 1")
    qlc = nrm(q @ l_gain @ m.c_m)
    rbk = nrm(r @ m.b @ k_gain)
    den_q = 1.0 - qlc * d3 / (1.0 - d3) - bp.zeta1 - bp.epsilon
    den_r = 1.0 - rbk * d4 / (1.0 - d4) - bp.zeta3 - bp.epsilon
    if den_q <= 0:
        raise InfeasibleParametersError(
            f"||Q L C_m|| delta_x~ + zeta1 + eps = {1 - den_q:.4g} must be < 1")
    if den_r <= 0:
        raise InfeasibleParametersError(
            f"||R B K|| delta_x- + zeta3 + eps = {1 - den_r:.4g} must be < 1")
    lq = np.linalg.eigvalsh(q)
    lr = np.linalg.eigvalsh(r)

    phi1 = period * nrm(l_gain) * iota_psi_bar * grow / (1.0 - d3)
    phi2 = (qlc * phi1 + nrm(q @ l_gain) * iota_psi_bar) ** 2 / (4.0 * bp.zeta1)
    phi3 = lq[-1] * phi2 / (lq[0] * den_q)
    phi4 = nrm(k_gain) * phi3 + iota_omega_bar + nrm(u_sol) * bp.zeta2 * period
    phi5 = period * grow * phi4 / (1.0 - d4)
    phi6 = (rbk * phi5 + nrm(r) * phi4) ** 2 / (4.0 * bp.zeta3)
    phi7 = np.sqrt(lr[-1] * phi6 / (lr[0] * den_r))
    phi8 = nrm(m.c + m.d @ k_gain) * phi7 + nrm(m.d @ k_gain) * phi3
    return BoundChain(*(float(x) for x in (phi1, phi2, phi3, phi4, phi5, phi6, phi7, phi8)))


def steady_error_bound(m, k_gain, l_gain, u_sol, trig, bp, sensor_period):
    """Asymptotic bound on ``||e_i||`` under PETM-C for the configured thresholds."""
    return error_bound_chain(
        m, k_gain, l_gain, u_sol, bp, trig.iota_psi_bar, trig.iota_omega_bar, sensor_period
    ).phi8
