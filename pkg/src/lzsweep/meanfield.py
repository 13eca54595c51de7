"""Single-trajectory mean-field dynamics of the two-mode sweep.

Two equivalent faces of one flow: the discrete Gross-Pitaevskii equation
for the amplitudes (psi1, psi2),

    i d(psi1)/dt = (-eps(t) + g |psi1|^2) psi1 - J psi2
    i d(psi2)/dt = (+eps(t) + g |psi2|^2) psi2 - J psi1

and the Bloch-vector form, which additionally admits transversal damping
at rate gamma (phase noise):

    ds_x/dt = -2 eps s_y - 2 g s_y s_z - gamma s_x
    ds_y/dt = +2 J s_z + 2 eps s_x + 2 g s_x s_z - gamma s_y
    ds_z/dt = -2 J s_y

Mode 1 carries the diagonal -eps(t), matching the many-body Hamiltonian,
so with alpha > 0 a state starting in mode 1 rides the upper level.  The
nonlinear coefficient is the macroscopic g = U*N throughout; with gamma=0
the Bloch flow is exactly the image of the GPE.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit
from numba.extending import register_jitable

from . import windows
from .integrate import _dopri5, raise_for_status


@dataclass(frozen=True)
class MeanFieldState:
    """Two complex amplitudes, |psi1|^2 + |psi2|^2 = 1 for a pure sweep."""

    psi1: complex
    psi2: complex

    @property
    def norm2(self):
        return abs(self.psi1) ** 2 + abs(self.psi2) ** 2

    def bloch(self):
        """(s_x, s_y, s_z); the convention pairs with the ascending-Lz basis."""
        cross = np.conj(self.psi1) * self.psi2
        return np.array([cross.real, -cross.imag,
                         0.5 * (abs(self.psi2) ** 2 - abs(self.psi1) ** 2)])

    @staticmethod
    def from_bloch(s):
        """Inverse of bloch() with psi1 real non-negative; needs |s| = 1/2."""
        sx, sy, sz = s
        r1sq = 0.5 - sz
        if r1sq < 1e-15:
            return MeanFieldState(0.0, 1.0)
        r1 = np.sqrt(r1sq)
        return MeanFieldState(r1, (sx - 1j * sy) / r1)

    @staticmethod
    def in_mode(mode):
        return MeanFieldState(1.0, 0.0) if mode == 1 else MeanFieldState(0.0, 1.0)


@dataclass(frozen=True)
class MeanFieldTrajectory:
    t: np.ndarray
    psi: np.ndarray          # (n, 2) complex; None for damped-Bloch runs
    s: np.ndarray            # (n, 3) Bloch samples
    norm_drift: float        # |norm^2 - 1| at t_end, GPE only


def mean_field_energy(state, eps, J, g):
    """E = eps(|psi2|^2-|psi1|^2) - J(psi1* psi2 + c.c.) + g/2(|psi1|^4+|psi2|^4)."""
    n1 = abs(state.psi1) ** 2
    n2 = abs(state.psi2) ** 2
    cross = np.conj(state.psi1) * state.psi2
    return eps * (n2 - n1) - 2.0 * J * cross.real + 0.5 * g * (n1 ** 2 + n2 ** 2)


def analytic_plz_linear(J, alpha):
    """Closed-form linear-sweep survival exp(-pi J^2 / alpha)."""
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    return float(np.exp(-np.pi * J ** 2 / alpha))


# --------------------------------------------------------------- numba core

@register_jitable
def _gpe_rhs(t, y, dy, rp, rv1, rv2, w1, w2):
    J = rp[0]
    g = rp[1]
    eps = rp[2] * t
    p1 = y[0]
    p2 = y[1]
    n1 = p1.real * p1.real + p1.imag * p1.imag
    n2 = p2.real * p2.real + p2.imag * p2.imag
    dy[0] = -1j * ((-eps + g * n1) * p1 - J * p2)
    dy[1] = -1j * ((eps + g * n2) * p2 - J * p1)


@register_jitable
def _bloch_rhs(t, y, dy, rp, rv1, rv2, w1, w2):
    J = rp[0]
    g = rp[1]
    eps = rp[2] * t
    gamma = rp[3]
    sx = y[0]
    sy = y[1]
    sz = y[2]
    dy[0] = -2.0 * eps * sy - 2.0 * g * sy * sz - gamma * sx
    dy[1] = 2.0 * J * sz + 2.0 * eps * sx + 2.0 * g * sx * sz - gamma * sy
    dy[2] = -2.0 * J * sy


@njit(cache=True)
def _gpe_solve(t0, t1, y0, rtol, atol, ts, rp, max_steps):
    ysamp = np.empty((ts.size, 2), dtype=np.complex128)
    rv = np.zeros(1)
    w1 = np.empty(1, dtype=np.complex128)
    w2 = np.empty(1, dtype=np.complex128)
    status, t, y, na, nr = _dopri5(_gpe_rhs, t0, t1, y0, rtol, atol, ts,
                                   ysamp, rp, rv, rv, w1, w2, max_steps)
    return status, t, y, ysamp, na, nr


@njit(cache=True)
def _bloch_solve(t0, t1, y0, rtol, atol, ts, rp, max_steps):
    ysamp = np.empty((ts.size, 3), dtype=np.float64)
    rv = np.zeros(1)
    w1 = np.empty(1, dtype=np.float64)
    w2 = np.empty(1, dtype=np.float64)
    status, t, y, na, nr = _dopri5(_bloch_rhs, t0, t1, y0, rtol, atol, ts,
                                   ysamp, rp, rv, rv, w1, w2, max_steps)
    return status, t, y, ysamp, na, nr


MAX_STEPS = 50_000_000


# -------------------------------------------------------------- propagation

def propagate_gpe(state, protocol, sample_times=None):
    """Integrate the GPE over the protocol window.

    Returns (MeanFieldTrajectory, final MeanFieldState).  sample_times must
    be sorted and inside the window; the stepper lands on them exactly.
    """
    if abs(state.norm2 - 1.0) > 1e-8:
        raise ValueError(f"initial norm^2 = {state.norm2}, expected 1")
    ts = np.empty(0) if sample_times is None else np.asarray(sample_times, float)
    y0 = np.array([state.psi1, state.psi2], dtype=np.complex128)
    rp = np.array([protocol.J, protocol.g, protocol.alpha])
    status, t, y, ysamp, _, _ = _gpe_solve(
        protocol.t_start, protocol.t_end, y0, protocol.tol,
        protocol.tol * 1e-2, ts, rp, MAX_STEPS)
    raise_for_status(status, t, "propagate_gpe")
    final = MeanFieldState(y[0], y[1])
    s = np.empty((ts.size, 3))
    for i in range(ts.size):
        s[i] = MeanFieldState(ysamp[i, 0], ysamp[i, 1]).bloch()
    traj = MeanFieldTrajectory(t=ts, psi=ysamp, s=s,
                               norm_drift=abs(final.norm2 - 1.0))
    return traj, final


def propagate_bloch_noisy(state, protocol, gamma, sample_times=None):
    """Integrate the damped Bloch equations; gamma = 0 reproduces the GPE flow.

    state may be a MeanFieldState or a length-3 Bloch vector (damped flows
    leave the sphere, so amplitudes are not always available).
    """
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    s0 = state.bloch() if isinstance(state, MeanFieldState) else np.asarray(state, float)
    ts = np.empty(0) if sample_times is None else np.asarray(sample_times, float)
    rp = np.array([protocol.J, protocol.g, protocol.alpha, gamma])
    status, t, y, ysamp, _, _ = _bloch_solve(
        protocol.t_start, protocol.t_end, s0.copy(), protocol.tol,
        protocol.tol * 1e-2, ts, rp, MAX_STEPS)
    raise_for_status(status, t, "propagate_bloch_noisy")
    traj = MeanFieldTrajectory(t=ts, psi=None, s=ysamp, norm_drift=0.0)
    return traj, y


# ------------------------------------------------------------- probability

def dressed_initial_state(protocol):
    """Stationary state at t_start continuously connected to the initial mode.

    The physical boundary condition lives at eps -> -/+ infinity where the
    mode and the adiabatic branch coincide; starting a finite window in the
    bare mode instead leaves an O(J/eps_start) branch contamination whose
    interference makes the reported probability oscillate with the window
    size.  Dressing the start removes it.  The interaction enters through
    the effective detuning e = eps + g*s_z, iterated to a fixed point.
    """
    eps0 = protocol.epsilon(protocol.t_start)
    if protocol.J == 0.0:
        return MeanFieldState.in_mode(protocol.initial_mode)
    sz = -0.5 if protocol.initial_mode == 1 else 0.5
    lower = windows.mode_connected_branch_is_lower(protocol.initial_mode,
                                                   eps0 + protocol.g * sz)
    for _ in range(4):
        u = windows.branch_slope(eps0 + protocol.g * sz, protocol.J)
        nrm = 1.0 + u * u
        sz = (0.5 * (u * u - 1.0) if lower else 0.5 * (1.0 - u * u)) / nrm
    if lower:
        return MeanFieldState(1.0 / np.sqrt(nrm), u / np.sqrt(nrm))
    return MeanFieldState(-u / np.sqrt(nrm), 1.0 / np.sqrt(nrm))


def _survival_tail(protocol, gamma):
    """Trailing-window average of the adiabatically projected survival."""
    ts = windows.tail_times(protocol)
    mode = protocol.initial_mode
    start = dressed_initial_state(protocol)
    if gamma == 0.0:
        traj, _ = propagate_gpe(start, protocol, ts)
        # project from unit-norm samples: the raw norm drift (pure integrator
        # error here) would otherwise leak into the branch population
        nrm2 = np.abs(traj.psi[:, 0]) ** 2 + np.abs(traj.psi[:, 1]) ** 2
        sx = traj.s[:, 0] / nrm2
        sz = traj.s[:, 2] / nrm2
    else:
        traj, _ = propagate_bloch_noisy(start, protocol, gamma, ts)
        sx = traj.s[:, 0]
        sz = traj.s[:, 2]
    pop = windows.adiabatic_survival(ts, sx, sz, protocol.J, protocol.g,
                                     protocol.alpha, mode)
    return windows.tail_mean(pop)


def plz_mean_field(protocol, gamma=0.0, converge_atol=1e-3, certify=True,
                   max_doublings=6):
    """Mean-field Landau-Zener survival probability of the initial mode.

    Reported as the trailing-window average of the mode population,
    window-certified by doubling unless certify=False (then the caller
    owns window convergence, e.g. one certification shared by a scan).
    """
    if not certify:
        return _survival_tail(protocol, gamma)
    value, _, _ = windows.certified_value(
        lambda p: _survival_tail(p, gamma), protocol,
        converge_atol=converge_atol, max_doublings=max_doublings)
    return value
