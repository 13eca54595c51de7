"""Many-particle sweep dynamics in the Fock basis.

Schrodinger propagation of the N+1 amplitudes through a linear ramp,
plus the derived quantities the rest of the package consumes: survival
probability of the initially occupied level, number and spectroscopic
squeezing, and the post-sweep phase-coherence revivals.

The integrator works in the interaction frame of the time-dependent
diagonal: with theta_n(t) the exactly integrated diagonal phase, the
transformed amplitudes feel only the tridiagonal coupling, whose bond
phases form a geometric ladder in n (two trig evaluations per RHS call).
Recorded states are rotated back, so everything outside this module sees
the lab frame.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit
from numba.extending import register_jitable
from scipy.linalg import eigh_tridiagonal

from . import fock, windows
from .integrate import _dopri5, raise_for_status

MAX_STEPS = 50_000_000


@register_jitable
def _sweep_rhs(t, y, dy, rp, rv1, rv2, w1, w2):
    # rv1 holds the bond couplings H_{n,n+1} = -J sqrt((n+1)(N-n)).
    # Bond phase phi_n = -(alpha (t^2 - t0^2) + U (2n+1-N)(t - t0)) steps by
    # the constant -2 U (t - t0), hence the single phase ladder.
    U = rp[0]
    alpha = rp[1]
    t0 = rp[2]
    nb = y.shape[0] - 1
    dt = t - t0
    base = -(alpha * (t * t - t0 * t0) + U * (1.0 - nb) * dt)
    step = -2.0 * U * dt
    ph = complex(np.cos(base), np.sin(base))
    rot = complex(np.cos(step), np.sin(step))
    for k in range(nb + 1):
        dy[k] = 0.0j
    for k in range(nb):
        c = rv1[k] * ph
        dy[k] += -1j * (c * y[k + 1])
        dy[k + 1] += -1j * (np.conj(c) * y[k])
        ph *= rot


@njit(cache=True)
def _sweep_solve(t0, t1, y0, rtol, atol, ts, rp, couplings, max_steps):
    ysamp = np.empty((ts.size, y0.size), dtype=np.complex128)
    rv2 = np.zeros(1)
    w1 = np.empty(1, dtype=np.complex128)
    w2 = np.empty(1, dtype=np.complex128)
    status, t, y, na, nr = _dopri5(_sweep_rhs, t0, t1, y0, rtol, atol, ts,
                                   ysamp, rp, couplings, rv2, w1, w2,
                                   max_steps)
    return status, t, y, ysamp, na, nr


def _frame_phases(protocol, ts):
    """theta_n at the given times as a (len(ts), N+1) array."""
    m = fock.lz_diag(protocol.N)
    t0 = protocol.t_start
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    return (protocol.alpha * np.outer(ts * ts - t0 * t0, m)
            + protocol.U * np.outer(ts - t0, m * m))


@dataclass(frozen=True)
class TrajectoryRecord:
    """Per-sample observables of one propagated sweep.

    state rows are lab-frame amplitudes as propagated (norms carry the
    integrator drift; observables were taken on normalized copies).
    populations are particle counts, so the two columns sum to N.
    """

    t: np.ndarray            # (S,) sample times, strictly increasing
    state: np.ndarray        # (S, N+1) complex
    L: np.ndarray            # (S, 3)  <Lx>, <Ly>, <Lz>
    var_L: np.ndarray        # (S, 3)  variances, clamped >= 0
    populations: np.ndarray  # (S, 2)  <n1>, <n2>
    spdm_eigs: np.ndarray    # (S, 2)  ascending
    norm_drift: float        # max | ||psi||^2 - 1 | over samples and endpoint

    @property
    def duration(self):
        return float(self.t[-1] - self.t[0]) if self.t.size > 1 else 0.0


def _observe(lab, N):
    """Vectorized per-row observables of lab-frame amplitude rows."""
    m = fock.lz_diag(N)
    b = fock.lx_offdiag(N)
    nrm2 = np.sum(np.abs(lab) ** 2, axis=1)
    c = lab / np.sqrt(nrm2)[:, None]
    w = np.abs(c) ** 2
    n2 = w @ np.arange(N + 1.0)
    lz = w @ m
    var_lz = np.maximum(w @ (m * m) - lz * lz, 0.0)
    z = (np.conj(c[:, :-1]) * c[:, 1:]) @ b
    lx = 2.0 * z.real
    ly = -2.0 * z.imag
    xc = np.zeros_like(c)
    xc[:, :-1] += b * c[:, 1:]
    xc[:, 1:] += b * c[:, :-1]
    var_lx = np.maximum(np.sum(np.abs(xc) ** 2, axis=1) - lx * lx, 0.0)
    yc = np.zeros_like(c)
    yc[:, :-1] += 1j * b * c[:, 1:]
    yc[:, 1:] += -1j * b * c[:, :-1]
    var_ly = np.maximum(np.sum(np.abs(yc) ** 2, axis=1) - ly * ly, 0.0)
    L = np.column_stack([lx, ly, lz])
    var_L = np.column_stack([var_lx, var_ly, var_lz])
    pops = np.column_stack([N - n2, n2])
    r = np.sqrt(lx * lx + ly * ly + lz * lz) / N
    eigs = np.column_stack([0.5 - r, 0.5 + r])
    return L, var_L, pops, eigs, nrm2


def propagate_schrodinger(state, protocol, sample_times=None):
    """Integrate i dPsi/dt = H(t) Psi over the protocol window.

    Returns (TrajectoryRecord, final lab-frame state).  sample_times must
    be sorted and lie inside the window; the stepper lands on each exactly.
    Raises StepUnderflowError / StepBudgetError (carrying the last good
    time) if the sweep cannot be completed at protocol.tol.
    """
    state = np.asarray(state, dtype=np.complex128)
    if state.shape != (protocol.N + 1,):
        raise ValueError(f"state has shape {state.shape}, expected "
                         f"({protocol.N + 1},)")
    fock.check_normalized(state)
    ts = (np.empty(0) if sample_times is None
          else np.asarray(sample_times, dtype=float))
    rp = np.array([protocol.U, protocol.alpha, protocol.t_start])
    couplings = -2.0 * protocol.J * fock.lx_offdiag(protocol.N)
    status, t, y, ysamp, _, _ = _sweep_solve(
        protocol.t_start, protocol.t_end, state.copy(), protocol.tol,
        protocol.tol * 1e-2, ts, rp, couplings, MAX_STEPS)
    raise_for_status(status, t, "propagate_schrodinger")
    final = y * np.exp(-1j * _frame_phases(protocol, protocol.t_end)[0])
    drift = abs(float(np.sum(np.abs(y) ** 2)) - 1.0)
    if ts.size:
        lab = ysamp * np.exp(-1j * _frame_phases(protocol, ts))
        L, var_L, pops, eigs, nrm2 = _observe(lab, protocol.N)
        drift = max(drift, float(np.max(np.abs(nrm2 - 1.0))))
    else:
        lab = np.empty((0, protocol.N + 1), dtype=np.complex128)
        L = np.empty((0, 3))
        var_L = np.empty((0, 3))
        pops = np.empty((0, 2))
        eigs = np.empty((0, 2))
    record = TrajectoryRecord(t=ts, state=lab, L=L, var_L=var_L,
                              populations=pops, spdm_eigs=eigs,
                              norm_drift=drift)
    return record, final


# ------------------------------------------------------------- LZ survival

def dressed_initial_state(protocol):
    """Eigenvector of H(t_start) continuing protocol.initial_mode.

    The branch eigenstate realizes the infinite-offset boundary condition
    at a finite start time; launching the bare Fock pole instead leaves an
    O(J/2|eps|) admixture in the opposite branch whose interference makes
    any finite-window readout oscillate with the window length.
    """
    diag, off = fock.hamiltonian_tridiag(protocol, protocol.t_start)
    _, vecs = eigh_tridiagonal(diag, off)
    pole = 0 if protocol.initial_mode == 1 else protocol.N
    k = int(np.argmax(np.abs(vecs[pole])))
    v = vecs[:, k]
    if v[pole] ** 2 <= 0.5:
        raise ValueError(
            f"eps(t_start) = {protocol.epsilon(protocol.t_start)} is too "
            "close to the crossing to identify the branch state; widen the "
            "window")
    if v[pole] < 0:
        v = -v
    return v.astype(np.complex128)


def _loaded_fraction(protocol, start):
    """Population of the start-connected branch in the prepared state.

    This is the denominator of the survival ratio: the branch holding the
    initial mode at t_start (the opposite one from the readout branch, as
    the branches exchange mode character through the crossing).
    """
    if protocol.J == 0.0:
        n1, n2 = fock.populations(start)
        return (n1 if protocol.initial_mode == 1 else n2) / protocol.N
    L0 = fock.expectation_L(start)
    sx, sz = L0[0] / protocol.N, L0[2] / protocol.N
    e0 = protocol.epsilon(protocol.t_start) + protocol.g * sz
    u = windows.branch_slope(e0, protocol.J)
    lower = (((0.5 - sz) + u * u * (0.5 + sz) + 2.0 * u * sx)
             / (1.0 + u * u))
    if windows.mode_connected_branch_is_lower(protocol.initial_mode, e0):
        return lower
    return 1.0 - lower


def _survival_tail(protocol):
    """Tail-averaged branch survival, normalized by the loaded fraction."""
    ts = windows.tail_times(protocol)
    start = dressed_initial_state(protocol)
    record, _ = propagate_schrodinger(start, protocol, ts)
    N = protocol.N
    pop = windows.adiabatic_survival(
        ts, record.L[:, 0] / N, record.L[:, 2] / N,
        protocol.J, protocol.g, protocol.alpha, protocol.initial_mode)
    p0 = _loaded_fraction(protocol, start)
    if not p0 > 0.5:
        raise ValueError(
            f"prepared state holds only {p0:.3g} of the starting branch; "
            "the window start does not isolate the initial level")
    return windows.tail_mean(pop) / p0


def plz_many_particle(protocol, converge_atol=1e-3, certify=True,
                      max_doublings=6):
    """Survival probability of the initially occupied level, exact dynamics.

    Ratio of the adiabatic-branch population averaged over the window tail
    to the population loaded at t_start.  With certify=True the window is
    doubled until the value moves by less than converge_atol and the
    settled value is returned; WindowConvergenceError reports the history
    if it never settles.
    """
    if certify:
        value, _, _ = windows.certified_value(
            _survival_tail, protocol, converge_atol=converge_atol,
            max_doublings=max_doublings)
    else:
        value = _survival_tail(protocol)
    return float(min(max(value, 0.0), 1.0))


# --------------------------------------------------------------- squeezing

class UndefinedSqueezingError(ValueError):
    """The reference scale of a squeezing parameter vanishes."""


# populations or coherences resolved below this relative scale count as zero
_SQUEEZING_FLOOR = 1e-12


def _unit_state(state):
    # accept integrator-level norm drift, reject actual corruption
    state = np.asarray(state)
    nrm2 = float(np.sum(np.abs(state) ** 2))
    if not np.isfinite(nrm2) or abs(nrm2 - 1.0) > 1e-4:
        raise ValueError(f"state norm^2 = {nrm2} is not a drifted unit norm")
    return state / np.sqrt(nrm2)


def squeezing_number(state):
    """Number squeezing xi_N^2 = dLz^2 / (<n1><n2>/N).

    Equals 1 on any coherent state away from the poles and 0 on the
    twin-Fock state.  Raises UndefinedSqueezingError when one mode is
    empty, where the coherent reference vanishes.
    """
    state = _unit_state(state)
    N = state.size - 1
    n1, n2 = fock.populations(state)
    if min(n1, n2) <= N * _SQUEEZING_FLOOR:
        raise UndefinedSqueezingError(
            f"populations ({n1:.3g}, {n2:.3g}) put all particles in one "
            "mode; the number-fluctuation reference is zero")
    return float(fock.variance_L(state)[2] / (n1 * n2 / N))


def squeezing_spectroscopic(state):
    """Spectroscopic squeezing xi_S^2 = N dLz^2 / (<Lx>^2 + <Ly>^2).

    Values below 1 certify multipartite entanglement.  Raises
    UndefinedSqueezingError when the phase coherence vanishes, which
    happens generically in mid-sweep collapse windows.
    """
    state = _unit_state(state)
    N = state.size - 1
    L = fock.expectation_L(state)
    coh2 = L[0] ** 2 + L[1] ** 2
    if coh2 <= (0.5 * N * _SQUEEZING_FLOOR) ** 2:
        raise UndefinedSqueezingError(
            "phase coherence <Lx>^2 + <Ly>^2 is zero; the spectroscopic "
            "reference is undefined here")
    return float(N * fock.variance_L(state)[2] / coh2)


def squeezing_profiles(record):
    """Per-sample (xi_N^2, xi_S^2) along a trajectory, NaN where undefined."""
    N = record.state.shape[1] - 1
    n1 = record.populations[:, 0]
    n2 = record.populations[:, 1]
    ref = n1 * n2 / N
    ok_n = np.minimum(n1, n2) > N * _SQUEEZING_FLOOR
    xi_n = np.where(ok_n, record.var_L[:, 2] / np.where(ok_n, ref, 1.0),
                    np.nan)
    coh2 = record.L[:, 0] ** 2 + record.L[:, 1] ** 2
    ok_s = coh2 > (0.5 * N * _SQUEEZING_FLOOR) ** 2
    xi_s = np.where(ok_s, N * record.var_L[:, 2] / np.where(ok_s, coh2, 1.0),
                    np.nan)
    return xi_n, xi_s


def sweep_number_squeezing(protocol, freeze_offset=None):
    """Settled number squeezing produced by the sweep.

    xi_N^2 keeps breathing as long as the instantaneous offset is
    comparable to the couplings, so a snapshot at the nominal window end
    aliases that oscillation.  This readout extends the ramp until the
    offset freezes the number distribution (windows.freezeout_window)
    and averages xi_N^2 over the final quarter of the extended window.
    Returns (value, record) with the record covering the tail samples.
    """
    extended = windows.freezeout_window(protocol, freeze_offset)
    ts = windows.tail_times(extended)
    record, _ = propagate_schrodinger(dressed_initial_state(extended),
                                      extended, ts)
    xi_n, _ = squeezing_profiles(record)
    if np.any(np.isnan(xi_n)):
        raise UndefinedSqueezingError(
            "number squeezing undefined in the readout tail; a mode "
            "emptied out, so the coherent reference vanishes")
    return float(windows.tail_mean(xi_n)), record


# ---------------------------------------------------------------- revivals

@dataclass(frozen=True)
class RevivalScan:
    """Outcome of a phase-coherence revival search.

    time is the first sample at or after the sweep end with xi_S^2 < 1,
    +inf if the horizon was exhausted.  degenerate marks parameters outside
    the breakdown regime (|g| <= 2J), where coherence is never lost and the
    sweep end itself is returned.
    """

    time: float
    degenerate: bool
    t: np.ndarray
    xi_s2: np.ndarray


def revival_time(protocol, horizon=None, samples_per_beat=64):
    """First post-sweep time at which the state is spectroscopically squeezed.

    Propagates the dressed start through the sweep window and onward for
    `horizon` further time units on the same ramp (default: four beats of
    the interaction phase, 2 pi N/|g|), scanning xi_S^2 on a grid of
    samples_per_beat points per beat.  Returns a RevivalScan; the search
    region starts at protocol.t_end, so choose t_end near the end of the
    interesting dynamics rather than far beyond it.
    """
    if abs(protocol.g) <= 2.0 * protocol.J:
        return RevivalScan(time=float(protocol.t_end), degenerate=True,
                           t=np.empty(0), xi_s2=np.empty(0))
    beat = 2.0 * np.pi / abs(protocol.U)
    if horizon is None:
        horizon = 4.0 * beat
    if not horizon > 0:
        raise ValueError(f"horizon must be > 0, got {horizon}")
    npts = max(int(np.ceil(samples_per_beat * horizon / beat)) + 1, 9)
    ts = np.linspace(protocol.t_end, protocol.t_end + horizon, npts)
    extended = protocol.with_window(protocol.t_start,
                                    protocol.t_end + horizon)
    record, _ = propagate_schrodinger(dressed_initial_state(extended),
                                      extended, ts)
    _, xi_s2 = squeezing_profiles(record)
    below = np.flatnonzero(~np.isnan(xi_s2) & (xi_s2 < 1.0))
    time = float(record.t[below[0]]) if below.size else np.inf
    return RevivalScan(time=time, degenerate=False, t=record.t, xi_s2=xi_s2)
