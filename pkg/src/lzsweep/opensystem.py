"""Phase-noise master equation in the Fock basis.

Dephasing in the mode occupations is diagonal in this basis, so the
dissipator acts elementwise as -gamma (m-n)^2 on the coherences and the
whole equation closes on one density matrix: no unraveling.  Propagation
runs in the interaction frame of the instantaneous diagonal (offset ramp
plus interaction), which leaves a bond-phased commutator identical in
structure to the closed-system sweep; the dissipator is frame-invariant.
Only the upper triangle is stepped, the mirror is implied.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit
from numba.extending import register_jitable

from . import fock, windows
from .dynamics import (MAX_STEPS, _frame_phases, dressed_initial_state,
                       _loaded_fraction)
from .integrate import _dopri5, raise_for_status


class PositivityError(RuntimeError):
    """Sampled state dipped below zero beyond the monitoring tolerance."""


def dissipator_apply(rho, gamma):
    """Phase-noise dissipator: coherences decay as the squared index
    distance, populations are untouched."""
    if gamma < 0:
        raise ValueError(f"need gamma >= 0, got {gamma}")
    rho = np.asarray(rho)
    n = np.arange(rho.shape[0])
    d = n[:, None] - n[None, :]
    return -gamma * d * d * rho


# ------------------------------------------------------------- numba core

@register_jitable
def _master_rhs(t, y, dy, rp, rv1, rv2, w1, w2):
    # y packs the upper triangle row-major; rv1 holds the bond couplings
    # H_{k,k+1}; w1 is scratch for their frame-phased values.
    U = rp[0]
    alpha = rp[1]
    t0 = rp[2]
    gamma = rp[3]
    N = int(rp[4])
    dt = t - t0
    base = -(alpha * (t * t - t0 * t0) + U * (1.0 - N) * dt)
    step = -2.0 * U * dt
    ph = complex(np.cos(base), np.sin(base))
    rot = complex(np.cos(step), np.sin(step))
    for k in range(N):
        w1[k] = rv1[k] * ph
        ph *= rot
    idx = 0
    for m in range(N + 1):
        # Row bases into the packed triangle: y[row_m + j] = rho_{m,j} for
        # j >= m, and likewise one row up or down.  Elements below the
        # diagonal come from the conjugate mirror.
        row_m = idx - m
        up = row_m + N - m
        dn = row_m + m - N - 1
        for n in range(m, N + 1):
            acc = 0j
            if m < N:
                r = y[up + n] if n > m else np.conj(y[idx + 1])
                acc += w1[m] * r
            if m > 0:
                acc += np.conj(w1[m - 1]) * y[dn + n]
            if n > 0:
                r = y[row_m + n - 1] if n > m else np.conj(y[dn + n])
                acc -= r * w1[n - 1]
            if n < N:
                acc -= y[row_m + n + 1] * np.conj(w1[n])
            d = n - m
            v = -1j * acc - gamma * d * d * y[idx]
            if d == 0:
                v = complex(v.real, 0.0)
            dy[idx] = v
            idx += 1


@njit(cache=True)
def _master_solve(t0, t1, y0, rtol, atol, ts, rp, couplings, max_steps):
    ysamp = np.empty((ts.size, y0.size), dtype=np.complex128)
    rv2 = np.zeros(1)
    n = int(rp[4]) + 1
    w1 = np.empty(n, dtype=np.complex128)
    w2 = np.empty(1, dtype=np.complex128)
    status, t, y, na, nr = _dopri5(_master_rhs, t0, t1, y0, rtol, atol, ts,
                                   ysamp, rp, couplings, rv2, w1, w2,
                                   max_steps)
    return status, t, y, ysamp, na, nr


# ------------------------------------------------------------ pack/observe

def _pack(rho, N):
    iu = np.triu_indices(N + 1)
    return np.ascontiguousarray(rho[iu])


def _unpack(y, N):
    full = np.zeros((N + 1, N + 1), dtype=np.complex128)
    full[np.triu_indices(N + 1)] = y
    return full + np.conj(np.triu(full, 1)).T


def _dense_L(N):
    b = fock.lx_offdiag(N)
    lx = np.diag(b, 1) + np.diag(b, -1)
    ly = np.diag(1j * b, 1) + np.diag(-1j * b, -1)
    lz = np.diag(fock.lz_diag(N))
    return lx, ly, lz


@dataclass(frozen=True)
class RhoObservables:
    """Traces of one density matrix against the collective operators."""

    L: np.ndarray             # <L_x>, <L_y>, <L_z>
    var_L: np.ndarray
    populations: np.ndarray   # mode occupation counts (n1, n2)
    spdm: np.ndarray          # 2x2, trace 1
    purity: float


def observables_from_rho(rho):
    rho = np.asarray(rho, dtype=np.complex128)
    N = rho.shape[0] - 1
    if rho.shape != (N + 1, N + 1):
        raise ValueError(f"density matrix must be square, got {rho.shape}")
    ops = _dense_L(N)
    L = np.array([float(np.trace(rho @ op).real) for op in ops])
    var = np.array([float(np.trace(rho @ op @ op).real) for op in ops])
    var -= L ** 2
    n2 = float(np.sum(np.arange(N + 1) * np.diag(rho).real))
    pops = np.array([N - n2, n2])
    return RhoObservables(L=L, var_L=var, populations=pops,
                          spdm=fock.spdm_from_L(L, N),
                          purity=float(np.sum(np.abs(rho) ** 2)))


# -------------------------------------------------------------- propagation

@dataclass(frozen=True)
class MasterRecord:
    """Sampled observables along one master-equation sweep."""

    t: np.ndarray
    L: np.ndarray             # (n, 3)
    var_L: np.ndarray         # (n, 3)
    populations: np.ndarray   # (n, 2) counts
    purity: np.ndarray        # (n,)
    spdm_eigs: np.ndarray     # (n, 2) ascending
    trace: np.ndarray         # (n,) real part of tr rho
    min_eig: float            # most negative sampled eigenvalue
    trace_drift: float        # |tr - 1| at t_end

    @property
    def duration(self):
        return float(self.t[-1] - self.t[0])


def propagate_master(rho0, protocol, gamma, sample_times=None,
                     positivity_tol=1e-6):
    """Integrate the dephasing master equation over the sweep window.

    Returns (MasterRecord, final density matrix in the lab frame).
    Hermiticity is structural (packed triangle); trace and positivity are
    monitored, and a sampled eigenvalue below -positivity_tol raises
    PositivityError rather than being projected away.
    """
    if gamma < 0:
        raise ValueError(f"need gamma >= 0, got {gamma}")
    rho0 = np.asarray(rho0, dtype=np.complex128)
    N = protocol.N
    if rho0.shape != (N + 1, N + 1):
        raise ValueError(f"expected ({N + 1}, {N + 1}) matrix for N = {N}, "
                         f"got {rho0.shape}")
    if np.abs(rho0 - rho0.conj().T).max() > 1e-10:
        raise ValueError("initial density matrix is not Hermitian")
    if abs(np.trace(rho0).real - 1.0) > 1e-8:
        raise ValueError(f"initial trace {np.trace(rho0)} != 1")
    ts = (np.array([protocol.t_end]) if sample_times is None
          else np.asarray(sample_times, dtype=float))
    rp = np.array([protocol.U, protocol.alpha, protocol.t_start,
                   float(gamma), float(N)])
    couplings = (-2.0 * protocol.J * fock.lx_offdiag(N)).astype(np.complex128)
    status, t_end, yf, ysamp, _, _ = _master_solve(
        protocol.t_start, protocol.t_end, _pack(rho0, N), protocol.tol,
        protocol.tol * 1e-2, ts, rp, couplings, MAX_STEPS)
    raise_for_status(status, t_end, "propagate_master")

    theta = _frame_phases(protocol, ts)
    n = ts.size
    L = np.empty((n, 3))
    var = np.empty((n, 3))
    pops = np.empty((n, 2))
    pur = np.empty(n)
    eigs2 = np.empty((n, 2))
    tr = np.empty(n)
    min_eig = np.inf
    for i in range(n):
        frame = _unpack(ysamp[i], N)
        min_eig = min(min_eig, float(np.linalg.eigvalsh(frame)[0]))
        u = np.exp(-1j * theta[i])
        lab = u[:, None] * frame * np.conj(u)[None, :]
        tr[i] = float(np.trace(lab).real)
        obs = observables_from_rho(lab / tr[i])
        L[i] = obs.L
        var[i] = obs.var_L
        pops[i] = obs.populations
        pur[i] = obs.purity
        eigs2[i] = np.sort(np.linalg.eigvalsh(obs.spdm))
    u = np.exp(-1j * _frame_phases(protocol,
                                   np.array([protocol.t_end]))[0])
    final = u[:, None] * _unpack(yf, N) * np.conj(u)[None, :]
    record = MasterRecord(t=ts, L=L, var_L=var, populations=pops, purity=pur,
                          spdm_eigs=eigs2, trace=tr, min_eig=float(min_eig),
                          trace_drift=abs(float(np.trace(final).real) - 1.0))
    if record.min_eig < -positivity_tol:
        raise PositivityError(
            f"sampled eigenvalue {record.min_eig:.3e} below -{positivity_tol}"
            "; tighten protocol.tol")
    return record, final


def _survival_tail(protocol, gamma):
    ts = windows.tail_times(protocol)
    start = dressed_initial_state(protocol)
    rho0 = np.outer(start, np.conj(start))
    record, _ = propagate_master(rho0, protocol, gamma, ts)
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


def plz_master(protocol, gamma, converge_atol=1e-3, certify=True,
               max_doublings=6):
    """Survival probability of the initial mode under phase noise.

    Same dressed start, branch projection, tail average, and window
    certification as the closed many-particle estimator; gamma = 0
    reduces to it exactly.
    """
    if not certify:
        return float(min(max(_survival_tail(protocol, gamma), 0.0), 1.0))
    value, _, _ = windows.certified_value(
        lambda p: _survival_tail(p, gamma), protocol,
        converge_atol=converge_atol, max_doublings=max_doublings)
    return float(min(max(value, 0.0), 1.0))
