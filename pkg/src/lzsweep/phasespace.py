"""SU(2) phase space: Husimi density, coherent-state sampling, and the
classical trajectory ensemble.

The Husimi function is the squared overlap with the family of spin
coherent states; evolving an ensemble of mean-field trajectories whose
starting points sample that density realizes the Liouville flow with the
1/N quantum correction dropped.  Moment reconstruction from either the
grid or the sample mean needs the (N+2)-type counting factors collected
here, fixed against direct Fock-space expectations.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit
from numba.extending import register_jitable
from scipy.special import gammaln

from . import fock, windows
from .integrate import _dopri5
from .meanfield import (MAX_STEPS, MeanFieldState, _gpe_solve,
                        dressed_initial_state)

# figure-parity ensemble size; statistical tests want far more members
DEFAULT_MEMBERS = 150

_MOMENT_CHUNKS = 16   # fixed partition so reductions never depend on workers


# ----------------------------------------------------------- Husimi density

def coherent_amplitudes(N, theta, phi):
    """Fock coefficients of |theta, phi>, mode 2 carrying exp(-i n phi).

    Broadcasts over theta/phi; the trailing axis is the occupation of
    mode 2.  theta = 0 is the all-mode-1 pole.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    n = np.arange(N + 1)
    sqrtb = np.exp(0.5 * (gammaln(N + 1) - gammaln(n + 1)
                          - gammaln(N - n + 1)))
    c = np.cos(0.5 * theta)[..., None]
    s = np.sin(0.5 * theta)[..., None]
    amp = sqrtb * c ** (N - n) * s ** n
    return amp * np.exp(-1j * n * phi[..., None])


def coherent_overlap(theta, phi, state):
    """<theta, phi | state>; the bra contributes exp(+i n phi) phases."""
    state = np.asarray(state)
    N = state.size - 1
    return np.conj(coherent_amplitudes(N, theta, phi)) @ state


@dataclass(frozen=True)
class HusimiGrid:
    """Q sampled on a product grid, with its quadrature weights.

    theta holds Gauss-Legendre nodes in cos(theta) mapped to (0, pi),
    phi a periodic uniform grid on [0, 2 pi); area_weights integrate
    against the solid-angle measure, so (area_weights * Q).sum() is
    the normalization integral with target 4 pi / (N + 1).
    """

    theta: np.ndarray
    phi: np.ndarray
    Q: np.ndarray             # (n_theta, n_phi), >= 0
    area_weights: np.ndarray  # same shape
    N: int

    @property
    def integral(self):
        return float(np.sum(self.area_weights * self.Q))


def husimi(state, n_theta=None, n_phi=None):
    """Husimi density of a Fock-basis state on a quadrature grid.

    Defaults resolve every harmonic the state can carry; a coarser grid
    that misses the normalization target by more than 1e-6 only warns,
    so deliberately small plotting grids stay usable.
    """
    state = np.asarray(state, dtype=np.complex128)
    fock.check_normalized(state)
    N = state.size - 1
    nt = int(n_theta) if n_theta else max(4 * N, 64)
    nphi = int(n_phi) if n_phi else max(4 * N, 64)
    if nt < 2 or nphi < 2:
        raise ValueError(f"grid {nt} x {nphi} too small")
    x, wx = np.polynomial.legendre.leggauss(nt)
    order = np.argsort(-x)                   # ascending theta
    theta = np.arccos(x[order])
    wx = wx[order]
    phi = np.linspace(0.0, 2.0 * np.pi, nphi, endpoint=False)
    Q = np.empty((nt, nphi))
    for i in range(nt):                      # row at a time: bounded memory
        row = coherent_overlap(np.full(nphi, theta[i]), phi, state)
        Q[i] = np.abs(row) ** 2
    weights = np.outer(wx, np.full(nphi, 2.0 * np.pi / nphi))
    grid = HusimiGrid(theta=theta, phi=phi, Q=Q, area_weights=weights, N=N)
    residual = abs(grid.integral - 4.0 * np.pi / (N + 1))
    if residual > 1e-6:
        warnings.warn(f"Husimi grid {nt} x {nphi} misses the normalization "
                      f"integral by {residual:.2e}", stacklevel=2)
    return grid


def reconstruct_bloch_from_husimi(grid, N=None):
    """<L> from the Q moments: (N+1)(N+2)/(4 pi) * integral of s Q dOmega.

    The counting factor comes from resolving the identity over the
    coherent family plus one extra unit for the anti-normal ordering of
    the moment; it is fixed against fock.expectation_L, not quoted.
    """
    if N is None:
        N = grid.N
    elif N != grid.N:
        raise ValueError(f"grid built for N = {grid.N}, asked for N = {N}")
    residual = abs(grid.integral - 4.0 * np.pi / (N + 1))
    if residual > 1e-6:
        raise ValueError(
            f"grid fails the normalization identity by {residual:.2e}; "
            "reconstruction would be biased")
    st = np.sin(grid.theta)[:, None]
    sx = 0.5 * st * np.cos(grid.phi)[None, :]
    sy = 0.5 * st * np.sin(grid.phi)[None, :]
    sz = -0.5 * np.cos(grid.theta)[:, None] * np.ones_like(grid.phi)
    pref = (N + 1) * (N + 2) / (4.0 * np.pi)
    wq = grid.area_weights * grid.Q
    return pref * np.array([np.sum(wq * sx), np.sum(wq * sy),
                            np.sum(wq * sz)])


# ------------------------------------------------------------------ sampling

@dataclass(frozen=True)
class Ensemble:
    """Independent mean-field members with their reproducibility seeds."""

    members: tuple            # MeanFieldState each
    master_seed: int
    member_seeds: tuple       # one integer per member

    def __len__(self):
        return len(self.members)

    def spinors(self):
        return np.array([[m.psi1, m.psi2] for m in self.members],
                        dtype=np.complex128)


def sample_initial_ensemble(N, M, seed, mode=1):
    """Starting points distributed as the Husimi density of the bare mode.

    Exact inverse CDF: phi uniform, cos^2(theta/2) = v^(1/(N+1)) with v
    uniform on (0, 1], each sample the spinor
    (cos(theta/2), sin(theta/2) exp(-i phi)); mode 2 swaps components.
    Per-member seeds make any parallel draw bit-reproducible.
    """
    if M < 1:
        raise ValueError(f"need at least one member, got {M}")
    if mode not in (1, 2):
        raise ValueError(f"mode must be 1 or 2, got {mode}")
    master = np.random.default_rng(seed)
    member_seeds = [int(s) for s in master.integers(0, 2 ** 63, size=M)]
    members = []
    for s in member_seeds:
        rng = np.random.default_rng(s)
        v = 1.0 - rng.random()               # uniform on (0, 1]
        c = np.sqrt(v ** (1.0 / (N + 1)))
        amp2 = np.sqrt(1.0 - c * c) * np.exp(-1j * 2.0 * np.pi * rng.random())
        psi = (c, amp2) if mode == 1 else (amp2, c)
        members.append(MeanFieldState(*psi))
    return Ensemble(members=tuple(members), master_seed=int(seed),
                    member_seeds=tuple(member_seeds))


def aligned_ensemble(ensemble, target):
    """Rotate every member by the SU(2) element carrying the mode-1 pole
    to the target state; the sampling cloud rides along rigidly."""
    a, b = complex(target.psi1), complex(target.psi2)
    nrm = np.sqrt(abs(a) ** 2 + abs(b) ** 2)
    a, b = a / nrm, b / nrm
    rot = np.array([[a, -np.conj(b)], [b, np.conj(a)]])
    spin = ensemble.spinors() @ rot.T
    members = tuple(MeanFieldState(p[0], p[1]) for p in spin)
    return Ensemble(members=members, master_seed=ensemble.master_seed,
                    member_seeds=ensemble.member_seeds)


# ------------------------------------------------------ ensemble propagation

@dataclass(frozen=True)
class EnsembleMoments:
    """Per-time ensemble statistics over the surviving members."""

    t: np.ndarray
    mean_L: np.ndarray        # (n, 3): N * mean Bloch vector
    spread_L: np.ndarray      # (n, 3): N * member standard deviation
    spdm: np.ndarray          # (n, 2, 2): mean |psi><psi|, trace 1
    n_members: int
    n_failed: int


@register_jitable
def _gpe_batch_rhs(t, y, dy, rp, rv1, rv2, w1, w2):
    # interleaved member spinors: y[2k], y[2k+1] belong to member k
    J = rp[0]
    g = rp[1]
    eps = rp[2] * t
    for k in range(0, y.shape[0], 2):
        p1 = y[k]
        p2 = y[k + 1]
        n1 = p1.real * p1.real + p1.imag * p1.imag
        n2 = p2.real * p2.real + p2.imag * p2.imag
        dy[k] = -1j * ((-eps + g * n1) * p1 - J * p2)
        dy[k + 1] = -1j * ((eps + g * n2) * p2 - J * p1)


@njit(cache=True)
def _gpe_batch_solve(t0, t1, y0, rtol, atol, ts, rp, max_steps):
    ysamp = np.empty((ts.size, y0.size), dtype=np.complex128)
    rv = np.zeros(1)
    w1 = np.empty(1, dtype=np.complex128)
    w2 = np.empty(1, dtype=np.complex128)
    status, t, y, na, nr = _dopri5(_gpe_batch_rhs, t0, t1, y0, rtol, atol,
                                   ts, ysamp, rp, rv, rv, w1, w2, max_steps)
    return status, t, y, ysamp, na, nr


def _member_samples(y0, protocol, ts, rtol):
    """Propagate one member; returns (s, rho, final) or None on failure."""
    rp = np.array([protocol.J, protocol.g, protocol.alpha])
    status, _, yf, ysamp, _, _ = _gpe_solve(
        protocol.t_start, protocol.t_end, np.asarray(y0, np.complex128),
        rtol, rtol * 1e-2, ts, rp, MAX_STEPS)
    if status != 0:
        return None
    s, rho = _bloch_and_rho(ysamp[:, 0:1], ysamp[:, 1:2])
    return s[:, 0], rho[:, 0], (yf[0], yf[1])


def _bloch_and_rho(p1, p2):
    """(n, m) member amplitudes -> Bloch (n, m, 3) and rho (n, m, 2, 2)."""
    n1 = np.abs(p1) ** 2
    n2 = np.abs(p2) ** 2
    cross = np.conj(p1) * p2
    nrm = n1 + n2                            # integrator drift only
    s = np.stack([cross.real, -cross.imag, 0.5 * (n2 - n1)], axis=2)
    s /= nrm[:, :, None]
    rho = np.empty(p1.shape + (2, 2), dtype=np.complex128)
    rho[..., 0, 0] = n1 / nrm
    rho[..., 1, 1] = n2 / nrm
    rho[..., 0, 1] = cross / nrm
    rho[..., 1, 0] = np.conj(cross) / nrm
    return s, rho


def _chunk_sums(args):
    """One fixed slice of members, integrated as a single interleaved
    system; a failing batch falls back to per-member runs so only the
    culprit is dropped."""
    spinors, protocol, ts, rtol = args
    n = ts.size
    m = len(spinors)
    out = {"s": np.zeros((n, 3)), "ss": np.zeros((n, 3)),
           "rho": np.zeros((n, 2, 2), dtype=np.complex128),
           "count": 0, "failed": 0, "finals": [None] * m}
    nrm2 = np.abs(spinors[:, 0]) ** 2 + np.abs(spinors[:, 1]) ** 2
    good = [i for i in range(m)
            if np.isfinite(nrm2[i]) and abs(nrm2[i] - 1.0) <= 1e-8]
    if good:
        rp = np.array([protocol.J, protocol.g, protocol.alpha])
        y0 = np.ascontiguousarray(spinors[good].reshape(-1))
        status, _, yf, ysamp, _, _ = _gpe_batch_solve(
            protocol.t_start, protocol.t_end, y0, rtol,
            rtol * 1e-2, ts, rp, MAX_STEPS)
        if status == 0:
            psi = ysamp.reshape(n, len(good), 2)
            s, rho = _bloch_and_rho(psi[:, :, 0], psi[:, :, 1])
            out["s"] = s.sum(axis=1)
            out["ss"] = (s * s).sum(axis=1)
            out["rho"] = rho.sum(axis=1)
            out["count"] = len(good)
            for j, i in enumerate(good):
                out["finals"][i] = (yf[2 * j], yf[2 * j + 1])
        else:
            for i in good:
                got = _member_samples(spinors[i], protocol, ts, rtol)
                if got is None:
                    continue
                s, rho, fin = got
                out["s"] += s
                out["ss"] += s * s
                out["rho"] += rho
                out["count"] += 1
                out["finals"][i] = fin
    out["failed"] = m - out["count"]
    return out


def _collect(spinors, protocol, ts, n_chunks, workers, rtol):
    """Fixed-partition member reduction, order-stable under any workers."""
    M = len(spinors)
    n_chunks = min(n_chunks, M)
    bounds = [M * i // n_chunks for i in range(n_chunks + 1)]
    jobs = [(spinors[bounds[i]:bounds[i + 1]], protocol, ts, rtol)
            for i in range(n_chunks)]
    if workers > 1:
        import multiprocessing
        with multiprocessing.get_context("fork").Pool(workers) as pool:
            return pool.map(_chunk_sums, jobs)
    return [_chunk_sums(j) for j in jobs]


def propagate_ensemble(ensemble, protocol, sample_times=None, workers=1,
                       member_rtol=1e-8):
    """Evolve every member through the sweep window.

    Returns (evolved Ensemble, EnsembleMoments).  Members whose
    integration fails are dropped from both and counted in n_failed.
    member_rtol steers the per-member stepper; the default keeps the
    norm drift of each member under the conservation budget while staying
    far below the sampling noise of any realistic ensemble.
    """
    ts = (np.linspace(protocol.t_start, protocol.t_end, 257)
          if sample_times is None else np.asarray(sample_times, float))
    chunks = _collect(ensemble.spinors(), protocol, ts, _MOMENT_CHUNKS,
                      workers, member_rtol)
    count = sum(c["count"] for c in chunks)
    failed = sum(c["failed"] for c in chunks)
    if count == 0:
        raise RuntimeError(f"all {len(ensemble)} members failed to propagate")
    sum_s = sum(c["s"] for c in chunks)
    sum_ss = sum(c["ss"] for c in chunks)
    sum_rho = sum(c["rho"] for c in chunks)
    mean_s = sum_s / count
    var_s = np.maximum(sum_ss / count - mean_s ** 2, 0.0)
    N = protocol.N
    moments = EnsembleMoments(t=ts, mean_L=N * mean_s,
                              spread_L=N * np.sqrt(var_s),
                              spdm=sum_rho / count, n_members=count,
                              n_failed=failed)
    finals, seeds = [], []
    i = 0
    for c in chunks:
        for fin in c["finals"]:
            if fin is not None:
                finals.append(MeanFieldState(fin[0], fin[1]))
                seeds.append(ensemble.member_seeds[i])
            i += 1
    evolved = Ensemble(members=tuple(finals),
                       master_seed=ensemble.master_seed,
                       member_seeds=tuple(seeds))
    return evolved, moments


def number_squeezing_from_moments(moments, N):
    """Classical estimate of the number-difference squeezing over time.

    Plain ensemble variance against the coherent reference <n1><n2>/N;
    classical spreading cannot shrink below the sampling width, so this
    sits above the exact value wherever the state squeezes.  Times where
    a mode empties are marked NaN.
    """
    var = (moments.spread_L[:, 2]) ** 2
    n1 = 0.5 * N - moments.mean_L[:, 2]
    n2 = 0.5 * N + moments.mean_L[:, 2]
    ref = n1 * n2 / N
    out = np.full(var.shape, np.nan)
    good = ref > N * 1e-12
    out[good] = var[good] / ref[good]
    return out


# -------------------------------------------------------- ensemble survival

@dataclass(frozen=True)
class EnsembleSurvival:
    probability: float
    stderr: float
    n_members: int
    n_failed: int


def _projected_survival(protocol, ts, s_hat, s0_hat):
    """Branch survival of a reconstructed mean Bloch path, normalized by
    the starting-branch load exactly as the many-particle estimator."""
    pop = windows.adiabatic_survival(ts, s_hat[:, 0], s_hat[:, 2],
                                     protocol.J, protocol.g, protocol.alpha,
                                     protocol.initial_mode)
    sx0, sz0 = s0_hat[0], s0_hat[2]
    if protocol.J == 0.0:
        p0 = 0.5 - sz0 if protocol.initial_mode == 1 else 0.5 + sz0
    else:
        e0 = protocol.epsilon(protocol.t_start) + protocol.g * sz0
        u = windows.branch_slope(e0, protocol.J)
        lower = (((0.5 - sz0) + u * u * (0.5 + sz0) + 2.0 * u * sx0)
                 / (1.0 + u * u))
        p0 = (lower if windows.mode_connected_branch_is_lower(
            protocol.initial_mode, e0) else 1.0 - lower)
    if not p0 > 0.5:
        raise ValueError(
            f"ensemble loads only {p0:.3g} of the starting branch; the "
            "window start does not isolate the initial level")
    return windows.tail_mean(pop) / p0


def plz_ensemble(protocol, n_members=2000, seed=0, workers=1, n_groups=20,
                 member_rtol=1e-8):
    """Sweep survival probability from the trajectory ensemble.

    Members sample the initial Husimi density rotated onto the dressed
    starting branch; the mean Bloch path, rescaled by the (N+2)/N moment
    factor, feeds the same projected tail estimator the single-trajectory
    descriptions use.  The standard error comes from contiguous member
    groups, so it is deterministic for a given seed.
    """
    N = protocol.N
    base = sample_initial_ensemble(N, n_members, seed)
    spin = aligned_ensemble(base, dressed_initial_state(protocol)).spinors()
    ts = windows.tail_times(protocol)
    n_groups = min(n_groups, n_members)
    chunks = _collect(spin, protocol, ts, n_groups, workers, member_rtol)
    scale = (N + 2.0) / N

    # initial-sample sums per chunk, same partition as the propagation
    bounds = [n_members * i // len(chunks) for i in range(len(chunks) + 1)]
    p1, p2 = spin[:, 0], spin[:, 1]
    s0 = np.stack([(np.conj(p1) * p2).real, -(np.conj(p1) * p2).imag,
                   0.5 * (np.abs(p2) ** 2 - np.abs(p1) ** 2)], axis=1)

    grand_s = sum(c["s"] for c in chunks)
    grand_n = sum(c["count"] for c in chunks)
    failed = sum(c["failed"] for c in chunks)
    if grand_n == 0:
        raise RuntimeError(f"all {n_members} members failed to propagate")
    P = _projected_survival(protocol, ts, scale * grand_s / grand_n,
                            scale * s0.mean(axis=0))
    per_group = []
    for i, c in enumerate(chunks):
        if c["count"] == 0:
            continue
        ok = [j for j in range(bounds[i], bounds[i + 1])
              if c["finals"][j - bounds[i]] is not None]
        per_group.append(_projected_survival(
            protocol, ts, scale * c["s"] / c["count"],
            scale * s0[ok].mean(axis=0)))
    if len(per_group) > 1:
        stderr = float(np.std(per_group, ddof=1) / np.sqrt(len(per_group)))
    else:
        stderr = float("nan")
    return EnsembleSurvival(probability=float(min(max(P, 0.0), 1.0)),
                            stderr=stderr, n_members=grand_n,
                            n_failed=failed)
