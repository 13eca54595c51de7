"""Static structure of the sweep problem at fixed offset.

Many-body eigenvalue curves, the stationary states of the mean-field
flow with their stability, the swallow-tail interval where four of them
coexist, and the exponential scaling of the quasi-degenerate splittings
inside that interval.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal, eigvalsh_tridiagonal
from scipy.optimize import minimize_scalar

from . import fock
from .meanfield import MeanFieldState, mean_field_energy

# splittings below this are indistinguishable from an exact degeneracy
DEGENERATE_GAP = 1e-13


def _tridiag_at_offset(protocol, eps):
    m = fock.lz_diag(protocol.N)
    diag = 2.0 * eps * m + protocol.U * m * m
    off = -2.0 * protocol.J * fock.lx_offdiag(protocol.N)
    return diag, off


def many_body_spectrum(protocol, eps_grid):
    """Eigenvalues of H(eps) for each offset, ascending, number convention.

    Returns an array of shape (len(eps_grid), N+1); the constant separating
    the collective-spin form from the number-operator form is restored.
    """
    eps_grid = np.atleast_1d(np.asarray(eps_grid, dtype=float))
    if not np.all(np.isfinite(eps_grid)):
        raise ValueError("offset grid must be finite")
    out = np.empty((eps_grid.size, protocol.N + 1))
    shift = fock.energy_offset(protocol)
    for i, eps in enumerate(eps_grid):
        diag, off = _tridiag_at_offset(protocol, eps)
        out[i] = eigvalsh_tridiagonal(diag, off) + shift
    return out


# ------------------------------------------------------- stationary states

@dataclass(frozen=True)
class FixedPoint:
    """One stationary state of the mean-field flow on the Bloch sphere."""

    s: np.ndarray     # (sx, sy, sz), norm 1/2, sy = 0
    energy: float
    stability: str    # "elliptic" or "hyperbolic"


@dataclass(frozen=True)
class StationaryStateSet:
    offset: float
    states: tuple     # FixedPoint entries, sorted by energy then sz

    def __len__(self):
        return len(self.states)

    @property
    def energies(self):
        return np.array([fp.energy for fp in self.states])


def _flow_residual(w, sx, eps, J, g):
    return 2.0 * J * w + 2.0 * (eps + g * w) * sx


def _classify(sx, sz, eps, J, g):
    """Stability from the flow linearized in the tangent plane at s."""
    a = 2.0 * (eps + g * sz)        # dFx/dsy = -a, dFy/dsx = a
    c = 2.0 * J + 2.0 * g * sx      # dFy/dsz
    jac = np.array([[0.0, -a, 0.0],
                    [a, 0.0, c],
                    [0.0, -2.0 * J, 0.0]])
    s = np.array([sx, 0.0, sz])
    e1 = np.array([0.0, 1.0, 0.0])  # sy direction is always tangent here
    e2 = np.cross(s, e1)
    e2 /= np.linalg.norm(e2)
    m = np.array([[e1 @ jac @ e1, e1 @ jac @ e2],
                  [e2 @ jac @ e1, e2 @ jac @ e2]])
    det = float(np.linalg.det(m))
    # area-preserving flow: eigenvalues are +-sqrt(-det)
    if det < -1e-16:
        return "hyperbolic"
    if det < 0.0:
        warnings.warn("marginal fixed point (|Re lambda| < 1e-8); "
                      "tagging elliptic", stacklevel=3)
    return "elliptic"


def mean_field_stationary_states(eps, J, g):
    """All stationary states of the mean-field flow at fixed offset.

    Solves sy = 0, 2 J sz + 2 (eps + g sz) sx = 0 on the sphere |s| = 1/2
    through the quartic in sz, Newton-polishes each root on the constraint
    manifold, and tags stability.  Returns a StationaryStateSet with 2 or 4
    members (3 exactly at the swallow-tail boundary, where a pair merges).
    """
    if not J > 0:
        raise ValueError(f"need J > 0, got {J}")
    scale = max(J, abs(eps), abs(g))
    # g^2 w^4 + 2 eps g w^3 + (eps^2 + J^2 - g^2/4) w^2
    #   - (eps g / 2) w - eps^2/4 = 0
    coeffs = np.array([g * g, 2.0 * eps * g,
                       eps * eps + J * J - 0.25 * g * g,
                       -0.5 * eps * g, -0.25 * eps * eps])
    roots = np.roots(coeffs) if abs(g) > 0 else np.roots(coeffs[2:])
    found = []
    for w0 in roots:
        if abs(w0.imag) > 1e-6:
            continue
        w0 = float(np.clip(w0.real, -0.5, 0.5))
        for sign in (1.0, -1.0):
            w = w0
            # Newton on the residual along the circle sx = sign*sqrt(1/4-w^2)
            ok = False
            for _ in range(60):
                sx = sign * np.sqrt(max(0.25 - w * w, 0.0))
                r = _flow_residual(w, sx, eps, J, g)
                if abs(r) < 1e-11 * scale:
                    ok = True
                    break
                dsx = 0.0 if sx == 0.0 else -w / sx
                dr = 2.0 * J + 2.0 * g * sx + 2.0 * (eps + g * w) * dsx
                if dr == 0.0:
                    break
                step = r / dr
                w = float(np.clip(w - step, -0.5, 0.5))
            if not ok:
                continue
            sx = sign * np.sqrt(max(0.25 - w * w, 0.0))
            if any(abs(w - p[0]) < 1e-8 and abs(sx - p[1]) < 1e-8
                   for p in found):
                continue
            found.append((w, sx))
    states = []
    for w, sx in found:
        s = np.array([sx, 0.0, w])
        E = mean_field_energy(MeanFieldState.from_bloch(s), eps, J, g)
        states.append(FixedPoint(s=s, energy=E,
                                 stability=_classify(sx, w, eps, J, g)))
    if len(states) not in (2, 3, 4):
        residuals = [(_flow_residual(p[0], p[1], eps, J, g)) for p in found]
        raise RuntimeError(
            f"stationary-state search found {len(states)} states at "
            f"eps={eps}, J={J}, g={g} (residuals {residuals})")
    states.sort(key=lambda fp: (fp.energy, fp.s[2]))
    return StationaryStateSet(offset=float(eps), states=tuple(states))


def swallow_tail_boundary(J, g):
    """Half-width eps_c of the offset interval holding four stationary states.

    Bisection on the stationary-state count, resolved to 1e-6 * J.  Raises
    ValueError below the g = 2J threshold, where no such interval exists.
    """
    if not J > 0:
        raise ValueError(f"need J > 0, got {J}")
    if abs(g) <= 2.0 * J:
        raise ValueError(
            f"|g| = {abs(g)} <= 2J = {2 * J}: no swallow tail below the "
            "breakdown threshold")

    def inside(eps):
        return len(mean_field_stationary_states(eps, J, abs(g))) >= 3

    if not inside(0.0):
        raise RuntimeError("no bifurcated pair at eps = 0 despite g > 2J")
    lo = 0.0
    hi = (abs(g) ** (2.0 / 3.0) - (2.0 * J) ** (2.0 / 3.0)) ** 1.5 + 0.1 * J
    for _ in range(8):
        if not inside(hi):
            break
        hi *= 2.0
    else:
        raise RuntimeError(f"could not bracket the tail edge above {hi}")
    while hi - lo > 1e-6 * J:
        mid = 0.5 * (lo + hi)
        if inside(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ------------------------------------------------------------- gap scaling

@dataclass(frozen=True)
class GapScalingFit:
    """Minimal quasi-degenerate splittings and their exponential fit.

    delta[i] is the smallest avoided-crossing gap met by the tracked level
    for N[i]; entries with delta < 1e-13 are flagged degenerate and left
    out of the fit of ln(delta/N) = ln(prefactor) - eta * N.
    """

    N: np.ndarray
    delta: np.ndarray
    eta: float
    prefactor: float
    r_squared: float
    degenerate: np.ndarray


def _tracked_min_gap(protocol, eps_c, grid_factor=1.0):
    """Smallest splitting met by the level continuing the initial mode.

    Scans the caustic interval on a grid finer than the crossing spacing
    U/2, follows the eigenvector by overlap, and refines the adjacent-level
    gap around every index handoff.  grid_factor > 1 shrinks the scan step;
    the refined minima must be insensitive to it.
    """
    J, N = protocol.J, protocol.N
    lo = -1.2 * eps_c - 0.5 * J
    hi = 1.2 * eps_c + 0.5 * J
    step = min(abs(protocol.U) / 8.0, (hi - lo) / 400.0) / grid_factor
    grid = np.linspace(lo, hi, int(np.ceil((hi - lo) / step)) + 1)

    def solve(eps):
        return eigh_tridiagonal(*_tridiag_at_offset(protocol, eps))

    def pair_gap(eps, k):
        d, o = _tridiag_at_offset(protocol, eps)
        pair = eigvalsh_tridiagonal(d, o, select="i",
                                    select_range=(k - 1, k))
        return pair[1] - pair[0]

    _, vecs = solve(grid[0])
    pole = 0 if protocol.initial_mode == 1 else N
    k = int(np.argmax(np.abs(vecs[pole])))
    prev = vecs[:, k]
    last = 0  # grid index of the last decisive identification
    gaps = []
    for i in range(1, grid.size):
        vals, vecs = solve(grid[i])
        overlaps = np.abs(prev @ vecs)
        j = int(np.argmax(overlaps))
        if overlaps[j] < 0.75:
            # sitting inside a crossing: the pair is maximally mixed and
            # the continuation is ambiguous, so resolve at the next sample
            continue
        if abs(j - k) > 1:
            raise RuntimeError(
                f"overlap tracking jumped {k} -> {j} at eps = {grid[i]}; "
                "grid too coarse for this N")
        if j != k:
            # handoff: refine the gap between the exchanging pair
            kk = max(j, k)
            a = grid[max(last - 1, 0)]
            b = grid[min(i + 1, grid.size - 1)]
            res = minimize_scalar(pair_gap, args=(kk,), bounds=(a, b),
                                  method="bounded",
                                  options={"xatol": 1e-10 * max(1.0, hi)})
            gaps.append(float(res.fun))
        k = j
        prev = vecs[:, k]
        last = i
    if not gaps:
        raise RuntimeError(
            f"no avoided crossings met for N = {N}; nothing to scale")
    return min(gaps)


def min_gap_scaling(J, g, N_list, initial_mode=1):
    """Exponential law of the deepest tracked splitting across N.

    For each N the level adiabatically connected to initial_mode is
    followed through the caustic and its smallest avoided-crossing gap
    recorded; the non-degenerate entries are fitted to
    delta = prefactor * N * exp(-eta * N).
    """
    N_list = [int(n) for n in N_list]
    if len(N_list) < 3:
        raise ValueError("need at least 3 particle numbers for a scaling fit")
    from .protocol import SweepProtocol
    eps_c = swallow_tail_boundary(J, g)
    delta = np.empty(len(N_list))
    for i, N in enumerate(N_list):
        p = SweepProtocol(J=J, g=abs(g), N=N, alpha=1.0,
                          initial_mode=initial_mode)
        delta[i] = _tracked_min_gap(p, eps_c)
    if np.any(delta <= 0.0):
        raise RuntimeError(f"non-positive splitting in {delta}; the "
                           "tridiagonal spectrum should never degenerate")
    degenerate = delta < DEGENERATE_GAP
    Ns = np.asarray(N_list, dtype=float)
    keep = ~degenerate
    if keep.sum() < 3:
        raise RuntimeError(
            "fewer than 3 splittings above the degeneracy floor "
            f"{DEGENERATE_GAP}; cannot fit a scaling law")
    y = np.log(delta[keep] / Ns[keep])
    slope, intercept = np.polyfit(Ns[keep], y, 1)
    resid = y - (slope * Ns[keep] + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 0.0
    return GapScalingFit(N=np.asarray(N_list), delta=delta,
                         eta=float(-slope), prefactor=float(np.exp(intercept)),
                         r_squared=r2, degenerate=degenerate)
