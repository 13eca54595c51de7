"""Acceptance suite: twelve end-to-end checks, one test per criterion.

Each test states its tolerance inline and asserts its wall-clock budget;
pytest -v therefore prints one pass/fail line per criterion.  Conservation
checks run inside every criterion that integrates anything in time; they
assert immediately and append to a module ledger that the final criterion
audits for coverage.
"""
import math
import time

import numpy as np
import pytest
from scipy.linalg import eigh_tridiagonal

from lzsweep import dynamics, fock, meanfield, opensystem, phasespace
from lzsweep import spectra, windows
from lzsweep.protocol import SweepProtocol

# (criterion, check, measured, bound); "min eigenvalue" rows are lower
# bounds, all others upper bounds
_LEDGER = []


def _span(protocol):
    return protocol.t_end - protocol.t_start


def _closed_run(criterion, record, duration):
    rate = record.norm_drift / duration
    _LEDGER.append((criterion, "norm drift/unit", rate, 1e-8))
    assert rate < 1e-8, f"{criterion}: norm drift {rate:.2e}/unit"


def _gpe_run(criterion, trajectory, duration):
    rate = trajectory.norm_drift / duration
    _LEDGER.append((criterion, "mean-field norm drift/unit", rate, 1e-8))
    assert rate < 1e-8, f"{criterion}: mean-field norm drift {rate:.2e}/unit"


def _member_run(criterion, ensemble, duration):
    norms = np.sum(np.abs(ensemble.spinors()) ** 2, axis=1)
    rate = float(np.max(np.abs(norms - 1.0))) / duration
    _LEDGER.append((criterion, "member norm drift/unit", rate, 1e-8))
    assert rate < 1e-8, f"{criterion}: worst member drift {rate:.2e}/unit"


def _open_run(criterion, record, duration):
    rate = record.trace_drift / duration
    _LEDGER.append((criterion, "trace drift/unit", rate, 1e-8))
    _LEDGER.append((criterion, "min eigenvalue", record.min_eig, -1e-8))
    assert rate < 1e-8, f"{criterion}: trace drift {rate:.2e}/unit"
    assert record.min_eig >= -1e-8, f"{criterion}: min eig {record.min_eig:.2e}"


def _bloch_run(criterion, trajectory):
    # the damped Bloch vector is the single-particle density matrix in
    # disguise: |s| <= 1/2 is its positivity, tr = 1 holds by construction
    excess = float(np.max(np.linalg.norm(trajectory.s, axis=1)) - 0.5)
    _LEDGER.append((criterion, "bloch radius excess", excess, 1e-8))
    assert excess < 1e-8, f"{criterion}: Bloch radius excess {excess:.2e}"


@pytest.fixture(scope="module", autouse=True)
def _warm_kernels():
    # first calls trigger jit compilation; pay that outside the budgets
    tiny = SweepProtocol(J=1.0, g=0.5, N=2, alpha=10.0)
    dynamics.plz_many_particle(tiny, certify=False)
    meanfield.plz_mean_field(tiny, certify=False)
    meanfield.plz_mean_field(tiny, gamma=0.1, certify=False)
    opensystem.plz_master(tiny, 0.1, certify=False)
    ens = phasespace.sample_initial_ensemble(2, 4, seed=0, mode=1)
    phasespace.propagate_ensemble(ens, tiny, sample_times=[tiny.t_end])


def test_criterion_01_linear_sweep_closed_form():
    t0 = time.perf_counter()
    lines = []
    for alpha in (0.5, 1.0, 2.0, 5.0, 10.0):
        p = SweepProtocol(J=1.0, g=0.0, N=50, alpha=alpha)
        got = dynamics.plz_many_particle(p)
        want = math.exp(-math.pi / alpha)
        lines.append(f"alpha={alpha}: P={got:.6f} closed-form={want:.6f}")
        assert abs(got - want) < 0.02, lines[-1]
        if alpha == 10.0:
            assert got == pytest.approx(0.7304, rel=0.01), lines[-1]
    p = SweepProtocol(J=1.0, g=0.0, N=50, alpha=0.5)
    record, _ = dynamics.propagate_schrodinger(
        dynamics.dressed_initial_state(p), p)
    _closed_run("criterion 1", record, _span(p))
    elapsed = time.perf_counter() - t0
    print("\n" + "\n".join(lines) + f"\nelapsed {elapsed:.1f}s")
    assert elapsed < 60.0


def test_criterion_02_mean_field_tracks_exact_sweeps():
    t0 = time.perf_counter()
    worst = (-1.0, None)
    for g in (1.0, 5.0):
        for alpha in (0.1, 1.0, 10.0):
            for mode in (1, 2):
                p = SweepProtocol(J=1.0, g=g, N=50, alpha=alpha,
                                  initial_mode=mode)
                diff = abs(dynamics.plz_many_particle(p)
                           - meanfield.plz_mean_field(p))
                assert diff < 0.05, (f"g={g} alpha={alpha} mode={mode}: "
                                     f"|P_exact - P_mf| = {diff:.4f}")
                if diff > worst[0]:
                    worst = (diff, p)
    p = worst[1]
    record, _ = dynamics.propagate_schrodinger(
        dynamics.dressed_initial_state(p), p)
    _closed_run("criterion 2", record, _span(p))
    trajectory, _ = meanfield.propagate_gpe(
        meanfield.dressed_initial_state(p), p)
    _gpe_run("criterion 2", trajectory, _span(p))
    elapsed = time.perf_counter() - t0
    print(f"\nworst cell |P_exact - P_mf| = {worst[0]:.4f} at g={p.g} "
          f"alpha={p.alpha} mode={p.initial_mode}; elapsed {elapsed:.1f}s")
    assert elapsed < 300.0


def test_criterion_03_self_trapping_threshold():
    t0 = time.perf_counter()

    def bent(g):
        return len(spectra.mean_field_stationary_states(0.0, 1.0, g).states) >= 3

    assert not bent(1.999)
    assert bent(2.001)
    lo, hi = 1.0, 4.0
    while hi - lo > 2e-4:
        mid = 0.5 * (lo + hi)
        if bent(mid):
            hi = mid
        else:
            lo = mid
    g_star = 0.5 * (lo + hi)
    assert abs(g_star - 2.0) < 1e-3, f"threshold located at g* = {g_star:.6f}"
    assert spectra.swallow_tail_boundary(1.0, 2.001) > 0.0
    with pytest.raises(ValueError):
        spectra.swallow_tail_boundary(1.0, 1.999)
    elapsed = time.perf_counter() - t0
    print(f"\ng* = {g_star:.6f}; elapsed {elapsed:.1f}s")
    assert elapsed < 60.0


def test_criterion_04_interaction_blocks_adiabaticity():
    t0 = time.perf_counter()
    slow = SweepProtocol(J=1.0, g=5.0, N=50, alpha=0.01, initial_mode=1)
    p_slow = meanfield.plz_mean_field(slow)
    p_half = meanfield.plz_mean_field(
        SweepProtocol(J=1.0, g=5.0, N=50, alpha=0.005, initial_mode=1))
    assert p_slow > 0.1, f"plateau P = {p_slow:.4f}"
    change = abs(p_half - p_slow) / p_slow
    assert change < 0.10, (f"halving alpha moved the plateau by "
                           f"{100 * change:.1f}%")
    p_linear = meanfield.plz_mean_field(
        SweepProtocol(J=1.0, g=0.0, N=50, alpha=0.01, initial_mode=1))
    assert p_linear < 1e-10, f"g=0 at alpha=0.01 gave P = {p_linear:.2e}"
    trajectory, _ = meanfield.propagate_gpe(
        meanfield.dressed_initial_state(slow), slow)
    _gpe_run("criterion 4", trajectory, _span(slow))
    elapsed = time.perf_counter() - t0
    print(f"\nP(0.01)={p_slow:.4f} P(0.005)={p_half:.4f} "
          f"change={100 * change:.2f}% linear={p_linear:.1e}; "
          f"elapsed {elapsed:.1f}s")
    assert elapsed < 120.0


def test_criterion_05_gap_closes_exponentially():
    t0 = time.perf_counter()
    fit = spectra.min_gap_scaling(1.0, 5.0, (10, 15, 20, 25, 30, 35, 40))
    assert not fit.degenerate.any(), f"unresolved gaps at N={fit.N[fit.degenerate]}"
    assert fit.eta > 0.0, f"eta = {fit.eta:.4f}"
    assert fit.r_squared >= 0.95, f"R^2 = {fit.r_squared:.4f}"
    elapsed = time.perf_counter() - t0
    print(f"\neta = {fit.eta:.4f}, prefactor = {fit.prefactor:.3f}, "
          f"R^2 = {fit.r_squared:.4f}; elapsed {elapsed:.1f}s")
    assert elapsed < 300.0


def test_criterion_06_phase_noise_drives_half_occupation():
    t0 = time.perf_counter()
    plateau = SweepProtocol(J=1.0, g=-1.0, N=40, alpha=0.01)
    p_master = opensystem.plz_master(plateau, 0.1)
    p_bloch = meanfield.plz_mean_field(plateau, gamma=0.1)
    assert abs(p_master - 0.5) < 0.05, f"master P = {p_master:.4f}"
    assert abs(p_bloch - 0.5) < 0.05, f"damped-Bloch P = {p_bloch:.4f}"
    fast = SweepProtocol(J=1.0, g=-1.0, N=40, alpha=10.0)
    p_noisy = opensystem.plz_master(fast, 0.1)
    p_clean = opensystem.plz_master(fast, 0.0)
    assert abs(p_noisy - p_clean) < 0.02, (
        f"alpha=10: P(0.1) = {p_noisy:.4f}, P(0) = {p_clean:.4f}")
    psi0 = dynamics.dressed_initial_state(plateau)
    record, _ = opensystem.propagate_master(
        np.outer(psi0, psi0.conj()), plateau, 0.1,
        windows.tail_times(plateau))
    _open_run("criterion 6", record, _span(plateau))
    trajectory, _ = meanfield.propagate_bloch_noisy(
        meanfield.dressed_initial_state(plateau), plateau, 0.1,
        windows.tail_times(plateau))
    _bloch_run("criterion 6", trajectory)
    elapsed = time.perf_counter() - t0
    print(f"\nmaster={p_master:.4f} bloch={p_bloch:.4f} "
          f"fast pair=({p_noisy:.4f}, {p_clean:.4f}); elapsed {elapsed:.1f}s")
    assert elapsed < 600.0


def test_criterion_07_trajectory_ensemble_reconciles():
    t0 = time.perf_counter()
    # fixed window: wide enough that another doubling moves P by < 2e-3
    # at every N here, and cheap enough to hold 2000 members in budget
    lines = []
    for N in (10, 20, 40):
        p = SweepProtocol(J=1.0, g=-5.0, N=N, alpha=0.01,
                          initial_mode=2).with_window(-1000.0, 1000.0)
        exact = dynamics.plz_many_particle(p, certify=False)
        sv = phasespace.plz_ensemble(p, n_members=2000, seed=0,
                                     member_rtol=2e-9)
        assert sv.n_failed == 0
        diff = abs(exact - sv.probability)
        lines.append(f"N={N}: exact={exact:.5f} "
                     f"ensemble={sv.probability:.5f}+-{sv.stderr:.5f} "
                     f"|diff|={diff:.4f}")
        if N >= 20:
            assert diff < 0.05, lines[-1]
    p = SweepProtocol(J=1.0, g=-5.0, N=40, alpha=0.01,
                      initial_mode=2).with_window(-1000.0, 1000.0)
    record, _ = dynamics.propagate_schrodinger(
        dynamics.dressed_initial_state(p), p)
    _closed_run("criterion 7", record, _span(p))
    ens = phasespace.sample_initial_ensemble(40, 100, seed=0, mode=2)
    evolved, moments = phasespace.propagate_ensemble(
        ens, p, sample_times=[p.t_end], member_rtol=2e-9)
    assert moments.n_failed == 0
    _member_run("criterion 7", evolved, _span(p))
    elapsed = time.perf_counter() - t0
    print("\n" + "\n".join(lines) + f"\nelapsed {elapsed:.1f}s")
    assert elapsed < 600.0


def test_criterion_08_husimi_integral_and_moments():
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    for N in (5, 20, 50):
        target = 4.0 * np.pi / (N + 1)
        for _ in range(10):
            state = rng.normal(size=N + 1) + 1j * rng.normal(size=N + 1)
            state /= np.linalg.norm(state)
            grid = phasespace.husimi(state)
            assert abs(grid.integral - target) < 1e-6, (
                f"N={N}: integral {grid.integral:.8f} vs {target:.8f}")
            got = phasespace.reconstruct_bloch_from_husimi(grid)
            want = fock.expectation_L(state)
            assert np.max(np.abs(got - want)) < 1e-6, f"N={N}: {got} vs {want}"
    elapsed = time.perf_counter() - t0
    print(f"\nelapsed {elapsed:.1f}s")
    assert elapsed < 60.0


def test_criterion_09_sweep_generates_number_squeezing():
    t0 = time.perf_counter()
    slow = SweepProtocol(J=1.0, g=-5.0, N=200, alpha=0.1, initial_mode=2)
    xi_exact, record = dynamics.sweep_number_squeezing(slow)
    frozen = windows.freezeout_window(slow)
    _closed_run("criterion 9", record, _span(frozen))

    ens = phasespace.sample_initial_ensemble(200, 400, seed=9, mode=2)
    ts = windows.tail_times(frozen)
    evolved, moments = phasespace.propagate_ensemble(
        ens, frozen, sample_times=ts, member_rtol=1e-10)
    assert moments.n_failed == 0
    _member_run("criterion 9", evolved, _span(frozen))
    xi_ensemble = float(windows.tail_mean(
        phasespace.number_squeezing_from_moments(moments, 200)))

    fast = SweepProtocol(J=1.0, g=-5.0, N=200, alpha=10.0, initial_mode=2)
    xi_fast, _ = dynamics.sweep_number_squeezing(fast)

    elapsed = time.perf_counter() - t0
    print(f"\nexact xi_N^2 = {xi_exact:.4f}, ensemble xi_N^2 = "
          f"{xi_ensemble:.4f}, alpha=10 xi_N^2 = {xi_fast:.4f}; "
          f"elapsed {elapsed:.1f}s")
    assert xi_exact < 1.0, f"exact xi_N^2 = {xi_exact:.4f}"
    assert xi_ensemble < 1.0, f"ensemble xi_N^2 = {xi_ensemble:.4f}"
    assert xi_ensemble > xi_exact, (
        f"ensemble ({xi_ensemble:.4f}) should overestimate the variance "
        f"ratio relative to exact ({xi_exact:.4f})")
    assert elapsed < 600.0
    assert abs(xi_fast - 1.0) <= 0.1, (
        f"settled readout gives xi_N^2 = {xi_fast:.4f} at alpha = 10, "
        f"|xi - 1| = {abs(xi_fast - 1.0):.3f} > 0.1.  The sudden limit is "
        "approached, but slower than this bound asks: the same readout "
        "gives 0.564 at alpha = 5, 0.726 at 10, 0.863 at 20, 0.957 at 50, "
        "0.984 at 100.  Reading the endpoint snapshot instead gives 0.368 "
        "and dropping the settling extension gives 0.770, so no readout "
        "of this sweep reaches 0.9 at alpha = 10.")


def test_criterion_10_revival_time_scales_linearly():
    t0 = time.perf_counter()
    sizes = np.array([20, 40, 80], dtype=float)
    revivals = []
    for N in (20, 40, 80):
        base = SweepProtocol(J=1.0, g=-5.0, N=N, alpha=0.1, initial_mode=2)
        scan = dynamics.revival_time(base.with_window(base.t_start, 12.0))
        assert not scan.degenerate
        assert np.isfinite(scan.time), f"N={N}: no revival inside the horizon"
        revivals.append(scan.time)
    revivals = np.array(revivals)
    slope, intercept = np.polyfit(sizes, revivals, 1)
    predicted = slope * sizes + intercept
    ss_res = float(np.sum((revivals - predicted) ** 2))
    ss_tot = float(np.sum((revivals - revivals.mean()) ** 2))
    r_squared = 1.0 - ss_res / ss_tot
    assert slope > 0.0, f"slope = {slope:.4f}"
    assert r_squared >= 0.9, (f"R^2 = {r_squared:.4f} for revivals "
                              f"{np.round(revivals, 3)}")
    base = SweepProtocol(J=1.0, g=-5.0, N=80, alpha=0.1, initial_mode=2)
    horizon = 4.0 * 2.0 * np.pi / abs(base.U)
    p = base.with_window(base.t_start, 12.0 + horizon)
    record, _ = dynamics.propagate_schrodinger(
        dynamics.dressed_initial_state(p), p)
    _closed_run("criterion 10", record, _span(p))
    elapsed = time.perf_counter() - t0
    print(f"\nrevivals = {np.round(revivals, 3)}, slope = {slope:.3f}, "
          f"R^2 = {r_squared:.4f}; elapsed {elapsed:.1f}s")
    assert elapsed < 900.0


# two-point commutator-free fourth-order exponential stepper; each factor
# is a genuine matrix exponential of a weighted average of H at the two
# Gauss nodes, so the oracle shares nothing with the adaptive integrator
_NODE_LO = 0.5 - math.sqrt(3.0) / 6.0
_NODE_HI = 0.5 + math.sqrt(3.0) / 6.0
_WEIGHT_A = 0.25 + math.sqrt(3.0) / 6.0
_WEIGHT_B = 0.25 - math.sqrt(3.0) / 6.0


def _expm_sweep(protocol, state, n_steps):
    psi = np.asarray(state, dtype=np.complex128).copy()
    h = (protocol.t_end - protocol.t_start) / n_steps
    for k in range(n_steps):
        t = protocol.t_start + k * h
        d1, off = fock.hamiltonian_tridiag(protocol, t + _NODE_LO * h)
        d2, _ = fock.hamiltonian_tridiag(protocol, t + _NODE_HI * h)
        for diag in (_WEIGHT_A * d1 + _WEIGHT_B * d2,
                     _WEIGHT_B * d1 + _WEIGHT_A * d2):
            w, v = eigh_tridiagonal(diag, 0.5 * off)
            psi = v @ (np.exp(-1j * h * w) * (v.T @ psi))
    return psi


def _landscape_scan(eps, J, g, n_theta=600, n_phi=600):
    """Stationary points of the energy surface by brute-force grid search.

    Scans e(theta, phi) on the full sphere, collects local minima of the
    finite-difference gradient magnitude, then sharpens each candidate by
    bisecting the energy slope along its meridian.  Returns
    (sx, sz, energy, stability) sorted by (sz, sx).
    """
    thetas = np.linspace(1e-3, np.pi - 1e-3, n_theta)
    phis = np.linspace(0.0, 2.0 * np.pi, n_phi, endpoint=False)
    T, P = np.meshgrid(thetas, phis, indexing="ij")

    def energy(theta, phi):
        return (eps * np.cos(theta) - J * np.sin(theta) * np.cos(phi)
                + 0.25 * g * np.cos(theta) ** 2)

    surface = energy(T, P)
    e_theta = np.gradient(surface, thetas[1] - thetas[0], axis=0)
    e_phi = ((np.roll(surface, -1, axis=1) - np.roll(surface, 1, axis=1))
             / (2.0 * (phis[1] - phis[0])))
    grad = np.sqrt(e_theta ** 2 + (e_phi / np.sin(T)) ** 2)
    found = []
    for i in range(1, n_theta - 1):
        for j in range(n_phi):
            jm, jp = (j - 1) % n_phi, (j + 1) % n_phi
            patch = grad[i - 1:i + 2, [jm, j, jp]]
            if grad[i, j] > patch.min() or grad[i, j] > 0.05 * grad.max():
                continue
            meridian = 0.0 if np.cos(phis[j]) > 0 else np.pi

            def slope(theta, h=1e-6):
                return (energy(theta + h, meridian)
                        - energy(theta - h, meridian)) / (2.0 * h)

            lo = thetas[max(i - 2, 0)]
            hi = thetas[min(i + 2, n_theta - 1)]
            if slope(lo) * slope(hi) > 0:
                continue
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if slope(lo) * slope(mid) <= 0:
                    hi = mid
                else:
                    lo = mid
            root = 0.5 * (lo + hi)
            h = 1e-4
            curv_t = (energy(root + h, meridian) - 2.0 * energy(root, meridian)
                      + energy(root - h, meridian)) / h ** 2
            curv_p = (energy(root, meridian + h) - 2.0 * energy(root, meridian)
                      + energy(root, meridian - h)) / h ** 2
            kind = "hyperbolic" if curv_t * curv_p < 0 else "elliptic"
            sx = 0.5 * np.sin(root) * np.cos(meridian)
            found.append((sx, 0.5 * np.cos(root), energy(root, meridian), kind))
    unique = []
    for row in sorted(found, key=lambda r: (r[1], r[0])):
        if not any(abs(row[0] - u[0]) < 1e-6 and abs(row[1] - u[1]) < 1e-6
                   for u in unique):
            unique.append(row)
    return unique


def test_criterion_11_independent_oracles_agree():
    t0 = time.perf_counter()
    rng = np.random.default_rng(77)
    for N, g in ((2, 1.0), (3, -2.0), (4, 3.0)):
        p = SweepProtocol(J=1.0, g=g, N=N, alpha=1.0,
                          tol=1e-12).with_window(-8.0, 8.0)
        psi0 = rng.normal(size=N + 1) + 1j * rng.normal(size=N + 1)
        psi0 /= np.linalg.norm(psi0)
        record, psi = dynamics.propagate_schrodinger(psi0, p)
        _closed_run(f"criterion 11 (N={N})", record, _span(p))
        coarse = _expm_sweep(p, psi0, 2000)
        fine = _expm_sweep(p, psi0, 4000)
        self_err = float(np.abs(coarse - fine).max())
        assert self_err < 5e-10, f"N={N}: oracle self-error {self_err:.2e}"
        diff = float(np.abs(psi - fine).max())
        assert diff < 1e-9, f"N={N}: adaptive vs exponential {diff:.2e}"

    for N in (2, 3, 4):
        raw = rng.normal(size=(N + 1, N + 1)) + 1j * rng.normal(size=(N + 1, N + 1))
        rho = raw @ raw.conj().T
        rho /= np.trace(rho).real
        lz = np.diag(fock.lz_diag(N))
        brute = 2.0 * 0.37 * (lz @ rho @ lz
                              - 0.5 * (lz @ lz @ rho + rho @ lz @ lz))
        resid = float(np.abs(opensystem.dissipator_apply(rho, 0.37)
                             - brute).max())
        _LEDGER.append((f"criterion 11 (N={N})", "dissipator identity",
                        resid, 1e-12))
        assert resid < 1e-12, f"N={N}: dissipator residual {resid:.2e}"

    for eps, g in ((0.0, 5.0), (0.3, 5.0), (0.0, 1.0), (2.0, -5.0)):
        scan = _landscape_scan(eps, 1.0, g)
        states = list(spectra.mean_field_stationary_states(eps, 1.0, g).states)
        assert len(scan) == len(states), (
            f"eps={eps} g={g}: scan found {len(scan)}, solver {len(states)}")
        pairs = []
        pool = list(scan)
        for fp in states:
            row = min(pool, key=lambda r: abs(r[0] - fp.s[0])
                      + abs(r[1] - fp.s[2]))
            pool.remove(row)
            pairs.append((row, fp))
            assert abs(row[0] - fp.s[0]) < 1e-8, f"eps={eps} g={g}: sx"
            assert abs(row[1] - fp.s[2]) < 1e-8, f"eps={eps} g={g}: sz"
            assert row[3] == fp.stability, f"eps={eps} g={g}: stability"
        # energies agree up to a shared constant; compare spacings
        base_scan, base_solver = pairs[0][0][2], pairs[0][1].energy
        for row, fp in pairs[1:]:
            assert abs((row[2] - base_scan)
                       - (fp.energy - base_solver)) < 1e-8, (
                f"eps={eps} g={g}: energy spacing")
    elapsed = time.perf_counter() - t0
    print(f"\nelapsed {elapsed:.1f}s")
    assert elapsed < 60.0


def test_criterion_12_conservation_and_algebra():
    if not _LEDGER:
        pytest.skip("conservation records accumulate while the other "
                    "criteria run; run the whole file")
    t0 = time.perf_counter()
    rng = np.random.default_rng(12)
    ops = (fock._apply_lx, fock._apply_ly, fock._apply_lz)
    for N in (4, 40, 50, 200):
        for _ in range(2):
            v = rng.normal(size=N + 1) + 1j * rng.normal(size=N + 1)
            v /= np.linalg.norm(v)
            comm_resid = 0.0
            for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
                resid = ops[a](ops[b](v)) - ops[b](ops[a](v)) - 1j * ops[c](v)
                comm_resid = max(comm_resid, float(np.abs(resid).max()))
            assert comm_resid < 1e-12 * N, f"N={N}: commutator {comm_resid:.2e}"
            casimir = sum(op(op(v)) for op in ops)
            cas_resid = float(np.abs(
                casimir - (N / 2.0) * (N / 2.0 + 1.0) * v).max())
            assert cas_resid < 1e-12 * N * N, f"N={N}: Casimir {cas_resid:.2e}"
        _LEDGER.append((f"criterion 12 (N={N})", "commutator residual",
                        comm_resid, 1e-12 * N))
        _LEDGER.append((f"criterion 12 (N={N})", "Casimir residual",
                        cas_resid, 1e-12 * N * N))

    covered = {row[0].split(" (")[0] for row in _LEDGER}
    for name in ("criterion 1", "criterion 2", "criterion 4", "criterion 6",
                 "criterion 7", "criterion 9", "criterion 10", "criterion 11"):
        assert name in covered, f"{name} registered no conservation audit"

    print()
    for criterion, check, value, bound in _LEDGER:
        tag = ">=" if check == "min eigenvalue" else "<"
        print(f"  {criterion:<22} {check:<28} {value:+.3e} {tag} {bound:+.0e}")
        if check == "min eigenvalue":
            assert value >= bound
        else:
            assert value < bound
    elapsed = time.perf_counter() - t0
    print(f"elapsed {elapsed:.1f}s")
    assert elapsed < 60.0
