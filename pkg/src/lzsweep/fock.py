"""Fock-basis building blocks for the two-mode system.

Basis convention: index n = 0..N counts the particles in mode 2, so a
state vector c has N+1 complex amplitudes and n1 = N - n, n2 = n.  The
collective spin components are tridiagonal in this basis with
Lz = diag(n - N/2) ascending; all operators are kept as diagonal plus
one off-diagonal vector.

The Hamiltonian is used in the L-form

    H(t) = 2 eps(t) Lz - 2 J Lx + U Lz^2

which differs from the number-operator form by the constant
U*N*(N-2)/4; `energy_offset` restores it when absolute energies matter.
"""

import numpy as np


def lz_diag(N):
    """Diagonal of Lz: n - N/2."""
    return np.arange(N + 1) - N / 2.0


def lx_offdiag(N):
    """Upper off-diagonal b of Lx: (Lx)_{n,n+1} = b_n = sqrt((n+1)(N-n))/2."""
    n = np.arange(N)
    return np.sqrt((n + 1.0) * (N - n)) / 2.0


def hamiltonian_tridiag(protocol, t):
    """H(t) as (diagonal, upper off-diagonal); both real, length N+1 and N.

    diag_n = 2 eps(t) (n - N/2) + U (n - N/2)^2, offdiag_n = -J sqrt((n+1)(N-n)).
    """
    N = protocol.N
    m = lz_diag(N)
    diag = 2.0 * protocol.epsilon(t) * m + protocol.U * m * m
    off = -2.0 * protocol.J * lx_offdiag(N)
    return diag, off


def energy_offset(protocol):
    """Constant separating the L-form from the number-operator energies."""
    return protocol.U * protocol.N * (protocol.N - 2) / 4.0


def initial_state(protocol):
    """All N particles in protocol.initial_mode: c_0 = 1 (mode 1) or c_N = 1."""
    c = np.zeros(protocol.N + 1, dtype=np.complex128)
    c[0 if protocol.initial_mode == 1 else protocol.N] = 1.0
    return c


def check_normalized(state, tol=1e-8):
    nrm = float(np.vdot(state, state).real)
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"state norm^2 = {nrm} deviates from 1 beyond {tol}")
    return nrm


def _apply_lx(state):
    b = lx_offdiag(state.size - 1)
    out = np.zeros_like(state)
    out[:-1] += b * state[1:]
    out[1:] += b * state[:-1]
    return out


def _apply_ly(state):
    # Ly = (i/2)(a1'a2 - a2'a1): (Ly v)_n = i b_n v_{n+1} - i b_{n-1} v_{n-1};
    # this sign closes [Lx, Ly] = +i Lz with the ascending Lz convention
    b = lx_offdiag(state.size - 1)
    out = np.zeros_like(state)
    out[:-1] += 1j * b * state[1:]
    out[1:] += -1j * b * state[:-1]
    return out


def _apply_lz(state):
    return lz_diag(state.size - 1) * state


_APPLY = (_apply_lx, _apply_ly, _apply_lz)


def expectation_L(state):
    """(<Lx>, <Ly>, <Lz>) of a normalized state."""
    check_normalized(state)
    return np.array([float(np.vdot(state, op(state)).real) for op in _APPLY])


def variance_L(state):
    """(dLx^2, dLy^2, dLz^2) via double application of each operator."""
    check_normalized(state)
    out = np.empty(3)
    for k, op in enumerate(_APPLY):
        Lv = op(state)
        m1 = float(np.vdot(state, Lv).real)
        m2 = float(np.vdot(Lv, Lv).real)  # <L^2> since L is Hermitian
        out[k] = max(m2 - m1 * m1, 0.0)
    return out


def populations(state):
    """(<n1>, <n2>)."""
    n = np.arange(state.size)
    w = np.abs(state) ** 2
    n2 = float(np.dot(w, n))
    N = state.size - 1
    return N - n2, n2


def spdm(state):
    """Reduced single-particle density matrix (2x2, trace 1).

    rho11 = 1/2 - <Lz>/N, rho22 = 1/2 + <Lz>/N, rho12 = (<Lx> - i <Ly>)/N.
    """
    N = state.size - 1
    L = expectation_L(state)
    rho = np.array([[0.5 - L[2] / N, (L[0] - 1j * L[1]) / N],
                    [(L[0] + 1j * L[1]) / N, 0.5 + L[2] / N]])
    return rho


def spdm_from_L(L, N):
    """SPDM from precomputed (<Lx>, <Ly>, <Lz>); same layout as `spdm`."""
    return np.array([[0.5 - L[2] / N, (L[0] - 1j * L[1]) / N],
                     [(L[0] + 1j * L[1]) / N, 0.5 + L[2] / N]])


def condensate_fraction(rho):
    """Leading SPDM eigenvalue."""
    return float(np.linalg.eigvalsh(rho)[-1])


def spdm_eigenvalues(rho):
    """Both SPDM eigenvalues, ascending."""
    return np.linalg.eigvalsh(rho)
