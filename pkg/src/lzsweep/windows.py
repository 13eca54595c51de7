"""Finite-window convergence: doubling certification and tail averaging.

The sweep formally runs over t in (-inf, inf).  Numerically we integrate a
finite window and must certify that the reported transition probability no
longer depends on it.  Two pieces:

* tail_mean averages the survival probability over the trailing part of the
  window.  In the interaction-broken regime the instantaneous survival keeps
  oscillating with an envelope that decays only like 1/t, so the endpoint
  value converges far too slowly; the trailing average estimates the same
  t -> inf limit with the oscillation integrated out.
* certified_value doubles the window until the reported value moves by less
  than converge_atol between consecutive doublings.
"""

TAIL_FRACTION = 0.25
TAIL_SAMPLES = 257


class WindowConvergenceError(RuntimeError):
    """Doubling did not settle; carries the per-window history."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


def tail_mean(values):
    """Trapezoid mean of uniformly spaced samples."""
    n = len(values)
    if n == 1:
        return float(values[0])
    return float((0.5 * values[0] + values[1:-1].sum() + 0.5 * values[-1])
                 / (n - 1))


def branch_slope(e, J):
    """u with lower branch (1, u)/sqrt(1+u^2), upper (-u, 1)/sqrt(1+u^2).

    Eigenvectors of [[-e, -J], [-J, e]]; u = J/(hypot(e,J)+e) is stable for
    either sign of e.
    """
    import numpy as np
    return J / (np.hypot(e, J) + e)


def mode_connected_branch_is_lower(initial_mode, e_start):
    """Which branch reduces to the initial mode at the sweep start."""
    return (initial_mode == 1) == (e_start > 0)


def adiabatic_survival(ts, sx, sz, J, g, alpha, initial_mode):
    """Population of the adiabatic branch ending in the initial mode.

    Inputs are per-sample Bloch components (mean-field s, or <L>/N for a
    many-body state).  The branch is the instantaneous eigenvector of the
    effective linear two-level problem with detuning e = alpha*t + g*s_z;
    projecting onto it removes the O(J/e) off-resonant wiggle the bare mode
    population carries at finite window, leaving O((J/e)^2).  At t -> inf
    the branch coincides with the mode, so this estimates the same limit.
    """
    import numpy as np
    if J == 0.0:
        return 0.5 - sz if initial_mode == 1 else 0.5 + sz
    e = alpha * ts + g * sz
    u = branch_slope(e, J)
    usq = u * u
    lower = ((0.5 - sz) + usq * (0.5 + sz) + 2.0 * u * sx) / (1.0 + usq)
    # the lower branch tends to mode 1 where the sweep ends with e > 0
    wants_lower = (initial_mode == 1) == (alpha > 0)
    return lower if wants_lower else 1.0 - lower


def tail_times(protocol, fraction=TAIL_FRACTION, npts=TAIL_SAMPLES):
    import numpy as np
    t0, t1 = protocol.t_start, protocol.t_end
    return np.linspace(t1 - fraction * (t1 - t0), t1, npts)


def freezeout_window(protocol, freeze_offset=None):
    """Extend the sweep until the offset pins the number distribution.

    Moment readouts such as the squeezing parameter keep breathing while
    the final offset is comparable to the couplings; they settle once
    |eps| dwarfs both tunneling and interaction.  The default depth,
    40 max(J, |g|), compresses the residual oscillation to the 1e-3
    level.  Population readouts do not need this: the branch projection
    in adiabatic_survival removes the same contamination analytically.
    """
    if freeze_offset is None:
        freeze_offset = 40.0 * max(protocol.J, abs(protocol.g))
    if not freeze_offset > 0:
        raise ValueError(f"freeze_offset must be > 0, got {freeze_offset}")
    t_read = freeze_offset / abs(protocol.alpha)
    return protocol.with_window(protocol.t_start,
                                max(protocol.t_end, t_read))


def certified_value(run, protocol, converge_atol=1e-3, max_doublings=6):
    """run(protocol) -> float, re-evaluated on doubled windows until stable.

    Returns (value, protocol_used, history).  history is the list of
    (window_factor, value) pairs actually computed.
    """
    history = []
    prev = run(protocol)
    history.append((1, prev))
    for k in range(1, max_doublings + 1):
        wide = protocol.scaled_window(2 ** k)
        cur = run(wide)
        history.append((2 ** k, cur))
        if abs(cur - prev) < converge_atol:
            return cur, wide, history
        prev = cur
    raise WindowConvergenceError(
        f"value still moving by >= {converge_atol} after {max_doublings} "
        f"window doublings (history: {history}); increase |t_end| or relax "
        "converge_atol", history)
