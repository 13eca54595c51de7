"""Sweep protocol: parameters of one linear-ramp run.

Units: hbar = 1 and the tunneling J sets the energy scale, so time is
measured in 1/J.  The offset ramps as eps(t) = alpha*t.  The macroscopic
interaction g = U*N is the control parameter; the per-particle U = g/N is
always derived, never stored.
"""

from dataclasses import dataclass, replace


def default_window(J, g, alpha):
    """Half-width T of the default sweep window [-T, T].

    Chosen so the ramp ends far outside both the linear crossing region
    (|eps| >= 10 J) and the interaction caustic (|eps| >= 4|g| > 2 eps_c).
    """
    if alpha == 0:
        raise ValueError("alpha = 0 has no finite default window")
    return max(10.0 * J, 4.0 * abs(g), 10.0) / abs(alpha)


@dataclass(frozen=True)
class SweepProtocol:
    """Parameters of a single Landau-Zener sweep.

    initial_mode selects which mode is fully occupied at t_start; with
    alpha > 0 mode 1 starts as the upper level and mode 2 as the lower
    (mode 1 carries the diagonal -eps(t)).
    """

    J: float = 1.0
    g: float = 0.0
    N: int = 50
    alpha: float = 1.0
    t_start: float = None
    t_end: float = None
    initial_mode: int = 1
    tol: float = 1e-10

    def __post_init__(self):
        if not (isinstance(self.N, int) and self.N >= 1):
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if self.J < 0:
            raise ValueError(f"J must be >= 0, got {self.J}")
        if self.initial_mode not in (1, 2):
            raise ValueError(f"initial_mode must be 1 or 2, got {self.initial_mode}")
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        # fill the default symmetric window when either endpoint is omitted
        if self.t_start is None or self.t_end is None:
            T = default_window(self.J, self.g, self.alpha)
            if self.t_start is None:
                object.__setattr__(self, "t_start", -T)
            if self.t_end is None:
                object.__setattr__(self, "t_end", T)
        if not self.t_start < self.t_end:
            raise ValueError(
                f"need t_start < t_end, got [{self.t_start}, {self.t_end}]")

    @property
    def U(self):
        """Per-particle interaction U = g/N."""
        return self.g / self.N

    def epsilon(self, t):
        """Offset eps(t) = alpha*t."""
        return self.alpha * t

    def with_window(self, t_start, t_end):
        return replace(self, t_start=t_start, t_end=t_end)

    def scaled_window(self, factor):
        """Window stretched about the origin; used by convergence doubling."""
        return replace(self, t_start=factor * self.t_start,
                       t_end=factor * self.t_end)
