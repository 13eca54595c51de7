"""Two-mode bosonic Landau-Zener sweeps: exact, mean-field, phase-space
ensemble, and open-system descriptions of the same ramp, cross-validated."""

from .protocol import SweepProtocol, default_window
from .dynamics import (plz_many_particle, propagate_schrodinger,
                       sweep_number_squeezing, revival_time)
from .meanfield import plz_mean_field, propagate_gpe, propagate_bloch_noisy
from .phasespace import (plz_ensemble, sample_initial_ensemble,
                         propagate_ensemble, number_squeezing_from_moments,
                         husimi, reconstruct_bloch_from_husimi)
from .opensystem import plz_master, propagate_master
from .spectra import (many_body_spectrum, mean_field_stationary_states,
                      swallow_tail_boundary, min_gap_scaling)

__all__ = [
    "SweepProtocol", "default_window",
    "plz_many_particle", "propagate_schrodinger",
    "sweep_number_squeezing", "revival_time",
    "plz_mean_field", "propagate_gpe", "propagate_bloch_noisy",
    "plz_ensemble", "sample_initial_ensemble", "propagate_ensemble",
    "number_squeezing_from_moments", "husimi",
    "reconstruct_bloch_from_husimi",
    "plz_master", "propagate_master",
    "many_body_spectrum", "mean_field_stationary_states",
    "swallow_tail_boundary", "min_gap_scaling",
]
__version__ = "0.1.0"
