"""Pseudo-spectral toolkit for the 2+1-dimensional Chern-Simons-Higgs
system in Lorenz gauge on a periodic torus: constraint-compatible data,
half-wave evolution with null-form right-hand sides, gauge transformations,
conserved-quantity diagnostics, and wave-Sobolev norm machinery.
"""

from .errors import (NonFiniteField, SingularZeroMode, StepUnstable,
                     InvalidRange, ConfigError)
from .spectral import (Grid, ScalarField, FracLapHom, FracLapInhom, RieszHom,
                       RieszInhom, ProjLow, ProjHigh, Partial, apply_multiplier,
                       riesz_identity_residual, dealias, field_from_physical,
                       field_from_spectral, zero_field, write_field, read_field)
from .state import (GaugeState, Potential, CurrentVector, covariant_derivative,
                    current, curvature, build_compatible_data,
                    constraint_residuals, total_charge, zero_state,
                    write_state, read_state)
from .gauge import GaugeFunction, solve_gauge_function, apply_gauge, invariance_report
from .dynamics import (SplitState, split, unsplit, null_form_q, divcurl_decompose,
                       bilinear_terms, rhs, step, evolve, constraint_monitors,
                       Trajectory, INHOM, HOMGAUGE)
from .diagnostics import (MonitorSeries, energy, energy_density, i_of_t,
                          charge_l2, kinetic_l2_sq, d_dt_charge_sq,
                          energy_inequality_check, gronwall_bound_check,
                          write_monitors_csv)
from .norms import (Exponents, SpaceTimeField, sobolev_norm, lp_norm,
                    wave_sobolev_norm, xsb_norm, product_law_holds,
                    condition_set_threshold, threshold_with_binding,
                    empirical_product_ratio, product_ratio_sweep,
                    angle_bound_check, inequality_probes,
                    field_inequality_ratios, covariant_lp_ratio,
                    REDUCTION_TUPLES, INADMISSIBLE_TUPLES)
from .scenarios import gaussian_data, winding_data, plane_wave_data, build_scenario

__version__ = "0.1.0"
