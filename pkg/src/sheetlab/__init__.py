"""sheetlab: a numerical laboratory for periodic vortex sheets.

Evolves classical 2pi-periodic vortex sheets, computes one-sided velocity
and pressure traces by potential theory, and verifies energy-conservation
diagnostics: slit identities, microlocal limits, local energy balance,
Onsager-critical regularity indicators, and shrinking-neighborhood criteria.
"""

from .biot_savart import (BlobParameter, PointTooCloseError, SheetTraces,
                          mean_velocity_rhs, one_sided_limits,
                          velocity_at_points, velocity_on_grid)
from .field_analysis import (DyadicPartition, GridField, MollifierSpec,
                             TestFunction, bump_test_function, dyadic_blocks,
                             dyadic_flux, energy_balance_residual,
                             load_grid_field, mollify, mollify_and_commutators,
                             momentum_residual, plateau_ratio, riesz_pressure,
                             sample_sheet_velocity, save_grid_field,
                             strip_grid, structure_function, torus_grid)
from .geometry import (CutoffFamily, DegenerateSheetError, SheetFrame,
                       SheetMeasure, VortexSheet, build_frame, cutoff_family,
                       curvature, load_sheet_csv, save_sheet_csv,
                       sheet_from_functions, sheet_measure)
from .potential_pressure import (PeriodicGreen, PressureTraces, double_layer,
                                 sheet_pressure)
from .sheet_dynamics import (SingularityAbort, Trajectory, evolve,
                             kinematic_residual)
from .verification import (Check, EnergyLedger, JumpField, MaximalFunctions,
                           SingularSetSpec, TubeSpec, VerificationReport,
                           blob_pair_energy, energy_ledger, grid_energy,
                           kernel_energy, microlocal_convergence,
                           mixed_fiber_norm, neighborhood_criterion,
                           normal_maximal, slit_report)

__version__ = "0.1.0"
