"""Efficiency limits and simulations for cavity-QED single-photon sources."""

from .amplitudes import AmplitudeResult, adiabaticity, evolve_amplitudes
from .bounds import (BoundReport, bound_report, cin_from_roundtrip, cooperativities,
                     effective_cin, kappa_ex_opt, pf_lower, pf_lower_approx, prep_upper,
                     ps_upper, ps_upper_norep, rates_from_physical)
from .errors import (BoundViolation, BracketError, BudgetExhausted, DomainError,
                     InvalidParameter, MismatchedInputs, NotConverged, SpecError,
                     ToleranceNotMet)
from .master import MasterResult, evolve_master, repump_contribution
from .model import (DrivePulse, PhysicalCavity, RateSet, StopRule, ToleranceSpec,
                    effective_hamiltonian, validate)
from .montecarlo import TrajectoryStats, run_trajectories
from .optimize import (OptimizationOutcome, SweepSpec, maximize_over_kappa_ex, optimize_pulse,
                       sweep)

__version__ = "0.1.0"
