"""Spectral Galerkin simulation and verification tools for a third-order-in-time
nonlinear acoustic wave model with thermal relaxation and strong damping."""
from .energy import (DecayFit, EnergySample, compute_energies, energy_samples, fit_decay_rate,
                     heat_identity_residual, third_derivative_check, verify_decay)
from .errors import (BCWError, ConfigError, Degenerate, Diverged, DomainError,
                     InsufficientDataError, ShapeError, StabilityError)
from .generator import (MediumParams, ModeEigenvalues, mode_eigenvalues, spectral_bound,
                        triggiani_constant, verify_resolvent_bounds)
from .linear import ModalState, Trajectory, initial_lift, propagator, step_linear
from .nonlinear import (DEFAULT_SMALLNESS_THRESHOLD, SimConfig, SimulationResult, StepDiagnostics,
                        nonlinear_forcing, picard_step, run_simulation, smallness_check)
from .spectral import (BoxDomain, Mode, PhysicalField, SpectralField, apply_A_power, enumerate_modes,
                       laplacian_eigenvalue, multiply_fields, sobolev_norm, to_physical, to_spectral)

__version__ = "0.1.0"
