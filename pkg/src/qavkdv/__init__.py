"""Energy-preserving QAV Runge-Kutta solvers for the Korteweg-de Vries equation."""
from .baselines import avf_step, grk_step
from .errors import (
    ConfigurationError,
    DegenerateProjectionError,
    GridMismatchError,
    ParameterError,
    SolverDivergenceError,
)
from .integrator import (
    SolverConfig,
    StageSet,
    StepDiagnostics,
    fixed_point_solve,
    qav_eprk_step,
    qav_rk_step_with_q,
    stage_rhs,
)
from .model import InvariantRecord, KdvParams, grad_h, hamiltonian_h, mass_h, modified_energy_h, momentum_h
from .projection import ReferenceInvariants, project_eip
from .spectral import Grid, SpectralOperator, apply_d1, inner_h, make_grid, norm_h
from .tableau import ButcherTableau, gauss_tableau, symplectic_residual

__version__ = "0.1.0"
