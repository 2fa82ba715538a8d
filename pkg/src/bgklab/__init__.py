"""BGK waves of the 1D Vlasov-Poisson system on the unit torus.

Equilibrium construction, action-angle variables with verified period
asymptotics, the angle-Fourier dispersion relation and its regularized
energy functionals, a structure-preserving eigenvalue scan of the
linearized operator, and time integration of the linearized flow.
"""

from .profiles import (MicroProfile, boltzmannian, polytrope,
                       even_nonmonotone, schamel, check_profile)
from .potentials import (PotentialProfile, PotentialValidationError,
                         make_potential_family, potential_from_callables,
                         check_potential)
from .equilibrium import (Equilibrium, make_equilibrium, ion_density,
                          poisson_residual, verify_assumptions)
from .action_angle import (ActionAngleChart, ChartError, build_chart,
                           choose_estar, turning_points, period,
                           period_deriv, period_deriv2, angle,
                           from_action_angle, chart_energy_derivative)

__all__ = [
    "MicroProfile", "boltzmannian", "polytrope", "even_nonmonotone",
    "schamel", "check_profile",
    "PotentialProfile", "PotentialValidationError", "make_potential_family",
    "potential_from_callables", "check_potential",
    "Equilibrium", "make_equilibrium", "ion_density", "poisson_residual",
    "verify_assumptions",
    "ActionAngleChart", "ChartError", "build_chart", "choose_estar",
    "turning_points", "period", "period_deriv", "period_deriv2", "angle",
    "from_action_angle", "chart_energy_derivative",
]

__version__ = "0.1.0"
