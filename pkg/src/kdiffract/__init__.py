"""Atomic diffraction by a standing light wave with a random interaction time."""

__version__ = "0.1.0"

from .diffraction import (  # noqa: E402
    DiffractionParams,
    InmValue,
    MomentumDistribution,
    MomentumGrid,
    averaged_distribution,
    ideal_amplitude,
    ideal_distribution,
    initial_amplitude,
    inm_closed_form,
    inm_monte_carlo,
    inm_quadrature,
)
from .experiment import BeamScenario, cal_t, dominant_term, tau_estimate  # noqa: E402
from .randtime import (  # noqa: E402
    DensityMatrix,
    EnergySpectrum,
    GammaTimeLaw,
    average_density,
    check_semigroup,
    decay_factors,
    evolve_exact_log,
    evolve_second_order,
    gamma_pdf,
)
from .specfun import (  # noqa: E402
    PfqParams,
    bessel_j,
    gamma_sample,
    integrate_weighted,
    ln_gamma,
    pfq_4f3,
)
