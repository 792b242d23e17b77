"""qbattery: stored energy of double-quench free-fermion quantum batteries
and the universal non-analyticities quantum phase transitions leave in it.
"""

from .criticality import (
    ParamScan,
    QuenchIncrement,
    SingularityReport,
    central_derivative,
    closed_form_1d,
    closed_form_2d,
    estimate_jump,
    fit_log_divergence,
    harmonic_alt,
    linear_fit_residual,
    locate_jump,
    predicted_jump,
    predicted_log_coefficient,
)
from .kernel import (
    DegenerateModeError,
    DVector,
    EnergyConvention,
    EnergyResult,
    dispersion,
    f0,
    mode_energy,
    total_energy,
)
from .models import (
    CriticalityError,
    DiracParams,
    GapTooSmallError,
    HaldaneParams,
    IsingParams,
    QuenchSpec,
    chern_numeric,
    chern_sign,
    critical_t2,
    dirac_band,
    dirac_d,
    haldane_band,
    haldane_d,
    haldane_dirac_points,
    haldane_grid,
    haldane_masses,
    ising_energy,
)
from .quadrature import BZGrid, RadialShell, bz_sum, dirac_energy_radial, sphere_surface
from .reduction import compensated_sum

__version__ = "0.1.0"

__all__ = [
    "BZGrid",
    "CriticalityError",
    "DegenerateModeError",
    "DiracParams",
    "DVector",
    "EnergyConvention",
    "EnergyResult",
    "GapTooSmallError",
    "HaldaneParams",
    "IsingParams",
    "ParamScan",
    "QuenchIncrement",
    "QuenchSpec",
    "RadialShell",
    "SingularityReport",
    "bz_sum",
    "central_derivative",
    "chern_numeric",
    "chern_sign",
    "closed_form_1d",
    "closed_form_2d",
    "compensated_sum",
    "critical_t2",
    "dirac_band",
    "dirac_d",
    "dirac_energy_radial",
    "dispersion",
    "estimate_jump",
    "f0",
    "fit_log_divergence",
    "haldane_band",
    "haldane_d",
    "haldane_dirac_points",
    "haldane_grid",
    "haldane_masses",
    "harmonic_alt",
    "ising_energy",
    "linear_fit_residual",
    "locate_jump",
    "mode_energy",
    "predicted_jump",
    "predicted_log_coefficient",
    "sphere_surface",
    "total_energy",
]
