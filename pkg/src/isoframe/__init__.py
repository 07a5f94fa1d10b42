"""Numerical exterior calculus for SU(2) gauge fields given as isotopic frames."""

from .ansatz import (AnsatzFrame, Profile, ProfileSet, build_plane_wave, build_spherical,
                     build_spherical_wave, reduced_residuals, transmutation_error)
from .bundle import (DegenerateFrameError, FrameEvaluation, GaugeRotationField, IsoFrame,
                     IsoTripletForm, ResidualReport, bianchi_residual, field_equation_residual,
                     gauge_transform, solve_connection, structure_residual, yang_mills_residual)
from .charts import Chart, builtin_chart, chart_from_description, hodge_star
from .elliptic import cn, complete_K, dn, jacobi_sn_cn_dn, sd, sn
from .forms import DifferentialForm, exterior_derivative, wedge
from .odes import (ShootingConfig, SolutionTable, plane_wave_system, point_charge_system,
                   shoot_point_charge, solve_plane_wave, solve_spherical_wave,
                   spherical_wave_system)

__version__ = "0.1.0"

__all__ = [
    "AnsatzFrame",
    "Chart",
    "DegenerateFrameError",
    "DifferentialForm",
    "FrameEvaluation",
    "GaugeRotationField",
    "IsoFrame",
    "IsoTripletForm",
    "Profile",
    "ProfileSet",
    "ResidualReport",
    "ShootingConfig",
    "SolutionTable",
    "bianchi_residual",
    "build_plane_wave",
    "build_spherical",
    "build_spherical_wave",
    "builtin_chart",
    "chart_from_description",
    "cn",
    "complete_K",
    "dn",
    "exterior_derivative",
    "field_equation_residual",
    "gauge_transform",
    "hodge_star",
    "jacobi_sn_cn_dn",
    "plane_wave_system",
    "point_charge_system",
    "reduced_residuals",
    "sd",
    "shoot_point_charge",
    "sn",
    "solve_connection",
    "solve_plane_wave",
    "solve_spherical_wave",
    "spherical_wave_system",
    "structure_residual",
    "transmutation_error",
    "wedge",
    "yang_mills_residual",
    "__version__",
]
