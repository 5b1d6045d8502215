"""Plate models for thin nematic elastomer sheets.

From the 3D spontaneous strain of a nematic texture to a 2D plate energy
with a target curvature and residual energy, its minimal-energy developable
shapes, and numerical checks of both ends of that chain.
"""

from .compatibility import (
    MetricProfile,
    QuadraticCase,
    RicciReport,
    Verdict,
    christoffel,
    classify_quadratic,
    ricci,
    riemann_tensor,
    tube_deformation,
)
from .gamma_check import AnsatzDeformation, ScalingReport, energy3d_rescaled, optimise_fiber_correction, scaling_study
from .material_model import (
    DirectorProfile,
    MaterialParams,
    QuadraticStrainSpec,
    StrainProfile,
    Texture,
    limit_b_field,
    nematic_step_tensor,
    w0,
    w_h,
    w_vol,
    w_vol_dd1,
)
from .plate_energy import (
    CurvatureField,
    MinimiserSet,
    Multiplicity,
    brute_force_developable_min,
    limit_energy,
    minimise_over_developable,
    physical_prefactor,
    zero_stiffness_family,
)
from .quadrature import Rect, gauss_legendre
from .reduction import (
    ReducedModel,
    ReductionError,
    extract_reduced_model,
    inner_minimiser_d,
    moment_integrals,
    qbar2,
    reduce_profile,
    reduce_texture,
)
from .surface_gen import (
    IsometrySurface,
    SurfaceMesh,
    cylinder_x1,
    cylinder_x2,
    export_mesh,
    fundamental_forms_numeric,
    plane,
    rotated_cylinder,
    surface_for_curvature,
)
from .tensor_core import QuadForm2, Sym2, q2, q2_via_relaxation, q3, sqrtm_spd

__version__ = "0.1.0"
