"""Conical Radon and Compton transforms with range-condition checks."""

__version__ = "0.1.0"

from .beam import BeamData, beam_data_from_field, divergent_beam, divergent_beam_batch
from .cone import (ConeData, check_compton_range, check_crt_range, cone_composed,
                   forward_cone, forward_crt, reconstruct_from_crt)
from .geometry import ConvexVertexSet, ball, sphere_grid
from .kernels import BACKEND
from .phantom import ScalarField, make_bump, make_sum, support_box
from .planar import (ProjectiveData, SpectralData, build_h, check_planar_range,
                     fourier_w, projective_data, reconstruct_from_h)
from .report import ConsistencyReport
from .spherical import SGrid, forward_sst

__all__ = [
    "BACKEND", "BeamData", "ConeData", "ConsistencyReport", "ConvexVertexSet",
    "ProjectiveData", "SGrid", "ScalarField", "SpectralData", "ball",
    "beam_data_from_field", "build_h", "check_compton_range", "check_crt_range",
    "check_planar_range", "cone_composed", "divergent_beam", "divergent_beam_batch",
    "forward_cone", "forward_crt", "forward_sst", "fourier_w", "make_bump", "make_sum",
    "projective_data", "reconstruct_from_crt", "reconstruct_from_h", "sphere_grid",
    "support_box",
]
