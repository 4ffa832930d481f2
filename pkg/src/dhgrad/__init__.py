"""Nonlocal gradients with doubly homogeneous kernels in three dimensions.

Kernel construction, radial Fourier transforms, constructive inversion of
the convolution identity, periodic-grid gradients and rearrangement-based
norms for the associated Sobolev inequalities.
"""

from .constants import K_sd, c_alpha, gamma, log_coeffs, riesz_A, sphere_area
from .field_ops import (Grid3, ScalarField, VectorField, curl_residual, gaussian_field,
                        nonlocal_gradient_direct, nonlocal_gradient_spectral, reconstruct)
from .inversion import construct_inversion, decay_regression, verify_convolution_identity
from .kernels import KernelRejected, KernelSpec, RadialProfile, make_kernel
from .norms import lorentz_norm, lp_norm, rearrange, sum_space_norm, truncate, weak_norm
from .radial_fourier import RadialSpectrum, check_positivity, radial_ft

__version__ = "0.1.0"
