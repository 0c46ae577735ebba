"""Resolvent kernels of the Laplacian on p.c.f. self-similar fractals.

The library computes the kernel of ``(lam*I - Lap)^{-1}`` with Dirichlet or
Neumann boundary conditions, as a cell-indexed series of rescaled level-1
blocks, with exact closed forms for the unit interval and the two gasket
presets, and an independent discrete graph oracle for verification.

Sign conventions
----------------
* ``lam`` in kernel operations is the resolvent parameter of
  ``(lam*I - Lap)``; the Laplacian is negative semidefinite, so on the
  interval the Dirichlet spectrum of ``Lap`` is ``{-(k pi)^2}``.
* Spectral-decimation sequences (:mod:`frk.decimation`) use the positive
  convention ``-Lap u = t u``; the two sides are related by ``t = -lam``.
"""

from .errors import (
    ForbiddenValue,
    FrkError,
    NonConvergent,
    NotAPreset,
    OnSpectrum,
    SingularNeumann,
    SingularPrekernel,
    SingularResolvent,
    SpecError,
    UnsupportedAddress,
)
from .structure import (
    FractalSpec,
    LevelGraph,
    Vertex,
    Word,
    build_level,
    canonicalize,
    cell_scale,
    load_spec,
    load_spec_file,
    locate,
    preset,
    vertex_position,
)
from .decimation import (
    LambdaSequence,
    boundary_normal_derivs,
    decimation_to_resolvent,
    extension_matrix,
    flux_product,
    flux_product_alt,
    forward_map,
    lambda_sequence,
    resolvent_to_decimation,
    sg3_side_sequences,
    sg_tangent_apply,
)
from .oracle import (
    DiscreteOperator,
    boundary_spike_values,
    dirichlet_spectrum,
    discrete_resolvent,
    extrapolated_normal_derivative,
    flux_sum,
    laplacian,
    neumann_spectrum,
    normal_derivative,
    normal_derivative_sequence,
    values_interpolator,
)
from .kernel import (
    KernelEvaluation,
    Prekernel,
    SpikeFunction,
    apply_resolvent,
    cross_scale_check,
    dirichlet_kernel,
    flux_matrix,
    interval_closed_form,
    level_one_kernel,
    level_spike,
    neumann_c_matrix,
    neumann_kernel,
    prekernel,
    spike,
)

__version__ = "0.1.0"
