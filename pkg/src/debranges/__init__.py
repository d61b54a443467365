"""Projection correlation kernels, de Branges-style entire-function spaces,
and determinantal sampling, verified against each other at desk scale."""

__version__ = "0.1.0"

from .dpp import (
    PointConfiguration,
    TestFunction,
    dpp_sample,
    empirical_intensity,
    expectation_product,
    mc_estimate,
    truncate,
)
from .kernels import (
    KernelMatrix,
    KernelSpec,
    bessel_eval,
    continuous_sine_eval,
    discrete_sine_eval,
    kernel_grid,
    normality_witness,
    psd_check,
)
from .krein import (
    FiniteRankSpace,
    KreinArtifacts,
    MultiplicationOperator,
    PipelineStageError,
    deficiency_subspace,
    discrete_sine_fxi,
    division_check,
    krein_transform,
    make_polynomial_space,
    mult_domain,
    run_pipeline,
    selfadjoint_extension,
)
from .spaces import (
    HermiteBiehler,
    Multiplier,
    RealEntireFunction,
    bessel_hb,
    db_kernel_eval,
    factorization_check,
    gauge_check,
    hb_check,
    sine_hb,
)
from .specfun import SeriesParams, bessel_j, complex_step_derivative, entire_bessel, gamma_real
