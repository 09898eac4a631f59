"""Young-type integrals of Hölder fields over boxes by dyadic Riemann sums."""

from .currents import (
    ApproxEvalTrace,
    BoxChain,
    ChainTerm,
    chain_evaluate,
    chain_norms,
    evaluate_via_approximation,
    koch_boundary_evaluate,
    koch_parametrization,
    staircase_chain,
)
from .geometry import BoxDomain, SignedFace, box_metrics, boundary_faces, dyadic_partition
from .holder import (
    ApproxField,
    FieldTuple,
    ScalarField,
    VectorMap,
    estimate_holder_constant,
    inf_convolution,
    lacunary_series,
)
from .oracle import QuadratureSpec, det_quadrature_integral, stieltjes_1d_brute, stokes_check
from .sharpness import CounterexampleSpec, divergence_sweep, trig_counterexample
from .youngint import (
    BudgetExhausted,
    ErrorConstants,
    ExponentSumError,
    IntegralResult,
    apriori_bound,
    boundary_integral,
    error_constants,
    integrate,
    parametrized_integrate,
    riemann_sequence,
    riemann_sum,
    thin_box_bound,
)

__version__ = "0.1.0"
