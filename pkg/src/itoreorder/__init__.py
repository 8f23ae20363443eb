"""Order replacement in iterated Ito stochastic integrals, checked numerically."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    FORWARD, ONE, REVERSED, Const, Cos, Deterministic, DiffPow, Exp, IntegralSpec,
    IteratedValue, KConst, KernelProduct, KernelSpec, KernelSum, Linear, Martingale,
    MartingaleValue, MultiIndex, One, Partition, PowShift, Separable, Sin, Swapped, Time,
    Weighted, WeightedPath, Wiener, WienerIncrement, WienerValue, make_uniform_partition,
    since_start, spec_from_multiindex, until_end,
)
from .paths import (  # noqa: E402
    CompensatedPoisson, PathSet, ScaledWiener, cumulative_value, sample_batch, sample_paths,
)
from .evaluate import (  # noqa: E402
    TailAccumulator, eval_combined, eval_forward, eval_kernel_forward, eval_kernel_reversed,
    eval_reversed, evaluate, tail_accumulator,
)
from .quadrature import simplex_quadrature, triangle_trapezoid  # noqa: E402
from .catalog import Identity, Term, catalog_all, expand_sum_family, lookup  # noqa: E402
from .montecarlo import (  # noqa: E402
    ConvergenceReport, CovarianceReport, EstimateReport, check_many, convergence_sweep,
    covariance_experiment, verify_identity, verify_many,
)
