"""Rate-distortion-leakage tradeoffs for privacy-constrained remote source coding."""
from .frontier import Frontier, pareto_mask
from .kernels import BACKEND
from .models import (
    BinaryCascadeParams,
    GaussianCascadeParams,
    ModelError,
    SourceModel,
    binary_cascade,
    from_table,
    gaussian_cascade_discretized,
)
from .oracle import GridSpec, grid_frontier, max_dprime
from .probcore import (
    Channel,
    JointPMF,
    VarLabel,
    cond_entropy,
    cond_mi,
    extend_with_channel,
    kl,
    marginal,
    verify_markov,
)
from .regions import AuxiliaryChoice, TradeoffPoint
from .sibsolver import SolverConfig, SolverState, agglomerate, solve, sweep

__version__ = "0.1.0"
