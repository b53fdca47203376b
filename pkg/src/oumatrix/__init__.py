"""Matrix-valued Ornstein-Uhlenbeck processes: simulation, estimators and exact solutions."""

from .core import (
    ConfigurationError,
    ContractError,
    EnsembleBatch,
    GinibreMatrix,
    HermitianMatrix,
    OUParams,
    QuaternionArgument,
    SquareComplexMatrix,
    block_trace,
    quaternion_embed,
    rng_stream,
)

__version__ = "0.1.0"
