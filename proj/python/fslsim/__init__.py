"""Deterministic simulator for split/federated learning protocols.

The heavy lifting lives in the compiled extension; this package just
re-exports it under friendly names.
"""

from ._core import (
    ConfigError,
    MlpSpec,
    ParamVector,
    RunConfig,
    dirichlet_partition,
    emit_config,
    forward,
    gen_gaussian_mixture,
    init_params,
    loss_and_grad,
    params_from_numpy,
    parse_config,
    run,
    run_to_dir,
    sgd_step,
    vjp_params,
)

__all__ = [
    "ConfigError",
    "MlpSpec",
    "ParamVector",
    "RunConfig",
    "dirichlet_partition",
    "emit_config",
    "forward",
    "gen_gaussian_mixture",
    "init_params",
    "loss_and_grad",
    "params_from_numpy",
    "parse_config",
    "run",
    "run_to_dir",
    "sgd_step",
    "vjp_params",
]
