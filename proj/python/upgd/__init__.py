from ._core import (
    ContractError,
    DomainError,
    InfeasibleError,
    NumericError,
    channel,
    dispersion,
    fbl_rate,
    format_config,
    hebf_flops,
    oracle_wsr,
    permtest,
    qfunc,
    qfunc_inv,
    ratio_w3,
    run_cli,
    sinr_floor,
    train_and_evaluate,
    usrmnet_flops,
)

__all__ = [
    "ContractError",
    "DomainError",
    "InfeasibleError",
    "NumericError",
    "channel",
    "dispersion",
    "fbl_rate",
    "format_config",
    "hebf_flops",
    "oracle_wsr",
    "permtest",
    "qfunc",
    "qfunc_inv",
    "ratio_w3",
    "run_cli",
    "sinr_floor",
    "train_and_evaluate",
    "usrmnet_flops",
]
