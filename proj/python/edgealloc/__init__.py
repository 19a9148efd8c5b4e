"""Edge task allocation by projected dual descent."""

from importlib import resources as _resources

from ._core import (
    AuditResult,
    Config,
    ConvergenceCriteria,
    ExchangePattern,
    Group,
    Network,
    OracleSolution,
    OracleStatus,
    ParameterError,
    PolicyEvaluation,
    PolicyTrace,
    SolveReport,
    StepMode,
    StopReason,
    SweepStep,
    ValidationError,
    audit,
    degradation_sweep,
    load_config,
    oracle,
    parse_config,
    qos_sweep,
    slater_margin,
    solve,
    solve_report_csv,
)


def default_config_path() -> str:
    """Path of the bundled six-node wildfire/cloud config."""
    return str(_resources.files(__name__) / "data" / "wildfire_default.json")


def load_default() -> Config:
    return load_config(default_config_path())


__all__ = [
    "AuditResult",
    "Config",
    "ConvergenceCriteria",
    "ExchangePattern",
    "Group",
    "Network",
    "OracleSolution",
    "OracleStatus",
    "ParameterError",
    "PolicyEvaluation",
    "PolicyTrace",
    "SolveReport",
    "StepMode",
    "StopReason",
    "SweepStep",
    "ValidationError",
    "audit",
    "default_config_path",
    "degradation_sweep",
    "load_config",
    "load_default",
    "oracle",
    "parse_config",
    "qos_sweep",
    "slater_margin",
    "solve",
    "solve_report_csv",
]
