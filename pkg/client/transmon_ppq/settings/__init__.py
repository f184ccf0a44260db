from .main import (
    DEFAULT_VALUES,
    DeviceSettings,
    OptimizerSettings,
    RunConfig,
    RunSettings,
    ScheduleSettings,
    dump_config,
    load_config,
    parse_config,
)

__all__ = (
    "DEFAULT_VALUES",
    "DeviceSettings",
    "OptimizerSettings",
    "RunConfig",
    "RunSettings",
    "ScheduleSettings",
    "dump_config",
    "load_config",
    "parse_config",
)
