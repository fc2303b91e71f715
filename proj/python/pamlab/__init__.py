"""Parabolic Anderson model in dynamic random environments."""

from ._core import *  # noqa: F401,F403
from ._core import Error, ConfigError, ParameterError, RangeError, ResourceError, NumericError, ContractError

__all__ = [name for name in dir() if not name.startswith("_")]
