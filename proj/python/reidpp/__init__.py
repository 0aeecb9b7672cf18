"""Python bindings for the reid retrieval core."""

from ._core import *  # noqa: F401,F403
from ._core import (
    BatchError,
    ConfigError,
    DataError,
    EvalError,
    FormatError,
    IoError,
    ReidError,
    ShapeError,
)

__version__ = "0.1.0"
