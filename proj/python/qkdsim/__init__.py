"""Python bindings for the qkdsim engines.

The compiled extension carries the full surface; this package simply
re-exports it so that `import qkdsim` works from a wheel or from a CMake
build tree (with PYTHONPATH pointing at <build>/python).
"""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
