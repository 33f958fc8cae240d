"""Finite-difference stochastic quasi-Newton optimization with adaptive sampling."""

try:
    from ._fdqn import *  # noqa: F401,F403
    from ._fdqn import __version__  # noqa: F401
except ImportError:
    # In-tree test builds place the extension on sys.path instead of in the package.
    from _fdqn import *  # noqa: F401,F403
    from _fdqn import __version__  # noqa: F401
