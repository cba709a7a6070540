"""Python bindings for the vppsim simulation library."""

from ._vppsim import *  # noqa: F401,F403
from ._vppsim import __version__  # noqa: F401
