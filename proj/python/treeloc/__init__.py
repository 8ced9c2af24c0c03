"""Tree-based place recognition and 6-DoF localization."""

from ._treeloc import *  # noqa: F401,F403
from ._treeloc import __version__  # noqa: F401
