"""Principal eigenvalues of drift operators with oscillating potentials."""

from ._core import *  # noqa: F401,F403
from ._core import OscdriftError, __doc__  # noqa: F401

__version__ = "0.1.0"
