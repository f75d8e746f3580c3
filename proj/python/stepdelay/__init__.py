"""Stationary scattering data and wave-packet time delays for one-dimensional
steplike potentials (units: hbar = 1, m = 1/2)."""

try:
    from ._stepdelay import *  # noqa: F401,F403  (wheel layout)
    from ._stepdelay import __doc__ as _core_doc  # noqa: F401
except ImportError:  # development layout: module next to the build tree
    from _stepdelay import *  # noqa: F401,F403
    from _stepdelay import __doc__ as _core_doc  # noqa: F401

__version__ = "0.1.0"
