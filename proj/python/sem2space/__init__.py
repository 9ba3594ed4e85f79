"""Semantics-to-space zero-shot verb-object inference."""

try:
    from ._sem2space import *  # noqa: F401,F403
    from ._sem2space import __doc__ as _doc
except ImportError:  # in-tree build: extension sits on PYTHONPATH
    from _sem2space import *  # noqa: F401,F403
    from _sem2space import __doc__ as _doc

__doc__ = _doc
__version__ = "0.1.0"
