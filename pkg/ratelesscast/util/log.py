import json
import logging
import time
from functools import wraps

import numpy as np

from ratelesscast.sim_logger import sim_logger


def logtime(logger=None):
    """Logs the wall time of every call of the decorated function at DEBUG."""

    def _logtime(f):
        @wraps(f)
        def timed_f(*args, **kw):
            start = time.perf_counter()
            try:
                return f(*args, **kw)
            finally:
                (logger or debug_logger(f)).debug("%s took %.3f s", f.__name__, time.perf_counter() - start)

        return timed_f

    return _logtime


def logExceptions(f):
    """
    Logs any exception of ``f`` with its traceback before re-raising it.
    Used on functions running in worker processes, whose tracebacks are
    otherwise lost when the exception is pickled back.
    """

    @wraps(f)
    def wrap(*args, **kw):
        try:
            return f(*args, **kw)
        except Exception as e:
            debug_logger(f).exception("%s in %s: %s", e.__class__.__name__, f.__name__, e)
            raise

    return wrap


def json_serialisor(elm):
    """``default`` hook of json.dump for numpy values and objects with ``as_dict``."""
    if isinstance(elm, np.ndarray):
        return elm.tolist()
    if isinstance(elm, np.generic):
        return elm.item()
    if isinstance(elm, complex):
        return [elm.real, elm.imag]
    if hasattr(elm, "as_dict"):
        return elm.as_dict()
    if isinstance(elm, (set, frozenset)):
        return sorted(elm)
    return repr(elm)


def debug_logger(function=None):
    if function is None:
        return sim_logger("ratelesscast.debug")
    return sim_logger("{}.{}".format(function.__module__, function.__qualname__))
