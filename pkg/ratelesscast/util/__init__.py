from collections.abc import Mapping
import os

from .log import logExceptions, logtime, json_serialisor


def dict_merge(base, override):
    """
    Recursive merge of two nested dicts, ``override`` wins on every leaf.
    Lists are leaves: a list in ``override`` replaces the whole list.
    Neither argument is modified.
    """
    if not (isinstance(base, Mapping) and isinstance(override, Mapping)):
        return override
    out = dict(base)
    for k, v in override.items():
        out[k] = dict_merge(base[k], v) if k in base else v
    return out


def dict_get(mapping, path, default=None):
    """
    Item at ``path`` (an iterable of keys) in a nested dict, ``default``
    when a key along the path is missing.
    """
    node = mapping
    for k in path:
        if not isinstance(node, Mapping) or k not in node:
            return default
        node = node[k]
    return node


def makedirs(path, parent=False, exist_ok=True):
    """
    os.makedirs that accepts existing directories.
    :param parent: create the directory holding ``path`` instead of ``path`` itself
    """
    d = os.path.dirname(path) if parent else path
    if d:
        os.makedirs(d, exist_ok=exist_ok)
