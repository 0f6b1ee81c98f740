# -*- coding: utf-8 -*-

import enum
import hashlib
import json

import numpy as np


__all__ = [ 'instance_to_dict', 'config_hash' ]


def instance_to_dict(obj, ignore_private=False):
    """Recursively convert a class instance into plain python types

    numpy arrays become (nested) lists, numpy scalars become python
    numbers and enum members become their values.

    args:
        obj: a class instance
        ignore_private: skip attributes starting with "_"

    returns:
        dict representation
    """
    if obj is None or isinstance(obj, (int, float, bool, str)):
        return obj

    if isinstance(obj, enum.Enum):
        return obj.value

    if isinstance(obj, np.generic):
        return obj.item()

    if isinstance(obj, np.ndarray):
        return obj.tolist()

    if isinstance(obj, dict):
        new = {}
        for k in obj:
            new[k] = instance_to_dict(obj[k], ignore_private)
        return new

    if isinstance(obj, (list, tuple)):
        new = []
        for val in obj:
            new.append(instance_to_dict(val, ignore_private))
        return new

    new = {}
    try:
        for k in obj.__dict__:
            if ignore_private and k.startswith("_"):
                continue
            new[k] = instance_to_dict(obj.__dict__[k], ignore_private)
    except AttributeError:
        return str(obj)
    else:
        return new


def config_hash(obj):
    """sha256 hex digest of the canonical JSON form of obj"""
    canonical = json.dumps(instance_to_dict(obj, ignore_private=True),
                           sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode()).hexdigest()
