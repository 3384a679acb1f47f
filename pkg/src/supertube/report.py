"""Deterministic CSV/JSON writers.

Floats are always written with 17 significant digits, '.' as decimal
separator and '\\n' line endings, so identical inputs give identical bytes.
"""
from __future__ import annotations

import json
import math
from enum import Enum

import numpy as np

from . import __version__

# Formula readings in effect; embedded in every report.
VARIANT_FLAGS = {
    "bogoliubov_drift": "hbar^2 (p.lambda)/m",
    "bogoliubov_radicand": "(hbar^2 l^2/2m + V0)^2 - V0^2",
    "two_mode_second_line": "beta*sigma on the left",
    "pair_coefficient_b": "finite-N form, identical to the limit form as v_q -> V0",
    "stationary_interaction_weight": 2,
    "quasiparticle_shift": "lambda = lambda_tilde - hbar^2 k1.(k2+l)/m",
    "transverse_lattice": "2 pi (0, n2/L2, n3/L2)",
}


def fmt_float(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, ".17g")
    return "0" if s == "-0" else s


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, Enum):
        obj = obj.value
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, complex):
        return _encode({"re": obj.real, "im": obj.imag}, indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [f"{pad}{_encode(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text with sorted keys and 17-significant-digit floats."""
    return _encode(obj, indent, 0) + "\n"


def meta(config) -> dict:
    return {"config_hash": config.hash, "version": __version__, "variants": dict(VARIANT_FLAGS)}


def csv_text(header: list, rows, config=None) -> str:
    """CSV with an optional leading '#' metadata line, then the header."""
    lines = []
    if config is not None:
        lines.append(f"# config_hash={config.hash} version={__version__}")
    lines.append(",".join(header))
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (bool, np.bool_)):
                cells.append("1" if v else "0")
            elif isinstance(v, (int, np.integer)):
                cells.append(str(int(v)))
            else:
                cells.append(fmt_float(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
