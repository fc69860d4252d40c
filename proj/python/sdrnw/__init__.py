"""Nadaraya-Watson regression after sufficient dimension reduction.

Thin Python layer over the C++ core. Arrays are NumPy float64; bases are
d x p with orthonormal rows.
"""

import json

from ._sdrnw import (
    AmbiguousRankError,
    ArgumentError,
    DataError,
    DegenerateFitError,
    EmptyWindowError,
    Kernel,
    NumericError,
    SdrnwError,
    __version__,
    beta0,
    make_kernel,
    nw_fit,
    pfc,
    pls,
    principal_angles,
    projection_to_basis,
    sample,
    sir,
    truth,
)
from ._sdrnw import _run_command


def run_command(command, config, out_dir=None):
    """Run a CLI subcommand from a config dict.

    Returns (parsed stdout JSON or text, manifest dict or None).
    """
    text, manifest = _run_command(command, json.dumps(config), None if out_dir is None else str(out_dir))
    try:
        out = json.loads(text)
    except ValueError:
        out = text
    return out, (json.loads(manifest) if manifest is not None else None)


__all__ = [
    "AmbiguousRankError",
    "ArgumentError",
    "DataError",
    "DegenerateFitError",
    "EmptyWindowError",
    "Kernel",
    "NumericError",
    "SdrnwError",
    "__version__",
    "beta0",
    "make_kernel",
    "nw_fit",
    "pfc",
    "pls",
    "principal_angles",
    "projection_to_basis",
    "run_command",
    "sample",
    "sir",
    "truth",
]
