"""Tools for the six-vertex height function and its graphical relatives.

The package is organized around one lattice geometry module and a ring of
model engines that share it: exact enumeration and transfer matrices for
the six-vertex model, Glauber samplers, a coupled two-field spin model,
its bond representation, and brute-force oracles used to cross-check the
fast paths.  `vertexlab.cli` exposes the same machinery as subcommands.
"""

from . import (
    ashkinteller,
    checks,
    estimators,
    events,
    grcm,
    lattice,
    loops,
    oracle,
    sampler,
    sixvertex,
    transfer,
)

__version__ = "0.1.0"

__all__ = [
    "cli",
    "lattice",
    "sixvertex",
    "transfer",
    "sampler",
    "events",
    "loops",
    "ashkinteller",
    "grcm",
    "estimators",
    "checks",
    "oracle",
    "__version__",
]
