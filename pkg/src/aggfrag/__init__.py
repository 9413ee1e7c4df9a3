"""aggfrag: aggregation-fragmentation kinetics and their continuum limit.

Subpackages:

- :mod:`aggfrag.kernels` - fragmentation kernels and repartition machinery
- :mod:`aggfrag.rates` - coefficient laws and the small-parameter scaling
- :mod:`aggfrag.discrete` - truncated size-resolved ODE dynamics
- :mod:`aggfrag.continuum` - the finite-volume growth-fragmentation solver
- :mod:`aggfrag.convergence` - sweep harness and weak-star diagnostics
- :mod:`aggfrag.scenarios` / :mod:`aggfrag.runner` - JSON scenarios and the CLI
"""

__version__ = "0.1.0"

from ._core import BACKEND as core_backend  # noqa: F401
