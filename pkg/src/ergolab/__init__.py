"""ergolab — exact-rational laboratory for slow convergence of Birkhoff
averages on finite single-cycle systems.

Everything verified is verified in exact rational arithmetic; floats
never enter any check or persisted artifact.
"""
__version__ = "0.1.0"

from .rates import Rate, Unsatisfiable
from .cycle_ir import (IRError, Loop, Refine, Splice, Tower,
                       deserialize, materialize, refine, serialize, splice, stream)
from .windows import WindowReport, brute_force_oracle, l1_norm_deviation, window_stats

__all__ = [
    "Rate", "Unsatisfiable",
    "IRError", "Tower", "Loop", "Refine", "Splice",
    "refine", "splice", "stream", "materialize", "serialize", "deserialize",
    "WindowReport", "window_stats", "l1_norm_deviation", "brute_force_oracle",
    "__version__",
]
