"""Long-range-dependence estimation for symbol sequences.

Quantifies the memory coefficient d of embedded symbol sequences by
log-periodogram regression, validates estimates against synthetic
generators with known d, and provides the EvoRNN recurrent family whose
per-position cell sizes follow a schedule, together with its exact
multiply-add cost model.
"""

__version__ = "0.1.0"
