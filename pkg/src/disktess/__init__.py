"""disktess: random planar tessellations measured in a disk.

Seeded point-process samplers, certified tessellation restrictions,
functional measurement, Monte Carlo exponential-moment estimation and a
per-realization check suite.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND  # noqa: F401
