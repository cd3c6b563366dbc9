"""ustatlab: U-statistics, Hoeffding decompositions and Wasserstein-2 convergence experiments."""

import logging

__version__ = "0.1.0"

logging.getLogger(__name__).addHandler(logging.NullHandler())
