"""Wasserstein convergence bounds for Markov chains from contractive-drift
certificates: distributions, chain models, certificate constructors, bound
formulas, and Monte Carlo Wasserstein estimators."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__ as _core_doc

__doc__ = _core_doc if _core_doc else __doc__
