"""Centralized tolerance policy threaded through every numeric predicate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_EPS = float(np.finfo(np.float64).eps)


@dataclass(frozen=True)
class Tolerance:
    """Thresholds for entrywise equality, PSD slack and numerical rank.

    eq_tol   -- entrywise comparison tolerance
    psd_tol  -- allowed slack on the minimum eigenvalue of a PSD matrix
    rank_tol -- relative singular-value / eigenvalue cutoff for rank decisions
    """

    eq_tol: float = 1e-9
    psd_tol: float = 1e-8
    rank_tol: float = 1e-7

    def __post_init__(self):
        for name in ("eq_tol", "psd_tol", "rank_tol"):
            value = getattr(self, name)
            if not (value > 0.0 and np.isfinite(value)):
                raise ValueError(f"{name} must be strictly positive, got {value!r}")
        if self.eq_tol < _EPS:
            raise ValueError(f"eq_tol must be >= machine epsilon ({_EPS:.3e})")


DEFAULT_TOL = Tolerance()
