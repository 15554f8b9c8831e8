from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PolyCoeffs:
    """Polynomial with constant-first coefficients."""

    coefficients: tuple[float, ...]

    def __post_init__(self):
        coeffs = tuple(float(c) for c in np.atleast_1d(self.coefficients))
        if not coeffs:
            raise ValueError("need at least one coefficient")
        if not all(np.isfinite(coeffs)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, y):
        # Horner, constant-first
        acc = np.zeros_like(np.asarray(y, dtype=float))
        for c in reversed(self.coefficients):
            acc = acc * y + c
        return float(acc) if np.ndim(y) == 0 else acc

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coefficients, dtype=dtype or float)

    def __len__(self):
        return len(self.coefficients)
