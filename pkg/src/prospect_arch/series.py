"""Price and yield series containers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._errors import DomainError


@dataclass(frozen=True)
class _Series:
    values: np.ndarray
    labels: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = tuple(str(lab) for lab in self.labels)
            if len(labels) != len(values):
                raise ValueError("labels and values differ in length")
            object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.values)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values.copy()
        return self.values.astype(dtype)

    def __getitem__(self, item):
        return self.values[item]

    def index(self) -> np.ndarray:
        return np.arange(len(self.values))


class PriceSeries(_Series):
    """Strictly positive price levels in observation order."""

    def __post_init__(self):
        super().__post_init__()
        v = self.values
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            bad = int(np.flatnonzero(~(np.isfinite(v) & (v > 0)))[0])
            raise DomainError(f"price at index {bad} is not a positive finite number: {v[bad]!r}")


class YieldSeries(_Series):
    """Log-returns ``Y_i = log P_i - log P_{i-1}``."""

    def __post_init__(self):
        super().__post_init__()
        if not np.all(np.isfinite(self.values)):
            raise DomainError("yield series contains non-finite values")
