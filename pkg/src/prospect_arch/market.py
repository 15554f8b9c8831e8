"""Market clearing and the ARCH yield recursion it implies.

Noise traders (``nu * W``), trend chasers (``xi * log P``) and the two prospect
trader types must hold a constant total position. Differencing that condition
over one step ``dt`` and solving for the next yield gives

    Y[i+1] = f(Y[i]) + g(Y[i]) * eps[i]

    f(y) = (D2'(y) * y - D1(y) * dt) / (xi + D2'(y))
    g(y) = -nu * sqrt(dt) / (xi + D2'(y))

with ``eps[i] = dW[i] / sqrt(dt)`` standard normal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._errors import DomainError
from ._poly import PolyCoeffs
from .demand import DemandCurve
from .rng import CounterStreams
from .series import PriceSeries, YieldSeries

__all__ = [
    "MarketParams",
    "ArchModel",
    "DerivedArch",
    "SurrogateArch",
    "EQUITY_PARAMS",
    "FX_PARAMS",
    "DEFAULT_DT",
    "DEFAULT_VOL_FLOOR",
    "derive_arch",
    "surrogate_arch",
    "step",
    "simulate_yields",
    "simulate_prices",
    "clearing_residual",
]

DEFAULT_DT = 1.0 / 252.0
DEFAULT_VOL_FLOOR = 1e-4


@dataclass(frozen=True)
class MarketParams:
    """Trend-chasing weight ``xi > 0``, noise weight ``nu < 0``, step ``dt`` (years).

    ``clearing_const`` is the constant total position; it drops out once the
    clearing condition is differenced and is kept for the record only.
    """

    xi: float
    nu: float
    dt: float = DEFAULT_DT
    clearing_const: float = 0.0

    def __post_init__(self):
        if not self.xi > 0:
            raise DomainError(f"xi must be positive, got {self.xi!r}")
        if not self.nu < 0:
            raise DomainError(f"nu must be negative, got {self.nu!r}")
        if not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt!r}")


EQUITY_PARAMS = MarketParams(xi=40.0, nu=-27.0)
FX_PARAMS = MarketParams(xi=60.0, nu=-20.0)


class ArchModel:
    """``Y[i+1] = f(Y[i]) + g(Y[i]) * eps``. Subclasses supply ``f`` and ``g``."""

    variant = "abstract"
    vol_floor = 0.0

    def f(self, y):
        raise NotImplementedError

    def g(self, y):
        raise NotImplementedError

    def clamp_mask(self, y):
        """Where the volatility floor is binding."""
        return np.zeros(np.shape(y), dtype=bool)

    def step(self, y, eps):
        return self.f(y) + self.g(y) * eps


class DerivedArch(ArchModel):
    """ARCH model obtained from demand curves through market clearing."""

    variant = "derived"

    def __init__(self, curve: DemandCurve, params: MarketParams):
        self.curve = curve
        self.params = params
        self._noise_scale = -params.nu * math.sqrt(params.dt)

    def f(self, y):
        s = self.curve.slope(y)
        return (s * y - self.curve.d1_rate(y) * self.params.dt) / (self.params.xi + s)

    def g(self, y):
        return self._noise_scale / (self.params.xi + self.curve.slope(y))

    def __repr__(self):
        p = self.params
        return f"DerivedArch(curve={self.curve.name!r}, xi={p.xi}, nu={p.nu}, dt={p.dt})"


class SurrogateArch(ArchModel):
    """Polynomial drift and volatility, ``g`` floored at ``vol_floor``."""

    variant = "surrogate"

    def __init__(self, f_tilde, g_tilde, dt=DEFAULT_DT, vol_floor=DEFAULT_VOL_FLOOR):
        self.f_tilde = f_tilde if isinstance(f_tilde, PolyCoeffs) else PolyCoeffs(f_tilde)
        self.g_tilde = g_tilde if isinstance(g_tilde, PolyCoeffs) else PolyCoeffs(g_tilde)
        if not dt > 0:
            raise DomainError("dt must be positive")
        if not vol_floor >= 0:
            raise DomainError("vol_floor must be non-negative")
        self.dt = dt
        self.vol_floor = float(vol_floor)

    def f(self, y):
        return self.f_tilde(y)

    def g(self, y):
        return np.maximum(self.g_tilde(y), self.vol_floor) if np.ndim(y) else max(self.g_tilde(y), self.vol_floor)

    def clamp_mask(self, y):
        return np.asarray(self.g_tilde(np.asarray(y, dtype=float)) < self.vol_floor)

    def __repr__(self):
        return (
            f"SurrogateArch(f_tilde={list(self.f_tilde.coefficients)}, "
            f"g_tilde={list(self.g_tilde.coefficients)}, dt={self.dt}, vol_floor={self.vol_floor})"
        )


def derive_arch(curve: DemandCurve, params: MarketParams) -> DerivedArch:
    return DerivedArch(curve, params)


def surrogate_arch(f_tilde, g_tilde, dt=DEFAULT_DT, vol_floor=DEFAULT_VOL_FLOOR) -> SurrogateArch:
    return SurrogateArch(f_tilde, g_tilde, dt=dt, vol_floor=vol_floor)


def step(model: ArchModel, y, eps):
    """One transition: ``f(y) + g(y) * eps``."""
    if not np.all(np.isfinite(y)):
        raise DomainError("yield must be finite")
    return model.step(y, eps)


def simulate_yields(model: ArchModel, y0: float, n: int, seed=0, stream: int = 0) -> YieldSeries:
    """Iterate the recursion from ``y0``; ``n`` values including ``y0``.

    Transition ``i`` (producing value ``i + 1``) uses draw ``i`` of substream
    ``stream`` under ``seed``.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    if not math.isfinite(y0):
        raise DomainError("y0 must be finite")
    eps = CounterStreams(seed).normals(stream, 0, n - 1)
    out = np.empty(n)
    y = out[0] = float(y0)
    for i in range(n - 1):
        y = out[i + 1] = float(model.step(y, eps[i]))
    return YieldSeries(out)


def simulate_prices(model: ArchModel, p0: float, p1: float, n: int, seed=0, stream: int = 0) -> PriceSeries:
    """Price path starting ``p0, p1``; the first yield is ``log(p1 / p0)``."""
    if not (p0 > 0 and p1 > 0):
        raise DomainError("starting prices must be positive")
    if n < 2:
        raise DomainError("n must be at least 2")
    ys = simulate_yields(model, math.log(p1 / p0), n - 1, seed=seed, stream=stream).values
    out = np.empty(n)
    out[0], out[1] = p0, p1
    for i in range(1, n - 1):
        out[i + 1] = out[i] * math.exp(ys[i])
    return PriceSeries(out)


def clearing_residual(curve: DemandCurve, params: MarketParams, y_i, y_next, dW):
    """Left-hand side of the differenced clearing condition (zero on-model)."""
    return (
        params.nu * dW
        + params.xi * y_next
        + curve.d1_rate(y_i) * params.dt
        + curve.slope(y_i) * (y_next - y_i)
    )
