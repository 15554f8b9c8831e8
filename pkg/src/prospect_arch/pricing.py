"""European call pricing: Black-Scholes, implied volatility, and Monte Carlo
under the risk-neutral surrogate ARCH model.

Under the pricing measure the drift polynomial plays no role; each daily step is

    log P[i+1] - log P[i] = r dt - g(Y[i])**2 / 2 + g(Y[i]) * eps[i]

with ``g`` the volatility polynomial clamped below at ``vol_floor`` and
``Y[i] = log P[i] - log P[i-1]``. Maturities given in months map to
``21 * months`` daily steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np
from scipy.special import erfc

from . import _mc_kernel
from ._errors import DomainError
from ._poly import PolyCoeffs
from .market import DEFAULT_DT, DEFAULT_VOL_FLOOR
from .rng import seed_key

__all__ = [
    "OptionSpec",
    "McResult",
    "IvSurface",
    "ImpliedVolError",
    "ARBITRAGE_BOUND",
    "NO_BRACKET",
    "VEGA_GUARD",
    "DEFAULT_GUARD",
    "SIGMA_BRACKET",
    "BENCHMARK_SPEC",
    "norm_cdf",
    "bs_call",
    "bs_log_vega",
    "bs_vega",
    "implied_vol",
    "maturity_steps",
    "simulate_terminal_prices",
    "mc_euro_call",
    "mc_euro_put",
    "iv_surface",
    "vega_map",
    "convergence_study",
    "set_threads",
]

ARBITRAGE_BOUND = "arbitrage-bound"
NO_BRACKET = "no-bracket"
VEGA_GUARD = "vega-guard"

DEFAULT_GUARD = 1e-4
SIGMA_BRACKET = (1e-4, 5.0)
_BISECT_WIDTH = 1e-10
STEPS_PER_MONTH = 21
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class OptionSpec:
    """European call: strike ``K``, maturity ``T`` (years), rate ``r``, spots ``P0, P1``.

    ``P1`` is today's price and ``log(P1 / P0)`` the initial yield state.
    ``K = 0`` is accepted for the forward (martingale) check.
    """

    K: float
    T: float
    r: float = 0.03
    P0: float = 1462.42
    P1: float = 1459.37

    def __post_init__(self):
        if not self.K >= 0:
            raise DomainError(f"strike must be non-negative, got {self.K!r}")
        if not self.T > 0:
            raise DomainError(f"maturity must be positive, got {self.T!r}")
        if not (self.P0 > 0 and self.P1 > 0):
            raise DomainError("spot prices must be positive")
        if not math.isfinite(self.r):
            raise DomainError("rate must be finite")

    @classmethod
    def from_months(cls, K, months, **kwargs):
        return cls(K=K, T=months / 12.0, **kwargs)

    @property
    def y0(self) -> float:
        return math.log(self.P1 / self.P0)


BENCHMARK_SPEC = OptionSpec.from_months(800.0, 60, r=0.03, P0=1462.42, P1=1459.37)


@dataclass(frozen=True)
class McResult:
    price: float
    stderr: float
    paths: int
    clamp_count: int


class ImpliedVolError(ValueError):
    """Implied volatility inversion failed; ``reason`` is one of the reason codes."""

    def __init__(self, reason, message=""):
        self.reason = reason
        super().__init__(f"{reason}: {message}" if message else reason)


# -- Black-Scholes -------------------------------------------------------------


def norm_cdf(x):
    """Standard normal CDF through ``erfc`` (accurate far into the lower tail)."""
    return 0.5 * erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))


def _check_bs(P, K, T, sigma):
    for name, v in (("P", P), ("K", K), ("T", T), ("sigma", sigma)):
        if not np.all(np.asarray(v) > 0):
            raise DomainError(f"{name} must be positive")


def _d1(P, K, r, T, sigma):
    return (np.log(P / K) + (r + 0.5 * sigma * sigma) * T) / (sigma * np.sqrt(T))


def _out(x, *args):
    return float(x) if all(np.ndim(a) == 0 for a in args) else x


def bs_call(P, K, r, T, sigma):
    """Black-Scholes European call price."""
    _check_bs(P, K, T, sigma)
    P, K, r, T, sigma = (np.asarray(a, dtype=float) for a in (P, K, r, T, sigma))
    d1 = _d1(P, K, r, T, sigma)
    d2 = d1 - sigma * np.sqrt(T)
    price = P * norm_cdf(d1) - np.exp(-r * T) * K * norm_cdf(d2)
    return _out(price, P, K, r, T, sigma)


def bs_log_vega(P, K, r, T, sigma):
    """``log(P * phi(d1) * sqrt(T))``, finite even where Vega underflows."""
    _check_bs(P, K, T, sigma)
    P, K, r, T, sigma = (np.asarray(a, dtype=float) for a in (P, K, r, T, sigma))
    d1 = _d1(P, K, r, T, sigma)
    return _out(np.log(P) - 0.5 * d1 * d1 - _HALF_LOG_2PI + 0.5 * np.log(T), P, K, r, T, sigma)


def bs_vega(P, K, r, T, sigma):
    """Black-Scholes Vega ``P * phi(d1) * sqrt(T)``, evaluated in log space."""
    return _out(np.exp(bs_log_vega(P, K, r, T, sigma)), P, K, r, T, sigma)


def implied_vol(price, P, K, r, T, guard=DEFAULT_GUARD, bracket=SIGMA_BRACKET) -> float:
    """Bisection inversion of :func:`bs_call` on ``bracket``.

    Raises
    ------
    ImpliedVolError
        ``arbitrage-bound`` if ``price`` is at or below intrinsic value or at or
        above the spot; ``no-bracket`` if the price is not attained on the
        bracket; ``vega-guard`` if Vega at the root is below ``guard``.
    """
    if not math.isfinite(price):
        raise DomainError("price must be finite")
    _check_bs(P, K, T, 1.0)
    lower = max(P - K * math.exp(-r * T), 0.0)
    if price <= lower or price >= P:
        raise ImpliedVolError(ARBITRAGE_BOUND, f"price {price!r} outside ({lower!r}, {P!r})")
    lo, hi = bracket
    if not (bs_call(P, K, r, T, lo) <= price <= bs_call(P, K, r, T, hi)):
        raise ImpliedVolError(NO_BRACKET, f"price {price!r} not attained for sigma in {bracket}")
    while hi - lo > _BISECT_WIDTH:
        mid = 0.5 * (lo + hi)
        if bs_call(P, K, r, T, mid) < price:
            lo = mid
        else:
            hi = mid
    sigma = 0.5 * (lo + hi)
    vega = bs_vega(P, K, r, T, sigma)
    if vega < guard:
        raise ImpliedVolError(VEGA_GUARD, f"vega {vega:.3g} below guard {guard:.3g}")
    return sigma


# -- Monte Carlo ---------------------------------------------------------------


def set_threads(n: int | None):
    """Cap the worker threads used by the path kernel (results do not change)."""
    if n is not None:
        nb.set_num_threads(max(1, min(int(n), nb.config.NUMBA_NUM_THREADS)))


def maturity_steps(T: float, dt: float = DEFAULT_DT) -> int:
    steps = round(T / dt)
    if steps < 1 or abs(steps * dt - T) > 1e-9 * max(1.0, T):
        raise DomainError(f"maturity {T!r} is not a whole number of steps of {dt!r}")
    return steps


def _g_array(g_tilde):
    coef = np.asarray(g_tilde.coefficients if isinstance(g_tilde, PolyCoeffs) else g_tilde, dtype=float)
    if coef.ndim != 1 or coef.size == 0:
        raise DomainError("volatility polynomial needs at least one coefficient")
    return np.ascontiguousarray(coef)


def simulate_terminal_prices(
    g_tilde,
    spec: OptionSpec,
    paths: int,
    seed=0,
    maturities=None,
    dt: float = DEFAULT_DT,
    vol_floor: float = DEFAULT_VOL_FLOOR,
    vol_cap: float | None = None,
    antithetic: bool = False,
):
    """Risk-neutral prices at each maturity (years; default ``spec.T``).

    Returns
    -------
    prices : ndarray, shape (paths, len(maturities))
    clamp_count : int
        Number of path-steps where the volatility clamp was active.
    """
    if paths < 1:
        raise DomainError("need at least one path")
    if antithetic and paths % 2:
        raise DomainError("antithetic sampling needs an even number of paths")
    mats = [spec.T] if maturities is None else list(maturities)
    steps = np.array([maturity_steps(t, dt) for t in mats], dtype=np.int64)
    rec = np.unique(steps)
    k0, k1 = seed_key(seed)
    logp, clamps = _mc_kernel.simulate_log_prices(
        k0,
        k1,
        0,
        int(paths),
        int(rec[-1]),
        rec,
        _g_array(g_tilde),
        float(vol_floor),
        math.inf if vol_cap is None else float(vol_cap),
        spec.r * dt,
        spec.y0,
        math.log(spec.P1),
        bool(antithetic),
    )
    cols = np.searchsorted(rec, steps)
    return np.exp(logp[:, cols]), int(clamps)


def _discounted_stats(payoff, r, T):
    n = len(payoff)
    mean = math.fsum(payoff) / n
    if n > 1:
        dev = payoff - mean
        std = math.sqrt(math.fsum(dev * dev) / (n - 1))
    else:
        std = 0.0
    disc = math.exp(-r * T)
    return disc * mean, disc * std / math.sqrt(n)


def mc_euro_call(
    f_tilde,
    g_tilde,
    spec: OptionSpec,
    paths: int = 200_000,
    seed=0,
    dt: float = DEFAULT_DT,
    vol_floor: float = DEFAULT_VOL_FLOOR,
    vol_cap: float | None = None,
    antithetic: bool = False,
) -> McResult:
    """Monte Carlo call price under the risk-neutral surrogate model.

    ``f_tilde`` is accepted for symmetry with the physical model and ignored:
    the risk-neutral drift is ``r - sigma**2 / 2``.
    """
    del f_tilde
    prices, clamps = simulate_terminal_prices(
        g_tilde, spec, paths, seed, dt=dt, vol_floor=vol_floor, vol_cap=vol_cap, antithetic=antithetic
    )
    price, se = _discounted_stats(np.maximum(prices[:, 0] - spec.K, 0.0), spec.r, spec.T)
    return McResult(price=price, stderr=se, paths=int(paths), clamp_count=clamps)


def mc_euro_put(
    f_tilde,
    g_tilde,
    spec: OptionSpec,
    paths: int = 200_000,
    seed=0,
    dt: float = DEFAULT_DT,
    vol_floor: float = DEFAULT_VOL_FLOOR,
    vol_cap: float | None = None,
    antithetic: bool = False,
) -> McResult:
    """Put counterpart of :func:`mc_euro_call` on the identical paths."""
    del f_tilde
    prices, clamps = simulate_terminal_prices(
        g_tilde, spec, paths, seed, dt=dt, vol_floor=vol_floor, vol_cap=vol_cap, antithetic=antithetic
    )
    price, se = _discounted_stats(np.maximum(spec.K - prices[:, 0], 0.0), spec.r, spec.T)
    return McResult(price=price, stderr=se, paths=int(paths), clamp_count=clamps)


@dataclass(frozen=True, eq=False)
class IvSurface:
    """Implied vols on a maturity x strike grid; rows are maturities."""

    strikes: np.ndarray
    maturities_months: np.ndarray
    iv: np.ndarray
    valid: np.ndarray
    reason: np.ndarray
    vega: np.ndarray
    price: np.ndarray
    stderr: np.ndarray

    def to_table(self):
        from .data import Table

        rows = []
        for i, t in enumerate(self.maturities_months):
            for j, k in enumerate(self.strikes):
                rows.append(
                    (
                        float(k),
                        float(t),
                        float(self.iv[i, j]),
                        bool(self.valid[i, j]),
                        str(self.reason[i, j]),
                        float(self.vega[i, j]),
                    )
                )
        return Table(("K", "T_months", "iv", "valid", "reason", "vega"), rows)


def iv_surface(
    f_tilde,
    g_tilde,
    base: OptionSpec,
    k_grid,
    t_grid_months,
    paths: int = 200_000,
    seed=0,
    guard: float = DEFAULT_GUARD,
    dt: float = DEFAULT_DT,
    vol_floor: float = DEFAULT_VOL_FLOOR,
    antithetic: bool = False,
) -> IvSurface:
    """Monte Carlo implied-vol surface; failed cells carry a reason, never a number.

    All cells share one set of paths (simulated once to the longest maturity).
    ``base.K`` and ``base.T`` are ignored.
    """
    del f_tilde
    strikes = np.atleast_1d(np.asarray(k_grid, dtype=float))
    months = np.atleast_1d(np.asarray(t_grid_months, dtype=float))
    if strikes.size == 0 or months.size == 0:
        raise DomainError("strike and maturity grids must be non-empty")
    if np.any(strikes <= 0):
        raise DomainError("strikes must be positive")
    years = months / 12.0
    terminal, _ = simulate_terminal_prices(
        g_tilde, base, paths, seed, maturities=years, dt=dt, vol_floor=vol_floor, antithetic=antithetic
    )
    shape = (months.size, strikes.size)
    iv = np.full(shape, np.nan)
    valid = np.zeros(shape, dtype=bool)
    reason = np.full(shape, "", dtype=object)
    vega = np.full(shape, np.nan)
    price = np.empty(shape)
    stderr = np.empty(shape)
    for i, T in enumerate(years):
        for j, K in enumerate(strikes):
            c, se = _discounted_stats(np.maximum(terminal[:, i] - K, 0.0), base.r, T)
            price[i, j], stderr[i, j] = c, se
            try:
                sigma = implied_vol(c, base.P1, K, base.r, T, guard=guard)
            except ImpliedVolError as err:
                reason[i, j] = err.reason
                if err.reason == VEGA_GUARD:
                    vega[i, j] = _vega_at_root(c, base.P1, K, base.r, T)
                continue
            iv[i, j] = sigma
            valid[i, j] = True
            vega[i, j] = bs_vega(base.P1, K, base.r, T, sigma)
    return IvSurface(strikes, months, iv, valid, reason, vega, price, stderr)


def _vega_at_root(price, P, K, r, T):
    try:
        sigma = implied_vol(price, P, K, r, T, guard=0.0)
    except ImpliedVolError:
        return math.nan
    return bs_vega(P, K, r, T, sigma)


def vega_map(P, r, sigma, k_grid, t_grid_months) -> np.ndarray:
    """Black-Scholes Vega on a maturity (rows, months) x strike (columns) grid."""
    strikes = np.atleast_1d(np.asarray(k_grid, dtype=float))
    months = np.atleast_1d(np.asarray(t_grid_months, dtype=float))
    if strikes.size == 0 or months.size == 0:
        raise DomainError("strike and maturity grids must be non-empty")
    return bs_vega(P, strikes[None, :], r, months[:, None] / 12.0, sigma)


def convergence_study(
    f_tilde,
    g_tilde,
    spec: OptionSpec = BENCHMARK_SPEC,
    path_counts=(10_000, 100_000, 1_000_000),
    trials: int = 20,
    seed=0,
    seeds=None,
    **mc_kwargs,
) -> list[tuple[int, float]]:
    """Sample standard deviation of the MC price over independently seeded trials.

    Trial ``t`` uses seed ``(seed, t)`` unless ``seeds`` lists them explicitly.
    """
    if seeds is None:
        if trials < 2:
            raise DomainError("need at least two trials")
        seeds = [(seed, t) for t in range(trials)]
    elif len(seeds) < 2:
        raise DomainError("need at least two trials")
    table = []
    for n in path_counts:
        prices = [mc_euro_call(f_tilde, g_tilde, spec, n, s, **mc_kwargs).price for s in seeds]
        table.append((int(n), float(np.std(prices, ddof=1))))
    return table
