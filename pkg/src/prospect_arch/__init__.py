"""ARCH price dynamics from prospect-theory demand curves.

Modules
-------
demand       demand curves D1, D2' and the cumulative D2
market       market-clearing ARCH recursion and path simulation
calibration  local quadratic regression and polynomial surrogates
pricing      Monte Carlo option pricing, implied vols, Vega maps
data         CSV input and output
"""

from ._errors import CsvFormatError, DegenerateDataError, DomainError, RangeError, SingularFitError
from ._poly import PolyCoeffs
from .calibration import LocalQuadraticARCH, PolynomialSurrogate, estimate_curves, fit_poly, local_fit
from .demand import DemandCurve, equity_preset, fx_preset, read_curve_file, write_curve_file
from .market import MarketParams, derive_arch, simulate_prices, simulate_yields, step, surrogate_arch
from .pricing import OptionSpec, bs_call, bs_vega, implied_vol, iv_surface, mc_euro_call, mc_euro_put, vega_map
from .rng import CounterStreams
from .series import PriceSeries, YieldSeries

__version__ = "0.1.0"

__all__ = [
    "CounterStreams",
    "CsvFormatError",
    "DegenerateDataError",
    "DemandCurve",
    "DomainError",
    "LocalQuadraticARCH",
    "MarketParams",
    "OptionSpec",
    "PolyCoeffs",
    "PolynomialSurrogate",
    "PriceSeries",
    "RangeError",
    "SingularFitError",
    "YieldSeries",
    "bs_call",
    "bs_vega",
    "derive_arch",
    "equity_preset",
    "estimate_curves",
    "fit_poly",
    "fx_preset",
    "implied_vol",
    "iv_surface",
    "local_fit",
    "mc_euro_call",
    "mc_euro_put",
    "read_curve_file",
    "simulate_prices",
    "simulate_yields",
    "step",
    "surrogate_arch",
    "vega_map",
    "write_curve_file",
]
