"""Command-line front end.

Subcommands: simulate, calibrate, price, ivsurface, vegamap, convergence.
Exit codes: 0 success, 1 runtime failure, 2 usage/configuration error.

Every run writes its fully resolved configuration as one ``# config`` JSON
line on stderr, so any output can be regenerated from its own log.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import calibration, data, demand, market, pricing

EQUITY_SPOTS = (1462.42, 1459.37)
FX_SPOTS = (0.6493, 0.6492)


class ConfigError(Exception):
    pass


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _surrogates(preset, g_coeffs=None):
    if preset == "equity":
        f, g = calibration.published_surrogates_equity()
    elif preset == "fx":
        f, g = calibration.published_surrogates_fx()
    else:
        raise ConfigError(f"pricing needs a surrogate preset (equity|fx), got {preset!r}")
    if g_coeffs:
        g = calibration.PolyCoeffs(tuple(g_coeffs))
    return f, g


def _require(cond, message):
    if not cond:
        raise ConfigError(message)


def _emit(table, output):
    if output in (None, "-"):
        data.write_csv(table, sys.stdout)
    else:
        data.write_csv(table, output)


def _info(args, *parts):
    # keep stdout clean when the CSV goes there
    stream = sys.stderr if args.output in (None, "-") else sys.stdout
    print(*parts, file=stream)


# -- subcommands -----------------------------------------------------------------


def cmd_simulate(args):
    preset = args.preset
    if preset in ("equity", "fx"):
        spots = EQUITY_SPOTS if preset == "equity" else FX_SPOTS
        params = market.EQUITY_PARAMS if preset == "equity" else market.FX_PARAMS
        model_kind = args.model
    else:
        _require(Path(preset).is_file(), f"curve file not found: {preset}")
        spots = EQUITY_SPOTS
        params = None
        model_kind = "derived"
    args.p0 = spots[0] if args.p0 is None else args.p0
    args.p1 = spots[1] if args.p1 is None else args.p1
    args.model = model_kind
    _require(args.n >= 2, "--n must be at least 2")
    _require(args.p0 > 0 and args.p1 > 0, "--p0 and --p1 must be positive")
    _require(args.dt > 0, "--dt must be positive")
    _require(args.vol_floor >= 0, "--vol-floor must be non-negative")
    if model_kind == "derived":
        curve = demand.read_curve_file(preset) if params is None else (
            demand.equity_preset() if preset == "equity" else demand.fx_preset()
        )
        xi = args.xi if args.xi is not None else (params.xi if params else None)
        nu = args.nu if args.nu is not None else (params.nu if params else None)
        _require(xi is not None and nu is not None, "--xi and --nu are required with a curve file")
        _require(xi > 0, "--xi must be positive")
        _require(nu < 0, "--nu must be negative")
        args.xi, args.nu = xi, nu
        model = market.derive_arch(curve, market.MarketParams(xi, nu, args.dt))
    else:
        f, g = _surrogates(preset)
        model = market.surrogate_arch(f, g, dt=args.dt, vol_floor=args.vol_floor)
    _log_config(args)
    prices = market.simulate_prices(model, args.p0, args.p1, args.n, seed=args.seed, stream=args.stream)
    _emit(data.series_table(prices), args.output)
    v = prices.values
    clamps = int(np.count_nonzero(model.clamp_mask(np.diff(np.log(v))[:-1])))
    _info(args, f"path: n={len(v)} min={float(v.min())!r} max={float(v.max())!r} final={float(v[-1])!r} vol_clamps={clamps}")
    return 0


def cmd_calibrate(args):
    _require(Path(args.input).is_file(), f"input file not found: {args.input}")
    _require(args.gamma > 0, "--gamma must be positive")
    _require(args.grid_points >= 1, "--grid-points must be at least 1")
    _require(args.S is None or args.S >= 3, "--S must be at least 3")
    _log_config(args)
    prices = data.read_price_csv(args.input)
    if args.S is not None:
        prices = data.tail(prices, args.S)
    yields = calibration.log_returns(prices)
    grid = calibration.default_grid(yields, points=args.grid_points)
    est = calibration.estimate_curves(yields, grid, gamma=args.gamma, g2_floor=args.g2_floor)
    _emit(est.to_table(), args.output)
    _info(
        args,
        f"calibrated: S={len(prices)} h={est.h!r} valid={int(est.valid.sum())}/{len(est)} "
        f"clamped={int(est.clamped.sum())}",
    )
    return 0


def _spec(args, K, months):
    return pricing.OptionSpec.from_months(K, months, r=args.r, P0=args.p0, P1=args.p1)


def _check_pricing(args):
    _require(args.paths >= 1, "--paths must be at least 1")
    _require(args.p0 > 0 and args.p1 > 0, "--p0 and --p1 must be positive")
    _require(args.vol_floor >= 0, "--vol-floor must be non-negative")
    _require(not (args.antithetic and args.paths % 2), "--antithetic needs an even --paths")
    pricing.set_threads(args.threads)


def cmd_price(args):
    _require(args.K >= 0, "--K must be non-negative")
    _require(args.T_months > 0, "--T-months must be positive")
    _check_pricing(args)
    f, g = _surrogates(args.preset, args.g_coeffs)
    _log_config(args)
    res = pricing.mc_euro_call(
        f, g, _spec(args, args.K, args.T_months), args.paths, args.seed,
        vol_floor=args.vol_floor, antithetic=args.antithetic,
    )
    table = data.Table(
        ("K", "T_months", "price", "stderr", "paths", "vol_clamps"),
        [(float(args.K), float(args.T_months), res.price, res.stderr, res.paths, res.clamp_count)],
    )
    if args.output in (None, "-"):
        print(f"price={res.price!r} stderr={res.stderr!r} paths={res.paths} vol_clamps={res.clamp_count}")
    else:
        data.write_csv(table, args.output)
    return 0


def _grid(lo, hi, count=None, step=None):
    if count is not None:
        _require(count >= 1, "grid count must be at least 1")
        return np.linspace(lo, hi, count) if count > 1 else np.array([lo])
    _require(step > 0, "grid step must be positive")
    return np.arange(lo, hi + 0.5 * step, step)


def cmd_ivsurface(args):
    _require(0 < args.K_min <= args.K_max, "need 0 < --K-min <= --K-max")
    _require(0 < args.T_min <= args.T_max, "need 0 < --T-min <= --T-max")
    _require(args.guard >= 0, "--guard must be non-negative")
    _check_pricing(args)
    strikes = _grid(args.K_min, args.K_max, count=args.K_count)
    months = _grid(args.T_min, args.T_max, step=args.T_step)
    for m in months:
        _require(abs(m * 21 - round(m * 21)) < 1e-9, f"maturity {m} months is not a whole number of days")
    f, g = _surrogates(args.preset, args.g_coeffs)
    _log_config(args)
    surf = pricing.iv_surface(
        f, g, _spec(args, 1.0, months[0]), strikes, months, args.paths, args.seed,
        guard=args.guard, vol_floor=args.vol_floor, antithetic=args.antithetic,
    )
    _emit(surf.to_table(), args.output)
    _info(args, f"surface: {int(surf.valid.sum())}/{surf.valid.size} cells valid")
    return 0


def cmd_vegamap(args):
    _require(args.sigma > 0 and args.P > 0, "--sigma and --P must be positive")
    _require(0 < args.K_min <= args.K_max, "need 0 < --K-min <= --K-max")
    _require(0 < args.T_min <= args.T_max, "need 0 < --T-min <= --T-max")
    strikes = _grid(args.K_min, args.K_max, step=args.K_step)
    months = _grid(args.T_min, args.T_max, step=args.T_step)
    _log_config(args)
    vegas = pricing.vega_map(args.P, args.r, args.sigma, strikes, months)
    _emit(data.vega_table(strikes, months, vegas), args.output)
    return 0


def cmd_convergence(args):
    _require(args.trials >= 2, "--trials must be at least 2")
    _require(args.path_counts and min(args.path_counts) >= 1, "--path-counts must be positive")
    _require(args.T_months > 0 and args.K >= 0, "need --T-months > 0 and --K >= 0")
    args.paths = min(args.path_counts)
    _check_pricing(args)
    f, g = _surrogates(args.preset, args.g_coeffs)
    _log_config(args)
    study = pricing.convergence_study(
        f, g, _spec(args, args.K, args.T_months), args.path_counts, args.trials, args.seed,
        vol_floor=args.vol_floor, antithetic=args.antithetic,
    )
    _emit(data.convergence_table(study), args.output)
    return 0


# -- parser ------------------------------------------------------------------------


def _log_config(args):
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    print("# config " + json.dumps(cfg, default=str), file=sys.stderr)


def _pricing_flags(p, K=800.0, T_months=60.0):
    p.add_argument("--preset", default="equity", help="surrogate model: equity or fx (default equity)")
    p.add_argument("--g-coeffs", type=_floats, default=None, help="override volatility polynomial, constant first")
    p.add_argument("--r", type=float, default=0.03)
    p.add_argument("--p0", type=float, default=EQUITY_SPOTS[0])
    p.add_argument("--p1", type=float, default=EQUITY_SPOTS[1])
    p.add_argument("--paths", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--vol-floor", type=float, default=market.DEFAULT_VOL_FLOOR)
    p.add_argument("--antithetic", action="store_true")
    p.add_argument("--threads", type=int, default=None, help="cap worker threads (results unchanged)")
    if K is not None:
        p.add_argument("--K", type=float, default=K)
        p.add_argument("--T-months", type=float, default=T_months)


def build_parser():
    parser = argparse.ArgumentParser(prog="prospect-arch", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a price path")
    p.add_argument("--preset", default="fx", help="equity, fx, or a curve file path")
    p.add_argument("--model", choices=("surrogate", "derived"), default="surrogate")
    p.add_argument("--xi", type=float, default=None)
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--dt", type=float, default=market.DEFAULT_DT)
    p.add_argument("--p0", type=float, default=None)
    p.add_argument("--p1", type=float, default=None)
    p.add_argument("--n", type=int, default=1500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--vol-floor", type=float, default=market.DEFAULT_VOL_FLOOR)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="local polynomial estimate of f and g^2 from prices")
    p.add_argument("--input", required=True)
    p.add_argument("--S", type=int, default=None, help="use the last S prices")
    p.add_argument("--gamma", type=float, default=3.5)
    p.add_argument("--grid-points", type=int, default=101)
    p.add_argument("--g2-floor", type=float, default=calibration.G2_FLOOR)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("price", help="Monte Carlo European call price")
    _pricing_flags(p)
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("ivsurface", help="implied volatility surface")
    _pricing_flags(p, K=None)
    p.add_argument("--K-min", type=float, default=1100.0)
    p.add_argument("--K-max", type=float, default=2000.0)
    p.add_argument("--K-count", type=int, default=10)
    p.add_argument("--T-min", type=float, default=6.0)
    p.add_argument("--T-max", type=float, default=60.0)
    p.add_argument("--T-step", type=float, default=6.0)
    p.add_argument("--guard", type=float, default=pricing.DEFAULT_GUARD)
    p.set_defaults(func=cmd_ivsurface)

    p = sub.add_parser("vegamap", help="Black-Scholes Vega over strike x maturity")
    p.add_argument("--sigma", type=float, default=0.15)
    p.add_argument("--P", type=float, default=1459.37)
    p.add_argument("--r", type=float, default=0.03)
    p.add_argument("--K-min", type=float, default=800.0)
    p.add_argument("--K-max", type=float, default=2200.0)
    p.add_argument("--K-step", type=float, default=100.0)
    p.add_argument("--T-min", type=float, default=1.0)
    p.add_argument("--T-max", type=float, default=60.0)
    p.add_argument("--T-step", type=float, default=1.0)
    p.set_defaults(func=cmd_vegamap)

    p = sub.add_parser("convergence", help="std-dev of MC prices versus path count")
    _pricing_flags(p)
    p.add_argument("--path-counts", type=_ints, default=[10_000, 50_000, 100_000, 500_000, 1_000_000])
    p.add_argument("--trials", type=int, default=20)
    p.set_defaults(func=cmd_convergence)

    for action in sub.choices.values():
        action.add_argument("--output", default=None, help="output file (default stdout)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        parser.error(str(err))
    except (ValueError, OSError, ArithmeticError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
