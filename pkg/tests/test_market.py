import math

import numpy as np
import pytest

from prospect_arch import calibration, demand, market
from prospect_arch._errors import DomainError
from prospect_arch.series import PriceSeries, YieldSeries

DT = 1 / 252


def _zero_d1_curve():
    d1 = demand.PiecewisePoly((0.0,), ((0.0,), (0.0,)))
    return demand.DemandCurve(d1, demand.equity_preset().d2_slope, 0.008)


def _residual_oracle(curve, xi, nu, dt, y, y_next, eps):
    # clearing condition written out from scratch: noise + trend + excess-demand + cumulative-demand change
    dW = eps * math.sqrt(dt)
    d1 = float(curve.d1(y))
    s = float(curve.d2_slope(y))
    return nu * dW + xi * y_next + d1 * dt + s * (y_next - y)


class TestParams:
    @pytest.mark.parametrize("kw", [dict(xi=0, nu=-1), dict(xi=1, nu=0), dict(xi=1, nu=-1, dt=0)])
    def test_validation(self, kw):
        with pytest.raises(DomainError):
            market.MarketParams(**kw)

    def test_presets(self):
        assert (market.EQUITY_PARAMS.xi, market.EQUITY_PARAMS.nu) == (40.0, -27.0)
        assert (market.FX_PARAMS.xi, market.FX_PARAMS.nu) == (60.0, -20.0)
        assert market.EQUITY_PARAMS.dt == DT


class TestDerived:
    def test_g_at_equity_centre(self, equity_model):
        assert equity_model.g(0.008) == pytest.approx(27 / (math.sqrt(252) * 150), rel=1e-14)
        assert equity_model.g(0.008) == pytest.approx(0.011339, abs=5e-7)

    def test_g_at_fx_centre(self, fx_curve):
        m = market.derive_arch(fx_curve, market.FX_PARAMS)
        assert m.g(-0.002) == pytest.approx(20 / (math.sqrt(252) * 280), rel=1e-14)
        assert m.g(-0.002) == pytest.approx(0.004499, abs=1e-6)  # 0.0044996...

    def test_zero_excess_demand_drift(self):
        m = market.derive_arch(_zero_d1_curve(), market.EQUITY_PARAMS)
        for y in (0.001, 0.02, 0.1):
            s = m.curve.slope(y)
            assert m.f(y) == pytest.approx(s * y / (40 + s), rel=1e-14)
            assert 0 < m.f(y) < y

    def test_step_at_zero(self, equity_model):
        s0 = 110 * math.exp(-150 * 0.008**1.5)
        assert market.step(equity_model, 0.0, 1.0) == pytest.approx(27 / (math.sqrt(252) * (40 + s0)), rel=1e-13)

    def test_step_is_affine_in_noise(self, equity_model, rng):
        for y, e in zip(rng.uniform(-0.1, 0.1, 50), rng.normal(size=50)):
            assert market.step(equity_model, y, 0.0) == equity_model.f(y)
            diff = market.step(equity_model, y, e) - market.step(equity_model, y, 0.0)
            assert diff == pytest.approx(equity_model.g(y) * e, rel=1e-12, abs=1e-18)

    @pytest.mark.parametrize("name", ["equity", "fx"])
    def test_g_positive(self, name):
        curve = getattr(demand, f"{name}_preset")()
        params = market.EQUITY_PARAMS if name == "equity" else market.FX_PARAMS
        m = market.derive_arch(curve, params)
        assert np.all(m.g(np.linspace(-0.5, 0.5, 2001)) > 0)

    def test_mean_reversion_sign(self, equity_model):
        up = np.linspace(0.0201, 0.2, 200)
        down = np.linspace(-0.2, -0.0201, 200)
        assert np.all(equity_model.f(up) < up)
        assert np.all(equity_model.f(down) > down)

    def test_non_finite_state_rejected(self, equity_model):
        with pytest.raises(DomainError):
            market.step(equity_model, math.inf, 0.0)


class TestSurrogate:
    def test_floor(self):
        m = market.surrogate_arch((0.0,), (-1.0, 0.0, 100.0), vol_floor=1e-4)
        assert m.g(0.0) == 1e-4
        assert m.clamp_mask(np.array([0.0, 1.0])).tolist() == [True, False]
        assert m.g(1.0) == 99.0

    def test_published_coefficients_used_verbatim(self):
        f, g = calibration.published_surrogates_fx()
        m = market.surrogate_arch(f, g)
        assert m.f(0.01) == pytest.approx(0.0033, rel=1e-15)
        assert m.g(0.0) == 4.328e-3


class TestSimulate:
    def test_single_value(self, equity_model):
        ys = market.simulate_yields(equity_model, 0.003, 1, seed=5)
        assert isinstance(ys, YieldSeries) and ys.values.tolist() == [0.003]

    def test_deterministic(self, equity_model):
        a = market.simulate_yields(equity_model, 0.0, 500, seed=9, stream=2)
        b = market.simulate_yields(equity_model, 0.0, 500, seed=9, stream=2)
        np.testing.assert_array_equal(a.values, b.values)
        c = market.simulate_yields(equity_model, 0.0, 500, seed=10, stream=2)
        assert not np.array_equal(a.values, c.values)

    def test_fx_noise_free_decay(self):
        m = market.surrogate_arch((0.0, 0.33), (0.0,), vol_floor=0.0)
        ys = market.simulate_yields(m, 0.05, 11, seed=1).values
        for i, y in enumerate(ys):
            assert abs(y - 0.33**i * 0.05) <= 1e-15

    def test_prices_start(self, equity_model):
        p = market.simulate_prices(equity_model, 100.0, 101.0, 2)
        assert isinstance(p, PriceSeries) and p.values.tolist() == [100.0, 101.0]

    def test_prices_match_yields(self, equity_model):
        p = market.simulate_prices(equity_model, 1462.42, 1459.37, 400, seed=3)
        ys = market.simulate_yields(equity_model, math.log(1459.37 / 1462.42), 399, seed=3)
        np.testing.assert_allclose(np.diff(np.log(p.values)), ys.values, rtol=0, atol=1e-13)

    def test_zero_noise_zero_drift_is_flat(self):
        m = market.surrogate_arch((0.0,), (0.0,), vol_floor=0.0)
        p = market.simulate_prices(m, 10.0, 11.0, 6).values
        assert p.tolist() == [10.0, 11.0, 11.0, 11.0, 11.0, 11.0]

    def test_bad_inputs(self, equity_model):
        with pytest.raises(DomainError):
            market.simulate_prices(equity_model, 1.0, 1.0, 1)
        with pytest.raises(DomainError):
            market.simulate_prices(equity_model, -1.0, 1.0, 5)
        with pytest.raises(DomainError):
            market.simulate_yields(equity_model, 0.0, 0)


class TestClearing:
    @pytest.mark.parametrize("name", ["equity", "fx"])
    def test_residual_vanishes_on_model(self, name, rng):
        curve = getattr(demand, f"{name}_preset")()
        params = market.EQUITY_PARAMS if name == "equity" else market.FX_PARAMS
        m = market.derive_arch(curve, params)
        worst = 0.0
        for y, e in zip(rng.uniform(-0.1, 0.1, 1000), rng.normal(size=1000)):
            y_next = market.step(m, y, e)
            r = market.clearing_residual(curve, params, y, y_next, e * math.sqrt(params.dt))
            worst = max(worst, abs(r))
        assert worst < 1e-12

    def test_linear_in_next_yield(self, equity_curve):
        p = market.EQUITY_PARAMS
        y, yn, dw, d = 0.013, -0.004, 0.02, 1e-3
        base = market.clearing_residual(equity_curve, p, y, yn, dw)
        moved = market.clearing_residual(equity_curve, p, y, yn + d, dw)
        assert moved - base == pytest.approx((p.xi + equity_curve.slope(y)) * d, rel=1e-10)

    def test_matches_independent_expression(self, equity_curve, rng):
        p = market.EQUITY_PARAMS
        for y, yn, e in rng.uniform(-0.1, 0.1, (200, 3)):
            got = market.clearing_residual(equity_curve, p, y, yn, e * math.sqrt(p.dt))
            ref = _residual_oracle(equity_curve, p.xi, p.nu, p.dt, y, yn, e)
            assert got == pytest.approx(ref, rel=1e-15, abs=1e-15)
