import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from prospect_arch import calibration as cal
from prospect_arch import demand, market
from prospect_arch._errors import DegenerateDataError, DomainError, SingularFitError


@pytest.fixture(scope="module")
def equity_yields():
    model = market.derive_arch(demand.equity_preset(), market.EQUITY_PARAMS)
    return model, market.simulate_yields(model, 0.0, 20_000, seed=0).values


class TestBasics:
    def test_log_returns(self):
        assert cal.log_returns([1.0, math.e]).values == pytest.approx([1.0], abs=1e-15)
        assert cal.log_returns([5.0, 5.0, 5.0]).values.tolist() == [0.0, 0.0]
        got = cal.log_returns([100.0, 101.0, 99.0]).values
        assert got.tolist() == pytest.approx([math.log(1.01), math.log(99 / 101)], rel=1e-14)

    def test_log_returns_rejects_bad_prices(self):
        with pytest.raises(DomainError):
            cal.log_returns([1.0, -1.0])
        with pytest.raises(DomainError):
            cal.log_returns([1.0])

    def test_bandwidth(self):
        y = np.array([-0.05, 0.0, 0.05])
        assert cal.bandwidth(y, 2) == pytest.approx(0.05)
        assert cal.bandwidth(y, 4) == pytest.approx(cal.bandwidth(y, 2) / 2)
        with pytest.raises(DomainError):
            cal.bandwidth(y, 0)
        with pytest.raises(DegenerateDataError):
            cal.bandwidth(np.zeros(5), 2)

    def test_default_grid(self):
        g = cal.default_grid(np.array([-1.0, 1.0]))
        assert len(g) == 101 and g[0] == pytest.approx(-0.98) and g[-1] == pytest.approx(0.98)


class TestLocalFit:
    def test_constant_response(self):
        pred = np.linspace(-0.03, 0.03, 200)
        c = 0.004
        fit = cal.local_fit_pairs(pred, np.full(200, c), 0.001, 0.01)
        a1, b1 = fit
        assert b1 == pytest.approx(c, rel=1e-12)
        assert a1 == pytest.approx(c * c, rel=1e-12)
        assert a1 - b1 * b1 == pytest.approx(0.0, abs=1e-17)

    def test_affine_reproduction(self, rng):
        pred = rng.normal(0, 0.01, 500)
        a, b = 0.0007, -0.4
        resp = a + b * pred
        for x in np.linspace(-0.02, 0.02, 9):
            _, b1 = cal.local_fit_pairs(pred, resp, x, 0.008)
            assert abs(b1 - (a + b * x)) < 1e3 * np.finfo(float).eps * max(1.0, abs(a + b * x))

    @settings(max_examples=50, deadline=None)
    @given(
        a=st.floats(-0.01, 0.01),
        b=st.floats(-0.9, 0.9),
        x=st.floats(-0.02, 0.02),
        seed=st.integers(0, 2**31),
    )
    def test_affine_reproduction_property(self, a, b, x, seed):
        pred = np.random.default_rng(seed).uniform(-0.03, 0.03, 200)
        _, b1 = cal.local_fit_pairs(pred, a + b * pred, x, 0.01)
        assert abs(b1 - (a + b * x)) < 1e3 * np.finfo(float).eps

    def test_kernel_locality(self, rng):
        pred = rng.normal(0, 0.01, 300)
        resp = rng.normal(0, 0.01, 300)
        h = 0.005
        pred[0] = 12 * h  # weight at x=0 is ~1e-32
        before = cal.local_fit_pairs(pred, resp, 0.0, h)
        pred[0] = 15 * h
        resp[0] = 0.5
        after = cal.local_fit_pairs(pred, resp, 0.0, h)
        assert abs(after.alpha1 - before.alpha1) < 1e-9
        assert abs(after.beta1 - before.beta1) < 1e-9

    def test_singular_design(self):
        with pytest.raises(SingularFitError):
            cal.local_fit_pairs(np.zeros(10), np.ones(10), 0.0, 0.1)
        with pytest.raises(SingularFitError):
            cal.local_fit_pairs(np.linspace(0, 1, 10), np.ones(10), 0.5, 0.1, min_weight=1e9)

    def test_local_fit_uses_lagged_pairs(self, rng):
        y = rng.normal(0, 0.01, 100)
        fit = cal.local_fit(y, 0.0, 0.01)
        ref = cal.local_fit_pairs(y[:-1], y[1:], 0.0, 0.01)
        assert tuple(fit) == tuple(ref)


class TestEstimateCurves:
    def test_single_point_grid(self, rng):
        y = rng.normal(0, 0.01, 400)
        h = cal.bandwidth(y, 3.5)
        est = cal.estimate_curves(y, [0.001], gamma=3.5)
        a1, b1 = cal.local_fit(y, 0.001, h)
        assert est.f_hat[0] == b1 and est.g2_hat[0] == a1 - b1 * b1
        assert est.h == h and est.gamma == 3.5 and est.sample_size == 400

    def test_clamp_flags(self, rng):
        y = rng.normal(0, 0.01, 400)
        est = cal.estimate_curves(y, gamma=3.5, g2_floor=1e-3)  # floor above any plausible variance
        assert len(est.grid) == len(est.f_hat) == len(est.g2_hat) == len(est.clamped) == 101
        assert np.all(est.g2_hat[est.valid] >= 1e-3)
        assert np.all(est.clamped[est.valid])

    def test_unclamped_points_are_exact(self, rng):
        y = rng.normal(0, 0.01, 400)
        h = cal.bandwidth(y, 3.5)
        est = cal.estimate_curves(y, gamma=3.5)
        for x, g2, c in zip(est.grid[::10], est.g2_hat[::10], est.clamped[::10]):
            a1, b1 = cal.local_fit(y, x, h)
            assert g2 == (1e-10 if c else a1 - b1 * b1)

    def test_grid_outside_data_rejected(self, rng):
        y = rng.normal(0, 0.01, 50)
        with pytest.raises(DomainError):
            cal.estimate_curves(y, [1.0])

    def test_starved_points_marked_invalid(self):
        y = np.concatenate((np.random.default_rng(0).normal(0, 0.01, 400), [0.5]))
        est = cal.estimate_curves(y, [0.0, 0.45], gamma=50, min_weight_fraction=1e-3)
        assert est.valid.tolist() == [True, False]
        assert np.isnan(est.f_hat[1]) and np.isnan(est.g2_hat[1])

    def test_table_columns(self, rng):
        est = cal.estimate_curves(rng.normal(0, 0.01, 100))
        assert est.to_table().columns == ("y", "f_hat", "g2_hat", "clamped", "valid")

    def test_consistency_improves_with_sample_size(self, equity_yields):
        model, y = equity_yields

        def central_mae(ys):
            est = cal.estimate_curves(ys, gamma=3.5)
            lo, hi = est.grid[0], est.grid[-1]
            q = (est.grid >= lo + 0.25 * (hi - lo)) & (est.grid <= hi - 0.25 * (hi - lo))
            return np.mean(np.abs(est.f_hat[q] - model.f(est.grid[q])))

        assert central_mae(y) < central_mae(y[:2000])


class TestFitPoly:
    def test_exact_quadratic(self):
        x = np.linspace(-1, 1, 11)
        c = cal.fit_poly(x, 1.5 - 2 * x + 0.25 * x**2, 2)
        np.testing.assert_allclose(c.coefficients, [1.5, -2, 0.25], atol=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=1, max_size=6))
    def test_exact_polynomials_property(self, coef):
        x = np.linspace(-0.1, 0.1, 40)
        y = np.polynomial.polynomial.polyval(x, coef)
        back = cal.fit_poly(x, y, len(coef) - 1)
        np.testing.assert_allclose(back(x), y, atol=1e-9)

    def test_degree_zero_is_mean(self, rng):
        y = rng.normal(size=30)
        assert cal.fit_poly(rng.normal(size=30), y, 0).coefficients[0] == pytest.approx(y.mean(), rel=1e-13)

    def test_residual_optimality(self, rng):
        x = rng.uniform(-0.1, 0.1, 200)
        y = np.sin(20 * x) + rng.normal(0, 0.1, 200)
        c = np.array(cal.fit_poly(x, y, 4).coefficients)
        base = np.sum((np.polynomial.polynomial.polyval(x, c) - y) ** 2)
        for k in range(5):
            for d in (1e-6, -1e-6):
                p = c.copy()
                p[k] += d
                # high-order columns are tiny, so the true increase can sit below rounding of the SSR
                assert np.sum((np.polynomial.polynomial.polyval(x, p) - y) ** 2) >= base * (1 - 1e-13)

    def test_derived_g_sign_pattern(self, equity_model):
        x = np.linspace(-0.1, 0.1, 401)
        c = cal.fit_poly(x, equity_model.g(x), 4).coefficients
        assert tuple(np.sign(c)) == (1, -1, 1, 1, -1)
        _, g_pub = cal.published_surrogates_equity()
        assert tuple(np.sign(g_pub.coefficients)) == (1, -1, 1, 1, -1)

    def test_too_few_points(self):
        with pytest.raises(SingularFitError):
            cal.fit_poly([0.0, 1.0], [0.0, 1.0], 2)


class TestPublishedSurrogates:
    def test_operation_names(self):
        assert cal.paper_surrogates_equity is cal.published_surrogates_equity
        assert cal.paper_surrogates_fx is cal.published_surrogates_fx

    def test_equity(self):
        f, g = cal.published_surrogates_equity()
        assert f.coefficients[0] == -8.948e-5 and f.degree == 4 and g.degree == 4
        assert g.coefficients[-1] == -3.306e2

    def test_fx(self):
        f, g = cal.published_surrogates_fx()
        assert f.coefficients == (0.0, 0.33) and f.degree == 1
        assert g.coefficients[0] == 4.328e-3 and g.degree == 5


class TestEstimators:
    def test_params_and_clone(self):
        est = cal.LocalQuadraticARCH(gamma=2.0)
        assert est.get_params() == {"gamma": 2.0, "g2_floor": 1e-10, "min_weight_fraction": 1e-6}
        assert clone(est).set_params(gamma=5.0).gamma == 5.0

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            cal.LocalQuadraticARCH().predict([[0.0]])
        with pytest.raises(NotFittedError):
            cal.PolynomialSurrogate().predict([0.0])

    def test_series_and_pairs_agree(self, rng):
        y = rng.normal(0, 0.01, 300)
        a = cal.LocalQuadraticARCH().fit(y)
        b = cal.LocalQuadraticARCH().fit(y[:-1, None], y[1:])
        grid = np.array([[-0.005], [0.0], [0.005]])
        np.testing.assert_array_equal(a.predict(grid), b.predict(grid))
        ref = cal.estimate_curves(y, grid.ravel())
        np.testing.assert_array_equal(a.predict(grid), ref.f_hat)
        np.testing.assert_array_equal(a.predict_variance(grid), ref.g2_hat)

    def test_polynomial_surrogate(self):
        x = np.linspace(-1, 1, 20)
        m = cal.PolynomialSurrogate(degree=1).fit(x[:, None], 3 * x - 1)
        np.testing.assert_allclose(m.coef_.coefficients, [-1, 3], atol=1e-12)
        assert m.score(x[:, None], 3 * x - 1) == pytest.approx(1.0)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            cal.LocalQuadraticARCH().fit(np.array([0.0, np.nan, 0.1, 0.2]))
