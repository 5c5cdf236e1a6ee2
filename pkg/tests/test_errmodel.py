import numpy as np
import pytest
from helpers import gaussian_logpdf_oracle, random_spd
from hypothesis import given, settings, strategies as st

from rfanomaly.errmodel import DB_PER_NEPER, DegenerateErrorModel, ErrorModel, aggregate, fit, log_pdf
from rfanomaly.iq import make_rng


class TestFit:
    def test_constant_vectors(self):
        v = np.arange(8.0)
        m = fit(np.tile(v, (100, 1)), ridge=1e-6)
        np.testing.assert_array_equal(m.mean, v)
        np.testing.assert_allclose(m.regularized_cov, 1e-6 * np.eye(8), atol=1e-20)

    def test_textbook_oracle(self):
        E = np.array([
            [1.0, -2.0, 0.5, 0.0, 3.0, 1.0, -1.0, 2.0],
            [0.0, 1.0, 1.5, -1.0, 2.0, 0.0, 0.0, 1.0],
            [2.0, 0.0, -0.5, 1.0, 1.0, 2.0, 1.0, 0.0],
        ])
        mu = [sum(E[i, j] for i in range(3)) / 3 for j in range(8)]
        cov = [[sum((E[i, a] - mu[a]) * (E[i, b] - mu[b]) for i in range(3)) / 2 for b in range(8)]
               for a in range(8)]
        m = fit(E, ridge=0.25)  # 3 samples in 8 dims is rank deficient without it
        np.testing.assert_allclose(m.mean, mu, atol=1e-12)
        np.testing.assert_allclose(m.cov, cov, atol=1e-12)
        assert m.ridge == 0.25

    def test_monte_carlo_recovery(self):
        rng = make_rng(0)
        mu = rng.uniform(-1, 1, 8)
        cov = random_spd(rng) / 4
        x = rng.multivariate_normal(mu, cov, size=100_000)
        m = fit(x)
        assert np.max(np.abs(m.mean - mu)) < 0.02
        assert np.max(np.abs(m.cov - cov)) < 0.05

    def test_default_ridge(self):
        x = make_rng(1).standard_normal((500, 8))
        m = fit(x)
        assert m.ridge == pytest.approx(1e-6 * np.trace(m.cov) / 8)

    def test_too_few(self):
        with pytest.raises(ValueError):
            fit(np.zeros((1, 8)))

    def test_degenerate(self):
        with pytest.raises(DegenerateErrorModel, match="degenerate error distribution"):
            fit(np.tile(np.arange(8.0), (10, 1)), ridge=0.0)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32))
    def test_permutation_invariant(self, seed):
        rng = make_rng(seed)
        x = rng.standard_normal((60, 8))
        e = rng.standard_normal(8)
        a = fit(x).log_pdf(e)
        b = fit(x[rng.permutation(60)]).log_pdf(e)
        assert a == pytest.approx(b, abs=1e-9)


class TestLogPdf:
    def test_standard_normal_origin(self):
        m = ErrorModel.from_moments(np.zeros(8), np.eye(8), 0.0)
        assert abs(m.log_pdf(np.zeros(8)) - (-4 * np.log(2 * np.pi))) < 1e-9
        assert m.log_pdf(np.zeros(8)) == pytest.approx(-7.35150, abs=1e-5)

    def test_at_mean(self):
        rng = make_rng(2)
        m = ErrorModel.from_moments(rng.standard_normal(8), random_spd(rng), 1e-3)
        assert m.log_pdf(m.mean) == pytest.approx(-0.5 * (8 * np.log(2 * np.pi) + m.logdet), abs=1e-12)

    def test_explicit_inverse_oracle(self):
        rng = make_rng(3)
        for _ in range(100):
            mu, cov, ridge = rng.standard_normal(8), random_spd(rng), rng.uniform(0, 0.1)
            m = ErrorModel.from_moments(mu, cov, ridge)
            e = mu + 2 * rng.standard_normal(8)
            assert abs(log_pdf(m, e) - gaussian_logpdf_oracle(mu, cov + ridge * np.eye(8), e)) < 1e-9

    def test_batch_matches_rows(self):
        rng = make_rng(4)
        m = fit(rng.standard_normal((40, 8)))
        E = rng.standard_normal((5, 8))
        np.testing.assert_allclose(m.log_pdf(E), [m.log_pdf(r) for r in E], atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32))
    def test_maximized_at_mean(self, seed):
        rng = make_rng(seed)
        m = ErrorModel.from_moments(rng.standard_normal(8), random_spd(rng), 0.0)
        d = rng.standard_normal(8)
        d /= np.linalg.norm(d)
        assert m.log_pdf(m.mean) > m.log_pdf(m.mean + 0.1 * d)

    def test_arrays_round_trip(self):
        m = fit(make_rng(5).standard_normal((30, 8)))
        m2 = ErrorModel.from_arrays(m.to_arrays())
        np.testing.assert_array_equal(m2.chol, m.chol)


class TestAggregate:
    def test_v1(self):
        ll = make_rng(6).standard_normal(10)
        np.testing.assert_allclose(aggregate(ll, 1), ll * 10 / np.log(10))

    def test_unit_probability(self):
        np.testing.assert_array_equal(aggregate(np.zeros(20), 4), np.zeros(17))

    def test_decades(self):
        out = aggregate(np.log([0.1, 0.01]), 2)
        assert out.shape == (1,) and abs(out[0] - (-30.0)) < 1e-9

    def test_too_long(self):
        assert aggregate(np.zeros(3), 4).size == 0
        with pytest.raises(ValueError):
            aggregate(np.zeros(3), 0)

    @settings(max_examples=50)
    @given(st.lists(st.floats(-50, 5), min_size=1, max_size=40), st.integers(1, 10), st.floats(-10, 10))
    def test_shift_equivariant(self, ll, V, c):
        ll = np.array(ll)
        a, b = aggregate(ll, V), aggregate(ll + c, V)
        assert len(a) == max(len(ll) - V + 1, 0)
        np.testing.assert_allclose(b, a + V * c * DB_PER_NEPER, atol=1e-9)

    @settings(max_examples=30)
    @given(st.lists(st.floats(-50, 5), min_size=8, max_size=8), st.lists(st.floats(-50, 5), min_size=8, max_size=8),
           st.integers(1, 8))
    def test_linear(self, a, b, V):
        a, b = np.array(a), np.array(b)
        np.testing.assert_allclose(aggregate(2 * a - b, V), 2 * aggregate(a, V) - aggregate(b, V), atol=1e-9)
