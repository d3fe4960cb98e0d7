import numpy as np
import pytest

from quantfit import (
    ConvergenceError,
    ParamVector,
    acquire,
    golden_section,
    make_uniform,
    mse_exp,
    qbe_fit,
    qbe_fit_unknown_freq,
    reconstruction_value,
    sine_basis,
    synth,
)


class TestGoldenSection:
    def test_parabola(self):
        lam, trace = golden_section(lambda x: (x - 2.0) ** 2, 0.0, 5.0,
                                    gamma=1e-8)
        assert lam == pytest.approx(2.0, abs=1e-7)
        assert trace.bracket_width <= 5.0

    def test_tight_bracket_returns_midpoint(self):
        lam, trace = golden_section(lambda x: (x - 2.0) ** 2, 1.0,
                                    1.0 + 1e-9, gamma=1e-8)
        assert lam == pytest.approx(1.0 + 5e-10, abs=1e-12)
        assert trace.iterations == 0

    def test_iteration_count_geometric(self):
        _, trace = golden_section(lambda x: (x - 0.3) ** 2, 0.0, 1.0,
                                  gamma=1e-6)
        expected = np.log(1e-6) / np.log((np.sqrt(5) - 1) / 2)
        assert abs(trace.iterations - expected) <= 3

    def test_never_leaves_bracket(self):
        seen = []

        def f(x):
            seen.append(x)
            return np.cos(x)

        golden_section(f, 2.0, 4.5, gamma=1e-7)
        assert min(seen) >= 2.0 and max(seen) <= 4.5

    def test_trace_records_evaluations(self):
        _, trace = golden_section(lambda x: (x - 1.0) ** 2, 0.0, 3.0,
                                  gamma=1e-5)
        lams = [e[0] for e in trace.evaluations]
        vals = [e[1] for e in trace.evaluations]
        assert len(lams) == len(vals) >= 2
        np.testing.assert_allclose(vals, [(l - 1.0) ** 2 for l in lams])

    def test_bad_gamma(self):
        with pytest.raises(ValueError):
            golden_section(lambda x: x * x, 0.0, 1.0, gamma=0.0)

    def test_max_iteration_guard(self):
        with pytest.raises(ConvergenceError):
            golden_section(lambda x: x * x, 0.0, 1e9, gamma=1e-300,
                           max_iter=10)


class TestMseExp:
    def setup_method(self):
        self.model = make_uniform(10, -1.0, 1.0)
        self.lam = 0.1234
        self.theta = (0.5, -0.2, 0.05)

    def acquire_clean(self, n=4096):
        pv = ParamVector(theta=self.theta, sigma=0.0)
        return acquire(pv, sine_basis(), self.lam, n, self.model, seed=0)

    def test_exact_reproduction_is_zero(self):
        # one-sample record: any theta reproducing that reconstruction
        # value exactly gives zero error
        rec = self.acquire_clean(n=1)
        v = reconstruction_value(self.model, int(rec.codes[0]))
        theta = np.array([0.0, 0.0, v])
        assert mse_exp(theta, sine_basis(), self.lam, rec, self.model) == \
            pytest.approx(0.0, abs=1e-24)

    def test_constant_offset_squared(self):
        pv = ParamVector(theta=(0.0, 0.0, 0.0), sigma=0.0)
        rec = acquire(pv, sine_basis(), self.lam, 500, self.model, seed=0)
        v = reconstruction_value(self.model, int(rec.codes[0]))
        c = 0.37
        theta = np.array([0.0, 0.0, c])
        got = mse_exp(theta, sine_basis(), self.lam, rec, self.model)
        assert got == pytest.approx((c - v) ** 2, rel=1e-12)

    def test_quantization_noise_floor(self):
        rec = self.acquire_clean()
        got = mse_exp(np.array(self.theta), sine_basis(), self.lam, rec,
                      self.model, use_averaged=False)
        floor = self.model.delta**2 / 12
        assert 0.5 * floor < got < 2.0 * floor

    def test_true_lambda_is_a_local_minimum(self):
        rec = self.acquire_clean()
        n = rec.n_samples
        at_true = mse_exp(np.array(self.theta), sine_basis(), self.lam,
                          rec, self.model)
        for off in (2 / n, -2 / n, 5 / n):
            perturbed = mse_exp(np.array(self.theta), sine_basis(),
                                self.lam + off, rec, self.model)
            assert perturbed >= at_true


class TestUnknownFrequencyFit:
    def setup_method(self):
        self.model = make_uniform(8, -1.0, 1.0)
        d = self.model.delta
        self.theta = (50 * d, 10 * d, 3 * d)
        self.sigma = 0.8 * d
        self.lam = 0.1155545

    def acquire_record(self, seed, n=30000):
        pv = ParamVector(theta=self.theta, sigma=self.sigma)
        return acquire(pv, sine_basis(), self.lam, n, self.model, seed=seed)

    def test_matches_known_lambda_fit(self):
        rec = self.acquire_record(21)
        unk = qbe_fit_unknown_freq(rec, sine_basis(), self.model)
        kno = qbe_fit(rec, sine_basis(), self.lam, self.model)
        d = self.model.delta
        np.testing.assert_allclose(unk.theta_hat, kno.theta_hat,
                                   atol=0.1 * d)
        assert abs(unk.lam - self.lam) < 1e-5

    def test_deterministic(self):
        rec = self.acquire_record(22, n=12000)
        a = qbe_fit_unknown_freq(rec, sine_basis(), self.model)
        b = qbe_fit_unknown_freq(rec, sine_basis(), self.model)
        np.testing.assert_array_equal(a.theta_hat, b.theta_hat)
        assert a.lam == b.lam and a.sigma_hat == b.sigma_hat

    def test_tight_gamma_high_snr(self):
        # clean, long record: the frequency comes back almost exactly
        pv = ParamVector(theta=self.theta, sigma=0.3 * self.model.delta)
        rec = acquire(pv, sine_basis(), self.lam, 60000, self.model,
                      seed=23)
        fit = qbe_fit_unknown_freq(rec, sine_basis(), self.model,
                                   gamma=1e-9)
        assert abs(fit.lam - self.lam) < 1e-6

    def test_trace_attached(self):
        rec = self.acquire_record(24, n=12000)
        fit = qbe_fit_unknown_freq(rec, sine_basis(), self.model)
        assert fit.trace is not None
        assert fit.trace.iterations >= 1
        widths = [e[0] for e in fit.trace.evaluations]
        assert min(widths) > self.lam - 3 / 12000
        assert max(widths) < self.lam + 3 / 12000
