import json

import numpy as np
import pytest

from evmix import dist_zoo, gev_fit
from evmix.estimators import (EstimatorKnobs, FittedDsm, fit_dsm, forecast, parse_method,
                              predictive_quantile, read_data)
from evmix.exceptions import DomainError, EstimationError, InputError


@pytest.fixture(scope="module")
def fits():
    x = dist_zoo.sample(dist_zoo.parse_spec("pareto:l=1"), 256, 5).values
    return {m: fit_dsm(x, 16, m) for m in ("par", "np", "ml", "cv")}


class TestFitDsm:
    @pytest.mark.parametrize("name, canon", [("ml", "ml_mix"), ("CV", "cv_mix"), ("par", "parametric"),
                                             ("np", "nonparametric"), ("ml_mix", "ml_mix")])
    def test_parse_method(self, name, canon):
        assert parse_method(name) == canon

    def test_unknown_method(self):
        with pytest.raises(DomainError):
            parse_method("bayes")

    def test_cv_contract(self, fits):
        f = fits["cv"]
        assert 0 <= f.mix <= 1 and f.mix == f.h / (1 + f.h)
        assert f.gev.a > 0
        assert "cv_value" in f.diagnostics and f.diagnostics["plugin_h"] > 0

    def test_ml_contract(self, fits):
        f = fits["ml"]
        assert 0 <= f.mix <= 1 and f.h == fits["np"].h

    def test_baselines(self, fits):
        assert fits["par"].mix is None and fits["np"].gev is None

    def test_deterministic(self, fits):
        x = fits["cv"].data
        assert fit_dsm(x, 16, "cv").summary() == fits["cv"].summary()

    @pytest.mark.parametrize("m", [0, -3, 2.5])
    def test_bad_m(self, m):
        with pytest.raises(DomainError):
            fit_dsm(np.arange(30.0), m, "np")

    def test_knobs_respected(self, fits):
        x = fits["cv"].data
        f = fit_dsm(x, 16, "ml", EstimatorKnobs(kernel="epanechnikov", bandwidth=0.3, block_size=4))
        assert f.kernel == "epanechnikov" and f.h == 0.3 and f.diagnostics["block_size"] == 4

    def test_cdf_matches_components(self, fits):
        f = fits["ml"]
        t = np.linspace(1, 50, 20)
        from evmix.kernel_est import np_dsm_cdf
        expected = f.mix * gev_fit.gev_cdf(f.gev, t) + (1 - f.mix) * np_dsm_cdf(f.data, f.h, f.kernel, 16, t)
        np.testing.assert_allclose(f.cdf(t), expected, rtol=1e-15)

    def test_json_roundtrip(self, fits):
        for f in fits.values():
            back = FittedDsm.from_json(f.to_json())
            t = np.linspace(0.5, 100, 50)
            np.testing.assert_array_equal(back.cdf(t), f.cdf(t))
            assert json.loads(back.to_json()) == json.loads(f.to_json())

    def test_malformed_json(self):
        with pytest.raises(InputError):
            FittedDsm.from_json('{"method": "ml"}')


class TestReadData:
    def test_reads(self, tmp_path):
        p = tmp_path / "d.txt"
        p.write_text("1.5\n\n# note\n2e3\n-4\n")
        np.testing.assert_array_equal(read_data(p), [1.5, 2000.0, -4.0])

    def test_bad_line(self, tmp_path):
        p = tmp_path / "d.txt"
        p.write_text("1\n2\nabc\n4\n")
        with pytest.raises(InputError, match="line 3") as exc:
            read_data(p)
        assert exc.value.line == 3

    def test_nonfinite(self, tmp_path):
        p = tmp_path / "d.txt"
        p.write_text("1\nnan\n")
        with pytest.raises(InputError, match="line 2"):
            read_data(p)

    def test_missing(self, tmp_path):
        with pytest.raises(InputError):
            read_data(tmp_path / "nope.txt")


class TestForecast:
    def test_quantile_roundtrip(self, fits, rng):
        checked = 0
        for f in fits.values():
            for x0 in rng.uniform(2, 60, 10):
                prob = float(f.cdf(x0))
                slope = (f.cdf(x0 + 1e-4) - f.cdf(x0 - 1e-4)) / 2e-4
                # x0 is only identifiable where the fitted CDF is strictly increasing
                if not (1e-6 < prob < 1 - 1e-6 and slope > 1e-3):
                    continue
                rep = forecast(f, [prob])
                assert rep["quantiles"][0]["x"] == pytest.approx(x0, abs=1e-6)
                checked += 1
        assert checked >= 10

    @pytest.mark.parametrize("method", ["par", "np", "ml", "cv"])
    def test_prob_tolerance(self, fits, method):
        f = fits[method]
        for p in (0.1, 0.5, 0.9):
            x = forecast(f, [p])["quantiles"][0]["x"]
            assert abs(f.cdf(x) - p) <= 1e-8

    def test_exceedance_above_mass(self):
        x = dist_zoo.sample(dist_zoo.parse_spec("revburr:c=-3,l=-2"), 256, 3).values
        for method in ("par", "np", "ml", "cv"):
            f = fit_dsm(x, 16, method, EstimatorKnobs(kernel="epanechnikov"))
            top = max(x.max() + f.h, f.gev.upper if f.gev is not None else -np.inf)
            rep = forecast(f, thresholds=[top + 1.0])
            assert rep["exceedances"][0]["exceedance"] <= 1e-6

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.5, 1.5])
    def test_bad_probs(self, fits, p):
        with pytest.raises(DomainError):
            forecast(fits["ml"], [p])

    def test_unbracketable(self):
        with pytest.raises(EstimationError):
            predictive_quantile(lambda x: 0.0, 0.5)
