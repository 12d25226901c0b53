#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "rtnq/errors.hpp"
#include "rtnq/noise_model.hpp"
#include "rtnq/verify.hpp"

using namespace rtnq;

namespace {

// Independent oracle: tanh-sinh quadrature of the density in log space.
double pdf_integral_oracle(const NoiseParams& p) {
  boost::math::quadrature::tanh_sinh<double> integrator;
  auto f = [&](double s) {
    const double g = std::clamp(std::exp(s), p.gamma_min, p.gamma_max);
    return switching_rate_pdf(p, g) * g;
  };
  return integrator.integrate(f, std::log(p.gamma_min), std::log(p.gamma_max));
}

}  // namespace

TEST_CASE("switching_rate_pdf values") {
  CHECK(switching_rate_pdf({1.0, 1.0, std::numbers::e, 1}, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(switching_rate_pdf({2.0, 1.0, 2.0, 1}, 1.0) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("switching_rate_pdf integrates to one") {
  for (double alpha : {1.0, 1.25, 1.5, 1.75, 2.0}) {
    const NoiseParams p{alpha, 1e-4, 1e4, 1};
    CHECK(std::abs(pdf_integral_oracle(p) - 1.0) < 1e-8);
    CHECK(std::abs(switching_rate_pdf_integral(p) - 1.0) < 1e-8);
  }
}

TEST_CASE("switching_rate_pdf errors") {
  CHECK_THROWS_AS(switching_rate_pdf({1.0, 1.0, 10.0, 1}, 0.5), DomainError);
  CHECK_THROWS_AS(switching_rate_pdf({1.0, 1.0, 10.0, 1}, 11.0), DomainError);
  CHECK_THROWS_AS(switching_rate_pdf({2.5, 1.0, 10.0, 1}, 2.0), ParameterError);
  CHECK_THROWS_AS(switching_rate_pdf({0.5, 1.0, 10.0, 1}, 2.0), ParameterError);
  CHECK_THROWS_AS(NoiseParams({1.0, 1.0, 1.0, 1}).validate(), ParameterError);
  CHECK_THROWS_AS(NoiseParams({1.0, 0.0, 1.0, 1}).validate(), ParameterError);
  CHECK_THROWS_AS(NoiseParams({1.0, 1.0, 2.0, 0}).validate(), ParameterError);
}

TEST_CASE("alpha slightly above one approaches the logarithmic branch") {
  const NoiseParams log_branch{1.0, 1e-4, 1e4, 1};
  const NoiseParams near{1.0 + 1e-6, 1e-4, 1e4, 1};
  for (double g : {1e-4, 1e-2, 1.0, 1e2, 1e4}) {
    const double a = switching_rate_pdf(log_branch, g);
    const double b = switching_rate_pdf(near, g);
    CHECK(std::abs(a - b) / a < 1e-4);
  }
}

TEST_CASE("inverse CDF endpoints and midpoint") {
  const NoiseParams p1{1.0, 1.0, 1e4, 1};
  CHECK(switching_rate_quantile(p1, 0.5) == doctest::Approx(100.0).epsilon(1e-13));
  for (double alpha : {1.0, 1.3, 1.5, 2.0}) {
    const NoiseParams p{alpha, 1e-3, 1e3, 1};
    CHECK(switching_rate_quantile(p, 0.0) == p.gamma_min);
    CHECK(switching_rate_quantile(p, 1.0) == doctest::Approx(p.gamma_max).epsilon(1e-12));
    const double top = std::nextafter(1.0, 0.0);
    CHECK(switching_rate_quantile(p, top) <= p.gamma_max);
    CHECK(std::abs(switching_rate_cdf(p, switching_rate_quantile(p, top)) - top) < 1e-15);
    // quantile inverts the CDF
    for (double u : {0.1, 0.37, 0.9}) {
      CHECK(switching_rate_cdf(p, switching_rate_quantile(p, u)) == doctest::Approx(u).epsilon(1e-12));
    }
  }
  // spec formula for alpha > 1, written out directly
  const NoiseParams p{1.5, 1e-2, 10.0, 1};
  const double u = 0.3;
  const double a = 1.0 - p.alpha;
  const double direct =
      std::pow(std::pow(p.gamma_min, a) - u * (std::pow(p.gamma_min, a) - std::pow(p.gamma_max, a)), 1.0 / a);
  CHECK(switching_rate_quantile(p, u) == doctest::Approx(direct).epsilon(1e-13));
}

TEST_CASE("sampled ensembles are reproducible and in range") {
  const NoiseParams p{1.7, 1e-4, 1.0, 500};
  const auto a = sample_switching_rates(p, 99);
  const auto b = sample_switching_rates(p, 99);
  const auto c = sample_switching_rates(p, 100);
  REQUIRE(a.rates.size() == 500);
  CHECK(a.rates == b.rates);
  CHECK(a.rates != c.rates);
  for (double r : a.rates) {
    CHECK(r >= p.gamma_min);
    CHECK(r <= p.gamma_max);
  }
}

TEST_CASE("KS statistic of one million draws") {
  for (double alpha : {1.0, 2.0}) {
    const NoiseParams p{alpha, 1e-4, 1e4, 1000000};
    auto sample = sample_switching_rates(p, 7).rates;
    CHECK(ks_statistic(p, sample) < 0.002);
  }
  // negative control: the wrong exponent is detected
  const NoiseParams p{1.0, 1e-4, 1e4, 100000};
  auto sample = sample_switching_rates(p, 7).rates;
  CHECK(ks_statistic({1.1, 1e-4, 1e4, 1}, sample) > 0.01);
}

TEST_CASE("rtn_spectrum") {
  CHECK(rtn_spectrum(3.0, 0.0) == doctest::Approx(4.0 / 3.0));
  CHECK(rtn_spectrum(2.0 * std::numbers::pi, 1.0) == doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-15));
  double prev = rtn_spectrum(1.0, 0.0);
  for (double f = 0.01; f < 10.0; f *= 1.3) {
    const double s = rtn_spectrum(1.0, f);
    CHECK(s < prev);
    prev = s;
  }
  CHECK_THROWS_AS(rtn_spectrum(0.0, 1.0), ParameterError);
  CHECK_THROWS_AS(rtn_spectrum(1.0, -1.0), ParameterError);
}

TEST_CASE("ensemble_spectrum linearity") {
  FluctuatorEnsemble single{{1.0, 0.1, 10.0, 1}, {0.7}, 0};
  CHECK(ensemble_spectrum(single, 0.3) == rtn_spectrum(0.7, 0.3));

  const auto e = sample_switching_rates({1.5, 1e-3, 1e3, 64}, 3);
  auto doubled = e;
  doubled.rates.insert(doubled.rates.end(), e.rates.begin(), e.rates.end());
  for (double f : {0.01, 1.0, 100.0}) {
    CHECK(ensemble_spectrum(doubled, f) == doctest::Approx(2.0 * ensemble_spectrum(e, f)).epsilon(1e-15));
  }

  const auto other = sample_switching_rates({1.0, 1e-3, 1e3, 37}, 4);
  auto joined = e;
  joined.rates.insert(joined.rates.end(), other.rates.begin(), other.rates.end());
  for (double f : {0.05, 2.0}) {
    CHECK(ensemble_spectrum(joined, f) ==
          doctest::Approx(ensemble_spectrum(e, f) + ensemble_spectrum(other, f)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(ensemble_spectrum(FluctuatorEnsemble{}, 1.0), ParameterError);
}

TEST_CASE("analytic_spectrum against high-precision quadrature") {
  // Frozen from a 30-digit quadrature of the Lorentzian against p_alpha.
  struct Case {
    double alpha, f, expected;
  };
  const Case cases[] = {
      {1.0, 0.01, 5.4231589098413027},     {1.0, 1.0, 0.054264545476281958},
      {1.0, 100.0, 0.00052118183121491227}, {1.5, 0.1, 0.088201800823097163},
      {1.5, 10.0, 8.9100461562404469e-5},  {2.0, 0.01, 0.65281730872720925},
      {2.0, 1.0, 0.00011194184592021598},  {2.0, 100.0, 1.5858201717202725e-8},
  };
  for (const auto& c : cases) {
    CHECK(analytic_spectrum({c.alpha, 1e-4, 1e4, 1}, c.f) == doctest::Approx(c.expected).epsilon(1e-6));
  }
  const NoiseParams pink{1.0, 1e-4, 1e4, 1};
  CHECK(analytic_spectrum(pink, 0.1) / analytic_spectrum(pink, 1.0) == doctest::Approx(10.0).epsilon(1e-3));
}

TEST_CASE("analytic_spectrum degenerate range reduces to a single Lorentzian") {
  for (double alpha : {1.0, 1.5, 2.0}) {
    const NoiseParams p{alpha, 3.0, 3.0 * (1.0 + 1e-7), 1};
    for (double f : {0.01, 0.5, 5.0}) {
      CHECK(analytic_spectrum(p, f) == doctest::Approx(rtn_spectrum(3.0, f)).epsilon(1e-6));
    }
  }
  CHECK_THROWS_AS(analytic_spectrum({1.0, 1.0, 2.0, 1}, 0.0), ParameterError);
}

TEST_CASE("analytic_spectrum slope over the valid band") {
  const auto freqs = log_space(1e-2, 1e2, 21);
  for (double alpha : {1.0, 1.25, 1.5, 1.75, 2.0}) {
    const NoiseParams p{alpha, 1e-4, 1e4, 1};
    std::vector<double> s;
    for (double f : freqs) s.push_back(analytic_spectrum(p, f));
    CHECK(std::abs(fit_spectral_slope(freqs, s) + alpha) <= 0.1);
  }
}

TEST_CASE("fit_spectral_slope") {
  const auto freqs = log_space(0.1, 100.0, 10);
  std::vector<double> s, flat;
  for (double f : freqs) {
    s.push_back(std::pow(f, -2.0));
    flat.push_back(3.5);
  }
  CHECK(std::abs(fit_spectral_slope(freqs, s) + 2.0) < 1e-12);
  CHECK(std::abs(fit_spectral_slope(freqs, flat)) < 1e-12);

  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(fit_spectral_slope(one, one), ParameterError);
  const std::vector<double> f2{1.0, 2.0}, bad{1.0, -1.0};
  CHECK_THROWS_AS(fit_spectral_slope(f2, bad), ParameterError);
  CHECK_THROWS_AS(fit_spectral_slope(bad, f2), ParameterError);
}

TEST_CASE("ensemble spectrum has the requested slope") {
  const auto freqs = log_space(1e-2, 1e2, 21);
  SUBCASE("pink, 1000 fluctuators") {
    const auto e = sample_switching_rates({1.0, 1e-4, 1e4, 1000}, 11);
    std::vector<double> s;
    for (double f : freqs) s.push_back(ensemble_spectrum(e, f));
    CHECK(std::abs(fit_spectral_slope(freqs, s) + 1.0) <= 0.15);
  }
  SUBCASE("alpha 1.5, 10^4 fluctuators") {
    const NoiseParams p{1.5, 1e-4, 1e4, 10000};
    const auto e = sample_switching_rates(p, 12);
    std::vector<double> s;
    for (double f : freqs) s.push_back(ensemble_spectrum(e, f));
    CHECK(std::abs(fit_spectral_slope(freqs, s) + 1.5) <= 0.15);
  }
}

TEST_CASE("ensemble JSON round trip keeps every bit") {
  const auto e = sample_switching_rates({1.3, 1e-4, 1.0, 50}, 5);
  const nlohmann::json j = e;
  const auto text = j.dump();
  const auto back = nlohmann::json::parse(text).get<FluctuatorEnsemble>();
  CHECK(back.rates == e.rates);
  CHECK(back.sample_seed == e.sample_seed);
  CHECK(back.params.alpha == e.params.alpha);
  for (const char* key : {"alpha", "gamma_min", "gamma_max", "n_fluctuators", "seed", "rates"}) {
    CHECK(j.contains(key));
  }
  auto broken = j;
  broken["n_fluctuators"] = 49;
  CHECK_THROWS_AS(broken.get<FluctuatorEnsemble>(), ParameterError);
}
