#include <doctest.h>

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "rtnq/errors.hpp"
#include "rtnq/experiment.hpp"
#include "rtnq/quantum_state.hpp"
#include "rtnq/verify.hpp"

using namespace rtnq;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.experiment_id = "unit";
  c.alpha_values = {1.0, 2.0};
  c.gamma_min = 1e-4;
  c.gamma_max = 1.0;
  c.n_fluctuators = 50;
  c.n_rate_samples = 3;
  c.tau_grid = {3.0, 301};
  return c;
}

// Cheap verification settings; thresholds matched to the sample sizes.
VerifySettings small_verify() {
  VerifySettings v;
  v.dephasing_rates = {0.5, 4.0};
  v.dephasing_grid = {3.0, 16};
  v.dephasing_trajectories = 4000;
  v.state_grid = {3.0, 7};
  v.state_trajectories = 2000;
  v.negativity_points = 101;
  v.spectrum_alphas = {1.0};
  v.spectrum_fluctuators = 2000;
  v.spectrum = {1e-2, 1e2, 9, 0};
  v.ks_alphas = {1.5};
  v.ks_samples = 20000;
  v.ks_threshold = 0.02;
  v.phase_pdf_rates = {1.0};
  v.phase_pdf_times = {1.0};
  return v;
}

std::string csv_of(const std::vector<CurveRecord>& rows) {
  std::ostringstream out;
  write_curve_csv(out, rows);
  return out.str();
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_NOTHROW(ExperimentConfig{}.validate());
  auto c = small_config();
  c.gamma_max = c.gamma_min;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = small_config();
  c.gamma_min = 0.0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = small_config();
  c.alpha_values = {0.5};
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = small_config();
  c.alpha_values = {2.5};
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = small_config();
  c.n_fluctuators = 0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = small_config();
  c.tau_grid = {0.0, 10};
  CHECK_THROWS_AS(c.validate(), ParameterError);
  c = small_config();
  c.spectrum.f_min = 10.0;
  c.spectrum.f_max = 1.0;
  CHECK_THROWS_AS(c.validate(), ParameterError);
  CHECK_THROWS_AS(run_ensemble(ExperimentConfig{.gamma_min = 1.0, .gamma_max = 1.0}), ParameterError);
}

TEST_CASE("config JSON") {
  auto c = small_config();
  c.bath_mode = BathMode::SharedSample;
  c.verify.slope_target = -3.0;
  nlohmann::json j = c;
  const auto back = j.get<ExperimentConfig>();
  CHECK(nlohmann::json(back) == j);
  CHECK(back.bath_mode == BathMode::SharedSample);
  CHECK(back.verify.slope_target == -3.0);
  CHECK(j.at("gamma_range") == nlohmann::json::array({1e-4, 1.0}));

  // missing keys keep defaults
  const auto partial = nlohmann::json::parse(R"({"experiment_id": "p", "alpha_values": [1.5]})").get<ExperimentConfig>();
  CHECK(partial.n_fluctuators == ExperimentConfig{}.n_fluctuators);
  CHECK(partial.alpha_values == std::vector<double>{1.5});

  CHECK_THROWS_AS(nlohmann::json::parse(R"({"alpah_values": [1.0]})").get<ExperimentConfig>(), ParameterError);
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"tau_grid": {"tau_max": 1, "points": 3}})").get<ExperimentConfig>(),
                  ParameterError);
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"verify": {"ks_sample": 3}})").get<ExperimentConfig>(), ParameterError);
  CHECK_THROWS_AS(bath_mode_from_string("both"), ParameterError);
  CHECK(bath_mode_from_string("shared") == BathMode::SharedSample);
  CHECK(bath_mode_from_string("independent") == BathMode::IndependentSamples);
  CHECK_THROWS(load_config("/nonexistent/config.json"));
}

TEST_CASE("ensemble seeds are distinct") {
  CHECK(ensemble_seed(1, 0, 0, 0) != ensemble_seed(1, 0, 0, 1));
  CHECK(ensemble_seed(1, 0, 0, 0) != ensemble_seed(1, 1, 0, 0));
  CHECK(ensemble_seed(1, 0, 0, 0) != ensemble_seed(1, 0, 1, 0));
  CHECK(ensemble_seed(1, 0, 0, 0) != ensemble_seed(2, 0, 0, 0));
  CHECK(ensemble_seed(1, 0, 1, 0) != ensemble_seed(1, 1, 0, 0));
}

TEST_CASE("format_double round-trips") {
  for (double x : {0.0, 1.0, 0.1, -0.8, 1e-300, 3.0 * std::exp(-2.0), 1.0 / 3.0}) {
    const auto s = format_double(x);
    double y = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), y);
    CHECK(y == x);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(2.0) == "2");
}

TEST_CASE("revival detection") {
  std::vector<double> tau, v;
  for (int i = 0; i <= 300; ++i) {
    tau.push_back(0.01 * i);
    v.push_back(0.9 * std::abs(std::cos(2 * tau.back())));
  }
  const auto r = find_first_revival(tau, v);
  REQUIRE(r.found);
  CHECK(r.tau == doctest::Approx(std::numbers::pi / 2).epsilon(0.01));
  CHECK(r.height == doctest::Approx(0.9).epsilon(1e-3));
  CHECK(r.prominence == doctest::Approx(r.height).epsilon(1e-2));

  // monotone decay: nothing
  std::vector<double> decay;
  for (double t : tau) decay.push_back(std::exp(-t));
  CHECK_FALSE(find_first_revival(tau, decay).found);

  // never drops below the threshold: nothing
  std::vector<double> high;
  for (double t : tau) high.push_back(0.8 + 0.1 * std::cos(4 * t));
  CHECK_FALSE(find_first_revival(tau, high).found);

  // ripple below the prominence floor is ignored
  std::vector<double> ripple;
  for (double t : tau) ripple.push_back(std::exp(-t) + 1e-4 * std::sin(40 * t));
  CHECK_FALSE(find_first_revival(tau, ripple).found);

  // a flat top is not a strict maximum
  const std::vector<double> t5{0, 1, 2, 3, 4, 5};
  CHECK_FALSE(find_first_revival(t5, std::vector<double>{1.0, 0.2, 0.4, 0.4, 0.1, 0.0}).found);
  const auto strict = find_first_revival(t5, std::vector<double>{1.0, 0.2, 0.4, 0.3, 0.1, 0.0});
  CHECK(strict.found);
  CHECK(strict.index == 2);
  CHECK(strict.prominence == doctest::Approx(0.2));

  CHECK_THROWS_AS(find_first_revival(t5, std::vector<double>{1.0}), ParameterError);
}

TEST_CASE("run_ensemble rows") {
  const auto c = small_config();
  const auto res = run_ensemble(c);
  CHECK(res.rows.size() == 2 * 3 * 301);
  CHECK(res.curves.size() == 6);
  for (const auto& row : res.rows) {
    CHECK(row.negativity == std::abs(row.gamma_factor));
    CHECK(std::abs(row.discord - binary_h(row.gamma_factor)) < 1e-12);
    CHECK(std::abs(row.gamma_factor) <= 1.0);
  }
  CHECK(res.rows.front().tau == 0.0);
  CHECK(res.rows.front().gamma_factor == 1.0);
  CHECK(res.rows.front().experiment_id == "unit");

  const auto csv = csv_of(res.rows);
  CHECK(csv.rfind("experiment_id,alpha,sample,bath_mode,tau,gamma_factor,negativity,discord\n", 0) == 0);
  CHECK(csv.find(",independent,") != std::string::npos);
}

TEST_CASE("single-point grid gives the initial Bell state") {
  auto c = small_config();
  c.tau_grid = {0.0, 1};
  const auto res = run_ensemble(c);
  REQUIRE(res.rows.size() == 6);
  for (const auto& row : res.rows) {
    CHECK(row.tau == 0.0);
    CHECK(row.negativity == 1.0);
    CHECK(row.discord == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(!res.curves.front().first_revival.found);
  }
}

TEST_CASE("output is byte-identical across runs and thread counts") {
  auto c = small_config();
  c.threads = 1;
  const auto one = csv_of(run_ensemble(c).rows);
  c.threads = 3;
  const auto three = csv_of(run_ensemble(c).rows);
  const auto again = csv_of(run_ensemble(c).rows);
  CHECK(one == three);
  CHECK(three == again);
  c.master_seed += 1;
  CHECK(csv_of(run_ensemble(c).rows) != one);
}

TEST_CASE("shared bath mode squares a single factor") {
  auto c = small_config();
  c.bath_mode = BathMode::SharedSample;
  const auto res = run_ensemble(c);
  for (const auto& row : res.rows) CHECK(row.gamma_factor >= 0.0);
  CHECK(csv_of(res.rows).find(",shared,") != std::string::npos);
}

TEST_CASE("alpha sweep") {
  auto c = small_config();
  c.alpha_values = {1.0, 1.5, 2.0};
  c.n_fluctuators = 100;
  c.tau_grid = {3.0, 601};
  const auto s = run_alpha_sweep(c);
  CHECK(s.alphas == c.alpha_values);
  CHECK(s.negativity.size() == 3 * 601);
  CHECK(s.first_revival.size() == 3);
  for (std::size_t k = 0; k < s.negativity.size(); ++k) {
    CHECK(s.negativity[k] == std::abs(s.gamma_factor[k]));
    CHECK(s.discord[k] == binary_h(s.gamma_factor[k]));
  }
  REQUIRE(s.first_revival[2].found);
  CHECK(s.first_revival[2].tau == doctest::Approx(std::numbers::pi / 2).epsilon(0.02));
  CHECK(s.revival_heights_nondecreasing);
  CHECK(s.max_revival_alpha_index == 2);

  const auto rows = s.rows("sweep", 0, c.bath_mode);
  CHECK(rows.size() == 3 * 601);
  CHECK(rows[601].alpha == 1.5);
  const auto j = sweep_summary_json(s);
  CHECK(j.at("max_revival_alpha") == 2.0);
  CHECK(j.at("first_revival_by_alpha").size() == 3);
}

TEST_CASE("spectrum run") {
  auto c = small_config();
  c.alpha_values = {1.0, 2.0};
  c.gamma_min = 1e-4;
  c.gamma_max = 1e4;
  c.n_fluctuators = 2000;
  c.spectrum = {1e-2, 1e2, 9, 4};
  const auto r = run_spectrum(c);
  CHECK(r.rows.size() == 18);
  CHECK(r.summaries.size() == 2);
  for (const auto& row : r.rows) {
    CHECK(row.analytic > 0.0);
    CHECK(row.ensemble_normalized == doctest::Approx(row.ensemble / 2000.0));
    CHECK(row.pooled_mean.has_value());
  }
  CHECK(r.summaries[0].analytic_slope == doctest::Approx(-1.0).epsilon(0.1));
  CHECK(r.summaries[1].analytic_slope == doctest::Approx(-2.0).epsilon(0.05));

  std::ostringstream out;
  write_spectrum_csv(out, r);
  CHECK(out.str().rfind("alpha,frequency,ensemble,ensemble_normalized,analytic,pooled_mean,pooled_std_error\n", 0) ==
        0);
  CHECK(spectrum_summary_json(r).at("slopes").size() == 2);
}

TEST_CASE("manifest records the full configuration") {
  const auto c = small_config();
  const auto m = run_manifest(c, "ensemble");
  CHECK(m.at("tool") == "rtnq");
  CHECK(m.at("command") == "ensemble");
  CHECK(m.at("version") == version());
  CHECK(m.at("config").get<ExperimentConfig>().n_rate_samples == 3);
}

TEST_CASE("verify: small run passes, wrong slope target fails") {
  auto c = small_config();
  c.verify = small_verify();
  const auto good = verify(c);
  for (const auto& check : good.checks) {
    INFO(check.name << ": " << check.detail);
    CHECK(check.passed);
  }
  CHECK(good.all_passed());
  CHECK(good.to_json().at("checks").size() == good.checks.size());

  c.verify.slope_target = -3.0;
  const auto bad = verify(c);
  CHECK_FALSE(bad.all_passed());
  CHECK(bad.failed_checks() == std::vector<std::string>{"spectrum_slope"});
}

TEST_CASE("KS statistic") {
  const NoiseParams p{1.5, 1e-3, 10.0, 1};
  std::vector<double> exact;
  for (int i = 0; i < 1000; ++i) exact.push_back(switching_rate_quantile(p, (i + 0.5) / 1000.0));
  CHECK(ks_statistic(p, exact) == doctest::Approx(0.0005).epsilon(1e-6));
  std::vector<double> wrong(exact.size(), 1.0);
  CHECK(ks_statistic(p, wrong) > 0.5);
  std::vector<double> empty;
  CHECK_THROWS_AS(ks_statistic(p, empty), ParameterError);
  CHECK(switching_rate_pdf_integral(p) == doctest::Approx(1.0).epsilon(1e-10));
}
