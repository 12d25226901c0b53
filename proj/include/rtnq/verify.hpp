#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "rtnq/experiment.hpp"

namespace rtnq {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  nlohmann::json metrics;
};

struct VerificationReport {
  std::vector<CheckResult> checks;

  bool all_passed() const;
  std::vector<std::string> failed_checks() const;
  nlohmann::json to_json() const;
};

/// Kolmogorov-Smirnov distance between the sample and the analytic rate CDF.
/// The sample is sorted in place.
double ks_statistic(const NoiseParams& params, std::vector<double>& sample);

/// Integral of switching_rate_pdf over [gamma_min, gamma_max] by adaptive quadrature.
double switching_rate_pdf_integral(const NoiseParams& params);

/// Runs every oracle and consistency check with the sizes in config.verify.
/// The report depends only on the config, never on config.threads.
VerificationReport verify(const ExperimentConfig& config);

}  // namespace rtnq
