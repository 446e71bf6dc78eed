#pragma once

#include <cstdint>
#include <string>

namespace sdrnet {

/// Outcome of one self-check oracle. detail carries the measured numbers in
/// both the pass and fail cases, so reports are auditable either way.
struct OracleReport {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Monte Carlo check of the closed-form expected squared error under
/// Gaussian weights: E_w ||y - Xw||^2 == ||y - X mu||^2 + ||X diag(sigma)||_F^2.
/// 20 random (X in R^{8x4}, y, mu, sigma) instances, 1e5 samples each,
/// tolerance 2%.
OracleReport verify_risk_identity(std::uint64_t seed);

/// Central finite differences against every tape op and the
/// reparameterization gradients (d/dmu, d/dsigma): ten randomized instances
/// of each op plus a sampled two-layer composite, relative tolerance 1e-3.
OracleReport verify_gradcheck(std::uint64_t seed);

/// Sampled-mode forward with all sigma = 0 must equal mean-mode forward
/// exactly, on 100 random inputs.
OracleReport verify_sigma_zero_equivalence(std::uint64_t seed);

/// The decay rule with beta = 0 and sigma0 = 0 must follow plain SGD
/// exactly: identical mu after 200 steps on identical draws, sigma pinned
/// at zero throughout (anneal events included).
OracleReport verify_sgd_reduction(std::uint64_t seed);

/// Dispatch by oracle name: risk-identity, gradcheck,
/// sigma-zero-equivalence, sgd-reduction. ConfigError on anything else.
OracleReport run_oracle(const std::string& name, std::uint64_t seed);

}  // namespace sdrnet
