#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcf/harness/config.hpp"
#include "pcf/theory.hpp"

namespace pcf::harness {

inline constexpr double kZeroTe = 1e-9;
inline constexpr double kOracleTol = 1e-6;

/// PCF with the oracle CGM on top of a fitted predictor: TE and max gap <= 1e-9.
TheoryReport check_perfect_cf(const DatasetConfig& ds, const std::string& predictor, std::uint64_t seed,
                              std::size_t n_train, std::size_t n_test, const TrainConfig& train);

/// Measured loss(PCF-Ana) - loss(ERM-Ana) against the closed form. Regression:
/// within 3 combined standard errors. Classification: within 5% relative of I(A;Y|U).
TheoryReport check_excess_risk(const ScmSpec& spec, std::uint64_t seed, std::size_t n_test, std::size_t mc_n);

/// PCF-Ana at every grid node against the per-pair fair optimum and the CRM
/// optimum, within 1e-6. The support radius shrinks until all conditional
/// means sit well inside the golden-section bracket.
TheoryReport check_fair_optimum(const ScmSpec& spec, std::size_t grid_size, double support_radius);

/// TE <= 1e-9 iff the max pairwise gap <= 1e-9, for a mix of fair and unfair methods.
TheoryReport check_te_characterization(const ScmSpec& spec, std::uint64_t seed, std::size_t n_train,
                                       std::size_t n_test, const TrainConfig& train);

struct VerifyResult {
    std::vector<TheoryReport> reports;
    std::vector<std::string> failed;  // "<dataset>/<check>: <message>"

    bool passed() const { return failed.empty(); }
    nlohmann::json to_json() const;
};

VerifyResult verify(const ExperimentConfig& config, std::int64_t seed_offset = 0);

}  // namespace pcf::harness
