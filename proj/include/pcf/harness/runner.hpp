#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcf/harness/config.hpp"

namespace pcf::harness {

struct ResultRow {
    std::string dataset;
    std::string method;
    std::string predictor;
    std::string cgm;
    double alpha = 0.0;
    double beta = 0.0;
    double eps0 = 0.0;
    double lambda = 1.0;
    std::uint64_t seed = 0;
    double error = 0.0;
    double te = 0.0;
    double te0 = 0.0;
    double te1 = 0.0;
    /// Classification only; not part of the CSV header.
    double error_zero_one = 0.0;
};

struct SummaryRow {
    std::string dataset;
    std::string method;
    std::string predictor;
    std::string cgm;
    double alpha = 0.0;
    double beta = 0.0;
    double eps0 = 0.0;
    double lambda = 1.0;
    std::size_t n_seeds = 0;
    double error_mean = 0.0, error_std = 0.0;
    double te_mean = 0.0, te_std = 0.0;
    double te0_mean = 0.0, te0_std = 0.0;
    double te1_mean = 0.0, te1_std = 0.0;
    double error_zero_one_mean = 0.0, error_zero_one_std = 0.0;
};

struct RunOptions {
    std::string out_dir;  // empty = config.out_dir
    std::int64_t seed_offset = 0;
    int jobs = 1;
    std::string format = "csv";
    bool write_files = true;
};

struct RunResult {
    std::vector<ResultRow> rows;
    std::vector<SummaryRow> summary;
    std::vector<std::string> errors;  // "<cell id>: <message>"
};

inline const char* kResultsHeader = "dataset,method,predictor,cgm,alpha,beta,eps0,lambda,seed,error,te,te0,te1";

RunResult run(const ExperimentConfig& config, const RunOptions& opt = {});

/// Groups rows by every column except seed and the metrics, in first-seen order.
/// Means are left-to-right sums divided by the count; std is the sample std (0 for one seed).
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows);

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows);
void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows);
nlohmann::json results_to_json(const RunResult& r);

/// Round-trip of write_results_csv (extra columns are ignored).
std::vector<ResultRow> read_results_csv(std::istream& is);

std::string format_number(double v);

}  // namespace pcf::harness
