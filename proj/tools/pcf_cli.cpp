#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "pcf/dataset_io.hpp"
#include "pcf/harness/config.hpp"
#include "pcf/harness/plot.hpp"
#include "pcf/harness/runner.hpp"
#include "pcf/harness/verify.hpp"
#include "pcf/scm.hpp"

namespace fs = std::filesystem;
using namespace pcf;
using namespace pcf::harness;

namespace {

// --out-dir beats PCF_OUT_DIR, which beats the config file.
std::string resolve_out_dir(const std::string& flag, const std::string& from_config) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("PCF_OUT_DIR"); env && *env) return env;
    return from_config;
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (!part.empty()) out.push_back(part);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Counterfactual-fairness simulation harness"};
    app.require_subcommand(1);

    std::string config_path, out_dir, format = "csv";
    std::int64_t seed_offset = 0;
    int jobs = 1;

    auto* sim = app.add_subcommand("simulate", "Sample a dataset from a structural model and write it as CSV");
    std::string dataset = "linear-reg", sim_out;
    std::size_t n = 1000;
    std::uint64_t seed = 0;
    sim->add_option("--dataset", dataset, "Preset name")->check(CLI::IsMember(ScmSpec::preset_names()));
    sim->add_option("--config", config_path, "JSON file holding a model spec (overrides --dataset)");
    sim->add_option("--n", n, "Number of records")->check(CLI::PositiveNumber);
    sim->add_option("--seed", seed, "Sampling seed");
    sim->add_option("--seed-offset", seed_offset, "Added to --seed");
    sim->add_option("--out", sim_out, "Output CSV (default: stdout)");

    auto* run_cmd = app.add_subcommand("run", "Run an experiment sweep");
    run_cmd->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--out-dir", out_dir, "Output directory (overrides PCF_OUT_DIR and the config)");
    run_cmd->add_option("--seed-offset", seed_offset, "Added to every configured seed");
    run_cmd->add_option("--jobs", jobs, "Parallel cells")->check(CLI::PositiveNumber);
    run_cmd->add_option("--format", format, "Extra output format")->check(CLI::IsMember({"csv", "json"}));

    auto* ver = app.add_subcommand("verify", "Run the theory checks; exit code 1 on any failed assertion");
    ver->add_option("--config", config_path, "Verify config (JSON)")->required()->check(CLI::ExistingFile);
    ver->add_option("--out-dir", out_dir, "Output directory (overrides PCF_OUT_DIR and the config)");
    ver->add_option("--seed-offset", seed_offset, "Added to every configured seed");
    ver->add_option("--jobs", jobs, "Accepted for symmetry; checks parallelize internally")
        ->check(CLI::PositiveNumber);
    ver->add_option("--format", format, "Accepted for symmetry; reports are always JSON")
        ->check(CLI::IsMember({"csv", "json"}));

    auto* plot = app.add_subcommand("plot", "Render an SVG scatter from results.csv");
    std::string input, plot_out, group_by = "method", x_col = "te", y_col = "error", title;
    plot->add_option("--input", input, "results.csv")->required()->check(CLI::ExistingFile);
    plot->add_option("--out", plot_out, "Output SVG (default: <input dir>/plot.svg)");
    plot->add_option("--group-by", group_by, "Comma-separated series columns");
    plot->add_option("--x", x_col, "x-axis column");
    plot->add_option("--y", y_col, "y-axis column");
    plot->add_option("--title", title, "Plot title");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) {
            ScmSpec spec = ScmSpec::preset(dataset);
            if (!config_path.empty()) {
                std::ifstream is(config_path);
                if (!is) throw std::runtime_error("cannot open " + config_path);
                const auto j = nlohmann::json::parse(is);
                spec = j.contains("spec") ? j.at("spec").get<ScmSpec>() : j.get<ScmSpec>();
            }
            const Dataset d = sample(spec, n, seed + static_cast<std::uint64_t>(seed_offset));
            if (sim_out.empty()) {
                write_dataset_csv(std::cout, d);
            } else {
                write_dataset_csv(sim_out, d);
            }
            return 0;
        }
        if (run_cmd->parsed()) {
            const auto cfg = ExperimentConfig::load(config_path);
            RunOptions opt;
            opt.out_dir = resolve_out_dir(out_dir, cfg.out_dir);
            opt.seed_offset = seed_offset;
            opt.jobs = jobs;
            opt.format = format;
            const auto res = run(cfg, opt);
            std::cerr << "wrote " << res.rows.size() << " rows to " << (fs::path(opt.out_dir) / "results.csv").string()
                      << '\n';
            if (!res.errors.empty()) {
                std::cerr << res.errors.size() << " cell(s) failed; see errors.log\n";
            }
            return 0;
        }
        if (ver->parsed()) {
            const auto cfg = ExperimentConfig::load(config_path);
            const std::string dir = resolve_out_dir(out_dir, cfg.out_dir);
            const auto res = verify(cfg, seed_offset);
            fs::create_directories(dir);
            std::ofstream os(fs::path(dir) / "theory_report.json", std::ios::binary);
            os << res.to_json().dump(2) << '\n';
            for (const auto& f : res.failed) std::cerr << "FAILED " << f << '\n';
            std::cerr << res.reports.size() << " report(s), " << res.failed.size() << " failed assertion(s)\n";
            return res.passed() ? 0 : 1;
        }
        if (plot->parsed()) {
            std::ifstream is(input);
            const auto rows = read_results_csv(is);
            PlotOptions po;
            po.x = x_col;
            po.y = y_col;
            po.group_by = split_commas(group_by);
            po.title = title;
            const std::string out = plot_out.empty() ? (fs::path(input).parent_path() / "plot.svg").string() : plot_out;
            std::ofstream os(out, std::ios::binary);
            os << render_svg(rows, po);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
