#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pcf/harness/config.hpp"
#include "pcf/harness/plot.hpp"
#include "pcf/harness/runner.hpp"
#include "pcf/harness/verify.hpp"

using namespace pcf;
using namespace pcf::harness;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

fs::path temp_dir(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("pcf_test_" + name);
    fs::remove_all(p);
    return p;
}

std::size_t count(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
    return n;
}

ResultRow row(const std::string& method, double lambda, std::uint64_t seed, double err, double te) {
    ResultRow r;
    r.dataset = "linear-reg";
    r.method = method;
    r.predictor = "knn";
    r.cgm = "oracle";
    r.lambda = lambda;
    r.seed = seed;
    r.error = err;
    r.te = te;
    return r;
}

}  // namespace

TEST_CASE("config parsing and validation") {
    const auto c = ExperimentConfig::from_json(json::parse(R"({
        "dataset": "linear-cls", "methods": ["erm", {"kind": "pcf", "predictor": "mlp", "cgm": "noisy"}],
        "noise": [{"beta": 0, "alpha": 0.1}], "eps0": [0, 0.1], "seeds": [3]})"));
    CHECK(c.datasets.size() == 1);
    CHECK(c.datasets[0].spec.w_a[0] == 2.0);
    CHECK(c.n_train == 10000);
    CHECK(c.n_test == 5000);
    CHECK(c.noise.size() == 2);
    CHECK(c.methods[1].predictor == "mlp");
    CHECK(c.methods[0].cgm == "none");
    const auto inline_spec = ExperimentConfig::from_json(json::parse(R"({
        "datasets": [{"name": "mine", "spec": {"form": "cubic", "task": "regression", "w_a": 0.5}}],
        "methods": ["erm"]})"));
    CHECK(inline_spec.datasets[0].name == "mine");
    CHECK(inline_spec.datasets[0].spec.form == Form::Cubic);
    CHECK_THROWS_AS(ExperimentConfig::from_json(json::parse(R"({"dataset": "linear-reg", "methods": ["erm"], "seeds": []})")),
                    std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::from_json(json::parse(R"({"dataset": "linear-reg", "methods": []})")),
                    std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::from_json(json::parse(R"({"dataset": "linear-reg", "methods": ["erm"], "n_train": 0})")),
                    std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::from_json(json::parse(R"({"dataset": "linear-reg", "methods": ["magic"]})")),
                    std::invalid_argument);
    CHECK_THROWS_AS(ExperimentConfig::from_json(json::parse(R"({"dataset": "linear-reg", "methods": ["erm"], "lambdas": [2]})")),
                    std::invalid_argument);
}

TEST_CASE("one ERM method and one seed give one row") {
    auto c = ExperimentConfig::from_json(json::parse(R"({"dataset": "linear-reg", "methods": ["erm"], "seeds": [0],
        "n_train": 500, "n_test": 200})"));
    RunOptions o;
    o.write_files = false;
    const auto r = run(c, o);
    CHECK(r.rows.size() == 1);
    CHECK(r.errors.empty());
}

TEST_CASE("the Figure 4 grid has 120 cells") {
    auto c = ExperimentConfig::from_json(json::parse(R"({
        "datasets": ["linear-reg", "cubic-reg", "linear-cls", "cubic-cls"], "n_train": 300, "n_test": 100,
        "methods": [{"kind": "erm", "predictor": "knn"}, {"kind": "cfu", "predictor": "knn", "cgm": "oracle"},
                    {"kind": "cfr", "predictor": "knn", "cgm": "oracle"}, {"kind": "ecocf", "predictor": "knn", "cgm": "oracle"},
                    {"kind": "pcf", "predictor": "knn", "cgm": "oracle"}, {"kind": "pcf_ana", "cgm": "oracle"}],
        "seeds": [0, 1, 2, 3, 4]})"));
    RunOptions o;
    o.write_files = false;
    const auto r = run(c, o);
    CHECK(r.rows.size() == 120);
    CHECK(r.errors.empty());
}

TEST_CASE("runs are byte-deterministic, independent of jobs, and summaries match") {
    auto c = ExperimentConfig::from_json(json::parse(R"({
        "datasets": ["linear-reg", "cubic-cls"], "n_train": 400, "n_test": 300,
        "methods": [{"kind": "erm", "predictor": "mlp"}, {"kind": "pcf", "predictor": "knn", "cgm": "noisy"},
                    {"kind": "pcf_crm", "predictor": "knn", "cgm": "meanshift"},
                    {"kind": "cfr", "predictor": "knn", "cgm": "noisy"}],
        "noise": [{"beta": 0, "alpha": 0.1}, {"beta": 0.1, "alpha": 0.2}],
        "lambdas": [0, 0.5, 1], "seeds": [0, 1], "train": {"epochs": 3}})"));
    const auto d1 = temp_dir("det1"), d2 = temp_dir("det2");
    RunOptions o;
    o.out_dir = d1.string();
    o.format = "json";
    const auto r1 = run(c, o);
    o.out_dir = d2.string();
    o.jobs = 3;
    run(c, o);
    CHECK(r1.errors.empty());
    CHECK(r1.rows.size() == 2 * 4 * 2 * 3 * 2);
    CHECK(slurp(d1 / "results.csv") == slurp(d2 / "results.csv"));
    CHECK(slurp(d1 / "summary.csv") == slurp(d2 / "summary.csv"));
    CHECK(fs::exists(d1 / "results.json"));
    CHECK(slurp(d1 / "results.csv").rfind(std::string(kResultsHeader) + "\n", 0) == 0);

    for (const auto& s : r1.summary) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& r : r1.rows) {
            if (r.dataset == s.dataset && r.method == s.method && r.cgm == s.cgm && r.alpha == s.alpha &&
                r.beta == s.beta && r.lambda == s.lambda && r.predictor == s.predictor) {
                sum += r.error;
                ++n;
            }
        }
        CHECK(n == s.n_seeds);
        CHECK(sum / static_cast<double>(n) == s.error_mean);
    }
    std::ifstream is(d1 / "results.csv");
    const auto back = read_results_csv(is);
    REQUIRE(back.size() == r1.rows.size());
    CHECK(back[5].error == r1.rows[5].error);
}

TEST_CASE("a failing cell is logged and the rest of the run continues") {
    auto c = ExperimentConfig::from_json(json::parse(R"({"dataset": "linear-reg", "n_train": 300, "n_test": 100,
        "methods": ["erm", {"kind": "cfu", "predictor": "knn", "cgm": "rank"}, {"kind": "pcf", "predictor": "knn"}],
        "seeds": [0]})"));
    const auto dir = temp_dir("errors");
    RunOptions o;
    o.out_dir = dir.string();
    const auto r = run(c, o);
    CHECK(r.rows.size() == 2);
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].find("method=cfu") != std::string::npos);
    CHECK(slurp(dir / "errors.log").find("cgm=rank") != std::string::npos);
}

TEST_CASE("seed offset shifts every seed") {
    auto c = ExperimentConfig::from_json(json::parse(R"({"dataset": "linear-reg", "methods": ["erm"], "seeds": [0, 1],
        "n_train": 200, "n_test": 100})"));
    RunOptions o;
    o.write_files = false;
    o.seed_offset = 10;
    const auto r = run(c, o);
    CHECK(r.rows[0].seed == 10);
    CHECK(r.rows[1].seed == 11);
}

TEST_CASE("plots: empty, markers and sweep polylines") {
    PlotStats st;
    const auto empty = render_svg({}, PlotOptions{}, &st);
    CHECK(empty.rfind("<svg", 0) == 0);
    CHECK(empty.find("class=\"axes\"") != std::string::npos);
    CHECK(empty.find("class=\"legend\"") != std::string::npos);
    CHECK(st.markers == 0);

    const auto three = render_svg({row("erm", 1, 0, 1.0, 1.0), row("pcf", 1, 0, 1.2, 0.0), row("cfu", 1, 0, 1.5, 0.0)},
                                  PlotOptions{}, &st);
    CHECK(st.markers == 3);
    CHECK(st.series == 3);
    CHECK(count(three, "class=\"marker\"") == 3);
    CHECK(count(three, "<polyline") == 0);

    const auto sweep = render_svg({row("pcf", 0, 0, 1.0, 1.0), row("pcf", 0.5, 0, 1.1, 0.5), row("pcf", 1, 0, 1.2, 0.0),
                                   row("pcf", 1, 1, 1.4, 0.0)},
                                  PlotOptions{}, &st);
    REQUIRE(st.polyline_vertices.size() == 1);
    CHECK(st.polyline_vertices[0] == 3);
    CHECK(st.markers == 3);  // seeds are averaged first
    CHECK(count(sweep, "<polyline") == 1);

    PlotOptions bad;
    bad.group_by = {"colour"};
    CHECK_THROWS_AS(render_svg({}, bad), std::invalid_argument);
    std::istringstream missing("dataset,method\nx,y\n");
    CHECK_THROWS_AS(read_results_csv(missing), std::runtime_error);
}

TEST_CASE("verify: defaults on linear-reg, negative control, and no A effect") {
    auto base = json::parse(R"({"dataset": "linear-reg", "seeds": [0], "n_train": 2000, "n_test": 2000,
        "verify": {"n_test": 20000, "mc_n": 20000, "eps0": [0.1]}})");
    const auto ok = verify(ExperimentConfig::from_json(base));
    CHECK(ok.passed());
    bool saw = false;
    for (const auto& r : ok.reports) {
        if (r.name == "excess_risk") {
            CHECK(r.predicted_excess == doctest::Approx(0.25));
            saw = true;
        }
    }
    CHECK(saw);
    CHECK(ok.to_json().at("passed").get<bool>());

    auto neg = base;
    neg["verify"]["lipschitz_scale"] = 0.5;
    neg["verify"]["checks"] = {"lipschitz_bound"};
    const auto bad = verify(ExperimentConfig::from_json(neg));
    CHECK_FALSE(bad.passed());
    CHECK(bad.failed.front().find("lipschitz_bound") != std::string::npos);

    auto flat = base;
    flat["dataset"] = json::parse(R"({"preset": "linear-reg", "w_a": 0.0})");
    flat["verify"]["checks"] = {"excess_risk"};
    const auto f = verify(ExperimentConfig::from_json(flat));
    CHECK(f.passed());
    CHECK(f.reports[0].predicted_excess == 0.0);
    CHECK(std::abs(f.reports[0].empirical_excess) < 1e-12);
}
