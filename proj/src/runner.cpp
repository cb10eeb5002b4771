#include "pcf/harness/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>

#include <omp.h>

#include "pcf/cgm.hpp"
#include "pcf/fair_methods.hpp"
#include "pcf/metrics.hpp"
#include "pcf/numeric.hpp"
#include "pcf/predictor.hpp"

namespace pcf::harness {

namespace fs = std::filesystem;

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

bool is_analytic(const std::string& p) { return p == "analytic" || p == "analytic_quad"; }

std::uint64_t string_tag(const std::string& s) {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (unsigned char c : s) h = hash_combine(h, c);
    return h;
}

// Everything shared by the cells of one (dataset, seed) group.
struct Group {
    std::size_t dataset_index = 0;
    const DatasetConfig* ds = nullptr;
    std::uint64_t seed = 0;
    Dataset train;
    Dataset test;
    QueryBatch factual;
    QueryBatch counterfactual;
    std::map<std::string, std::shared_ptr<const Predictor>> erm;
    std::map<std::string, std::string> erm_errors;
};

std::shared_ptr<const Predictor> fit_predictor(const std::string& id, const Group& g, const TrainConfig& base,
                                               std::uint64_t tag, const Dataset& data, FeatureMap fm,
                                               const Cgm* cgm, const UEstimator* ue) {
    TrainConfig tc = base;
    tc.seed = derive_seed(g.seed, tag, g.dataset_index);
    if (id == "knn") return std::make_shared<const Predictor>(fit_knn(data, fm, tc, cgm, ue));
    if (id == "mlp") return std::make_shared<const Predictor>(fit_mlp(data, fm, tc, cgm, ue));
    if (fm != FeatureMap::XA) throw std::invalid_argument("analytic predictors only consume (x, a)");
    if (id == "analytic") return std::make_shared<const Predictor>(analytic_bayes(g.ds->spec));
    if (id == "analytic_quad") {
        return std::make_shared<const Predictor>(analytic_bayes(g.ds->spec, AnalyticMode::ExactQuadrature));
    }
    throw std::invalid_argument("unknown predictor: " + id);
}

Cgm make_cgm(const std::string& id, const Group& g, const NoiseLevel& nl, std::uint64_t noise_seed) {
    if (id == "oracle") return oracle_cgm(g.ds->spec);
    if (id == "noisy") return noisy_cgm(oracle_cgm(g.ds->spec), nl.beta, nl.alpha, noise_seed);
    if (id == "bounded") return bounded_noisy_cgm(oracle_cgm(g.ds->spec), nl.eps0, noise_seed);
    if (id == "meanshift") return fit_meanshift_cgm(g.train);
    if (id == "rank") return fit_rank_cgm(g.train);
    throw std::invalid_argument("method needs a cgm, got: " + id);
}

UEstimator make_u_estimator(const std::string& id, const Group& g, const NoiseLevel& nl, std::uint64_t noise_seed) {
    if (id == "oracle") return UEstimator::oracle();
    if (id == "noisy") return UEstimator::noisy(nl.beta, nl.alpha, derive_seed(noise_seed, 0x0e57));
    if (id == "meanshift") return UEstimator::fit_meanshift_residual(g.train);
    throw std::invalid_argument("no u estimator for cgm: " + id);
}

std::string cell_id(const Group& g, const MethodConfig& m, const NoiseLevel& nl) {
    std::ostringstream os;
    os << "dataset=" << g.ds->name << " seed=" << g.seed << " method=" << to_string(m.kind)
       << " predictor=" << m.predictor << " cgm=" << m.cgm << " beta=" << format_number(nl.beta)
       << " alpha=" << format_number(nl.alpha) << " eps0=" << format_number(nl.eps0);
    return os.str();
}

std::vector<ResultRow> run_cell(const Group& g, const ExperimentConfig& cfg, std::size_t method_index,
                                std::size_t noise_index) {
    const MethodConfig& m = cfg.methods[method_index];
    const NoiseLevel& nl = cfg.noise[noise_index];
    const std::uint64_t noise_seed = derive_seed(g.seed, 0xc6e0 + g.dataset_index, noise_index);

    auto erm_for = [&](const std::string& id) -> std::shared_ptr<const Predictor> {
        const auto it = g.erm.find(id);
        if (it != g.erm.end()) return it->second;
        const auto e = g.erm_errors.find(id);
        throw std::runtime_error("ERM " + id + " unavailable: " + (e == g.erm_errors.end() ? "not fitted" : e->second));
    };

    FairMethod::Parts parts;
    parts.kind = m.kind;
    parts.p_a1 = is_analytic(m.predictor) ? g.ds->spec.p_a : g.train.frequency_a1();
    const std::uint64_t fit_tag = derive_seed(string_tag(m.predictor), method_index, noise_index);
    switch (m.kind) {
        case MethodKind::Erm: parts.phi = erm_for(m.predictor); break;
        case MethodKind::Pcf:
        case MethodKind::PcfAna:
        case MethodKind::Ecocf:
            parts.phi = erm_for(m.predictor);
            parts.cgm = make_cgm(m.cgm, g, nl, noise_seed);
            break;
        case MethodKind::PcfCrm: {
            if (is_analytic(m.predictor)) throw std::invalid_argument("pcf_crm needs a trainable predictor");
            parts.cgm = make_cgm(m.cgm, g, nl, noise_seed);
            const Dataset aug = crm_augment(g.train, *parts.cgm);
            parts.phi = fit_predictor(m.predictor, g, cfg.train, fit_tag, aug, FeatureMap::XA, nullptr, nullptr);
            break;
        }
        case MethodKind::Cfu:
            if (is_analytic(m.predictor)) throw std::invalid_argument("cfu needs a trainable predictor");
            parts.u_est = make_u_estimator(m.cgm, g, nl, noise_seed);
            parts.phi = fit_predictor(m.predictor, g, cfg.train, fit_tag, g.train, FeatureMap::UOnly, nullptr,
                                      &*parts.u_est);
            break;
        case MethodKind::Cfr:
            if (is_analytic(m.predictor)) throw std::invalid_argument("cfr needs a trainable predictor");
            parts.cgm = make_cgm(m.cgm, g, nl, noise_seed);
            parts.u_est = make_u_estimator(m.cgm, g, nl, noise_seed);
            parts.phi = fit_predictor(m.predictor, g, cfg.train, fit_tag, g.train, FeatureMap::SymXU, &*parts.cgm,
                                      &*parts.u_est);
            break;
    }

    const FairMethod method(parts);
    const auto fair_f = method.predict_fair_batch(g.factual);
    const auto fair_c = method.predict_fair_batch(g.counterfactual);
    std::vector<double> erm_f, erm_c;
    bool need_erm = false;
    for (double l : cfg.lambdas) need_erm = need_erm || l < 1.0;
    if (need_erm) {
        const auto erm = erm_for(m.predictor);
        const FairMethod partner(FairMethod::Parts{MethodKind::Erm, erm, {}, {}, parts.p_a1, 1.0, nullptr});
        erm_f = partner.predict_fair_batch(g.factual);
        erm_c = partner.predict_fair_batch(g.counterfactual);
    }

    const Loss loss = default_loss(g.test.task());
    std::vector<ResultRow> rows;
    for (double lambda : cfg.lambdas) {
        std::vector<double> f = fair_f, c = fair_c;
        if (lambda < 1.0) {
            for (std::size_t i = 0; i < f.size(); ++i) {
                f[i] = mix_with_erm(fair_f[i], erm_f[i], lambda);
                c[i] = mix_with_erm(fair_c[i], erm_c[i], lambda);
            }
        }
        const EvalReport rep = evaluate_predictions(f, c, g.test, loss);
        double err01 = rep.error;
        if (g.test.task() == Task::Classification) err01 = evaluate_predictions(f, c, g.test, Loss::ZeroOne).error;
        ResultRow r;
        r.dataset = g.ds->name;
        r.method = to_string(m.kind);
        r.predictor = m.predictor;
        r.cgm = m.cgm;
        r.alpha = nl.alpha;
        r.beta = nl.beta;
        r.eps0 = nl.eps0;
        r.lambda = lambda;
        r.seed = g.seed;
        r.error = rep.error;
        r.te = rep.te;
        r.te0 = rep.te0;
        r.te1 = rep.te1;
        r.error_zero_one = err01;
        for (double v : {r.error, r.te, r.te0, r.te1}) {
            if (!std::isfinite(v)) throw std::runtime_error("non-finite metric");
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

void prepare_group(Group& g, const ExperimentConfig& cfg, int jobs) {
    g.train = sample(g.ds->spec, cfg.n_train, derive_seed(g.seed, 0xda7a, g.dataset_index));
    g.test = sample(g.ds->spec, cfg.n_test, derive_seed(g.seed, 0x7e57, g.dataset_index));
    g.factual = factual_queries(g.test);
    g.counterfactual = counterfactual_queries(g.test);

    std::vector<std::string> ids;
    for (const auto& m : cfg.methods) {
        if (std::find(ids.begin(), ids.end(), m.predictor) == ids.end()) ids.push_back(m.predictor);
    }
    std::vector<std::shared_ptr<const Predictor>> fitted(ids.size());
    std::vector<std::string> errs(ids.size());
    const long n = static_cast<long>(ids.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(jobs)
    for (long i = 0; i < n; ++i) {
        try {
            fitted[i] = fit_predictor(ids[i], g, cfg.train, string_tag(ids[i]), g.train, FeatureMap::XA, nullptr,
                                      nullptr);
        } catch (const std::exception& e) {
            errs[i] = e.what();
        }
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (fitted[i]) {
            g.erm[ids[i]] = fitted[i];
        } else {
            g.erm_errors[ids[i]] = errs[i];
        }
    }
}

double sample_std(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double left_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

}  // namespace

RunResult run(const ExperimentConfig& config, const RunOptions& opt) {
    config.validate();
    if (opt.jobs < 1) throw std::invalid_argument("jobs must be at least 1");
    if (opt.format != "csv" && opt.format != "json") throw std::invalid_argument("format must be csv or json");

    RunResult result;
    for (std::size_t di = 0; di < config.datasets.size(); ++di) {
        for (std::uint64_t base_seed : config.seeds) {
            Group g;
            g.dataset_index = di;
            g.ds = &config.datasets[di];
            g.seed = base_seed + static_cast<std::uint64_t>(opt.seed_offset);
            prepare_group(g, config, opt.jobs);

            const std::size_t n_noise = config.noise.size();
            const long n_cells = static_cast<long>(config.methods.size() * n_noise);
            std::vector<std::vector<ResultRow>> cell_rows(n_cells);
            std::vector<std::string> cell_errors(n_cells);
#pragma omp parallel for schedule(dynamic, 1) num_threads(opt.jobs)
            for (long c = 0; c < n_cells; ++c) {
                const std::size_t mi = static_cast<std::size_t>(c) / n_noise;
                const std::size_t ni = static_cast<std::size_t>(c) % n_noise;
                try {
                    cell_rows[c] = run_cell(g, config, mi, ni);
                } catch (const std::exception& e) {
                    cell_errors[c] = cell_id(g, config.methods[mi], config.noise[ni]) + ": " + e.what();
                }
            }
            for (long c = 0; c < n_cells; ++c) {
                if (!cell_errors[c].empty()) {
                    result.errors.push_back(cell_errors[c]);
                    continue;
                }
                for (auto& r : cell_rows[c]) result.rows.push_back(std::move(r));
            }
        }
    }
    result.summary = summarize(result.rows);

    if (opt.write_files) {
        const std::string dir = opt.out_dir.empty() ? config.out_dir : opt.out_dir;
        fs::create_directories(dir);
        {
            std::ofstream os(fs::path(dir) / "results.csv", std::ios::binary);
            write_results_csv(os, result.rows);
        }
        {
            std::ofstream os(fs::path(dir) / "summary.csv", std::ios::binary);
            write_summary_csv(os, result.summary);
        }
        {
            std::ofstream os(fs::path(dir) / "errors.log", std::ios::binary);
            for (const auto& e : result.errors) os << e << '\n';
        }
        if (opt.format == "json") {
            std::ofstream os(fs::path(dir) / "results.json", std::ios::binary);
            os << results_to_json(result).dump(2) << '\n';
        }
    }
    return result;
}

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows) {
    struct Acc {
        SummaryRow head;
        std::vector<double> err, te, te0, te1, e01;
    };
    std::vector<Acc> groups;
    std::map<std::string, std::size_t> index;
    for (const auto& r : rows) {
        const std::string key = r.dataset + '\x1f' + r.method + '\x1f' + r.predictor + '\x1f' + r.cgm + '\x1f' +
                                format_number(r.alpha) + '\x1f' + format_number(r.beta) + '\x1f' +
                                format_number(r.eps0) + '\x1f' + format_number(r.lambda);
        auto it = index.find(key);
        if (it == index.end()) {
            Acc a;
            a.head = SummaryRow{r.dataset, r.method, r.predictor, r.cgm, r.alpha, r.beta, r.eps0, r.lambda};
            it = index.emplace(key, groups.size()).first;
            groups.push_back(std::move(a));
        }
        Acc& a = groups[it->second];
        a.err.push_back(r.error);
        a.te.push_back(r.te);
        a.te0.push_back(r.te0);
        a.te1.push_back(r.te1);
        a.e01.push_back(r.error_zero_one);
    }
    std::vector<SummaryRow> out;
    for (auto& a : groups) {
        SummaryRow s = a.head;
        s.n_seeds = a.err.size();
        s.error_mean = left_mean(a.err);
        s.error_std = sample_std(a.err, s.error_mean);
        s.te_mean = left_mean(a.te);
        s.te_std = sample_std(a.te, s.te_mean);
        s.te0_mean = left_mean(a.te0);
        s.te0_std = sample_std(a.te0, s.te0_mean);
        s.te1_mean = left_mean(a.te1);
        s.te1_std = sample_std(a.te1, s.te1_mean);
        s.error_zero_one_mean = left_mean(a.e01);
        s.error_zero_one_std = sample_std(a.e01, s.error_zero_one_mean);
        out.push_back(s);
    }
    return out;
}

void write_results_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
    os << kResultsHeader << '\n';
    for (const auto& r : rows) {
        os << r.dataset << ',' << r.method << ',' << r.predictor << ',' << r.cgm << ',' << format_number(r.alpha)
           << ',' << format_number(r.beta) << ',' << format_number(r.eps0) << ',' << format_number(r.lambda) << ','
           << r.seed << ',' << format_number(r.error) << ',' << format_number(r.te) << ','
           << format_number(r.te0) << ',' << format_number(r.te1) << '\n';
    }
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
    os << "dataset,method,predictor,cgm,alpha,beta,eps0,lambda,n_seeds,error_mean,error_std,te_mean,te_std,"
          "te0_mean,te0_std,te1_mean,te1_std,error_zero_one_mean,error_zero_one_std\n";
    for (const auto& s : rows) {
        os << s.dataset << ',' << s.method << ',' << s.predictor << ',' << s.cgm << ',' << format_number(s.alpha)
           << ',' << format_number(s.beta) << ',' << format_number(s.eps0) << ',' << format_number(s.lambda) << ','
           << s.n_seeds;
        for (double v : {s.error_mean, s.error_std, s.te_mean, s.te_std, s.te0_mean, s.te0_std, s.te1_mean,
                         s.te1_std, s.error_zero_one_mean, s.error_zero_one_std}) {
            os << ',' << format_number(v);
        }
        os << '\n';
    }
}

nlohmann::json results_to_json(const RunResult& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& x : r.rows) {
        rows.push_back({{"dataset", x.dataset}, {"method", x.method}, {"predictor", x.predictor}, {"cgm", x.cgm},
                        {"alpha", x.alpha}, {"beta", x.beta}, {"eps0", x.eps0}, {"lambda", x.lambda},
                        {"seed", x.seed}, {"error", x.error}, {"te", x.te}, {"te0", x.te0}, {"te1", x.te1},
                        {"error_zero_one", x.error_zero_one}});
    }
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& s : r.summary) {
        summary.push_back({{"dataset", s.dataset}, {"method", s.method}, {"predictor", s.predictor},
                           {"cgm", s.cgm}, {"alpha", s.alpha}, {"beta", s.beta}, {"eps0", s.eps0},
                           {"lambda", s.lambda}, {"n_seeds", s.n_seeds}, {"error_mean", s.error_mean},
                           {"error_std", s.error_std}, {"te_mean", s.te_mean}, {"te_std", s.te_std},
                           {"te0_mean", s.te0_mean}, {"te0_std", s.te0_std}, {"te1_mean", s.te1_mean},
                           {"te1_std", s.te1_std}, {"error_zero_one_mean", s.error_zero_one_mean},
                           {"error_zero_one_std", s.error_zero_one_std}});
    }
    return {{"rows", rows}, {"summary", summary}, {"errors", r.errors}};
}

std::vector<ResultRow> read_results_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("results csv: missing header");
    std::vector<std::string> cols;
    {
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    const std::vector<std::string> required{"dataset", "method", "predictor", "cgm", "alpha", "beta", "eps0",
                                            "lambda",  "seed",   "error",     "te",  "te0",   "te1"};
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < cols.size(); ++i) pos[cols[i]] = i;
    for (const auto& r : required) {
        if (!pos.count(r)) throw std::runtime_error("results csv: missing column " + r);
    }
    std::vector<ResultRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) f.push_back(c);
        if (f.size() < cols.size()) f.resize(cols.size());
        auto num = [&](const char* k) { return std::stod(f[pos.at(k)]); };
        ResultRow r;
        r.dataset = f[pos["dataset"]];
        r.method = f[pos["method"]];
        r.predictor = f[pos["predictor"]];
        r.cgm = f[pos["cgm"]];
        r.alpha = num("alpha");
        r.beta = num("beta");
        r.eps0 = num("eps0");
        r.lambda = num("lambda");
        r.seed = std::stoull(f[pos["seed"]]);
        r.error = num("error");
        r.te = num("te");
        r.te0 = num("te0");
        r.te1 = num("te1");
        r.error_zero_one = r.error;
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace pcf::harness
