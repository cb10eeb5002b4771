#include "pcf/cgm.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "pcf/numeric.hpp"

namespace pcf {

std::string to_string(Cgm::Kind k) {
    switch (k) {
        case Cgm::Kind::Oracle: return "oracle";
        case Cgm::Kind::NoisyOracle: return "noisy";
        case Cgm::Kind::BoundedNoisyOracle: return "bounded";
        case Cgm::Kind::MeanShift: return "meanshift";
        case Cgm::Kind::RankPreserving: return "rank";
    }
    return "unknown";
}

std::string to_string(UEstimator::Kind k) {
    switch (k) {
        case UEstimator::Kind::OracleU: return "oracle";
        case UEstimator::Kind::NoisyU: return "noisy";
        case UEstimator::Kind::MeanShiftResidual: return "meanshift";
    }
    return "unknown";
}

double empirical_cdf(std::span<const double> sorted, double x) {
    const std::size_t m = sorted.size();
    if (m < 2) throw std::invalid_argument("empirical_cdf: need at least two samples");
    if (x <= sorted.front()) return 0.0;
    if (x >= sorted.back()) return 1.0;
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - sorted.begin()) - 1;
    const double lo = sorted[i];
    const double hi = sorted[i + 1];
    const double frac = hi > lo ? (x - lo) / (hi - lo) : 0.0;
    return (static_cast<double>(i) + frac) / static_cast<double>(m - 1);
}

double empirical_quantile(std::span<const double> sorted, double p) {
    const std::size_t m = sorted.size();
    if (m < 2) throw std::invalid_argument("empirical_quantile: need at least two samples");
    if (p <= 0.0) return sorted.front();
    if (p >= 1.0) return sorted.back();
    const double t = p * static_cast<double>(m - 1);
    std::size_t i = static_cast<std::size_t>(std::floor(t));
    if (i > m - 2) i = m - 2;
    const double frac = t - static_cast<double>(i);
    return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

Cgm oracle_cgm(const ScmSpec& spec) {
    spec.validate();
    Cgm g;
    g.kind_ = Cgm::Kind::Oracle;
    g.dim_ = spec.x_dim();
    g.shift_ = spec.w_a;
    return g;
}

Cgm noisy_cgm(const Cgm& base, double beta, double alpha, std::uint64_t seed) {
    if (base.kind_ != Cgm::Kind::Oracle) throw std::invalid_argument("noisy_cgm: base must be the oracle");
    if (!(alpha >= 0.0)) throw std::invalid_argument("noisy_cgm: alpha must be non-negative");
    Cgm g = base;
    g.kind_ = Cgm::Kind::NoisyOracle;
    g.beta_ = beta;
    g.alpha_ = alpha;
    g.seed_ = seed;
    return g;
}

Cgm bounded_noisy_cgm(const Cgm& base, double eps0, std::uint64_t seed) {
    if (base.kind_ != Cgm::Kind::Oracle) throw std::invalid_argument("bounded_noisy_cgm: base must be the oracle");
    if (!(eps0 >= 0.0)) throw std::invalid_argument("bounded_noisy_cgm: eps0 must be non-negative");
    Cgm g = base;
    g.kind_ = Cgm::Kind::BoundedNoisyOracle;
    g.eps0_ = eps0;
    g.seed_ = seed;
    return g;
}

namespace {

void require_both_groups(const Dataset& data, const char* who) {
    if (data.count_group(0) == 0 || data.count_group(1) == 0) {
        throw std::invalid_argument(std::string(who) + ": both groups must be present");
    }
}

std::vector<double> group_mean(const Dataset& data, int a) {
    std::vector<double> sum(data.dim(), 0.0);
    std::size_t n = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.a(i) != a) continue;
        const auto x = data.x(i);
        for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += x[j];
        ++n;
    }
    for (auto& s : sum) s /= static_cast<double>(n);
    return sum;
}

}  // namespace

Cgm fit_meanshift_cgm(const Dataset& data) {
    require_both_groups(data, "fit_meanshift_cgm");
    const auto m0 = group_mean(data, 0);
    const auto m1 = group_mean(data, 1);
    Cgm g;
    g.kind_ = Cgm::Kind::MeanShift;
    g.dim_ = data.dim();
    g.shift_.resize(g.dim_);
    for (std::size_t j = 0; j < g.dim_; ++j) g.shift_[j] = m1[j] - m0[j];
    return g;
}

Cgm fit_rank_cgm(const Dataset& data) {
    if (data.dim() != 1) throw std::invalid_argument("fit_rank_cgm: only x_dim = 1 is supported");
    require_both_groups(data, "fit_rank_cgm");
    Cgm g;
    g.kind_ = Cgm::Kind::RankPreserving;
    g.dim_ = 1;
    for (std::size_t i = 0; i < data.size(); ++i) g.sorted_[data.a(i)].push_back(data.x(i)[0]);
    for (auto& s : g.sorted_) {
        if (s.size() < 2) throw std::invalid_argument("fit_rank_cgm: each group needs at least two samples");
        std::sort(s.begin(), s.end());
    }
    return g;
}

std::uint64_t Cgm::query_hash(std::span<const double> x, int a, int a_prime) const {
    std::uint64_t h = hash_combine(splitmix64(seed_), static_cast<std::uint64_t>(kind_));
    h = hash_doubles(h, x);
    return hash_combine(hash_combine(h, static_cast<std::uint64_t>(a)), static_cast<std::uint64_t>(a_prime));
}

double Cgm::rank_map(double x, int a, int a_prime) const {
    return empirical_quantile(sorted_[a_prime], empirical_cdf(sorted_[a], x));
}

void Cgm::apply(std::span<const double> x, int a, int a_prime, std::span<double> out) const {
    if (x.size() != dim_ || out.size() != dim_) throw std::invalid_argument("Cgm: dimension mismatch");
    std::copy(x.begin(), x.end(), out.begin());
    if (a_prime == a) return;
    const double step = static_cast<double>(a_prime - a);
    switch (kind_) {
        case Kind::Oracle:
        case Kind::MeanShift:
            for (std::size_t j = 0; j < dim_; ++j) out[j] += shift_[j] * step;
            return;
        case Kind::NoisyOracle: {
            std::mt19937_64 rng(query_hash(x, a, a_prime));
            std::normal_distribution<double> normal(0.0, 1.0);
            for (std::size_t j = 0; j < dim_; ++j) out[j] += shift_[j] * step + beta_ + alpha_ * normal(rng);
            return;
        }
        case Kind::BoundedNoisyOracle: {
            for (std::size_t j = 0; j < dim_; ++j) out[j] += shift_[j] * step;
            if (eps0_ == 0.0) return;
            std::mt19937_64 rng(query_hash(x, a, a_prime));
            std::normal_distribution<double> normal(0.0, 1.0);
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            std::vector<double> dir(dim_);
            double norm = 0.0;
            do {
                norm = 0.0;
                for (auto& v : dir) {
                    v = normal(rng);
                    norm += v * v;
                }
                norm = std::sqrt(norm);
            } while (norm == 0.0);
            const double radius = eps0_ * std::pow(unif(rng), 1.0 / static_cast<double>(dim_));
            double pert_norm = 0.0;
            for (auto& v : dir) {
                v *= radius / norm;
                pert_norm += v * v;
            }
            // round-off must never push the perturbation outside the ball
            while (std::sqrt(pert_norm) > eps0_) {
                pert_norm = 0.0;
                for (auto& v : dir) {
                    v *= 1.0 - 1e-15;
                    pert_norm += v * v;
                }
            }
            for (std::size_t j = 0; j < dim_; ++j) out[j] += dir[j];
            return;
        }
        case Kind::RankPreserving:
            out[0] = rank_map(x[0], a, a_prime);
            return;
    }
}

std::vector<double> Cgm::operator()(std::span<const double> x, int a, int a_prime) const {
    std::vector<double> out(dim_);
    apply(x, a, a_prime, out);
    return out;
}

nlohmann::json Cgm::to_json() const {
    nlohmann::json j{{"kind", to_string(kind_)}, {"dim", dim_}, {"seed", seed_}};
    switch (kind_) {
        case Kind::Oracle: j["w_a"] = shift_; break;
        case Kind::NoisyOracle:
            j["w_a"] = shift_;
            j["beta"] = beta_;
            j["alpha"] = alpha_;
            break;
        case Kind::BoundedNoisyOracle:
            j["w_a"] = shift_;
            j["eps0"] = eps0_;
            break;
        case Kind::MeanShift: j["delta"] = shift_; break;
        case Kind::RankPreserving:
            j["quantiles_a0"] = sorted_[0];
            j["quantiles_a1"] = sorted_[1];
            break;
    }
    return j;
}

Cgm Cgm::from_json(const nlohmann::json& j) {
    const auto kind = j.at("kind").get<std::string>();
    Cgm g;
    g.dim_ = j.at("dim").get<std::size_t>();
    g.seed_ = j.value("seed", std::uint64_t{0});
    if (kind == "oracle" || kind == "noisy" || kind == "bounded") {
        g.shift_ = j.at("w_a").get<std::vector<double>>();
        g.kind_ = kind == "oracle" ? Kind::Oracle : kind == "noisy" ? Kind::NoisyOracle : Kind::BoundedNoisyOracle;
        g.beta_ = j.value("beta", 0.0);
        g.alpha_ = j.value("alpha", 0.0);
        g.eps0_ = j.value("eps0", 0.0);
    } else if (kind == "meanshift") {
        g.kind_ = Kind::MeanShift;
        g.shift_ = j.at("delta").get<std::vector<double>>();
    } else if (kind == "rank") {
        g.kind_ = Kind::RankPreserving;
        g.sorted_[0] = j.at("quantiles_a0").get<std::vector<double>>();
        g.sorted_[1] = j.at("quantiles_a1").get<std::vector<double>>();
    } else {
        throw std::invalid_argument("Cgm::from_json: unknown kind " + kind);
    }
    if (g.kind_ != Kind::RankPreserving && g.shift_.size() != g.dim_) {
        throw std::invalid_argument("Cgm::from_json: shift length does not match dim");
    }
    return g;
}

UEstimator UEstimator::oracle() { return UEstimator{}; }

UEstimator UEstimator::noisy(double beta, double alpha, std::uint64_t seed) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("UEstimator::noisy: alpha must be non-negative");
    UEstimator e;
    e.kind_ = Kind::NoisyU;
    e.beta_ = beta;
    e.alpha_ = alpha;
    e.seed_ = seed;
    return e;
}

UEstimator UEstimator::fit_meanshift_residual(const Dataset& data) {
    require_both_groups(data, "UEstimator::fit_meanshift_residual");
    UEstimator e;
    e.kind_ = Kind::MeanShiftResidual;
    e.mean_[0] = group_mean(data, 0);
    e.mean_[1] = group_mean(data, 1);
    return e;
}

std::vector<double> UEstimator::estimate(std::span<const double> x, int a,
                                         std::optional<std::span<const double>> hidden_u) const {
    switch (kind_) {
        case Kind::OracleU:
            if (!hidden_u) throw std::invalid_argument("UEstimator: oracle estimate needs the hidden u");
            return {hidden_u->begin(), hidden_u->end()};
        case Kind::NoisyU: {
            if (!hidden_u) throw std::invalid_argument("UEstimator: noisy estimate needs the hidden u");
            std::vector<double> u(hidden_u->begin(), hidden_u->end());
            std::uint64_t h = hash_combine(splitmix64(seed_), 0x75ULL);
            h = hash_combine(hash_doubles(h, x), static_cast<std::uint64_t>(a));
            std::mt19937_64 rng(h);
            std::normal_distribution<double> normal(0.0, 1.0);
            for (auto& v : u) v += beta_ + alpha_ * normal(rng);
            return u;
        }
        case Kind::MeanShiftResidual: {
            if (mean_[a].size() != x.size()) throw std::invalid_argument("UEstimator: dimension mismatch");
            std::vector<double> u(x.size());
            for (std::size_t j = 0; j < u.size(); ++j) u[j] = x[j] - mean_[a][j];
            return u;
        }
    }
    return {};
}

nlohmann::json UEstimator::to_json() const {
    nlohmann::json j{{"kind", to_string(kind_)}};
    if (kind_ == Kind::NoisyU) {
        j["beta"] = beta_;
        j["alpha"] = alpha_;
        j["seed"] = seed_;
    } else if (kind_ == Kind::MeanShiftResidual) {
        j["mean_a0"] = mean_[0];
        j["mean_a1"] = mean_[1];
    }
    return j;
}

std::vector<double> estimate_u(const UEstimator& est, const Dataset& data, std::size_t i) {
    std::optional<std::span<const double>> hidden;
    if (data.has_hidden(i)) hidden = data.u(i);
    return est.estimate(data.x(i), data.a(i), hidden);
}

}  // namespace pcf
