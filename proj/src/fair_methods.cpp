#include "pcf/fair_methods.hpp"

#include <stdexcept>

namespace pcf {

std::string to_string(MethodKind k) {
    switch (k) {
        case MethodKind::Erm: return "erm";
        case MethodKind::Cfu: return "cfu";
        case MethodKind::Cfr: return "cfr";
        case MethodKind::Ecocf: return "ecocf";
        case MethodKind::Pcf: return "pcf";
        case MethodKind::PcfAna: return "pcf_ana";
        case MethodKind::PcfCrm: return "pcf_crm";
    }
    return "unknown";
}

MethodKind method_kind_from_string(const std::string& s) {
    if (s == "erm") return MethodKind::Erm;
    if (s == "cfu") return MethodKind::Cfu;
    if (s == "cfr") return MethodKind::Cfr;
    if (s == "ecocf") return MethodKind::Ecocf;
    if (s == "pcf") return MethodKind::Pcf;
    if (s == "pcf_ana") return MethodKind::PcfAna;
    if (s == "pcf_crm") return MethodKind::PcfCrm;
    throw std::invalid_argument("unknown method: " + s);
}

QueryBatch factual_queries(const Dataset& test) {
    QueryBatch q;
    q.dim = test.dim();
    q.x = test.x_data();
    q.a = test.a_data();
    if (test.all_hidden()) {
        q.u.reserve(test.size() * test.dim());
        for (std::size_t i = 0; i < test.size(); ++i) q.u.insert(q.u.end(), test.u(i).begin(), test.u(i).end());
    }
    return q;
}

QueryBatch counterfactual_queries(const Dataset& test) {
    if (!test.all_hidden()) throw std::invalid_argument("counterfactual_queries: test set lacks ground-truth counterfactuals");
    QueryBatch q;
    q.dim = test.dim();
    q.x.reserve(test.size() * test.dim());
    q.u.reserve(test.size() * test.dim());
    q.a.reserve(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        q.x.insert(q.x.end(), test.x_cf(i).begin(), test.x_cf(i).end());
        q.u.insert(q.u.end(), test.u(i).begin(), test.u(i).end());
        q.a.push_back(1 - test.a(i));
    }
    return q;
}

namespace {

double pcf_combine(double w_a, double phi_factual, double phi_cf) {
    return w_a * phi_factual + (1.0 - w_a) * phi_cf;
}

// phi values ordered as phi(x,a), phi(x,1-a), phi(x',1-a), phi(x',a)
double ecocf_combine(double w_a, double f_xa, double f_xna, double f_cna, double f_ca) {
    const double w_n = 1.0 - w_a;
    return w_a * (w_a * f_xa + w_n * f_xna) + w_n * (w_n * f_cna + w_a * f_ca);
}

void require_xa(const Predictor& phi, const char* who) {
    if (phi.feature_map() != FeatureMap::XA) throw std::invalid_argument(std::string(who) + ": predictor must consume (x, a)");
}

void require_prob(double p, const char* who) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(who) + ": probability outside [0, 1]");
}

}  // namespace

double pcf_predict(const Predictor& phi, const Cgm& g, double p_a1, std::span<const double> x, int a) {
    require_xa(phi, "pcf_predict");
    require_prob(p_a1, "pcf_predict");
    const auto xcf = g(x, a, 1 - a);
    return pcf_combine(group_weight(p_a1, a), phi.predict(x, a), phi.predict(xcf, 1 - a));
}

double ecocf_predict(const Predictor& phi, const Cgm& g, double p_a1, std::span<const double> x, int a) {
    require_xa(phi, "ecocf_predict");
    require_prob(p_a1, "ecocf_predict");
    const auto xcf = g(x, a, 1 - a);
    return ecocf_combine(group_weight(p_a1, a), phi.predict(x, a), phi.predict(x, 1 - a), phi.predict(xcf, 1 - a),
                         phi.predict(xcf, a));
}

double cfu_predict(const Predictor& phi_u, std::span<const double> u_hat) {
    if (phi_u.feature_map() != FeatureMap::UOnly) throw std::invalid_argument("cfu_predict: predictor must consume u_hat");
    return phi_u.predict_features(u_hat);
}

double cfr_predict(const Predictor& phi_s, std::span<const double> x, std::span<const double> x_cf_hat,
                   std::span<const double> u_hat) {
    if (phi_s.feature_map() != FeatureMap::SymXU) throw std::invalid_argument("cfr_predict: predictor must consume sym_xu");
    Aux aux{u_hat, x_cf_hat};
    return phi_s.predict(x, 0, aux);
}

double mix_with_erm(double fair_pred, double erm_pred, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("mix_with_erm: lambda must lie in [0, 1]");
    return lambda * fair_pred + (1.0 - lambda) * erm_pred;
}

FairMethod::FairMethod(Parts parts) : p_(std::move(parts)) {
    if (!p_.phi) throw std::invalid_argument("FairMethod: missing predictor");
    if (!(p_.lambda >= 0.0 && p_.lambda <= 1.0)) throw std::invalid_argument("FairMethod: lambda must lie in [0, 1]");
    if (!(p_.p_a1 > 0.0 && p_.p_a1 < 1.0)) throw std::invalid_argument("FairMethod: p(A=1) must lie in (0, 1)");
    if (p_.lambda < 1.0 && !p_.erm) throw std::invalid_argument("FairMethod: lambda < 1 needs an ERM partner");
    if (p_.erm) require_xa(*p_.erm, "FairMethod");
    switch (p_.kind) {
        case MethodKind::Erm: require_xa(*p_.phi, "FairMethod(erm)"); break;
        case MethodKind::Cfu:
            if (p_.phi->feature_map() != FeatureMap::UOnly) throw std::invalid_argument("FairMethod(cfu): predictor must consume u_hat");
            if (!p_.u_est) throw std::invalid_argument("FairMethod(cfu): missing u estimator");
            break;
        case MethodKind::Cfr:
            if (p_.phi->feature_map() != FeatureMap::SymXU) throw std::invalid_argument("FairMethod(cfr): predictor must consume sym_xu");
            if (!p_.u_est || !p_.cgm) throw std::invalid_argument("FairMethod(cfr): needs a CGM and a u estimator");
            break;
        case MethodKind::Ecocf:
        case MethodKind::Pcf:
        case MethodKind::PcfAna:
        case MethodKind::PcfCrm:
            require_xa(*p_.phi, "FairMethod");
            if (!p_.cgm) throw std::invalid_argument("FairMethod: method needs a CGM");
            if (p_.kind == MethodKind::PcfAna && p_.phi->kind() != PredictorKind::Analytic) {
                throw std::invalid_argument("FairMethod(pcf_ana): predictor must be analytic");
            }
            break;
    }
}

FairMethod FairMethod::with_lambda(double lambda, std::shared_ptr<const Predictor> erm) const {
    Parts p = p_;
    p.lambda = lambda;
    if (erm) p.erm = std::move(erm);
    return FairMethod(std::move(p));
}

double FairMethod::predict_fair(std::span<const double> x, int a, std::optional<std::span<const double>> hidden_u,
                                bool serial) const {
    const Predictor& phi = *p_.phi;
    auto eval = [&](std::span<const double> xx, int aa) {
        const auto f = build_features(FeatureMap::XA, xx, aa);
        return serial ? phi.predict_features_reference(f) : phi.predict_features(f);
    };
    const double w = group_weight(p_.p_a1, a);
    switch (p_.kind) {
        case MethodKind::Erm: return eval(x, a);
        case MethodKind::Pcf:
        case MethodKind::PcfAna:
        case MethodKind::PcfCrm: {
            const auto xcf = (*p_.cgm)(x, a, 1 - a);
            return pcf_combine(w, eval(x, a), eval(xcf, 1 - a));
        }
        case MethodKind::Ecocf: {
            const auto xcf = (*p_.cgm)(x, a, 1 - a);
            return ecocf_combine(w, eval(x, a), eval(x, 1 - a), eval(xcf, 1 - a), eval(xcf, a));
        }
        case MethodKind::Cfu: {
            const auto u = p_.u_est->estimate(x, a, hidden_u);
            return serial ? phi.predict_features_reference(u) : phi.predict_features(u);
        }
        case MethodKind::Cfr: {
            const auto u = p_.u_est->estimate(x, a, hidden_u);
            const auto xcf = (*p_.cgm)(x, a, 1 - a);
            const auto f = build_features(FeatureMap::SymXU, x, a, Aux{std::span<const double>(u), std::span<const double>(xcf)});
            return serial ? phi.predict_features_reference(f) : phi.predict_features(f);
        }
    }
    return 0.0;
}

double FairMethod::predict(std::span<const double> x, int a, std::optional<std::span<const double>> hidden_u) const {
    const double fair = predict_fair(x, a, hidden_u, false);
    if (p_.lambda == 1.0) return fair;
    return mix_with_erm(fair, p_.erm->predict(x, a), p_.lambda);
}

std::vector<double> FairMethod::predict_batch_serial(const QueryBatch& q) const {
    std::vector<double> out(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double fair = predict_fair(q.x_row(i), q.a[i], q.u_row(i), true);
        if (p_.lambda == 1.0) {
            out[i] = fair;
        } else {
            const auto f = build_features(FeatureMap::XA, q.x_row(i), q.a[i]);
            out[i] = mix_with_erm(fair, p_.erm->predict_features_reference(f), p_.lambda);
        }
    }
    return out;
}

namespace {

// Row i of the (x, a) feature matrix for a query set where `flip` selects
// 1 - a and `use_cf` substitutes g(x, a, 1 - a) for x.
FeatureMatrix xa_features(const QueryBatch& q, const Cgm* g, bool use_cf, bool flip) {
    FeatureMatrix m(q.size(), q.dim + 1);
    const auto n = static_cast<std::ptrdiff_t>(q.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        auto row = m.row(i);
        const int a = q.a[i];
        if (use_cf) {
            g->apply(q.x_row(i), a, 1 - a, row.first(q.dim));
        } else {
            const auto x = q.x_row(i);
            std::copy(x.begin(), x.end(), row.begin());
        }
        row[q.dim] = static_cast<double>(flip ? 1 - a : a);
    }
    return m;
}

}  // namespace

std::vector<double> FairMethod::predict_fair_batch(const QueryBatch& q) const {
    const Predictor& phi = *p_.phi;
    const std::size_t n = q.size();
    // Validate up front: nothing may throw inside the parallel regions below.
    if (q.x.size() != n * q.dim) throw std::invalid_argument("QueryBatch: x has wrong size");
    if (p_.cgm && p_.cgm->dim() != q.dim) throw std::invalid_argument("FairMethod: CGM dimension mismatch");
    if (p_.u_est && p_.u_est->kind() != UEstimator::Kind::MeanShiftResidual && q.u.size() != n * q.dim) {
        throw std::invalid_argument("FairMethod: u estimator needs hidden u for every query");
    }
    std::vector<double> out(n);
    switch (p_.kind) {
        case MethodKind::Erm: return phi.predict_batch(xa_features(q, nullptr, false, false));
        case MethodKind::Pcf:
        case MethodKind::PcfAna:
        case MethodKind::PcfCrm: {
            const auto f1 = phi.predict_batch(xa_features(q, nullptr, false, false));
            const auto f2 = phi.predict_batch(xa_features(q, &*p_.cgm, true, true));
            for (std::size_t i = 0; i < n; ++i) out[i] = pcf_combine(group_weight(p_.p_a1, q.a[i]), f1[i], f2[i]);
            return out;
        }
        case MethodKind::Ecocf: {
            const auto f_xa = phi.predict_batch(xa_features(q, nullptr, false, false));
            const auto f_xna = phi.predict_batch(xa_features(q, nullptr, false, true));
            const auto f_cna = phi.predict_batch(xa_features(q, &*p_.cgm, true, true));
            const auto f_ca = phi.predict_batch(xa_features(q, &*p_.cgm, true, false));
            for (std::size_t i = 0; i < n; ++i) {
                out[i] = ecocf_combine(group_weight(p_.p_a1, q.a[i]), f_xa[i], f_xna[i], f_cna[i], f_ca[i]);
            }
            return out;
        }
        case MethodKind::Cfu:
        case MethodKind::Cfr: {
            const bool sym = p_.kind == MethodKind::Cfr;
            FeatureMatrix m(n, sym ? 2 * q.dim : q.dim);
            const auto nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t ii = 0; ii < nn; ++ii) {
                const auto i = static_cast<std::size_t>(ii);
                const auto u = p_.u_est->estimate(q.x_row(i), q.a[i], q.u_row(i));
                std::vector<double> f;
                if (sym) {
                    const auto xcf = (*p_.cgm)(q.x_row(i), q.a[i], 1 - q.a[i]);
                    f = build_features(FeatureMap::SymXU, q.x_row(i), q.a[i],
                                       Aux{std::span<const double>(u), std::span<const double>(xcf)});
                } else {
                    f = u;
                }
                std::copy(f.begin(), f.end(), m.row(i).begin());
            }
            return phi.predict_batch(m);
        }
    }
    return out;
}

std::vector<double> FairMethod::predict_batch(const QueryBatch& q) const {
    auto fair = predict_fair_batch(q);
    if (p_.lambda == 1.0) return fair;
    const auto erm = p_.erm->predict_batch(xa_features(q, nullptr, false, false));
    for (std::size_t i = 0; i < fair.size(); ++i) fair[i] = mix_with_erm(fair[i], erm[i], p_.lambda);
    return fair;
}

}  // namespace pcf
