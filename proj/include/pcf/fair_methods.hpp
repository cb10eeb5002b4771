#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcf/cgm.hpp"
#include "pcf/predictor.hpp"
#include "pcf/scm.hpp"

namespace pcf {

enum class MethodKind { Erm, Cfu, Cfr, Ecocf, Pcf, PcfAna, PcfCrm };

std::string to_string(MethodKind k);
MethodKind method_kind_from_string(const std::string& s);

/// A batch of prediction points. `u` carries the hidden exogenous value and
/// is only read by oracle/noisy u estimators.
struct QueryBatch {
    std::size_t dim = 1;
    std::vector<double> x;
    std::vector<int> a;
    std::vector<double> u;

    std::size_t size() const { return a.size(); }
    std::span<const double> x_row(std::size_t i) const { return {x.data() + i * dim, dim}; }
    std::optional<std::span<const double>> u_row(std::size_t i) const {
        if (u.empty()) return std::nullopt;
        return std::span<const double>(u.data() + i * dim, dim);
    }
};

/// (x, a, u) for every test record.
QueryBatch factual_queries(const Dataset& test);
/// (x_cf, 1 - a, u) for every test record; requires ground truth.
QueryBatch counterfactual_queries(const Dataset& test);

/// Weight p(A = a) given P(A = 1).
inline double group_weight(double p_a1, int a) { return a == 1 ? p_a1 : 1.0 - p_a1; }

/// p(a) phi(x, a) + p(1-a) phi(g(x, a, 1-a), 1-a).
double pcf_predict(const Predictor& phi, const Cgm& g, double p_a1, std::span<const double> x, int a);

/// p(a)[p(a) phi(x,a) + (1-p(a)) phi(x,1-a)]
///   + (1-p(a))[(1-p(a)) phi(x',1-a) + p(a) phi(x',a)],  x' = g(x, a, 1-a).
double ecocf_predict(const Predictor& phi, const Cgm& g, double p_a1, std::span<const double> x, int a);

double cfu_predict(const Predictor& phi_u, std::span<const double> u_hat);
double cfr_predict(const Predictor& phi_s, std::span<const double> x, std::span<const double> x_cf_hat,
                   std::span<const double> u_hat);

/// lambda * fair + (1 - lambda) * erm, lambda in [0, 1].
double mix_with_erm(double fair_pred, double erm_pred, double lambda);

/// One assembled prediction strategy. Immutable; prediction is pure.
class FairMethod {
public:
    struct Parts {
        MethodKind kind = MethodKind::Erm;
        std::shared_ptr<const Predictor> phi;
        std::optional<Cgm> cgm;
        std::optional<UEstimator> u_est;
        double p_a1 = 0.5;
        double lambda = 1.0;
        std::shared_ptr<const Predictor> erm;  // mixing partner, needed when lambda < 1
    };

    explicit FairMethod(Parts parts);

    MethodKind kind() const { return p_.kind; }
    double lambda() const { return p_.lambda; }
    double p_a1() const { return p_.p_a1; }
    const Predictor& phi() const { return *p_.phi; }
    const std::optional<Cgm>& cgm() const { return p_.cgm; }

    /// Same method with a different mixing weight.
    FairMethod with_lambda(double lambda, std::shared_ptr<const Predictor> erm) const;

    double predict(std::span<const double> x, int a, std::optional<std::span<const double>> hidden_u = {}) const;
    /// Predictor calls run through the OpenMP batch kernels.
    std::vector<double> predict_batch(const QueryBatch& q) const;
    /// Reference path: one scalar predict per query, brute-force KNN.
    std::vector<double> predict_batch_serial(const QueryBatch& q) const;

    /// Pure-method predictions (lambda ignored) from the batch kernels.
    std::vector<double> predict_fair_batch(const QueryBatch& q) const;

private:
    Parts p_;

    double predict_fair(std::span<const double> x, int a, std::optional<std::span<const double>> hidden_u,
                        bool serial) const;
};

}  // namespace pcf
