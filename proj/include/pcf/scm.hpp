#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace pcf {

enum class Form { Linear, Cubic };
enum class Task { Regression, Classification };

std::string to_string(Form f);
std::string to_string(Task t);
Form form_from_string(std::string_view s);
Task task_from_string(std::string_view s);

/// Parametric SCM with a binary sensitive attribute A, exogenous U and
///   X_j = w_a[j] A + w_u[j] U_j
///   link = sum_j w_x[j] f(X_j) + w_u_prime[j] U_j,   f(x) = x or x^3
///   Y = link + w_y eps_Y                 (regression)
///   Y ~ Bernoulli(sigmoid(link + w_y eps_Y))   (classification)
/// with A ~ Bernoulli(p_a) and U_j, eps_Y standard normal.
struct ScmSpec {
    Form form = Form::Linear;
    Task task = Task::Regression;
    std::vector<double> w_a{1.0};
    std::vector<double> w_u{1.0};
    std::vector<double> w_x{1.0};
    std::vector<double> w_u_prime{1.0};
    double w_y = 1.0;
    double p_a = 0.5;

    std::size_t x_dim() const { return w_a.size(); }

    /// Throws std::invalid_argument on inconsistent lengths, w_u[j] == 0 or
    /// p_a outside (0, 1).
    void validate() const;

    static ScmSpec scalar(Form form, Task task, double w_a, double w_u, double w_x, double w_u_prime, double w_y,
                          double p_a = 0.5);

    /// "linear-reg", "cubic-reg", "linear-cls", "cubic-cls" and the
    /// multivariate "linear-reg-3d".
    static ScmSpec preset(std::string_view name);
    static std::vector<std::string> preset_names();
};

void to_json(nlohmann::json& j, const ScmSpec& s);
void from_json(const nlohmann::json& j, ScmSpec& s);

struct Record {
    std::vector<double> x;
    int a = 0;
    double y = 0.0;
    // Evaluation-only ground truth; absent for synthetic (augmented) rows.
    std::optional<std::vector<double>> u;
    std::optional<std::vector<double>> x_cf;
};

/// Column store of records. x, u and x_cf are row-major n x dim.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::size_t dim, Task task) : dim_(dim), task_(task) {}

    std::size_t size() const { return a_.size(); }
    std::size_t dim() const { return dim_; }
    Task task() const { return task_; }
    bool empty() const { return a_.empty(); }

    std::span<const double> x(std::size_t i) const { return {x_.data() + i * dim_, dim_}; }
    std::span<const double> u(std::size_t i) const { return {u_.data() + i * dim_, dim_}; }
    std::span<const double> x_cf(std::size_t i) const { return {x_cf_.data() + i * dim_, dim_}; }
    int a(std::size_t i) const { return a_[i]; }
    double y(std::size_t i) const { return y_[i]; }
    bool has_hidden(std::size_t i) const { return hidden_[i] != 0; }
    bool all_hidden() const;

    const std::vector<double>& x_data() const { return x_; }
    const std::vector<int>& a_data() const { return a_; }
    const std::vector<double>& y_data() const { return y_; }

    void reserve(std::size_t n);
    void push_back(std::span<const double> x, int a, double y, std::optional<std::span<const double>> u = {},
                   std::optional<std::span<const double>> x_cf = {});
    void push_back(const Record& r);
    Record record(std::size_t i) const;

    std::size_t count_group(int a) const;
    /// Fraction of records with A = 1.
    double frequency_a1() const;

private:
    std::size_t dim_ = 1;
    Task task_ = Task::Regression;
    std::vector<double> x_;
    std::vector<int> a_;
    std::vector<double> y_;
    std::vector<double> u_;
    std::vector<double> x_cf_;
    std::vector<std::uint8_t> hidden_;
};

/// i.i.d. draws from the SCM; deterministic in seed.
Dataset sample(const ScmSpec& spec, std::size_t n, std::uint64_t seed);

/// One record for a fixed exogenous draw (u, a, eps_y). For classification
/// `uniform` decides y = [uniform < sigmoid(link + w_y eps_y)].
Record make_record(const ScmSpec& spec, std::span<const double> u, int a, double eps_y, double uniform = 0.5);

/// Structural X equation evaluated at (u, a).
std::vector<double> structural_x(const ScmSpec& spec, std::span<const double> u, int a);
/// Inverse map U = F_X^{-1}(x, a).
std::vector<double> infer_u(const ScmSpec& spec, std::span<const double> x, int a);
/// Noise-free link value at (u, a).
double structural_link(const ScmSpec& spec, std::span<const double> u, int a);

inline constexpr int kDefaultQuadNodes = 64;

/// E[Y | U = u, A = a]. Exact for regression; Gauss-Hermite over eps_Y for
/// classification.
double structural_y_mean(const ScmSpec& spec, std::span<const double> u, int a, int quad_nodes = kDefaultQuadNodes);

/// F_X(F_X^{-1}(x, a), a') = x + w_a (a' - a).
std::vector<double> true_counterfactual(const ScmSpec& spec, std::span<const double> x, int a, int a_prime);

/// U restricted to an equispaced grid on [-r, r], standard-normal weights.
struct DiscreteScm {
    ScmSpec spec;
    std::vector<double> u_grid;
    std::vector<double> weights;
};

DiscreteScm discretize(const ScmSpec& spec, std::size_t grid_size, double support_radius);

}  // namespace pcf
