#include "pcf/scm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "pcf/numeric.hpp"

namespace pcf {

std::string to_string(Form f) { return f == Form::Linear ? "linear" : "cubic"; }
std::string to_string(Task t) { return t == Task::Regression ? "regression" : "classification"; }

Form form_from_string(std::string_view s) {
    if (s == "linear") return Form::Linear;
    if (s == "cubic") return Form::Cubic;
    throw std::invalid_argument("unknown form: " + std::string(s));
}

Task task_from_string(std::string_view s) {
    if (s == "regression") return Task::Regression;
    if (s == "classification") return Task::Classification;
    throw std::invalid_argument("unknown task: " + std::string(s));
}

void ScmSpec::validate() const {
    const std::size_t d = w_a.size();
    if (d == 0) throw std::invalid_argument("ScmSpec: x_dim must be positive");
    if (w_u.size() != d || w_x.size() != d || w_u_prime.size() != d) {
        throw std::invalid_argument("ScmSpec: weight vectors must all have length x_dim");
    }
    for (double w : w_u) {
        if (w == 0.0 || !std::isfinite(w)) throw std::invalid_argument("ScmSpec: w_u must be finite and nonzero");
    }
    if (!(p_a > 0.0 && p_a < 1.0)) throw std::invalid_argument("ScmSpec: p_a must lie in (0, 1)");
}

ScmSpec ScmSpec::scalar(Form form, Task task, double w_a, double w_u, double w_x, double w_u_prime, double w_y,
                        double p_a) {
    ScmSpec s;
    s.form = form;
    s.task = task;
    s.w_a = {w_a};
    s.w_u = {w_u};
    s.w_x = {w_x};
    s.w_u_prime = {w_u_prime};
    s.w_y = w_y;
    s.p_a = p_a;
    return s;
}

ScmSpec ScmSpec::preset(std::string_view name) {
    if (name == "linear-reg") return scalar(Form::Linear, Task::Regression, 1, 1, 1, 1, 1);
    if (name == "cubic-reg") return scalar(Form::Cubic, Task::Regression, 1, 1, 1, 1, 1);
    if (name == "linear-cls") return scalar(Form::Linear, Task::Classification, 2, 1, 1, 1, 1);
    if (name == "cubic-cls") return scalar(Form::Cubic, Task::Classification, 2, 1, 1, 1, 1);
    if (name == "linear-reg-3d") {
        ScmSpec s;
        s.form = Form::Linear;
        s.task = Task::Regression;
        s.w_a = {1.0, 0.5, -0.5};
        s.w_u = {1.0, 1.5, 0.8};
        s.w_x = {1.0, 0.5, 0.25};
        s.w_u_prime = {1.0, 0.5, 0.5};
        s.w_y = 1.0;
        s.p_a = 0.5;
        return s;
    }
    throw std::invalid_argument("unknown dataset preset: " + std::string(name));
}

std::vector<std::string> ScmSpec::preset_names() {
    return {"linear-reg", "cubic-reg", "linear-cls", "cubic-cls", "linear-reg-3d"};
}

void to_json(nlohmann::json& j, const ScmSpec& s) {
    j = nlohmann::json{{"form", to_string(s.form)}, {"task", to_string(s.task)}, {"w_a", s.w_a},
                       {"w_u", s.w_u},          {"w_x", s.w_x},          {"w_u_prime", s.w_u_prime},
                       {"w_y", s.w_y},          {"p_a", s.p_a}};
}

namespace {

std::vector<double> weight_field(const nlohmann::json& j, const char* key, const std::vector<double>& fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (v.is_number()) return {v.get<double>()};
    return v.get<std::vector<double>>();
}

}  // namespace

void from_json(const nlohmann::json& j, ScmSpec& s) {
    ScmSpec base;
    if (j.contains("preset")) base = ScmSpec::preset(j.at("preset").get<std::string>());
    s = base;
    if (j.contains("form")) s.form = form_from_string(j.at("form").get<std::string>());
    if (j.contains("task")) s.task = task_from_string(j.at("task").get<std::string>());
    s.w_a = weight_field(j, "w_a", base.w_a);
    s.w_u = weight_field(j, "w_u", base.w_u);
    s.w_x = weight_field(j, "w_x", base.w_x);
    s.w_u_prime = weight_field(j, "w_u_prime", base.w_u_prime);
    s.w_y = j.value("w_y", base.w_y);
    s.p_a = j.value("p_a", base.p_a);
    s.validate();
}

bool Dataset::all_hidden() const {
    return std::all_of(hidden_.begin(), hidden_.end(), [](std::uint8_t h) { return h != 0; });
}

void Dataset::reserve(std::size_t n) {
    x_.reserve(n * dim_);
    u_.reserve(n * dim_);
    x_cf_.reserve(n * dim_);
    a_.reserve(n);
    y_.reserve(n);
    hidden_.reserve(n);
}

void Dataset::push_back(std::span<const double> x, int a, double y, std::optional<std::span<const double>> u,
                        std::optional<std::span<const double>> x_cf) {
    if (x.size() != dim_) throw std::invalid_argument("Dataset::push_back: x has wrong dimension");
    if (a != 0 && a != 1) throw std::invalid_argument("Dataset::push_back: a must be 0 or 1");
    if (u.has_value() != x_cf.has_value()) {
        throw std::invalid_argument("Dataset::push_back: u and x_cf must be both present or both absent");
    }
    x_.insert(x_.end(), x.begin(), x.end());
    a_.push_back(a);
    y_.push_back(y);
    if (u) {
        if (u->size() != dim_ || x_cf->size() != dim_) {
            throw std::invalid_argument("Dataset::push_back: hidden fields have wrong dimension");
        }
        u_.insert(u_.end(), u->begin(), u->end());
        x_cf_.insert(x_cf_.end(), x_cf->begin(), x_cf->end());
        hidden_.push_back(1);
    } else {
        u_.insert(u_.end(), dim_, std::nan(""));
        x_cf_.insert(x_cf_.end(), dim_, std::nan(""));
        hidden_.push_back(0);
    }
}

void Dataset::push_back(const Record& r) {
    std::optional<std::span<const double>> u;
    std::optional<std::span<const double>> xcf;
    if (r.u) u = std::span<const double>(*r.u);
    if (r.x_cf) xcf = std::span<const double>(*r.x_cf);
    push_back(r.x, r.a, r.y, u, xcf);
}

Record Dataset::record(std::size_t i) const {
    Record r;
    const auto xi = x(i);
    r.x.assign(xi.begin(), xi.end());
    r.a = a_[i];
    r.y = y_[i];
    if (has_hidden(i)) {
        const auto ui = u(i);
        const auto ci = x_cf(i);
        r.u = std::vector<double>(ui.begin(), ui.end());
        r.x_cf = std::vector<double>(ci.begin(), ci.end());
    }
    return r;
}

std::size_t Dataset::count_group(int a) const {
    return static_cast<std::size_t>(std::count(a_.begin(), a_.end(), a));
}

double Dataset::frequency_a1() const {
    if (a_.empty()) throw std::invalid_argument("Dataset::frequency_a1: empty dataset");
    return static_cast<double>(count_group(1)) / static_cast<double>(a_.size());
}

std::vector<double> structural_x(const ScmSpec& spec, std::span<const double> u, int a) {
    std::vector<double> x(spec.x_dim());
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = spec.w_a[j] * a + spec.w_u[j] * u[j];
    return x;
}

std::vector<double> infer_u(const ScmSpec& spec, std::span<const double> x, int a) {
    std::vector<double> u(spec.x_dim());
    for (std::size_t j = 0; j < u.size(); ++j) u[j] = (x[j] - spec.w_a[j] * a) / spec.w_u[j];
    return u;
}

double structural_link(const ScmSpec& spec, std::span<const double> u, int a) {
    double s = 0.0;
    for (std::size_t j = 0; j < spec.x_dim(); ++j) {
        const double xj = spec.w_a[j] * a + spec.w_u[j] * u[j];
        const double fx = spec.form == Form::Linear ? xj : xj * xj * xj;
        s += spec.w_x[j] * fx + spec.w_u_prime[j] * u[j];
    }
    return s;
}

Record make_record(const ScmSpec& spec, std::span<const double> u, int a, double eps_y, double uniform) {
    Record r;
    r.x = structural_x(spec, u, a);
    r.a = a;
    const double link = structural_link(spec, u, a) + spec.w_y * eps_y;
    if (spec.task == Task::Regression) {
        r.y = link;
    } else {
        r.y = uniform < sigmoid(link) ? 1.0 : 0.0;
    }
    r.u = std::vector<double>(u.begin(), u.end());
    r.x_cf = structural_x(spec, u, 1 - a);
    return r;
}

Dataset sample(const ScmSpec& spec, std::size_t n, std::uint64_t seed) {
    spec.validate();
    if (n < 1) throw std::invalid_argument("sample: n must be at least 1");
    const std::size_t d = spec.x_dim();
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution draw_a(spec.p_a);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    Dataset ds(d, spec.task);
    ds.reserve(n);
    std::vector<double> u(d);
    for (std::size_t i = 0; i < n; ++i) {
        const int a = draw_a(rng) ? 1 : 0;
        for (auto& uj : u) uj = normal(rng);
        const double eps = normal(rng);
        const double v = spec.task == Task::Classification ? unif(rng) : 0.5;
        ds.push_back(make_record(spec, u, a, eps, v));
    }
    return ds;
}

double structural_y_mean(const ScmSpec& spec, std::span<const double> u, int a, int quad_nodes) {
    const double link = structural_link(spec, u, a);
    if (spec.task == Task::Regression) return link;
    if (spec.w_y == 0.0) return sigmoid(link);
    const auto& rule = gauss_hermite(quad_nodes);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * sigmoid(link + spec.w_y * rule.nodes[i]);
    return s;
}

std::vector<double> true_counterfactual(const ScmSpec& spec, std::span<const double> x, int a, int a_prime) {
    std::vector<double> out(x.begin(), x.end());
    if (a_prime == a) return out;
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += spec.w_a[j] * (a_prime - a);
    return out;
}

DiscreteScm discretize(const ScmSpec& spec, std::size_t grid_size, double support_radius) {
    spec.validate();
    if (grid_size < 3) throw std::invalid_argument("discretize: grid_size must be at least 3");
    if (!(support_radius > 0.0)) throw std::invalid_argument("discretize: support_radius must be positive");
    if (spec.x_dim() != 1) throw std::invalid_argument("discretize: only scalar U is supported");
    DiscreteScm d{spec, std::vector<double>(grid_size), std::vector<double>(grid_size)};
    const double step = 2.0 * support_radius / static_cast<double>(grid_size - 1);
    for (std::size_t i = 0; i < grid_size; ++i) {
        // mirror-exact grid: node i and node n-1-i are negatives of each other
        const double k = static_cast<double>(i) - 0.5 * static_cast<double>(grid_size - 1);
        d.u_grid[i] = k * step;
        d.weights[i] = std::exp(-0.5 * d.u_grid[i] * d.u_grid[i]);
    }
    const double total = std::accumulate(d.weights.begin(), d.weights.end(), 0.0);
    for (auto& w : d.weights) w /= total;
    return d;
}

}  // namespace pcf
