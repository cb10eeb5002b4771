#include "pcf/harness/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

namespace pcf::harness {

namespace {

const std::vector<std::string> kNumeric{"alpha", "beta", "eps0", "lambda", "error", "te", "te0", "te1"};
const std::vector<std::string> kText{"dataset", "method", "predictor", "cgm", "alpha", "beta", "eps0", "lambda", "seed"};

double numeric_field(const SummaryRow& r, const std::string& c) {
    if (c == "alpha") return r.alpha;
    if (c == "beta") return r.beta;
    if (c == "eps0") return r.eps0;
    if (c == "lambda") return r.lambda;
    if (c == "error") return r.error_mean;
    if (c == "te") return r.te_mean;
    if (c == "te0") return r.te0_mean;
    if (c == "te1") return r.te1_mean;
    throw std::invalid_argument("plot: unknown numeric column " + c);
}

std::string text_field(const SummaryRow& r, const std::string& c) {
    if (c == "dataset") return r.dataset;
    if (c == "method") return r.method;
    if (c == "predictor") return r.predictor;
    if (c == "cgm") return r.cgm;
    if (c == "alpha") return format_number(r.alpha);
    if (c == "beta") return format_number(r.beta);
    if (c == "eps0") return format_number(r.eps0);
    if (c == "lambda") return format_number(r.lambda);
    throw std::invalid_argument("plot: cannot group by column " + c);
}

std::string escape(const std::string& s) {
    std::string o;
    for (char ch : s) {
        switch (ch) {
            case '<': o += "&lt;"; break;
            case '>': o += "&gt;"; break;
            case '&': o += "&amp;"; break;
            case '"': o += "&quot;"; break;
            default: o += ch;
        }
    }
    return o;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

std::string render_svg(const std::vector<ResultRow>& rows, const PlotOptions& opt, PlotStats* stats) {
    for (const auto& c : {opt.x, opt.y}) {
        if (std::find(kNumeric.begin(), kNumeric.end(), c) == kNumeric.end()) {
            throw std::invalid_argument("plot: unknown axis column " + c);
        }
    }
    for (const auto& c : opt.group_by) {
        if (c == "seed" || std::find(kText.begin(), kText.end(), c) == kText.end()) {
            throw std::invalid_argument("plot: cannot group by column " + c);
        }
    }
    const auto points = summarize(rows);

    // series -> (curve key without lambda -> points)
    std::vector<std::string> series_names;
    std::map<std::string, std::map<std::string, std::vector<const SummaryRow*>>> series;
    for (const auto& p : points) {
        std::string name;
        for (std::size_t i = 0; i < opt.group_by.size(); ++i) {
            if (i) name += " / ";
            name += text_field(p, opt.group_by[i]);
        }
        if (!series.count(name)) series_names.push_back(name);
        const std::string curve = p.dataset + '|' + p.method + '|' + p.predictor + '|' + p.cgm + '|' +
                                  format_number(p.alpha) + '|' + format_number(p.beta) + '|' + format_number(p.eps0);
        series[name][curve].push_back(&p);
    }

    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    if (!points.empty()) {
        x0 = y0 = INFINITY;
        x1 = y1 = -INFINITY;
        for (const auto& p : points) {
            x0 = std::min(x0, numeric_field(p, opt.x));
            x1 = std::max(x1, numeric_field(p, opt.x));
            y0 = std::min(y0, numeric_field(p, opt.y));
            y1 = std::max(y1, numeric_field(p, opt.y));
        }
        const double px = (x1 - x0) > 0 ? 0.05 * (x1 - x0) : 0.5;
        const double py = (y1 - y0) > 0 ? 0.05 * (y1 - y0) : 0.5;
        x0 -= px;
        x1 += px;
        y0 -= py;
        y1 += py;
    }

    const double left = 70, right = 200, top = 40, bottom = 50;
    const double pw = opt.width - left - right, ph = opt.height - top - bottom;
    auto sx = [&](double v) { return left + (v - x0) / (x1 - x0) * pw; };
    auto sy = [&](double v) { return top + ph - (v - y0) / (y1 - y0) * ph; };

    PlotStats st;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\"" << opt.height
       << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!opt.title.empty()) {
        os << "<text x=\"" << num(left + pw / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
           << escape(opt.title) << "</text>\n";
    }
    os << "<g class=\"axes\" stroke=\"black\" fill=\"none\">\n";
    os << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(left + pw) << "\" y2=\""
       << num(top + ph) << "\"/>\n";
    os << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left) << "\" y2=\""
       << num(top + ph) << "\"/>\n";
    os << "</g>\n<g class=\"ticks\">\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
        os << "<text x=\"" << num(sx(xv)) << "\" y=\"" << num(top + ph + 16) << "\" text-anchor=\"middle\">"
           << tick(xv) << "</text>\n";
        os << "<text x=\"" << num(left - 6) << "\" y=\"" << num(sy(yv) + 4) << "\" text-anchor=\"end\">" << tick(yv)
           << "</text>\n";
    }
    os << "</g>\n";
    os << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(opt.height - 12) << "\" text-anchor=\"middle\">"
       << escape(opt.x) << "</text>\n";
    os << "<text x=\"16\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << num(top + ph / 2) << ")\">" << escape(opt.y) << "</text>\n";

    for (std::size_t si = 0; si < series_names.size(); ++si) {
        const std::string& name = series_names[si];
        const char* color = kPalette[si % (sizeof kPalette / sizeof kPalette[0])];
        os << "<g class=\"series\" data-name=\"" << escape(name) << "\" stroke=\"" << color << "\" fill=\"" << color
           << "\">\n";
        for (auto& [curve, pts] : series[name]) {
            std::vector<const SummaryRow*> sorted = pts;
            std::stable_sort(sorted.begin(), sorted.end(),
                             [](const SummaryRow* a, const SummaryRow* b) { return a->lambda < b->lambda; });
            if (sorted.size() > 1) {
                os << "<polyline class=\"sweep\" fill=\"none\" points=\"";
                for (std::size_t i = 0; i < sorted.size(); ++i) {
                    if (i) os << ' ';
                    os << num(sx(numeric_field(*sorted[i], opt.x))) << ',' << num(sy(numeric_field(*sorted[i], opt.y)));
                }
                os << "\"/>\n";
                st.polyline_vertices.push_back(sorted.size());
            }
            for (const auto* p : sorted) {
                os << "<circle class=\"marker\" cx=\"" << num(sx(numeric_field(*p, opt.x))) << "\" cy=\""
                   << num(sy(numeric_field(*p, opt.y))) << "\" r=\"4\"/>\n";
                ++st.markers;
            }
        }
        os << "</g>\n";
    }

    os << "<g class=\"legend\">\n";
    for (std::size_t si = 0; si < series_names.size(); ++si) {
        const char* color = kPalette[si % (sizeof kPalette / sizeof kPalette[0])];
        const double ly = top + 10 + 18.0 * static_cast<double>(si);
        os << "<rect x=\"" << num(left + pw + 16) << "\" y=\"" << num(ly - 8) << "\" width=\"10\" height=\"10\" fill=\""
           << color << "\"/>\n";
        os << "<text x=\"" << num(left + pw + 32) << "\" y=\"" << num(ly + 1) << "\">" << escape(series_names[si])
           << "</text>\n";
    }
    os << "</g>\n</svg>\n";
    st.series = series_names.size();
    if (stats) *stats = st;
    return os.str();
}

}  // namespace pcf::harness
