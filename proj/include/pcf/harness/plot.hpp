#pragma once

#include <string>
#include <vector>

#include "pcf/harness/runner.hpp"

namespace pcf::harness {

struct PlotOptions {
    std::string x = "te";
    std::string y = "error";
    /// Columns whose joined values name a series.
    std::vector<std::string> group_by{"method"};
    std::string title;
    int width = 720;
    int height = 480;
};

struct PlotStats {
    std::size_t series = 0;
    std::size_t markers = 0;
    std::vector<std::size_t> polyline_vertices;
};

/// Static SVG scatter. Rows are first averaged over seeds; points of one
/// series that differ only in lambda are joined by a polyline in lambda order.
/// Throws std::invalid_argument for unknown axis or group columns.
std::string render_svg(const std::vector<ResultRow>& rows, const PlotOptions& opt = {}, PlotStats* stats = nullptr);

}  // namespace pcf::harness
