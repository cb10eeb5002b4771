#include "pcf/dataset_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace pcf {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_dataset_csv(std::ostream& os, const Dataset& ds) {
    const std::size_t d = ds.dim();
    for (std::size_t j = 0; j < d; ++j) os << 'x' << j << ',';
    os << "a,y";
    for (std::size_t j = 0; j < d; ++j) os << ",u" << j;
    for (std::size_t j = 0; j < d; ++j) os << ",xcf" << j;
    os << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (double v : ds.x(i)) os << format_double(v) << ',';
        os << ds.a(i) << ',' << format_double(ds.y(i));
        const bool hidden = ds.has_hidden(i);
        for (std::size_t j = 0; j < d; ++j) os << ',' << (hidden ? format_double(ds.u(i)[j]) : "");
        for (std::size_t j = 0; j < d; ++j) os << ',' << (hidden ? format_double(ds.x_cf(i)[j]) : "");
        os << '\n';
    }
}

void write_dataset_csv(const std::string& path, const Dataset& ds) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_dataset_csv(os, ds);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

Dataset read_dataset_csv(std::istream& is, Task task) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("dataset csv: missing header");
    const auto header = split_csv_line(line);
    if (header.size() < 5 || (header.size() - 2) % 3 != 0) throw std::runtime_error("dataset csv: malformed header");
    const std::size_t d = (header.size() - 2) / 3;
    if (header[d] != "a" || header[d + 1] != "y") throw std::runtime_error("dataset csv: expected a,y after x columns");

    Dataset ds(d, task);
    std::vector<double> x(d), u(d), xcf(d);
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw std::runtime_error("dataset csv: wrong column count on line " + std::to_string(line_no));
        }
        for (std::size_t j = 0; j < d; ++j) x[j] = std::stod(cells[j]);
        const int a = std::stoi(cells[d]);
        const double y = std::stod(cells[d + 1]);
        const bool hidden = !cells[d + 2].empty();
        if (hidden) {
            for (std::size_t j = 0; j < d; ++j) {
                u[j] = std::stod(cells[d + 2 + j]);
                xcf[j] = std::stod(cells[2 * d + 2 + j]);
            }
            ds.push_back(x, a, y, std::span<const double>(u), std::span<const double>(xcf));
        } else {
            ds.push_back(x, a, y);
        }
    }
    return ds;
}

Dataset read_dataset_csv(const std::string& path, Task task) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open for reading: " + path);
    return read_dataset_csv(is, task);
}

}  // namespace pcf
