#include "csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace uhopt::cli {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string quote_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<Cell> row) {
    if (row.size() != header_.size()) throw std::logic_error("csv row width mismatch");
    rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
    std::string out;
    auto line = [&](auto&& cells, auto&& render) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += render(cells[i]);
        }
        out += "\r\n";
    };
    line(header_, [](const std::string& s) { return quote_field(s); });
    for (const auto& row : rows_) {
        line(row, [](const Cell& c) {
            if (auto s = std::get_if<std::string>(&c)) return quote_field(*s);
            if (auto d = std::get_if<double>(&c)) return format_number(*d);
            return std::to_string(std::get<long long>(c));
        });
    }
    return out;
}

void CsvTable::write(const std::string& path) const {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    const std::string s = str();
    f.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace uhopt::cli
