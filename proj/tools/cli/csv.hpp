#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace uhopt::cli {

using Cell = std::variant<std::string, double, long long>;

// Numbers with 12 significant digits, strings quoted only when needed.
std::string format_number(double v);
std::string quote_field(const std::string& s);

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);

    void add_row(std::vector<Cell> row);
    std::size_t rows() const noexcept { return rows_.size(); }
    std::string str() const;
    void write(const std::string& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

}  // namespace uhopt::cli
