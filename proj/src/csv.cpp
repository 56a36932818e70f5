#include "critsense/csv.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

namespace critsense {

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (value == 0.0) value = 0.0;  // drop the sign of -0
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::scientific, 14);
    return std::string(buf, res.ptr);
}

void CsvWriter::comment(std::string_view key, std::string_view value) {
    os_ << "# " << key << " = " << value << '\n';
}

void CsvWriter::comment(std::string_view key, double value) { comment(key, format_number(value)); }

void CsvWriter::header(const std::vector<std::string>& columns) {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) os_ << ',';
        os_ << columns[i];
    }
    os_ << '\n';
}

void CsvWriter::row(std::initializer_list<double> values) { row(std::vector<double>(values)); }

void CsvWriter::row(const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) os_ << ',';
        os_ << format_number(values[i]);
    }
    os_ << '\n';
}

}  // namespace critsense
