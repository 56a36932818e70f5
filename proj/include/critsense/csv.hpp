#pragma once

#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace critsense {

// Locale-independent shortest-exact-ish formatting: 15 significant digits in
// scientific notation, "nan"/"inf" for non-finite values.
std::string format_number(double value);

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& os) : os_(os) {}

    // "# key = value" metadata line, written before the header.
    void comment(std::string_view key, std::string_view value);
    void comment(std::string_view key, double value);
    void header(const std::vector<std::string>& columns);
    void row(std::initializer_list<double> values);
    void row(const std::vector<double>& values);

private:
    std::ostream& os_;
};

}  // namespace critsense
