#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "core/error.hpp"

namespace nnas {

// Doubles rendered with 17 significant digits, enough to round-trip any
// 64-bit float exactly.
std::string format_double(double v);

// Minimal RFC-4180-style writer: header row, comma separators, newline
// terminated rows, no quoting (fields never contain commas here).
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);

    void row(const std::vector<std::string>& fields);
    void close();

private:
    std::ofstream out_;
    std::string path_;
    std::size_t columns_ = 0;
};

} // namespace nnas
