#include "core/csv.hpp"

#include <cstdio>

namespace nnas {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::trunc), path_(path), columns_(header.size()) {
    require(out_.good(), ErrorKind::Io, "csv: cannot open '" + path + "' for writing");
    row(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
    require(fields.size() == columns_, ErrorKind::InvalidArgument,
            "csv: row width does not match header in '" + path_ + "'");
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) {
            out_ << ',';
        }
        out_ << fields[i];
    }
    out_ << '\n';
}

void CsvWriter::close() {
    out_.flush();
    require(out_.good(), ErrorKind::Io, "csv: write to '" + path_ + "' failed");
    out_.close();
}

} // namespace nnas
