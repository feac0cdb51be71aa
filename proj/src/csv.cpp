#include "ptip/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ptip/errors.hpp"

namespace ptip {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}

CsvWriter& CsvWriter::cell(double v) {
    pending_.push_back(format_number(v));
    return *this;
}

CsvWriter& CsvWriter::cell(const std::string& s) {
    pending_.push_back(s);
    return *this;
}

CsvWriter& CsvWriter::cell(std::int64_t v) {
    pending_.push_back(std::to_string(v));
    return *this;
}

void CsvWriter::end_row() {
    if (pending_.size() != columns_.size())
        throw PreconditionError("csv row has " + std::to_string(pending_.size()) + " cells, expected " +
                                std::to_string(columns_.size()));
    for (std::size_t i = 0; i < pending_.size(); ++i) {
        if (i) body_ += ',';
        body_ += pending_[i];
    }
    body_ += '\n';
    pending_.clear();
    ++rows_;
}

std::string CsvWriter::text() const {
    std::string out;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (i) out += ',';
        out += columns_[i];
    }
    out += '\n';
    return out + body_;
}

void CsvWriter::write(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path.string() + " for writing");
    f << text();
    if (!f) throw Error("failed writing " + path.string());
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path.string());
    CsvTable t;
    std::string line;
    bool first = true;
    while (std::getline(f, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (first) {
            t.header = std::move(cells);
            first = false;
        } else {
            t.rows.push_back(std::move(cells));
        }
    }
    return t;
}

}  // namespace ptip
