#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ptip {

/// Locale-independent shortest round-trip formatting ("nan", "inf" for
/// non-finite values).
std::string format_number(double v);

/// In-memory CSV table with a header row; LF line endings, no quoting needed
/// for the numeric and identifier cells written by this library.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> columns);

    CsvWriter& cell(double v);
    CsvWriter& cell(const std::string& s);
    CsvWriter& cell(const char* s) { return cell(std::string(s)); }
    CsvWriter& cell(std::int64_t v);
    CsvWriter& cell(std::size_t v) { return cell(static_cast<std::int64_t>(v)); }
    CsvWriter& cell(int v) { return cell(static_cast<std::int64_t>(v)); }
    CsvWriter& cell(bool v) { return cell(static_cast<std::int64_t>(v ? 1 : 0)); }
    /// Close the current row; throws if the cell count differs from the header.
    void end_row();

    const std::vector<std::string>& columns() const { return columns_; }
    std::size_t rows() const { return rows_; }
    std::string text() const;
    void write(const std::filesystem::path& path) const;

private:
    std::vector<std::string> columns_;
    std::string body_;
    std::vector<std::string> pending_;
    std::size_t rows_ = 0;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);

}  // namespace ptip
