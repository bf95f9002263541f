#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace tcs::io {

/// Writes to a sibling temporary file then renames it over the target.
void write_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_text(const std::filesystem::path& path);

/// Shortest decimal text that round-trips the double.
std::string fmt_double(double v);

/// Minimal delimited-table builder. Header cells carry units, e.g. "tau_credits".
class CsvTable
{
public:
    explicit CsvTable(std::vector<std::string> header);

    void add_row(std::vector<std::string> cells);
    std::string str() const;
    std::size_t rows() const noexcept { return _rows.size(); }

private:
    std::vector<std::string> _header;
    std::vector<std::vector<std::string>> _rows;
};

} // namespace tcs::io
