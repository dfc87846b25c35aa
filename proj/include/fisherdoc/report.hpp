#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace fisherdoc {

/// A header row plus string cells, rendered as TSV or a Markdown table.
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name; throws when absent.
    std::size_t column(const std::string& name) const;
};

std::string to_tsv(const Table& table);
std::string to_markdown(const Table& table);
Table read_tsv(const std::filesystem::path& path);

/// `fraction` in percent with `decimals` digits, e.g. 0.893 -> "89.3".
std::string percent(double fraction, int decimals = 1);
/// "89.3 ± 0.7" from fractions.
std::string percent_pm(double mean, double spread, int decimals = 1);
/// Shortest round-trip representation of `value`.
std::string format_number(double value);

/// Writes `text` to `path` (creating parent directories).
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fisherdoc
