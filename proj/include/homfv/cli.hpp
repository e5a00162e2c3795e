#pragma once

// Command-line front end: subcommands corrector, homogenize, study, solve and selftest.
// Exit status 0 on success, 2 for configuration errors, 3 for assembly or solver failures,
// 4 for I/O errors, 1 when the self-test finds a failing check.

#include <iosfwd>
#include <string>
#include <vector>

namespace homfv::cli {

/// Environment variable that replaces the configured output directory (an explicit --out wins).
inline constexpr const char* kOutputDirEnv = "HOMFV_OUTPUT_DIR";

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Comma-separated table as written by the CLI. Cells are kept as text.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name; throws IoError when absent.
    [[nodiscard]] std::size_t column(const std::string& name) const;
    /// Cell as a number ("inf" and "-inf" accepted); throws IoError otherwise.
    [[nodiscard]] double number(std::size_t row, const std::string& name) const;
};

/// Throws IoError on ragged rows or an empty input.
[[nodiscard]] CsvTable read_csv(std::istream& is);
[[nodiscard]] CsvTable load_csv(const std::string& path);

}  // namespace homfv::cli
