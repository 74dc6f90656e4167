#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracsob::harness {

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Round-trip decimal text of a double (`{:.17g}`), identical on every run.
std::string format_number(double v);

/// One CSV file: `name.csv` with a header line and one line per row.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
};

/// A named pass/fail property. Soft invariants are reported but do not change the exit status.
struct Invariant {
  std::string name;
  bool pass = false;
  std::string detail;
  bool hard = true;
};

/// Extra artifact written verbatim (for instance a field CSV).
struct TextFile {
  std::string name;
  std::string text;
};

struct StudyResult {
  std::string study;
  std::vector<std::string> parameters;  // `key = value` lines echoed into the summary
  std::vector<Table> tables;
  std::vector<Invariant> invariants;
  std::vector<TextFile> files;
  double seconds = 0.0;  // wall time; omitted from the summary in deterministic mode

  bool hard_pass() const;
};

/// Writes every table as CSV plus summary.txt into `dir` (created if needed).
/// Throws ReportError for a result without rows or on I/O failure.
std::vector<std::filesystem::path> emit_report(const StudyResult& result, const std::filesystem::path& dir,
                                               bool deterministic);

/// Summary text as written to summary.txt.
std::string summary_text(const StudyResult& result, bool deterministic);

}  // namespace fracsob::harness
