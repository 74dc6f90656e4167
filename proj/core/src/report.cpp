#include "fracsob/report.hpp"

#include <fstream>
#include <system_error>

#include <fmt/format.h>

namespace fracsob::harness {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ReportError(fmt::format("cannot open '{}' for writing", path.string()));
  out << text;
  out.flush();
  if (!out) throw ReportError(fmt::format("write to '{}' failed", path.string()));
}

}  // namespace

std::string format_number(double v) { return fmt::format("{:.17g}", v); }

void Table::add_row(std::vector<std::string> row) {
  if (row.size() != columns.size()) {
    throw ReportError(fmt::format("table '{}': row has {} fields, expected {}", name, row.size(), columns.size()));
  }
  rows.push_back(std::move(row));
}

bool StudyResult::hard_pass() const {
  for (const auto& inv : invariants) {
    if (inv.hard && !inv.pass) return false;
  }
  return true;
}

std::string summary_text(const StudyResult& result, bool deterministic) {
  std::string out = fmt::format("study: {}\n", result.study);
  for (const auto& p : result.parameters) out += fmt::format("  {}\n", p);
  out += "tables:\n";
  for (const auto& t : result.tables) out += fmt::format("  {}.csv: {} rows\n", t.name, t.rows.size());
  out += "invariants:\n";
  int failed = 0;
  for (const auto& inv : result.invariants) {
    if (!inv.pass && inv.hard) ++failed;
    out += fmt::format("  [{}]{} {}{}{}\n", inv.pass ? "PASS" : "FAIL", inv.hard ? "" : " (soft)", inv.name,
                       inv.detail.empty() ? "" : ": ", inv.detail);
  }
  out += fmt::format("result: {} ({} hard invariant{} failed)\n", failed == 0 ? "PASS" : "FAIL", failed,
                     failed == 1 ? "" : "s");
  if (!deterministic) out += fmt::format("wall time: {:.3f} s\n", result.seconds);
  return out;
}

std::vector<std::filesystem::path> emit_report(const StudyResult& result, const std::filesystem::path& dir,
                                               bool deterministic) {
  std::size_t rows = 0;
  for (const auto& t : result.tables) rows += t.rows.size();
  if (rows == 0) throw ReportError(fmt::format("study '{}': no records to emit", result.study));

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ReportError(fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));

  std::vector<std::filesystem::path> written;
  for (const auto& t : result.tables) {
    std::string text;
    for (std::size_t c = 0; c < t.columns.size(); ++c) text += (c ? "," : "") + csv_field(t.columns[c]);
    text += '\n';
    for (const auto& row : t.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) text += (c ? "," : "") + csv_field(row[c]);
      text += '\n';
    }
    const auto path = dir / (t.name + ".csv");
    write_file(path, text);
    written.push_back(path);
  }
  for (const auto& f : result.files) {
    const auto path = dir / f.name;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw ReportError(fmt::format("cannot create '{}': {}", path.parent_path().string(), ec.message()));
    write_file(path, f.text);
    written.push_back(path);
  }
  const auto summary = dir / "summary.txt";
  write_file(summary, summary_text(result, deterministic));
  written.push_back(summary);
  return written;
}

}  // namespace fracsob::harness
