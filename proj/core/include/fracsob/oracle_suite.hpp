#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracsob/quadrature.hpp"

namespace fracsob::harness {

class FixtureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A regenerated reference value with its comparison tolerance.
/// A value matches when |actual - expected| <= abs_tol + rel_tol * |expected|.
struct DerivedValue {
  std::string name;
  double value = 0.0;
  double rel_tol = 0.0;
  double abs_tol = 0.0;
  std::string source;
};

/// Value groups: seminorm, oracle, chart, ratio, extension.
const std::vector<std::string>& derived_groups();

struct SuiteOptions {
  quadrature::QuadratureSpec quadrature;  // used by every quadrature-based value
  std::vector<std::string> groups;        // empty: all groups
  bool update = false;                    // overwrite existing fixture values
};

/// Computes every reference value of the selected groups.
std::vector<DerivedValue> compute_derived(const SuiteOptions& opt);

using FixtureMap = std::map<std::string, DerivedValue>;
FixtureMap load_fixtures(const std::filesystem::path& path);
void save_fixtures(const FixtureMap& fixtures, const std::filesystem::path& path);

struct SuiteRow {
  std::string name;
  double expected = 0.0;
  double actual = 0.0;
  double delta = 0.0;      // actual - expected
  double tolerance = 0.0;  // abs_tol + rel_tol * |expected|
  bool pass = false;
  bool created = false;  // absent from the fixtures and written by this run
};

struct SuiteResult {
  std::vector<SuiteRow> rows;
  bool wrote_fixtures = false;
  bool all_pass() const;
};

/// Regenerates the references and diffs them against `fixtures`. Values missing
/// from the file (or all of them when it is absent or empty) are written.
SuiteResult oracle_suite(const std::filesystem::path& fixtures, const SuiteOptions& opt);

/// Compare precomputed values against a fixture map without writing.
SuiteResult compare_fixtures(const std::vector<DerivedValue>& values, const FixtureMap& fixtures);

/// Per-value pass/fail table.
void print_suite(const SuiteResult& result, std::ostream& out);

}  // namespace fracsob::harness
