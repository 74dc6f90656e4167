#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracsob/config.hpp"
#include "fracsob/extension.hpp"
#include "fracsob/report.hpp"

namespace fracsob::harness {

class StudyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Column layout of every CSV table a study can emit.
struct TableSchema {
  std::string table;
  std::vector<std::string> columns;
};
const std::vector<TableSchema>& table_schemas();

/// Executes the configured study. Module errors are rethrown as StudyError with the study context.
StudyResult run_study(const ExperimentConfig& config);

/// run_study + emit_report + summary on `log`. Returns 0 iff every hard invariant passes.
int run(const ExperimentConfig& config, const std::filesystem::path& out_dir, bool deterministic, std::ostream& log);

/// max over vertices of |E(a u + b v) - (a Eu + b Ev)| with one shared cover.
double linearity_defect(const sobolev::ScalarField& u, const sobolev::ScalarField& v, double a, double b,
                        const geometry::Region& omega, const sobolev::SobolevParams& params,
                        const extension::ExtensionOptions& opt);

}  // namespace fracsob::harness
