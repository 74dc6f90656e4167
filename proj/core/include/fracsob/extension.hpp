#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracsob/atlas.hpp"
#include "fracsob/geometry.hpp"
#include "fracsob/quadrature.hpp"
#include "fracsob/sobolev.hpp"

namespace fracsob::extension {

using atlas::Chart;
using geometry::ManifoldPtr;
using geometry::Region;
using quadrature::QuadratureSpec;
using sobolev::ScalarField;
using sobolev::SobolevParams;

class ExtensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One literal inequality lhs <= rhs. `margin` is the quadrature error allowance;
/// the check holds when lhs - margin <= rhs.
struct LemmaCheck {
  std::string lemma;     // zero-extension, truncation, transport
  std::string quantity;  // e.g. cross-term, far-field, lp-monotone, pullback-seminorm
  int instance = 0;      // cutoff / chart index (0 = interior cutoff)
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  double ratio = 0.0;  // lhs / rhs, 0 when both vanish
  bool holds = false;
};

LemmaCheck make_check(std::string lemma, std::string quantity, int instance, double lhs, double rhs,
                      double margin);

struct ZeroExtension {
  ScalarField field;  // u* on the whole mesh
  std::vector<LemmaCheck> checks;
  double distance = 0.0;  // dist(M \ omega, K)
};

/// u* = u on omega, 0 elsewhere. `support` is K with closure(K) inside omega, where
/// omega is the domain of u. With `check` set, records the cross-term bound.
ZeroExtension zero_extend(const ScalarField& u, const Region& support, const SobolevParams& params,
                          const QuadratureSpec& q, bool check = true);

/// Simplices of the domain of u on which u is not identically zero.
Region support_of(const ScalarField& u);

struct Truncation {
  ScalarField field;  // psi * u, nodewise on the mesh of u
  std::vector<LemmaCheck> checks;
};

struct TruncationOptions {
  bool check = true;
  bool split_bound = false;  // also verify the seminorm split bound (two seminorm evaluations)
  int instance = 0;
};

/// Nodewise product psi * u on the domain of u. `epsilon` is the near/far split radius.
Truncation truncate(const ScalarField& u, const ScalarField& psi, double lipschitz, double epsilon,
                    const SobolevParams& params, const QuadratureSpec& q, const TruncationOptions& opt = {});

struct ChartExtension {
  ScalarField field;  // u-bar on the chart patch, zero elsewhere
  int reflected = 0;  // patch vertices inside the active ball that were reflected
  int flagged = 0;    // of those, values taken by the fallback along the reflection ray
  double graph_lipschitz = 0.0;
  std::vector<LemmaCheck> checks;
};

/// Even reflection across the boundary of omega in the chart coordinates of `chart`,
/// whose center lies on the boundary of omega. u lives on omega (same mesh as the chart).
/// Throws ExtensionError when the boundary is not a Lipschitz graph in the chart.
/// Vertices are counted as reflected or flagged within `active_radius` (0: the chart radius).
ChartExtension chart_extend(const ScalarField& u, const Chart& chart, const Region& omega,
                            const SobolevParams& params, const QuadratureSpec& q, bool check = true,
                            int instance = 0, double active_radius = 0.0);

/// Norm ratio ||u-bar||_{W(patch)} / ||u||_{W(patch ∩ omega)} over whole chart pieces.
double chart_extension_constant(const ChartExtension& ext, const ScalarField& u, const Chart& chart,
                                const Region& omega, const SobolevParams& params, const QuadratureSpec& q);

struct ExtensionOptions {
  double epsilon = 0.0;             // chart radius on M; 0 selects it from the mesh
  bool size_scaled_radius = true;   // eps_omega = min(eps, |omega|^{1/k} / 4)
  int refinement_levels = 1;        // uniform refinements before the construction
  bool lemma_checks = false;
  bool split_bound = false;
  int checked_charts = -1;          // charts with lemma checks, evenly spaced; -1 checks all
  bool norms = true;                // compute ||Eu||, ||u|| and R
  QuadratureSpec quadrature;
};

struct ExtensionReport {
  std::vector<LemmaCheck> checks;
  double measure = 0.0;  // |omega|
  double epsilon = 0.0;
  int cover_size = 0;
  int refinement_levels = 0;
  int reflected = 0;
  int flagged = 0;
  double agreement_residual = 0.0;  // max |Eu - u| over omega nodes
  double eu_lp_power = 0.0;
  double eu_semi_power = 0.0;
  double eu_power = 0.0;  // ||Eu||^p_{W(M)}
  double eu_error = 0.0;  // quadrature error estimate of eu_power
  double u_lp_power = 0.0;
  double u_semi_power = 0.0;
  double c_omega = 0.0;      // 1 + |omega|^{-sp/k} + |omega|^{(1-s)p/k}
  double ratio = 0.0;        // ||Eu||^p / (C_omega ||u||_Lp^p + |u|^p)
  double naive_ratio = 0.0;  // same with C_omega = 1
};

struct ExtensionResult {
  ScalarField eu;      // on the refined mesh of M
  ScalarField u;       // input on the refined mesh
  Region omega;        // omega on the refined mesh
  ExtensionReport report;
};

double c_omega(double measure, const SobolevParams& params);

/// Composite operator: Eu = sum_i w_i with w_0 = (psi_0 u)* and w_i = (psi_i v_i)*.
ExtensionResult extend(const ScalarField& u, const Region& omega, const SobolevParams& params,
                       const ExtensionOptions& opt = {});

struct RatioRow {
  std::string field;
  double measure = 0.0;
  ExtensionReport report;
};

struct RatioStudy {
  std::vector<RatioRow> rows;
  std::vector<std::string> fields;
  std::vector<double> slope;        // per field, log R vs log |omega|
  std::vector<double> naive_slope;  // per field, C_omega = 1
};

struct NamedField {
  std::string name;
  std::function<double(const geometry::Point&)> f;
};

/// R for every (field, region) pair and the fitted slopes per field.
RatioStudy ratio_study(const std::vector<NamedField>& fields, const std::vector<Region>& regions,
                       const SobolevParams& params, const ExtensionOptions& opt = {});

}  // namespace fracsob::extension
