#include "fracsob/studies.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "fracsob/atlas.hpp"
#include "fracsob/sobolev.hpp"

namespace fracsob::harness {

namespace {

using geometry::ManifoldPtr;
using geometry::Region;
using sobolev::ScalarField;
using sobolev::SobolevParams;

constexpr double kExactTol = 1e-12;
constexpr double kOracleTol = 0.02;
constexpr double kSlopeTol = 1e-6;
constexpr double kAgreementTol = 1e-8;
constexpr double kLinearityTol = 1e-10;
constexpr double kLinearA = 0.7;
constexpr double kLinearB = -1.3;

const std::vector<std::string> kPrefix{"mesh", "region", "region_param", "measure", "s", "p",
                                       "far_order", "near_refinement", "separation_ratio"};

std::vector<std::string> with_prefix(std::vector<std::string> tail) {
  std::vector<std::string> out = kPrefix;
  out.insert(out.end(), tail.begin(), tail.end());
  return out;
}

std::string num(double v) { return format_number(v); }
std::string num(int v) { return std::to_string(v); }
std::string flag(bool b) { return b ? "1" : "0"; }

/// Configuration context shared by the rows of a study.
struct Context {
  const ExperimentConfig& cfg;
  ManifoldPtr mesh;
  std::vector<Region> regions;
  int k = 1;

  std::string region_param(std::size_t i) const {
    return cfg.region == RegionKind::whole ? std::string() : num(cfg.schedule[i]);
  }

  std::vector<std::string> prefix(std::size_t region, double measure, double s) const {
    return {cfg.mesh.describe(),
            std::string(to_string(cfg.region)),
            region_param(region),
            num(measure),
            num(s),
            num(cfg.p),
            num(cfg.quadrature.far_order),
            num(cfg.quadrature.near_refinement),
            num(cfg.quadrature.separation_ratio)};
  }

  SobolevParams params(double s) const { return SobolevParams::make(s, cfg.p, k); }
};

std::vector<std::string> row(std::vector<std::string> head, std::initializer_list<std::string> tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

Table make_table(const std::string& name) {
  for (const auto& s : table_schemas()) {
    if (s.table == name) return Table{name, s.columns, {}};
  }
  throw StudyError(fmt::format("no schema for table '{}'", name));
}

/// Vertex-value CSV (`vertex_index,value`) of a field on its whole mesh.
std::string field_csv(const ScalarField& u) {
  std::string out;
  for (int v = 0; v < u.mesh().num_vertices(); ++v) out += fmt::format("{},{}\n", v, num(u.value(v)));
  return out;
}

extension::ExtensionOptions extension_options(const ExperimentConfig& cfg) {
  extension::ExtensionOptions opt;
  opt.refinement_levels = cfg.refinement_levels;
  opt.split_bound = cfg.split_bound;
  opt.checked_charts = cfg.checked_charts;
  opt.quadrature = cfg.quadrature;
  return opt;
}

void norms_study(const Context& ctx, StudyResult& out) {
  auto table = make_table("norms");
  bool exact_ok = true;
  bool oracle_ok = true;
  bool finite_ok = true;
  double worst_oracle = 0.0;
  int oracle_rows = 0;
  for (std::size_t r = 0; r < ctx.regions.size(); ++r) {
    const auto& omega = ctx.regions[r];
    const double measure = geometry::measure(omega);
    for (const auto& name : ctx.cfg.fields) {
      const auto u = ScalarField::sample(omega, field_function(name));
      for (double s : ctx.cfg.s) {
        const auto prm = ctx.params(s);
        const auto rec = sobolev::wsp_norm(u, omega, prm, ctx.cfg.quadrature);
        finite_ok = finite_ok && std::isfinite(rec.wsp) && std::isfinite(rec.error_estimate);
        std::string o;
        std::string ox;
        std::string rel;
        if (ctx.cfg.oracle_resolution > 0) {
          const double ov = sobolev::oracle_seminorm(u, omega, prm, ctx.cfg.oracle_resolution);
          const double oxv = sobolev::oracle_seminorm_extrapolated(u, omega, prm, ctx.cfg.oracle_resolution);
          const double d = oxv > kExactTol ? std::abs(rec.seminorm / oxv - 1.0) : std::abs(rec.seminorm - oxv);
          o = num(ov);
          ox = num(oxv);
          rel = num(d);
          worst_oracle = std::max(worst_oracle, d);
          oracle_ok = oracle_ok && d <= kOracleTol;
          ++oracle_rows;
        }
        if (name == "one") {
          const double lp_expected = std::pow(measure, 1.0 / ctx.cfg.p);
          exact_ok = exact_ok && rec.seminorm == 0.0 && std::abs(rec.lp / lp_expected - 1.0) <= kExactTol;
        }
        table.add_row(row(ctx.prefix(r, measure, s),
                          {name, num(rec.lp), num(std::pow(rec.lp, ctx.cfg.p)), num(rec.seminorm),
                           num(std::pow(rec.seminorm, ctx.cfg.p)), num(rec.wsp), num(rec.error_estimate),
                           num(ctx.cfg.oracle_resolution), o, ox, rel}));
      }
    }
  }
  out.tables.push_back(std::move(table));
  out.invariants.push_back({"finite norms and error estimates", finite_ok, ""});
  out.invariants.push_back({"u = 1 has lp = |omega|^(1/p) and seminorm 0", exact_ok, ""});
  if (oracle_rows > 0) {
    out.invariants.push_back({"seminorm within 2% of the extrapolated oracle", oracle_ok,
                              fmt::format("worst relative difference {:.3e} over {} rows", worst_oracle, oracle_rows)});
  }
}

void chart_rows(const Context& ctx, const std::vector<atlas::Chart>& charts, double eps, Table& table,
                bool& inclusions_ok, double& worst_margin) {
  const double measure = ctx.mesh->total_measure();
  for (std::size_t i = 0; i < charts.size(); ++i) {
    const auto& c = charts[i];
    const auto& m = c.metrics();
    const auto inc = atlas::verify_inclusions(c);
    inclusions_ok = inclusions_ok && inc.inner_ok && inc.outer_ok;
    worst_margin = std::min({worst_margin, inc.inner_margin / eps, inc.outer_margin / eps});
    table.add_row(row(ctx.prefix(0, measure, ctx.cfg.s.front()),
                      {num(static_cast<int>(i)), num(c.center().x()), num(c.center().y()), num(c.center().z()), num(eps),
                       num(m.lipschitz), num(m.inverse_lipschitz), num(m.jacobian), num(m.inverse_jacobian),
                       num(m.piece_lipschitz), num(m.piece_inverse_lipschitz), num(m.sampled_lipschitz),
                       num(m.sampled_inverse_lipschitz), num(inc.inner_margin), num(inc.outer_margin),
                       flag(inc.inner_ok), flag(inc.outer_ok)}));
  }
}

void charts_study(const Context& ctx, StudyResult& out) {
  const double eps = atlas::select_epsilon(ctx.mesh);
  const auto charts = atlas::build_atlas(ctx.mesh, eps);
  auto table = make_table("charts");
  bool inclusions_ok = true;
  double worst = std::numeric_limits<double>::infinity();
  chart_rows(ctx, charts, eps, table, inclusions_ok, worst);
  const auto cst = atlas::estimate_constants(charts);
  auto summary = make_table("chart_constants");
  summary.add_row(row(ctx.prefix(0, ctx.mesh->total_measure(), ctx.cfg.s.front()),
                      {num(eps), num(static_cast<int>(charts.size())), num(cst.L), num(cst.L_hat), num(cst.J),
                       num(cst.J_hat)}));
  out.tables.push_back(std::move(table));
  out.tables.push_back(std::move(summary));
  out.invariants.push_back({"chart inclusions hold at every vertex", inclusions_ok,
                            fmt::format("{} charts, smallest margin / eps {:.3e}", charts.size(), worst)});
  out.invariants.push_back({"L, L_hat >= 1 and J, J_hat > 0", cst.L >= 1.0 - kExactTol && cst.L_hat >= 1.0 - kExactTol &&
                                                                   cst.J > 0.0 && cst.J_hat > 0.0,
                            ""});
}

void scaling_study(const Context& ctx, StudyResult& out) {
  const double eps = atlas::select_epsilon(ctx.mesh);
  const auto charts = atlas::build_atlas(ctx.mesh, eps);
  const Region& omega = ctx.regions.front();
  const auto study = atlas::scaling_study(charts, omega, ctx.cfg.lambdas);
  const double measure = geometry::measure(omega);
  const double lambda_ref = std::pow(measure, -1.0 / ctx.k);
  const auto ref = atlas::scaling_study(charts, omega, {lambda_ref, 1.0});
  const double k = ctx.k;
  const std::array<double, 4> expected{1.0 / k, -1.0 / k, 1.0, -1.0};
  const std::array<double, 4> slopes{study.slope_L, study.slope_L_hat, study.slope_J, study.slope_J_hat};

  auto table = make_table("scaling");
  auto add = [&](const atlas::ScalingRow& r, bool reference) {
    table.add_row(row(ctx.prefix(0, r.measure, ctx.cfg.s.front()),
                      {num(r.lambda), num(r.constants.L), num(r.constants.L_hat), num(r.constants.J),
                       num(r.constants.J_hat), num(slopes[0]), num(slopes[1]), num(slopes[2]), num(slopes[3]),
                       num(expected[0]), num(expected[1]), num(expected[2]), num(expected[3]), flag(reference)}));
  };
  for (const auto& r : study.rows) add(r, false);
  add(ref.rows.front(), true);
  out.tables.push_back(std::move(table));

  double worst = 0.0;
  for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs(slopes[i] - expected[i]));
  out.invariants.push_back({"slopes of L, L_hat, J, J_hat equal {1/k, -1/k, 1, -1} within 1e-6",
                            study.rows.size() >= 2 && worst <= kSlopeTol,
                            fmt::format("largest deviation {:.3e}", worst)});
  auto charts_table = make_table("charts");
  bool inclusions_ok = true;
  double margin = std::numeric_limits<double>::infinity();
  chart_rows(ctx, charts, eps, charts_table, inclusions_ok, margin);
  out.tables.push_back(std::move(charts_table));
  out.invariants.push_back({"chart inclusions hold at every vertex", inclusions_ok,
                            fmt::format("smallest margin / eps {:.3e}", margin)});
}

void lemma_study(const Context& ctx, StudyResult& out) {
  auto checks = make_table("lemma_checks");
  auto summary = make_table("extension");
  int total = 0;
  int failed = 0;
  double worst_ratio = 0.0;
  double residual = 0.0;
  double linearity = 0.0;
  int flagged = 0;
  std::map<std::string, int> per_lemma;
  auto opt = extension_options(ctx.cfg);
  opt.lemma_checks = true;
  opt.norms = false;
  for (std::size_t r = 0; r < ctx.regions.size(); ++r) {
    const auto& omega = ctx.regions[r];
    const double measure = geometry::measure(omega);
    const auto v = ScalarField::sample(omega, field_function("one"));
    for (const auto& name : ctx.cfg.fields) {
      const auto u = ScalarField::sample(omega, field_function(name));
      for (double s : ctx.cfg.s) {
        const auto prm = ctx.params(s);
        const auto res = extension::extend(u, omega, prm, opt);
        const auto& rep = res.report;
        int local_failed = 0;
        for (const auto& c : rep.checks) {
          ++total;
          ++per_lemma[c.lemma];
          if (!c.holds) ++local_failed;
          worst_ratio = std::max(worst_ratio, c.ratio);
          checks.add_row(row(ctx.prefix(r, measure, s),
                             {name, c.lemma, c.quantity, num(c.instance), num(c.lhs), num(c.rhs), num(c.margin),
                              num(c.ratio), flag(c.holds)}));
        }
        failed += local_failed;
        const double lin = linearity_defect(u, v, kLinearA, kLinearB, omega, prm, opt);
        residual = std::max(residual, rep.agreement_residual);
        linearity = std::max(linearity, lin);
        flagged += rep.flagged;
        out.files.push_back({fmt::format("fields/eu_r{}_{}_s{}.csv", r, name, num(s)), field_csv(res.eu)});
        summary.add_row(row(ctx.prefix(r, measure, s),
                            {name, num(rep.epsilon), num(rep.cover_size), num(rep.refinement_levels),
                             num(rep.reflected), num(rep.flagged), num(rep.agreement_residual), num(lin),
                             num(static_cast<int>(rep.checks.size())), num(local_failed)}));
      }
    }
  }
  out.tables.push_back(std::move(checks));
  out.tables.push_back(std::move(summary));
  std::string counts;
  for (const auto& [lemma, n] : per_lemma) counts += fmt::format("{}{}: {}", counts.empty() ? "" : ", ", lemma, n);
  out.invariants.push_back({"every lemma inequality holds with measured constants", total > 0 && failed == 0,
                            fmt::format("{} checks ({}), {} failed, largest lhs/rhs {:.4f}", total, counts, failed,
                                        worst_ratio)});
  out.invariants.push_back({"|Eu - u| <= 1e-8 on omega nodes", residual <= kAgreementTol,
                            fmt::format("max {:.3e}", residual)});
  out.invariants.push_back({"linearity defect <= 1e-10", linearity <= kLinearityTol,
                            fmt::format("max {:.3e}", linearity)});
  out.invariants.push_back({"no reflection fallbacks", flagged == 0, fmt::format("{} flagged", flagged), false});
}

void ratio_study(const Context& ctx, StudyResult& out) {
  auto rows = make_table("ratio");
  auto slopes = make_table("ratio_slopes");
  std::vector<extension::NamedField> fields;
  for (const auto& name : ctx.cfg.fields) fields.push_back({name, field_function(name)});
  const auto opt = extension_options(ctx.cfg);

  std::vector<double> measures;
  for (const auto& r : ctx.regions) measures.push_back(geometry::measure(r));
  const auto [lo, hi] = std::minmax_element(measures.begin(), measures.end());
  const double decades = std::log10(*hi / *lo);
  const int sizes = static_cast<int>(measures.size());

  bool window_ok = true;
  bool naive_ok = true;
  bool naive_tested = false;
  std::string window_detail;
  std::string naive_detail;
  for (double s : ctx.cfg.s) {
    const auto prm = ctx.params(s);
    const auto study = extension::ratio_study(fields, ctx.regions, prm, opt);
    for (std::size_t i = 0; i < study.rows.size(); ++i) {
      const auto& r = study.rows[i];
      const auto& rep = r.report;
      const std::size_t region = i % ctx.regions.size();
      rows.add_row(row(ctx.prefix(region, r.measure, s),
                       {r.field, num(rep.epsilon), num(rep.cover_size), num(rep.c_omega), num(rep.ratio),
                        num(rep.naive_ratio), num(rep.u_lp_power), num(rep.u_semi_power), num(rep.eu_power),
                        num(rep.eu_lp_power), num(rep.eu_semi_power), num(rep.eu_error), num(rep.agreement_residual),
                        num(rep.flagged)}));
    }
    const bool control = std::abs(s - 0.75) < 1e-12;
    for (std::size_t f = 0; f < study.fields.size(); ++f) {
      const bool in_window = std::abs(study.slope[f]) <= ctx.cfg.slope_window;
      const bool naive_below = study.naive_slope[f] < ctx.cfg.naive_slope_max;
      window_ok = window_ok && in_window;
      window_detail += fmt::format("{}{}@s={}: {:.4f}", window_detail.empty() ? "" : ", ", study.fields[f], s,
                                   study.slope[f]);
      if (control) {
        naive_tested = true;
        naive_ok = naive_ok && naive_below;
        naive_detail += fmt::format("{}{}: {:.4f}", naive_detail.empty() ? "" : ", ", study.fields[f],
                                    study.naive_slope[f]);
      }
      slopes.add_row({ctx.cfg.mesh.describe(), std::string(to_string(ctx.cfg.region)), num(s), num(ctx.cfg.p),
                      num(ctx.cfg.quadrature.far_order), num(ctx.cfg.quadrature.near_refinement),
                      num(ctx.cfg.quadrature.separation_ratio), study.fields[f], num(sizes), num(decades),
                      num(study.slope[f]), num(study.naive_slope[f]), num(ctx.cfg.slope_window), flag(in_window),
                      flag(naive_below)});
    }
  }
  out.tables.push_back(std::move(rows));
  out.tables.push_back(std::move(slopes));
  out.invariants.push_back({"family has >= 6 sizes spanning >= 2 decades", sizes >= 6 && decades >= 2.0,
                            fmt::format("{} sizes, {:.3f} decades", sizes, decades)});
  out.invariants.push_back({fmt::format("slope of log R vs log |omega| within +-{}", ctx.cfg.slope_window), window_ok,
                            window_detail});
  if (naive_tested) {
    out.invariants.push_back(
        {fmt::format("control slope (C_omega = 1) below {} at s = 0.75", ctx.cfg.naive_slope_max), naive_ok,
         naive_detail});
  }
}

std::vector<std::string> parameter_lines(const ExperimentConfig& cfg, bool deterministic) {
  std::vector<std::string> out{
      fmt::format("study = {}", to_string(cfg.study)),
      fmt::format("mesh = {}", cfg.mesh.describe()),
      fmt::format("region = {}", to_string(cfg.region)),
  };
  if (!cfg.schedule.empty()) {
    std::vector<std::string> v;
    for (double x : cfg.schedule) v.push_back(num(x));
    out.push_back(fmt::format("schedule = {}", fmt::join(v, ", ")));
  }
  if (cfg.region == RegionKind::arc) out.push_back(fmt::format("arc_start = {}", num(cfg.arc_start)));
  if (cfg.region == RegionKind::cap || cfg.region == RegionKind::halfspace) {
    out.push_back(fmt::format("axis = {}, {}, {}", num(cfg.axis.x()), num(cfg.axis.y()), num(cfg.axis.z())));
  }
  out.push_back(fmt::format("fields = {}", fmt::join(cfg.fields, ", ")));
  std::vector<std::string> s;
  for (double x : cfg.s) s.push_back(num(x));
  out.push_back(fmt::format("s = {}", fmt::join(s, ", ")));
  out.push_back(fmt::format("p = {}", num(cfg.p)));
  out.push_back(fmt::format("far_order = {}", cfg.quadrature.far_order));
  out.push_back(fmt::format("near_refinement = {}", cfg.quadrature.near_refinement));
  out.push_back(fmt::format("separation_ratio = {}", num(cfg.quadrature.separation_ratio)));
  if (!deterministic) out.push_back(fmt::format("workers = {}", cfg.quadrature.workers));
  if (cfg.study == StudyKind::scaling) {
    std::vector<std::string> l;
    for (double x : cfg.lambdas) l.push_back(num(x));
    out.push_back(fmt::format("lambdas = {}", fmt::join(l, ", ")));
  }
  if (cfg.study == StudyKind::lemma_checks || cfg.study == StudyKind::ratio_study) {
    out.push_back(fmt::format("refinement_levels = {}", cfg.refinement_levels));
  }
  if (cfg.study == StudyKind::lemma_checks) {
    out.push_back(fmt::format("checked_charts = {}", cfg.checked_charts));
    out.push_back(fmt::format("split_bound = {}", cfg.split_bound));
  }
  if (cfg.study == StudyKind::norms) out.push_back(fmt::format("oracle_resolution = {}", cfg.oracle_resolution));
  return out;
}

}  // namespace

const std::vector<TableSchema>& table_schemas() {
  static const std::vector<TableSchema> schemas{
      {"norms", with_prefix({"field", "lp", "lp_power", "seminorm", "seminorm_power", "wsp", "error_estimate",
                             "oracle_resolution", "oracle_seminorm", "oracle_extrapolated", "oracle_rel_diff"})},
      {"charts", with_prefix({"vertex", "center_x", "center_y", "center_z", "epsilon", "L", "L_hat", "J", "J_hat",
                              "piece_L", "piece_L_hat", "sampled_L", "sampled_L_hat", "inner_margin", "outer_margin",
                              "inner_ok", "outer_ok"})},
      {"chart_constants", with_prefix({"epsilon", "charts", "L", "L_hat", "J", "J_hat"})},
      {"scaling", with_prefix({"lambda", "L", "L_hat", "J", "J_hat", "slope_L", "slope_L_hat", "slope_J",
                               "slope_J_hat", "expected_L", "expected_L_hat", "expected_J", "expected_J_hat",
                               "reference"})},
      {"lemma_checks",
       with_prefix({"field", "lemma", "quantity", "instance", "lhs", "rhs", "margin", "ratio", "holds"})},
      {"extension", with_prefix({"field", "epsilon", "cover_size", "refinement_levels", "reflected", "flagged",
                                 "agreement_residual", "linearity_defect", "checks", "failed_checks"})},
      {"ratio", with_prefix({"field", "epsilon", "cover_size", "c_omega", "R", "naive_R", "u_lp_power",
                             "u_semi_power", "eu_power", "eu_lp_power", "eu_semi_power", "eu_error",
                             "agreement_residual", "flagged"})},
      {"ratio_slopes", {"mesh", "region", "s", "p", "far_order", "near_refinement", "separation_ratio", "field",
                        "sizes", "decades", "slope", "naive_slope", "window", "slope_ok", "naive_ok"}},
  };
  return schemas;
}

double linearity_defect(const ScalarField& u, const ScalarField& v, double a, double b, const Region& omega,
                        const SobolevParams& params, const extension::ExtensionOptions& opt) {
  auto o = opt;
  o.lemma_checks = false;
  o.norms = false;
  const auto eu = extension::extend(u, omega, params, o);
  const auto ev = extension::extend(v, omega, params, o);
  const auto ec = extension::extend(u.combine(a, v, b), omega, params, o);
  double worst = 0.0;
  for (int i = 0; i < ec.eu.mesh().num_vertices(); ++i) {
    worst = std::max(worst, std::abs(ec.eu.value(i) - (a * eu.eu.value(i) + b * ev.eu.value(i))));
  }
  return worst;
}

StudyResult run_study(const ExperimentConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  StudyResult out;
  out.study = std::string(to_string(config.study));
  out.parameters = parameter_lines(config, config.deterministic);
  try {
    Context ctx{config, load_mesh_source(config.mesh), {}, 1};
    ctx.k = ctx.mesh->intrinsic_dim();
    ctx.regions = build_regions(config, ctx.mesh);
    switch (config.study) {
      case StudyKind::norms: norms_study(ctx, out); break;
      case StudyKind::charts: charts_study(ctx, out); break;
      case StudyKind::scaling: scaling_study(ctx, out); break;
      case StudyKind::lemma_checks: lemma_study(ctx, out); break;
      case StudyKind::ratio_study: ratio_study(ctx, out); break;
    }
  } catch (const StudyError&) {
    throw;
  } catch (const std::exception& ex) {
    throw StudyError(fmt::format("study '{}' on {}: {}", out.study, config.mesh.describe(), ex.what()));
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

int run(const ExperimentConfig& config, const std::filesystem::path& out_dir, bool deterministic, std::ostream& log) {
  auto cfg = config;
  cfg.deterministic = cfg.deterministic || deterministic;
  const auto result = run_study(cfg);
  const auto files = emit_report(result, out_dir, cfg.deterministic);
  log << summary_text(result, cfg.deterministic);
  for (const auto& f : files) log << "wrote " << f.string() << '\n';
  return result.hard_pass() ? 0 : 1;
}

}  // namespace fracsob::harness
