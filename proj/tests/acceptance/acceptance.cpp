#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "fracsob/builtin_meshes.hpp"
#include "fracsob/config.hpp"
#include "fracsob/oracle_suite.hpp"
#include "fracsob/report.hpp"
#include "fracsob/sobolev.hpp"
#include "fracsob/studies.hpp"

using namespace fracsob;
using harness::format_number;
using harness::StudyResult;
using harness::Table;
using sobolev::ScalarField;
using sobolev::SobolevParams;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
  std::string digest;  // every computed number, for the determinism comparison
  double seconds = 0.0;
};

geometry::ManifoldPtr builtin(const std::string& name, int n) {
  return std::make_shared<const geometry::SimplicialManifold>(geometry::builtin_mesh(name, n));
}

std::string digest_of(const StudyResult& r) {
  std::string out;
  for (const auto& t : r.tables) {
    out += t.name + "\n";
    for (const auto& row : t.rows) {
      for (const auto& c : row) out += c + ",";
      out += "\n";
    }
  }
  for (const auto& f : r.files) out += f.name + "\n" + f.text;
  return out;
}

StudyResult study(const std::string& text, int workers) {
  auto cfg = harness::parse_config(text);
  cfg.quadrature.workers = workers;
  return harness::run_study(cfg);
}

const Table& table(const StudyResult& r, const std::string& name) {
  for (const auto& t : r.tables) {
    if (t.name == name) return t;
  }
  throw std::runtime_error("missing table " + name);
}

std::size_t column(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (t.columns[i] == name) return i;
  }
  throw std::runtime_error("missing column " + name);
}

bool invariants_pass(const StudyResult& r, std::string& detail) {
  bool ok = true;
  for (const auto& inv : r.invariants) {
    if (inv.hard && !inv.pass) {
      ok = false;
      detail += fmt::format(" [FAIL {}: {}]", inv.name, inv.detail);
    }
  }
  return ok;
}

/// Seminorm against the extrapolated midpoint oracle.
Outcome criterion1(int workers) {
  Outcome o;
  struct Case {
    std::string mesh;
    int n;
    int resolution;
  };
  const std::vector<Case> cases{{"circle-polygon", 64, 2048}, {"icosphere", 2, 11520}};
  const std::vector<std::string> fields{"x", "xy", "tent"};
  quadrature::QuadratureSpec q;
  q.workers = workers;
  int configs = 0;
  int within = 0;
  double worst = 0.0;
  double quad_seconds = 0.0;
  const auto t0 = Clock::now();
  for (const auto& c : cases) {
    const auto mesh = builtin(c.mesh, c.n);
    const auto whole = geometry::Region::whole(mesh);
    for (const auto& f : fields) {
      const auto u = ScalarField::sample(whole, harness::field_function(f));
      for (double s : {0.25, 0.5, 0.75}) {
        const auto prm = SobolevParams::make(s, 2.0, mesh->intrinsic_dim());
        const auto tq = Clock::now();
        const double value = sobolev::gagliardo_seminorm(u, whole, prm, q).value;
        quad_seconds += seconds_since(tq);
        const double oracle = sobolev::oracle_seminorm_extrapolated(u, whole, prm, c.resolution);
        const double rel = std::abs(value - oracle) / std::abs(oracle);
        ++configs;
        if (rel <= 0.02) ++within;
        worst = std::max(worst, rel);
        o.digest += fmt::format("{}({}) {} {} {} {}\n", c.mesh, c.n, f, format_number(s), format_number(value),
                                format_number(oracle));
      }
    }
  }
  o.seconds = seconds_since(t0);
  o.pass = configs >= 15 && within == configs && quad_seconds < 60.0;
  o.detail = fmt::format("{}/{} configurations within 2%, worst {:.3e}, quadrature {:.1f} s (budget 60 s), "
                         "with oracles {:.1f} s",
                         within, configs, worst, quad_seconds, o.seconds);
  return o;
}

/// Exact dilation laws of lp^p and seminorm^p.
Outcome criterion2(int workers) {
  Outcome o;
  quadrature::QuadratureSpec q;
  q.workers = workers;
  double worst = 0.0;
  int checks = 0;
  const auto t0 = Clock::now();
  for (const auto& [name, n] : std::vector<std::pair<std::string, int>>{{"circle-polygon", 64}, {"icosphere", 1}}) {
    const auto base = builtin(name, n);
    const int k = base->intrinsic_dim();
    const auto whole = geometry::Region::whole(base);
    for (const std::string f : {"x", "xy", "tent"}) {
      const auto u = ScalarField::sample(whole, harness::field_function(f));
      const std::vector<double> values(u.values().begin(), u.values().end());
      for (double s : {0.25, 0.5, 0.75}) {
        const auto prm = SobolevParams::make(s, 2.0, k);
        const double lp = sobolev::lp_norm_power(u, whole, 2.0);
        const double semi = sobolev::gagliardo_seminorm(u, whole, prm, q).power;
        for (double lambda : {0.5, 2.0, 10.0}) {
          const auto m = std::make_shared<const geometry::SimplicialManifold>(geometry::dilate(*base, lambda));
          const auto w = geometry::Region::whole(m);
          const auto ul = ScalarField::on_manifold(m, values);
          const double lpl = sobolev::lp_norm_power(ul, w, 2.0);
          const double semil = sobolev::gagliardo_seminorm(ul, w, prm, q).power;
          const double e1 = std::abs(lpl / lp / std::pow(lambda, k) - 1.0);
          const double e2 = std::abs(semil / semi / std::pow(lambda, k - s * 2.0) - 1.0);
          worst = std::max({worst, e1, e2});
          checks += 2;
          o.digest += fmt::format("{} {} {} {} {}\n", name, f, format_number(s), format_number(lpl), format_number(semil));
        }
      }
    }
  }
  o.seconds = seconds_since(t0);
  o.pass = worst <= 1e-10;
  o.detail = fmt::format("{} scaling laws, largest relative error {:.3e} (tolerance 1e-10)", checks, worst);
  return o;
}

/// Chart constant slopes and inclusions.
Outcome criterion3(int workers) {
  Outcome o;
  const std::vector<std::string> configs{
      "study = scaling\nmesh = circle-polygon(64)\nregion = arc\nschedule = pi/2\ns = 0.5\np = 2\nlambdas = 0.5, 1, 2, 10\n",
      "study = scaling\nmesh = square-boundary(8)\nregion = arc\nschedule = pi\ns = 0.5\np = 2\nlambdas = 0.5, 1, 2, 10\n",
      "study = scaling\nmesh = icosphere(2)\nregion = cap\nschedule = 0.9\ns = 0.5\np = 2\nlambdas = 0.5, 1, 2, 10\n",
      "study = scaling\nmesh = cube-surface(1)\nregion = whole\ns = 0.5\np = 2\nlambdas = 0.5, 1, 2, 10\n"};
  const auto t0 = Clock::now();
  bool ok = true;
  double worst = 0.0;
  double margin = std::numeric_limits<double>::infinity();
  std::size_t charts = 0;
  std::string failures;
  for (const auto& text : configs) {
    const auto r = study(text, workers);
    ok = invariants_pass(r, failures) && ok;
    const auto& sc = table(r, "scaling");
    for (const auto& row : sc.rows) {
      for (const char* c : {"L", "L_hat", "J", "J_hat"}) {
        const double slope = std::stod(row[column(sc, std::string("slope_") + c)]);
        const double expected = std::stod(row[column(sc, std::string("expected_") + c)]);
        worst = std::max(worst, std::abs(slope - expected));
      }
    }
    const auto& ch = table(r, "charts");
    for (const auto& row : ch.rows) {
      const double eps = std::stod(row[column(ch, "epsilon")]);
      margin = std::min({margin, std::stod(row[column(ch, "inner_margin")]) / eps,
                         std::stod(row[column(ch, "outer_margin")]) / eps});
      ++charts;
    }
    o.digest += digest_of(r);
  }
  o.seconds = seconds_since(t0);
  o.pass = ok && worst <= 1e-6;
  o.detail = fmt::format("4 meshes, largest slope deviation {:.3e} (tolerance 1e-6), {} charts, smallest "
                         "inclusion margin / eps {:.3e}{}",
                         worst, charts, margin, failures);
  return o;
}

struct LemmaRuns {
  std::vector<StudyResult> results;
  double seconds = 0.0;
};

LemmaRuns lemma_runs(int workers) {
  LemmaRuns runs;
  const auto t0 = Clock::now();
  runs.results.push_back(study(
      "study = lemma-checks\nmesh = circle-polygon(64)\nregion = arc\nschedule = pi/2, pi\nfields = one, x\n"
      "s = 0.25, 0.5, 0.75\np = 2\n",
      workers));
  runs.results.push_back(study(
      "study = lemma-checks\nmesh = icosphere(2)\nregion = cap\nschedule = 0.9\nfields = one, x\n"
      "s = 0.5\np = 2\nchecked_charts = 4\n",
      workers));
  runs.seconds = seconds_since(t0);
  return runs;
}

/// Lemma inequalities as literal inequalities.
Outcome criterion4(const LemmaRuns& runs) {
  Outcome o;
  using Key = std::string;
  std::map<Key, std::set<std::string>> quantities;
  int total = 0;
  int failed = 0;
  double worst = 0.0;
  for (const auto& r : runs.results) {
    const auto& t = table(r, "lemma_checks");
    for (const auto& row : t.rows) {
      const Key key = row[column(t, "mesh")] + "|" + row[column(t, "region_param")] + "|" + row[column(t, "field")] +
                      "|" + row[column(t, "s")];
      quantities[key].insert(row[column(t, "quantity")]);
      ++total;
      if (row[column(t, "holds")] != "1") ++failed;
      worst = std::max(worst, std::stod(row[column(t, "ratio")]));
    }
    o.digest += digest_of(r);
  }
  int a = 0;
  int b = 0;
  int c = 0;
  for (const auto& [key, q] : quantities) {
    if (q.count("cross-term")) ++a;
    if (q.count("far-field") && q.count("lp-monotone")) ++b;
    if (q.count("pullback-lp") && q.count("pullback-seminorm")) ++c;
  }
  o.seconds = runs.seconds;
  o.pass = a >= 10 && b >= 10 && c >= 10 && failed == 0 && total > 0;
  o.detail = fmt::format("configurations with (a) {}, (b) {}, (c) {}; {} checks, {} failed, largest lhs/rhs {:.4f}", a,
                         b, c, total, failed, worst);
  return o;
}

/// Agreement residual and linearity on the arc and cap runs.
Outcome criterion5(const LemmaRuns& runs) {
  Outcome o;
  double residual = 0.0;
  double linearity = 0.0;
  int rows = 0;
  for (const auto& r : runs.results) {
    const auto& t = table(r, "extension");
    for (const auto& row : t.rows) {
      residual = std::max(residual, std::stod(row[column(t, "agreement_residual")]));
      linearity = std::max(linearity, std::stod(row[column(t, "linearity_defect")]));
      ++rows;
    }
  }
  o.digest = fmt::format("{} {}\n", format_number(residual), format_number(linearity));
  o.pass = rows > 0 && residual <= 1e-8 && linearity <= 1e-10;
  o.detail = fmt::format("{} arc and cap configurations, max |Eu - u| {:.3e} (<= 1e-8), max linearity defect {:.3e} "
                         "(<= 1e-10)",
                         rows, residual, linearity);
  return o;
}

/// Boundedness of R over a nested family, the control slope and drift against the frozen slopes.
Outcome criterion6(int workers, std::string& info) {
  Outcome o;
  const auto t0 = Clock::now();
  const auto r = study(
      "study = ratio-study\nmesh = graded-circle(12)\nregion = arc\n"
      "schedule = 0.19634954084936207, 0.098174770424681035, 0.049087385212340517, 0.024543692606170259, "
      "0.01227184630308513, 0.0061359231515425647, 0.0030679615757712823, 0.0015339807878856412\n"
      "fields = one, x\ns = 0.25, 0.5, 0.75\np = 2\n",
      workers);
  std::string failures;
  bool ok = invariants_pass(r, failures);
  const auto fixtures = harness::load_fixtures(FRACSOB_FIXTURES_FILE);
  const auto& t = table(r, "ratio_slopes");
  double drift = 0.0;
  double lo = 0.0;
  double hi = -1e300;
  double naive = 0.0;
  int sizes = 0;
  double decades = 0.0;
  for (const auto& row : t.rows) {
    const double s = std::stod(row[column(t, "s")]);
    const std::string tag = fmt::format("s{:.2f}", s);
    const std::string field = row[column(t, "field")];
    const double slope = std::stod(row[column(t, "slope")]);
    const double ns = std::stod(row[column(t, "naive_slope")]);
    lo = std::min(lo, slope);
    hi = std::max(hi, slope);
    if (s == 0.75) naive = std::max(naive == 0.0 ? -1e300 : naive, ns);
    sizes = std::stoi(row[column(t, "sizes")]);
    decades = std::stod(row[column(t, "decades")]);
    for (const auto& [name, value] : {std::pair{"ratio.slope." + field + "." + tag, slope},
                                      std::pair{"ratio.naive_slope." + field + "." + tag, ns}}) {
      const auto it = fixtures.find(name);
      if (it == fixtures.end()) {
        ok = false;
        failures += " [missing fixture " + name + "]";
        continue;
      }
      const double d = std::abs(value - it->second.value);
      drift = std::max(drift, d);
      if (d > it->second.abs_tol + it->second.rel_tol * std::abs(it->second.value)) {
        ok = false;
        failures += fmt::format(" [{} drifted by {:.3e}]", name, d);
      }
    }
  }
  o.digest = digest_of(r);
  o.seconds = seconds_since(t0);
  o.pass = ok;
  o.detail = fmt::format("{} sizes over {:.2f} decades, slopes in [{:.4f}, {:.4f}] (window +-0.15), control slope at "
                         "s = 0.75 <= {:.3f} (< -0.3), fixture drift {:.3e}{}",
                         sizes, decades, lo, hi, naive, drift, failures);

  const auto t1 = Clock::now();
  const auto lit = study(
      "study = ratio-study\nmesh = circle-polygon(512)\nregion = arc\nschedule = pi, pi/2, pi/4, pi/8, pi/16, pi/32\n"
      "fields = one, x\ns = 0.25, 0.5, 0.75\np = 2\n",
      workers);
  const auto& lt = table(lit, "ratio_slopes");
  std::string slopes;
  for (const auto& row : lt.rows) {
    slopes += fmt::format(" {}@s={}: {:.4f} (control {:.4f})", row[column(lt, "field")], row[column(lt, "s")],
                          std::stod(row[column(lt, "slope")]), std::stod(row[column(lt, "naive_slope")]));
  }
  info = fmt::format("uniform circle-polygon(512), |omega| = |M|/2^j, j = 1..6 ({} decades):{} [{:.1f} s]",
                     std::stod(lt.rows.front()[column(lt, "decades")]), slopes, seconds_since(t1));
  o.digest += digest_of(lit);
  return o;
}

struct Run {
  std::vector<Outcome> outcomes;
  std::string info;
};

Run run_all(int workers) {
  Run run;
  run.outcomes.push_back(criterion1(workers));
  run.outcomes.push_back(criterion2(workers));
  run.outcomes.push_back(criterion3(workers));
  const auto lemma = lemma_runs(workers);
  run.outcomes.push_back(criterion4(lemma));
  run.outcomes.push_back(criterion5(lemma));
  run.outcomes.push_back(criterion6(workers, run.info));
  return run;
}

}  // namespace

int main() {
  const std::vector<std::string> names{"seminorm matches midpoint oracle",
                                       "dilation covariance",
                                       "chart scaling laws and inclusions",
                                       "lemma inequalities with explicit constants",
                                       "extension identity and linearity",
                                       "boundedness of the extension ratio",
                                       "determinism across 1 and 8 workers"};
  try {
    const auto one = run_all(1);
    bool all = true;
    for (std::size_t i = 0; i < one.outcomes.size(); ++i) {
      const auto& o = one.outcomes[i];
      all = all && o.pass;
      std::printf("criterion %zu %s: %s - %s [%.1f s]\n", i + 1, o.pass ? "PASS" : "FAIL", names[i].c_str(),
                  o.detail.c_str(), o.seconds);
      std::fflush(stdout);
    }
    std::printf("info: %s\n", one.info.c_str());

    const auto t0 = Clock::now();
    const auto eight = run_all(8);
    std::size_t same = 0;
    std::string diff;
    for (std::size_t i = 0; i < one.outcomes.size(); ++i) {
      if (one.outcomes[i].digest == eight.outcomes[i].digest && !one.outcomes[i].digest.empty()) {
        ++same;
      } else {
        diff += fmt::format(" criterion {} differs;", i + 1);
      }
    }
    const bool det = same == one.outcomes.size();
    all = all && det;
    std::printf("criterion 7 %s: %s - %zu/%zu criteria byte-identical%s [%.1f s]\n", det ? "PASS" : "FAIL",
                names[6].c_str(), same, one.outcomes.size(), diff.c_str(), seconds_since(t0));
    return all ? 0 : 1;
  } catch (const std::exception& ex) {
    std::printf("acceptance aborted: %s\n", ex.what());
    return 2;
  }
}
