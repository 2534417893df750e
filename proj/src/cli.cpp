#include "kleinlab/cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "kleinlab/cusp.hpp"
#include "kleinlab/error.hpp"
#include "kleinlab/format.hpp"
#include "kleinlab/harmonic.hpp"
#include "kleinlab/limitset.hpp"
#include "kleinlab/lipgraph.hpp"
#include "kleinlab/random.hpp"

namespace kleinlab {

namespace {

// Limit-set depth behind the graph's distance queries.
constexpr std::size_t kGraphCloudDepth = 6;
constexpr std::size_t kGraphSamples = 10'000;
constexpr std::size_t kHarmonicSamples = 1'000'000;
constexpr std::size_t kVolumeSamples = 20'000;
constexpr std::size_t kMinDiagnoseDepth = 3;

struct Context {
  GroupFile file;
  std::size_t depth = 0;
  double epsilon0 = 0.1;
  std::size_t samples = 0;
  std::uint64_t seed = 1;
};

Context open(const CommandOptions& opt, std::size_t default_samples) {
  Context c{load_group_file(opt.file)};
  c.depth = opt.depth.value_or(c.file.depths.back());
  c.epsilon0 = opt.epsilon0.value_or(c.file.epsilon0);
  c.samples = opt.samples.value_or(default_samples);
  c.seed = opt.seed.value_or(c.file.seed);
  return c;
}

Json inputs(const CommandOptions& opt, const Context* c) {
  Json j;
  j["file"] = opt.file;
  if (c) {
    j["depth"] = c->depth;
    j["epsilon0"] = c->epsilon0;
    j["samples"] = c->samples;
    j["seed"] = c->seed;
  }
  return j;
}

Json estimate(double value, double stderr_, std::size_t samples) {
  Json j;
  j["value"] = value;
  j["stderr"] = stderr_;
  j["samples"] = samples;
  return j;
}

// Short form for human-readable reasons.
std::string brief(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

void line(std::string& s, const std::string& key, const std::string& value) { s += key + ": " + value + "\n"; }

std::vector<std::size_t> trend_depths(const CommandOptions& opt, const GroupFile& f) {
  if (!opt.depth) return f.depths;
  const std::size_t d = *opt.depth;
  if (d == 0) return {0};
  return {d - 1, d};
}

Json dimension_results(const GroupPresentation& g, const LimitSetCloud& L, std::size_t depth, double agreement_tol,
                       std::string& summary) {
  const BoxDimension box = box_dimension(L);
  const ExponentEstimate delta = critical_exponent(g, depth + 2);
  const std::size_t n = g.dim();
  const double lambda0 = sullivan_lambda0(delta.delta, n);
  const bool agree = std::abs(box.estimate - delta.delta) < agreement_tol;

  Json r;
  Json b = estimate(box.estimate, box.stderr_, L.size());
  b["depth"] = depth;
  b["certified"] = box.certified;
  b["scale_window"] = Json::array({box.window_lo, box.window_hi});
  r["box_dimension"] = b;
  Json d = estimate(delta.delta, delta.stderr_, delta.samples);
  d["word_length"] = depth + 2;
  d["fit_window"] = Json::array({delta.r_min, delta.r_max});
  d["elementary"] = delta.elementary;
  r["delta"] = d;
  r["n"] = n;
  r["lambda0"] = lambda0;
  r["agreement"] = agree;
  r["agreement_tolerance"] = agreement_tol;

  line(summary, "box_dimension", fmt17(box.estimate) + " +- " + fmt17(box.stderr_));
  line(summary, "delta", fmt17(delta.delta) + " +- " + fmt17(delta.stderr_));
  line(summary, "lambda0", fmt17(lambda0));
  line(summary, "agreement", agree ? "yes" : "no");
  return r;
}

Json trend_json(const VolumeTrend& t) {
  Json j;
  j["depths"] = t.depths;
  Json est = Json::array();
  for (const auto& e : t.estimates) {
    Json x = estimate(e.value, e.stderr_, e.samples);
    x["in_region"] = e.in_region;
    est.push_back(x);
  }
  j["estimates"] = est;
  j["relative_changes"] = t.relative_changes;
  return j;
}

const char* conformal_finiteness(GroupKind k) {
  switch (k) {
    case GroupKind::schottky: return "holds by construction (Schottky group, compact quotient)";
    case GroupKind::cyclic: return "elementary group";
    case GroupKind::custom: return "not certified for custom groups";
  }
  return "";
}

}  // namespace

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::schema:
    case ErrorCode::invalid_group:
    case ErrorCode::dimension_mismatch:
    case ErrorCode::domain:
      return kExitInvalid;
    case ErrorCode::insufficient_data:
    case ErrorCode::uncertified:
    case ErrorCode::shrink_epsilon0:
    case ErrorCode::not_covered:
    case ErrorCode::locator_failed:
    case ErrorCode::ambiguous:
      return kExitInconclusive;
    default:
      return kExitError;
  }
}

CommandResult cmd_validate(const CommandOptions& opt) {
  CommandResult res;
  res.report["inputs"] = inputs(opt, nullptr);
  const GroupFile f = load_group_file(opt.file);
  const GroupPresentation& g = *f.group;
  Json r;
  r["valid"] = true;
  r["kind"] = to_string(g.kind());
  r["dimension"] = g.dim();
  r["rank"] = g.rank();
  r["elementary"] = g.is_elementary();
  r["cusp_ends"] = f.cusp_ends.size();
  r["conformal_finiteness"] = conformal_finiteness(g.kind());
  res.report["results"] = r;
  line(res.summary, "valid", "yes");
  line(res.summary, "kind", to_string(g.kind()));
  line(res.summary, "rank", std::to_string(g.rank()));
  return res;
}

CommandResult cmd_limitset(const CommandOptions& opt) {
  CommandResult res;
  Context c = open(opt, 0);
  if (!opt.depth) c.depth = 6;
  res.report["inputs"] = inputs(opt, &c);
  const LimitSetCloud L = sample_limit_set(*c.file.group, c.depth);
  std::ostringstream os;
  write_cloud_csv(os, L);
  res.csv = os.str();
  Json r;
  r["points"] = L.size();
  r["depth"] = c.depth;
  r["certified"] = L.certified();
  if (L.certified()) r["resolution"] = L.resolution();
  r["diameter"] = L.diameter();
  res.report["results"] = r;
  line(res.summary, "points", std::to_string(L.size()));
  line(res.summary, "resolution", L.certified() ? fmt17(L.resolution()) : "uncertified");
  return res;
}

CommandResult cmd_dimension(const CommandOptions& opt) {
  CommandResult res;
  Context c = open(opt, 0);
  if (!opt.depth) c.depth = 6;
  res.report["inputs"] = inputs(opt, &c);
  const GroupPresentation& g = *c.file.group;
  const LimitSetCloud L = sample_limit_set(g, c.depth);
  res.report["results"] = dimension_results(g, L, c.depth, c.file.tolerances.agreement, res.summary);
  return res;
}

CommandResult cmd_graph(const CommandOptions& opt) {
  CommandResult res;
  const Context c = open(opt, kGraphSamples);
  res.report["inputs"] = inputs(opt, &c);
  const GroupPresentation& g = *c.file.group;
  const LimitSetCloud L = sample_limit_set(g, std::max(c.depth, kGraphCloudDepth));
  const SphereRegion region = fundamental_region(g);
  SeedOptions so;
  so.epsilon0 = c.epsilon0;
  so.seed = c.seed;
  const SeedMesh mesh = seed_mesh(region, L, so);
  const auto seeds = base_caps(mesh.points, c.epsilon0, L);
  const DomeFamily F = propagate(seeds, g, c.depth, L, c.epsilon0);

  auto rng = make_rng(c.seed, 0x6a);
  std::vector<SpherePoint> xs;
  xs.reserve(c.samples);
  for (std::size_t i = 0; i < c.samples; ++i) xs.push_back(random_sphere_point(rng, g.dim()));

  Json r;
  Json fam;
  fam["seeds"] = seeds.size();
  fam["caps"] = F.caps().size();
  fam["dropped"] = F.dropped();
  fam["max_word_length"] = F.max_len();
  fam["shape_ratio"] = Json::array({F.shape().min_ratio, F.shape().max_ratio});
  fam["shape_unverified"] = F.shape().unverified;
  r["family"] = fam;

  const BandEstimate band = distance_band(F, L, xs);
  r["distance_band"] = {{"c1", band.c1}, {"c2", band.c2}, {"ratio", band.ratio()}, {"used", band.used},
                    {"skipped", band.skipped}};

  const std::vector<SpherePoint> half(xs.begin(), xs.begin() + static_cast<long>(xs.size() / 2));
  const LipschitzEstimate m_half = lipschitz_estimate(F, half);
  const LipschitzEstimate m_all = lipschitz_estimate(F, xs);
  r["lipschitz"] = {{"M", m_all.constant}, {"used", m_all.used}, {"M_half_samples", m_half.constant},
                    {"doubling_ratio", m_all.constant / m_half.constant}};

  Json inv = Json::array();
  double worst = 0.0;
  for (std::size_t i = 1; i <= g.rank(); ++i) {
    const InvarianceResult ir = check_invariance(F, g, Word{static_cast<int>(i)}, xs, c.file.tolerances.invariance);
    inv.push_back({{"word", to_string(Word{static_cast<int>(i)})},
                   {"max_deviation", ir.max_deviation},
                   {"matched_max_deviation", ir.matched_max_deviation},
                   {"compared", ir.compared},
                   {"matched", ir.matched},
                   {"within_tolerance", ir.within_tolerance}});
    worst = std::max(worst, ir.matched_max_deviation);
  }
  r["invariance"] = inv;

  const double sep_tol = L.resolution_opt().value_or(0.0);
  const SeparationResult sep = separation_check(F, L, std::min<std::size_t>(1000, c.samples), sep_tol, c.seed);
  r["separation"] = {{"passed", sep.passed},
                     {"geodesics", sep.geodesics},
                     {"checked_points", sep.checked_points},
                     {"witnesses", sep.witnesses.size()}};

  try {
    const VolumeTrend t = volume_trend(seeds, g, L, region, trend_depths(opt, c.file), kVolumeSamples, c.seed);
    r["volume_trend"] = trend_json(t);
  } catch (const Error& e) {
    r["volume_trend"] = nullptr;
    r["volume_note"] = e.what();
  }
  res.report["results"] = r;

  std::ostringstream os;
  write_graph_csv(os, F, xs);
  res.csv = os.str();

  line(res.summary, "caps", std::to_string(F.caps().size()));
  line(res.summary, "lipschitz_M", fmt17(m_all.constant));
  line(res.summary, "distance_band", "[" + fmt17(band.c1) + ", " + fmt17(band.c2) + "]");
  line(res.summary, "invariance_matched_max", fmt17(worst));
  line(res.summary, "separation", sep.passed ? "passed" : "failed");
  return res;
}

CommandResult cmd_harmonic(const CommandOptions& opt) {
  CommandResult res;
  const Context c = open(opt, kHarmonicSamples);
  res.report["inputs"] = inputs(opt, &c);
  const GroupPresentation& g = *c.file.group;
  const LimitSetCloud L = sample_limit_set(g, std::max(c.depth, kGraphCloudDepth));
  const HarmonicIdentity h = harmonic_measure_identity(L, c.samples, c.seed);

  Json r;
  Json u = estimate(h.harmonic.value, h.harmonic.stderr_, h.harmonic.samples);
  u["indeterminate_fraction"] = h.harmonic.indeterminate_fraction();
  r["u_gamma_0"] = u;
  Json a = estimate(h.area.value, h.area.stderr_, h.area.samples);
  a["indeterminate_fraction"] = h.area.indeterminate_fraction();
  r["area_fraction"] = a;
  r["difference"] = h.difference;
  r["tolerance"] = h.tolerance;
  r["agree"] = h.agree;

  // u(γ̂x) − u(x) for each generator at a few interior points.
  const BoundaryIndicator chi = BoundaryIndicator::cloud_complement(L);
  auto rng = make_rng(c.seed, 0x6b);
  const std::size_t per_point = std::max<std::size_t>(c.samples / 50, 1000);
  Json residuals = Json::array();
  double worst = 0.0;
  bool within = true;
  for (int t = 0; t < 5; ++t) {
    const BallPoint x(random_ball_vec(rng, g.dim() + 1, 0.8));
    const HarmonicEstimate ux = harmonic_extension(chi, x, per_point, c.seed + static_cast<std::uint64_t>(t));
    for (int l : g.alphabet()) {
      const BallPoint gx = poincare_extend(g.letter(l)).apply(x);
      const HarmonicEstimate ug = harmonic_extension(chi, gx, per_point, c.seed + 100 + static_cast<std::uint64_t>(t));
      const double diff = ug.value - ux.value;
      const double tol = 3.0 * std::hypot(ux.stderr_, ug.stderr_) + ux.indeterminate_fraction() +
                         ug.indeterminate_fraction();
      worst = std::max(worst, std::abs(diff));
      within = within && std::abs(diff) <= tol;
      residuals.push_back({{"letter", l}, {"residual", diff}, {"tolerance", tol}});
    }
  }
  r["invariance_residuals"] = residuals;
  r["invariance_within_tolerance"] = within;
  res.report["results"] = r;

  line(res.summary, "u_gamma(0)", fmt17(h.harmonic.value) + " +- " + fmt17(h.harmonic.stderr_));
  line(res.summary, "area_fraction", fmt17(h.area.value) + " +- " + fmt17(h.area.stderr_));
  line(res.summary, "agree", h.agree ? "yes" : "no");
  line(res.summary, "invariance_max_residual", fmt17(worst));
  return res;
}

CommandResult cmd_diagnose(const CommandOptions& opt) {
  CommandResult res;
  const Context c = open(opt, kVolumeSamples);
  res.report["inputs"] = inputs(opt, &c);
  const GroupPresentation& g = *c.file.group;
  const std::size_t n = g.dim();
  const Tolerances& tol = c.file.tolerances;
  Json r;
  r["conformal_finiteness"] = conformal_finiteness(g.kind());
  if (!c.file.cusp_ends.empty()) {
    Json ends = Json::array();
    for (const auto& e : c.file.cusp_ends) {
      ends.push_back({{"m", e.m}, {"radius", e.radius}, {"volume", cusp_volume(e)}, {"volume_full", cusp_volume_full(e)}});
    }
    r["cusp_ends"] = ends;
  }

  auto finish = [&](const std::string& verdict, const std::string& reason) {
    r["verdict"] = verdict;
    r["reason"] = reason;
    res.report["results"] = r;
    res.exit_code = verdict == "inconclusive" ? kExitInconclusive : kExitOk;
    line(res.summary, "verdict", verdict);
    line(res.summary, "reason", reason);
    return res;
  };

  if (c.depth < kMinDiagnoseDepth) {
    return finish("inconclusive", "depth " + std::to_string(c.depth) + " is below the minimum budget of " +
                                      std::to_string(kMinDiagnoseDepth));
  }

  Json dim;
  try {
    const LimitSetCloud L = sample_limit_set(g, c.depth);
    dim = dimension_results(g, L, c.depth, tol.agreement, res.summary);
  } catch (const Error& e) {
    if (exit_code_for(e.code()) != kExitInconclusive) throw;
    return finish("inconclusive", std::string("dimension estimate failed: ") + e.what());
  }
  r["dimension"] = dim;
  const double box = dim["box_dimension"]["value"].get<double>();
  const double delta = dim["delta"]["value"].get<double>();
  const double top = std::max(box, delta);
  const double nn = static_cast<double>(n);

  if (std::min(box, delta) >= nn - tol.agreement) {
    return finish("dimension-n-regime", "box dimension and exponent are within " + brief(tol.agreement) + " of n");
  }
  if (!dim["agreement"].get<bool>()) return finish("inconclusive", "box dimension and exponent disagree");
  if (top >= nn - tol.dimension_margin) {
    return finish("inconclusive", "dimension estimate within " + brief(tol.dimension_margin) + " of n");
  }

  if (g.is_elementary()) {
    r["volume_trend"] = nullptr;
    return finish("consistent-with-geometrically-finite",
                  "elementary group; dimension below n (graph volume not evaluated)");
  }

  try {
    const LimitSetCloud L = sample_limit_set(g, std::max(c.depth, kGraphCloudDepth));
    const SphereRegion region = fundamental_region(g);
    SeedOptions so;
    so.epsilon0 = c.epsilon0;
    so.seed = c.seed;
    const SeedMesh mesh = seed_mesh(region, L, so);
    const auto seeds = base_caps(mesh.points, c.epsilon0, L);
    auto depths = trend_depths(opt, c.file);
    if (depths.size() < 2) return finish("inconclusive", "volume trend needs two depths");
    const VolumeTrend t = volume_trend(seeds, g, L, region, depths, c.samples, c.seed);
    r["volume_trend"] = trend_json(t);
    const double last = t.relative_changes.back();
    line(res.summary, "volume_last_change", fmt17(last));
    if (last > tol.volume_change) {
      return finish("inconclusive", "graph volume still changing by " + brief(last) + " between the last depths");
    }
  } catch (const Error& e) {
    if (exit_code_for(e.code()) != kExitInconclusive) throw;
    return finish("inconclusive", std::string("graph volume failed: ") + e.what());
  }
  return finish("consistent-with-geometrically-finite",
                "dimension below n - " + brief(tol.dimension_margin) + " and graph volume converging");
}

CommandResult run_command(const std::string& name, const CommandOptions& opt) {
  static const std::vector<std::pair<std::string, CommandResult (*)(const CommandOptions&)>> table{
      {"validate", cmd_validate}, {"limitset", cmd_limitset}, {"dimension", cmd_dimension},
      {"graph", cmd_graph},       {"harmonic", cmd_harmonic}, {"diagnose", cmd_diagnose}};
  const auto start = std::chrono::steady_clock::now();
  CommandResult res;
  bool known = false;
  try {
    for (const auto& [key, fn] : table) {
      if (key == name) {
        known = true;
        res = fn(opt);
      }
    }
    if (!known) {
      res.exit_code = kExitInvalid;
      res.report["error"] = {{"code", "usage"}, {"message", "unknown command " + name}};
    }
  } catch (const Error& e) {
    res = CommandResult{};
    res.exit_code = exit_code_for(e.code());
    res.report["inputs"] = inputs(opt, nullptr);
    res.report["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
    if (name == "validate") res.report["results"] = {{"valid", false}};
    res.summary = std::string("error (") + to_string(e.code()) + "): " + e.what() + "\n";
  } catch (const std::exception& e) {
    res = CommandResult{};
    res.exit_code = kExitError;
    res.report["error"] = {{"code", "internal"}, {"message", e.what()}};
    res.summary = std::string("error: ") + e.what() + "\n";
  }
  Json out;
  out["command"] = name;
  out["format"] = 1;
  for (const auto& [k, v] : res.report.items()) out[k] = v;
  out["exit_code"] = res.exit_code;
  out["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.report = out;
  return res;
}

int emit_result(const std::string& name, const CommandOptions& opt, const CommandResult& r, std::ostream& out,
                std::ostream& err) {
  const bool has_csv = name == "limitset" || name == "graph";
  std::ostream* report_stream = &out;
  if (has_csv && !r.csv.empty()) {
    if (opt.out) {
      std::ofstream f(*opt.out, std::ios::binary);
      if (!f) {
        err << "cannot write " << *opt.out << "\n";
        return kExitError;
      }
      f << r.csv;
    } else {
      out << r.csv;
      report_stream = &err;
    }
  } else if (opt.out) {
    std::ofstream f(*opt.out, std::ios::binary);
    if (!f) {
      err << "cannot write " << *opt.out << "\n";
      return kExitError;
    }
    write_json(f, r.report);
  }
  if (opt.json) {
    write_json(*report_stream, r.report);
  } else {
    *report_stream << r.summary;
  }
  return r.exit_code;
}

}  // namespace kleinlab
