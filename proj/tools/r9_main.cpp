// Command-line driver: configuration, dispatch, dataset I/O, and report
// emission for the invariant suites, scans, generators, experiments, and
// the constant ledger.
//
// Usage:  r9cli <command> [--config cfg.json] [--seed N] [--outdir DIR]
//                [--threads N] [--set key=value ...] [command flags]
//
// Every run writes <outdir>/<command>-<timestamp>/summary.json and
// detail.csv.  The summary embeds the fully resolved config, so re-running
// with `--config summary.json` reproduces it byte-for-byte (wall-clock
// fields are excluded from the summary for that reason).
//
// Exit codes: 0 all declared checks pass; 1 a runtime check failed (the
// failing identifiers are printed); 2 config/schema violation (message is
// anchored to the offending config line).

#include <CLI11.hpp>
#include <json.hpp>

#include "r9/energy.hpp"
#include "r9/experiments.hpp"
#include "r9/fractal_gen.hpp"
#include "r9/ledger.hpp"
#include "r9/lie_core.hpp"
#include "r9/nondeg.hpp"
#include "r9/partition_cover.hpp"
#include "r9/regularize.hpp"
#include "r9/rng.hpp"
#include "r9/weight_rep.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace r9;

namespace {

// ---------------------------------------------------------------------
// Config handling with line-anchored schema errors.
// ---------------------------------------------------------------------

struct ConfigViolation {
  std::string message;  // already anchored "file:line: ..."
};

struct CfgSource {
  std::string path = "<cli>";
  std::string text;  // raw file contents (empty when synthesized)

  // Best-effort line anchor: first line containing "key" in quotes.
  int line_of(const std::string& key) const {
    std::string needle = "\"" + key + "\"";
    std::istringstream in(text);
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.find(needle) != std::string::npos) return n;
    }
    return 1;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigViolation{path + ":" + std::to_string(line_of(key)) + ": " +
                          msg};
  }
};

enum class FType { Str, Num, Int, Bool, NumList, IntList, StrList, Decimal };

struct Field {
  const char* key;
  FType type;
  bool required;
  json def;  // default when not required
};

bool type_ok(const json& v, FType t) {
  switch (t) {
    case FType::Str:
      return v.is_string();
    case FType::Num:
      return v.is_number();
    case FType::Int:
      return v.is_number_integer();
    case FType::Bool:
      return v.is_boolean();
    case FType::NumList:
      if (!v.is_array()) return false;
      for (const auto& e : v)
        if (!e.is_number()) return false;
      return true;
    case FType::IntList:
      if (!v.is_array()) return false;
      for (const auto& e : v)
        if (!e.is_number_integer()) return false;
      return true;
    case FType::StrList:
      if (!v.is_array()) return false;
      for (const auto& e : v)
        if (!e.is_string()) return false;
      return true;
    case FType::Decimal:
      return v.is_string() || v.is_number();
  }
  return false;
}

const char* type_name(FType t) {
  switch (t) {
    case FType::Str: return "string";
    case FType::Num: return "number";
    case FType::Int: return "integer";
    case FType::Bool: return "boolean";
    case FType::NumList: return "array of numbers";
    case FType::IntList: return "array of integers";
    case FType::StrList: return "array of strings";
    case FType::Decimal: return "decimal string or number";
  }
  return "?";
}

// Merge order: schema defaults < config file < CLI overrides.  Unknown
// keys and type mismatches are schema violations.
json resolve_config(const std::vector<Field>& schema, const CfgSource& src,
                    const json& file_cfg, const json& overrides) {
  json out;
  out["schema_version"] = 1;
  for (const auto& f : schema)
    if (!f.required) out[f.key] = f.def;
  auto apply = [&](const json& layer, bool anchored) {
    for (auto it = layer.begin(); it != layer.end(); ++it) {
      const std::string& k = it.key();
      if (k == "schema_version") {
        if (!(it.value().is_number_integer() && it.value() == 1)) {
          if (anchored) src.fail(k, "unsupported schema_version (expected 1)");
          throw ConfigViolation{"<cli>:1: unsupported schema_version"};
        }
        continue;
      }
      const Field* match = nullptr;
      for (const auto& f : schema)
        if (k == f.key) match = &f;
      if (!match) {
        if (anchored) src.fail(k, "unknown config key \"" + k + "\"");
        throw ConfigViolation{"<cli>:1: unknown config key \"" + k + "\""};
      }
      if (!type_ok(it.value(), match->type)) {
        std::string msg = "field \"" + k + "\" must be " +
                          type_name(match->type);
        if (anchored) src.fail(k, msg);
        throw ConfigViolation{"<cli>:1: " + msg};
      }
      out[k] = it.value();
    }
  };
  apply(file_cfg, true);
  apply(overrides, false);
  for (const auto& f : schema)
    if (f.required && !out.contains(f.key))
      src.fail(f.key, "missing required field \"" + std::string(f.key) + "\"");
  return out;
}

json load_config_file(const std::string& path, CfgSource& src) {
  std::ifstream in(path);
  if (!in) throw ConfigViolation{path + ":1: cannot open config file"};
  std::stringstream ss;
  ss << in.rdbuf();
  src.path = path;
  src.text = ss.str();
  json j;
  try {
    j = json::parse(src.text);
  } catch (const json::parse_error& e) {
    // byte offset -> line number
    int line = 1;
    for (std::size_t i = 0; i < e.byte && i < src.text.size(); ++i)
      if (src.text[i] == '\n') ++line;
    throw ConfigViolation{path + ":" + std::to_string(line) + ": " +
                          e.what()};
  }
  if (!j.is_object())
    throw ConfigViolation{path + ":1: config must be a JSON object"};
  // Accept an emitted summary as a config: unwrap its embedded config.
  if (j.contains("config") && j["config"].is_object() && j.contains("command"))
    j = j["config"];
  return j;
}

// Parse a --set key=value override; the value is parsed as JSON when
// possible and kept as a string otherwise.
void apply_set(json& overrides, const std::string& kv) {
  auto pos = kv.find('=');
  if (pos == std::string::npos || pos == 0)
    throw ConfigViolation{"<cli>:1: --set expects key=value, got \"" + kv +
                          "\""};
  std::string key = kv.substr(0, pos);
  std::string val = kv.substr(pos + 1);
  json parsed = json::parse(val, nullptr, false);
  overrides[key] = parsed.is_discarded() ? json(val) : parsed;
}

// ---------------------------------------------------------------------
// Output plumbing.
// ---------------------------------------------------------------------

std::string now_stamp() {
  auto t = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  char buf[32];
  std::tm tm{};
  localtime_r(&t, &tm);
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
  return buf;
}

fs::path make_run_dir(const std::string& outdir, const std::string& command,
                      const std::string& stamp) {
  fs::path base = fs::path(outdir) / (command + "-" + stamp);
  fs::path dir = base;
  for (int k = 1; fs::exists(dir); ++k)
    dir = base.string() + "-" + std::to_string(k);
  fs::create_directories(dir);
  return dir;
}

// Wall-clock fields are excluded from the summary so that re-runs are
// byte-identical (the same policy as output timestamps).
void strip_volatile(json& j) {
  if (j.is_object()) {
    j.erase("runtime_seconds");
    for (auto& [k, v] : j.items()) strip_volatile(v);
  } else if (j.is_array()) {
    for (auto& v : j) strip_volatile(v);
  }
}

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
};

struct RunResult {
  json results;                // command-specific payload
  std::vector<Check> checks;   // declared acceptance checks
  bool wrote_detail = false;   // command already wrote detail.csv
};

int finish_run(const std::string& command, const json& resolved,
               const fs::path& dir, RunResult rr) {
  json checks = json::array();
  bool all_pass = true;
  std::vector<std::string> failing;
  for (const auto& c : rr.checks) {
    checks.push_back({{"name", c.name},
                      {"pass", c.pass},
                      {"value", c.value},
                      {"threshold", c.threshold}});
    all_pass &= c.pass;
    if (!c.pass) failing.push_back(c.name);
  }
  json summary = {{"schema_version", 1},
                  {"command", command},
                  {"config", resolved},
                  {"results", rr.results},
                  {"checks", checks},
                  {"all_pass", all_pass}};
  strip_volatile(summary);
  std::ofstream out(dir / "summary.json");
  out << summary.dump(2) << "\n";
  out.close();
  if (!rr.wrote_detail) {
    // Default detail: the checks table.
    std::ofstream csv(dir / "detail.csv");
    csv << "check,value,threshold,pass\n";
    char buf[32];
    for (const auto& c : rr.checks) {
      std::snprintf(buf, sizeof buf, "%.17g", c.value);
      csv << c.name << "," << buf << ",";
      std::snprintf(buf, sizeof buf, "%.17g", c.threshold);
      csv << buf << "," << (c.pass ? 1 : 0) << "\n";
    }
  }
  std::cout << dir.string() << "\n";
  if (!all_pass) {
    std::cerr << "failed checks:";
    for (const auto& n : failing) std::cerr << " " << n;
    std::cerr << "\n";
    return 1;
  }
  return 0;
}

Form form_from_config(const CfgSource& src, const json& cfg,
                      const char* key = "form") {
  std::string s = cfg.at(key).get<std::string>();
  if (s == "sig22") return Form::sig22();
  if (s == "sig31") return Form::sig31();
  src.fail(key, "form must be \"sig22\" or \"sig31\"");
}

RTuple rtuple_from_config(const CfgSource& src, const json& cfg,
                          const char* key) {
  auto v = cfg.at(key).get<std::vector<int>>();
  if (v.size() != 5) src.fail(key, "rt64 must have exactly 5 entries");
  RTuple t{};
  for (int i = 0; i < 5; ++i) {
    if (v[i] < 0 || v[i] > 64)
      src.fail(key, "rt64 entries must lie in [0, 64]");
    if (i > 0 && v[i] < v[i - 1])
      src.fail(key, "rt64 entries must be nondecreasing");
    t.r64[i] = v[i];
  }
  return t;
}

// Shared point-set source: an explicit CSV or a seeded generator.
PointSet load_source(const CfgSource& src, const json& cfg) {
  std::string csv = cfg.at("input_csv").get<std::string>();
  if (!csv.empty()) return load_csv(csv);
  std::string kind = cfg.at("gen_kind").get<std::string>();
  double alpha = cfg.at("gen_alpha").get<double>();
  int depth = cfg.at("gen_depth").get<int>();
  auto seed = static_cast<std::uint64_t>(cfg.at("gen_seed").get<long>());
  if (kind == "cantor") return gen_cantor(alpha, depth, seed);
  if (kind == "obstructed")
    return gen_obstructed(form_from_config(src, cfg), alpha, depth, seed);
  src.fail("gen_kind", "gen_kind must be \"cantor\" or \"obstructed\"");
}

const std::vector<Field> kSourceFields = {
    {"input_csv", FType::Str, false, ""},
    {"gen_kind", FType::Str, false, "cantor"},
    {"gen_alpha", FType::Num, false, 4.5},
    {"gen_depth", FType::Int, false, 4},
    {"gen_seed", FType::Int, false, 1},
};

std::vector<Field> with_source(std::vector<Field> fields) {
  fields.insert(fields.end(), kSourceFields.begin(), kSourceFields.end());
  return fields;
}

// ---------------------------------------------------------------------
// rep-check: representation/symmetric-pair/BCH invariant suite.
// ---------------------------------------------------------------------

void rep_checks_for(const Form& f, const std::string& prefix, int n_samples,
                    std::uint64_t seed, std::vector<Check>& out) {
  Rng rng(seed);
  auto push = [&](const std::string& name, double value, double thr,
                  bool leq = true) {
    out.push_back({prefix + name, leq ? value <= thr : value >= thr, value,
                   thr});
  };

  // Involution and eigenspace dimensions.
  double inv = 0.0;
  for (const Mat4& x : sl4_basis())
    inv = std::max(inv, sup_norm(Mat4(sigma(f, sigma(f, x)) - x)));
  push("sigma_involution", inv, 1e-12);
  push("h_dim", static_cast<double>(h_basis(f).size()), 6.0, false);
  out.back().pass = h_basis(f).size() == 6;
  push("r_dim", static_cast<double>(r_basis_generic(f).size()), 9.0, false);
  out.back().pass = r_basis_generic(f).size() == 9;

  // [r, r] lands in h.
  const auto rb = r_basis_generic(f);
  double rr = 0.0;
  for (int k = 0; k < n_samples / 10 + 1; ++k) {
    Mat4 x1 = Mat4::Zero(), x2 = Mat4::Zero();
    for (const Mat4& b : rb) {
      x1 += rng.uniform(-1.0, 1.0) * b;
      x2 += rng.uniform(-1.0, 1.0) * b;
    }
    rr = std::max(rr, sup_norm(split_h_r(f, bracket(x1, x2)).r));
  }
  push("bracket_rr_in_h", rr, 1e-12);

  if (f.tag == FormTag::Sig22) {
    So22Ideals ideals = so22_ideals(f);
    double cross = 0.0;
    for (const Mat4& a : ideals.first)
      for (const Mat4& b : ideals.second)
        cross = std::max(cross, sup_norm(bracket(a, b)));
    push("ideal_commute", cross, 1e-13);
  }

  // Weight rates of Ad(a_t) in the 9 coordinates.
  double rate_err = 0.0;
  for (double t = -3.0; t <= 3.0; t += 0.5) {
    Mat9 a = ad_a(f, t);
    for (int i = 0; i < 9; ++i) {
      double expected = std::exp(kWeights[i] * t);
      rate_err = std::max(rate_err,
                          std::abs(a(i, i) - expected) / expected);
      for (int j = 0; j < 9; ++j)
        if (i != j) rate_err = std::max(rate_err, std::abs(a(i, j)));
    }
  }
  push("weight_rates", rate_err, 1e-9);

  // Flag invariance of Ad(u) and additivity of the u-parameters.
  double flag_res = 0.0, add_res = 0.0;
  for (int k = 0; k < n_samples; ++k) {
    double r = rng.uniform(-1.0, 1.0), s = rng.uniform(-1.0, 1.0);
    double r2 = rng.uniform(-1.0, 1.0), s2 = rng.uniform(-1.0, 1.0);
    Vec9 v;
    for (int i = 0; i < 9; ++i) v(i) = rng.uniform(-1.0, 1.0);
    Mat9 au = ad_u(f, r, s);
    for (int lambda : {-1, 0, 1, 2}) {
      Vec9 w = pi_flag(lambda, v);
      Vec9 y = au * w;
      flag_res = std::max(flag_res, sup_norm(Vec9(y - pi_flag(lambda, y))));
    }
    Mat9 add_diff = ad_u(f, r + r2, s + s2) - au * ad_u(f, r2, s2);
    add_res = std::max(add_res, add_diff.cwiseAbs().maxCoeff());
  }
  push("flag_invariance", flag_res, 1e-12);
  push("u_additivity", add_res, 1e-13);

  // BCH factorization round trip near the identity.
  const auto& basis = sl4_basis();
  double bch_res = 0.0;
  bool norm_ok = true;
  int n_bch = std::min(n_samples, 200);
  for (int k = 0; k < n_bch; ++k) {
    Mat4 x = Mat4::Zero();
    for (const Mat4& b : basis) x += rng.uniform(-1.0, 1.0) * b;
    x *= 0.02 / std::max(1.0, sup_norm(x));
    Mat4 g = mat_exp(x);
    BCHFactorization fac = bch_factorize(f, g);
    bch_res = std::max(
        bch_res, sup_norm(Mat4(fac.h * mat_exp(fac.w) - g)));
    double wn = trace_norm(fac.w);
    double xn = trace_norm(split_h_r(f, x).r);
    if (!(0.5 * xn - 1e-12 <= wn && wn <= 1.5 * xn + 1e-12)) norm_ok = false;
  }
  push("bch_roundtrip", bch_res, 1e-9);
  out.push_back({prefix + "bch_norm_bounds", norm_ok, norm_ok ? 1.0 : 0.0,
                 1.0});
}

RunResult cmd_rep_check(const CfgSource& src, const json& cfg,
                        const fs::path&) {
  RunResult rr;
  std::string form = cfg.at("form").get<std::string>();
  int n = cfg.at("n_samples").get<int>();
  auto seed = static_cast<std::uint64_t>(cfg.at("seed").get<long>());
  std::vector<std::string> forms;
  if (form == "both")
    forms = {"sig22", "sig31"};
  else
    forms = {form};
  for (const auto& name : forms) {
    json sub = cfg;
    sub["form"] = name;
    rep_checks_for(form_from_config(src, sub), name + ".", n, seed,
                   rr.checks);
  }
  json residuals = json::object();
  for (const auto& c : rr.checks) residuals[c.name] = c.value;
  rr.results = {{"residuals", residuals}};
  return rr;
}

// ---------------------------------------------------------------------
// nondeg-scan: grid scans and Remez tables.
// ---------------------------------------------------------------------

RunResult cmd_nondeg_scan(const CfgSource& src, const json& cfg,
                          const fs::path& dir) {
  RunResult rr;
  Form f = form_from_config(src, cfg);
  double step = cfg.at("step").get<double>();
  double tau = cfg.at("tau").get<double>();
  int threads = cfg.at("threads").get<int>();
  NondegScan scan = nondeg_scan(f, step, -1.0, 1.0, tau, threads);
  save_scan_csv(scan, (dir / "detail.csv").string());
  rr.wrote_detail = true;

  double p1_diag = std::abs(p1(f, UPair{0.3, -0.4, 0.3, -0.4}));
  rr.checks.push_back({"p1_vanishes_on_diagonal", p1_diag <= 1e-12, p1_diag,
                       1e-12});
  auto pos = [&](const char* name, double v) {
    rr.checks.push_back({name, v > 0.0, v, 0.0});
  };
  pos("sup_p1_positive", scan.sup.p1);
  pos("sup_r1_positive", scan.sup.r1);
  pos("sup_abs_s1_positive", scan.sup.abs_s1);
  pos("sup_abs_s2_positive", scan.sup.abs_s2);

  rr.results = to_json(scan);
  if (f.tag == FormTag::Sig22) {
    // Wronskian grid minimum and a Remez sublevel table for P1.
    double wmin = std::numeric_limits<double>::infinity();
    for (double x = -1.0; x <= 1.0 + 1e-12; x += step)
      for (double y = -1.0; y <= 1.0 + 1e-12; y += step)
        wmin = std::min(wmin, std::abs(wronskian(f, x, y)));
    rr.results["wronskian_grid_min"] = wmin;
    pos("wronskian_min_positive", wmin);
    auto poly = [&](const VecX& v) {
      return p1(f, UPair{v(0), v(1), v(2), v(3)});
    };
    std::vector<std::array<double, 2>> box(4, {-1.0, 1.0});
    RemezTable t = remez_scan(poly, box, {1e-1, 1e-2, 1e-3, 1e-4}, 1 << 14,
                              cfg.at("seed").get<long>());
    rr.results["remez_p1"] = to_json(t);
  }
  return rr;
}

// ---------------------------------------------------------------------
// gen: fractal generators to CSV.
// ---------------------------------------------------------------------

RunResult cmd_gen(const CfgSource& src, const json& cfg, const fs::path& dir) {
  RunResult rr;
  std::string kind = cfg.at("generator").get<std::string>();
  auto seed = static_cast<std::uint64_t>(cfg.at("seed").get<long>());
  PointSet ps;
  if (kind == "cantor") {
    ps = gen_cantor(cfg.at("alpha").get<double>(), cfg.at("depth").get<int>(),
                    seed);
  } else if (kind == "obstructed") {
    ps = gen_obstructed(form_from_config(src, cfg),
                        cfg.at("alpha").get<double>(),
                        cfg.at("depth").get<int>(), seed);
  } else if (kind == "net") {
    ps = gen_subspace_net(cfg.at("axes").get<std::vector<int>>(),
                          cfg.at("neg_log2_delta").get<int>());
  } else {
    src.fail("generator", "generator must be cantor, obstructed, or net");
  }
  save_csv(ps, (dir / "detail.csv").string());
  rr.wrote_detail = true;
  rr.results = {{"n_points", ps.size()}};
  if (kind != "net") {
    double alpha = cfg.at("alpha").get<double>();
    int depth = cfg.at("depth").get<int>();
    double fro = dyadic_frostman_constant(ps, alpha, depth);
    rr.results["dyadic_frostman"] = fro;
    double cap = cfg.at("max_dyadic_frostman").get<double>();
    rr.checks.push_back({"dyadic_frostman_bound", fro <= cap, fro, cap});
    if (depth >= 3)
      rr.results["covering_exponent_fit"] =
          covering_exponent_fit(ps, 2, depth);
  }
  rr.checks.push_back({"nonempty", ps.size() >= 1,
                       static_cast<double>(ps.size()), 1.0});
  return rr;
}

// ---------------------------------------------------------------------
// Experiment commands (shared emission).
// ---------------------------------------------------------------------

RunResult emit_experiment(const ExperimentReport& rep, const fs::path& dir,
                          std::vector<Check> checks) {
  RunResult rr;
  save_samples_csv(rep, (dir / "detail.csv").string());
  rr.wrote_detail = true;
  rr.results = to_json(rep);
  rr.checks = std::move(checks);
  return rr;
}

RunResult cmd_project_exp(const CfgSource& src, const json& cfg,
                          const fs::path& dir) {
  Form f = form_from_config(src, cfg);
  PointSet ps = load_source(src, cfg);
  auto seed = static_cast<std::uint64_t>(cfg.at("seed").get<long>());
  int threads = cfg.at("threads").get<int>();
  std::string mode = cfg.at("mode").get<std::string>();
  ExperimentReport rep;
  if (mode == "subcritical") {
    rep = exp_subcritical(f, ps, cfg.at("lambda").get<int>(),
                          cfg.at("neg_log2_delta").get<int>(),
                          cfg.at("eps").get<double>(),
                          cfg.at("n_samples").get<int>(),
                          cfg.at("adversarial_k").get<int>(), seed,
                          cfg.at("slack_exp").get<double>(), threads);
  } else if (mode == "optimal_hw") {
    rep = exp_optimal_hw(f, ps, cfg.at("neg_log2_delta").get<int>(),
                         cfg.at("c").get<double>(),
                         cfg.at("n_samples").get<int>(), seed, threads);
  } else {
    src.fail("mode", "mode must be \"subcritical\" or \"optimal_hw\"");
  }
  double cap = cfg.at("max_exceptional_fraction").get<double>();
  std::vector<Check> checks{{"exceptional_fraction",
                             rep.exceptional_fraction <= cap,
                             rep.exceptional_fraction, cap}};
  return emit_experiment(rep, dir, std::move(checks));
}

RunResult cmd_multislice_exp(const CfgSource& src, const json& cfg,
                             const fs::path& dir) {
  Form f = form_from_config(src, cfg);
  PointSet ps = load_source(src, cfg);
  ExperimentReport rep = exp_multislice(
      f, ps, rtuple_from_config(src, cfg, "rt64"),
      cfg.at("neg_log2_rho").get<int>(), cfg.at("eps").get<double>(),
      cfg.at("n_samples").get<int>(),
      static_cast<std::uint64_t>(cfg.at("seed").get<long>()),
      cfg.at("threads").get<int>());
  double cap = cfg.at("max_improved_exceptional_fraction").get<double>();
  double frac = rep.fitted.at("improved_exceptional_fraction");
  std::vector<Check> checks{
      {"improved_exceptional_fraction", frac <= cap, frac, cap}};
  return emit_experiment(rep, dir, std::move(checks));
}

RunResult cmd_energy_improve(const CfgSource& src, const json& cfg,
                             const fs::path& dir) {
  Form f = form_from_config(src, cfg);
  PointSet ps = load_source(src, cfg);
  double delta = std::ldexp(1.0, -cfg.at("neg_log2_delta").get<int>());
  auto ells = cfg.at("ell_list").get<std::vector<double>>();
  ExperimentReport rep = exp_energy_improvement(
      f, ps, cfg.at("alpha").get<double>(), delta, ells,
      cfg.at("n_samples").get<int>(), cfg.at("n_base_points").get<int>(),
      static_cast<std::uint64_t>(cfg.at("seed").get<long>()),
      cfg.at("threads").get<int>());
  std::vector<Check> checks;
  if (cfg.at("require_monotone").get<bool>()) {
    bool mono = true;
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < ells.size(); ++k) {
      double v = rep.fitted.at("median_ratio_" + std::to_string(k));
      mono = mono && v < prev;
      prev = v;
    }
    checks.push_back({"median_ratio_decreasing", mono, mono ? 1.0 : 0.0,
                      1.0});
  }
  return emit_experiment(rep, dir, std::move(checks));
}

RunResult cmd_slab_exp(const CfgSource& src, const json& cfg,
                       const fs::path& dir) {
  Form f = form_from_config(src, cfg);
  PointSet ps = load_source(src, cfg);
  ExperimentReport rep = exp_slab_subcritical(
      f, ps, rtuple_from_config(src, cfg, "rt64"),
      cfg.at("neg_log2_rho").get<int>(), cfg.at("iota").get<double>(),
      cfg.at("n_samples").get<int>(),
      static_cast<std::uint64_t>(cfg.at("seed").get<long>()),
      cfg.at("threads").get<int>());
  double cap = cfg.at("max_exceptional_fraction").get<double>();
  std::vector<Check> checks{{"exceptional_fraction",
                             rep.exceptional_fraction <= cap,
                             rep.exceptional_fraction, cap}};
  return emit_experiment(rep, dir, std::move(checks));
}

// ---------------------------------------------------------------------
// regularize: Bourgain regularization of a CSV point set.
// ---------------------------------------------------------------------

RunResult cmd_regularize(const CfgSource& src, const json& cfg,
                         const fs::path& dir) {
  RunResult rr;
  std::string path = cfg.at("input_csv").get<std::string>();
  if (path.empty()) src.fail("input_csv", "input_csv is required");
  PointSet ps = load_csv(path);
  auto levels = cfg.at("levels").get<std::vector<int>>();
  if (levels.size() < 2)
    src.fail("levels", "need at least two partition levels");
  std::vector<TubePartition> parts;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] < 1 || (i > 0 && levels[i] <= levels[i - 1]))
      src.fail("levels", "levels must be strictly increasing and >= 1");
    parts.push_back(TubePartition::cube(levels[i]));
  }
  Filtration filt = Filtration::of(parts);
  std::string mode = cfg.at("mode").get<std::string>();
  RegularizedSet reg;
  if (mode == "set")
    reg = bourgain_regularize_set(ps, filt);
  else if (mode == "measure")
    reg = bourgain_regularize_measure(ps, filt);
  else
    src.fail("mode", "mode must be \"set\" or \"measure\"");

  save_csv(reg.subset, (dir / "detail.csv").string());
  rr.wrote_detail = true;

  bool regular = mode == "set"
                     ? is_regular_set(reg.subset, filt, reg.sigma)
                     : is_regular_measure(reg.subset, filt, reg.sigma);
  rr.checks.push_back({"output_regular", regular, regular ? 1.0 : 0.0, 1.0});
  if (mode == "set") {
    // Count retention bound: |A'| >= |A| * prod 1/(2 (1 + d_i)).
    const TubePartition& finest = filt.levels.back();
    auto all = static_cast<double>(covering_number(ps, finest));
    auto kept = static_cast<double>(covering_number(reg.subset, finest));
    double factor = 1.0;
    for (double d : filt.branching) factor /= 2.0 * (1.0 + d);
    rr.checks.push_back({"count_retention", kept >= all * factor, kept,
                         all * factor});
  } else {
    double kept = kept_mass(ps, reg);
    double bound = regularization_mass_bound(filt);
    rr.checks.push_back({"mass_retention", kept >= bound, kept, bound});
  }
  rr.results = {{"n_input", ps.size()},
                {"n_kept", reg.subset.size()},
                {"sigma", reg.sigma.sigma},
                {"branching", filt.branching}};
  return rr;
}

// ---------------------------------------------------------------------
// ledger: derive the bootstrap constant system and check the chains.
// ---------------------------------------------------------------------

RunResult cmd_ledger(const CfgSource& src, const json& cfg, const fs::path& dir) {
  RunResult rr;
  auto decimal = [&](const char* key) {
    const json& v = cfg.at(key);
    return v.is_string() ? v.get<std::string>() : v.dump();
  };
  StructuralConstants sc;
  sc.a = cfg.at("const_a").get<double>();
  sc.c = cfg.at("const_c").get<double>();
  sc.d = cfg.at("const_d").get<double>();
  sc.e1 = cfg.at("const_e1").get<double>();
  sc.e2 = cfg.at("const_e2").get<double>();
  sc.m = cfg.at("const_m").get<double>();
  LedgerInput in;
  try {
    in = make_ledger_input(decimal("eps0"), decimal("kappa1"),
                           cfg.at("log_r").get<double>(), sc);
  } catch (const ledger_error& e) {
    src.fail("eps0", e.what());
  }
  LedgerReport rep = derive_constants(in);
  CheckTable table = check_inequalities(in, rep);
  rr.results = {{"report", to_json(rep)}, {"inequalities", to_json(table)}};

  std::ofstream csv(dir / "detail.csv");
  csv << "inequality,pass,r_dependent,slack_sign,ln_slack_lo,ln_slack_hi\n";
  char buf[40];
  for (const auto& row : table.rows) {
    csv << row.name << "," << (row.pass ? 1 : 0) << ","
        << (row.r_dependent ? 1 : 0) << "," << row.slack.sign << ",";
    std::snprintf(buf, sizeof buf, "%.17g", row.slack.mag.lo);
    csv << buf << ",";
    std::snprintf(buf, sizeof buf, "%.17g", row.slack.mag.hi);
    csv << buf << "\n";
  }
  rr.wrote_detail = true;

  rr.checks.push_back({"alpha_final_in_range", rep.alpha_final_in_range,
                       rep.alpha_final_in_range ? 1.0 : 0.0, 1.0});
  // Every slack must have a certified sign (strictly signed or exactly
  // zero); an uncertain enclosure would mean the arithmetic failed.
  bool certified = true;
  for (const auto& row : table.rows)
    certified &= certified_positive(row.slack) ||
                 certified_negative(row.slack) ||
                 certified_nonneg(row.slack);
  rr.checks.push_back({"slack_signs_certified", certified,
                       certified ? 1.0 : 0.0, 1.0});
  if (cfg.at("require_all_pass").get<bool>())
    rr.checks.push_back({"all_inequalities_pass", table.all_pass,
                         table.all_pass ? 1.0 : 0.0, 1.0});
  return rr;
}

// ---------------------------------------------------------------------
// Command registry.
// ---------------------------------------------------------------------

using Handler = RunResult (*)(const CfgSource&, const json&, const fs::path&);

struct Command {
  const char* name;
  const char* help;
  std::vector<Field> schema;
  Handler handler;
};

std::vector<Command> make_commands() {
  std::vector<Field> common = {{"seed", FType::Int, false, 1},
                               {"threads", FType::Int, false, 1}};
  auto plus = [&](std::vector<Field> extra) {
    extra.insert(extra.end(), common.begin(), common.end());
    return extra;
  };
  return {
      {"rep-check", "representation and symmetric-pair invariant suite",
       plus({{"form", FType::Str, false, "both"},
             {"n_samples", FType::Int, false, 1000}}),
       cmd_rep_check},
      {"nondeg-scan", "non-degeneracy grid scans and Remez tables",
       plus({{"form", FType::Str, false, "sig22"},
             {"step", FType::Num, false, 0.125},
             {"tau", FType::Num, false, kDefaultRankTau}}),
       cmd_nondeg_scan},
      {"gen", "seeded fractal/net generators to CSV",
       plus({{"generator", FType::Str, false, "cantor"},
             {"form", FType::Str, false, "sig22"},
             {"alpha", FType::Num, false, 4.5},
             {"depth", FType::Int, false, 4},
             {"axes", FType::IntList, false, json::array({8})},
             {"neg_log2_delta", FType::Int, false, 6},
             {"max_dyadic_frostman", FType::Num, false, 8.0}}),
       cmd_gen},
      {"project-exp", "subcritical / near-optimal projection experiments",
       plus(with_source({{"form", FType::Str, false, "sig22"},
                         {"mode", FType::Str, false, "subcritical"},
                         {"lambda", FType::Int, false, 1},
                         {"neg_log2_delta", FType::Int, true, {}},
                         {"eps", FType::Num, false, 0.05},
                         {"n_samples", FType::Int, false, 100},
                         {"adversarial_k", FType::Int, false, 4},
                         {"slack_exp", FType::Num, false, 0.1},
                         {"c", FType::Num, false, 0.25},
                         {"max_exceptional_fraction", FType::Num, false,
                          1.0}})),
       cmd_project_exp},
      {"multislice-exp", "anisotropic tube covering experiment",
       plus(with_source({{"form", FType::Str, false, "sig22"},
                         {"rt64", FType::IntList, true, {}},
                         {"neg_log2_rho", FType::Int, true, {}},
                         {"eps", FType::Num, false, 0.0},
                         {"n_samples", FType::Int, false, 100},
                         {"max_improved_exceptional_fraction", FType::Num,
                          false, 1.0}})),
       cmd_multislice_exp},
      {"energy-improve", "energy decay under the expanding flow",
       plus(with_source({{"form", FType::Str, false, "sig22"},
                         {"alpha", FType::Num, false, 1.0},
                         {"neg_log2_delta", FType::Int, true, {}},
                         {"ell_list", FType::NumList, false,
                          json::array({1.0, 1.5, 2.0})},
                         {"n_samples", FType::Int, false, 50},
                         {"n_base_points", FType::Int, false, 8},
                         {"require_monotone", FType::Bool, false, true}})),
       cmd_energy_improve},
      {"slab-exp", "regularized multi-scale slab experiment",
       plus(with_source({{"form", FType::Str, false, "sig22"},
                         {"rt64", FType::IntList, true, {}},
                         {"neg_log2_rho", FType::Int, true, {}},
                         {"iota", FType::Num, false, 0.1},
                         {"n_samples", FType::Int, false, 100},
                         {"max_exceptional_fraction", FType::Num, false,
                          1.0}})),
       cmd_slab_exp},
      {"regularize", "Bourgain regularization of a CSV point set",
       plus({{"input_csv", FType::Str, true, {}},
             {"levels", FType::IntList, true, {}},
             {"mode", FType::Str, false, "set"}}),
       cmd_regularize},
      {"ledger", "bootstrap constant system: derive and check",
       plus({{"eps0", FType::Decimal, true, {}},
             {"kappa1", FType::Decimal, true, {}},
             {"log_r", FType::Num, false, 1e6},
             {"const_a", FType::Num, false, 2.0},
             {"const_c", FType::Num, false, 1.0},
             {"const_d", FType::Num, false, 1.0},
             {"const_e1", FType::Num, false, 1.0},
             {"const_e2", FType::Num, false, 1.0},
             {"const_m", FType::Num, false, 1.0},
             {"require_all_pass", FType::Bool, false, false}}),
       cmd_ledger},
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"horospherical projection experiments and constant ledger"};
  app.require_subcommand(1);

  auto commands = make_commands();
  struct SubState {
    std::string config_path, outdir = "out", stamp;
    std::vector<std::string> sets;
    // convenience overrides
    std::string form, eps0, kappa1, generator, mode;
    long seed = -1;
    int threads = -1, depth = -1, m = -1;
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double log_r = std::numeric_limits<double>::quiet_NaN();
  };
  std::map<std::string, SubState> states;

  for (const auto& cmd : commands) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    SubState& st = states[cmd.name];
    sub->add_option("--config", st.config_path, "JSON config file");
    sub->add_option("--seed", st.seed, "RNG seed override");
    sub->add_option("--outdir", st.outdir, "output directory root");
    sub->add_option("--threads", st.threads, "worker pool size");
    sub->add_option("--stamp", st.stamp,
                    "fixed run-directory stamp (default: wall clock)");
    sub->add_option("--set", st.sets,
                    "generic key=value config override (repeatable)");
    sub->add_option("--form", st.form, "form tag: sig22 | sig31 | both");
    if (std::string(cmd.name) == "ledger") {
      sub->add_option("--eps0", st.eps0, "initial dimension (decimal)");
      sub->add_option("--kappa1", st.kappa1, "mixing exponent (decimal)");
      sub->add_option("--logR", st.log_r, "natural log of R");
    }
    if (std::string(cmd.name) == "gen") {
      sub->add_option("--generator", st.generator,
                      "cantor | obstructed | net");
      sub->add_option("--alpha", st.alpha, "target dimension");
      sub->add_option("--depth", st.depth, "subdivision depth");
    }
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& cmd : commands) {
      auto* sub = app.get_subcommand(cmd.name);
      if (!sub->parsed()) continue;
      const SubState& st = states[cmd.name];
      CfgSource src;
      json file_cfg = json::object();
      if (!st.config_path.empty())
        file_cfg = load_config_file(st.config_path, src);
      json overrides = json::object();
      for (const auto& kv : st.sets) apply_set(overrides, kv);
      if (st.seed >= 0) overrides["seed"] = st.seed;
      if (st.threads >= 0) overrides["threads"] = st.threads;
      if (!st.form.empty()) overrides["form"] = st.form;
      if (!st.eps0.empty()) overrides["eps0"] = st.eps0;
      if (!st.kappa1.empty()) overrides["kappa1"] = st.kappa1;
      if (!std::isnan(st.log_r)) overrides["log_r"] = st.log_r;
      if (!st.generator.empty()) overrides["generator"] = st.generator;
      if (!std::isnan(st.alpha)) overrides["alpha"] = st.alpha;
      if (st.depth >= 0) overrides["depth"] = st.depth;

      json resolved = resolve_config(cmd.schema, src, file_cfg, overrides);
      fs::path dir = make_run_dir(
          st.outdir, cmd.name, st.stamp.empty() ? now_stamp() : st.stamp);
      RunResult rr = cmd.handler(src, resolved, dir);
      return finish_run(cmd.name, resolved, dir, rr);
    }
  } catch (const ConfigViolation& e) {
    std::cerr << "config error: " << e.message << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    // Library precondition violations are config-value problems.
    std::cerr << "config error: <config>:1: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
