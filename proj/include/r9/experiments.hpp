// Monte-Carlo experiment drivers: empirical exceptional-set fractions and
// rate exponents for flag projections, multiscale tube coverings, and the
// energy decrement under the diagonal flow, evaluated on finite point sets.
//
// The underlying statements quantify over all large subsets A' of F; the
// desk-scale proxy tested here is A' = F together with an adversarial menu
// (densest cells by mass, random halves).  Reported exceptional fractions
// are therefore lower bounds.  Slack constants are fitted and reported,
// never asserted.
#pragma once

#include "r9/energy.hpp"
#include "r9/fractal_gen.hpp"
#include "r9/partition_cover.hpp"
#include "r9/regularize.hpp"
#include "r9/rng.hpp"
#include "r9/weight_rep.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>
#include <unordered_set>
#include <string>
#include <thread>
#include <vector>

namespace r9 {

struct experiment_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// -------------------------------------------------------------------------
// The projection-loss profile: phi_hat(alpha) = min{alpha, 1} - alpha/9 and
// its normalized companion phi = phi_hat / 36.

struct PhiValue {
  double alpha = 0.0;
  double phi_hat = 0.0;
  double phi = 0.0;
};

inline PhiValue phi(double alpha) {
  if (!(alpha > 0.0 && alpha <= 9.0))
    throw experiment_error("phi: alpha must be in (0, 9]");
  PhiValue v;
  v.alpha = alpha;
  v.phi_hat = std::min(alpha, 1.0) - alpha / 9.0;
  v.phi = v.phi_hat / 36.0;
  return v;
}

// -------------------------------------------------------------------------
// Report containers.  One record per sampled u; each record carries named
// channels (tested subset or scale) with the raw count, the slacked bound
// actually compared against, and the slack-free ratio count / core-bound.

struct SampleChannel {
  std::string name;
  double count = 0.0;
  double bound = 0.0;
  double ratio = 0.0;
  bool pass = true;
};

struct SampleRecord {
  int index = 0;
  double u_r = 0.0;
  double u_s = 0.0;
  std::vector<SampleChannel> channels;

  bool pass() const {
    for (const auto& c : channels)
      if (!c.pass) return false;
    return true;
  }

  double min_ratio() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& c : channels) m = std::min(m, c.ratio);
    return m;
  }
};

struct ExperimentReport {
  std::string name;
  nlohmann::json config;
  std::vector<SampleRecord> samples;
  double exceptional_fraction = 0.0;
  std::map<std::string, double> fitted;
  double runtime_seconds = 0.0;
};

// Fraction of samples whose worst slack-free ratio falls below the given
// slack factor.  Non-increasing in slack; applies to the count-type
// experiments (where larger ratios are better).
inline double exceptional_fraction_at(const ExperimentReport& rep,
                                      double slack) {
  if (rep.samples.empty()) return 0.0;
  std::size_t bad = 0;
  for (const auto& s : rep.samples)
    if (s.min_ratio() < slack) ++bad;
  return static_cast<double>(bad) / static_cast<double>(rep.samples.size());
}

// The runtime field is wall-clock and is excluded from determinism
// comparisons, exactly like output timestamps.
inline nlohmann::json to_json(const ExperimentReport& rep) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : rep.samples) {
    nlohmann::json chans = nlohmann::json::array();
    for (const auto& c : s.channels)
      chans.push_back({{"name", c.name},
                       {"count", c.count},
                       {"bound", c.bound},
                       {"ratio", c.ratio},
                       {"pass", c.pass}});
    samples.push_back({{"index", s.index},
                       {"u_r", s.u_r},
                       {"u_s", s.u_s},
                       {"channels", chans},
                       {"pass", s.pass()}});
  }
  return nlohmann::json{{"schema_version", 1},
                        {"name", rep.name},
                        {"config", rep.config},
                        {"samples", samples},
                        {"exceptional_fraction", rep.exceptional_fraction},
                        {"fitted", rep.fitted},
                        {"runtime_seconds", rep.runtime_seconds}};
}

// Long-format CSV: one row per (sample, channel).
inline void save_samples_csv(const ExperimentReport& rep,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw experiment_error("save_samples_csv: cannot open " + path);
  out << "sample,u_r,u_s,channel,count,bound,ratio,pass\n";
  char buf[32];
  for (const auto& s : rep.samples)
    for (const auto& c : s.channels) {
      out << s.index << ",";
      std::snprintf(buf, sizeof buf, "%.17g", s.u_r);
      out << buf << ",";
      std::snprintf(buf, sizeof buf, "%.17g", s.u_s);
      out << buf << "," << c.name << ",";
      std::snprintf(buf, sizeof buf, "%.17g", c.count);
      out << buf << ",";
      std::snprintf(buf, sizeof buf, "%.17g", c.bound);
      out << buf << ",";
      std::snprintf(buf, sizeof buf, "%.17g", c.ratio);
      out << buf << "," << (c.pass ? 1 : 0) << "\n";
    }
}

namespace detail {

// Deterministic parallel map: sample i is computed from fork(i) of the base
// seed, so the result is independent of the thread layout.
template <typename Fn>
inline void parallel_samples(int n, int n_threads, Fn&& fn) {
  if (n_threads <= 0)
    n_threads = std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, n);
  if (n_threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  for (int t = 0; t < n_threads; ++t)
    workers.emplace_back([&, t] {
      for (int i = t; i < n; i += n_threads) fn(i);
    });
  for (auto& w : workers) w.join();
}

inline double seconds_since(
    std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
  return 0.5 * (v[mid - 1] + hi);
}

// Covering number of the image of (a subset of) the points under a linear
// map followed by the flag projection.
inline std::int64_t projected_covering(const PointSet& f,
                                       const std::vector<int>& members,
                                       const Mat9& map, int lambda,
                                       const TubePartition& p) {
  std::unordered_set<AtomKey, AtomKeyHash> keys;
  keys.reserve(members.size());
  for (int i : members)
    keys.insert(atom_key(p, pi_flag(lambda, Vec9(map * f.points[i]))));
  return static_cast<std::int64_t>(keys.size());
}

inline std::vector<int> all_members(const PointSet& f) {
  std::vector<int> idx(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) idx[i] = static_cast<int>(i);
  return idx;
}

// Adversarial menu: the densest cells at the base scale holding half the
// mass, plus (k - 1) uniformly random halves.
inline std::vector<std::pair<std::string, std::vector<int>>>
adversarial_menu(const PointSet& f, const TubePartition& base, int k,
                 Rng& rng) {
  std::vector<std::pair<std::string, std::vector<int>>> menu;
  menu.emplace_back("full", all_members(f));
  // Densest half: sort cells by mass, keep heaviest cells until >= 1/2.
  std::map<std::array<std::int64_t, 9>, std::vector<int>> cells;
  for (std::size_t i = 0; i < f.size(); ++i)
    cells[atom_key(base, f.points[i]).idx].push_back(static_cast<int>(i));
  std::vector<std::pair<double, const std::vector<int>*>> by_mass;
  for (const auto& [key, group] : cells) {
    double m = 0.0;
    for (int i : group) m += f.weights[i];
    by_mass.emplace_back(m, &group);
  }
  std::stable_sort(by_mass.begin(), by_mass.end(),
                   [](const auto& a, const auto& b) {
                     return a.first > b.first;
                   });
  std::vector<int> dense;
  double mass = 0.0;
  for (const auto& [m, group] : by_mass) {
    dense.insert(dense.end(), group->begin(), group->end());
    mass += m;
    if (mass >= 0.5) break;
  }
  std::sort(dense.begin(), dense.end());
  menu.emplace_back("densest_half", std::move(dense));
  for (int j = 1; j < k; ++j) {
    std::vector<int> idx = all_members(f);
    // Partial Fisher-Yates selecting half the indices.
    std::size_t half = (f.size() + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
      std::size_t pick =
          i + static_cast<std::size_t>(rng.below(f.size() - i));
      std::swap(idx[i], idx[pick]);
    }
    idx.resize(half);
    std::sort(idx.begin(), idx.end());
    menu.emplace_back("random_half_" + std::to_string(j), std::move(idx));
  }
  return menu;
}

}  // namespace detail

// -------------------------------------------------------------------------
// Subcritical flag-projection experiment.  For each sampled u in [-1,1]^2
// and each subset A' in the adversarial menu, compares the delta-covering
// of pi^{(lambda)}(Ad(u) A') against |F|_delta^{m/9} with m the flag
// dimension.  The pass flag uses the reference slack delta^{slack_exp};
// the minimal exponent making every sample pass is fitted and reported.
inline ExperimentReport exp_subcritical(const Form& fm, const PointSet& f,
                                        int lambda, int neg_log2_delta,
                                        double eps, int n_samples,
                                        int adversarial_k, std::uint64_t seed,
                                        double slack_exp = 0.1,
                                        int n_threads = 1) {
  auto start = std::chrono::steady_clock::now();
  if (lambda < -1 || lambda > 2)
    throw experiment_error("exp_subcritical: lambda must be in {-1,0,1,2}");
  if (neg_log2_delta < 1)
    throw experiment_error("exp_subcritical: delta must be a power of 2 < 1");
  if (n_samples < 1 || adversarial_k < 1)
    throw experiment_error("exp_subcritical: need samples and k >= 1");
  const int m = flag_dim(lambda);
  const TubePartition base = TubePartition::cube(neg_log2_delta);
  const double delta = base.delta();
  const double f_count =
      static_cast<double>(covering_number(f, base));
  const double core = std::pow(f_count, static_cast<double>(m) / 9.0);
  const double slack = std::pow(delta, slack_exp);

  Rng menu_rng = Rng(seed).fork(0xadu);
  auto menu = detail::adversarial_menu(f, base, adversarial_k, menu_rng);

  ExperimentReport rep;
  rep.name = "subcritical";
  rep.config = {{"lambda", lambda},       {"neg_log2_delta", neg_log2_delta},
                {"eps", eps},             {"n_samples", n_samples},
                {"adversarial_k", adversarial_k},
                {"seed", seed},           {"slack_exp", slack_exp},
                {"form", fm.tag == FormTag::Sig22 ? "sig22" : "sig31"},
                {"n_points", f.size()}};
  rep.samples.resize(static_cast<std::size_t>(n_samples));
  const Rng base_rng(seed);
  detail::parallel_samples(n_samples, n_threads, [&](int i) {
    Rng rng = base_rng.fork(static_cast<std::uint64_t>(i) + 1);
    SampleRecord rec;
    rec.index = i;
    rec.u_r = rng.uniform(-1.0, 1.0);
    rec.u_s = rng.uniform(-1.0, 1.0);
    Mat9 map = ad_u(fm, rec.u_r, rec.u_s);
    for (const auto& [name, members] : menu) {
      SampleChannel ch;
      ch.name = name;
      ch.count = static_cast<double>(
          detail::projected_covering(f, members, map, lambda, base));
      ch.bound = slack * core;
      ch.ratio = ch.count / core;
      ch.pass = ch.count >= ch.bound;
      rec.channels.push_back(std::move(ch));
    }
    rep.samples[static_cast<std::size_t>(i)] = std::move(rec);
  });

  std::size_t bad = 0;
  double worst_ratio = std::numeric_limits<double>::infinity();
  for (const auto& s : rep.samples) {
    if (!s.pass()) ++bad;
    worst_ratio = std::min(worst_ratio, s.min_ratio());
  }
  rep.exceptional_fraction =
      static_cast<double>(bad) / static_cast<double>(n_samples);
  // Minimal M with slack delta^{eps*M} passing everywhere: the exponent
  // needed to absorb the worst observed ratio.
  double needed = worst_ratio >= 1.0
                      ? 0.0
                      : std::log(worst_ratio) / std::log(delta);
  rep.fitted["m_report"] = eps > 0.0 ? needed / eps : needed;
  rep.fitted["worst_ratio"] = worst_ratio;
  rep.fitted["f_covering"] = f_count;
  rep.runtime_seconds = detail::seconds_since(start);
  return rep;
}

// -------------------------------------------------------------------------
// Highest-weight projection experiment: per u, the rho-covering of the
// one-dimensional projection pi^{(2)}(Ad(u) F) is compared against
// rho^{-min{alpha_hat, 1}} with alpha_hat the measured box dimension of F
// and multiplicative slack rho^{sqrt(c)}.  Counts at the coarser scales
// 2^-2 .. rho are recorded per sample and the median least-squares rate
// exponent is reported.
inline ExperimentReport exp_optimal_hw(const Form& fm, const PointSet& f,
                                       int neg_log2_rho, double c,
                                       int n_samples, std::uint64_t seed,
                                       int n_threads = 1) {
  auto start = std::chrono::steady_clock::now();
  if (neg_log2_rho < 3)
    throw experiment_error("exp_optimal_hw: need rho <= 2^-3");
  if (!(c >= 0.0)) throw experiment_error("exp_optimal_hw: c must be >= 0");
  if (n_samples < 1) throw experiment_error("exp_optimal_hw: need samples");
  const double rho = std::ldexp(1.0, -neg_log2_rho);
  const double alpha_hat = std::clamp(
      covering_exponent_fit(f, 2, neg_log2_rho), 1e-3, 9.0);
  const double core = std::pow(rho, -std::min(alpha_hat, 1.0));
  const double slack = std::pow(rho, std::sqrt(c));
  // Rate regression over the five finest scales; coarser scales saturate.
  const int m_lo = std::max(2, neg_log2_rho - 4);

  ExperimentReport rep;
  rep.name = "optimal_hw";
  rep.config = {{"neg_log2_rho", neg_log2_rho},
                {"c", c},
                {"n_samples", n_samples},
                {"seed", seed},
                {"form", fm.tag == FormTag::Sig22 ? "sig22" : "sig31"},
                {"n_points", f.size()}};
  rep.samples.resize(static_cast<std::size_t>(n_samples));
  std::vector<double> rates(static_cast<std::size_t>(n_samples));
  const auto members = detail::all_members(f);
  const Rng base_rng(seed);
  detail::parallel_samples(n_samples, n_threads, [&](int i) {
    Rng rng = base_rng.fork(static_cast<std::uint64_t>(i) + 1);
    SampleRecord rec;
    rec.index = i;
    rec.u_r = rng.uniform(-1.0, 1.0);
    rec.u_s = rng.uniform(-1.0, 1.0);
    Mat9 map = ad_u(fm, rec.u_r, rec.u_s);
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int n_fit = 0;
    for (int mm = m_lo; mm <= neg_log2_rho; ++mm) {
      std::int64_t count = detail::projected_covering(
          f, members, map, 2, TubePartition::cube(mm));
      double y = std::log2(static_cast<double>(count));
      sx += mm;
      sy += y;
      sxx += static_cast<double>(mm) * mm;
      sxy += mm * y;
      ++n_fit;
      if (mm == neg_log2_rho) {
        SampleChannel ch;
        ch.name = "count_rho";
        ch.count = static_cast<double>(count);
        ch.bound = slack * core;
        ch.ratio = ch.count / core;
        ch.pass = ch.count >= ch.bound;
        rec.channels.push_back(std::move(ch));
      }
    }
    rates[static_cast<std::size_t>(i)] =
        (n_fit * sxy - sx * sy) / (n_fit * sxx - sx * sx);
    rep.samples[static_cast<std::size_t>(i)] = std::move(rec);
  });

  std::size_t bad = 0;
  for (const auto& s : rep.samples)
    if (!s.pass()) ++bad;
  rep.exceptional_fraction =
      static_cast<double>(bad) / static_cast<double>(n_samples);
  rep.fitted["alpha_hat"] = alpha_hat;
  rep.fitted["rate_exponent"] = detail::median(rates);
  rep.runtime_seconds = detail::seconds_since(start);
  return rep;
}

// -------------------------------------------------------------------------
// Multiscale tube-covering experiment.  Per u, the covering of Ad(u) F by
// the anisotropic tube partition at base scale rho and exponent tuple rt is
// compared against the baseline vol(T)^{-alpha_hat/9} and the improved
// bound vol(T)^{-alpha_hat/9} * rho^{-(r5-r4) phi(alpha_hat)}, both with
// multiplicative slack rho^{sqrt(eps)}.  Both exceptional fractions are
// reported; the baseline one is the headline number.
inline ExperimentReport exp_multislice(const Form& fm, const PointSet& f,
                                       const RTuple& rt, int neg_log2_rho,
                                       double eps, int n_samples,
                                       std::uint64_t seed,
                                       int n_threads = 1) {
  auto start = std::chrono::steady_clock::now();
  if (neg_log2_rho < 3)
    throw experiment_error("exp_multislice: need rho <= 2^-3");
  if (n_samples < 1) throw experiment_error("exp_multislice: need samples");
  const double gap = (rt.r64[4] - rt.r64[3]) / 64.0;
  if (eps < 0.0 || (eps > 0.0 && !(eps <= gap / 4.0)))
    throw experiment_error(
        "exp_multislice: eps must be small against r5 - r4");
  const TubePartition tubes = TubePartition::make(neg_log2_rho, rt);
  const double rho = tubes.delta();
  const double vol =
      std::exp2(static_cast<double>(tubes.log2_volume_64()) / 64.0);
  const double alpha_hat = std::clamp(
      covering_exponent_fit(f, 2, neg_log2_rho), 1e-3, 9.0);
  const double baseline = std::pow(vol, -alpha_hat / 9.0);
  const double improved =
      baseline * std::pow(rho, -gap * phi(alpha_hat).phi);
  const double slack = std::pow(rho, std::sqrt(eps));

  ExperimentReport rep;
  rep.name = "multislice";
  rep.config = {{"rt", {rt.r64[0], rt.r64[1], rt.r64[2], rt.r64[3],
                        rt.r64[4]}},
                {"neg_log2_rho", neg_log2_rho},
                {"eps", eps},
                {"n_samples", n_samples},
                {"seed", seed},
                {"form", fm.tag == FormTag::Sig22 ? "sig22" : "sig31"},
                {"n_points", f.size()}};
  rep.samples.resize(static_cast<std::size_t>(n_samples));
  const Rng base_rng(seed);
  detail::parallel_samples(n_samples, n_threads, [&](int i) {
    Rng rng = base_rng.fork(static_cast<std::uint64_t>(i) + 1);
    SampleRecord rec;
    rec.index = i;
    rec.u_r = rng.uniform(-1.0, 1.0);
    rec.u_s = rng.uniform(-1.0, 1.0);
    Mat9 map = ad_u(fm, rec.u_r, rec.u_s);
    std::unordered_set<AtomKey, AtomKeyHash> keys;
    keys.reserve(f.size());
    for (const Vec9& w : f.points)
      keys.insert(atom_key(tubes, Vec9(map * w)));
    double count = static_cast<double>(keys.size());
    SampleChannel b{"baseline", count, slack * baseline, count / baseline,
                    count >= slack * baseline};
    SampleChannel g{"improved", count, slack * improved, count / improved,
                    count >= slack * improved};
    rec.channels.push_back(std::move(b));
    rec.channels.push_back(std::move(g));
    rep.samples[static_cast<std::size_t>(i)] = std::move(rec);
  });

  std::size_t bad_base = 0, bad_improved = 0;
  for (const auto& s : rep.samples) {
    if (!s.channels[0].pass) ++bad_base;
    if (!s.channels[1].pass) ++bad_improved;
  }
  rep.exceptional_fraction =
      static_cast<double>(bad_base) / static_cast<double>(n_samples);
  rep.fitted["improved_exceptional_fraction"] =
      static_cast<double>(bad_improved) / static_cast<double>(n_samples);
  rep.fitted["alpha_hat"] = alpha_hat;
  rep.fitted["log2_vol"] =
      static_cast<double>(tubes.log2_volume_64()) / 64.0;
  rep.runtime_seconds = detail::seconds_since(start);
  return rep;
}

// -------------------------------------------------------------------------
// Energy decrement under the diagonal flow.  Upsilon is the maximal
// modified alpha-energy of F at scale delta.  For each sampled u, flow
// time ell and base point w, the e^{-2 ell}-neighborhood of the image of w
// under ad_a(ell) * ad_u is formed, its energy at the inflated scale
// delta' = e^{2 ell} max{delta, #F^{-1/alpha}} is computed at the image
// point, and the ratio against e^{-phi(alpha) ell} Upsilon is recorded.
// Channels are named by flow time; per-ell median ratios are reported.
inline ExperimentReport exp_energy_improvement(
    const Form& fm, const PointSet& f, double alpha, double delta,
    const std::vector<double>& ell_list, int n_samples, int n_base_points,
    std::uint64_t seed, int n_threads = 1) {
  auto start = std::chrono::steady_clock::now();
  if (!(alpha > 0.0 && alpha < 9.0))
    throw experiment_error("exp_energy_improvement: alpha must be in (0, 9)");
  if (!(delta > 0.0 && delta < 1.0))
    throw experiment_error("exp_energy_improvement: delta must be in (0, 1)");
  if (ell_list.empty() || n_samples < 1 || n_base_points < 1)
    throw experiment_error("exp_energy_improvement: empty configuration");
  const double scale_floor = std::max(
      delta, std::pow(static_cast<double>(f.size()), -1.0 / alpha));
  for (double ell : ell_list) {
    if (!(ell >= 0.0))
      throw experiment_error("exp_energy_improvement: ell must be >= 0");
    if (!(std::exp(2.0 * ell) * scale_floor < std::exp(-2.0 * ell)))
      throw experiment_error(
          "exp_energy_improvement: e^{2l} max{delta, #F^{-1/alpha}} must "
          "stay below e^{-2l}");
  }

  // Upsilon: exact when the quadratic scan is affordable, otherwise the
  // maximum over a deterministic subsample of base points.
  const std::size_t cap = 20000;
  double upsilon = 0.0;
  {
    Rng rng = Rng(seed).fork(0xe0u);
    std::size_t n_scan = std::min(f.size(), cap);
    for (std::size_t k = 0; k < n_scan; ++k) {
      std::size_t i = f.size() <= cap ? k : rng.below(f.size());
      upsilon = std::max(
          upsilon, alpha_energy(f, delta, alpha, f.points[i]));
    }
  }

  ExperimentReport rep;
  rep.name = "energy_improvement";
  rep.config = {{"alpha", alpha},
                {"delta", delta},
                {"ell_list", ell_list},
                {"n_samples", n_samples},
                {"n_base_points", n_base_points},
                {"seed", seed},
                {"form", fm.tag == FormTag::Sig22 ? "sig22" : "sig31"},
                {"n_points", f.size()}};
  rep.samples.resize(static_cast<std::size_t>(n_samples));
  const Rng base_rng(seed);
  const PhiValue pv = phi(alpha);
  detail::parallel_samples(n_samples, n_threads, [&](int i) {
    Rng rng = base_rng.fork(static_cast<std::uint64_t>(i) + 1);
    SampleRecord rec;
    rec.index = i;
    rec.u_r = rng.uniform(-1.0, 1.0);
    rec.u_s = rng.uniform(-1.0, 1.0);
    Mat9 u = ad_u(fm, rec.u_r, rec.u_s);
    std::vector<std::size_t> bases;
    for (int b = 0; b < n_base_points; ++b)
      bases.push_back(static_cast<std::size_t>(rng.below(f.size())));
    for (double ell : ell_list) {
      Mat9 flow = ad_a(fm, ell) * u;
      const double radius = std::exp(-2.0 * ell);
      const double delta_prime = std::exp(2.0 * ell) * scale_floor;
      const double bound = std::exp(-pv.phi * ell) * upsilon;
      std::vector<Vec9> images;
      images.reserve(f.size());
      for (const Vec9& w : f.points) images.push_back(flow * w);
      std::vector<double> ratios;
      for (std::size_t b : bases) {
        const Vec9& center = images[b];
        std::vector<Vec9> nb;
        for (const Vec9& y : images)
          if (sup_norm(Vec9(y - center)) <= radius) nb.push_back(y);
        double e = alpha_energy(PointSet::uniform(std::move(nb)),
                                delta_prime, alpha, center);
        ratios.push_back(bound > 0.0 ? e / bound : 0.0);
      }
      double med = detail::median(ratios);
      SampleChannel ch;
      ch.name = "ell_" + std::to_string(ell);
      ch.count = med;
      ch.bound = bound;
      ch.ratio = med;
      ch.pass = med <= 1.0;
      rec.channels.push_back(std::move(ch));
    }
    rep.samples[static_cast<std::size_t>(i)] = std::move(rec);
  });

  std::size_t bad = 0;
  for (const auto& s : rep.samples)
    if (!s.pass()) ++bad;
  rep.exceptional_fraction =
      static_cast<double>(bad) / static_cast<double>(n_samples);
  for (std::size_t k = 0; k < ell_list.size(); ++k) {
    std::vector<double> per_ell;
    for (const auto& s : rep.samples)
      per_ell.push_back(s.channels[k].ratio);
    rep.fitted["median_ratio_" + std::to_string(k)] =
        detail::median(per_ell);
  }
  rep.fitted["upsilon"] = upsilon;
  rep.runtime_seconds = detail::seconds_since(start);
  return rep;
}

// -------------------------------------------------------------------------
// Slab subcritical experiment.  F is first regularized against the chain
// of cube partitions at the distinct scales rho^{r_i}; per u, the tube
// count |Ad(u) F'|_{D_rho^r} is compared against the product
// prod_i |F'|_{rho^{r_i}}^{d_i/9} (d_i the weight-space dimensions) with
// reference slack rho^{iota}.  The minimal slack exponent M2 making every
// sample pass is fitted and reported.
inline ExperimentReport exp_slab_subcritical(const Form& fm,
                                             const PointSet& f,
                                             const RTuple& rt,
                                             int neg_log2_rho, double iota,
                                             int n_samples,
                                             std::uint64_t seed,
                                             int n_threads = 1) {
  auto start = std::chrono::steady_clock::now();
  if (neg_log2_rho < 1)
    throw experiment_error("exp_slab_subcritical: need rho <= 1/2");
  if (!(iota >= 0.0))
    throw experiment_error("exp_slab_subcritical: iota must be >= 0");
  if (n_samples < 1)
    throw experiment_error("exp_slab_subcritical: need samples");

  // Regularization chain: cube partitions at the distinct positive scales
  // rho^{r_i}, coarsest first, preceded by the unit-scale partition.
  std::vector<int> exps;
  for (int i = 0; i < 5; ++i) {
    int e = rt.r64[i];
    if (e > 0 &&
        (exps.empty() || exps.back() != e))
      exps.push_back(e);
  }
  PointSet reg = f;
  if (!exps.empty()) {
    std::vector<TubePartition> levels;
    levels.push_back(
        TubePartition::make(neg_log2_rho, RTuple::of(0, 0, 0, 0, 0)));
    for (int e : exps) {
      double c = e / 64.0;
      levels.push_back(
          TubePartition::make(neg_log2_rho, RTuple::of(c, c, c, c, c)));
    }
    reg = bourgain_regularize_set(f, Filtration::of(std::move(levels)))
              .subset;
  }

  const TubePartition tubes = TubePartition::make(neg_log2_rho, rt);
  const double rho = tubes.delta();
  double core = 1.0;
  for (int i = 0; i < 5; ++i) {
    double c = rt.r64[i] / 64.0;
    TubePartition p =
        TubePartition::make(neg_log2_rho, RTuple::of(c, c, c, c, c));
    double cnt = static_cast<double>(covering_number(reg, p));
    core *= std::pow(cnt, static_cast<double>(kWeightDims[i]) / 9.0);
  }
  const double slack = std::pow(rho, iota);

  ExperimentReport rep;
  rep.name = "slab_subcritical";
  rep.config = {{"rt", {rt.r64[0], rt.r64[1], rt.r64[2], rt.r64[3],
                        rt.r64[4]}},
                {"neg_log2_rho", neg_log2_rho},
                {"iota", iota},
                {"n_samples", n_samples},
                {"seed", seed},
                {"form", fm.tag == FormTag::Sig22 ? "sig22" : "sig31"},
                {"n_points", f.size()},
                {"n_points_regularized", reg.size()}};
  rep.samples.resize(static_cast<std::size_t>(n_samples));
  const Rng base_rng(seed);
  detail::parallel_samples(n_samples, n_threads, [&](int i) {
    Rng rng = base_rng.fork(static_cast<std::uint64_t>(i) + 1);
    SampleRecord rec;
    rec.index = i;
    rec.u_r = rng.uniform(-1.0, 1.0);
    rec.u_s = rng.uniform(-1.0, 1.0);
    Mat9 map = ad_u(fm, rec.u_r, rec.u_s);
    std::unordered_set<AtomKey, AtomKeyHash> keys;
    keys.reserve(reg.size());
    for (const Vec9& w : reg.points)
      keys.insert(atom_key(tubes, Vec9(map * w)));
    double count = static_cast<double>(keys.size());
    SampleChannel ch{"tubes", count, slack * core, count / core,
                     count >= slack * core};
    rec.channels.push_back(std::move(ch));
    rep.samples[static_cast<std::size_t>(i)] = std::move(rec);
  });

  std::size_t bad = 0;
  double worst_ratio = std::numeric_limits<double>::infinity();
  for (const auto& s : rep.samples) {
    if (!s.pass()) ++bad;
    worst_ratio = std::min(worst_ratio, s.min_ratio());
  }
  rep.exceptional_fraction =
      static_cast<double>(bad) / static_cast<double>(n_samples);
  double needed = worst_ratio >= 1.0
                      ? 0.0
                      : std::log(worst_ratio) / std::log(rho);
  rep.fitted["m2_report"] = iota > 0.0 ? needed / iota : needed;
  rep.fitted["worst_ratio"] = worst_ratio;
  rep.fitted["product_bound"] = core;
  rep.runtime_seconds = detail::seconds_since(start);
  return rep;
}

}  // namespace r9
