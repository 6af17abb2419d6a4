#pragma once

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nndist/io.hpp"
#include "nndist/nndist.hpp"

namespace nndist::cli {

using io::json;

/// Everything a subcommand reads from the command line. Flags that were given
/// override the matching config field; the rest stay unset.
struct Flags {
  std::string config, out, mgf_out, x, y, csv, kind, grid, mode, construction, activation, norm,
      estimator;
  std::uint64_t seed = 0;
  std::vector<std::size_t> n;
  std::size_t m = 0, h = 0, depth = 0, width = 0, trials = 0, reps = 0, restarts = 0, steps = 0,
              samples = 0;
  double gamma = 0.0, gamma_b = 0.0, delta = 0.0, slack = 0.0;
  std::vector<double> radii, epsilons;
  bool json = false, dump_witness = false;
  // the same flag name is registered once per subcommand
  std::multimap<std::string, CLI::Option*> given;

  bool has(const std::string& name) const {
    auto [lo, hi] = given.equal_range(name);
    for (auto it = lo; it != hi; ++it)
      if (it->second->count() > 0) return true;
    return false;
  }
};

/// Human-readable number for summaries; CSV output uses io::format_double.
inline std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

/// "64:2048" doubles from 64 up to 2048; otherwise a comma-separated list.
inline std::vector<std::size_t> parse_grid(const std::string& text) {
  std::vector<std::size_t> grid;
  auto to_size = [&](const std::string& s) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != s.size()) throw ValidationError("bad sample size '" + s + "' in grid");
    return static_cast<std::size_t>(v);
  };
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::size_t lo = to_size(text.substr(0, colon));
    const std::size_t hi = to_size(text.substr(colon + 1));
    if (lo < 1 || hi < lo) throw ValidationError("grid range must satisfy 1 <= lo <= hi");
    for (std::size_t n = lo; n <= hi; n *= 2) grid.push_back(n);
    return grid;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) grid.push_back(to_size(item));
  return grid;
}

namespace detail {

inline std::size_t get_size(const json& cfg, const char* key, std::size_t fallback) {
  return cfg.contains(key) ? io::detail::count(cfg[key], key) : fallback;
}

inline double get_double(const json& cfg, const char* key, double fallback) {
  return cfg.contains(key) ? io::detail::number(cfg[key], key) : fallback;
}

inline std::string get_string(const json& cfg, const char* key, const std::string& fallback) {
  if (!cfg.contains(key)) return fallback;
  if (!cfg[key].is_string()) throw SchemaError(std::string(key) + " must be a string");
  return cfg[key].get<std::string>();
}

inline std::vector<std::size_t> get_sizes(const json& cfg, const char* key,
                                          std::vector<std::size_t> fallback) {
  if (!cfg.contains(key)) return fallback;
  const auto& v = cfg[key];
  if (v.is_string()) return parse_grid(v.get<std::string>());
  if (!v.is_array()) return {io::detail::count(v, key)};
  std::vector<std::size_t> out;
  for (const auto& e : v) out.push_back(io::detail::count(e, key));
  return out;
}

inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return io::config_hash(json(ss.str()));
}

/// ReLU-family layers without a window get q(1) = M(1) gamma in the first
/// layer, the choice under which the lower bound specializes cleanly.
inline std::vector<ActivationProfile> lower_bound_profiles(std::vector<ActivationProfile> acts,
                                                           const ConstraintSet& cs, double gamma) {
  if (!acts.empty() && std::isinf(acts[0].q))
    acts[0] = activation_profile(acts[0].kind, cs.radii.front() * gamma,
                                 acts[0].kind == ActivationKind::leaky_relu ? acts[0].slope : 0.01);
  return acts;
}

}  // namespace detail

/// Config after flags and defaults are folded in. This is what gets hashed,
/// so two runs with the same effective settings share a hash.
struct Resolved {
  json cfg;
  NetworkSpec spec;
  ConstraintSet cs;
  AscentConfig ascent;
  QuadratureConfig quad;
  std::string hash;
  std::uint64_t seed = 0;
};

inline json merge_flags(const std::string& command, const Flags& f) {
  json cfg = f.config.empty() ? json::object() : io::read_json_file(f.config);
  if (!cfg.is_object()) throw SchemaError("config must be a JSON object");
  cfg["command"] = command;

  if (f.has("--n")) cfg["n"] = f.n.size() == 1 ? json(f.n.front()) : json(f.n);
  if (f.has("--m")) cfg["m"] = f.m;
  if (f.has("--gamma")) cfg["gamma"] = f.gamma;
  if (f.has("--gamma-b")) cfg["gamma_b"] = f.gamma_b;
  if (f.has("--delta")) cfg["delta"] = f.delta;
  if (f.has("--trials")) cfg["trials"] = f.trials;
  if (f.has("--reps")) cfg["reps"] = f.reps;
  if (f.has("--samples")) cfg["samples"] = f.samples;
  if (f.has("--slack")) cfg["slack"] = f.slack;
  if (f.has("--mode")) cfg["mode"] = f.mode;
  if (f.has("--construction")) cfg["construction"] = f.construction;
  if (f.has("--estimator")) cfg["estimator"] = f.estimator;
  if (f.has("--grid")) cfg["grid"] = parse_grid(f.grid);
  if (f.has("--epsilons")) cfg["epsilons"] = f.epsilons;
  if (f.has("--x")) cfg["x"] = {{"path", f.x}, {"digest", detail::file_digest(f.x)}};
  if (f.has("--y")) cfg["y"] = {{"path", f.y}, {"digest", detail::file_digest(f.y)}};

  const bool network_flags =
      f.has("--h") || f.has("--depth") || f.has("--width") || f.has("--activation");
  if (!cfg.contains("network")) {
    std::size_t h = 2;
    if (cfg.contains("mu") && cfg["mu"].is_object() && cfg["mu"].contains("mean") &&
        cfg["mu"]["mean"].is_array())
      h = cfg["mu"]["mean"].size();
    cfg["network"] = {{"h", h}, {"d", 2}, {"width", io::kDefaultWidth}, {"activations", "relu"}};
  } else if (network_flags && !cfg["network"].is_object()) {
    throw SchemaError("network must be a JSON object");
  }
  auto& net = cfg["network"];
  if (f.has("--h")) net["h"] = f.h;
  if (f.has("--depth")) {
    net["d"] = f.depth;
    // per-layer lists no longer line up with the new depth
    if (net.contains("widths")) {
      const std::size_t w = net["widths"].empty() ? io::kDefaultWidth : net["widths"][0].get<std::size_t>();
      net.erase("widths");
      if (!net.contains("width")) net["width"] = w;
    }
    if (net.contains("activations") && net["activations"].is_array() && !net["activations"].empty())
      net["activations"] = json(net["activations"][0]);
  }
  if (f.has("--width")) {
    net.erase("widths");
    net["width"] = f.width;
  }
  if (f.has("--activation")) net["activations"] = f.activation;

  if (f.has("--restarts")) cfg["ascent"]["restarts"] = f.restarts;
  if (f.has("--steps")) cfg["ascent"]["steps"] = f.steps;

  const std::size_t depth = io::detail::count(io::detail::require(net, "d", "network"), "network d");
  if (!cfg.contains("constraints"))
    cfg["constraints"] = {{"kind", "frobenius"}, {"radii", std::vector<double>(depth, 1.0)}};
  auto& cons = cfg["constraints"];
  if (f.has("--norm")) cons["kind"] = f.norm;
  if (f.has("--radii")) cons["radii"] = f.radii;
  else if (f.has("--depth") && cons.contains("radii") && cons["radii"].is_array() &&
           cons["radii"].size() != depth && !cons["radii"].empty())
    cons["radii"] = std::vector<double>(depth, cons["radii"][0].get<double>());
  if (cons.contains("radii") && cons["radii"].is_array() && cons["radii"].size() == 1 && depth > 1)
    cons["radii"] = std::vector<double>(depth, io::detail::number(cons["radii"][0], "radius"));
  return cfg;
}

inline Resolved resolve(const std::string& command, const Flags& f) {
  Resolved r;
  r.cfg = merge_flags(command, f);
  r.seed = f.has("--seed") || !r.cfg.contains("seed") ? f.seed : r.cfg["seed"].get<std::uint64_t>();
  r.spec = io::network_spec_from_json(r.cfg["network"]);
  r.cs = io::constraints_from_json(r.cfg["constraints"]);
  r.cs.validate(r.spec.depth);
  r.ascent = r.cfg.contains("ascent") ? io::ascent_from_json(r.cfg["ascent"]) : AscentConfig{};
  r.quad = r.cfg.contains("quadrature") ? io::quadrature_from_json(r.cfg["quadrature"])
                                        : QuadratureConfig{};
  r.cfg["seed"] = r.seed;
  return r;
}

inline void finalize_hash(Resolved& r) { r.hash = io::config_hash(r.cfg); }

/// The distribution under `key`, or N(0, I_h) with gamma 1 when absent.
inline DistributionSpec distribution_or_default(Resolved& r, const char* key) {
  if (!r.cfg.contains(key))
    r.cfg[key] = io::to_json(
        DistributionSpec::gaussian(Vector::Zero(static_cast<Eigen::Index>(r.spec.input_dim)), 1.0, 1.0));
  return io::distribution_from_json(r.cfg[key]);
}

inline void emit(const io::CsvTable& table, const Resolved& r, const Flags& f) {
  if (f.out.empty()) return;
  table.write_file(f.out, r.hash, r.seed);
}

// ---- estimate ---------------------------------------------------------------

inline int cmd_estimate(const Flags& f, std::ostream& out) {
  Resolved r = resolve("estimate", f);
  SampleSet x, y;
  const bool from_files = r.cfg.contains("x") || r.cfg.contains("y");
  if (from_files) {
    if (!r.cfg.contains("x") || !r.cfg.contains("y"))
      throw ValidationError("estimate needs both --x and --y sample files");
    x = io::read_samples_file(r.cfg["x"]["path"].get<std::string>());
    y = io::read_samples_file(r.cfg["y"]["path"].get<std::string>());
  } else {
    const auto mu = distribution_or_default(r, "mu");
    if (!r.cfg.contains("nu")) r.cfg["nu"] = r.cfg["mu"];
    const auto nu = io::distribution_from_json(r.cfg["nu"]);
    const std::size_t n = detail::get_size(r.cfg, "n", 100);
    const std::size_t m = detail::get_size(r.cfg, "m", n);
    r.cfg["n"] = n;
    r.cfg["m"] = m;
    x = sample(mu, n, derive_seed(r.seed, 0));
    y = sample(nu, m, derive_seed(r.seed, 1));
  }
  const std::string method = detail::get_string(r.cfg, "estimator", "ascent");
  r.cfg["estimator"] = method;
  finalize_hash(r);

  io::CsvTable table({"restart", "sign", "value"});
  if (method == "brute_force") {
    if (!brute_force_supported(r.spec))
      throw ValidationError("brute_force estimator needs a depth-2 homogeneous network with h <= 3");
    const auto b = brute_force_nnd(x, y, r.spec, r.cs);
    json j = {{"value", b.value}, {"grid_error", b.grid_error}, {"exact", b.exact}};
    if (f.dump_witness) j["witness"] = io::to_json(b.witness);
    out << j.dump(2) << '\n';
    table.add({0LL, 1LL, b.value});
  } else if (method == "ascent") {
    AscentConfig c = r.ascent;
    c.seed = derive_seed(r.seed, 2);
    const auto e = estimate_nnd(x, y, r.spec, r.cs, c);
    out << io::to_json(e, f.dump_witness).dump(2) << '\n';
    for (const auto& run : e.runs)
      table.add({static_cast<long long>(run.restart), static_cast<long long>(run.sign), run.value});
  } else {
    throw ValidationError("unknown estimator '" + method + "' (ascent, brute_force)");
  }
  table.sort_by(2);
  emit(table, r, f);
  return 0;
}

// ---- bounds -----------------------------------------------------------------

inline std::vector<BoundReport> all_bounds(const Resolved& r, double gamma, double gamma_b,
                                           std::size_t n, std::size_t m, double delta) {
  const auto& acts = r.spec.activations;
  const double h = static_cast<double>(r.spec.input_dim);
  const auto lower_acts = detail::lower_bound_profiles(acts, r.cs, gamma);
  std::vector<BoundReport> reps;
  reps.push_back(lower_bound_unbounded(gamma, n, m, r.cs, lower_acts));
  reps.push_back(lower_bound_bounded(gamma_b, n, m, r.cs, acts, BoundedLowerVariant::input_sign));
  reps.push_back(
      lower_bound_bounded(gamma_b, n, m, r.cs, acts, BoundedLowerVariant::all_radii_negated));
  reps.push_back(upper_bound_unbounded(gamma, n, m, h, r.cs, acts, delta));
  reps.push_back(upper_bound_bounded(gamma_b, n, m, h, r.cs, acts, delta));
  auto rn = rademacher_bound(gamma, n, h, r.cs, acts);
  auto rm = rademacher_bound(gamma, m, h, r.cs, acts);
  reps.push_back(combined_rademacher_bound(rn.total, rm.total, gamma, h, n, m, r.cs, acts, delta));
  rn.name += "_n";
  rm.name += "_m";
  reps.push_back(rn);
  reps.push_back(rm);
  return reps;
}

inline int cmd_bounds(const Flags& f, std::ostream& out) {
  Resolved r = resolve("bounds", f);
  const double gamma = detail::get_double(r.cfg, "gamma", 1.0);
  const double gamma_b = detail::get_double(r.cfg, "gamma_b", gamma);
  const std::size_t n = detail::get_size(r.cfg, "n", 100);
  const std::size_t m = detail::get_size(r.cfg, "m", n);
  const double delta = detail::get_double(r.cfg, "delta", 0.05);
  r.cfg["gamma"] = gamma;
  r.cfg["gamma_b"] = gamma_b;
  r.cfg["n"] = n;
  r.cfg["m"] = m;
  r.cfg["delta"] = delta;
  finalize_hash(r);

  auto reps = all_bounds(r, gamma, gamma_b, n, m, delta);
  std::sort(reps.begin(), reps.end(), [](const auto& a, const auto& b) { return a.name < b.name; });

  out << std::left << std::setw(28) << "name" << std::setw(7) << "side" << std::setw(18)
      << "constant" << std::setw(18) << "rate_at_nm" << std::setw(18) << "total"
      << "preconditions" << '\n';
  io::CsvTable table({"name", "side", "constant", "rate_at_nm", "total", "preconditions_ok"});
  json arr = json::array();
  for (const auto& b : reps) {
    out << std::left << std::setw(28) << b.name << std::setw(7) << to_string(b.side)
        << std::setw(18) << num(b.constant_factor) << std::setw(18) << num(b.rate_factor)
        << std::setw(18) << num(b.total) << (b.preconditions_ok() ? "ok" : "VIOLATED") << '\n';
    for (const auto& p : b.preconditions)
      if (!p.satisfied) out << "    violated: " << p.description << '\n';
    table.add({b.name, std::string(to_string(b.side)), b.constant_factor, b.rate_factor, b.total,
               std::string(b.preconditions_ok() ? "true" : "false")});
    arr.push_back(io::to_json(b));
  }
  const auto cf = comparison_factors(r.spec.depth, static_cast<double>(r.spec.input_dim),
                                     r.spec.widths.front());
  out << "rademacher scale factors: this_work=" << num(cf.this_work_frobenius)
      << " worst_case_input=" << num(cf.prior_worstcase)
      << " one_hidden_gaussian=" << num(cf.prior_onehidden) << '\n';
  if (f.json) out << arr.dump(2) << '\n';
  table.sort_by(1);
  emit(table, r, f);
  return 0;
}

// ---- lecam ------------------------------------------------------------------

inline double finite_expectation(const DistributionSpec& d, const NetworkSpec& spec,
                                 const NetworkParams& p) {
  const auto& fs = d.as_finite();
  const Eigen::RowVectorXd v = forward_batch(spec, p, fs.points.transpose());
  return v.dot(fs.probs.transpose());
}

inline int cmd_lecam(const Flags& f, std::ostream& out) {
  Resolved r = resolve("lecam", f);
  const double gamma = detail::get_double(r.cfg, "gamma", 1.0);
  const std::size_t n = detail::get_size(r.cfg, "n", 1024);
  const std::size_t m = detail::get_size(r.cfg, "m", n);
  const std::size_t samples = detail::get_size(r.cfg, "samples", 10000);
  const double slack = detail::get_double(r.cfg, "slack", 0.02);
  const std::string construction = detail::get_string(r.cfg, "construction", "gaussian");
  r.cfg["gamma"] = gamma;
  r.cfg["n"] = n;
  r.cfg["m"] = m;
  r.cfg["samples"] = samples;
  r.cfg["slack"] = slack;
  r.cfg["construction"] = construction;
  finalize_hash(r);
  if (samples < 1) throw ValidationError("samples must be >= 1");
  if (!(slack >= 0.0)) throw ValidationError("slack must be non-negative");

  NetworkSpec spec = r.spec;
  spec.activations = detail::lower_bound_profiles(spec.activations, r.cs, gamma);
  const std::size_t h = spec.input_dim;

  LeCamQuadruple q;
  double gap = 0.0, lower = 0.0;
  bool lower_ok = true;
  NetworkParams witness;
  io::CsvTable table({"quantity", "value"});
  if (construction == "gaussian") {
    q = lecam_gaussian_quadruple(gamma, n, m, h);
    const auto chain = lecam_witness_chain(q, spec, r.cs);
    gap = std::abs(witness_gap_exact(chain, r.quad));
    witness = build_witness(spec, q.shifted, q.base, r.cs);
    const auto rep = lower_bound_unbounded(gamma, n, m, r.cs, spec.activations);
    lower = rep.total;
    lower_ok = rep.preconditions_ok();
    out << "construction: gaussian" << (q.mirrored ? " (mirrored, n > m)" : "") << '\n';
    out << "  |u1|^2 = " << num(q.shifted.squaredNorm()) << "  |u2|^2 = " << num(q.base.squaredNorm())
        << "  u1.u2 = " << num(q.shifted.dot(q.base)) << "  tau^2 = " << num(q.tau2) << '\n';
    table.add({std::string("u1_norm2"), q.shifted.squaredNorm()});
    table.add({std::string("u2_norm2"), q.base.squaredNorm()});
    table.add({std::string("u1_dot_u2"), q.shifted.dot(q.base)});
    table.add({std::string("tau2"), q.tau2});
  } else if (construction == "binary") {
    if (n != m) throw ValidationError("binary construction uses n = m");
    q = lecam_binary_quadruple(gamma, n, h);
    witness = build_witness_binary(spec, q.x1, r.cs);
    gap = std::abs(finite_expectation(q.mu1, spec, witness) - finite_expectation(q.nu1, spec, witness));
    const auto rep = lower_bound_bounded(gamma, n, m, r.cs, spec.activations);
    lower = rep.total;
    lower_ok = rep.preconditions_ok();
    out << "construction: binary\n  |x1| = " << num(q.x1.norm()) << "  eps = " << num(q.eps) << '\n';
    table.add({std::string("eps"), q.eps});
  } else {
    throw ValidationError("unknown construction '" + construction + "' (gaussian, binary)");
  }
  const double kl = lecam_total_kl(q);

  const SampleSet xs = sample(q.mu1, samples, derive_seed(r.seed, 0));
  const SampleSet ys = sample(q.nu1, samples, derive_seed(r.seed, 1));
  double estimate;
  std::string how;
  if (brute_force_supported(spec)) {
    estimate = brute_force_nnd(xs, ys, spec, r.cs).value;
    how = "brute_force";
  } else {
    AscentConfig c = r.ascent;
    c.seed = derive_seed(r.seed, 2);
    estimate = estimate_nnd(xs, ys, spec, r.cs, c, witness).value;
    how = "ascent";
  }
  const bool pass = lower <= gap + 1e-12 && gap <= estimate + slack;

  out << "KL=" << num(kl) << '\n';
  out << "lower_bound=" << num(lower) << (lower_ok ? "" : " (precondition violated)") << '\n';
  out << "witness_gap=" << num(gap) << '\n';
  out << "estimate=" << num(estimate) << " (" << how << ", " << samples
      << " samples per side, slack " << num(slack) << ")\n";
  out << "lower ≤ witness-gap ≤ estimate: " << (pass ? "PASS" : "FAIL") << '\n';

  table.add({std::string("kl"), kl});
  table.add({std::string("lower_bound"), lower});
  table.add({std::string("witness_gap"), gap});
  table.add({std::string("estimate"), estimate});
  table.add({std::string("ordering_pass"), pass ? 1.0 : 0.0});
  table.sort_by(1);
  emit(table, r, f);
  return 0;
}

// ---- rademacher -------------------------------------------------------------

inline int cmd_rademacher(const Flags& f, std::ostream& out) {
  Resolved r = resolve("rademacher", f);
  const auto mu = distribution_or_default(r, "mu");
  auto ns = detail::get_sizes(r.cfg, "n", {10, 100});
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  const std::size_t trials = detail::get_size(r.cfg, "trials", 200);
  r.cfg["n"] = ns;
  r.cfg["trials"] = trials;
  finalize_hash(r);
  if (mu.dim() != r.spec.input_dim) throw ShapeError("distribution dimension does not match network");

  io::CsvTable table({"d", "h", "n", "trials", "mean", "std_error", "bound"});
  const double h = static_cast<double>(r.spec.input_dim);
  for (std::size_t n : ns) {
    const auto mc = mc_rademacher(mu, r.spec, r.cs, n, trials, r.ascent, derive_seed(r.seed, n));
    const double bound = rademacher_bound(mu.gamma, n, h, r.cs, r.spec.activations).total;
    const bool ok = mc.mean <= bound + 3.0 * mc.std_error;
    out << "n=" << n << " mean=" << num(mc.mean) << " se=" << num(mc.std_error)
        << " bound=" << num(bound) << " " << (ok ? "PASS" : "FAIL") << '\n';
    table.add({static_cast<long long>(r.spec.depth), static_cast<long long>(r.spec.input_dim),
               static_cast<long long>(n), static_cast<long long>(trials), mc.mean, mc.std_error,
               bound});
  }
  table.sort_by(3);
  emit(table, r, f);
  return 0;
}

// ---- concentration ----------------------------------------------------------

inline int cmd_concentration(const Flags& f, std::ostream& out) {
  Resolved r = resolve("concentration", f);
  const auto mu = distribution_or_default(r, "mu");
  if (!r.cfg.contains("nu")) r.cfg["nu"] = r.cfg["mu"];
  const auto nu = io::distribution_from_json(r.cfg["nu"]);
  const std::size_t n = detail::get_size(r.cfg, "n", 100);
  const std::size_t m = detail::get_size(r.cfg, "m", n);
  const std::size_t trials = detail::get_size(r.cfg, "trials", 2000);
  const std::string mode_name = detail::get_string(r.cfg, "mode", "brute_force");
  TailMode mode;
  if (mode_name == "brute_force") mode = TailMode::brute_force;
  else if (mode_name == "ascent") mode = TailMode::ascent;
  else throw ValidationError("unknown tail mode '" + mode_name + "' (brute_force, ascent)");
  const double gamma = std::max(mu.gamma, nu.gamma);
  const double lip = r.cs.radius_product() * r.spec.lipschitz_product();
  std::vector<double> eps;
  if (r.cfg.contains("epsilons")) {
    eps = io::detail::numbers(r.cfg["epsilons"], "epsilons");
  } else {
    // the bound is exp(-(eps/scale)^2); cover scale/10 .. 2 scale
    const double nn = static_cast<double>(n), mm = static_cast<double>(m);
    const double scale = std::sqrt(8.0 * static_cast<double>(r.spec.input_dim) * (1.0 / nn + 1.0 / mm)) *
                         gamma * lip;
    for (int k = 1; k <= 20; ++k) eps.push_back(scale * k / 10.0);
  }
  std::sort(eps.begin(), eps.end());

  // mgf settings
  json mg = r.cfg.contains("mgf") ? r.cfg["mgf"] : json::object();
  const auto hh = static_cast<Eigen::Index>(r.spec.input_dim);
  const Vector u = mg.contains("u") ? io::vector_from_json(mg["u"], "mgf u") : Vector::Zero(hh);
  const double tau = mg.contains("tau") ? io::detail::number(mg["tau"], "mgf tau") : 1.0;
  const Matrix a = mg.contains("A") ? io::matrix_from_json(mg["A"], "mgf A")
                                    : Matrix::Identity(u.size(), u.size());
  const std::size_t mgf_trials = detail::get_size(mg, "trials", 20000);
  std::vector<double> etas;
  if (mg.contains("etas")) {
    etas = io::detail::numbers(mg["etas"], "mgf etas");
  } else {
    if (a.cols() != u.size()) throw ShapeError("A must have one column per coordinate of u");
    const double snorm = spectral_norm_psd(a.transpose() * a);
    const double top = snorm > 0.0 ? 0.9 / (2.0 * tau * tau * snorm) : 1.0;
    for (int k = 0; k <= 9; ++k) etas.push_back(top * k / 9.0);
  }
  std::sort(etas.begin(), etas.end());
  mg["u"] = io::to_json(u);
  mg["tau"] = tau;
  mg["A"] = io::to_json(a);
  mg["trials"] = mgf_trials;
  mg["etas"] = etas;
  r.cfg["mgf"] = mg;
  r.cfg["n"] = n;
  r.cfg["m"] = m;
  r.cfg["trials"] = trials;
  r.cfg["mode"] = mode_name;
  r.cfg["epsilons"] = eps;
  finalize_hash(r);

  const auto tc = concentration_tailcheck(mu, nu, r.spec, r.cs, n, m, trials, eps, mode,
                                          derive_seed(r.seed, 0), r.ascent);
  for (const auto& w : tc.warnings) out << "warning: " << w << '\n';
  out << "mean statistic " << num(tc.mean_statistic) << ", epsilon_max " << num(tc.epsilon_max)
      << ", lipschitz " << num(tc.lipschitz) << '\n';
  io::CsvTable tail({"epsilon", "valid", "empirical_freq", "bound"});
  bool tail_ok = true;
  for (std::size_t i = 0; i < tc.epsilon.size(); ++i) {
    const double allowance = tc.bound[i] + 3.0 * std::sqrt(tc.bound[i] / static_cast<double>(trials));
    if (tc.valid[i] && tc.empirical_freq[i] > allowance) tail_ok = false;
    tail.add({tc.epsilon[i], static_cast<long long>(tc.valid[i] ? 1 : 0), tc.empirical_freq[i],
              tc.bound[i]});
  }
  out << "tail: empirical <= bound + 3 sqrt(bound/trials) at valid epsilons: "
      << (tail_ok ? "PASS" : "FAIL") << '\n';

  io::CsvTable mgf({"eta", "empirical_mgf", "bound"});
  bool mgf_ok = true;
  const std::uint64_t mgf_seed = derive_seed(r.seed, 1);
  for (std::size_t k = 0; k < etas.size(); ++k) {
    const auto mc = mgf_check(u, tau, a, etas[k], mgf_trials, derive_seed(mgf_seed, k));
    if (mc.empirical_mgf > 1.05 * mc.bound) mgf_ok = false;
    mgf.add({etas[k], mc.empirical_mgf, mc.bound});
  }
  out << "mgf: empirical <= 1.05 bound across " << etas.size() << " etas: "
      << (mgf_ok ? "PASS" : "FAIL") << '\n';

  tail.sort_by(1);
  mgf.sort_by(1);
  emit(tail, r, f);
  if (!f.mgf_out.empty()) {
    mgf.write_file(f.mgf_out, r.hash, r.seed);
  }
  return 0;
}

// ---- rate -------------------------------------------------------------------

inline int cmd_rate(const Flags& f, std::ostream& out) {
  Resolved r = resolve("rate", f);
  const auto mu = distribution_or_default(r, "mu");
  const auto grid = detail::get_sizes(r.cfg, "grid", parse_grid("64:2048"));
  const std::size_t reps = detail::get_size(r.cfg, "reps", 20);
  const std::string method = detail::get_string(r.cfg, "estimator", "ascent");
  r.cfg["grid"] = grid;
  r.cfg["reps"] = reps;
  r.cfg["estimator"] = method;
  finalize_hash(r);

  DistanceEstimator est;
  if (method == "brute_force") {
    if (!brute_force_supported(r.spec))
      throw ValidationError("brute_force estimator needs a depth-2 homogeneous network with h <= 3");
    est = [&](const SampleSet& x, const SampleSet& y) { return brute_force_nnd(x, y, r.spec, r.cs).value; };
  } else if (method != "ascent") {
    throw ValidationError("unknown estimator '" + method + "' (ascent, brute_force)");
  }
  const auto res = rate_experiment(mu, r.spec, r.cs, grid, reps, r.ascent, r.seed, est);
  io::CsvTable table({"n", "rep_count", "mean_error", "std_error"});
  for (const auto& row : res.rows) {
    out << "n=" << row.n << " mean_error=" << num(row.mean_error) << " se=" << num(row.std_error) << '\n';
    table.add({static_cast<long long>(row.n), static_cast<long long>(row.reps), row.mean_error,
               row.std_error});
  }
  out << "slope=" << num(res.slope) << " intercept=" << num(res.intercept) << " (reference -0.5)\n";
  table.sort_by(1);
  emit(table, r, f);
  return 0;
}

// ---- plot -------------------------------------------------------------------

inline const std::map<std::string, std::vector<std::string>>& plot_schemas() {
  static const std::map<std::string, std::vector<std::string>> s = {
      {"rate_loglog", {"n", "rep_count", "mean_error", "std_error"}},
      {"tail_overlay", {"epsilon", "valid", "empirical_freq", "bound"}},
      {"bound_compare", {"name", "side", "constant", "rate_at_nm", "total", "preconditions_ok"}},
  };
  return s;
}

/// Python/matplotlib source that draws `kind` from `csv_path`. The image is
/// written next to the CSV with a .png suffix.
inline std::string plot_script(const std::string& csv_path, const std::string& kind) {
  const auto& schemas = plot_schemas();
  auto it = schemas.find(kind);
  if (it == schemas.end())
    throw ValidationError("unknown plot kind '" + kind + "' (rate_loglog, tail_overlay, bound_compare)");
  const auto data = io::read_csv_file(csv_path);
  for (const auto& col : it->second) data.column(col);

  std::ostringstream s;
  s << "#!/usr/bin/env python3\n"
    << "import csv\nimport math\nimport os\n\n"
    << "import matplotlib\nmatplotlib.use(\"Agg\")\nimport matplotlib.pyplot as plt\n\n"
    << "CSV = " << json(csv_path).dump() << "\n"
    << "OUT = os.path.splitext(CSV)[0] + \".png\"\n\n"
    << "with open(CSV) as fh:\n"
    << "    rows = list(csv.DictReader(line for line in fh if not line.startswith(\"#\")))\n\n";
  if (kind == "rate_loglog") {
    s << "n = [float(r[\"n\"]) for r in rows]\n"
      << "err = [float(r[\"mean_error\"]) for r in rows]\n"
      << "se = [float(r[\"std_error\"]) for r in rows]\n"
      << "lx = [math.log(v) for v in n]\n"
      << "ly = [math.log(v) for v in err]\n"
      << "mx, my = sum(lx) / len(lx), sum(ly) / len(ly)\n"
      << "slope = sum((a - mx) * (b - my) for a, b in zip(lx, ly)) / sum((a - mx) ** 2 for a in lx)\n"
      << "icpt = my - slope * mx\n\n"
      << "fig, ax = plt.subplots(figsize=(5, 4))\n"
      << "ax.errorbar(n, err, yerr=se, fmt=\"o\", label=\"mean error\")\n"
      << "ax.plot(n, [math.exp(icpt) * v ** slope for v in n], \"-\", label=f\"fit slope {slope:.3f}\")\n"
      << "ax.plot(n, [err[0] * (v / n[0]) ** -0.5 for v in n], \"--\", label=\"slope -1/2\")\n"
      << "ax.set_xscale(\"log\")\nax.set_yscale(\"log\")\n"
      << "ax.set_xlabel(\"n\")\nax.set_ylabel(\"estimation error\")\n";
  } else if (kind == "tail_overlay") {
    s << "eps = [float(r[\"epsilon\"]) for r in rows]\n"
      << "freq = [float(r[\"empirical_freq\"]) for r in rows]\n"
      << "bound = [float(r[\"bound\"]) for r in rows]\n"
      << "valid = [r[\"valid\"] == \"1\" for r in rows]\n\n"
      << "fig, ax = plt.subplots(figsize=(5, 4))\n"
      << "ax.plot(eps, bound, \"-\", label=\"tail bound\")\n"
      << "ax.plot([e for e, v in zip(eps, valid) if v], [f for f, v in zip(freq, valid) if v], \"o\", "
         "label=\"empirical\")\n"
      << "ax.plot([e for e, v in zip(eps, valid) if not v], [f for f, v in zip(freq, valid) if not v], "
         "\"x\", color=\"grey\", label=\"outside valid range\")\n"
      << "ax.set_yscale(\"symlog\", linthresh=1e-4)\n"
      << "ax.set_xlabel(\"epsilon\")\nax.set_ylabel(\"P(F - EF >= epsilon)\")\n";
  } else {
    s << "names = [r[\"name\"] for r in rows]\n"
      << "total = [float(r[\"total\"]) for r in rows]\n"
      << "colors = [\"tab:blue\" if r[\"side\"] == \"lower\" else \"tab:red\" for r in rows]\n\n"
      << "fig, ax = plt.subplots(figsize=(7, 4))\n"
      << "ax.barh(names, total, color=colors)\n"
      << "ax.set_xscale(\"log\")\n"
      << "ax.set_xlabel(\"bound at (n, m)\")\n";
  }
  s << "ax.legend() if ax.get_legend_handles_labels()[0] else None\n"
    << "fig.tight_layout()\nfig.savefig(OUT, dpi=150)\nprint(OUT)\n";
  return s.str();
}

inline int cmd_plot(const Flags& f, std::ostream& out) {
  if (f.csv.empty()) throw ValidationError("plot needs --csv");
  if (f.kind.empty()) throw ValidationError("plot needs --kind");
  const std::string script = plot_script(f.csv, f.kind);
  if (f.out.empty()) {
    out << script;
  } else {
    std::ofstream os(f.out, std::ios::binary);
    if (!os) throw ValidationError("cannot write '" + f.out + "'");
    os << script;
  }
  return 0;
}

// ---- entry point ------------------------------------------------------------

inline void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON experiment config")->check(CLI::ExistingFile);
  f.given.emplace("--seed", sub->add_option("--seed", f.seed, "master seed (overrides the config)"));
  sub->add_option("--out", f.out, "CSV output path");
}

inline void add_network(CLI::App* sub, Flags& f) {
  f.given.emplace("--h", sub->add_option("--h", f.h, "input dimension"));
  f.given.emplace("--depth", sub->add_option("--depth", f.depth, "network depth d"));
  f.given.emplace("--width", sub->add_option("--width", f.width, "hidden width"));
  f.given.emplace("--activation", sub->add_option("--activation", f.activation, "activation kind"));
  f.given.emplace("--norm", sub->add_option("--norm", f.norm, "frobenius or one_inf"));
  f.given.emplace("--radii", sub->add_option("--radii", f.radii, "per-layer radii")->delimiter(','));
}

inline void add_ascent(CLI::App* sub, Flags& f) {
  f.given.emplace("--restarts", sub->add_option("--restarts", f.restarts, "ascent restarts"));
  f.given.emplace("--steps", sub->add_option("--steps", f.steps, "ascent steps per run"));
}

/// Runs one subcommand. Exit codes: 0 success, 1 invalid input, 2 numerical failure.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app{"neural net distance estimation and bound verification", "nndist"};
  app.set_help_flag("--help", "print help");  // -h would clash with --h
  app.require_subcommand(1, 1);

  auto* est = app.add_subcommand("estimate", "estimate the distance between two samples");
  add_common(est, f);
  add_network(est, f);
  add_ascent(est, f);
  f.given.emplace("--n", est->add_option("--n", f.n, "samples drawn from mu")->expected(1));
  f.given.emplace("--m", est->add_option("--m", f.m, "samples drawn from nu"));
  f.given.emplace("--x", est->add_option("--x", f.x, "CSV sample file for the first measure")->check(CLI::ExistingFile));
  f.given.emplace("--y", est->add_option("--y", f.y, "CSV sample file for the second measure")->check(CLI::ExistingFile));
  f.given.emplace("--estimator", est->add_option("--estimator", f.estimator, "ascent or brute_force"));
  est->add_flag("--dump-witness", f.dump_witness, "include the maximizing network in the JSON");

  auto* bnd = app.add_subcommand("bounds", "evaluate every bound for a config");
  add_common(bnd, f);
  add_network(bnd, f);
  f.given.emplace("--n", bnd->add_option("--n", f.n, "first sample size")->expected(1));
  f.given.emplace("--m", bnd->add_option("--m", f.m, "second sample size"));
  f.given.emplace("--gamma", bnd->add_option("--gamma", f.gamma, "sub-Gaussian class parameter"));
  f.given.emplace("--gamma-b", bnd->add_option("--gamma-b", f.gamma_b, "bounded-support radius"));
  f.given.emplace("--delta", bnd->add_option("--delta", f.delta, "failure probability"));
  bnd->add_flag("--json", f.json, "also print the reports as JSON");

  auto* lec = app.add_subcommand("lecam", "two-point construction, witness gap and ordering check");
  add_common(lec, f);
  add_network(lec, f);
  add_ascent(lec, f);
  f.given.emplace("--n", lec->add_option("--n", f.n, "first sample size")->expected(1));
  f.given.emplace("--m", lec->add_option("--m", f.m, "second sample size"));
  f.given.emplace("--gamma", lec->add_option("--gamma", f.gamma, "class parameter"));
  f.given.emplace("--samples", lec->add_option("--samples", f.samples, "draws per side for the estimate"));
  f.given.emplace("--slack", lec->add_option("--slack", f.slack, "sampling slack on the estimate"));
  f.given.emplace("--construction", lec->add_option("--construction", f.construction, "gaussian or binary"));

  auto* rad = app.add_subcommand("rademacher", "Monte Carlo Rademacher complexity against its bound");
  add_common(rad, f);
  add_network(rad, f);
  add_ascent(rad, f);
  f.given.emplace("--n", rad->add_option("--n", f.n, "sample sizes")->delimiter(','));
  f.given.emplace("--trials", rad->add_option("--trials", f.trials, "trials per sample size"));

  auto* con = app.add_subcommand("concentration", "tail frequencies and quadratic-form MGF checks");
  add_common(con, f);
  add_network(con, f);
  add_ascent(con, f);
  f.given.emplace("--n", con->add_option("--n", f.n, "first sample size")->expected(1));
  f.given.emplace("--m", con->add_option("--m", f.m, "second sample size"));
  f.given.emplace("--trials", con->add_option("--trials", f.trials, "tail trials"));
  f.given.emplace("--mode", con->add_option("--mode", f.mode, "brute_force or ascent"));
  f.given.emplace("--epsilons", con->add_option("--epsilons", f.epsilons, "epsilon grid")->delimiter(','));
  con->add_option("--mgf-out", f.mgf_out, "CSV output path for the MGF check");

  auto* rate = app.add_subcommand("rate", "estimation error against sample size");
  add_common(rate, f);
  add_network(rate, f);
  add_ascent(rate, f);
  f.given.emplace("--grid", rate->add_option("--grid", f.grid, "lo:hi (doubling) or a comma list"));
  f.given.emplace("--reps", rate->add_option("--reps", f.reps, "repetitions per sample size"));
  f.given.emplace("--estimator", rate->add_option("--estimator", f.estimator, "ascent or brute_force"));

  auto* plot = app.add_subcommand("plot", "write a matplotlib script for a result CSV");
  plot->add_option("--csv", f.csv, "input CSV")->required()->check(CLI::ExistingFile);
  plot->add_option("--kind", f.kind, "rate_loglog, tail_overlay or bound_compare")->required();
  plot->add_option("--out", f.out, "script path (stdout when omitted)");

  std::vector<const char*> argv{"nndist"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (est->parsed()) return cmd_estimate(f, out);
    if (bnd->parsed()) return cmd_bounds(f, out);
    if (lec->parsed()) return cmd_lecam(f, out);
    if (rad->parsed()) return cmd_rademacher(f, out);
    if (con->parsed()) return cmd_concentration(f, out);
    if (rate->parsed()) return cmd_rate(f, out);
    if (plot->parsed()) return cmd_plot(f, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed config: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace nndist::cli
