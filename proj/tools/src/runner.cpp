#include "cleave/runner.hpp"

#include "cleave/reduced.hpp"
#include "cleave/version.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace cleave::runner {

using nlohmann::json;

namespace {

// Checked access into a JSON object; errors carry the dotted field path.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!ok.count(it.key())) throw ConfigError(field(it.key()) + ": unknown key");
    }
  }

  bool has(const char* key) const { return j_.contains(key); }

  Node child(const char* key) const { return Node(j_.at(key), field(key)); }

  double number(const char* key, double fallback) const {
    if (!has(key)) return fallback;
    return number_at(j_.at(key), field(key));
  }

  std::optional<double> maybe_number(const char* key) const {
    if (!has(key)) return std::nullopt;
    return number_at(j_.at(key), field(key));
  }

  int integer(const char* key, int fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(field(key) + ": expected an integer");
    return v.get<int>();
  }

  std::uint64_t seed(const char* key) const {
    if (!has(key)) throw ConfigError(field(key) + ": required (runs must be seeded)");
    const json& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw ConfigError(field(key) + ": expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::string string(const char* key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(field(key) + ": expected a string");
    return v.get<std::string>();
  }

  bool boolean(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(field(key) + ": expected true or false");
    return v.get<bool>();
  }

  // A number or a non-empty list of numbers.
  std::vector<double> list(const char* key) const {
    const json& v = j_.at(key);
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array() || v.empty()) throw ConfigError(field(key) + ": expected a number or a non-empty list");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out.push_back(number_at(v[i], field(key) + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

  const json& raw(const char* key) const { return j_.at(key); }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  static double number_at(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(path + ": must be finite");
    return d;
  }

  const json& j_;
  std::string path_;
};

const char* cap_mode_name(CapConfig::Mode m) {
  switch (m) {
    case CapConfig::Mode::Auto: return "auto";
    case CapConfig::Mode::On: return "on";
    case CapConfig::Mode::Off: return "off";
  }
  return "auto";
}

json list_json(const std::vector<double>& v) { return json(v); }

}  // namespace

PotentialFamily PotentialConfig::build() const {
  if (family == "synthetic") return PotentialFamily::synthetic(alpha, alpha_prime, beta);
  if (family == "lennard_jones") return PotentialFamily::lennard_jones(beta);
  throw ConfigError("potential.family: expected \"synthetic\" or \"lennard_jones\"");
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  const Node root(j, "");
  root.allow({"lattice", "potential", "load", "chi", "lateral_cap", "fracture", "minimizer", "output"});

  if (!root.has("lattice")) throw ConfigError("lattice: required");
  const Node lat = root.child("lattice");
  lat.allow({"l", "eps", "phi", "psi"});
  c.l = lat.number("l", 2.0);
  if (!lat.has("eps")) throw ConfigError("lattice.eps: required");
  c.eps = lat.list("eps");
  c.phi = lat.has("phi") ? lat.list("phi") : std::vector<double>{0.0};
  c.psi = lat.maybe_number("psi");

  if (root.has("potential")) {
    const Node pot = root.child("potential");
    pot.allow({"family", "alpha", "alpha_prime", "beta"});
    c.potential.family = pot.string("family", "synthetic");
    c.potential.beta = pot.number("beta", 1.0);
    if (c.potential.family == "synthetic") {
      c.potential.alpha = pot.number("alpha", 4.0);
      c.potential.alpha_prime = pot.number("alpha_prime", 0.0);
    } else if (c.potential.family == "lennard_jones") {
      if (pot.has("alpha") || pot.has("alpha_prime")) {
        throw ConfigError("potential.alpha: fixed by beta for the lennard_jones family");
      }
      c.potential.alpha = 72.0 * c.potential.beta;
      c.potential.alpha_prime = -1512.0 * c.potential.beta;
    } else {
      throw ConfigError("potential.family: expected \"synthetic\" or \"lennard_jones\"");
    }
  }

  if (!root.has("load")) throw ConfigError("load: required");
  const Node load = root.child("load");
  load.allow({"a", "a_rel"});
  if (load.has("a") == load.has("a_rel")) throw ConfigError("load: give exactly one of a, a_rel");
  if (load.has("a")) c.a = load.list("a"); else c.a_rel = load.list("a_rel");

  if (root.has("chi")) {
    const Node chi = root.child("chi");
    chi.allow({"enabled", "kappa", "r_chi", "smoothing_width", "det_width"});
    c.chi.enabled = chi.boolean("enabled", false);
    c.chi.kappa = chi.maybe_number("kappa");
    c.chi.r_chi = chi.number("r_chi", 10.0);
    c.chi.smoothing_width = chi.number("smoothing_width", 1.0);
    c.chi.det_width = chi.number("det_width", 0.5);
  }

  if (root.has("lateral_cap")) {
    const Node cap = root.child("lateral_cap");
    cap.allow({"mode", "r0", "stiffness_factor"});
    const std::string mode = cap.string("mode", "auto");
    if (mode == "auto") c.cap.mode = CapConfig::Mode::Auto;
    else if (mode == "on") c.cap.mode = CapConfig::Mode::On;
    else if (mode == "off") c.cap.mode = CapConfig::Mode::Off;
    else throw ConfigError("lateral_cap.mode: expected \"auto\", \"on\" or \"off\"");
    c.cap.r0 = cap.number("r0", 1.5);
    c.cap.stiffness_factor = cap.number("stiffness_factor", 1e3);
  }

  if (root.has("fracture")) {
    const Node fr = root.child("fracture");
    fr.allow({"r_threshold", "eta_rel", "mu_rel", "band_constant", "exclusion_c"});
    c.fracture.r_threshold = fr.number("r_threshold", 0.0);
    c.fracture.eta_rel = fr.number("eta_rel", 0.25);
    c.fracture.mu_rel = fr.number("mu_rel", 0.1);
    c.fracture.band_constant = fr.number("band_constant", 5.0);
    c.fracture.exclusion_c = fr.number("exclusion_c", 2.0);
  }

  if (!root.has("minimizer")) throw ConfigError("minimizer.seed: required (runs must be seeded)");
  const Node mn = root.child("minimizer");
  mn.allow({"tol", "max_iter", "history", "n_random", "n_offsets", "noise", "seed"});
  c.minimizer.tol = mn.number("tol", 1e-8);
  c.minimizer.max_iter = mn.integer("max_iter", 20000);
  c.minimizer.history = mn.integer("history", 10);
  c.minimizer.n_random = mn.integer("n_random", 2);
  c.minimizer.n_offsets = mn.integer("n_offsets", 9);
  c.minimizer.noise = mn.number("noise", 0.05);
  c.minimizer.seed = mn.seed("seed");

  if (root.has("output")) {
    const Node out = root.child("output");
    out.allow({"dir"});
    c.output_dir = out.string("dir", "out");
  }
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  for (std::size_t i = 0; i < eps.size(); ++i) {
    for (std::size_t k = 0; k < phi.size(); ++k) {
      try {
        LatticeSpec{l, eps[i], phi[k]}.validate();
      } catch (const std::invalid_argument& e) {
        fail(e.what());
      }
    }
  }
  if (psi && !(*psi > 0.0)) fail("lattice.psi: must be positive");
  try {
    potential.build();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a[i] >= 0.0)) fail("load.a[" + std::to_string(i) + "]: must be non-negative");
  for (std::size_t i = 0; i < a_rel.size(); ++i)
    if (!(a_rel[i] >= 0.0)) fail("load.a_rel[" + std::to_string(i) + "]: must be non-negative");
  if (a.empty() == a_rel.empty()) fail("load: give exactly one of a, a_rel");
  if (chi.enabled) {
    ChiPenalty p = ChiPenalty::defaults(potential.beta);
    if (chi.kappa) p.kappa = *chi.kappa;
    p.r_chi = chi.r_chi;
    p.smoothing_width = chi.smoothing_width;
    p.det_width = chi.det_width;
    try {
      p.validate();
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }
  if (!(cap.r0 > 1.0)) fail("lateral_cap.r0: must exceed 1");
  if (!(cap.stiffness_factor > 0.0)) fail("lateral_cap.stiffness_factor: must be positive");
  if (!(fracture.r_threshold == 0.0 || fracture.r_threshold > 1.0)) {
    fail("fracture.r_threshold: must be 0 (derive) or exceed 1");
  }
  if (!(fracture.eta_rel > 0.0 && fracture.eta_rel < 1.0)) fail("fracture.eta_rel: must lie in (0, 1)");
  if (!(fracture.mu_rel > 0.0)) fail("fracture.mu_rel: must be positive");
  if (!(fracture.band_constant > 0.0)) fail("fracture.band_constant: must be positive");
  if (!(fracture.exclusion_c > 0.0)) fail("fracture.exclusion_c: must be positive");
  if (!(minimizer.tol > 0.0)) fail("minimizer.tol: must be positive");
  if (minimizer.max_iter < 0) fail("minimizer.max_iter: must be non-negative");
  if (minimizer.history < 1) fail("minimizer.history: must be at least 1");
  if (minimizer.n_random < 0) fail("minimizer.n_random: must be non-negative");
  if (minimizer.n_offsets < 1) fail("minimizer.n_offsets: must be at least 1");
  if (!(minimizer.noise >= 0.0)) fail("minimizer.noise: must be non-negative");
  if (output_dir.empty()) fail("output.dir: must not be empty");
}

json ExperimentConfig::to_json() const {
  json j;
  j["lattice"] = {{"l", l}, {"eps", list_json(eps)}, {"phi", list_json(phi)}};
  if (psi) j["lattice"]["psi"] = *psi;
  j["potential"] = {{"family", potential.family}, {"beta", potential.beta}};
  if (potential.family == "synthetic") {
    j["potential"]["alpha"] = potential.alpha;
    j["potential"]["alpha_prime"] = potential.alpha_prime;
  }
  if (!a.empty()) j["load"] = {{"a", list_json(a)}};
  else j["load"] = {{"a_rel", list_json(a_rel)}};
  j["chi"] = {{"enabled", chi.enabled},
              {"r_chi", chi.r_chi},
              {"smoothing_width", chi.smoothing_width},
              {"det_width", chi.det_width}};
  if (chi.kappa) j["chi"]["kappa"] = *chi.kappa;
  j["lateral_cap"] = {{"mode", cap_mode_name(cap.mode)}, {"r0", cap.r0}, {"stiffness_factor", cap.stiffness_factor}};
  j["fracture"] = {{"r_threshold", fracture.r_threshold},
                   {"eta_rel", fracture.eta_rel},
                   {"mu_rel", fracture.mu_rel},
                   {"band_constant", fracture.band_constant},
                   {"exclusion_c", fracture.exclusion_c}};
  j["minimizer"] = {{"tol", minimizer.tol},
                    {"max_iter", minimizer.max_iter},
                    {"history", minimizer.history},
                    {"n_random", minimizer.n_random},
                    {"n_offsets", minimizer.n_offsets},
                    {"noise", minimizer.noise},
                    {"seed", minimizer.seed}};
  j["output"] = {{"dir", output_dir}};
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: parse error: " + std::string(e.what()));
  }
  return ExperimentConfig::from_json(j);
}

std::vector<GridPoint> expand_grid(const ExperimentConfig& cfg) {
  std::vector<GridPoint> out;
  const PotentialFamily fam = cfg.potential.build();
  const bool relative = !cfg.a_rel.empty();
  const auto& loads = relative ? cfg.a_rel : cfg.a;
  for (double phi : cfg.phi) {
    const double a_crit = cleavage_prediction(fam.alpha(), fam.alpha_prime(), fam.beta(), cfg.l, phi).a_crit;
    for (double eps : cfg.eps) {
      for (double load : loads) {
        GridPoint gp;
        gp.index = out.size();
        gp.phi = phi;
        gp.eps = eps;
        gp.a = relative ? load * a_crit : load;
        gp.a_rel = relative ? load : load / a_crit;
        out.push_back(gp);
      }
    }
  }
  return out;
}

PointResult run_point(const ExperimentConfig& cfg, const GridPoint& gp, int jobs) {
  PointResult r;
  r.point = gp;
  const PotentialFamily fam = cfg.potential.build();
  const PsiRule psi = cfg.psi ? PsiRule::fixed(*cfg.psi) : PsiRule::sqrt_eps();
  const Lattice lat = Lattice::build(LatticeSpec{cfg.l, gp.eps, gp.phi}, psi);

  Constraints cons = Constraints::for_load(lat, gp.a);
  if (cfg.cap.mode == CapConfig::Mode::On || (cfg.cap.mode == CapConfig::Mode::Auto && gp.phi == 0.0)) {
    cons.lateral_cap = LateralCap{cfg.cap.r0, cfg.cap.stiffness_factor};
  } else {
    cons.lateral_cap.reset();
  }

  MinimizeOptions opts;
  opts.tol = cfg.minimizer.tol;
  opts.max_iter = cfg.minimizer.max_iter;
  opts.history = cfg.minimizer.history;
  opts.n_random = cfg.minimizer.n_random;
  opts.n_offsets = cfg.minimizer.n_offsets;
  opts.noise = cfg.minimizer.noise;
  opts.seed = cfg.minimizer.seed;
  opts.jobs = jobs;
  opts.record_trace = false;
  if (cfg.chi.enabled) {
    ChiPenalty p = ChiPenalty::defaults(fam.beta());
    if (cfg.chi.kappa) p.kappa = *cfg.chi.kappa;
    p.r_chi = cfg.chi.r_chi;
    p.smoothing_width = cfg.chi.smoothing_width;
    p.det_width = cfg.chi.det_width;
    opts.chi = p;
  }

  const CleavagePrediction pred = cleavage_prediction(fam.alpha(), fam.alpha_prime(), fam.beta(), cfg.l, gp.phi);
  r.predicted_limit = pred.limit_energy(gp.a);
  r.predicted_refined = pred.refined_energy(gp.a, gp.eps);

  MultistartResult ms;
  try {
    ms = multistart(lat, fam, cons, opts);
  } catch (const std::exception& e) {
    r.ok = false;
    r.status = MinimizeStatus::Error;
    r.flag = std::string("optimizer_failure: ") + e.what();
    return r;
  }
  for (const StartOutcome& s : ms.starts)
    if (s.status == MinimizeStatus::Error) ++r.failed_starts;
  r.winner = ms.best.label.to_string();
  r.status = ms.best.status;
  r.rescaled_energy = ms.best.report.rescaled_energy;
  r.cap_energy_rescaled = gp.eps * ms.best.cap_energy;
  r.iterations = ms.best.iterations;
  r.grad_norm = ms.best.grad_norm;
  if (r.status != MinimizeStatus::Converged) {
    r.ok = false;
    r.flag = std::string("optimizer_failure: ") + to_string(r.status);
  }

  FractureConfig fc;
  fc.r_threshold = cfg.fracture.r_threshold;
  if (gp.a > 0.0) {
    fc.eta = cfg.fracture.eta_rel * gp.a;
    fc.mu = cfg.fracture.mu_rel * gp.a;
  }
  fc.band_constant = cfg.fracture.band_constant;
  fc.exclusion_c = cfg.fracture.exclusion_c;
  r.fracture = analyze_fracture(lat, ms.best.y.y, fam, fc, gp.a);
  return r;
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {
      "index", "phi", "eps", "a", "a_rel", "winner", "status", "rescaled_energy",
      "cap_energy", "predicted_limit", "predicted_refined", "n_broken", "n_broken_type1",
      "n_essential", "I", "I_eta", "D_mu", "crack_kind", "crack_offset", "crack_band_over_eps",
      "elastic_l2", "elastic_h1", "split_l2", "split_h1", "jump_u1", "strain_11", "strain_12",
      "strain_21", "strain_22", "iterations", "grad_norm", "failed_starts", "flag"};
  return cols;
}

std::string csv_header() {
  std::string s;
  for (std::size_t i = 0; i < csv_columns().size(); ++i) {
    if (i) s += ',';
    s += csv_columns()[i];
  }
  return s;
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_row(const PointResult& r) {
  std::vector<std::string> c;
  const auto num = [&](double v) { c.push_back(format_number(v)); };
  const auto text = [&](const std::string& s) {
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    c.push_back(q + "\"");
  };
  c.push_back(std::to_string(r.point.index));
  num(r.point.phi);
  num(r.point.eps);
  num(r.point.a);
  num(r.point.a_rel);
  text(r.winner);
  c.push_back(to_string(r.status));
  const bool have = r.fracture.has_value();
  if (have && r.status != MinimizeStatus::Error) {
    const FractureReport& f = *r.fracture;
    num(r.rescaled_energy);
    num(r.cap_energy_rescaled);
    num(r.predicted_limit);
    num(r.predicted_refined);
    c.push_back(std::to_string(f.sets.n_broken));
    c.push_back(std::to_string(f.sets.n_broken_type1));
    c.push_back(std::to_string(f.sets.n_essential));
    num(f.slices.I);
    num(f.slices.I_eta);
    num(f.slices.D_mu);
    const char* kind = f.path.kind == CrackPath::Kind::Line ? "line" : f.path.kind == CrackPath::Kind::Graph ? "graph" : "none";
    c.push_back(kind);
    if (f.path.found()) {
      num(f.path.offset_p);
      num(f.path.band_over_eps);
    } else {
      c.push_back("");
      c.push_back("");
    }
    num(f.elastic_distance ? f.elastic_distance->l2 : 0.0);
    num(f.elastic_distance ? f.elastic_distance->h1 : 0.0);
    if (f.split_distance) {
      num(f.split_distance->l2);
      num(f.split_distance->h1);
      num(f.split_distance->jump_u1);
    } else {
      c.insert(c.end(), 3, "");
    }
    num(f.mean_strain(0, 0));
    num(f.mean_strain(0, 1));
    num(f.mean_strain(1, 0));
    num(f.mean_strain(1, 1));
  } else {
    num(r.rescaled_energy);
    num(r.cap_energy_rescaled);
    num(r.predicted_limit);
    num(r.predicted_refined);
    c.insert(c.end(), 18, "");
  }
  c.push_back(std::to_string(r.iterations));
  num(r.grad_norm);
  c.push_back(std::to_string(r.failed_starts));
  text(r.flag);
  std::string s;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i) s += ',';
    s += c[i];
  }
  return s;
}

std::size_t run_experiment(const ExperimentConfig& cfg, int jobs, std::ostream& log) {
  if (jobs < 1) throw ConfigError("--jobs: must be at least 1");
  const auto grid = expand_grid(cfg);
  std::vector<PointResult> rows(grid.size());
  // Few grid points: parallelize inside the portfolio instead.
  const int outer = static_cast<int>(std::min<std::size_t>(jobs, grid.size()));
  const int inner = grid.size() >= static_cast<std::size_t>(jobs) ? 1 : jobs;
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&]() {
    for (std::size_t k = next++; k < grid.size(); k = next++) {
      rows[k] = run_point(cfg, grid[k], inner);
      std::lock_guard<std::mutex> lock(log_mutex);
      log << "[" << (k + 1) << "/" << grid.size() << "] phi=" << grid[k].phi << " eps=" << grid[k].eps
          << " a=" << grid[k].a << " winner=" << rows[k].winner << " energy=" << rows[k].rescaled_energy
          << (rows[k].ok ? "" : " FLAGGED") << "\n";
    }
  };
  if (outer <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < outer; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "results.csv", std::ios::binary | std::ios::trunc);
  if (!csv) throw std::runtime_error("cannot write " + (dir / "results.csv").string());
  csv << csv_header() << "\n";
  std::size_t flagged = 0;
  for (const PointResult& r : rows) {
    csv << csv_row(r) << "\n";
    if (!r.ok) ++flagged;
  }

  json manifest;
  manifest["tool"] = "cleave";
  manifest["version"] = kVersion;
  manifest["seed"] = cfg.minimizer.seed;
  manifest["config"] = cfg.to_json();
  manifest["grid_order"] = "phi, eps, load";
  manifest["rows"] = rows.size();
  manifest["flagged_rows"] = flagged;
  manifest["columns"] = csv_columns();
  manifest["results"] = "results.csv";
  std::ofstream mf(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  mf << manifest.dump(2) << "\n";
  return flagged;
}

}  // namespace cleave::runner
