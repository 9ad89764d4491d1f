#include "cleave/minimizer.hpp"

#include "cleave/reduced.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <random>
#include <thread>

namespace cleave {

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Lattice direction oriented so that its x2 component is non-negative.
Vec2 upward(const Lattice& lat, Direction d) {
  Vec2 v = lat.vectors()[static_cast<int>(d)];
  if (v.y() < 0.0 || (v.y() == 0.0 && v.x() < 0.0)) v = -v;
  return v;
}

double cut_margin(const Lattice& lat, bool lateral_cap) {
  return lateral_cap ? lat.psi() + lat.eps() : lat.eps();
}

std::vector<std::uint32_t> cap_bonds(const Lattice& lat, const Constraints& cons) {
  std::vector<std::uint32_t> out;
  if (!cons.lateral_cap) return out;
  const auto& bonds = lat.bonds();
  for (std::size_t b = 0; b < bonds.size(); ++b) {
    if (lat.in_lateral_zone(bonds[b].i) && lat.in_lateral_zone(bonds[b].j)) {
      out.push_back(static_cast<std::uint32_t>(b));
    }
  }
  return out;
}

double cap_energy_impl(const Lattice& lat, const PotentialFamily& fam, const LateralCap& cap,
                       const std::vector<std::uint32_t>& ids, std::span<const Vec2> y,
                       std::span<Vec2> grad) {
  const double k = cap.stiffness_factor * fam.alpha();
  const double inv_eps = 1.0 / lat.eps();
  std::vector<double> terms;
  terms.reserve(ids.size());
  for (std::uint32_t b : ids) {
    const Bond& bd = lat.bonds()[b];
    const Vec2 d = y[bd.j] - y[bd.i];
    const double len = d.norm();
    const double over = len * inv_eps - cap.r0;
    if (over <= 0.0) continue;
    terms.push_back(0.5 * k * over * over);
    if (!grad.empty()) {
      const Vec2 f = (k * over * inv_eps / len) * d;
      grad[bd.j] += f;
      grad[bd.i] -= f;
    }
  }
  return pairwise_sum(terms);
}

// Free coordinates: y2 of every atom, y1 of non-frozen atoms.
class Problem {
 public:
  Problem(const Lattice& lat, const PotentialFamily& fam, const Constraints& cons,
          const MinimizeOptions& opts)
      : lat_(lat), fam_(fam), cons_(cons), ev_(lat, fam, opts.chi), caps_(cap_bonds(lat, cons)) {
    const std::size_t n = lat.atom_count();
    idx1_.assign(n, -1);
    idx2_.assign(n, -1);
    int k = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!lat.is_frozen(i)) idx1_[i] = k++;
      idx2_[i] = k++;
    }
    dim_ = k;
    y_.resize(n);
    g_.resize(n);
  }

  int dim() const { return dim_; }

  Positions project(const Positions& y0) const {
    Positions y = y0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (lat_.is_frozen(i)) y[i].x() = (1.0 + cons_.a_eps) * lat_.atoms()[i].x();
    }
    return y;
  }

  Eigen::VectorXd gather(const Positions& y) const {
    Eigen::VectorXd x(dim_);
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (idx1_[i] >= 0) x(idx1_[i]) = y[i].x();
      x(idx2_[i]) = y[i].y();
    }
    return x;
  }

  void scatter(const Eigen::VectorXd& x, Positions& y) const {
    y.resize(lat_.atom_count());
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i].x() = idx1_[i] >= 0 ? x(idx1_[i]) : (1.0 + cons_.a_eps) * lat_.atoms()[i].x();
      y[i].y() = x(idx2_[i]);
    }
  }

  // Objective and gradient; +inf if a bond collapses.
  double eval(const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    scatter(x, y_);
    double f;
    try {
      f = ev_.value_and_gradient(y_, g_);
    } catch (const CollapsedBondError&) {
      return std::numeric_limits<double>::infinity();
    }
    if (cons_.lateral_cap) f += cap_energy_impl(lat_, fam_, *cons_.lateral_cap, caps_, y_, g_);
    g.resize(dim_);
    for (std::size_t i = 0; i < y_.size(); ++i) {
      if (idx1_[i] >= 0) g(idx1_[i]) = g_[i].x();
      g(idx2_[i]) = g_[i].y();
    }
    return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
  }

  double cap_energy(std::span<const Vec2> y) const {
    if (!cons_.lateral_cap) return 0.0;
    return cap_energy_impl(lat_, fam_, *cons_.lateral_cap, caps_, y, {});
  }

 private:
  const Lattice& lat_;
  const PotentialFamily& fam_;
  Constraints cons_;
  EnergyEvaluator ev_;
  std::vector<std::uint32_t> caps_;
  std::vector<int> idx1_, idx2_;
  int dim_ = 0;
  Positions y_;
  Positions g_;
};

}  // namespace

Constraints Constraints::for_load(const Lattice& lat, double a) {
  Constraints c;
  c.a_eps = std::sqrt(lat.eps()) * a;
  if (lat.spec().phi == 0.0) c.lateral_cap = LateralCap{};
  return c;
}

double CrackSpec::cut(const Lattice& lat, double x2) const {
  if (kind == Kind::Line) {
    const Vec2 v = upward(lat, dir);
    return p + v.x() / v.y() * x2;
  }
  const double period = 1.0 / n_teeth;
  const double t = x2 / period - std::floor(x2 / period);
  const double w = (t <= 0.5 ? t : 1.0 - t) * period;
  return p + sign * w / kSqrt3;
}

std::string CrackSpec::label() const {
  if (kind == Kind::Line) return std::string("crack(") + cleave::to_string(dir) + ",p=" + fmt_double(p) + ")";
  return std::string("serrated(") + (sign > 0 ? "+" : "-") + ",p=" + fmt_double(p) + ")";
}

std::string StartLabel::to_string() const {
  switch (kind) {
    case StartKind::Elastic:
      return "elastic";
    case StartKind::Crack:
      return crack ? crack->label() : "crack";
    case StartKind::Perturbed:
      return "perturbed(" + std::to_string(perturbation) + ")";
  }
  return "unknown";
}

const char* to_string(MinimizeStatus s) {
  switch (s) {
    case MinimizeStatus::Converged: return "converged";
    case MinimizeStatus::MaxIterations: return "max_iterations";
    case MinimizeStatus::LineSearchFailure: return "line_search_failure";
    case MinimizeStatus::Error: return "error";
  }
  return "unknown";
}

Deformation elastic_guess(const Lattice& lat, double a_eps) {
  Deformation d;
  d.a_eps = a_eps;
  d.y.resize(lat.atom_count());
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    const Vec2& x = lat.atoms()[i];
    d.y[i] = Vec2((1.0 + a_eps) * x.x(), (1.0 - a_eps / 3.0) * x.y());
  }
  return d;
}

std::optional<std::pair<double, double>> crack_offset_range(const Lattice& lat, const CrackSpec& spec,
                                                          bool lateral_cap) {
  const double margin = cut_margin(lat, lateral_cap);
  const double l = lat.spec().l;
  double rise_lo = 0.0, rise_hi = 0.0;  // range of cut(x2) - p over [0, 1]
  if (spec.kind == CrackSpec::Kind::Line) {
    const Vec2 v = upward(lat, spec.dir);
    if (v.y() < 1e-12) return std::nullopt;
    const double slope = v.x() / v.y();
    rise_lo = std::min(0.0, slope);
    rise_hi = std::max(0.0, slope);
  } else {
    if (spec.n_teeth < 1) return std::nullopt;
    const double amp = 0.5 / spec.n_teeth / kSqrt3;
    rise_lo = spec.sign > 0 ? 0.0 : -amp;
    rise_hi = spec.sign > 0 ? amp : 0.0;
  }
  const double lo = margin - rise_lo;
  const double hi = l - margin - rise_hi;
  if (!(lo < hi)) return std::nullopt;
  return std::make_pair(lo, hi);
}

Deformation crack_guess(const Lattice& lat, double a_eps, const CrackSpec& spec, bool lateral_cap) {
  const auto range = crack_offset_range(lat, spec, lateral_cap);
  if (!range || spec.p < range->first || spec.p > range->second) {
    throw std::invalid_argument("crack_guess: offset p = " + fmt_double(spec.p) + " puts the cut " +
                                spec.label() + " outside the admissible strip");
  }
  const double l = lat.spec().l;
  Deformation d;
  d.a_eps = a_eps;
  d.y.resize(lat.atom_count());
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    const Vec2& x = lat.atoms()[i];
    if (lat.is_frozen(i)) {
      d.y[i] = Vec2((1.0 + a_eps) * x.x(), x.y());
    } else if (x.x() > spec.cut(lat, x.y())) {
      d.y[i] = Vec2(x.x() + a_eps * l, x.y());
    } else {
      d.y[i] = x;
    }
  }
  return d;
}

double lateral_cap_energy(const Lattice& lat, const PotentialFamily& fam, const Constraints& cons,
                          std::span<const Vec2> y) {
  if (!cons.lateral_cap) return 0.0;
  return cap_energy_impl(lat, fam, *cons.lateral_cap, cap_bonds(lat, cons), y, {});
}

MinimizeResult minimize(const Lattice& lat, const PotentialFamily& fam, const Constraints& cons,
                        const Deformation& y0, const MinimizeOptions& opts, StartLabel label) {
  y0.validate(lat);
  if (!(opts.tol > 0.0)) throw std::invalid_argument("minimize: tol must be positive");
  if (opts.max_iter < 0) throw std::invalid_argument("minimize: max_iter must be non-negative");
  if (opts.history < 1) throw std::invalid_argument("minimize: history must be at least 1");

  Problem prob(lat, fam, cons, opts);
  const double eps = lat.eps();
  const double threshold = opts.tol * fam.beta() / eps;
  const double precond = eps * eps / (3.0 * fam.alpha());
  const double max_move = 0.25 * eps;
  constexpr double c1 = 1e-4;

  MinimizeResult res;
  res.label = std::move(label);
  Eigen::VectorXd x = prob.gather(prob.project(y0.y));
  Eigen::VectorXd g, g_new, x_new;
  double f = prob.eval(x, g);
  if (!std::isfinite(f)) throw std::invalid_argument("minimize: starting point has collapsed bonds");
  if (opts.record_trace) res.trace.push_back(f);

  std::deque<Eigen::VectorXd> S, Y;
  std::deque<double> rho;
  res.status = MinimizeStatus::MaxIterations;
  int it = 0;
  std::vector<double> alpha_buf;
  while (true) {
    if (g.lpNorm<Eigen::Infinity>() <= threshold) {
      res.status = MinimizeStatus::Converged;
      break;
    }
    if (it >= opts.max_iter) break;

    // Two-loop recursion.
    Eigen::VectorXd d = -g;
    const std::size_t m = S.size();
    alpha_buf.assign(m, 0.0);
    for (std::size_t k = m; k-- > 0;) {
      alpha_buf[k] = rho[k] * S[k].dot(d);
      d -= alpha_buf[k] * Y[k];
    }
    const double h0 = m > 0 ? S.back().dot(Y.back()) / Y.back().squaredNorm() : precond;
    d *= h0;
    for (std::size_t k = 0; k < m; ++k) {
      const double beta = rho[k] * Y[k].dot(d);
      d += (alpha_buf[k] - beta) * S[k];
    }
    double gd = g.dot(d);
    bool steepest = m == 0;
    if (!(gd < 0.0)) {
      d = -precond * g;
      gd = g.dot(d);
      steepest = true;
      S.clear(), Y.clear(), rho.clear();
    }

    double step = 1.0;
    const double dmax = d.lpNorm<Eigen::Infinity>();
    if (dmax * step > max_move) step = max_move / dmax;
    bool accepted = false;
    double f_new = f;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * d;
      f_new = prob.eval(x_new, g_new);
      if (std::isfinite(f_new)) {
        const double expected = c1 * step * gd;
        if (f_new <= f + expected) {
          accepted = true;
        } else if (f_new <= f && -expected <= 1e-13 * std::max(1.0, std::abs(f))) {
          // Decrease below rounding level of f: keep any non-increase.
          accepted = true;
        }
      }
      if (accepted) break;
      step *= 0.5;
    }
    if (!accepted) {
      if (!steepest) {
        S.clear(), Y.clear(), rho.clear();
        continue;
      }
      res.status = MinimizeStatus::LineSearchFailure;
      res.message = "line search found no decrease along the preconditioned gradient";
      break;
    }
    ++it;
    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd yv = g_new - g;
    const double sy = s.dot(yv);
    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    if (opts.record_trace) res.trace.push_back(f);
    if (sy > 1e-12 * s.norm() * yv.norm() && sy > 0.0) {
      S.push_back(std::move(s));
      Y.push_back(std::move(yv));
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opts.history) {
        S.pop_front(), Y.pop_front(), rho.pop_front();
      }
    }
  }

  res.iterations = it;
  res.grad_norm = g.lpNorm<Eigen::Infinity>();
  res.y.a_eps = cons.a_eps;
  prob.scatter(x, res.y.y);
  res.report = total_energy(lat, res.y.y, fam, opts.chi);
  res.cap_energy = prob.cap_energy(res.y.y);
  res.objective = res.report.raw_energy + res.cap_energy;
  if (res.status == MinimizeStatus::MaxIterations) {
    res.message = "iteration limit reached with gradient norm " + fmt_double(res.grad_norm);
  }
  return res;
}

std::vector<std::pair<StartLabel, Deformation>> start_portfolio(const Lattice& lat,
                                                                const Constraints& cons,
                                                                const MinimizeOptions& opts) {
  if (opts.n_offsets < 1) throw std::invalid_argument("multistart: n_offsets must be at least 1");
  if (opts.n_random < 0) throw std::invalid_argument("multistart: n_random must be non-negative");
  const bool cap = cons.lateral_cap.has_value();
  std::vector<std::pair<StartLabel, Deformation>> out;
  out.emplace_back(StartLabel{StartKind::Elastic, std::nullopt, -1}, elastic_guess(lat, cons.a_eps));

  std::vector<CrackSpec> cuts;
  for (Direction d : kDirections) cuts.push_back(CrackSpec{CrackSpec::Kind::Line, d, 1, 0.0, 4});
  cuts.push_back(CrackSpec{CrackSpec::Kind::Serrated, Direction::V2, 1, 0.0, 4});
  cuts.push_back(CrackSpec{CrackSpec::Kind::Serrated, Direction::V2, -1, 0.0, 4});
  for (CrackSpec c : cuts) {
    const auto range = crack_offset_range(lat, c, cap);
    if (!range) continue;
    for (int k = 0; k < opts.n_offsets; ++k) {
      c.p = range->first + (k + 1) * (range->second - range->first) / (opts.n_offsets + 1);
      out.emplace_back(StartLabel{StartKind::Crack, c, -1}, crack_guess(lat, cons.a_eps, c, cap));
    }
  }

  // Perturbed starts alternate between the elastic guess and a centered crack along v_gamma.
  CrackSpec central{CrackSpec::Kind::Line, optimal_directions(lat.spec().phi).front(), 1, 0.0, 4};
  const auto central_range = crack_offset_range(lat, central, cap);
  if (central_range) central.p = 0.5 * (central_range->first + central_range->second);
  for (int r = 0; r < opts.n_random; ++r) {
    Deformation base = (r % 2 == 1 && central_range) ? crack_guess(lat, cons.a_eps, central, cap)
                                                     : elastic_guess(lat, cons.a_eps);
    std::mt19937_64 rng(splitmix64(opts.seed ^ splitmix64(static_cast<std::uint64_t>(r) + 1)));
    const double amp = opts.noise * lat.eps();
    for (std::size_t i = 0; i < base.y.size(); ++i) {
      const double n1 = uniform01(rng) * 2.0 - 1.0;
      const double n2 = uniform01(rng) * 2.0 - 1.0;
      if (!lat.is_frozen(i)) base.y[i].x() += amp * n1;
      base.y[i].y() += amp * n2;
    }
    out.emplace_back(StartLabel{StartKind::Perturbed, std::nullopt, r}, std::move(base));
  }
  return out;
}

MultistartResult multistart(const Lattice& lat, const PotentialFamily& fam, const Constraints& cons,
                            const MinimizeOptions& opts) {
  if (opts.jobs < 1) throw std::invalid_argument("multistart: jobs must be at least 1");
  auto starts = start_portfolio(lat, cons, opts);
  const std::size_t n = starts.size();
  std::vector<std::optional<MinimizeResult>> results(n);
  std::vector<StartOutcome> outcomes(n);
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    for (std::size_t k = next++; k < n; k = next++) {
      StartOutcome& oc = outcomes[k];
      oc.label = starts[k].first;
      try {
        MinimizeResult r = minimize(lat, fam, cons, starts[k].second, opts, starts[k].first);
        oc.status = r.status;
        oc.objective = r.objective;
        oc.rescaled_energy = r.report.rescaled_energy;
        oc.iterations = r.iterations;
        oc.message = r.message;
        r.trace.shrink_to_fit();
        results[k] = std::move(r);
      } catch (const std::exception& e) {
        oc.status = MinimizeStatus::Error;
        oc.objective = std::numeric_limits<double>::infinity();
        oc.message = e.what();
      }
      // Keep memory bounded: drop the start deformation once used.
      Positions().swap(starts[k].second.y);
    }
  };
  const int threads = static_cast<int>(std::min<std::size_t>(opts.jobs, n));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  MultistartResult out;
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k)
    if (results[k]) lowest = std::min(lowest, results[k]->objective);
  if (!std::isfinite(lowest)) {
    throw std::runtime_error("multistart: every start failed; first error: " + outcomes[0].message);
  }
  const double cutoff = lowest + opts.tie_tolerance * std::max(std::abs(lowest), fam.beta());
  for (std::size_t k = 0; k < n; ++k) {
    if (results[k] && results[k]->objective <= cutoff) {
      out.best_index = k;
      out.best = std::move(*results[k]);
      break;
    }
  }
  out.starts = std::move(outcomes);
  return out;
}

}  // namespace cleave
