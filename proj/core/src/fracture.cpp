#include "cleave/fracture.hpp"

#include "cleave/reduced.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace cleave {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec2 centroid(const Lattice& lat, std::size_t t) {
  const Triangle& tri = lat.triangles()[t];
  const auto& x = lat.atoms();
  return (x[tri.v[0]] + x[tri.v[1]] + x[tri.v[2]]) / 3.0;
}

std::array<Vec2, 3> reference_vertices(const Lattice& lat, std::size_t t) {
  const Triangle& tri = lat.triangles()[t];
  const auto& x = lat.atoms();
  return {x[tri.v[0]], x[tri.v[1]], x[tri.v[2]]};
}

std::vector<std::size_t> flagged(const std::vector<std::uint8_t>& flags) {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < flags.size(); ++t)
    if (flags[t]) out.push_back(t);
  return out;
}

// Slopes +-1/sqrt(3) graph through the centers, nodes every eps*gamma in x2.
void fit_graph(const Lattice& lat, const std::vector<std::size_t>& tris, CrackPath& path) {
  const double eps = lat.eps();
  const double hb = eps * lat.gamma();
  const double step = hb / kSqrt3;
  const double l = lat.spec().l;
  const int K = static_cast<int>(std::ceil(1.0 / hb - 1e-9));

  std::vector<std::vector<Vec2>> bins(K);
  for (std::size_t t : tris) {
    const Vec2 c = centroid(lat, t);
    int k = static_cast<int>(std::floor(c.y() / hb));
    k = std::clamp(k, 0, K - 1);
    bins[k].push_back(c);
  }

  const int J = static_cast<int>(std::ceil((l + 2.0 * step) / step)) + 1;
  constexpr int kOffsets = 8;
  double best_cost = kInf;
  std::vector<int> best_states;
  double best_origin = 0.0;
  std::vector<double> cost(J), next(J);
  std::vector<std::vector<std::int8_t>> choice(K, std::vector<std::int8_t>(J, 0));

  for (int o = 0; o < kOffsets; ++o) {
    const double origin = -step + o * step / kOffsets;
    auto node_value = [&](int j) { return origin + j * step; };
    std::fill(cost.begin(), cost.end(), 0.0);
    for (int k = 0; k < K; ++k) {
      std::fill(next.begin(), next.end(), kInf);
      const double x2k = k * hb;
      for (int j = 0; j < J; ++j) {
        if (cost[j] == kInf) continue;
        for (int dj : {+1, -1}) {
          const int jn = j + dj;
          if (jn < 0 || jn >= J) continue;
          double c = cost[j];
          for (const Vec2& p : bins[k]) {
            const double g = node_value(j) + dj * step * (p.y() - x2k) / hb;
            c += (p.x() - g) * (p.x() - g);
          }
          if (c < next[jn]) {
            next[jn] = c;
            choice[k][jn] = static_cast<std::int8_t>(dj);
          }
        }
      }
      cost.swap(next);
    }
    int jbest = -1;
    for (int j = 0; j < J; ++j)
      if (cost[j] < kInf && (jbest < 0 || cost[j] < cost[jbest])) jbest = j;
    if (jbest >= 0 && cost[jbest] < best_cost) {
      best_cost = cost[jbest];
      best_origin = origin;
      best_states.assign(K + 1, 0);
      best_states[K] = jbest;
      for (int k = K - 1; k >= 0; --k) best_states[k] = best_states[k + 1] - choice[k][best_states[k + 1]];
    }
  }

  path.kind = CrackPath::Kind::Graph;
  path.node_x2.resize(K + 1);
  path.node_g.resize(K + 1);
  path.slopes.resize(K);
  for (int k = 0; k <= K; ++k) {
    path.node_x2[k] = k * hb;
    path.node_g[k] = best_origin + best_states[k] * step;
  }
  for (int k = 0; k < K; ++k) {
    path.slopes[k] = (path.node_g[k + 1] - path.node_g[k]) / hb;
  }
}

}  // namespace

FractureConfig FractureConfig::resolved(const PotentialFamily& fam, double a) const {
  FractureConfig c = *this;
  if (c.r_threshold == 0.0) c.r_threshold = r_threshold_half_beta(fam);
  if (!c.eta) c.eta = a > 0.0 ? a / 4.0 : 0.0;
  if (!c.mu) c.mu = a > 0.0 ? a / 10.0 : 0.0;
  c.validate(a);
  return c;
}

void FractureConfig::validate(double a) const {
  if (!(r_threshold > 1.0)) throw std::invalid_argument("fracture.r_threshold: must exceed 1");
  if (!eta || !(*eta >= 0.0)) throw std::invalid_argument("fracture.eta: must be non-negative");
  if (!mu || !(*mu >= 0.0)) throw std::invalid_argument("fracture.mu: must be non-negative");
  if (a > 0.0 && !(*eta > 0.0 && *eta < a)) throw std::invalid_argument("fracture.eta: must lie in (0, a)");
  if (a > 0.0 && !(*mu > 0.0)) throw std::invalid_argument("fracture.mu: must be positive");
  if (!(band_constant > 0.0)) throw std::invalid_argument("fracture.band_constant: must be positive");
  if (!(exclusion_c > 0.0)) throw std::invalid_argument("fracture.exclusion_c: must be positive");
}

BrokenSets classify_broken(const Lattice& lat, std::span<const Vec2> y, const FractureConfig& cfg,
                           double a, double eps) {
  if (y.size() != lat.atom_count()) throw std::invalid_argument("classify_broken: wrong deformation size");
  if (!cfg.eta) throw std::invalid_argument("classify_broken: config not resolved");
  const auto& tris = lat.triangles();
  const auto& bonds = lat.bonds();
  BrokenSets s;
  s.side_threshold = 2.0 * cfg.r_threshold;
  s.essential_threshold = (a - *cfg.eta) / std::sqrt(eps);
  s.broken.assign(tris.size(), 0);
  s.essential.assign(tris.size(), 0);
  for (std::size_t t = 0; t < tris.size(); ++t) {
    double longest = 0.0;
    int stretched = 0;
    for (std::uint32_t b : tris[t].bonds) {
      const double r = (y[bonds[b].j] - y[bonds[b].i]).norm() / eps;
      longest = std::max(longest, r);
      if (r > s.essential_threshold) ++stretched;
    }
    if (longest > s.side_threshold) {
      s.broken[t] = 1;
      ++s.n_broken;
      if (tris[t].type == TriangleType::One) ++s.n_broken_type1; else ++s.n_broken_type2;
      if (stretched >= 2) {
        s.essential[t] = 1;
        ++s.n_essential;
        if (tris[t].type == TriangleType::One) ++s.n_essential_type1;
      }
    }
  }
  return s;
}

double shadow_measure(const Lattice& lat, std::span<const std::uint8_t> flags, double lo, double hi) {
  std::vector<std::pair<double, double>> iv;
  const auto& tris = lat.triangles();
  for (std::size_t t = 0; t < tris.size(); ++t) {
    if (!flags[t] || tris[t].type != TriangleType::One) continue;
    const double a = std::max(lo, tris[t].y_min);
    const double b = std::min(hi, tris[t].y_max);
    if (a < b) iv.emplace_back(a, b);
  }
  std::sort(iv.begin(), iv.end());
  double total = 0.0, cur_lo = 0.0, cur_hi = -kInf;
  for (const auto& [a, b] : iv) {
    if (a > cur_hi) {
      if (cur_hi > cur_lo) total += cur_hi - cur_lo;
      cur_lo = a;
      cur_hi = b;
    } else {
      cur_hi = std::max(cur_hi, b);
    }
  }
  if (cur_hi > cur_lo) total += cur_hi - cur_lo;
  return total;
}

SliceMeasures slice_coverage(const Lattice& lat, std::span<const Vec2> y, const BrokenSets& sets,
                             const FractureConfig& cfg) {
  const double eps = lat.eps();
  const double lo = eps, hi = 1.0 - eps;
  SliceMeasures m;
  m.I = shadow_measure(lat, sets.broken, lo, hi);
  m.I_eta = shadow_measure(lat, sets.essential, lo, hi);
  if (sets.n_broken_type1 == 0) return m;

  const auto& tris = lat.triangles();
  // Stretch integrand per triangle: e1^T grad u e1 = (F11 - 1) / sqrt(eps).
  std::vector<double> stretch(tris.size());
  for (std::size_t t = 0; t < tris.size(); ++t) {
    stretch[t] = (triangle_gradient(lat, y, t)(0, 0) - 1.0) / std::sqrt(eps);
  }
  std::vector<double> cuts = {lo, hi};
  for (const Vec2& x : lat.atoms())
    if (x.y() > lo && x.y() < hi) cuts.push_back(x.y());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [&](double p, double q) { return q - p <= 1e-13 * eps; }),
             cuts.end());

  const double bound = lat.spec().l * cfg.mu.value_or(0.0);
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double h0 = cuts[k], h1 = cuts[k + 1];
    const double width = h1 - h0;
    if (width <= 0.0) continue;
    const auto slice = lat.slice_triangles(0.5 * (h0 + h1));
    int n_broken1 = 0;
    for (std::size_t t : slice)
      if (sets.broken[t] && tris[t].type == TriangleType::One) ++n_broken1;
    if (n_broken1 != 1) continue;
    // Chord lengths are affine in h between vertex heights, so is the integral.
    const double ha = h0 + 0.25 * width, hb = h0 + 0.75 * width;
    double fa = 0.0, fb = 0.0;
    for (std::size_t t : slice) {
      if (sets.broken[t]) continue;
      const auto p = reference_vertices(lat, t);
      fa += chord_length(p, ha) * stretch[t];
      fb += chord_length(p, hb) * stretch[t];
    }
    const double slope = (fb - fa) / (hb - ha);
    const double f0 = fa + slope * (h0 - ha);
    const double f1 = fa + slope * (h1 - ha);
    if (f0 <= bound && f1 <= bound) {
      m.D_mu += width;
    } else if (f0 <= bound || f1 <= bound) {
      const double hc = ha + (bound - fa) / slope;
      m.D_mu += f0 <= bound ? hc - h0 : h1 - hc;
    }
  }
  return m;
}

double projection_center(const Lattice& lat, std::size_t t, const Vec2& n) {
  const auto p = reference_vertices(lat, t);
  double lo = kInf, hi = -kInf;
  for (const Vec2& v : p) {
    const double c = n.dot(v);
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  return 0.5 * (lo + hi);
}

double CrackPath::cut(double x2) const {
  switch (kind) {
    case Kind::Line:
      return offset_p + direction.x() / direction.y() * x2;
    case Kind::Graph: {
      if (node_x2.empty()) return 0.0;
      if (x2 <= node_x2.front()) return node_g.front() + slopes.front() * (x2 - node_x2.front());
      if (x2 >= node_x2.back()) return node_g.back() + slopes.back() * (x2 - node_x2.back());
      const auto it = std::upper_bound(node_x2.begin(), node_x2.end(), x2);
      const std::size_t k = static_cast<std::size_t>(it - node_x2.begin()) - 1;
      return node_g[k] + slopes[k] * (x2 - node_x2[k]);
    }
    case Kind::None:
      break;
  }
  throw std::logic_error("CrackPath::cut: no crack");
}

CrackPath crack_path(const Lattice& lat, const BrokenSets& sets, double phi) {
  CrackPath path;
  const auto tris = flagged(sets.n_essential > 0 ? sets.essential : sets.broken);
  if (tris.empty()) return path;
  path.n_fitted = tris.size();
  const double eps = lat.eps();

  if (phi != 0.0) {
    Vec2 v = lattice_vectors(phi)[static_cast<int>(optimal_directions(phi).front())];
    if (v.y() < 0.0) v = -v;
    const Vec2 n(v.y(), -v.x());
    std::vector<double> m(tris.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < tris.size(); ++k) {
      m[k] = projection_center(lat, tris[k], n);
      sum += m[k];
    }
    const double c = sum / static_cast<double>(tris.size());
    path.kind = CrackPath::Kind::Line;
    path.direction = v;
    path.offset_p = c / n.x();
    for (std::size_t k = 0; k < tris.size(); ++k) {
      const double dev = std::abs(m[k] - c);
      path.max_deviation = std::max(path.max_deviation, dev);
      if (lat.triangles()[tris[k]].type == TriangleType::One) {
        path.max_deviation_type1 = std::max(path.max_deviation_type1, dev);
      }
    }
  } else {
    fit_graph(lat, tris, path);
    for (std::size_t t : tris) {
      const Vec2 c = centroid(lat, t);
      const double dev = std::abs(c.x() - path.cut(c.y()));
      path.max_deviation = std::max(path.max_deviation, dev);
      if (lat.triangles()[t].type == TriangleType::One) {
        path.max_deviation_type1 = std::max(path.max_deviation_type1, dev);
      }
    }
    path.offset_p = path.cut(0.0);
  }
  path.band_over_eps = path.max_deviation / eps;
  return path;
}

Profile Profile::elastic(double a) {
  Profile p;
  p.kind = Kind::Elastic;
  p.a = a;
  return p;
}

Profile Profile::split(double a, CrackPath path, double exclusion_c) {
  Profile p;
  p.kind = Kind::Split;
  p.a = a;
  p.path = std::move(path);
  p.exclusion_c = exclusion_c;
  return p;
}

ProfileDistance limit_profile_distance(const Lattice& lat, std::span<const Vec2> u,
                                       const Profile& profile) {
  if (u.size() != lat.atom_count()) throw std::invalid_argument("limit_profile_distance: wrong size");
  const double eps = lat.eps();
  const double l = lat.spec().l;
  const double atom_area = kSqrt3 * eps * eps / 2.0;
  const double tri_area = kSqrt3 * eps * eps / 4.0;
  const auto& x = lat.atoms();
  const std::size_t n = x.size();
  ProfileDistance d;

  // side: 0 left (or elastic), 1 right, -1 excluded.
  std::vector<int> side(n, 0);
  Mat2 Fa = Mat2::Zero();
  if (profile.kind == Profile::Kind::Elastic) {
    Fa(0, 0) = profile.a;
    Fa(1, 1) = -profile.a / 3.0;
  } else {
    if (!profile.path.found()) throw std::invalid_argument("limit_profile_distance: split profile without a cut");
    const double g0 = profile.path.cut(0.0), g1 = profile.path.cut(1.0);
    if (!(g0 > 0.0 && g0 < l && g1 > 0.0 && g1 < l)) {
      throw std::invalid_argument("limit_profile_distance: cut does not cross both (0,l)x{0} and (0,l)x{1}");
    }
    const double band = 2.0 * profile.exclusion_c * eps;
    for (std::size_t i = 0; i < n; ++i) {
      const double off = x[i].x() - profile.path.cut(x[i].y());
      side[i] = off < -band ? 0 : (off > band ? 1 : -1);
    }
  }
  auto target = [&](std::size_t i) -> Vec2 {
    if (profile.kind == Profile::Kind::Elastic) return Fa * x[i];
    return side[i] == 1 ? Vec2(profile.a * l, 0.0) : Vec2(0.0, 0.0);
  };

  double sum2[2] = {0.0, 0.0}, sum1[2] = {0.0, 0.0};
  std::size_t cnt[2] = {0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    if (side[i] < 0) continue;
    sum2[side[i]] += u[i].y() - target(i).y();
    sum1[side[i]] += u[i].x();
    ++cnt[side[i]];
  }
  const double shift[2] = {cnt[0] ? sum2[0] / cnt[0] : 0.0, cnt[1] ? sum2[1] / cnt[1] : 0.0};
  d.shift_left = shift[0];
  d.shift_right = shift[1];
  if (profile.kind == Profile::Kind::Split && cnt[0] && cnt[1]) {
    d.jump_u1 = sum1[1] / cnt[1] - sum1[0] / cnt[0];
  }

  std::vector<double> terms;
  terms.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (side[i] < 0) continue;
    const Vec2 r = u[i] - target(i) - Vec2(0.0, shift[side[i]]);
    terms.push_back(atom_area * r.squaredNorm());
  }
  d.atoms_used = terms.size();
  double l2sq = 0.0;
  for (double t : terms) l2sq += t;

  double h1sq = 0.0;
  const auto& tris = lat.triangles();
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const auto& v = tris[t].v;
    if (side[v[0]] < 0 || side[v[1]] < 0 || side[v[2]] < 0) continue;
    if (side[v[0]] != side[v[1]] || side[v[0]] != side[v[2]]) continue;
    const Mat2 grad = triangle_gradient(lat, u, t);
    h1sq += tri_area * (grad - Fa).squaredNorm();
  }
  d.l2 = std::sqrt(l2sq);
  d.h1_semi = std::sqrt(h1sq);
  d.h1 = std::sqrt(l2sq + h1sq);
  return d;
}

Mat2 mean_rescaled_strain(const Lattice& lat, std::span<const Vec2> y, const BrokenSets& sets) {
  Mat2 sum = Mat2::Zero();
  std::size_t count = 0;
  for (std::size_t t = 0; t < lat.triangles().size(); ++t) {
    if (sets.broken[t]) continue;
    sum += triangle_gradient(lat, y, t) - Mat2::Identity();
    ++count;
  }
  if (count == 0) return Mat2::Zero();
  return sum / (static_cast<double>(count) * std::sqrt(lat.eps()));
}

FractureReport analyze_fracture(const Lattice& lat, std::span<const Vec2> y,
                                const PotentialFamily& fam, const FractureConfig& cfg, double a) {
  FractureReport rep;
  rep.config = cfg.resolved(fam, a);
  const double eps = lat.eps();
  rep.sets = classify_broken(lat, y, rep.config, a, eps);
  rep.slices = slice_coverage(lat, y, rep.sets, rep.config);
  rep.path = crack_path(lat, rep.sets, lat.spec().phi);
  rep.mean_strain = mean_rescaled_strain(lat, y, rep.sets);

  Positions yy(y.begin(), y.end());
  const Positions u = [&] {
    Positions out(yy.size());
    const double s = 1.0 / std::sqrt(eps);
    for (std::size_t i = 0; i < yy.size(); ++i) out[i] = (yy[i] - lat.atoms()[i]) * s;
    return out;
  }();
  rep.elastic_distance = limit_profile_distance(lat, u, Profile::elastic(a));
  if (rep.path.found()) {
    try {
      rep.split_distance = limit_profile_distance(lat, u, Profile::split(a, rep.path, rep.config.exclusion_c));
    } catch (const std::invalid_argument&) {
      rep.split_distance.reset();
    }
  }
  return rep;
}

}  // namespace cleave
