#pragma once

// Force-controller gain scheduling from the input-to-state stability
// conditions of the two-mode (free/contact) force-space error system
//
//   z' = A_i z,  A_i = [0 1; -K_i -B_i],  z = [e_x; e_x'],
//
// with K1 = k_p/m, B1 = k_d/m, K2 = (1+k_f)k_e/m, B2 = ((1+k_f)b_e + b_f)/m.

#include <uam/common.hpp>
#include <uam/polygon.hpp>

#include <algorithm>
#include <array>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <vector>

namespace uam {

struct GainBox {
  double kf_min = 0.1, kf_max = 1.0;
  double bf_min = 10.0, bf_max = 40.0;

  bool valid() const {
    return kf_min > 0.0 && kf_min <= kf_max && bf_min > 0.0 && bf_min <= bf_max;
  }
  bool contains(double kf, double bf) const {
    return kf >= kf_min && kf <= kf_max && bf >= bf_min && bf <= bf_max;
  }
  double kf_mid() const { return 0.5 * (kf_min + kf_max); }
  double bf_mid() const { return 0.5 * (bf_min + bf_max); }
};

// Fixed quantities the stability conditions are evaluated against.
struct LoopParams {
  double k_p = 23.5;
  double k_d = 19.5;
  double k_e = 200.0;
  double b_e = 0.5;
  double m_t = 4.0;
};

struct SwitchedParams {
  double K1 = 0.0, B1 = 0.0, K2 = 0.0, B2 = 0.0;

  double dK() const { return K1 - K2; }
  double dB() const { return B1 - B2; }
};

inline SwitchedParams switched_params(double k_p, double k_d, double k_f, double b_f,
                                      double k_e, double b_e, double m_t) {
  return {k_p / m_t, k_d / m_t, (1.0 + k_f) * k_e / m_t,
          ((1.0 + k_f) * b_e + b_f) / m_t};
}

inline SwitchedParams switched_params(const LoopParams& p, double k_f, double b_f) {
  return switched_params(p.k_p, p.k_d, k_f, b_f, p.k_e, p.b_e, p.m_t);
}

enum class Condition { NS1, NS2, NS3 };

inline const char* to_string(Condition c) {
  switch (c) {
    case Condition::NS1: return "NS1";
    case Condition::NS2: return "NS2";
    case Condition::NS3: return "NS3";
  }
  return "?";
}

inline constexpr std::array<Condition, 3> kConditions{Condition::NS1, Condition::NS2,
                                                      Condition::NS3};

// No-switching conditions in their raw ratio form. Used as the oracle for
// the explicit regions.
inline bool check_no_switch(Condition c, const SwitchedParams& sp) {
  const double dK = sp.dK(), dB = sp.dB();
  switch (c) {
    case Condition::NS1: {
      const double disc = sp.B1 * sp.B1 - 4.0 * sp.K1;
      if (!(dB < 0.0) || disc < 0.0) return false;
      return dK / dB < 2.0 * sp.K1 / (sp.B1 - std::sqrt(disc));
    }
    case Condition::NS2: {
      const double disc = sp.B2 * sp.B2 - 4.0 * sp.K2;
      if (!(dB < 0.0) || disc < 0.0) return false;
      return 2.0 * sp.K2 / (sp.B2 + std::sqrt(disc)) < dK / dB;
    }
    case Condition::NS3:
      return 0.0 <= dB && 4.0 * sp.K2 <= sp.B2 * sp.B2;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Explicit regions

struct GainRegion {
  Condition condition_id = Condition::NS1;
  std::vector<Vec2> vertices;  // (k_f, b_f), counter-clockwise
  double area = 0.0;
  // Lower/upper boundary chains, both ordered by increasing k_f. Every
  // vertical section of the region is an interval between them.
  std::vector<Vec2> lower, upper;

  bool empty() const { return vertices.empty(); }

  // b_f interval of the region at k_f, if k_f is within its extent.
  std::optional<std::pair<double, double>> section(double kf) const {
    if (lower.empty() || kf < lower.front().x() || kf > lower.back().x()) return std::nullopt;
    auto interp = [kf](const std::vector<Vec2>& c) {
      if (c.size() == 1) return c.front().y();
      auto it = std::lower_bound(c.begin(), c.end(), kf,
                                 [](const Vec2& p, double v) { return p.x() < v; });
      if (it == c.begin()) return it->y();
      if (it == c.end()) return c.back().y();
      const Vec2& b = *it;
      const Vec2& a = *(it - 1);
      if (b.x() == a.x()) return std::max(a.y(), b.y());
      return a.y() + (b.y() - a.y()) * (kf - a.x()) / (b.x() - a.x());
    };
    return std::pair{interp(lower), interp(upper)};
  }

  bool contains(double kf, double bf) const {
    const auto s = section(kf);
    return s && bf >= s->first && bf <= s->second;
  }

  // Area centroid, moved onto the vertical section when the (possibly
  // slightly non-convex) polygon does not contain it.
  std::optional<Vec2> center() const {
    if (empty()) return std::nullopt;
    Vec2 c = geom::centroid(vertices);
    if (const auto s = section(c.x())) {
      if (!(c.y() >= s->first && c.y() <= s->second)) c.y() = 0.5 * (s->first + s->second);
    }
    return c;
  }
};

struct ExplicitOptions {
  int support_points = 32;      // initial uniform k_f samples (segments)
  double rel_eps = 1e-9;        // inward margin on strict analytic bounds
  int bisection_iters = 40;
};

namespace detail {

// Interval endpoint tagged with the identity of the bound that produced it.
struct Ep {
  double v;
  int id;
};
struct Iv {
  Ep lo, hi;
};
using IvSet = std::vector<Iv>;

enum BoundId : int {
  kBoxLo = 0,
  kBoxHi,
  kDeltaB,      // b_f = k_d - (1+k_f) b_e        (B1 = B2)
  kNs1Line,     // ratio bound of NS1
  kOverdamped,  // b_f = -b_e(1+k_f) + 2 sqrt(m k_e (1+k_f))  (B2^2 = 4 K2)
  kLhsZero,     // sign change of the NS2 squared inequality's left side
  kRootA,       // roots of the squared NS2 inequality
  kRootB,
  kNoLower = 100,
  kNoUpper,
};

inline bool curved(int id) { return id == kOverdamped || id == kLhsZero; }

inline IvSet clip(const IvSet& s, const Ep& lo, const Ep& hi) {
  IvSet out;
  for (const Iv& iv : s) {
    Iv r = iv;
    if (lo.v > r.lo.v) r.lo = lo;
    if (hi.v < r.hi.v) r.hi = hi;
    if (r.lo.v <= r.hi.v) out.push_back(r);
  }
  return out;
}

// Section of a no-switching region at fixed k_f, as b_f intervals.
inline IvSet section(Condition c, const LoopParams& p, const GainBox& box, double kf,
                     double rel_eps) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double m = p.m_t;
  const double u = 1.0 + kf;
  const double K1 = p.k_p / m, B1 = p.k_d / m, K2 = u * p.k_e / m;
  const bool gate = 4.0 * m * p.k_p <= p.k_d * p.k_d;
  auto to_bf = [&](double x) { return m * x - u * p.b_e; };  // B2 -> b_f
  auto shrink_lo = [&](double v) { return v + rel_eps * std::max(1.0, std::abs(v)); };
  auto shrink_hi = [&](double v) { return v - rel_eps * std::max(1.0, std::abs(v)); };

  const double delta_b = p.k_d - u * p.b_e;
  const double overdamped = -u * p.b_e + 2.0 * std::sqrt(m * p.k_e * u);

  IvSet s{{{-inf, kNoLower}, {inf, kNoUpper}}};
  switch (c) {
    case Condition::NS1: {
      if (!gate) return {};
      const double C = 2.0 * p.k_p / (p.k_d - std::sqrt(p.k_d * p.k_d - 4.0 * m * p.k_p));
      const double line = delta_b + (u * p.k_e - p.k_p) / C;
      s = clip(s, {shrink_lo(delta_b), kDeltaB}, {inf, kNoUpper});
      s = clip(s, {shrink_lo(line), kNs1Line}, {inf, kNoUpper});
      break;
    }
    case Condition::NS2: {
      // Third inequality, (K1+K2)B2 - 2B1K2 < (K2-K1) sqrt(B2^2-4K2), as a
      // set in x = B2. Its left side is negative for x < h.
      const double h = 2.0 * B1 * K2 / (K1 + K2);
      IvSet third;
      const Ep h_hi{shrink_hi(to_bf(h)), kLhsZero};
      if (gate && K2 != K1) {
        const double sq = std::sqrt(B1 * B1 - 4.0 * K1);
        const double Cl = (B1 - sq) / (2.0 * K1), Cu = (B1 + sq) / (2.0 * K1);
        double ra = K1 * Cl + K2 * Cu, rb = K1 * Cu + K2 * Cl;
        if (ra > rb) std::swap(ra, rb);
        if (K2 > K1) {
          // x < h, or h <= x inside the squared band (ra, rb).
          third.push_back({{-inf, kNoLower}, h_hi});
          // At x = h the left side is zero and the right side positive, so
          // a band starting at or below h joins the first piece.
          if (ra <= h) {
            if (h < rb) third.front().hi = {shrink_hi(to_bf(rb)), kRootB};
          } else if (ra < rb) {
            third.push_back({{shrink_lo(to_bf(ra)), kRootA}, {shrink_hi(to_bf(rb)), kRootB}});
          }
        } else {
          // Right side is non-positive: need x < h and outside [ra, rb].
          third.push_back({{-inf, kNoLower}, h < ra ? h_hi : Ep{shrink_hi(to_bf(ra)), kRootA}});
          if (rb < h) third.push_back({{shrink_lo(to_bf(rb)), kRootB}, h_hi});
        }
      } else {
        third.push_back({{-inf, kNoLower}, h_hi});
      }
      s = third;
      s = clip(s, {shrink_lo(delta_b), kDeltaB}, {inf, kNoUpper});
      s = clip(s, {overdamped, kOverdamped}, {inf, kNoUpper});
      break;
    }
    case Condition::NS3:
      s = clip(s, {overdamped, kOverdamped}, {delta_b, kDeltaB});
      break;
  }
  return clip(s, {box.bf_min, kBoxLo}, {box.bf_max, kBoxHi});
}

struct Sample {
  double kf;
  IvSet ivs;
};

inline bool same_structure(const IvSet& a, const IvSet& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].lo.id != b[i].lo.id || a[i].hi.id != b[i].hi.id) return false;
  return true;
}

}  // namespace detail

// Stable gain region for one no-switching condition, computed from the
// explicit b_f bounds at each k_f. Between structural events (a bound
// becoming active/inactive, the region starting or ending) the boundary is
// interpolated linearly; curved bounds are offset inward by their maximum
// chord deviation so the polygon never contains a gain the raw conditions
// reject. When the feasible set splits, the largest connected piece is
// returned.
inline GainRegion region_explicit(Condition c, const LoopParams& p, const GainBox& box,
                                  const ExplicitOptions& opt = {}) {
  GainRegion region;
  region.condition_id = c;
  if (!box.valid()) throw std::invalid_argument("region_explicit: invalid box");

  auto sec = [&](double kf) { return detail::section(c, p, box, kf, opt.rel_eps); };

  const int n = box.kf_max > box.kf_min ? std::max(1, opt.support_points) : 0;
  const double h = n > 0 ? (box.kf_max - box.kf_min) / n : 0.0;

  std::vector<detail::Sample> samples;
  samples.reserve(static_cast<std::size_t>(n) + 8);
  auto kf_at = [&](int j) { return j == n ? box.kf_max : box.kf_min + j * h; };
  samples.push_back({kf_at(0), sec(kf_at(0))});
  for (int j = 1; j <= n; ++j) {
    detail::Sample next{kf_at(j), sec(kf_at(j))};
    detail::Sample a = samples.back();
    // Locate every structural change in (a, next) by bisection.
    while (!detail::same_structure(a.ivs, next.ivs)) {
      double lo = a.kf, hi = next.kf;
      detail::IvSet hi_ivs = next.ivs, lo_ivs = a.ivs;
      for (int it = 0; it < opt.bisection_iters && hi - lo > 1e-13 * (1.0 + hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        detail::IvSet m = sec(mid);
        if (detail::same_structure(m, a.ivs)) {
          lo = mid;
          lo_ivs = std::move(m);
        } else {
          hi = mid;
          hi_ivs = std::move(m);
        }
      }
      if (lo > a.kf) samples.push_back({lo, lo_ivs});
      if (hi < next.kf) {
        samples.push_back({hi, hi_ivs});
        a = samples.back();
      } else {
        break;
      }
    }
    samples.push_back(std::move(next));
  }

  // Inward offset covering the chord error of the concave bounds.
  double curv = 0.0;
  {
    const double u0 = 1.0 + box.kf_min;
    const double g2 = 0.5 * std::sqrt(p.m_t * p.k_e) * std::pow(u0, -1.5);
    const double den = p.k_p + p.k_e * u0;
    const double h2 = 4.0 * p.k_d * p.k_p * p.k_e * p.k_e / (den * den * den);
    curv = std::max(g2, h2);
  }
  const double sag = curv * h * h / 8.0;

  // Chain consecutive samples with identical structure into pieces.
  struct Piece {
    std::vector<Vec2> lower, upper;
  };
  std::vector<Piece> pieces;
  std::vector<int> open;  // index into pieces per interval slot, -1 if none
  const detail::IvSet* prev = nullptr;
  for (const detail::Sample& s : samples) {
    const bool continues =
        prev && prev->size() == s.ivs.size() && !s.ivs.empty();
    if (!continues) open.assign(s.ivs.size(), -1);
    for (std::size_t k = 0; k < s.ivs.size(); ++k) {
      if (!continues || open[k] < 0) {
        pieces.emplace_back();
        open[k] = static_cast<int>(pieces.size()) - 1;
      }
      const detail::Iv& iv = s.ivs[k];
      double lo = iv.lo.v + (detail::curved(iv.lo.id) ? sag : 0.0);
      double hi = iv.hi.v - (detail::curved(iv.hi.id) ? sag : 0.0);
      if (lo > hi) lo = hi = 0.5 * (iv.lo.v + iv.hi.v);
      Piece& pc = pieces[static_cast<std::size_t>(open[k])];
      pc.lower.emplace_back(s.kf, lo);
      pc.upper.emplace_back(s.kf, hi);
    }
    prev = &s.ivs;
  }

  const Piece* best = nullptr;
  double best_area = -1.0;
  std::vector<Vec2> best_poly;
  for (const Piece& pc : pieces) {
    std::vector<Vec2> poly;
    for (const Vec2& v : pc.lower) poly.push_back(v);
    for (auto it = pc.upper.rbegin(); it != pc.upper.rend(); ++it) poly.push_back(*it);
    std::vector<Vec2> dedup;
    for (const Vec2& v : poly)
      if (dedup.empty() || (v - dedup.back()).norm() > 1e-15) dedup.push_back(v);
    while (dedup.size() > 1 && (dedup.front() - dedup.back()).norm() <= 1e-15) dedup.pop_back();
    const double a = std::abs(geom::signed_area(dedup));
    if (a > best_area) {
      best_area = a;
      best = &pc;
      best_poly = std::move(dedup);
    }
  }
  if (best) {
    region.vertices = std::move(best_poly);
    region.area = best_area;
    region.lower = best->lower;
    region.upper = best->upper;
  }
  return region;
}

// ---------------------------------------------------------------------------
// Grid search

struct GridBitmap {
  int N = 0;
  GainBox box;
  std::vector<char> bits;  // row-major: row = b_f index, column = k_f index

  int side() const { return N + 1; }
  double kf(int i) const { return box.kf_min + (box.kf_max - box.kf_min) * i / N; }
  double bf(int j) const { return box.bf_min + (box.bf_max - box.bf_min) * j / N; }
  bool at(int i, int j) const { return bits[static_cast<std::size_t>(j) * side() + i] != 0; }
  std::size_t count() const { return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), 1)); }
};

inline GridBitmap region_grid(Condition c, const LoopParams& p, const GainBox& box, int N) {
  if (N < 1) throw std::invalid_argument("region_grid: N < 1");
  GridBitmap g;
  g.N = N;
  g.box = box;
  g.bits.assign(static_cast<std::size_t>(N + 1) * (N + 1), 0);
  for (int j = 0; j <= N; ++j) {
    const double bf = g.bf(j);
    for (int i = 0; i <= N; ++i) {
      g.bits[static_cast<std::size_t>(j) * (N + 1) + i] =
          check_no_switch(c, switched_params(p, g.kf(i), bf)) ? 1 : 0;
    }
  }
  return g;
}

// Rasterizes a region on the same grid layout as region_grid.
inline GridBitmap rasterize(const GainRegion& r, const GainBox& box, int N) {
  GridBitmap g;
  g.N = N;
  g.box = box;
  g.bits.assign(static_cast<std::size_t>(N + 1) * (N + 1), 0);
  for (int j = 0; j <= N; ++j)
    for (int i = 0; i <= N; ++i)
      g.bits[static_cast<std::size_t>(j) * (N + 1) + i] = r.contains(g.kf(i), g.bf(j)) ? 1 : 0;
  return g;
}

// ---------------------------------------------------------------------------
// Finite-switching contraction

// Which printed form to use; only Corrected agrees with trajectories.
enum class LambdaReading { Corrected, PrintedExponent, PrintedRepeatedRoot };

struct LambdaPair {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double product = 1.0;
  bool degenerate = false;  // identical modes: no switching direction
};

inline constexpr double kRepeatedRootTol = 1e-9;

// Lambda_i for mode i in {1, 2}. Lambda_2 is the amplitude at which a unit
// state on the e-axis first reaches the line dK*e + dB*e' = 0 under A_2;
// Lambda_1 is the gain from that line to the e-axis under A_1.
inline double lambda_mode(int i, double K, double B, double dK, double dB,
                          LambdaReading reading = LambdaReading::Corrected) {
  const double L = std::hypot(dK, dB);
  const double sgn = (i % 2 == 0) ? 1.0 : -1.0;  // (-1)^i
  const double disc = B * B - 4.0 * K;
  if (std::abs(disc) <= kRepeatedRootTol * B * B) {
    if (reading == LambdaReading::PrintedRepeatedRoot)
      return std::abs(B * L / (2.0 * dK - B * dB));
    const double lam = -B / 2.0;
    const double t = dK / (lam * dK + K * dB);
    const double M = std::exp(lam * t) * std::hypot(1.0 - lam * t, K * t);
    return std::pow(M, sgn);
  }
  if (disc < 0.0) {
    const double w = 0.5 * std::sqrt(-disc);
    const double Q = B * dK - 2.0 * K * dB;
    const double amp = std::sqrt(dK * dK / (L * L) + Q * Q / (4.0 * w * w * L * L));
    const double pre = (K / w) / amp;
    double phi = std::fmod(-std::atan(sgn * 2.0 * w * dK / Q), kPi);
    if (phi < 0.0) phi += kPi;
    const double expo = reading == LambdaReading::PrintedExponent ? B / (2.0 * w) * phi
                                                                  : -B / (2.0 * w) * phi;
    return std::pow(pre, sgn) * std::exp(expo);
  }
  const double sq = std::sqrt(disc);
  const double la = (-B - sq) / 2.0, lb = (-B + sq) / 2.0;
  const double ta = std::abs((dK * lb + K * dB) / (K * L));
  const double tb = std::abs((dK * la + K * dB) / (K * L));
  return std::pow(ta, sgn * la / (lb - la)) * std::pow(tb, sgn * lb / (la - lb));
}

inline LambdaPair lambda_pair(const SwitchedParams& sp,
                              LambdaReading reading = LambdaReading::Corrected) {
  LambdaPair r;
  const double dK = sp.dK(), dB = sp.dB();
  if (dK == 0.0 && dB == 0.0) {
    r.degenerate = true;
    return r;
  }
  r.lambda1 = lambda_mode(1, sp.K1, sp.B1, dK, dB, reading);
  r.lambda2 = lambda_mode(2, sp.K2, sp.B2, dK, dB, reading);
  r.product = r.lambda1 * r.lambda2;
  return r;
}

// ---------------------------------------------------------------------------
// Pattern search

struct PatternOptions {
  double initial_fraction = 0.25;  // of box width per axis
  double stop_fraction = 1e-4;
  int max_iterations = 10000;
};

struct PatternResult {
  double kf = 0.0, bf = 0.0;
  double value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
};

// Coordinate pattern search on the box: poll +-step along each axis, move
// to the best improving poll, halve both steps when no poll improves.
// Non-finite objective values never count as improvements.
template <typename F>
PatternResult pattern_search(F&& f, const GainBox& box, Vec2 seed,
                             const PatternOptions& opt = {}) {
  const double wk = box.kf_max - box.kf_min, wb = box.bf_max - box.bf_min;
  auto eval = [&](double kf, double bf) {
    const double v = f(kf, bf);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  PatternResult r;
  r.kf = std::clamp(seed.x(), box.kf_min, box.kf_max);
  r.bf = std::clamp(seed.y(), box.bf_min, box.bf_max);
  r.value = eval(r.kf, r.bf);
  r.evaluations = 1;
  double sk = opt.initial_fraction * wk, sb = opt.initial_fraction * wb;
  for (int it = 0; it < opt.max_iterations; ++it) {
    if (sk < opt.stop_fraction * wk + 1e-300 && sb < opt.stop_fraction * wb + 1e-300) break;
    const std::array<Vec2, 4> polls{Vec2{r.kf + sk, r.bf}, Vec2{r.kf - sk, r.bf},
                                    Vec2{r.kf, r.bf + sb}, Vec2{r.kf, r.bf - sb}};
    double best = r.value;
    Vec2 best_pt{r.kf, r.bf};
    for (const Vec2& q0 : polls) {
      const Vec2 q{std::clamp(q0.x(), box.kf_min, box.kf_max),
                   std::clamp(q0.y(), box.bf_min, box.bf_max)};
      if (q.x() == r.kf && q.y() == r.bf) continue;
      const double v = eval(q.x(), q.y());
      ++r.evaluations;
      if (v < best) {
        best = v;
        best_pt = q;
      }
    }
    if (best < r.value) {
      r.value = best;
      r.kf = best_pt.x();
      r.bf = best_pt.y();
    } else {
      sk *= 0.5;
      sb *= 0.5;
    }
  }
  return r;
}

using ProductFn = std::function<double(const SwitchedParams&)>;

// Finite-switching cost: contraction product plus normalized distance from
// the box centre.
inline double cost_J(const LoopParams& p, const GainBox& box, double kf, double bf,
                     const ProductFn& product = {}) {
  const SwitchedParams sp = switched_params(p, kf, bf);
  const double lam = product ? product(sp) : lambda_pair(sp).product;
  const double wk = box.kf_max - box.kf_min, wb = box.bf_max - box.bf_min;
  const double tk = wk > 0 ? 2.0 / wk * (kf - box.kf_mid()) : 0.0;
  const double tb = wb > 0 ? 2.0 / wb * (bf - box.bf_mid()) : 0.0;
  return lam + tk * tk + tb * tb;
}

inline std::vector<Vec2> default_seeds(const GainBox& box) {
  return {{box.kf_mid(), box.bf_mid()},
          {box.kf_min, box.bf_min},
          {box.kf_max, box.bf_min},
          {box.kf_min, box.bf_max},
          {box.kf_max, box.bf_max}};
}

inline PatternResult pattern_search_J(const LoopParams& p, const GainBox& box,
                                      const std::vector<Vec2>& seeds,
                                      const ProductFn& product = {},
                                      const PatternOptions& opt = {}) {
  PatternResult best;
  for (const Vec2& s : seeds) {
    PatternResult r = pattern_search(
        [&](double kf, double bf) { return cost_J(p, box, kf, bf, product); }, box, s, opt);
    if (best.evaluations == 0 || r.value < best.value) {
      const int evals = best.evaluations + r.evaluations;
      best = r;
      best.evaluations = evals;
    } else {
      best.evaluations += r.evaluations;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Scheduling procedure

enum class Provenance { NSCentroid, PatternSearch, Fallback };

inline const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::NSCentroid: return "NS-centroid";
    case Provenance::PatternSearch: return "PatternSearch";
    case Provenance::Fallback: return "Fallback";
  }
  return "?";
}

struct ScheduleOptions {
  ExplicitOptions explicit_options;
  PatternOptions pattern_options;
  ProductFn product;  // overrides the contraction product (testing)
};

struct ScheduleResult {
  double k_f = 0.0, b_f = 0.0;
  Provenance provenance = Provenance::Fallback;
  std::optional<Condition> condition;  // set for NS-centroid
  double lambda_product = std::numeric_limits<double>::quiet_NaN();
};

// 1) explicit regions for the three no-switching conditions; 2) centroid of
// the largest (ties NS3 > NS2 > NS1); 3) otherwise minimize the
// finite-switching cost, accepted when the contraction product is below 1;
// 4) otherwise (k_f,min, k_d), clamped to the box.
inline ScheduleResult schedule(double k_p, double k_d, double k_e_hat, double b_e_hat,
                               double m_bar, const GainBox& box,
                               const ScheduleOptions& opt = {}) {
  const LoopParams p{k_p, k_d, k_e_hat, b_e_hat, m_bar};
  std::vector<GainRegion> regions;
  for (Condition c : {Condition::NS3, Condition::NS2, Condition::NS1})
    regions.push_back(region_explicit(c, p, box, opt.explicit_options));
  std::stable_sort(regions.begin(), regions.end(),
                   [](const GainRegion& a, const GainRegion& b) { return a.area > b.area; });

  for (const GainRegion& r : regions) {
    if (r.empty()) continue;
    const auto c = r.center();
    if (!c) continue;
    const double kf = std::clamp(c->x(), box.kf_min, box.kf_max);
    const double bf = std::clamp(c->y(), box.bf_min, box.bf_max);
    // Slivers narrower than the numerical margin can put the centre on the
    // boundary; certify before accepting.
    if (!check_no_switch(r.condition_id, switched_params(p, kf, bf))) continue;
    ScheduleResult out{kf, bf, Provenance::NSCentroid, r.condition_id};
    out.lambda_product = lambda_pair(switched_params(p, kf, bf)).product;
    return out;
  }

  const PatternResult ps =
      pattern_search_J(p, box, default_seeds(box), opt.product, opt.pattern_options);
  if (std::isfinite(ps.value)) {
    const SwitchedParams sp = switched_params(p, ps.kf, ps.bf);
    const double lam = opt.product ? opt.product(sp) : lambda_pair(sp).product;
    if (std::isfinite(lam) && lam < 1.0) {
      return {ps.kf, ps.bf, Provenance::PatternSearch, std::nullopt, lam};
    }
  }
  ScheduleResult fb{box.kf_min, std::clamp(k_d, box.bf_min, box.bf_max), Provenance::Fallback,
                    std::nullopt};
  fb.lambda_product = lambda_pair(switched_params(p, fb.k_f, fb.b_f)).product;
  return fb;
}

}  // namespace uam
