#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <safegain/errors.hpp>
#include <safegain/report.hpp>

namespace safegain {

inline constexpr double kInversionTol = 1e-10;
inline constexpr int kMaxBracketDoublings = 200;
inline constexpr int kMaxBisectionSteps = 200;

enum class GainDomain { NonNegative, Extended };

/*!
  A scalar comparison function: strictly increasing with value 0 at 0.

  Linear and piecewise-linear kinds are the workhorses (class K-infinity on
  [0, inf) or extended class K-infinity on R, depending on `domain`). Custom
  wraps an arbitrary evaluable map; it is the caller's job to supply one that
  is actually increasing, and check_extended_kinf() is the sampled validator
  for that claim.

  Piecewise-linear gains extrapolate with the first/last segment slope, which
  keeps them unbounded (class K-infinity needs that).

  Immutable after construction; safe to share across threads.
*/
class GainFn {
 public:
  static GainFn linear(double slope, GainDomain domain = GainDomain::Extended) {
    if (!(slope > 0.0) || !std::isfinite(slope))
      throw std::invalid_argument("GainFn::linear: slope must be positive and finite");
    GainFn g;
    g.kind_ = Kind::Linear;
    g.domain_ = domain;
    g.slope_ = slope;
    char buf[48];
    std::snprintf(buf, sizeof buf, "linear(%g)", slope);
    g.label_ = buf;
    return g;
  }

  //! Knots are (s, value) pairs, strictly increasing in both coordinates,
  //! and must contain (0, 0) exactly.
  static GainFn piecewise_linear(std::vector<std::pair<double, double>> knots,
                                 GainDomain domain = GainDomain::Extended) {
    if (knots.size() < 2)
      throw std::invalid_argument("GainFn::piecewise_linear: need at least two knots");
    bool has_origin = false;
    for (std::size_t i = 0; i < knots.size(); ++i) {
      if (!std::isfinite(knots[i].first) || !std::isfinite(knots[i].second))
        throw std::invalid_argument("GainFn::piecewise_linear: non-finite knot");
      if (i > 0 && !(knots[i].first > knots[i - 1].first && knots[i].second > knots[i - 1].second))
        throw std::invalid_argument(
            "GainFn::piecewise_linear: knots must be strictly increasing in both coordinates");
      if (knots[i].first == 0.0 && knots[i].second == 0.0) has_origin = true;
    }
    if (!has_origin)
      throw std::invalid_argument("GainFn::piecewise_linear: knots must contain (0, 0)");
    if (domain == GainDomain::NonNegative && knots.front().first < 0.0)
      throw std::invalid_argument("GainFn::piecewise_linear: negative knot in NonNegative domain");
    GainFn g;
    g.kind_ = Kind::Pwl;
    g.domain_ = domain;
    g.knots_ = std::move(knots);
    g.label_ = "pwl";
    return g;
  }

  static GainFn custom(std::function<double(double)> map, GainDomain domain,
                       std::string label = "custom") {
    if (!map) throw std::invalid_argument("GainFn::custom: empty map");
    GainFn g;
    g.kind_ = Kind::Custom;
    g.domain_ = domain;
    g.map_ = std::move(map);
    g.label_ = std::move(label);
    return g;
  }

  //! The identically-zero map. Not a class-K function; exists for cascade
  //! interconnections where one coupling gain vanishes.
  static GainFn zero() {
    return custom([](double) { return 0.0; }, GainDomain::Extended, "zero");
  }

  double operator()(double s) const {
    if (domain_ == GainDomain::NonNegative && s < 0.0)
      throw DomainError("gain '" + label_ + "' evaluated at negative argument");
    switch (kind_) {
      case Kind::Linear:
        return slope_ * s;
      case Kind::Pwl:
        return eval_pwl(s);
      case Kind::Custom:
        return map_(s);
    }
    return 0.0;  // unreachable
  }

  GainDomain domain() const noexcept { return domain_; }
  bool is_linear() const noexcept { return kind_ == Kind::Linear; }
  bool is_zero() const noexcept { return kind_ == Kind::Custom && label_ == "zero"; }

  double slope() const {
    if (kind_ != Kind::Linear) throw std::logic_error("GainFn::slope: not a linear gain");
    return slope_;
  }

  const std::string& label() const noexcept { return label_; }

 private:
  GainFn() = default;

  double eval_pwl(double s) const {
    const auto& kn = knots_;
    if (s <= kn.front().first) {
      const double m = segment_slope(0);
      return kn.front().second + (s - kn.front().first) * m;
    }
    if (s >= kn.back().first) {
      const double m = segment_slope(kn.size() - 2);
      return kn.back().second + (s - kn.back().first) * m;
    }
    // first knot with knot.s > s; segment is [it-1, it]
    auto it = std::upper_bound(kn.begin(), kn.end(), s,
                               [](double v, const std::pair<double, double>& k) { return v < k.first; });
    const std::size_t i = static_cast<std::size_t>(it - kn.begin()) - 1;
    const double m = segment_slope(i);
    return kn[i].second + (s - kn[i].first) * m;
  }

  double segment_slope(std::size_t i) const {
    return (knots_[i + 1].second - knots_[i].second) / (knots_[i + 1].first - knots_[i].first);
  }

  enum class Kind { Linear, Pwl, Custom };
  Kind kind_ = Kind::Linear;
  GainDomain domain_ = GainDomain::Extended;
  double slope_ = 1.0;
  std::vector<std::pair<double, double>> knots_;
  std::function<double(double)> map_;
  std::string label_;
};

/*!
  A composition tree over gains.

  Nodes:
    Leaf(g)              g(s)
    Compose(f, g)        f(g(s))
    IdPlus(g)            s + g(s)
    Inverse(g)           the functional inverse, resolved numerically
    NegateReflect(g)     -g(-s)

  Inverse nodes are evaluated by bracketed bisection (geometric bracket
  expansion from 0, then bisection to a value tolerance). Trees are immutable
  and share subtrees; copying is cheap.
*/
class GainExpr {
 public:
  /*implicit*/ GainExpr(const GainFn& fn) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Leaf;
    n->fn = std::make_shared<const GainFn>(fn);
    node_ = std::move(n);
  }

  static GainExpr leaf(GainFn fn) { return GainExpr(fn); }

  static GainExpr compose(GainExpr outer, GainExpr inner) {
    return make(Kind::Compose, std::move(outer.node_), std::move(inner.node_));
  }

  static GainExpr id_plus(GainExpr g) { return make(Kind::IdPlus, std::move(g.node_), nullptr); }

  static GainExpr inverse(GainExpr g) { return make(Kind::Inverse, std::move(g.node_), nullptr); }

  static GainExpr negate_reflect(GainExpr g) {
    return make(Kind::NegateReflect, std::move(g.node_), nullptr);
  }

  double operator()(double s) const { return eval(s, kInversionTol); }

  double eval(double s, double inversion_tol) const { return eval_node(*node_, s, inversion_tol); }

 private:
  enum class Kind { Leaf, Compose, IdPlus, Inverse, NegateReflect };

  struct Node {
    Kind kind = Kind::Leaf;
    std::shared_ptr<const GainFn> fn;  // Leaf only
    std::shared_ptr<const Node> a;     // child (outer for Compose)
    std::shared_ptr<const Node> b;     // inner child for Compose
  };

  explicit GainExpr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  static GainExpr make(Kind k, std::shared_ptr<const Node> a, std::shared_ptr<const Node> b) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return GainExpr(std::shared_ptr<const Node>(std::move(n)));
  }

  static double eval_node(const Node& n, double s, double tol);

  std::shared_ptr<const Node> node_;
};

/*!
  Solves g(s) = y for a strictly increasing g.

  The bracket starts with width 1 on the side of 0 suggested by the sign of
  y - g(0) and doubles geometrically (at most kMaxBracketDoublings times)
  until it contains y; bisection then refines until |g(s) - y| <= tol.

  Throws BracketError if the bracket cannot be expanded to contain y, and
  NonMonotoneError if sampled values violate the ordering an increasing map
  must satisfy.
*/
inline double invert(const GainExpr& g, double y, double tol = kInversionTol) {
  if (!(tol > 0.0)) throw std::invalid_argument("invert: tol must be positive");
  // For tiny targets the requested absolute tolerance would leave a large
  // relative error, so tighten toward a relative band; never looser than
  // requested.
  const double tol_eff = std::min(tol, std::max(std::abs(y) * 1e-12, 1e-15));
  // Inner Inverse nodes must resolve tighter than the outer target.
  const double eval_tol = std::max(tol_eff * 0.25, 1e-15);
  const auto f = [&](double s) { return g.eval(s, eval_tol); };

  const double g0 = f(0.0);
  if (std::abs(g0 - y) <= tol_eff) return 0.0;

  double lo, hi, glo, ghi;
  if (y > g0) {
    lo = 0.0;
    glo = g0;
    hi = 1.0;
    ghi = f(hi);
    int doublings = 0;
    while (ghi < y) {
      if (++doublings > kMaxBracketDoublings)
        throw BracketError("invert: bracket expansion exhausted without containing target");
      lo = hi;
      const double prev = ghi;
      hi *= 2.0;
      ghi = f(hi);
      if (ghi < prev) throw NonMonotoneError("invert: sampled values decrease on expanding bracket");
      glo = prev;
    }
  } else {
    hi = 0.0;
    ghi = g0;
    lo = -1.0;
    glo = f(lo);
    int doublings = 0;
    while (glo > y) {
      if (++doublings > kMaxBracketDoublings)
        throw BracketError("invert: bracket expansion exhausted without containing target");
      hi = lo;
      const double prev = glo;
      lo *= 2.0;
      glo = f(lo);
      if (glo > prev) throw NonMonotoneError("invert: sampled values decrease on expanding bracket");
      ghi = prev;
    }
  }
  if (glo > ghi) throw NonMonotoneError("invert: bracket endpoints out of order");

  for (int it = 0; it < kMaxBisectionSteps; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gm = f(mid);
    if (std::abs(gm - y) <= tol_eff) return mid;
    if (gm < y)
      lo = mid;
    else
      hi = mid;
    // Argument resolution exhausted: the bracket cannot be split further in
    // double precision, so its midpoint is the best attainable preimage.
    if (hi - lo <= 8.0 * std::numeric_limits<double>::epsilon() *
                       std::max({std::abs(lo), std::abs(hi), 1.0}))
      return 0.5 * (lo + hi);
  }
  throw BracketError("invert: bisection failed to reach tolerance");
}

inline double GainExpr::eval_node(const Node& n, double s, double tol) {
  switch (n.kind) {
    case Kind::Leaf:
      return (*n.fn)(s);
    case Kind::Compose:
      return eval_node(*n.a, eval_node(*n.b, s, tol), tol);
    case Kind::IdPlus:
      return s + eval_node(*n.a, s, tol);
    case Kind::Inverse:
      return invert(GainExpr(n.a), s, tol);
    case Kind::NegateReflect:
      return -eval_node(*n.a, -s, tol);
  }
  return 0.0;  // unreachable
}

//! Evaluation grid for sampled class-K checks: `points` values spanning
//! [-half_width, half_width] (or [0, half_width] for NonNegative gains),
//! always containing 0.
inline std::vector<double> default_validation_grid(GainDomain domain, double half_width = 100.0,
                                                   std::size_t points = 257) {
  std::vector<double> grid;
  if (domain == GainDomain::Extended) {
    grid.reserve(points);
    const std::size_t n = points - 1;  // even so that the midpoint is 0
    for (std::size_t i = 0; i <= n; ++i)
      grid.push_back(-half_width + 2.0 * half_width * static_cast<double>(i) / static_cast<double>(n));
    grid[n / 2] = 0.0;
  } else {
    const std::size_t n = points / 2;
    grid.reserve(n + 1);
    for (std::size_t i = 0; i <= n; ++i)
      grid.push_back(half_width * static_cast<double>(i) / static_cast<double>(n));
    grid[0] = 0.0;
  }
  return grid;
}

/*!
  Sampled (extended) class K-infinity check on a sorted grid containing 0:
  strict increase across adjacent grid points, |g(0)| <= 1e-12, and a
  bounded-growth heuristic at the top of the grid. Findings are collected
  in the report; nothing throws.
*/
inline ValidationReport check_extended_kinf(const GainExpr& g, std::span<const double> grid) {
  ValidationReport report;
  report.subject = "extended class K-infinity check";
  if (grid.size() < 2) {
    report.add_violation(0.0, 0.0, "grid has fewer than 2 points");
    return report;
  }

  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) values[i] = g(grid[i]);
  report.samples = grid.size();

  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (!(values[i + 1] > values[i])) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "not strictly increasing: g(%.6g)=%.6g, g(%.6g)=%.6g",
                    grid[i], values[i], grid[i + 1], values[i + 1]);
      report.add_violation(values[i + 1] - values[i], grid[i], buf);
    }
  }

  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] == 0.0) {
      if (std::abs(values[i]) > 1e-12) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "value at 0 is %.6g (expected 0)", values[i]);
        report.add_violation(-std::abs(values[i]), 0.0, buf);
      }
      break;
    }
  }

  const double top = grid.back();
  if (top > 0.0) {
    const double at_top = std::abs(g(top));
    const double at_half = std::abs(g(top / 2.0));
    if (at_top < at_half * 1.5) {
      char buf[128];
      std::snprintf(buf, sizeof buf,
                    "bounded-growth suspicion: |g(%.6g)|=%.6g < 1.5*|g(%.6g)|=%.6g", top, at_top,
                    top / 2.0, 1.5 * at_half);
      report.add_violation(at_top - 1.5 * at_half, top, buf);
    }
  }
  return report;
}

inline ValidationReport check_extended_kinf(const GainExpr& g) {
  // Default grid spans both signs; callers with NonNegative gains should pass
  // default_validation_grid(GainDomain::NonNegative).
  const auto grid = default_validation_grid(GainDomain::Extended);
  return check_extended_kinf(g, grid);
}

inline ValidationReport check_extended_kinf(const GainFn& g) {
  const auto grid = default_validation_grid(g.domain());
  return check_extended_kinf(GainExpr(g), grid);
}

}  // namespace safegain
