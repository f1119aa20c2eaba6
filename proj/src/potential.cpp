#include "oscdrift/potential.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "oscdrift/errors.hpp"

namespace oscdrift {

namespace {

constexpr double kPi = std::numbers::pi;

// Distance from x_n to a: sum_{i>n} (alpha^{i+l} + beta^{i+l}).
double x_tail(double alpha, double beta, int l, int n) {
  return std::pow(alpha, n + l + 1) / (1.0 - alpha) + std::pow(beta, n + l + 1) / (1.0 - beta);
}

// Distance from y_n to a; y_n = x_n + alpha^{n+l+1}.
double y_tail(double alpha, double beta, int l, int n) {
  return std::pow(alpha, n + l + 2) / (1.0 - alpha) + std::pow(beta, n + l + 1) / (1.0 - beta);
}

Piece make_piece(double lo, double hi, double width, PieceKind kind, double amplitude,
                 double phase = 0.0) {
  return Piece{lo, hi, width, kind, amplitude, phase};
}

// Left pieces cover [0, a); the result appends the zero piece [a, b] and the
// mirror image of the left pieces on (b, 1].
std::vector<Piece> symmetric_pieces(std::vector<Piece> left, double a, double b) {
  std::vector<Piece> out = std::move(left);
  const std::size_t n_left = out.size();
  out.push_back(make_piece(a, b, b - a, PieceKind::Zero, 0.0));
  for (std::size_t i = n_left; i-- > 0;) {
    out.push_back(out[i].mirrored());
  }
  return out;
}

std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw Error(ErrorKind::ParseError, "bad number '" + s + "'");
  }
  return v;
}

PieceKind parse_kind(const std::string& s) {
  if (s == "zero") return PieceKind::Zero;
  if (s == "const") return PieceKind::Constant;
  if (s == "cosd") return PieceKind::CosineDown;
  if (s == "cosu") return PieceKind::CosineUp;
  if (s == "lin") return PieceKind::Linear;
  throw Error(ErrorKind::ParseError, "unknown piece kind '" + s + "'");
}

}  // namespace

// ---------------------------------------------------------------- StepParams

double derive_delta(double a, double alpha, double beta, int l) {
  const double delta = a - x_tail(alpha, beta, l, 0);
  if (!(delta > 0.0)) {
    std::ostringstream msg;
    msg << "geometric tails exceed a (a=" << a << ", alpha=" << alpha << ", beta=" << beta
        << ", l=" << l << ")";
    throw Error(ErrorKind::NonPositiveDelta, msg.str());
  }
  return delta;
}

StepParams StepParams::make(double a, double h, double alpha, double beta, double nu, int l,
                            double kappa) {
  StepParams p;
  p.a = a;
  p.b = 1.0 - a;
  p.h = h;
  p.alpha = alpha;
  p.beta = beta;
  p.nu = nu;
  p.l = l;
  p.kappa = kappa;
  if (!(0.0 < alpha && alpha < beta && beta < 1.0) || l < 0 || !(a > 0.0 && a < 0.5)) {
    throw Error(ErrorKind::InvalidParams, "require 0 < alpha < beta < 1, l >= 0, a in (0, 1/2)");
  }
  p.delta = derive_delta(a, alpha, beta, l);
  p.validate();
  return p;
}

void StepParams::validate() const {
  if (!(0.0 < h && h < alpha && alpha < beta && beta < 1.0 && 1.0 < nu)) {
    throw Error(ErrorKind::InvalidParams, "require 0 < h < alpha < beta < 1 < nu");
  }
  if (l < 0) throw Error(ErrorKind::InvalidParams, "l must be nonnegative");
  if (!(a > 0.0 && a < 0.5)) throw Error(ErrorKind::InvalidParams, "a must lie in (0, 1/2)");
  if (std::abs(a + b - 1.0) > 1e-15) throw Error(ErrorKind::InvalidParams, "a + b must equal 1");
  if (!(kappa > 0.0)) throw Error(ErrorKind::InvalidParams, "kappa must be positive");
  const double expected = a - x_tail(alpha, beta, l, 0);
  if (!(expected > 0.0)) throw Error(ErrorKind::NonPositiveDelta, "geometric tails exceed a");
  if (std::abs(delta - expected) > 1e-14 * std::max(1.0, a)) {
    throw Error(ErrorKind::InvalidParams, "delta inconsistent with a, alpha, beta, l");
  }
}

StepParams StepParams::shifted(int levels, bool paper_style) const {
  StepParams p = *this;
  p.l = l + levels;
  p.delta = derive_delta(a, alpha, beta, p.l);
  if (paper_style) {
    p.h = std::pow(h, levels);
  } else {
    p.kappa = kappa * std::pow(h, levels);
  }
  p.validate();
  return p;
}

Breakpoints breakpoints(const StepParams& params, int levels) {
  Breakpoints bp;
  const auto count = static_cast<std::size_t>(levels + 1);
  bp.x.reserve(count);
  for (int n = 0; n <= levels; ++n) {
    const double xt = x_tail(params.alpha, params.beta, params.l, n);
    const double yt = y_tail(params.alpha, params.beta, params.l, n);
    const double zt = 0.5 * (xt + yt);
    bp.x_tail.push_back(xt);
    bp.y_tail.push_back(yt);
    bp.z_tail.push_back(zt);
    bp.x.push_back(params.a - xt);
    bp.y.push_back(params.a - yt);
    bp.z.push_back(params.a - zt);
  }
  return bp;
}

int retained_levels(const StepParams& params, double min_width, double min_amplitude) {
  int n = 0;
  while (n < 4096 && std::pow(params.alpha, n + params.l + 1) >= min_width &&
         params.kappa * params.nu * std::pow(params.h, n) >= min_amplitude) {
    ++n;
  }
  return n;
}

// --------------------------------------------------------------------- Piece

const char* to_string(PieceKind kind) noexcept {
  switch (kind) {
    case PieceKind::Zero: return "zero";
    case PieceKind::Constant: return "const";
    case PieceKind::CosineDown: return "cosd";
    case PieceKind::CosineUp: return "cosu";
    case PieceKind::Linear: return "lin";
  }
  return "?";
}

double Piece::value(double t) const noexcept {
  switch (kind) {
    case PieceKind::Zero: return 0.0;
    case PieceKind::Constant: return amplitude;
    case PieceKind::CosineDown:
      if (t <= 0.0) return amplitude;
      if (t >= 1.0) return 0.0;
      return 0.5 * amplitude * (1.0 + std::cos(kPi * t));
    case PieceKind::CosineUp:
      if (t <= 0.0) return 0.0;
      if (t >= 1.0) return amplitude;
      return 0.5 * amplitude * (1.0 - std::cos(kPi * t));
    case PieceKind::Linear: return phase + amplitude * t;
  }
  return 0.0;
}

double Piece::slope(double t) const noexcept {
  switch (kind) {
    case PieceKind::Zero:
    case PieceKind::Constant: return 0.0;
    case PieceKind::CosineDown:
      if (t <= 0.0 || t >= 1.0) return 0.0;
      return -0.5 * kPi * amplitude * std::sin(kPi * t);
    case PieceKind::CosineUp:
      if (t <= 0.0 || t >= 1.0) return 0.0;
      return 0.5 * kPi * amplitude * std::sin(kPi * t);
    case PieceKind::Linear: return amplitude;
  }
  return 0.0;
}

double Piece::difference(double t0, double t1) const noexcept {
  t0 = std::clamp(t0, 0.0, 1.0);
  t1 = std::clamp(t1, 0.0, 1.0);
  switch (kind) {
    case PieceKind::Zero:
    case PieceKind::Constant: return 0.0;
    case PieceKind::Linear: return amplitude * (t1 - t0);
    case PieceKind::CosineDown:
    case PieceKind::CosineUp: {
      // cos(pi t1) - cos(pi t0) = -2 sin(pi (t0 + t1) / 2) sin(pi (t1 - t0) / 2)
      const double prod = std::sin(0.5 * kPi * (t0 + t1)) * std::sin(0.5 * kPi * (t1 - t0));
      return kind == PieceKind::CosineDown ? -amplitude * prod : amplitude * prod;
    }
  }
  return 0.0;
}

bool Piece::increasing() const noexcept {
  switch (kind) {
    case PieceKind::CosineDown: return amplitude <= 0.0;
    case PieceKind::CosineUp:
    case PieceKind::Linear: return amplitude >= 0.0;
    default: return true;
  }
}

double Piece::sup_abs() const noexcept {
  if (kind == PieceKind::Linear) return std::max(std::abs(phase), std::abs(phase + amplitude));
  if (kind == PieceKind::Zero) return 0.0;
  return std::abs(amplitude);
}

double Piece::sup_abs_derivative() const noexcept {
  switch (kind) {
    case PieceKind::Zero:
    case PieceKind::Constant: return 0.0;
    case PieceKind::CosineDown:
    case PieceKind::CosineUp: return 0.5 * kPi * std::abs(amplitude) / width;
    case PieceKind::Linear: return std::abs(amplitude) / width;
  }
  return 0.0;
}

Piece Piece::mirrored() const noexcept {
  Piece p = *this;
  p.lo = 1.0 - hi;
  p.hi = 1.0 - lo;
  switch (kind) {
    case PieceKind::CosineDown: p.kind = PieceKind::CosineUp; break;
    case PieceKind::CosineUp: p.kind = PieceKind::CosineDown; break;
    case PieceKind::Linear:
      p.phase = phase + amplitude;
      p.amplitude = -amplitude;
      break;
    default: break;
  }
  return p;
}

Piece Piece::negated() const noexcept {
  Piece p = *this;
  if (kind == PieceKind::Zero) return p;
  p.amplitude = -amplitude;
  if (kind == PieceKind::Linear) p.phase = -phase;
  return p;
}

// -------------------------------------------------------- PiecewisePotential

PiecewisePotential::PiecewisePotential(std::vector<Piece> pieces, PotentialMeta meta,
                                       double offset)
    : pieces_(std::move(pieces)), meta_(std::move(meta)), offset_(offset) {
  if (pieces_.empty()) throw Error(ErrorKind::InvalidParams, "potential has no pieces");
  if (pieces_.front().lo != 0.0 || pieces_.back().hi != 1.0) {
    throw Error(ErrorKind::InvalidParams, "pieces must tile [0, 1]");
  }
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const Piece& p = pieces_[i];
    if (!(p.width > 0.0) || !(p.hi > p.lo)) {
      throw Error(ErrorKind::InvalidParams, "piece " + std::to_string(i) + " is empty");
    }
    if (i > 0 && pieces_[i - 1].hi != p.lo) {
      throw Error(ErrorKind::InvalidParams, "gap or overlap at piece " + std::to_string(i));
    }
  }
}

std::size_t PiecewisePotential::locate(double r) const {
  const auto it = std::upper_bound(pieces_.begin(), pieces_.end(), r,
                                   [](double v, const Piece& p) { return v < p.lo; });
  if (it == pieces_.begin()) return 0;
  return static_cast<std::size_t>(std::distance(pieces_.begin(), it)) - 1;
}

double PiecewisePotential::value(double r) const {
  const Piece& p = pieces_[locate(r)];
  return p.value((r - p.lo) / p.width) + offset_;
}

double PiecewisePotential::derivative(double r) const {
  const Piece& p = pieces_[locate(r)];
  return p.derivative((r - p.lo) / p.width);
}

double PiecewisePotential::max_abs() const {
  double v = 0.0;
  for (const Piece& p : pieces_) v = std::max(v, p.sup_abs());
  return v;
}

double PiecewisePotential::max_abs_derivative() const {
  double v = 0.0;
  for (const Piece& p : pieces_) v = std::max(v, p.sup_abs_derivative());
  return v;
}

double PiecewisePotential::max_value() const {
  double v = -std::numeric_limits<double>::infinity();
  for (const Piece& p : pieces_) v = std::max({v, p.value(0.0), p.value(1.0)});
  return v + offset_;
}

double PiecewisePotential::min_value() const {
  double v = std::numeric_limits<double>::infinity();
  for (const Piece& p : pieces_) v = std::min({v, p.value(0.0), p.value(1.0)});
  return v + offset_;
}

PiecewisePotential PiecewisePotential::shifted(double c) const {
  return PiecewisePotential(pieces_, meta_, offset_ + c);
}

PiecewisePotential PiecewisePotential::scaled(double factor) const {
  std::vector<Piece> out = pieces_;
  for (Piece& p : out) {
    p.amplitude *= factor;
    p.phase = p.kind == PieceKind::Linear ? p.phase * factor : p.phase;
  }
  PotentialMeta meta = meta_;
  meta.origin += "*scaled";
  return PiecewisePotential(std::move(out), std::move(meta), offset_ * factor);
}

// ------------------------------------------------------------- constructions

namespace {

int checked_levels(const StepParams& params, const Truncation& trunc) {
  params.validate();
  return std::min(trunc.max_levels,
                  retained_levels(params, trunc.min_width, trunc.min_amplitude));
}

PotentialMeta cascade_meta(const StepParams& params, int levels, const Breakpoints& bp,
                           std::string origin, bool with_touch) {
  PotentialMeta meta;
  meta.a = params.a;
  meta.b = params.b;
  meta.levels = levels;
  meta.mirrored = true;
  meta.params = params;
  meta.origin = std::move(origin);
  if (with_touch) meta.zero_touch.assign(bp.z.begin(), bp.z.end());
  return meta;
}

}  // namespace

PiecewisePotential step_tilde(const StepParams& params, const Truncation& trunc) {
  const int levels = checked_levels(params, trunc);
  const Breakpoints bp = breakpoints(params, levels);
  const double k = params.kappa;
  std::vector<Piece> left;
  left.push_back(make_piece(0.0, bp.x[0], bp.x[0], PieceKind::Zero, 0.0));
  for (int n = 0; n < levels; ++n) {
    const auto i = static_cast<std::size_t>(n);
    const double hn = std::pow(params.h, n);
    left.push_back(make_piece(bp.x[i], bp.y[i], std::pow(params.alpha, n + params.l + 1),
                              PieceKind::Constant, -k * hn));
    left.push_back(make_piece(bp.y[i], bp.x[i + 1], std::pow(params.beta, n + params.l + 1),
                              PieceKind::Constant, k * params.nu * hn));
  }
  const auto last = static_cast<std::size_t>(levels);
  left.push_back(make_piece(bp.x[last], params.a, bp.x_tail[last], PieceKind::Zero, 0.0));
  return PiecewisePotential(symmetric_pieces(std::move(left), params.a, params.b),
                            cascade_meta(params, levels, bp, "step_tilde", false));
}

PiecewisePotential step_bar(const StepParams& params, const Truncation& trunc) {
  const int levels = checked_levels(params, trunc);
  const Breakpoints bp = breakpoints(params, levels);
  const double k = params.kappa;
  std::vector<Piece> left;
  left.push_back(make_piece(0.0, bp.x[0], bp.x[0], PieceKind::Zero, 0.0));
  for (int n = 1; n <= levels; ++n) {
    const auto i = static_cast<std::size_t>(n - 1);
    const double hn = std::pow(params.h, n);
    left.push_back(make_piece(bp.x[i], bp.y[i], std::pow(params.alpha, n + params.l),
                              PieceKind::Constant, k * hn));
    left.push_back(make_piece(bp.y[i], bp.x[i + 1], std::pow(params.beta, n + params.l),
                              PieceKind::Constant, -k * params.nu * hn));
  }
  const auto last = static_cast<std::size_t>(levels);
  left.push_back(make_piece(bp.x[last], params.a, bp.x_tail[last], PieceKind::Zero, 0.0));
  return PiecewisePotential(symmetric_pieces(std::move(left), params.a, params.b),
                            cascade_meta(params, levels, bp, "step_bar", false));
}

PiecewisePotential smooth_md(const StepParams& params, const Truncation& trunc) {
  const int levels = checked_levels(params, trunc);
  const Breakpoints bp = breakpoints(params, levels);
  const double k = params.kappa * params.nu;
  std::vector<Piece> left;
  left.push_back(make_piece(0.0, bp.x[0], bp.x[0], PieceKind::Constant, k / params.h));
  for (int n = 0; n <= levels; ++n) {
    const auto i = static_cast<std::size_t>(n);
    const double half = 0.5 * std::pow(params.alpha, n + params.l + 1);
    left.push_back(make_piece(bp.x[i], bp.z[i], half, PieceKind::CosineDown,
                              k * std::pow(params.h, n - 1)));
    if (n == levels) break;
    const double hn = std::pow(params.h, n);
    left.push_back(make_piece(bp.z[i], bp.y[i], half, PieceKind::CosineUp, k * hn));
    left.push_back(make_piece(bp.y[i], bp.x[i + 1], std::pow(params.beta, n + params.l + 1),
                              PieceKind::Constant, k * hn));
  }
  const auto last = static_cast<std::size_t>(levels);
  left.push_back(make_piece(bp.z[last], params.a, bp.z_tail[last], PieceKind::Zero, 0.0));
  return PiecewisePotential(symmetric_pieces(std::move(left), params.a, params.b),
                            cascade_meta(params, levels, bp, "smooth_md", true));
}

PiecewisePotential zero_potential(double a, double b) {
  PotentialMeta meta;
  meta.a = a;
  meta.b = b;
  meta.origin = "zero";
  std::vector<Piece> pieces;
  if (a > 0.0 && a < b && b < 1.0) {
    pieces.push_back(make_piece(0.0, a, a, PieceKind::Zero, 0.0));
    pieces.push_back(make_piece(a, b, b - a, PieceKind::Zero, 0.0));
    pieces.push_back(make_piece(b, 1.0, 1.0 - b, PieceKind::Zero, 0.0));
  } else {
    pieces.push_back(make_piece(0.0, 1.0, 1.0, PieceKind::Zero, 0.0));
  }
  return PiecewisePotential(std::move(pieces), std::move(meta));
}

PiecewisePotential linear_potential(double slope) {
  PotentialMeta meta;
  meta.origin = "linear";
  return PiecewisePotential({make_piece(0.0, 1.0, 1.0, PieceKind::Linear, slope, 0.0)},
                            std::move(meta));
}

PiecewisePotential fold(const PiecewisePotential& m, double z) {
  const PotentialMeta& meta = m.meta();
  if (!(z > 0.0 && z < meta.a)) {
    throw Error(ErrorKind::NotAFoldPoint, "fold point must lie in (0, a)");
  }
  std::vector<Piece> pieces(m.pieces().begin(), m.pieces().end());

  // Locate the boundary at z, splitting a zero piece if z falls inside one.
  std::size_t split = pieces.size();
  for (std::size_t i = 0; i + 1 < pieces.size(); ++i) {
    if (pieces[i].hi == z) {
      split = i + 1;
      break;
    }
  }
  if (split == pieces.size()) {
    const std::size_t k = m.locate(z);
    const Piece p = pieces[k];
    const bool flat_zero = p.kind == PieceKind::Zero ||
                           (p.kind != PieceKind::Linear && p.amplitude == 0.0);
    if (!flat_zero || z <= p.lo) {
      throw Error(ErrorKind::NotAFoldPoint, "z is neither a piece boundary nor inside a zero piece");
    }
    Piece left_part = p, right_part = p;
    left_part.hi = z;
    left_part.width = z - p.lo;
    right_part.lo = z;
    right_part.width = p.hi - z;
    pieces[k] = left_part;
    pieces.insert(pieces.begin() + static_cast<std::ptrdiff_t>(k + 1), right_part);
    split = k + 1;
  }

  const Piece& before = pieces[split - 1];
  const double scale_v = std::max(m.max_abs(), std::numeric_limits<double>::min());
  const double scale_d = std::max(m.max_abs_derivative(), std::numeric_limits<double>::min());
  const double v = before.value(1.0);
  const double d = before.derivative(1.0);
  if (std::abs(v) > 1e-12 * scale_v || std::abs(d) > 1e-9 * scale_d) {
    std::ostringstream msg;
    msg << "m(z) = " << v << ", m'(z) = " << d << " at z = " << z;
    throw Error(ErrorKind::NotAFoldPoint, msg.str());
  }

  PotentialMeta out_meta = meta;
  out_meta.origin += "+fold";
  if (meta.mirrored) {
    std::vector<Piece> left;
    for (std::size_t i = 0; i < pieces.size() && pieces[i].hi <= meta.a; ++i) {
      left.push_back(i >= split ? pieces[i].negated() : pieces[i]);
    }
    return PiecewisePotential(symmetric_pieces(std::move(left), meta.a, meta.b),
                              std::move(out_meta), m.offset());
  }
  const double z_mirror = 1.0 - z;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    Piece& p = pieces[i];
    const bool left_side = i >= split && p.hi <= meta.a;
    const bool right_side = p.lo >= meta.b && p.hi <= z_mirror;
    if (left_side || right_side) p = p.negated();
  }
  return PiecewisePotential(std::move(pieces), std::move(out_meta), m.offset());
}

double envelope_delta(const PiecewisePotential& m, double tau) {
  const double a = m.meta().a;
  const auto pieces = m.pieces();
  for (std::size_t i = pieces.size(); i-- > 0;) {
    const Piece& p = pieces[i];
    if (p.hi > a) continue;
    if (p.sup_abs() < tau) continue;
    // Last point of this piece where |m| >= tau; everything to its right is below tau.
    double last = p.hi;
    switch (p.kind) {
      case PieceKind::CosineDown: {
        const double ratio = std::clamp(2.0 * tau / std::abs(p.amplitude) - 1.0, -1.0, 1.0);
        last = p.lo + (std::acos(ratio) / kPi) * p.width;
        break;
      }
      case PieceKind::Linear: {
        const double v0 = std::abs(p.phase), v1 = std::abs(p.phase + p.amplitude);
        if (v1 < tau && v0 >= tau) {
          // |phase + A t| crosses tau while shrinking toward the right end.
          const double t = (std::copysign(tau, p.phase) - p.phase) / p.amplitude;
          last = p.lo + std::clamp(t, 0.0, 1.0) * p.width;
        }
        break;
      }
      default: break;
    }
    return a - last;
  }
  return a;
}

// ------------------------------------------------------------------ reports

bool Report::pass() const {
  return std::all_of(clauses.begin(), clauses.end(), [](const ClauseReport& c) { return c.pass; });
}

std::string Report::summary() const {
  std::ostringstream out;
  for (const ClauseReport& c : clauses) {
    out << (c.pass ? "PASS " : "FAIL ") << c.name << " margin=" << c.margin;
    if (!c.detail.empty()) out << " (" << c.detail << ")";
    out << '\n';
  }
  return out.str();
}

MembershipReport check_membership(const PiecewisePotential& m, const StepParams& params,
                                  Regime which, std::span<const double> grid,
                                  const Truncation& trunc) {
  const PiecewisePotential env =
      which == Regime::SD ? step_tilde(params, trunc) : step_bar(params, trunc);
  MembershipReport report;
  report.worst_margin = std::numeric_limits<double>::infinity();
  const double lo_right = 1.0 - params.delta;
  for (const double r : grid) {
    const bool inside = (r >= params.delta && r <= params.a) || (r >= params.b && r <= lo_right);
    if (!inside) continue;
    const double e = env.value(r);
    const double v = m.value(r);
    const double margin = which == Regime::SD ? v - e : e - v;
    ++report.checked;
    report.worst_margin = std::min(report.worst_margin, margin);
    if (margin < -1e-12 * std::abs(e) && !report.first_violation) report.first_violation = r;
  }
  report.pass = report.checked > 0 && !report.first_violation;
  return report;
}

JointDefect joint_defect(const PiecewisePotential& m) {
  JointDefect d;
  const auto pieces = m.pieces();
  for (std::size_t i = 1; i < pieces.size(); ++i) {
    const Piece& l = pieces[i - 1];
    const Piece& r = pieces[i];
    d.value = std::max(d.value, std::abs(l.value(1.0) - r.value(0.0)));
    d.derivative = std::max(d.derivative, std::abs(l.derivative(1.0) - r.derivative(0.0)));
  }
  return d;
}

// ------------------------------------------------------------- serialization

void write_potential(std::ostream& out, const PiecewisePotential& m) {
  const PotentialMeta& meta = m.meta();
  out << "# oscdrift potential v1\n";
  out << "@meta a=" << hexfloat(meta.a) << " b=" << hexfloat(meta.b)
      << " offset=" << hexfloat(m.offset()) << " levels=" << meta.levels
      << " mirrored=" << (meta.mirrored ? 1 : 0) << " origin=" << meta.origin << '\n';
  if (meta.params) {
    const StepParams& p = *meta.params;
    out << "@params delta=" << hexfloat(p.delta) << " h=" << hexfloat(p.h)
        << " alpha=" << hexfloat(p.alpha) << " beta=" << hexfloat(p.beta)
        << " nu=" << hexfloat(p.nu) << " l=" << p.l << " a=" << hexfloat(p.a)
        << " b=" << hexfloat(p.b) << " kappa=" << hexfloat(p.kappa) << '\n';
  }
  out << "@touch";
  for (const double z : meta.zero_touch) out << ' ' << hexfloat(z);
  out << '\n';
  const auto pieces = m.pieces();
  std::size_t count = pieces.size();
  if (meta.mirrored) {
    count = 0;
    while (count < pieces.size() && pieces[count].hi <= meta.a) ++count;
    ++count;  // the zero piece on [a, b]
  }
  for (std::size_t i = 0; i < count; ++i) {
    const Piece& p = pieces[i];
    out << hexfloat(p.lo) << ' ' << hexfloat(p.hi) << ' ' << to_string(p.kind) << ' '
        << hexfloat(p.amplitude) << ' ' << hexfloat(p.phase) << ' ' << hexfloat(p.width) << '\n';
  }
  if (meta.mirrored) {
    out << hexfloat(meta.b) << ' ' << hexfloat(1.0) << " mirror " << hexfloat(0.0) << ' '
        << hexfloat(0.0) << ' ' << hexfloat(1.0 - meta.b) << '\n';
  }
}

namespace {

std::pair<std::string, std::string> split_key(const std::string& token) {
  const auto eq = token.find('=');
  if (eq == std::string::npos) throw Error(ErrorKind::ParseError, "expected key=value: " + token);
  return {token.substr(0, eq), token.substr(eq + 1)};
}

}  // namespace

PiecewisePotential read_potential(std::istream& in) {
  PotentialMeta meta;
  double offset = 0.0;
  std::vector<Piece> pieces;
  bool mirror_seen = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "@meta") {
      std::string tok;
      while (ls >> tok) {
        const auto [k, v] = split_key(tok);
        if (k == "a") meta.a = parse_double(v);
        else if (k == "b") meta.b = parse_double(v);
        else if (k == "offset") offset = parse_double(v);
        else if (k == "levels") meta.levels = std::stoi(v);
        else if (k == "mirrored") meta.mirrored = v == "1";
        else if (k == "origin") meta.origin = v;
      }
    } else if (head == "@params") {
      StepParams p;
      std::string tok;
      while (ls >> tok) {
        const auto [k, v] = split_key(tok);
        if (k == "delta") p.delta = parse_double(v);
        else if (k == "h") p.h = parse_double(v);
        else if (k == "alpha") p.alpha = parse_double(v);
        else if (k == "beta") p.beta = parse_double(v);
        else if (k == "nu") p.nu = parse_double(v);
        else if (k == "l") p.l = std::stoi(v);
        else if (k == "a") p.a = parse_double(v);
        else if (k == "b") p.b = parse_double(v);
        else if (k == "kappa") p.kappa = parse_double(v);
      }
      meta.params = p;
    } else if (head == "@touch") {
      std::string tok;
      while (ls >> tok) meta.zero_touch.push_back(parse_double(tok));
    } else {
      std::string hi, kind, amp, phase, width;
      if (!(ls >> hi >> kind >> amp >> phase >> width)) {
        throw Error(ErrorKind::ParseError, "malformed piece line: " + line);
      }
      if (kind == "mirror") {
        if (pieces.empty() || pieces.back().kind != PieceKind::Zero) {
          throw Error(ErrorKind::ParseError, "mirror line must follow the zero piece on [a, b]");
        }
        pieces.pop_back();
        pieces = symmetric_pieces(std::move(pieces), meta.a, meta.b);
        mirror_seen = true;
        continue;
      }
      pieces.push_back(Piece{parse_double(head), parse_double(hi), parse_double(width),
                             parse_kind(kind), parse_double(amp), parse_double(phase)});
    }
  }
  if (meta.mirrored && !mirror_seen) {
    throw Error(ErrorKind::ParseError, "mirrored potential without a mirror line");
  }
  return PiecewisePotential(std::move(pieces), std::move(meta), offset);
}

bool bit_identical(const PiecewisePotential& lhs, const PiecewisePotential& rhs) {
  const auto same = [](double x, double y) {
    return std::memcmp(&x, &y, sizeof(double)) == 0;
  };
  const auto lp = lhs.pieces();
  const auto rp = rhs.pieces();
  if (lp.size() != rp.size() || !same(lhs.offset(), rhs.offset())) return false;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    const Piece& a = lp[i];
    const Piece& b = rp[i];
    if (a.kind != b.kind || !same(a.lo, b.lo) || !same(a.hi, b.hi) || !same(a.width, b.width) ||
        !same(a.amplitude, b.amplitude) || !same(a.phase, b.phase)) {
      return false;
    }
  }
  const PotentialMeta& lm = lhs.meta();
  const PotentialMeta& rm = rhs.meta();
  if (!same(lm.a, rm.a) || !same(lm.b, rm.b) || lm.levels != rm.levels ||
      lm.mirrored != rm.mirrored || lm.origin != rm.origin || lm.params != rm.params ||
      lm.zero_touch.size() != rm.zero_touch.size()) {
    return false;
  }
  for (std::size_t i = 0; i < lm.zero_touch.size(); ++i) {
    if (!same(lm.zero_touch[i], rm.zero_touch[i])) return false;
  }
  return true;
}

}  // namespace oscdrift
