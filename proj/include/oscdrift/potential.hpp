#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace oscdrift {

/// Parameters of the step envelopes. The left cascade lives on [delta, a] and
/// is mirrored onto [b, 1 - delta]; `kappa` scales every envelope amplitude
/// (kappa = 1 is the unscaled family).
struct StepParams {
  double delta = 0.0;
  double h = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double nu = 0.0;
  int l = 0;
  double a = 0.0;
  double b = 0.0;
  double kappa = 1.0;

  /// Derives delta and b = 1 - a, then validates.
  static StepParams make(double a, double h, double alpha, double beta, double nu, int l,
                         double kappa = 1.0);

  /// Throws InvalidParams / NonPositiveDelta when an invariant fails.
  void validate() const;

  /// Parameters describing the same cascade seen from `levels` levels deeper:
  /// delta moves to x_levels, l grows by `levels`. With `paper_style` the
  /// amplitude ratio becomes h^levels (kappa kept), otherwise h is kept and
  /// kappa absorbs the factor h^levels.
  StepParams shifted(int levels, bool paper_style = false) const;

  bool operator==(const StepParams&) const = default;
};

/// a - alpha^{l+1}/(1-alpha) - beta^{l+1}/(1-beta); throws NonPositiveDelta if <= 0.
double derive_delta(double a, double alpha, double beta, int l);

/// Cascade breakpoints for levels 0..levels-1 plus x_levels. Absolute positions
/// and their distances to `a` (tails) are both kept; the tails carry full
/// relative precision deep into the cascade.
struct Breakpoints {
  std::vector<double> x, y, z;
  std::vector<double> x_tail, y_tail, z_tail;

  /// Bar partition: Y_0 = delta, X_n = y_{n-1}, Y_n = x_n for n >= 1.
  double X(int n) const { return y.at(static_cast<std::size_t>(n - 1)); }
  double Y(int n) const { return x.at(static_cast<std::size_t>(n)); }
};

Breakpoints breakpoints(const StepParams& params, int levels);

/// Number of cascade levels kept under the truncation floors: level n is kept
/// while alpha^{n+l+1} >= min_width and kappa * nu * h^n >= min_amplitude.
int retained_levels(const StepParams& params, double min_width, double min_amplitude);

struct Truncation {
  double min_width = 1e-9;
  double min_amplitude = 1e-12;
  int max_levels = 64;
};

enum class PieceKind { Zero, Constant, CosineDown, CosineUp, Linear };

const char* to_string(PieceKind kind) noexcept;

/// One analytic piece on [lo, hi]. Values are written in terms of the local
/// coordinate t = (r - lo) / width in [0, 1]:
///   Constant     A
///   CosineDown   A (1 + cos(pi t)) / 2
///   CosineUp     A (1 - cos(pi t)) / 2
///   Linear       phase + A t
/// `width` is stored separately from lo/hi so deep pieces keep their exact size.
struct Piece {
  double lo = 0.0;
  double hi = 0.0;
  double width = 0.0;
  PieceKind kind = PieceKind::Zero;
  double amplitude = 0.0;
  double phase = 0.0;

  double value(double t) const noexcept;
  /// d/dt of value; divide by width for d/dr.
  double slope(double t) const noexcept;
  double derivative(double t) const noexcept { return slope(t) / width; }
  /// value(t1) - value(t0) without cancellation in the cosine pieces.
  double difference(double t0, double t1) const noexcept;
  /// True when the piece is monotone nondecreasing on [0, 1].
  bool increasing() const noexcept;
  double sup_abs() const noexcept;
  double sup_abs_derivative() const noexcept;
  /// Mirror image under r -> 1 - r.
  Piece mirrored() const noexcept;
  Piece negated() const noexcept;
};

struct PotentialMeta {
  double a = 0.5;
  double b = 0.5;
  int levels = 0;
  bool mirrored = false;            // right half generated from the left half
  std::optional<StepParams> params;
  std::vector<double> zero_touch;   // left-half points with m = m' = 0, increasing
  std::string origin = "custom";
};

/// Advection potential as an ordered, gap-free list of analytic pieces on [0, 1].
/// Immutable after construction.
class PiecewisePotential {
 public:
  PiecewisePotential() = default;
  PiecewisePotential(std::vector<Piece> pieces, PotentialMeta meta, double offset = 0.0);

  std::span<const Piece> pieces() const noexcept { return pieces_; }
  const PotentialMeta& meta() const noexcept { return meta_; }
  double offset() const noexcept { return offset_; }

  std::size_t locate(double r) const;
  double value(double r) const;
  double derivative(double r) const;

  double max_abs() const;
  double max_abs_derivative() const;
  double max_value() const;
  double min_value() const;

  /// m + c; the pieces are shared unchanged.
  PiecewisePotential shifted(double c) const;
  PiecewisePotential scaled(double factor) const;

 private:
  std::vector<Piece> pieces_;
  PotentialMeta meta_;
  double offset_ = 0.0;
};

/// Step envelope taking -h^n on [x_n, y_n) and nu h^n on [y_n, x_{n+1}).
PiecewisePotential step_tilde(const StepParams& params, const Truncation& trunc = {});
/// Step envelope taking h^n on [Y_{n-1}, X_n) and -nu h^n on [X_n, Y_n).
PiecewisePotential step_bar(const StepParams& params, const Truncation& trunc = {});
/// C^1 cosine-arch potential bounded below by step_tilde.
PiecewisePotential smooth_md(const StepParams& params, const Truncation& trunc = {});

PiecewisePotential zero_potential(double a = 0.5, double b = 0.5);
/// m(r) = slope * r on [0, 1].
PiecewisePotential linear_potential(double slope);

/// Negates m on (z, a) and on the mirror interval; z must be a zero-touch point.
PiecewisePotential fold(const PiecewisePotential& m, double z);

/// Largest width w such that |m| < tau on (a - w, a), from the analytic pieces.
double envelope_delta(const PiecewisePotential& m, double tau);

struct ClauseReport {
  std::string name;
  bool pass = false;
  double margin = 0.0;  // positive means satisfied with room
  std::string detail;
};

struct Report {
  std::vector<ClauseReport> clauses;
  bool pass() const;
  std::string summary() const;
};

enum class Regime { SD, SN };

struct MembershipReport {
  bool pass = false;
  double worst_margin = 0.0;
  std::optional<double> first_violation;
  std::size_t checked = 0;
};

/// Checks m >= step_tilde (SD) or m <= step_bar (SN) at every grid node in
/// [delta, a] and [b, 1 - delta].
MembershipReport check_membership(const PiecewisePotential& m, const StepParams& params,
                                  Regime which, std::span<const double> grid,
                                  const Truncation& trunc = {});

/// Maximum C^1-joint mismatch (value, derivative) over interior piece boundaries.
struct JointDefect {
  double value = 0.0;
  double derivative = 0.0;
};
JointDefect joint_defect(const PiecewisePotential& m);

void write_potential(std::ostream& out, const PiecewisePotential& m);
PiecewisePotential read_potential(std::istream& in);
bool bit_identical(const PiecewisePotential& lhs, const PiecewisePotential& rhs);

}  // namespace oscdrift
