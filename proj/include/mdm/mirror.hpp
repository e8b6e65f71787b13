#pragma once

#include <span>
#include <string>

#include "mdm/domain.hpp"

namespace mdm {

enum class MirrorKind { Identity, NegativeEntropy, LogBarrier };

std::string to_string(MirrorKind kind);

/// Legendre-type potential phi on a domain, together with its gradient (the
/// mirror map), the gradient of its convex conjugate (the inverse map) and
/// its Hessian.
///
/// All three shipped potentials are separable, phi(x) = sum_i phi_1(x_i), so
/// the Hessian is diagonal and each coordinate can be handled on its own.
/// Identity lives on R^d, NegativeEntropy on the simplex, LogBarrier on a box.
///
/// Values are immutable once constructed and safe to share across threads.
class MirrorMap {
 public:
  static constexpr double kDefaultFloor = 1e-12;
  /// Distance outside the closure of the domain that clamp_to_interior still
  /// treats as rounding noise.
  static constexpr double kClampSlack = 1e-6;

  MirrorMap(DomainSpec domain, MirrorKind kind, double interior_floor = kDefaultFloor);

  static MirrorMap identity(std::size_t dim);
  static MirrorMap negative_entropy(std::size_t dim, double floor = kDefaultFloor);
  static MirrorMap log_barrier(std::size_t dim, double lower, double upper,
                               double floor = kDefaultFloor);

  const DomainSpec& domain() const { return domain_; }
  MirrorKind kind() const { return kind_; }
  double interior_floor() const { return floor_; }
  std::size_t dim() const { return domain_.dim(); }

  double potential(std::span<const double> x) const;
  Vec grad(std::span<const double> x) const;
  /// Inverse mirror map. For NegativeEntropy this is softmax, i.e. the
  /// unconstrained conjugate gradient followed by the Bregman projection
  /// onto the simplex. If `saturated` is given it is set when the result had
  /// to be pulled back inside the interior floor.
  Vec grad_conjugate(std::span<const double> y, bool* saturated = nullptr) const;
  Vec hessian_diag(std::span<const double> x) const;
  /// d/dx_i log H_i(x), which also equals dH_i/dy_i along the coordinate chart.
  Vec log_hessian_slope(std::span<const double> x) const;
  double conjugate_potential(std::span<const double> y) const;
  Vec clamp_to_interior(std::span<const double> x) const;

  // Per-coordinate chart, no domain checks. Used by finite-difference tests.
  double potential_coord(double xi) const;
  double grad_coord(double xi) const;
  /// Unconstrained conjugate gradient of one coordinate (exp(y - 1) for
  /// NegativeEntropy, i.e. before the simplex projection).
  double grad_conjugate_coord(double yi) const;
  double hessian_coord(double xi) const;
  double log_hessian_slope_coord(double xi) const;
  /// Distance from xi to the nearest boundary of its coordinate range, or 1
  /// where the coordinate is unbounded above and below.
  double coord_scale(double xi) const;

  /// Copy whose Hessian is scaled by `factor`; used only to check that the
  /// verification suite detects a wrong Hessian.
  MirrorMap with_hessian_fault(double factor) const;

 private:
  Vec checked_interior(std::span<const double> x, const char* op) const;

  DomainSpec domain_;
  MirrorKind kind_;
  double floor_;
  double hessian_scale_ = 1.0;
};

/// Numerically stable softmax; output sums to one.
Vec softmax(std::span<const double> y);

}  // namespace mdm
