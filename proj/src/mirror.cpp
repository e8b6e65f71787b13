#include "mdm/mirror.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mdm/errors.hpp"

namespace mdm {

namespace {

// exp(709.78) is the largest finite double.
constexpr double kMaxExpArg = 709.78;

DomainKind required_domain(MirrorKind kind) {
  switch (kind) {
    case MirrorKind::Identity:
      return DomainKind::Euclidean;
    case MirrorKind::NegativeEntropy:
      return DomainKind::Simplex;
    case MirrorKind::LogBarrier:
      return DomainKind::Box;
  }
  return DomainKind::Euclidean;
}

}  // namespace

std::string to_string(MirrorKind kind) {
  switch (kind) {
    case MirrorKind::Identity:
      return "identity";
    case MirrorKind::NegativeEntropy:
      return "negative_entropy";
    case MirrorKind::LogBarrier:
      return "log_barrier";
  }
  return "?";
}

MirrorMap::MirrorMap(DomainSpec domain, MirrorKind kind, double interior_floor)
    : domain_(domain), kind_(kind), floor_(interior_floor) {
  if (domain_.kind() != required_domain(kind))
    throw ConfigError("mirror map " + to_string(kind) +
                      " does not match domain " + domain_.describe());
  if (!(interior_floor > 0.0) || !std::isfinite(interior_floor))
    throw ConfigError("interior_floor must be positive");
  if (kind == MirrorKind::LogBarrier &&
      2.0 * interior_floor >= domain_.upper() - domain_.lower())
    throw ConfigError("interior_floor too large for box width");
}

MirrorMap MirrorMap::identity(std::size_t dim) {
  return MirrorMap(DomainSpec::euclidean(dim), MirrorKind::Identity);
}

MirrorMap MirrorMap::negative_entropy(std::size_t dim, double floor) {
  return MirrorMap(DomainSpec::simplex(dim), MirrorKind::NegativeEntropy, floor);
}

MirrorMap MirrorMap::log_barrier(std::size_t dim, double lower, double upper,
                                 double floor) {
  return MirrorMap(DomainSpec::box(dim, lower, upper), MirrorKind::LogBarrier,
                   floor);
}

MirrorMap MirrorMap::with_hessian_fault(double factor) const {
  MirrorMap copy = *this;
  copy.hessian_scale_ = factor;
  return copy;
}

Vec MirrorMap::clamp_to_interior(std::span<const double> x) const {
  if (x.size() != dim()) throw ShapeError("clamp_to_interior: wrong dimension");
  for (double v : x)
    if (!std::isfinite(v)) throw DomainError("clamp_to_interior: non-finite input");
  Vec out(x.begin(), x.end());
  switch (domain_.kind()) {
    case DomainKind::Euclidean:
      break;
    case DomainKind::Simplex: {
      double sum = 0.0;
      for (double v : x) {
        if (v < -kClampSlack)
          throw DomainError("clamp_to_interior: negative simplex coordinate");
        sum += v;
      }
      if (std::abs(sum - 1.0) > kClampSlack)
        throw DomainError("clamp_to_interior: point is far from the simplex");
      double s = 0.0;
      for (double& v : out) {
        v = std::max(v, floor_);
        s += v;
      }
      for (double& v : out) v /= s;
      break;
    }
    case DomainKind::Box: {
      const double lo = domain_.lower();
      const double hi = domain_.upper();
      for (double& v : out) {
        if (v < lo - kClampSlack || v > hi + kClampSlack)
          throw DomainError("clamp_to_interior: point is far outside the box");
        v = std::clamp(v, lo + floor_, hi - floor_);
      }
      break;
    }
  }
  return out;
}

Vec MirrorMap::checked_interior(std::span<const double> x, const char* op) const {
  if (!domain_.contains(x))
    throw DomainError(std::string(op) + ": point outside " + domain_.describe());
  return clamp_to_interior(x);
}

double MirrorMap::potential_coord(double xi) const {
  switch (kind_) {
    case MirrorKind::Identity:
      return 0.5 * xi * xi;
    case MirrorKind::NegativeEntropy:
      return xi * std::log(xi);
    case MirrorKind::LogBarrier:
      return -std::log(xi - domain_.lower()) - std::log(domain_.upper() - xi);
  }
  return 0.0;
}

double MirrorMap::grad_coord(double xi) const {
  switch (kind_) {
    case MirrorKind::Identity:
      return xi;
    case MirrorKind::NegativeEntropy:
      return 1.0 + std::log(xi);
    case MirrorKind::LogBarrier:
      return -1.0 / (xi - domain_.lower()) + 1.0 / (domain_.upper() - xi);
  }
  return 0.0;
}

double MirrorMap::hessian_coord(double xi) const {
  double h = 1.0;
  switch (kind_) {
    case MirrorKind::Identity:
      h = 1.0;
      break;
    case MirrorKind::NegativeEntropy:
      h = 1.0 / xi;
      break;
    case MirrorKind::LogBarrier: {
      const double u = xi - domain_.lower();
      const double v = domain_.upper() - xi;
      h = 1.0 / (u * u) + 1.0 / (v * v);
      break;
    }
  }
  return hessian_scale_ * h;
}

double MirrorMap::coord_scale(double xi) const {
  switch (kind_) {
    case MirrorKind::Identity:
      return 1.0;
    case MirrorKind::NegativeEntropy:
      return xi;
    case MirrorKind::LogBarrier:
      return std::min(xi - domain_.lower(), domain_.upper() - xi);
  }
  return 1.0;
}

// Root of y = -1/u + 1/(w-u) with u in (0, w), written as
// u = 2w / (2 - yw + sqrt(4 + y^2 w^2)) so that no branch loses precision.
double MirrorMap::grad_conjugate_coord(double yi) const {
  switch (kind_) {
    case MirrorKind::Identity:
      return yi;
    case MirrorKind::NegativeEntropy:
      return std::exp(yi - 1.0);
    case MirrorKind::LogBarrier: {
      const double w = domain_.upper() - domain_.lower();
      const double yw = yi * w;
      const double s = std::hypot(2.0, yw);
      const double gap = yw > 0.0 ? 4.0 / (s + yw) : s - yw;
      return domain_.lower() + 2.0 * w / (2.0 + gap);
    }
  }
  return yi;
}

double MirrorMap::potential(std::span<const double> x) const {
  const Vec xc = checked_interior(x, "potential");
  double s = 0.0;
  for (double v : xc) s += potential_coord(v);
  return s;
}

Vec MirrorMap::grad(std::span<const double> x) const {
  Vec out = checked_interior(x, "grad");
  for (double& v : out) v = grad_coord(v);
  return out;
}

Vec MirrorMap::hessian_diag(std::span<const double> x) const {
  Vec out = checked_interior(x, "hessian_diag");
  for (double& v : out) v = hessian_coord(v);
  return out;
}

double MirrorMap::log_hessian_slope_coord(double xi) const {
  switch (kind_) {
    case MirrorKind::Identity:
      return 0.0;
    case MirrorKind::NegativeEntropy:
      return -1.0 / xi;
    case MirrorKind::LogBarrier: {
      const double u = xi - domain_.lower();
      const double v = domain_.upper() - xi;
      const double h = 1.0 / (u * u) + 1.0 / (v * v);
      const double dh = -2.0 / (u * u * u) + 2.0 / (v * v * v);
      return dh / h;
    }
  }
  return 0.0;
}

Vec MirrorMap::log_hessian_slope(std::span<const double> x) const {
  Vec out = checked_interior(x, "log_hessian_slope");
  for (double& v : out) v = log_hessian_slope_coord(v);
  return out;
}

Vec MirrorMap::grad_conjugate(std::span<const double> y, bool* saturated) const {
  if (y.size() != dim()) throw ShapeError("grad_conjugate: wrong dimension");
  for (double v : y)
    if (!std::isfinite(v)) throw DomainError("grad_conjugate: non-finite dual point");
  if (saturated) *saturated = false;
  Vec x;
  if (kind_ == MirrorKind::NegativeEntropy) {
    x = softmax(y);
  } else {
    x.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) x[i] = grad_conjugate_coord(y[i]);
  }
  if (kind_ == MirrorKind::Identity) return x;

  bool inside = true;
  if (kind_ == MirrorKind::NegativeEntropy) {
    for (double v : x) inside = inside && v >= floor_;
  } else {
    for (double v : x)
      inside = inside && v >= domain_.lower() + floor_ && v <= domain_.upper() - floor_;
  }
  if (inside) return x;
  if (saturated) *saturated = true;
  return clamp_to_interior(x);
}

double MirrorMap::conjugate_potential(std::span<const double> y) const {
  if (y.size() != dim()) throw ShapeError("conjugate_potential: wrong dimension");
  switch (kind_) {
    case MirrorKind::Identity:
      return 0.5 * dot(y, y);
    case MirrorKind::NegativeEntropy: {
      double s = 0.0;
      for (double v : y) {
        if (v - 1.0 > kMaxExpArg)
          throw OverflowError("conjugate_potential: exp overflow");
        s += std::exp(v - 1.0);
      }
      return s;
    }
    case MirrorKind::LogBarrier: {
      const Vec x = grad_conjugate(y);
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i)
        s += x[i] * y[i] - potential_coord(x[i]);
      return s;
    }
  }
  return 0.0;
}

Vec softmax(std::span<const double> y) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : y) m = std::max(m, v);
  Vec out(y.size());
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    out[i] = std::exp(y[i] - m);
    s += out[i];
  }
  for (double& v : out) v /= s;
  return out;
}

}  // namespace mdm
