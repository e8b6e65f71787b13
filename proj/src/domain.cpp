#include "mdm/domain.hpp"

#include <cmath>
#include <sstream>

#include "mdm/errors.hpp"

namespace mdm {

DomainSpec::DomainSpec(DomainKind kind, std::size_t dim, double lower,
                       double upper)
    : kind_(kind), dim_(dim), lower_(lower), upper_(upper) {
  if (dim == 0) throw ConfigError("domain dimension must be at least 1");
  if (kind == DomainKind::Box && !(lower < upper))
    throw ConfigError("box domain requires lower < upper");
  if (kind == DomainKind::Box && (!std::isfinite(lower) || !std::isfinite(upper)))
    throw ConfigError("box bounds must be finite");
}

DomainSpec DomainSpec::euclidean(std::size_t dim) {
  return DomainSpec(DomainKind::Euclidean, dim, 0.0, 0.0);
}

DomainSpec DomainSpec::simplex(std::size_t dim) {
  return DomainSpec(DomainKind::Simplex, dim, 0.0, 1.0);
}

DomainSpec DomainSpec::box(std::size_t dim, double lower, double upper) {
  return DomainSpec(DomainKind::Box, dim, lower, upper);
}

bool DomainSpec::contains(std::span<const double> x) const {
  if (x.size() != dim_) return false;
  for (double v : x)
    if (!std::isfinite(v)) return false;
  switch (kind_) {
    case DomainKind::Euclidean:
      return true;
    case DomainKind::Simplex: {
      double sum = 0.0;
      for (double v : x) {
        if (v < 0.0) return false;
        sum += v;
      }
      return std::abs(sum - 1.0) <= kSimplexSumTolerance;
    }
    case DomainKind::Box:
      for (double v : x)
        if (v < lower_ || v > upper_) return false;
      return true;
  }
  return false;
}

Vec DomainSpec::center() const {
  switch (kind_) {
    case DomainKind::Simplex:
      return Vec(dim_, 1.0 / static_cast<double>(dim_));
    case DomainKind::Box:
      return Vec(dim_, 0.5 * (lower_ + upper_));
    case DomainKind::Euclidean:
      break;
  }
  return Vec(dim_, 0.0);
}

std::string DomainSpec::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case DomainKind::Euclidean:
      os << "euclidean(" << dim_ << ")";
      break;
    case DomainKind::Simplex:
      os << "simplex(" << dim_ << ")";
      break;
    case DomainKind::Box:
      os << "box(" << dim_ << ", " << lower_ << ", " << upper_ << ")";
      break;
  }
  return os.str();
}

Vec Matrix::column(std::size_t j) const {
  Vec out(rows);
  for (std::size_t i = 0; i < rows; ++i) out[i] = data[i * cols + j];
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

double norm_l1(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += std::abs(v);
  return s;
}

}  // namespace mdm
