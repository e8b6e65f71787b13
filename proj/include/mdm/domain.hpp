#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mdm {

using Vec = std::vector<double>;

enum class DomainKind { Euclidean, Simplex, Box };

/// Constraint set a sampler works in: all of R^d, the probability simplex, or
/// an axis-aligned box [lower, upper]^d.
class DomainSpec {
 public:
  static constexpr double kSimplexSumTolerance = 1e-9;

  static DomainSpec euclidean(std::size_t dim);
  static DomainSpec simplex(std::size_t dim);
  static DomainSpec box(std::size_t dim, double lower, double upper);

  DomainKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }

  /// Total membership test; never throws. Vectors of the wrong length are
  /// rejected.
  bool contains(std::span<const double> x) const;

  /// Barycentre of the simplex, midpoint of the box, origin otherwise.
  Vec center() const;

  std::string describe() const;

  bool operator==(const DomainSpec&) const = default;

 private:
  DomainSpec(DomainKind kind, std::size_t dim, double lower, double upper);

  DomainKind kind_;
  std::size_t dim_;
  double lower_;
  double upper_;
};

/// Dense row-major matrix, one sample per row.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * cols, cols};
  }
  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return data[i * cols + j];
  }
  Vec column(std::size_t j) const;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm_inf(std::span<const double> a);
double norm_l1(std::span<const double> a);

}  // namespace mdm
