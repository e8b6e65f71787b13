#pragma once

#include <cstdint>

#include "mdm/metrics.hpp"
#include "mdm/mirror.hpp"

namespace mdm {

struct VerifyOptions {
  std::uint64_t seed = 20240;
  std::size_t points_per_map = 1000;
  std::size_t inequality_pairs = 500;
  long reduction_steps = 10000;
  /// Multiplies every mirror-map Hessian; anything but 1 must make the
  /// finite-difference check fail.
  double hessian_fault = 1.0;
};

/// Random mirror map of the given kind and dimension. Box bounds are drawn
/// too, so the checks cover more than [0, 1].
MirrorMap random_mirror_map(MirrorKind kind, std::size_t dim, std::uint64_t seed,
                            std::uint64_t index);
/// Random interior point of mm's domain, including points near the boundary.
Vec random_interior_point(const MirrorMap& mm, std::uint64_t seed, std::uint64_t index);

/// max ||grad_conjugate(grad(x)) - x||_inf over random points, dims 2..16.
MetricRow check_roundtrip(MirrorKind kind, const VerifyOptions& o);
/// max |phi(x) + phi*(grad phi(x)) - <x, grad phi(x)>| / max(1, |lhs|, |rhs|).
MetricRow check_fenchel(MirrorKind kind, const VerifyOptions& o);
/// Fenchel-Young: min over random (x, x') of phi(x') + phi*(grad phi(x)) - <x', grad phi(x)>,
/// which must not be negative.
MetricRow check_fenchel_young(MirrorKind kind, const VerifyOptions& o);
/// max relative gap between hessian_diag and a central difference of grad,
/// step 1e-5 * min(1, distance to the boundary).
MetricRow check_hessian_fd(MirrorKind kind, const VerifyOptions& o);
/// min of KL(p || q) - ||p - q||_1^2 / 2 over random distributions.
MetricRow check_pinsker(const VerifyOptions& o);
/// min of phi(y) - phi(x) - <grad phi(x), y - x> - ||y - x||_1^2 / 2 for the
/// negative entropy on random simplex pairs.
MetricRow check_entropy_convexity(const VerifyOptions& o);
/// max relative error between backprop and central differences, over every
/// parameter of hidden widths {8}, {16,16}, {32,32,32} and both activations.
MetricRow check_mlp_gradients(const VerifyOptions& o);
/// Number of steps at which MLA under the identity map and ULA differ in any
/// bit, with shared noise.
MetricRow check_identity_reduction(const VerifyOptions& o);

/// Every check above, one row each.
MetricReport run_verify_suite(const VerifyOptions& o = {});

}  // namespace mdm
