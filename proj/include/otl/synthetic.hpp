#pragma once

#include "otl/core.hpp"
#include "otl/ot1d.hpp"

#include <limits>
#include <vector>

namespace otl {

/// Gaussian transfer task with a closed-form input map.
///
/// Target inputs follow N(target_mean, target_cov), source inputs follow
/// N(source_mean, source_cov). The pretrained source model is the affine
/// functional x -> u.x + b, and the output map is monotone piecewise linear.
/// `grad_lower`/`grad_upper` bound ||u|| and `output_lipschitz` bounds the
/// slopes of the output map.
struct GaussianTaskSpec {
  Vector target_mean;
  Matrix target_cov;
  Vector source_mean;
  Matrix source_cov;
  AffineFunctional source_model;
  MonotoneMap1D output_map{{0.0}, {0.0}};
  double noise_sd = 0.0;
  double grad_lower = 0.0;
  double grad_upper = std::numeric_limits<double>::infinity();
  double output_lipschitz = std::numeric_limits<double>::infinity();
  /// Smoothness of the input densities; Gaussians are infinitely smooth.
  double alpha = std::numeric_limits<double>::infinity();

  Index dim() const { return target_mean.size(); }

  /// Throws std::invalid_argument when any invariant fails.
  void validate() const;
};

/// Task with identical source/target laws N(0, I) and one kink in the output
/// map: slope `slope_left` below `kink`, `slope_right` above. The recorded
/// gradient band and Lipschitz constant are tight.
GaussianTaskSpec kinked_task(Index d, double kink = 0.0, double slope_left = 1.0, double slope_right = 3.0,
                             double noise_sd = 0.0);

/// Task with source = target law N(0, I), identity output map.
GaussianTaskSpec identity_task(Index d, double noise_sd = 0.0);

/// Quadratic-cost Monge map between N(m1, s1) and N(m2, s2):
/// x -> m2 + A (x - m1) with A = s1^-1/2 (s1^1/2 s2 s1^1/2)^1/2 s1^-1/2.
AffineMap gaussian_monge_map(const Vector& m1, const Matrix& s1, const Vector& m2, const Matrix& s2);

/// Symmetric square root and inverse square root via eigendecomposition,
/// eigenvalues floored at 1e-12.
Matrix spd_sqrt(const Matrix& s);
Matrix spd_inv_sqrt(const Matrix& s);

/// Throws std::invalid_argument unless `s` is square, symmetric and SPD.
void require_spd(const Matrix& s, const char* what);

struct GroundTruth {
  AffineMap input_map;
  AffineFunctional source_model;
  MonotoneMap1D output_map;

  double target_regressor(const Vector& x) const { return output_map(source_model(input_map(x))); }
  Vector target_regressor_batch(const PointMatrix& x) const;
  EvaluableMap target_map() const;
};

GroundTruth build_ground_truth(const GaussianTaskSpec& spec);

struct TaskSample {
  SampleSet source;
  SampleSet target;
};

/// Target responses carry N(0, noise_sd^2) noise; source responses are the
/// noiseless source model.
TaskSample sample_task(const GaussianTaskSpec& spec, Index m_target, Index m_source, Seed seed);

/// m draws from N(mean, cov).
PointMatrix sample_gaussian(const Vector& mean, const Matrix& cov, Index m, Rng& rng);

SampleSet mixture_sampler(const std::vector<double>& weights, const std::vector<Vector>& means,
                          const std::vector<Matrix>& covs, Index m, Seed seed);

/// Component index of each mixture draw, in draw order.
std::vector<Index> mixture_components(const std::vector<double>& weights, Index m, Rng& rng);

}  // namespace otl
