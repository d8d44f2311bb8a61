#include "otl/synthetic.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace otl {

namespace {

constexpr double kEigenFloor = 1e-12;

Matrix spectral_power(const Matrix& s, double power) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  if (eig.info() != Eigen::Success) throw std::invalid_argument("eigendecomposition failed");
  const Vector values = eig.eigenvalues().cwiseMax(kEigenFloor).array().pow(power).matrix();
  return eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
}

Matrix symmetrize(const Matrix& s) { return 0.5 * (s + s.transpose()); }

}  // namespace

void require_spd(const Matrix& s, const char* what) {
  if (s.rows() < 1 || s.rows() != s.cols()) throw std::invalid_argument(std::string(what) + ": not square");
  if (!s.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entry");
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument(std::string(what) + ": not symmetric");
  }
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) throw std::invalid_argument(std::string(what) + ": not positive definite");
}

Matrix spd_sqrt(const Matrix& s) { return spectral_power(s, 0.5); }
Matrix spd_inv_sqrt(const Matrix& s) { return spectral_power(s, -0.5); }

AffineMap gaussian_monge_map(const Vector& m1, const Matrix& s1, const Vector& m2, const Matrix& s2) {
  require_spd(s1, "gaussian_monge_map: s1");
  require_spd(s2, "gaussian_monge_map: s2");
  if (s1.rows() != s2.rows() || m1.size() != s1.rows() || m2.size() != s2.rows()) {
    throw std::invalid_argument("gaussian_monge_map: dimension mismatch");
  }
  const Matrix root = spd_sqrt(s1);
  const Matrix inv_root = spd_inv_sqrt(s1);
  const Matrix middle = spd_sqrt(symmetrize(root * s2 * root));
  const Matrix a = symmetrize(inv_root * middle * inv_root);
  return AffineMap{a, m2 - a * m1};
}

void GaussianTaskSpec::validate() const {
  const Index d = dim();
  if (d < 1) throw std::invalid_argument("GaussianTaskSpec: dimension must be positive");
  if (source_mean.size() != d || target_cov.rows() != d || source_cov.rows() != d ||
      source_model.weights.size() != d) {
    throw std::invalid_argument("GaussianTaskSpec: inconsistent dimensions");
  }
  if (!target_mean.allFinite() || !source_mean.allFinite() || !source_model.weights.allFinite() ||
      !std::isfinite(source_model.bias)) {
    throw std::invalid_argument("GaussianTaskSpec: non-finite parameter");
  }
  require_spd(target_cov, "GaussianTaskSpec: target_cov");
  require_spd(source_cov, "GaussianTaskSpec: source_cov");
  if (!(grad_lower > 0.0) || !(grad_upper >= grad_lower)) {
    throw std::invalid_argument("GaussianTaskSpec: need 0 < grad_lower <= grad_upper");
  }
  const double norm = source_model.weights.norm();
  constexpr double slack = 1e-12;  // unit vectors rarely have norm exactly 1
  if (norm < grad_lower * (1.0 - slack) || norm > grad_upper * (1.0 + slack)) {
    throw std::invalid_argument("GaussianTaskSpec: ||u|| outside [grad_lower, grad_upper]");
  }
  if (!std::isfinite(output_lipschitz) || output_map.lipschitz() > output_lipschitz) {
    throw std::invalid_argument("GaussianTaskSpec: output map exceeds its recorded Lipschitz constant");
  }
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
    throw std::invalid_argument("GaussianTaskSpec: noise_sd must be finite and nonnegative");
  }
  if (!(alpha > 0.0)) throw std::invalid_argument("GaussianTaskSpec: alpha must be positive");
}

GaussianTaskSpec kinked_task(Index d, double kink, double slope_left, double slope_right, double noise_sd) {
  if (d < 1) throw std::invalid_argument("kinked_task: dimension must be positive");
  if (!(slope_left >= 0.0) || !(slope_right >= 0.0)) throw std::invalid_argument("kinked_task: slopes must be >= 0");
  GaussianTaskSpec spec;
  spec.target_mean = Vector::Zero(d);
  spec.target_cov = Matrix::Identity(d, d);
  spec.source_mean = Vector::Zero(d);
  spec.source_cov = Matrix::Identity(d, d);
  spec.source_model = AffineFunctional{Vector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d))), 0.0};
  spec.output_map = MonotoneMap1D({kink - 1.0, kink, kink + 1.0}, {-slope_left, 0.0, slope_right});
  spec.noise_sd = noise_sd;
  spec.grad_lower = 1.0;
  spec.grad_upper = 1.0;
  spec.output_lipschitz = std::max(slope_left, slope_right);
  return spec;
}

GaussianTaskSpec identity_task(Index d, double noise_sd) {
  GaussianTaskSpec spec = kinked_task(d, 0.0, 1.0, 1.0, noise_sd);
  spec.output_map = MonotoneMap1D({0.0, 1.0}, {0.0, 1.0});
  spec.output_lipschitz = 1.0;
  return spec;
}

Vector GroundTruth::target_regressor_batch(const PointMatrix& x) const {
  Vector out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) out(i) = target_regressor(x.row(i).transpose());
  return out;
}

EvaluableMap GroundTruth::target_map() const {
  return EvaluableMap(input_map.linear.cols(), 1, [self = *this](const Vector& x) {
    Vector out(1);
    out(0) = self.target_regressor(x);
    return out;
  });
}

GroundTruth build_ground_truth(const GaussianTaskSpec& spec) {
  spec.validate();
  return GroundTruth{gaussian_monge_map(spec.target_mean, spec.target_cov, spec.source_mean, spec.source_cov),
                     spec.source_model, spec.output_map};
}

PointMatrix sample_gaussian(const Vector& mean, const Matrix& cov, Index m, Rng& rng) {
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("sample_gaussian: covariance not SPD");
  const Matrix lower = llt.matrixL();
  PointMatrix draws = standard_normal(m, mean.size(), rng) * lower.transpose();
  draws.rowwise() += mean.transpose();
  return draws;
}

TaskSample sample_task(const GaussianTaskSpec& spec, Index m_target, Index m_source, Seed seed) {
  if (m_target < 1 || m_source < 1) throw std::invalid_argument("sample_task: sample sizes must be >= 1");
  const GroundTruth truth = build_ground_truth(spec);

  Rng target_rng = make_rng(child_seed(seed, {1}));
  PointMatrix xt = sample_gaussian(spec.target_mean, spec.target_cov, m_target, target_rng);
  Vector yt = truth.target_regressor_batch(xt);
  if (spec.noise_sd > 0.0) {
    Rng noise_rng = make_rng(child_seed(seed, {2}));
    std::normal_distribution<double> noise(0.0, spec.noise_sd);
    for (Index i = 0; i < yt.size(); ++i) yt(i) += noise(noise_rng);
  }

  Rng source_rng = make_rng(child_seed(seed, {3}));
  PointMatrix xs = sample_gaussian(spec.source_mean, spec.source_cov, m_source, source_rng);
  Vector ys(m_source);
  for (Index i = 0; i < m_source; ++i) ys(i) = spec.source_model(xs.row(i).transpose());

  return TaskSample{SampleSet(std::move(xs), std::move(ys)), SampleSet(std::move(xt), std::move(yt))};
}

std::vector<Index> mixture_components(const std::vector<double>& weights, Index m, Rng& rng) {
  std::discrete_distribution<Index> pick(weights.begin(), weights.end());
  std::vector<Index> out(static_cast<std::size_t>(m));
  for (auto& c : out) c = pick(rng);
  return out;
}

SampleSet mixture_sampler(const std::vector<double>& weights, const std::vector<Vector>& means,
                          const std::vector<Matrix>& covs, Index m, Seed seed) {
  if (weights.empty() || weights.size() != means.size() || weights.size() != covs.size()) {
    throw std::invalid_argument("mixture_sampler: mismatched component lists");
  }
  if (m < 1) throw std::invalid_argument("mixture_sampler: m must be >= 1");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("mixture_sampler: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("mixture_sampler: weights must sum to 1");
  const Index d = means.front().size();
  std::vector<Matrix> lowers;
  for (std::size_t c = 0; c < means.size(); ++c) {
    if (means[c].size() != d || covs[c].rows() != d) throw std::invalid_argument("mixture_sampler: dimension mismatch");
    require_spd(covs[c], "mixture_sampler: covariance");
    lowers.push_back(Eigen::LLT<Matrix>(covs[c]).matrixL());
  }

  Rng rng = make_rng(seed);
  const auto components = mixture_components(weights, m, rng);
  const PointMatrix z = standard_normal(m, d, rng);
  PointMatrix draws(m, d);
  for (Index i = 0; i < m; ++i) {
    const auto c = static_cast<std::size_t>(components[static_cast<std::size_t>(i)]);
    draws.row(i) = (lowers[c] * z.row(i).transpose() + means[c]).transpose();
  }
  return SampleSet(std::move(draws));
}

}  // namespace otl
