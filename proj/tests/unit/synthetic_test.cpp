#include "otl/synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace otl;

namespace {

Matrix random_spd(Index d, Rng& rng) {
  const PointMatrix g = standard_normal(d, d, rng);
  return g * g.transpose() + 0.1 * Matrix::Identity(d, d);
}

}  // namespace

TEST_CASE("Gaussian Monge map pushes covariance and mean") {
  Rng rng = make_rng(Seed{1});
  for (int trial = 0; trial < 50; ++trial) {
    const Index d = 1 + trial % 8;
    const Matrix s1 = random_spd(d, rng);
    const Matrix s2 = random_spd(d, rng);
    const Vector m1 = standard_normal(1, d, rng).row(0).transpose();
    const Vector m2 = standard_normal(1, d, rng).row(0).transpose();
    const AffineMap t = gaussian_monge_map(m1, s1, m2, s2);
    const double scale = std::max(1.0, s2.norm());
    CHECK((t.linear * s1 * t.linear.transpose() - s2).norm() / scale < 1e-10);
    CHECK((t(m1) - m2).norm() < 1e-10);
    CHECK((t.linear - t.linear.transpose()).norm() < 1e-12);
    CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(t.linear).eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("Gaussian Monge map of scalar laws") {
  Vector m1(1), m2(1);
  m1 << 0.0;
  m2 << 1.0;
  Matrix s1(1, 1), s2(1, 1);
  s1 << 1.0;
  s2 << 4.0;
  const AffineMap t = gaussian_monge_map(m1, s1, m2, s2);
  CHECK(t.linear(0, 0) == doctest::Approx(2.0));
  CHECK(t.offset(0) == doctest::Approx(1.0));
}

TEST_CASE("SPD helpers") {
  Rng rng = make_rng(Seed{2});
  const Matrix s = random_spd(4, rng);
  const Matrix r = spd_sqrt(s);
  CHECK((r * r - s).norm() < 1e-10);
  CHECK((spd_inv_sqrt(s) * r - Matrix::Identity(4, 4)).norm() < 1e-8);
  Matrix asym = s;
  asym(0, 1) += 1.0;
  CHECK_THROWS_AS(require_spd(asym, "m"), std::invalid_argument);
  CHECK_THROWS_AS(require_spd(-s, "m"), std::invalid_argument);
  CHECK_THROWS_AS(require_spd(Matrix::Ones(2, 3), "m"), std::invalid_argument);
}

TEST_CASE("kinked task ground truth") {
  const GaussianTaskSpec spec = kinked_task(4, 0.0, 1.0, 3.0, 0.0);
  const GroundTruth truth = build_ground_truth(spec);
  // identical laws: the input map is the identity
  CHECK((truth.input_map.linear - Matrix::Identity(4, 4)).norm() < 1e-12);
  CHECK(truth.input_map.offset.norm() < 1e-12);
  Vector x = Vector::Constant(4, 0.25);  // u.x = 0.5
  CHECK(truth.target_regressor(x) == doctest::Approx(1.5));
  CHECK(truth.target_regressor(-x) == doctest::Approx(-0.5));
  CHECK(truth.target_map().scalar(x) == doctest::Approx(1.5));
  CHECK(spec.output_lipschitz == 3.0);
  CHECK(std::isinf(spec.alpha));
}

TEST_CASE("task validation") {
  GaussianTaskSpec spec = kinked_task(3);
  CHECK_NOTHROW(spec.validate());
  spec.grad_lower = 2.0;
  spec.grad_upper = 3.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = kinked_task(3);
  spec.output_lipschitz = 1.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = kinked_task(3);
  spec.noise_sd = -1.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = kinked_task(3);
  spec.source_mean = Vector::Zero(2);
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  CHECK_THROWS_AS(kinked_task(0), std::invalid_argument);
  CHECK_THROWS_AS(kinked_task(2, 0.0, -1.0, 1.0), std::invalid_argument);
}

TEST_CASE("sampled tasks are reproducible and carry the stated noise") {
  const GaussianTaskSpec spec = kinked_task(2, 0.0, 1.0, 3.0, 0.5);
  const GroundTruth truth = build_ground_truth(spec);
  const TaskSample a = sample_task(spec, 20000, 300, Seed{3});
  const TaskSample b = sample_task(spec, 20000, 300, Seed{3});
  CHECK((a.target.points().array() == b.target.points().array()).all());
  CHECK((a.target.responses().array() == b.target.responses().array()).all());

  const Vector resid = a.target.responses() - truth.target_regressor_batch(a.target.points());
  const double mean = resid.mean();
  const double sd = std::sqrt((resid.array() - mean).square().sum() / static_cast<double>(resid.size() - 1));
  CHECK(std::abs(mean) < 0.02);
  CHECK(sd == doctest::Approx(0.5).epsilon(0.03));

  for (Index i = 0; i < a.source.size(); ++i) {
    CHECK(a.source.responses()(i) == doctest::Approx(spec.source_model(a.source.point(i))).epsilon(1e-15));
  }
  CHECK_THROWS_AS(sample_task(spec, 0, 10, Seed{1}), std::invalid_argument);
}

TEST_CASE("Gaussian sampler moments") {
  Vector mean(2);
  mean << 1.0, -2.0;
  Matrix cov(2, 2);
  cov << 2.0, 0.6, 0.6, 1.0;
  Rng rng = make_rng(Seed{4});
  const PointMatrix x = sample_gaussian(mean, cov, 100000, rng);
  const Vector m = column_means(x);
  PointMatrix centred = x.rowwise() - m.transpose();
  const Matrix c = centred.transpose() * centred / 99999.0;
  CHECK((m - mean).norm() < 0.02);
  CHECK((c - cov).norm() < 0.05);
}

TEST_CASE("mixture sampler component frequencies") {
  const std::vector<double> w{0.2, 0.5, 0.3};
  const std::vector<Vector> means{Vector::Constant(1, -10.0), Vector::Constant(1, 0.0), Vector::Constant(1, 10.0)};
  const std::vector<Matrix> covs(3, Matrix::Identity(1, 1));
  const SampleSet s = mixture_sampler(w, means, covs, 50000, Seed{5});
  double counts[3] = {0, 0, 0};
  for (Index i = 0; i < s.size(); ++i) {
    const double v = s.points()(i, 0);
    counts[v < -5.0 ? 0 : (v > 5.0 ? 2 : 1)] += 1.0;
  }
  for (int c = 0; c < 3; ++c) CHECK(counts[c] / 50000.0 == doctest::Approx(w[static_cast<std::size_t>(c)]).epsilon(0.05));

  CHECK_THROWS_AS(mixture_sampler({0.5, 0.6}, {means[0], means[1]}, {covs[0], covs[1]}, 10, Seed{1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(mixture_sampler({1.0}, {means[0], means[1]}, {covs[0]}, 10, Seed{1}), std::invalid_argument);
}
