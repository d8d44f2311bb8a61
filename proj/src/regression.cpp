#include "otl/regression.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace otl {

namespace {

// Exponent tuples of all monomials of total degree <= degree, constant first.
std::vector<std::vector<int>> monomial_exponents(Index d, int degree) {
  std::vector<std::vector<int>> out;
  for (int total = 0; total <= degree; ++total) {
    // Enumerate compositions of `total` into d parts.
    std::vector<int> parts(static_cast<std::size_t>(d), 0);
    auto recurse = [&](auto&& self, std::size_t k, int remaining) -> void {
      if (k + 1 == parts.size()) {
        parts[k] = remaining;
        out.push_back(parts);
        return;
      }
      for (int e = remaining; e >= 0; --e) {
        parts[k] = e;
        self(self, k + 1, remaining - e);
      }
    };
    recurse(recurse, 0, total);
  }
  return out;
}

constexpr double kRankTolerance = 1e-10;

}  // namespace

Index monomial_count(Index d, int degree) {
  // C(d + degree, degree)
  double c = 1.0;
  for (int k = 1; k <= degree; ++k) c = c * static_cast<double>(d + k) / static_cast<double>(k);
  return static_cast<Index>(std::llround(c));
}

DirectEstimator::DirectEstimator(SampleSet train, int degree, double bandwidth)
    : train_(std::move(train)), degree_(degree), bandwidth_(bandwidth) {
  if (!train_.has_responses()) throw std::invalid_argument("DirectEstimator: training data needs responses");
  if (degree_ < 0 || degree_ > 3) throw std::invalid_argument("DirectEstimator: degree must lie in [0, 3]");
  if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_)) {
    throw std::invalid_argument("DirectEstimator: bandwidth must be positive");
  }
  exponents_ = monomial_exponents(train_.dim(), degree_);
  scales_ = column_stddevs(train_.points());
  for (Index k = 0; k < scales_.size(); ++k) {
    if (!(scales_(k) > 0.0)) scales_(k) = 1.0;
  }
}

Vector DirectEstimator::kernel_weights(const Point& x) const {
  const auto& pts = train_.points();
  const Vector inv_width = (scales_ * bandwidth_).cwiseInverse();
  Vector logits(pts.rows());
  for (Index i = 0; i < pts.rows(); ++i) {
    logits(i) = -0.5 * ((pts.row(i).transpose() - x).cwiseProduct(inv_width)).squaredNorm();
  }
  const double top = logits.maxCoeff();
  return (logits.array() - top).exp().matrix();
}

double DirectEstimator::nadaraya_watson(const Vector& weights) const {
  return weights.dot(train_.responses()) / weights.sum();
}

double DirectEstimator::local_polynomial(const Point& x, const Vector& weights) const {
  const auto& pts = train_.points();
  const auto& exponents = exponents_;
  const auto q = static_cast<Index>(exponents.size());
  const Vector inv_width = (scales_ * bandwidth_).cwiseInverse();

  Matrix design(pts.rows(), q);
  Vector rhs(pts.rows());
  for (Index i = 0; i < pts.rows(); ++i) {
    const Vector z = (pts.row(i).transpose() - x).cwiseProduct(inv_width);
    const double root_w = std::sqrt(weights(i));
    for (Index c = 0; c < q; ++c) {
      double v = 1.0;
      const auto& e = exponents[static_cast<std::size_t>(c)];
      for (Index k = 0; k < dim(); ++k) {
        for (int r = 0; r < e[static_cast<std::size_t>(k)]; ++r) v *= z(k);
      }
      design(i, c) = root_w * v;
    }
    rhs(i) = root_w * train_.responses()(i);
  }
  Eigen::BDCSVD<Matrix> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  if (sv.size() < q || !(sv(q - 1) >= kRankTolerance * sv(0))) return nadaraya_watson(weights);
  const Vector coef = svd.solve(rhs);
  return coef(0);
}

double DirectEstimator::operator()(const Point& x) const {
  if (x.size() != dim()) throw std::invalid_argument("DirectEstimator: input dimension mismatch");
  const Vector w = kernel_weights(x);
  if (degree_ == 0) return nadaraya_watson(w);
  return local_polynomial(x, w);
}

Vector DirectEstimator::predict_batch(const PointMatrix& x) const {
  Vector out(x.rows());
  for (Index r = 0; r < x.rows(); ++r) out(r) = (*this)(x.row(r).transpose());
  return out;
}

EvaluableMap DirectEstimator::as_map() const {
  return EvaluableMap(dim(), 1, [self = *this](const Vector& x) {
    Vector out(1);
    out(0) = self(x);
    return out;
  });
}

DirectEstimator fit_direct(const SampleSet& train, double p, double c_bw) {
  if (!train.has_responses()) throw std::invalid_argument("fit_direct: training data needs responses");
  if (train.size() < 5) throw std::invalid_argument("fit_direct: need at least 5 samples");
  if (!(p >= 1.0 && p <= 4.0)) throw std::invalid_argument("fit_direct: smoothness p must lie in [1, 4]");
  if (!(c_bw > 0.0)) throw std::invalid_argument("fit_direct: c_bw must be positive");
  const int degree = static_cast<int>(std::ceil(p)) - 1;
  const double n = static_cast<double>(train.size());
  const double d = static_cast<double>(train.dim());
  const double bandwidth = c_bw * std::pow(n, -1.0 / (2.0 * p + d));
  return DirectEstimator(train, degree, bandwidth);
}

}  // namespace otl
