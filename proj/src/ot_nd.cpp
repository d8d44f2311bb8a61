#include "otl/ot_nd.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace otl {

namespace {

struct Potentials {
  bool log_domain = false;
  // Scaling vectors (u, v), or dual potentials (f, g) in the log domain.
  Vector first;
  Vector second;
  int iterations = 0;
  double row_violation = 0.0;
  bool converged = false;
};

void check_marginal(const Vector& w, Index expected, const char* name) {
  if (w.size() != expected) {
    throw std::invalid_argument(std::string("sinkhorn: ") + name + " marginal does not match cost shape");
  }
  if (!w.allFinite() || w.minCoeff() < 0.0 || std::abs(w.sum() - 1.0) > 1e-9) {
    throw std::invalid_argument(std::string("sinkhorn: ") + name + " marginal is not a probability vector");
  }
}

bool use_log_domain(SinkhornDomain domain, double epsilon, double mean_cost) {
  switch (domain) {
    case SinkhornDomain::Log:
      return true;
    case SinkhornDomain::Scaling:
      return false;
    case SinkhornDomain::Automatic:
      break;
  }
  return mean_cost > 0.0 && epsilon / mean_cost < kLogDomainThreshold;
}

[[noreturn]] void underflow(double epsilon) {
  std::ostringstream msg;
  msg << "sinkhorn: Gibbs kernel underflow at epsilon=" << epsilon << "; use log-domain mode";
  throw NumericalError(msg.str());
}

// `work` holds the cost on entry and the Gibbs kernel exp(-C / epsilon) on
// return.
Potentials scaling_iterations(Matrix& work, const Vector& a, const Vector& b, double epsilon, double tol,
                              int max_iter) {
  // Eigen's vectorised exp clamps large negative arguments instead of
  // returning 0, which would hide underflow behind a constant kernel. Zero
  // everything below the smallest normal double explicitly.
  const double floor = std::log(std::numeric_limits<double>::min());
  work.array() /= -epsilon;
  work = (work.array() >= floor).select(work.array().exp(), 0.0);
  Potentials p;
  p.first = Vector::Zero(a.size());
  p.second = Vector::Ones(b.size());
  Vector kv(a.size());
  for (int it = 0;; ++it) {
    kv.noalias() = work * p.second;
    if (it > 0) {
      p.row_violation = (p.first.cwiseProduct(kv) - a).lpNorm<1>();
      if (!std::isfinite(p.row_violation)) underflow(epsilon);
      if (p.row_violation < tol) {
        p.converged = true;
        break;
      }
    }
    if (it == max_iter) break;
    for (Index i = 0; i < kv.size(); ++i) {
      if (!(kv(i) > 0.0) && a(i) > 0.0) underflow(epsilon);
      p.first(i) = a(i) > 0.0 ? a(i) / kv(i) : 0.0;
    }
    const Vector ktu = work.transpose() * p.first;
    for (Index j = 0; j < ktu.size(); ++j) {
      if (!(ktu(j) > 0.0) && b(j) > 0.0) underflow(epsilon);
      p.second(j) = b(j) > 0.0 ? b(j) / ktu(j) : 0.0;
    }
    if (!p.first.allFinite() || !p.second.allFinite()) underflow(epsilon);
    p.iterations = it + 1;
  }
  return p;
}

double log_sum_exp(const Eigen::Ref<const Vector>& x) {
  const double c = x.maxCoeff();
  if (!std::isfinite(c)) return c;
  return c + std::log((x.array() - c).exp().sum());
}

double safe_log(double w) { return w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity(); }

// `work` holds the cost throughout.
Potentials log_iterations(const Matrix& cost, const Vector& a, const Vector& b, double epsilon, double tol,
                          int max_iter) {
  const Index n = cost.rows();
  const Index m = cost.cols();
  Potentials p;
  p.log_domain = true;
  p.first = Vector::Zero(n);
  p.second = Vector::Zero(m);
  Vector row_lse(n);
  Vector scratch_row(m);
  Vector scratch_col(n);
  for (int it = 0;; ++it) {
    for (Index i = 0; i < n; ++i) {
      scratch_row = (p.second - cost.row(i).transpose()) / epsilon;
      row_lse(i) = log_sum_exp(scratch_row);
    }
    if (it > 0) {
      double violation = 0.0;
      for (Index i = 0; i < n; ++i) {
        const double mass = a(i) > 0.0 ? std::exp(p.first(i) / epsilon + row_lse(i)) : 0.0;
        violation += std::abs(mass - a(i));
      }
      p.row_violation = violation;
      if (!std::isfinite(violation)) throw NumericalError("sinkhorn: non-finite log-domain iterate");
      if (violation < tol) {
        p.converged = true;
        break;
      }
    }
    if (it == max_iter) break;
    for (Index i = 0; i < n; ++i) p.first(i) = epsilon * (safe_log(a(i)) - row_lse(i));
    for (Index j = 0; j < m; ++j) {
      scratch_col = (p.first - cost.col(j)) / epsilon;
      p.second(j) = epsilon * (safe_log(b(j)) - log_sum_exp(scratch_col));
    }
    p.iterations = it + 1;
  }
  return p;
}

Potentials run_sinkhorn(Matrix& work, const Vector& a, const Vector& b, double epsilon, double tol,
                        int max_iter, bool log_domain) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("sinkhorn: epsilon must be positive");
  if (!(tol > 0.0)) throw std::invalid_argument("sinkhorn: tol must be positive");
  if (max_iter < 1) throw std::invalid_argument("sinkhorn: max_iter must be positive");
  if (log_domain) return log_iterations(work, a, b, epsilon, tol, max_iter);
  return scaling_iterations(work, a, b, epsilon, tol, max_iter);
}

double gibbs(double f, double g, double c, double epsilon) { return std::exp((f + g - c) / epsilon); }

Matrix log_plan(const Matrix& cost, const Vector& f, const Vector& g, double epsilon) {
  Matrix plan(cost.rows(), cost.cols());
  for (Index j = 0; j < cost.cols(); ++j) {
    for (Index i = 0; i < cost.rows(); ++i) plan(i, j) = gibbs(f(i), g(j), cost(i, j), epsilon);
  }
  return plan;
}

double dual_objective(const Matrix& cost, const Vector& f, const Vector& g, const Vector& a, const Vector& b,
                      double epsilon) {
  return f.dot(a) + g.dot(b) - epsilon * log_plan(cost, f, g, epsilon).sum();
}

// Damped Newton ascent on the dual, started from the Sinkhorn potentials.
// Sweeps slow down to a sublinear crawl once epsilon is small against the
// cost range; a handful of Newton steps then finishes the job. Converts `p`
// to log-domain potentials. Returns the number of steps taken.
int newton_polish(const Matrix& cost, const Vector& a, const Vector& b, double epsilon, double tol, Potentials& p) {
  if (!p.log_domain) {
    p.first = epsilon * p.first.array().log().matrix();
    p.second = epsilon * p.second.array().log().matrix();
    p.log_domain = true;
  }
  if (!p.first.allFinite() || !p.second.allFinite()) return 0;
  const Index n = cost.rows();
  const Index m = cost.cols();
  const Index k = n + m - 1;  // the last column potential is pinned
  constexpr int kMaxSteps = 100;
  int steps = 0;
  for (; steps < kMaxSteps; ++steps) {
    const Matrix plan = log_plan(cost, p.first, p.second, epsilon);
    const Vector row_gap = a - plan.rowwise().sum();
    const Vector col_gap = b - plan.colwise().sum().transpose();
    p.row_violation = row_gap.lpNorm<1>() + col_gap.lpNorm<1>();
    if (!std::isfinite(p.row_violation)) break;
    if (p.row_violation < tol) {
      p.converged = true;
      break;
    }
    Matrix h = Matrix::Zero(k, k);
    h.topLeftCorner(n, n).diagonal() = plan.rowwise().sum();
    h.bottomRightCorner(m - 1, m - 1).diagonal() = plan.colwise().sum().transpose().head(m - 1);
    h.topRightCorner(n, m - 1) = plan.leftCols(m - 1);
    h.bottomLeftCorner(m - 1, n) = plan.leftCols(m - 1).transpose();
    Vector grad(k);
    grad << row_gap, col_gap.head(m - 1);
    // The Hessian is PSD but can be close to singular; LDLT then reports tiny
    // negative pivots while still giving a usable direction. The line search
    // below rejects directions that do not help.
    const Eigen::LDLT<Matrix> ldlt(h);
    const Vector step = epsilon * ldlt.solve(grad);
    if (!step.allFinite()) break;

    const double current = dual_objective(cost, p.first, p.second, a, b, epsilon);
    double t = 1.0;
    bool moved = false;
    for (; t > 1e-12; t *= 0.5) {
      Vector f = p.first + t * step.head(n);
      Vector g = p.second;
      g.head(m - 1) += t * step.tail(m - 1);
      const double value = dual_objective(cost, f, g, a, b, epsilon);
      if (value >= current - 1e-15 * std::abs(current)) {
        p.first = std::move(f);
        p.second = std::move(g);
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return steps;
}

// Overwrites `work` (kernel or cost, matching `p`) with the coupling.
void materialize_plan(Matrix& work, const Potentials& p, double epsilon) {
  if (p.log_domain) {
    for (Index j = 0; j < work.cols(); ++j) {
      for (Index i = 0; i < work.rows(); ++i) {
        work(i, j) = std::exp((p.first(i) + p.second(j) - work(i, j)) / epsilon);
      }
    }
  } else {
    work.array().colwise() *= p.first.array();
    work.array().rowwise() *= p.second.transpose().array();
  }
}

Matrix pairwise_squared_distances(const PointMatrix& a, const PointMatrix& b) {
  const Vector a_norm = a.rowwise().squaredNorm();
  const Vector b_norm = b.rowwise().squaredNorm();
  Matrix c(a.rows(), b.rows());
  c.noalias() = -2.0 * (a * b.transpose());
  c.colwise() += a_norm;
  c.rowwise() += b_norm.transpose();
  c.array() = c.array().max(0.0);
  return c;
}

}  // namespace

CostMatrix::CostMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.size() == 0) throw std::invalid_argument("CostMatrix: empty");
  if (!entries_.allFinite() || entries_.minCoeff() < 0.0) {
    throw std::invalid_argument("CostMatrix: entries must be finite and nonnegative");
  }
}

CostMatrix squared_cost(const SampleSet& a, const SampleSet& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("squared_cost: dimension mismatch");
  const auto& pa = a.points();
  const auto& pb = b.points();
  Matrix c(pa.rows(), pb.rows());
  for (Index i = 0; i < pa.rows(); ++i) {
    for (Index j = 0; j < pb.rows(); ++j) c(i, j) = (pa.row(i) - pb.row(j)).squaredNorm();
  }
  return CostMatrix(std::move(c));
}

SinkhornResult sinkhorn(const CostMatrix& cost, const Vector& row_marginal, const Vector& col_marginal,
                        const SinkhornOptions& options) {
  check_marginal(row_marginal, cost.rows(), "row");
  check_marginal(col_marginal, cost.cols(), "column");
  const bool log_domain = use_log_domain(options.domain, options.epsilon, cost.mean());

  Matrix work = cost.entries();
  Potentials p =
      run_sinkhorn(work, row_marginal, col_marginal, options.epsilon, options.tol, options.max_iter, log_domain);
  int newton_steps = 0;
  if (!p.converged && cost.rows() + cost.cols() <= options.newton_max_size && row_marginal.minCoeff() > 0.0 &&
      col_marginal.minCoeff() > 0.0) {
    newton_steps = newton_polish(cost.entries(), row_marginal, col_marginal, options.epsilon, options.tol, p);
    work = cost.entries();
  }
  materialize_plan(work, p, options.epsilon);

  SinkhornResult result;
  result.iterations = p.iterations;
  result.newton_steps = newton_steps;
  result.converged = p.converged;
  result.log_domain = log_domain;
  result.violation = (work.rowwise().sum() - row_marginal).lpNorm<1>() +
                     (work.colwise().sum().transpose() - col_marginal).lpNorm<1>();
  result.plan = Coupling{std::move(work), row_marginal, col_marginal};
  return result;
}

PointMatrix barycentric_projection(const Coupling& plan, const SampleSet& tgt_points) {
  if (plan.weights.cols() != tgt_points.size()) {
    throw std::invalid_argument("barycentric_projection: coupling columns do not match target count");
  }
  if (plan.row_marginal.size() != plan.weights.rows()) {
    throw std::invalid_argument("barycentric_projection: row marginal does not match coupling rows");
  }
  PointMatrix images = plan.weights * tgt_points.points();
  for (Index i = 0; i < images.rows(); ++i) {
    if (!(plan.row_marginal(i) > 0.0)) throw std::invalid_argument("barycentric_projection: zero row marginal");
    images.row(i) /= plan.row_marginal(i);
  }
  return images;
}

EntropicMap::EntropicMap(PointMatrix support_in, PointMatrix support_out, double bandwidth, double epsilon)
    : support_in_(std::move(support_in)),
      support_out_(std::move(support_out)),
      bandwidth_(bandwidth),
      epsilon_(epsilon) {
  if (support_in_.rows() < 1 || support_in_.rows() != support_out_.rows()) {
    throw std::invalid_argument("EntropicMap: support lists must be nonempty and of equal length");
  }
  if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_)) {
    throw std::invalid_argument("EntropicMap: bandwidth must be positive");
  }
  if (!support_in_.allFinite() || !support_out_.allFinite()) {
    throw std::invalid_argument("EntropicMap: non-finite support");
  }
}

Point EntropicMap::operator()(const Point& x) const {
  if (x.size() != in_dim()) throw std::invalid_argument("EntropicMap: input dimension mismatch");
  PointMatrix row(1, x.size());
  row.row(0) = x.transpose();
  return eval_batch(row).row(0).transpose();
}

PointMatrix EntropicMap::eval_batch(const PointMatrix& x) const {
  if (x.cols() != in_dim()) throw std::invalid_argument("EntropicMap: input dimension mismatch");
  const double scale = 1.0 / (2.0 * bandwidth_ * bandwidth_);
  const Index n = size();
  PointMatrix out(x.rows(), out_dim());
  Vector logits(n);
  for (Index r = 0; r < x.rows(); ++r) {
    for (Index i = 0; i < n; ++i) logits(i) = -(support_in_.row(i) - x.row(r)).squaredNorm() * scale;
    const double top = logits.maxCoeff();
    const Vector w = (logits.array() - top).exp().matrix();
    out.row(r) = (w.transpose() * support_out_) / w.sum();
  }
  return out;
}

EvaluableMap EntropicMap::as_map() const {
  return EvaluableMap(in_dim(), out_dim(), [self = *this](const Vector& x) { return self(x); });
}

void EntropicMap::write_csv(std::ostream& out) const {
  const auto old_precision = out.precision(17);
  out << "# bandwidth=" << bandwidth_ << ",epsilon=" << epsilon_ << '\n';
  for (Index k = 0; k < in_dim(); ++k) out << (k ? "," : "") << 'x' << (k + 1);
  for (Index k = 0; k < out_dim(); ++k) out << ",t" << (k + 1);
  out << '\n';
  for (Index i = 0; i < size(); ++i) {
    for (Index k = 0; k < in_dim(); ++k) out << (k ? "," : "") << support_in_(i, k);
    for (Index k = 0; k < out_dim(); ++k) out << ',' << support_out_(i, k);
    out << '\n';
  }
  out.precision(old_precision);
}

EntropicMap EntropicMap::read_csv(std::istream& in) {
  std::string line;
  double bandwidth = 0.0;
  double epsilon = 0.0;
  bool found = false;
  while (!found && std::getline(in, line)) {
    if (line.empty() || line[0] != '#') break;
    found = std::sscanf(line.c_str(), "# bandwidth=%lf,epsilon=%lf", &bandwidth, &epsilon) == 2;
  }
  if (!found) {
    throw std::invalid_argument("EntropicMap CSV: missing '# bandwidth=..,epsilon=..' line");
  }
  if (!std::getline(in, line)) throw std::invalid_argument("EntropicMap CSV: missing column header");
  Index d_in = 0;
  Index d_out = 0;
  {
    std::stringstream ss(line);
    std::string name;
    while (std::getline(ss, name, ',')) {
      if (!name.empty() && name[0] == 'x') {
        ++d_in;
      } else if (!name.empty() && name[0] == 't') {
        ++d_out;
      } else {
        throw std::invalid_argument("EntropicMap CSV: unexpected column '" + name + "'");
      }
    }
  }
  std::vector<double> values;
  Index n = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    Index count = 0;
    while (std::getline(ss, field, ',')) {
      values.push_back(std::stod(field));
      ++count;
    }
    if (count != d_in + d_out) throw std::invalid_argument("EntropicMap CSV: ragged row");
    ++n;
  }
  PointMatrix sin(n, d_in);
  PointMatrix sout(n, d_out);
  std::size_t at = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < d_in; ++k) sin(i, k) = values[at++];
    for (Index k = 0; k < d_out; ++k) sout(i, k) = values[at++];
  }
  return EntropicMap(std::move(sin), std::move(sout), bandwidth, epsilon);
}

double mean_squared_distance(const PointMatrix& a, const PointMatrix& b) {
  const Vector mean_a = column_means(a);
  const Vector mean_b = column_means(b);
  const double sq_a = a.rowwise().squaredNorm().mean();
  const double sq_b = b.rowwise().squaredNorm().mean();
  return std::max(0.0, sq_a + sq_b - 2.0 * mean_a.dot(mean_b));
}

double default_bandwidth(const PointMatrix& src, double scale, std::optional<double> exponent) {
  const Index n = src.rows();
  const Index d = src.cols();
  const double sd = n > 1 ? std::sqrt(column_stddevs(src).squaredNorm() / static_cast<double>(d)) : 1.0;
  const double rate = exponent.value_or(1.0 / (4.0 + static_cast<double>(d)));
  const double h = scale * sd * std::pow(static_cast<double>(n), -rate);
  // Degenerate (zero-spread) samples still need a positive length-scale.
  return h > 0.0 ? h : scale;
}

EntropicMap fit_entropic_map(const SampleSet& src, const SampleSet& tgt, const EntropicOptions& options) {
  if (src.dim() != tgt.dim()) throw std::invalid_argument("fit_entropic_map: dimension mismatch");
  const double mean_cost = mean_squared_distance(src.points(), tgt.points());
  double epsilon = options.epsilon.value_or(options.epsilon_scale * mean_cost);
  if (!options.epsilon && !(epsilon > 0.0)) epsilon = options.epsilon_scale;  // coincident samples
  if (!(epsilon > 0.0)) throw std::invalid_argument("fit_entropic_map: epsilon must be positive");
  const double bandwidth = options.bandwidth.value_or(
      default_bandwidth(src.points(), options.bandwidth_scale, options.bandwidth_exponent));
  if (!(bandwidth > 0.0)) throw std::invalid_argument("fit_entropic_map: bandwidth must be positive");

  const Index n = src.size();
  const Index m = tgt.size();
  const Vector a = Vector::Constant(n, 1.0 / static_cast<double>(n));
  const Vector b = Vector::Constant(m, 1.0 / static_cast<double>(m));
  const bool log_domain = use_log_domain(options.domain, epsilon, mean_cost);

  Matrix work = pairwise_squared_distances(src.points(), tgt.points());
  const Potentials p = run_sinkhorn(work, a, b, epsilon, options.tol, options.max_iter, log_domain);
  if (!p.converged) {
    std::ostringstream msg;
    msg << "fit_entropic_map: sinkhorn did not converge in " << options.max_iter
        << " sweeps (violation " << p.row_violation << ")";
    throw ConvergenceError(msg.str());
  }
  materialize_plan(work, p, epsilon);
  PointMatrix images = work * tgt.points();
  images *= static_cast<double>(n);  // divide by the uniform row marginal 1/n
  return EntropicMap(src.points(), std::move(images), bandwidth, epsilon);
}

Assignment exact_assignment_oracle(const CostMatrix& cost) {
  const Index n = cost.rows();
  if (cost.cols() != n) throw std::invalid_argument("exact_assignment_oracle: cost must be square");
  if (n > 10) throw std::invalid_argument("exact_assignment_oracle: refusing n > 10");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Assignment best;
  best.total_cost = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (Index i = 0; i < n; ++i) total += cost(i, perm[static_cast<std::size_t>(i)]);
    if (total < best.total_cost) {
      best.total_cost = total;
      best.permutation = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace otl
