#include "otl/pipeline.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace otl {

TransferEstimator::TransferEstimator(EntropicMap input_map, EvaluableMap source_model, MonotoneMap1D output_map)
    : input_map_(std::move(input_map)), source_model_(std::move(source_model)), output_map_(std::move(output_map)) {
  if (input_map_.out_dim() != source_model_.in_dim()) {
    throw std::invalid_argument("TransferEstimator: input map output does not match source model input");
  }
  if (source_model_.out_dim() != 1) throw std::invalid_argument("TransferEstimator: source model must be scalar");
}

double TransferEstimator::operator()(const Point& x) const {
  return output_map_(source_model_.scalar(input_map_(x)));
}

Vector TransferEstimator::predict_batch(const PointMatrix& x) const {
  const PointMatrix moved = input_map_.eval_batch(x);
  Vector out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) out(i) = output_map_(source_model_.scalar(moved.row(i).transpose()));
  return out;
}

EvaluableMap TransferEstimator::as_map() const {
  return EvaluableMap(dim(), 1, [self = *this](const Vector& x) {
    Vector out(1);
    out(0) = self(x);
    return out;
  });
}

TransferEstimator fit_transfer(const EvaluableMap& source_model, const SampleSet& source_inputs,
                               const SampleSet& target_train, const EntropicOptions& options) {
  if (!target_train.has_responses()) throw std::invalid_argument("fit_transfer: target data needs responses");
  if (source_inputs.dim() != target_train.dim()) throw std::invalid_argument("fit_transfer: dimension mismatch");

  const SampleSet target_inputs(target_train.points());
  EntropicMap input_map = fit_entropic_map(target_inputs, source_inputs, options);

  std::vector<double> source_outputs(static_cast<std::size_t>(source_inputs.size()));
  for (Index i = 0; i < source_inputs.size(); ++i) {
    source_outputs[static_cast<std::size_t>(i)] = source_model.scalar(source_inputs.point(i));
  }
  const Vector& y = target_train.responses();
  MonotoneMap1D output_map =
      fit_quantile_map(source_outputs, std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
  return TransferEstimator(std::move(input_map), source_model, std::move(output_map));
}

EvaluableMap compose_transfer(const EvaluableMap& input_map, const EvaluableMap& source_model,
                              const MonotoneMap1D& output_map) {
  if (input_map.out_dim() != source_model.in_dim() || source_model.out_dim() != 1) {
    throw std::invalid_argument("compose_transfer: dimensions do not chain");
  }
  return EvaluableMap(input_map.in_dim(), 1, [input_map, source_model, output_map](const Vector& x) {
    Vector out(1);
    out(0) = output_map(source_model.scalar(input_map(x)));
    return out;
  });
}

double empirical_loss(const EvaluableMap& predict, const SampleSet& data) {
  const Vector& y = data.responses();
  double total = 0.0;
  for (Index i = 0; i < data.size(); ++i) {
    const double r = y(i) - predict.scalar(data.point(i));
    total += r * r;
  }
  return total / static_cast<double>(data.size());
}

double l2_error(const Vector& predictions, const Vector& truths) {
  if (predictions.size() != truths.size() || predictions.size() == 0) {
    throw std::invalid_argument("l2_error: size mismatch");
  }
  return std::sqrt((predictions - truths).squaredNorm() / static_cast<double>(predictions.size()));
}

double l2_error(const EvaluableMap& predict, const EvaluableMap& truth, const SampleSet& eval_inputs) {
  Vector p(eval_inputs.size());
  Vector t(eval_inputs.size());
  for (Index i = 0; i < eval_inputs.size(); ++i) {
    const Point x = eval_inputs.point(i);
    p(i) = predict.scalar(x);
    t(i) = truth.scalar(x);
  }
  return l2_error(p, t);
}

void save_transfer(const std::filesystem::path& dir, const TransferEstimator& est,
                   const std::string& source_description) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "input_map.csv");
    est.input_map().write_csv(out);
  }
  {
    std::ofstream out(dir / "output_map.csv");
    est.output_map().write_csv(out);
  }
  nlohmann::ordered_json manifest;
  manifest["dim"] = est.dim();
  manifest["epsilon"] = est.input_map().epsilon();
  manifest["bandwidth"] = est.input_map().bandwidth();
  manifest["input_map"] = "input_map.csv";
  manifest["output_map"] = "output_map.csv";
  manifest["source_model"] = nlohmann::ordered_json::parse(source_description);
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  if (!out) throw std::runtime_error("save_transfer: failed writing " + (dir / "manifest.json").string());
}

TransferEstimator load_transfer(const std::filesystem::path& dir, const EvaluableMap& source_model) {
  std::ifstream manifest_in(dir / "manifest.json");
  if (!manifest_in) throw std::invalid_argument("load_transfer: missing manifest.json in " + dir.string());
  const auto manifest = nlohmann::json::parse(manifest_in);
  std::ifstream input_in(dir / manifest.at("input_map").get<std::string>());
  std::ifstream output_in(dir / manifest.at("output_map").get<std::string>());
  if (!input_in || !output_in) throw std::invalid_argument("load_transfer: missing map CSV in " + dir.string());
  return TransferEstimator(EntropicMap::read_csv(input_in), source_model, MonotoneMap1D::read_csv(output_in));
}

}  // namespace otl
