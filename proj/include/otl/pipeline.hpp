#pragma once

#include "otl/core.hpp"
#include "otl/ot1d.hpp"
#include "otl/ot_nd.hpp"

#include <filesystem>
#include <string>

namespace otl {

/// Prediction through a fixed source model: output_map(source(input_map(x))).
class TransferEstimator {
 public:
  /// Throws std::invalid_argument unless the dimensions chain.
  TransferEstimator(EntropicMap input_map, EvaluableMap source_model, MonotoneMap1D output_map);

  const EntropicMap& input_map() const { return input_map_; }
  const EvaluableMap& source_model() const { return source_model_; }
  const MonotoneMap1D& output_map() const { return output_map_; }
  Index dim() const { return input_map_.in_dim(); }

  double operator()(const Point& x) const;
  Vector predict_batch(const PointMatrix& x) const;
  EvaluableMap as_map() const;

 private:
  EntropicMap input_map_;
  EvaluableMap source_model_;
  MonotoneMap1D output_map_;
};

/// Input map from target inputs to source inputs, output map from source
/// model outputs on source inputs to observed target responses.
TransferEstimator fit_transfer(const EvaluableMap& source_model, const SampleSet& source_inputs,
                               const SampleSet& target_train, const EntropicOptions& options = {});

inline double predict_transfer(const TransferEstimator& est, const Point& x) { return est(x); }

/// output_map . source_model . input_map for arbitrary component maps.
EvaluableMap compose_transfer(const EvaluableMap& input_map, const EvaluableMap& source_model,
                              const MonotoneMap1D& output_map);

/// Mean squared residual of a scalar predictor over labelled data.
double empirical_loss(const EvaluableMap& predict, const SampleSet& data);

/// Root-mean-square difference of two scalar maps over the given inputs.
double l2_error(const EvaluableMap& predict, const EvaluableMap& truth, const SampleSet& eval_inputs);
/// Same, from precomputed predictions and truths.
double l2_error(const Vector& predictions, const Vector& truths);

/// Writes `input_map.csv`, `output_map.csv` and `manifest.json` into `dir`.
/// `source_description` is embedded verbatim as the manifest's
/// "source_model" value (a JSON document).
void save_transfer(const std::filesystem::path& dir, const TransferEstimator& est,
                   const std::string& source_description);

/// Reloads the two maps; the pretrained source model is supplied by the caller.
TransferEstimator load_transfer(const std::filesystem::path& dir, const EvaluableMap& source_model);

}  // namespace otl
