#include "otl/config.hpp"
#include "otl/core.hpp"
#include "otl/metrics.hpp"
#include "otl/ot1d.hpp"
#include "otl/ot_nd.hpp"
#include "otl/pipeline.hpp"
#include "otl/rates.hpp"
#include "otl/regression.hpp"
#include "otl/synthetic.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <variant>

namespace py = pybind11;
using namespace otl;

namespace {

// A source model is either an affine functional or any Python callable
// taking a 1-D array and returning a float.
using SourceModel = std::variant<AffineFunctional, py::function>;

EvaluableMap source_map(const SourceModel& model, Index d) {
  if (const auto* affine = std::get_if<AffineFunctional>(&model)) return affine->as_map();
  py::function fn = std::get<py::function>(model);
  return EvaluableMap(d, 1, [fn](const Vector& x) {
    py::gil_scoped_acquire gil;
    Vector out(1);
    out(0) = fn(x).cast<double>();
    return out;
  });
}

EntropicOptions entropic_options(std::optional<double> epsilon, double epsilon_scale, std::optional<double> bandwidth,
                                 double bandwidth_scale, std::optional<double> bandwidth_exponent, double tol,
                                 int max_iter) {
  EntropicOptions o;
  o.epsilon = epsilon;
  o.epsilon_scale = epsilon_scale;
  o.bandwidth = bandwidth;
  o.bandwidth_scale = bandwidth_scale;
  o.bandwidth_exponent = bandwidth_exponent;
  o.tol = tol;
  o.max_iter = max_iter;
  return o;
}

SinkhornDomain parse_domain(const std::string& name) {
  if (name == "auto") return SinkhornDomain::Automatic;
  if (name == "scaling") return SinkhornDomain::Scaling;
  if (name == "log") return SinkhornDomain::Log;
  throw std::invalid_argument("domain must be 'auto', 'scaling' or 'log'");
}

std::vector<bool> to_bools(const std::vector<int>& v) { return {v.begin(), v.end()}; }

std::unique_ptr<bool[]> as_bool_array(const std::vector<bool>& v) {
  auto out = std::make_unique<bool[]>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Transfer learning through optimal transport maps";

  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<AffineFunctional>(m, "AffineFunctional")
      .def(py::init([](Vector weights, double bias) { return AffineFunctional{std::move(weights), bias}; }),
           py::arg("weights"), py::arg("bias") = 0.0)
      .def_readonly("weights", &AffineFunctional::weights)
      .def_readonly("bias", &AffineFunctional::bias)
      .def("__call__", [](const AffineFunctional& f, const Vector& x) { return f(x); });

  py::class_<MonotoneMap1D>(m, "MonotoneMap1D")
      .def(py::init<std::vector<double>, std::vector<double>>(), py::arg("knots_x"), py::arg("knots_y"))
      .def("__call__", [](const MonotoneMap1D& f, double x) { return f(x); })
      .def("__call__", [](const MonotoneMap1D& f, py::array_t<double> x) { return py::vectorize([&f](double v) { return f(v); })(x); })
      .def_property_readonly("knots_x", &MonotoneMap1D::knots_x)
      .def_property_readonly("knots_y", &MonotoneMap1D::knots_y)
      .def("lipschitz", &MonotoneMap1D::lipschitz);

  m.def(
      "fit_quantile_map",
      [](const std::vector<double>& src, const std::vector<double>& tgt) { return fit_quantile_map(src, tgt); },
      py::arg("src"), py::arg("tgt"), "Monotone map pushing the src sample onto the tgt sample.");

  m.def(
      "sinkhorn",
      [](const Matrix& cost, const Vector& a, const Vector& b, double epsilon, double tol, int max_iter,
         const std::string& domain) {
        SinkhornOptions o;
        o.epsilon = epsilon;
        o.tol = tol;
        o.max_iter = max_iter;
        o.domain = parse_domain(domain);
        SinkhornResult r;
        {
          py::gil_scoped_release release;
          r = sinkhorn(CostMatrix(cost), a, b, o);
        }
        py::dict out;
        out["plan"] = r.plan.weights;
        out["iterations"] = r.iterations;
        out["violation"] = r.violation;
        out["converged"] = r.converged;
        out["log_domain"] = r.log_domain;
        return out;
      },
      py::arg("cost"), py::arg("a"), py::arg("b"), py::arg("epsilon"), py::arg("tol") = 1e-9,
      py::arg("max_iter") = 10000, py::arg("domain") = "auto");

  m.def(
      "exact_assignment",
      [](const Matrix& cost) {
        const Assignment a = exact_assignment_oracle(CostMatrix(cost));
        return py::make_tuple(a.permutation, a.total_cost);
      },
      py::arg("cost"), "Optimal permutation by enumeration (n <= 10) and its total cost.");

  py::class_<EntropicMap>(m, "EntropicMap")
      .def("__call__", [](const EntropicMap& f, const PointMatrix& x) { return f.eval_batch(x); })
      .def_property_readonly("support_in", &EntropicMap::support_in)
      .def_property_readonly("support_out", &EntropicMap::support_out)
      .def_property_readonly("bandwidth", &EntropicMap::bandwidth)
      .def_property_readonly("epsilon", &EntropicMap::epsilon);

  m.def(
      "fit_entropic_map",
      [](const PointMatrix& src, const PointMatrix& tgt, std::optional<double> epsilon, double epsilon_scale,
         std::optional<double> bandwidth, double bandwidth_scale, std::optional<double> bandwidth_exponent, double tol,
         int max_iter) {
        const EntropicOptions o =
            entropic_options(epsilon, epsilon_scale, bandwidth, bandwidth_scale, bandwidth_exponent, tol, max_iter);
        py::gil_scoped_release release;
        return fit_entropic_map(SampleSet(src), SampleSet(tgt), o);
      },
      py::arg("src"), py::arg("tgt"), py::kw_only(), py::arg("epsilon") = py::none(), py::arg("epsilon_scale") = 0.05,
      py::arg("bandwidth") = py::none(), py::arg("bandwidth_scale") = 1.06, py::arg("bandwidth_exponent") = py::none(),
      py::arg("tol") = 1e-9, py::arg("max_iter") = 10000);

  m.def(
      "gaussian_monge_map",
      [](const Vector& m1, const Matrix& s1, const Vector& m2, const Matrix& s2) {
        const AffineMap a = gaussian_monge_map(m1, s1, m2, s2);
        return py::make_tuple(a.linear, a.offset);
      },
      py::arg("m1"), py::arg("s1"), py::arg("m2"), py::arg("s2"), "Linear part and offset of the Monge map.");

  py::class_<DirectEstimator>(m, "DirectEstimator")
      .def("predict", &DirectEstimator::predict_batch, py::arg("x"), py::call_guard<py::gil_scoped_release>())
      .def_property_readonly("degree", &DirectEstimator::degree)
      .def_property_readonly("bandwidth", &DirectEstimator::bandwidth);

  m.def(
      "fit_direct",
      [](const PointMatrix& x, const Vector& y, double p, double c_bw) {
        return fit_direct(SampleSet(x, y), p, c_bw);
      },
      py::arg("x"), py::arg("y"), py::arg("p") = 1.0, py::arg("c_bw") = 1.0);

  py::class_<TransferEstimator>(m, "TransferEstimator")
      .def("predict", &TransferEstimator::predict_batch, py::arg("x"))
      .def_property_readonly("input_map", &TransferEstimator::input_map)
      .def_property_readonly("output_map", &TransferEstimator::output_map);

  m.def(
      "fit_transfer",
      [](const SourceModel& source_model, const PointMatrix& source_inputs, const PointMatrix& target_x,
         const Vector& target_y, std::optional<double> epsilon, double epsilon_scale, std::optional<double> bandwidth,
         double bandwidth_scale, std::optional<double> bandwidth_exponent, double tol, int max_iter) {
        const EntropicOptions o =
            entropic_options(epsilon, epsilon_scale, bandwidth, bandwidth_scale, bandwidth_exponent, tol, max_iter);
        return fit_transfer(source_map(source_model, source_inputs.cols()), SampleSet(source_inputs),
                            SampleSet(target_x, target_y), o);
      },
      py::arg("source_model"), py::arg("source_inputs"), py::arg("target_x"), py::arg("target_y"), py::kw_only(),
      py::arg("epsilon") = py::none(), py::arg("epsilon_scale") = 0.05, py::arg("bandwidth") = py::none(),
      py::arg("bandwidth_scale") = 1.06, py::arg("bandwidth_exponent") = py::none(), py::arg("tol") = 1e-9,
      py::arg("max_iter") = 10000);

  m.def(
      "auroc",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        const auto b = as_bool_array(to_bools(labels));
        return auroc(scores, std::span<const bool>(b.get(), labels.size()));
      },
      py::arg("scores"), py::arg("labels"));

  m.def(
      "classification_metrics",
      [](const std::vector<double>& scores, const std::vector<int>& labels, double threshold) {
        const auto b = as_bool_array(to_bools(labels));
        const ConfusionCounts c = confusion(scores, std::span<const bool>(b.get(), labels.size()), threshold);
        py::dict out;
        out["tp"] = c.tp;
        out["fp"] = c.fp;
        out["tn"] = c.tn;
        out["fn"] = c.fn;
        out["accuracy"] = accuracy(c);
        out["precision"] = precision(c);
        out["sensitivity"] = sensitivity(c);
        return out;
      },
      py::arg("scores"), py::arg("labels"), py::arg("threshold"));

  m.def("relative_improvement", &relative_improvement, py::arg("metric_tl"), py::arg("metric_direct"));

  m.def(
      "theoretical_transfer_exponent",
      [](Index d, double alpha) {
        const RateDescriptor r = theoretical_transfer_exponent(d, alpha);
        return py::make_tuple(r.exponent, r.log_corrected);
      },
      py::arg("d"), py::arg("alpha"), "(exponent, log_corrected)");
  m.def("theoretical_direct_exponent", &theoretical_direct_exponent, py::arg("d"), py::arg("p"));
  m.def("advantage_condition", &advantage_condition, py::arg("alpha"), py::arg("p"));
  m.def(
      "fit_loglog_slope",
      [](const std::vector<std::pair<double, double>>& points) {
        const SlopeFit f = fit_loglog_slope(points);
        return py::make_tuple(f.slope, f.std_error, f.r_squared);
      },
      py::arg("points"), "(slope, std_error, r_squared) of log error on log m.");

  m.def(
      "_run_rates",
      [](const std::string& config_json) {
        const ExperimentConfig cfg = parse_config(nlohmann::json::parse(config_json), "rates");
        py::gil_scoped_release release;
        return to_json(run_rate_experiment(cfg.rates)).dump();
      },
      py::arg("config_json"));
  m.def(
      "_run_classification",
      [](const std::string& config_json) {
        const ExperimentConfig cfg = parse_config(nlohmann::json::parse(config_json), "classify");
        py::gil_scoped_release release;
        return to_json(run_classification_experiment(cfg.rates, cfg.threshold)).dump();
      },
      py::arg("config_json"));
}
