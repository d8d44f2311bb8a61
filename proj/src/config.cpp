#include "otl/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <system_error>
#include <vector>

namespace otl {

namespace {

using nlohmann::json;

// Typed access to one JSON object; every key must be consumed.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) fail("expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  std::optional<double> number(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& v = obj_.at(key);
    if (!v.is_number()) fail("'" + key + "' must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail("'" + key + "' must be finite");
    return x;
  }

  std::optional<std::int64_t> integer(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& v = obj_.at(key);
    if (!v.is_number_integer()) fail("'" + key + "' must be an integer");
    return v.get<std::int64_t>();
  }

  std::optional<std::uint64_t> unsigned_integer(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& v = obj_.at(key);
    if (!v.is_number_unsigned()) fail("'" + key + "' must be a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  std::optional<bool> boolean(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& v = obj_.at(key);
    if (!v.is_boolean()) fail("'" + key + "' must be true or false");
    return v.get<bool>();
  }

  std::optional<std::string> string(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& v = obj_.at(key);
    if (!v.is_string()) fail("'" + key + "' must be a string");
    return v.get<std::string>();
  }

  std::optional<std::vector<double>> numbers(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& v = obj_.at(key);
    if (!v.is_array()) fail("'" + key + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail("'" + key + "' must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::optional<Matrix> matrix(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& v = obj_.at(key);
    if (!v.is_array() || v.empty()) fail("'" + key + "' must be a nonempty array of rows");
    const auto rows = static_cast<Index>(v.size());
    Index cols = -1;
    Matrix out;
    for (Index i = 0; i < rows; ++i) {
      const json& row = v[static_cast<std::size_t>(i)];
      if (!row.is_array() || row.empty()) fail("'" + key + "' rows must be nonempty arrays");
      if (cols < 0) {
        cols = static_cast<Index>(row.size());
        out.resize(rows, cols);
      }
      if (static_cast<Index>(row.size()) != cols) fail("'" + key + "' rows must have equal length");
      for (Index j = 0; j < cols; ++j) {
        const json& e = row[static_cast<std::size_t>(j)];
        if (!e.is_number()) fail("'" + key + "' entries must be numbers");
        out(i, j) = e.get<double>();
      }
    }
    return out;
  }

  const json* object(const std::string& key) {
    if (!has(key)) return nullptr;
    return &obj_.at(key);
  }

  void finish() const {
    for (const auto& item : obj_.items()) {
      if (!seen_.count(item.key())) fail("unknown key '" + item.key() + "'");
    }
  }

  [[noreturn]] void fail(const std::string& message) const { throw ConfigError(where_ + ": " + message); }

 private:
  const json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

Vector to_vector(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size())); }

GaussianTaskSpec parse_task(const json& node) {
  ObjectReader r(node, "task");
  const std::string kind = r.string("kind").value_or("kinked");
  const double noise = r.number("noise_sd").value_or(0.0);
  GaussianTaskSpec spec;
  if (kind == "kinked" || kind == "identity") {
    const auto d = r.integer("dim").value_or(4);
    if (d < 1) r.fail("'dim' must be >= 1");
    if (kind == "kinked") {
      spec = kinked_task(d, r.number("kink").value_or(0.0), r.number("slope_left").value_or(1.0),
                         r.number("slope_right").value_or(3.0), noise);
    } else {
      spec = identity_task(d, noise);
    }
  } else if (kind == "gaussian") {
    const auto tm = r.numbers("target_mean");
    const auto sm = r.numbers("source_mean");
    const auto tc = r.matrix("target_cov");
    const auto sc = r.matrix("source_cov");
    const auto w = r.numbers("source_weights");
    const auto kx = r.numbers("output_knots_x");
    const auto ky = r.numbers("output_knots_y");
    if (!tm || !sm || !tc || !sc || !w) {
      r.fail("gaussian task needs target_mean, target_cov, source_mean, source_cov and source_weights");
    }
    spec.target_mean = to_vector(*tm);
    spec.source_mean = to_vector(*sm);
    spec.target_cov = *tc;
    spec.source_cov = *sc;
    spec.source_model = AffineFunctional{to_vector(*w), r.number("source_bias").value_or(0.0)};
    if (kx.has_value() != ky.has_value()) r.fail("output_knots_x and output_knots_y go together");
    spec.output_map = kx ? MonotoneMap1D(*kx, *ky) : MonotoneMap1D({0.0, 1.0}, {0.0, 1.0});
    const double norm = spec.source_model.weights.norm();
    spec.grad_lower = norm;
    spec.grad_upper = norm;
    spec.output_lipschitz = spec.output_map.lipschitz();
    spec.noise_sd = noise;
  } else {
    r.fail("unknown task kind '" + kind + "'");
  }
  r.finish();
  spec.validate();
  return spec;
}

EntropicOptions parse_solver(const json& node) {
  ObjectReader r(node, "solver");
  EntropicOptions o;
  o.epsilon = r.number("epsilon");
  if (auto v = r.number("epsilon_scale")) o.epsilon_scale = *v;
  o.bandwidth = r.number("bandwidth");
  if (auto v = r.number("bandwidth_scale")) o.bandwidth_scale = *v;
  o.bandwidth_exponent = r.number("bandwidth_exponent");
  if (auto v = r.number("tol")) o.tol = *v;
  if (auto v = r.integer("max_iter")) {
    if (*v < 1 || *v > 100000000) r.fail("'max_iter' out of range");
    o.max_iter = static_cast<int>(*v);
  }
  if (auto v = r.string("domain")) {
    if (*v == "auto") {
      o.domain = SinkhornDomain::Automatic;
    } else if (*v == "scaling") {
      o.domain = SinkhornDomain::Scaling;
    } else if (*v == "log") {
      o.domain = SinkhornDomain::Log;
    } else {
      r.fail("'domain' must be auto, scaling or log");
    }
  }
  r.finish();
  if (o.epsilon && !(*o.epsilon > 0.0)) r.fail("'epsilon' must be positive");
  if (!(o.epsilon_scale > 0.0)) r.fail("'epsilon_scale' must be positive");
  if (o.bandwidth && !(*o.bandwidth > 0.0)) r.fail("'bandwidth' must be positive");
  if (!(o.bandwidth_scale > 0.0)) r.fail("'bandwidth_scale' must be positive");
  if (o.bandwidth_exponent && !(*o.bandwidth_exponent >= 0.0)) r.fail("'bandwidth_exponent' must be >= 0");
  if (!(o.tol > 0.0)) r.fail("'tol' must be positive");
  return o;
}

DemoConfig parse_demo(const json& node) {
  ObjectReader r(node, "demo");
  DemoConfig demo;
  if (auto v = r.integer("m")) demo.m = *v;
  if (auto v = r.integer("m_source")) demo.m_source = *v;
  if (auto v = r.integer("grid_per_axis")) demo.grid_per_axis = *v;
  if (auto v = r.number("grid_radius")) demo.grid_radius = *v;
  r.finish();
  if (demo.m < 2 || demo.m_source < 2) r.fail("'m' and 'm_source' must be >= 2");
  if (demo.grid_per_axis < 2) r.fail("'grid_per_axis' must be >= 2");
  if (!(demo.grid_radius > 0.0)) r.fail("'grid_radius' must be positive");
  return demo;
}

constexpr double kMaxGridPoints = 2e5;

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& doc, std::string_view command,
                              std::optional<std::uint64_t> seed_override,
                              std::optional<std::filesystem::path> out_override) {
  if (command != "rates" && command != "classify" && command != "ot-demo") {
    throw ConfigError("unknown command '" + std::string(command) + "'");
  }
  ExperimentConfig cfg;
  cfg.command = std::string(command);
  ObjectReader r(doc, "config");

  const auto seed = r.unsigned_integer("seed");
  cfg.rates.seed = Seed{seed_override.value_or(seed.value_or(0))};
  if (auto out = r.string("output_dir")) cfg.output_dir = *out;
  if (out_override) cfg.output_dir = *out_override;

  if (const json* task = r.object("task")) {
    try {
      cfg.rates.task = parse_task(*task);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("task: ") + e.what());
    }
  } else {
    cfg.rates.task = command == "ot-demo" ? identity_task(2) : kinked_task(4);
  }
  if (const json* solver = r.object("solver")) cfg.rates.entropic = parse_solver(*solver);

  if (command == "ot-demo") {
    if (const json* demo = r.object("demo")) cfg.demo = parse_demo(*demo);
    const double cells = std::pow(static_cast<double>(cfg.demo.grid_per_axis),
                                  static_cast<double>(cfg.rates.task.dim()));
    if (cells > kMaxGridPoints) r.fail("demo grid has more than 200000 points; lower grid_per_axis");
  } else {
    if (auto grid = r.object("m_grid")) {
      if (!grid->is_array()) r.fail("'m_grid' must be an array of integers");
      cfg.rates.m_grid.clear();
      for (const auto& e : *grid) {
        if (!e.is_number_integer()) r.fail("'m_grid' must be an array of integers");
        cfg.rates.m_grid.push_back(e.get<Index>());
      }
    }
    if (auto v = r.integer("trials")) {
      if (*v < 1 || *v > 1000000) r.fail("'trials' out of range");
      cfg.rates.trials = static_cast<int>(*v);
    }
    if (auto v = r.integer("m_source")) cfg.rates.m_source = *v;
    if (auto v = r.integer("n_eval")) cfg.rates.n_eval = *v;
    if (auto v = r.number("p")) cfg.rates.p = *v;
    if (auto v = r.number("direct_bandwidth_scale")) cfg.rates.direct_bandwidth_scale = *v;
    if (auto v = r.boolean("oracle_maps")) cfg.rates.oracle_maps = *v;
    if (auto v = r.integer("threads")) {
      if (*v < 1 || *v > 1024) r.fail("'threads' out of range");
      cfg.rates.threads = static_cast<int>(*v);
    }
    if (command == "classify") {
      const auto t = r.number("threshold");
      if (!t) r.fail("classify needs a 'threshold'");
      cfg.threshold = *t;
    }
    try {
      cfg.rates.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  r.finish();

  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec || !std::filesystem::is_directory(cfg.output_dir)) {
    throw ConfigError("config: output directory '" + cfg.output_dir.string() + "' is not writable");
  }

  cfg.document = doc;
  cfg.document["seed"] = cfg.rates.seed.value;
  cfg.document.erase("output_dir");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::string_view command,
                             std::optional<std::uint64_t> seed_override,
                             std::optional<std::filesystem::path> out_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc, command, seed_override, std::move(out_override));
}

std::string config_hash(const nlohmann::json& doc) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const unsigned char c : doc.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace otl
