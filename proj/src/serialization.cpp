#include "harmonizer/serialization.hpp"

#include <fstream>

#include "harmonizer/error.hpp"

namespace harmonizer {

using nlohmann::json;

namespace {

void check_schema(const json& j, int expected, const char* what) {
  if (!j.is_object() || !j.contains("schema_version")) {
    throw DomainError(std::string(what) + " document lacks schema_version");
  }
  const int version = j.at("schema_version").get<int>();
  if (version != expected) {
    throw DomainError(std::string(what) + " schema_version " + std::to_string(version) + " is not supported");
  }
}

RegressorMode parse_mode(const std::string& s) {
  if (s == "cascade") return RegressorMode::Cascade;
  if (s == "multihead") return RegressorMode::Multihead;
  throw DomainError("unknown regressor mode: " + s);
}

LossMode parse_loss(const std::string& s) {
  if (s == "staged") return LossMode::Staged;
  if (s == "final" || s == "final_only") return LossMode::FinalOnly;
  throw DomainError("unknown loss mode: " + s);
}

DenominatorScope parse_scope(const std::string& s) {
  if (s == "sample") return DenominatorScope::Sample;
  if (s == "batch") return DenominatorScope::Batch;
  throw DomainError("unknown denominator scope: " + s);
}

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd") return OptimizerKind::Sgd;
  if (s == "adam") return OptimizerKind::Adam;
  throw DomainError("unknown optimizer: " + s);
}

}  // namespace

json pipeline_to_json(const FilterPipeline& pipeline) {
  json filters = json::array();
  json priors = json::array();
  for (std::size_t i = 0; i < pipeline.size(); ++i) {
    filters.push_back(std::string(to_string(pipeline.filters[i])));
    priors.push_back({{"mean", pipeline.priors[i].mean}, {"stddev", pipeline.priors[i].stddev}});
  }
  return {{"filters", filters}, {"priors", priors}};
}

FilterPipeline pipeline_from_json(const json& j) {
  const json& names = j.is_array() ? j : j.at("filters");
  FilterPipeline p;
  for (const json& n : names) {
    const auto kind = parse_filter_kind(n.get<std::string>());
    if (!kind) throw DomainError("unknown filter: " + n.get<std::string>());
    p.filters.push_back(*kind);
  }
  p.priors.assign(p.filters.size(), GaussianPrior{});
  if (j.is_object() && j.contains("priors")) {
    const json& priors = j.at("priors");
    if (priors.size() != p.filters.size()) throw DomainError("pipeline needs one prior per filter");
    for (std::size_t i = 0; i < priors.size(); ++i) {
      p.priors[i].mean = priors[i].value("mean", 0.0);
      p.priors[i].stddev = priors[i].value("stddev", 0.2);
    }
  }
  p.validate();
  return p;
}

json args_to_json(const ArgVector& args) { return json(std::vector<double>(args.values().begin(), args.values().end())); }

json model_to_json(const RegressorModel& model) {
  json heads = json::array();
  for (const RegressorHead& h : model.heads) {
    heads.push_back({{"input_dim", h.input_dim}, {"w1", h.w1}, {"b1", h.b1}, {"w2", h.w2}, {"b2", h.b2}});
  }
  return {
      {"schema_version", kModelSchemaVersion},
      {"mode", std::string(to_string(model.mode))},
      {"arg_count", model.arg_count()},
      {"feature_dim", model.shape.feature_dim},
      {"hidden_dim", model.shape.hidden_dim},
      {"embed_dim", model.shape.embed_dim},
      {"input_shift", model.input_shift},
      {"input_scale", model.input_scale},
      {"heads", heads},
      {"embeddings", model.embeddings},
  };
}

RegressorModel model_from_json(const json& j) {
  check_schema(j, kModelSchemaVersion, "model");
  try {
    RegressorModel m;
    m.mode = parse_mode(j.at("mode").get<std::string>());
    m.shape.feature_dim = j.at("feature_dim").get<std::size_t>();
    m.shape.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    m.shape.embed_dim = j.at("embed_dim").get<std::size_t>();
    m.input_shift = j.at("input_shift").get<std::vector<double>>();
    m.input_scale = j.at("input_scale").get<std::vector<double>>();
    for (const json& h : j.at("heads")) {
      RegressorHead head;
      head.input_dim = h.at("input_dim").get<std::size_t>();
      head.w1 = h.at("w1").get<std::vector<double>>();
      head.b1 = h.at("b1").get<std::vector<double>>();
      head.w2 = h.at("w2").get<std::vector<double>>();
      head.b2 = h.at("b2").get<double>();
      m.heads.push_back(std::move(head));
    }
    m.embeddings = j.at("embeddings").get<std::vector<std::vector<double>>>();
    if (j.at("arg_count").get<std::size_t>() != m.heads.size()) throw DomainError("arg_count does not match heads");
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed model document: ") + e.what());
  }
}

void save_model(const RegressorModel& model, const std::filesystem::path& path) {
  write_json_file(model_to_json(model), path);
}

RegressorModel load_model(const std::filesystem::path& path) { return model_from_json(read_json_file(path)); }

json fit_result_to_json(const FitResult& result, const FilterPipeline& pipeline) {
  json trace = json::array();
  for (const FitTracePoint& p : result.trace) trace.push_back({{"step", p.step}, {"fmse", p.fmse}});
  json named = json::object();
  for (std::size_t i = 0; i < pipeline.size() && i < result.args.size(); ++i) {
    named[std::string(to_string(pipeline.filters[i]))] = result.args[i];
  }
  return {{"args", args_to_json(result.args)}, {"named_args", named}, {"fmse", result.fmse}, {"trace", trace}};
}

void RunConfig::validate() const {
  pipeline.validate();
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must be in (0,1]");
  if (!(clip_threshold >= 0.0 && clip_threshold <= 1.0)) throw DomainError("clip_threshold must be in [0,1]");
  if (!(train.options.learning_rate >= 0.0)) throw DomainError("learning_rate must be nonnegative");
  if (!(train.options.mu > 0.0)) throw DomainError("mu must be positive");
  if (train.batch_size == 0) throw DomainError("batch_size must be positive");
  if (!(train.decay_factor > 0.0 && train.decay_factor <= 1.0)) throw DomainError("decay_factor must be in (0,1]");
}

json config_to_json(const RunConfig& c) {
  return {
      {"schema_version", kConfigSchemaVersion},
      {"pipeline", pipeline_to_json(c.pipeline)},
      {"seed", c.seed},
      {"mode", std::string(to_string(c.mode))},
      {"loss", std::string(to_string(c.train.options.loss_mode))},
      {"dynamic", c.train.options.dynamic},
      {"denominator", std::string(to_string(c.train.options.denominator))},
      {"mu", c.train.options.mu},
      {"learning_rate", c.train.options.learning_rate},
      {"optimizer", std::string(to_string(c.train.optimizer))},
      {"steps", c.train.steps},
      {"batch_size", c.train.batch_size},
      {"decay_every", c.train.decay_every},
      {"decay_factor", c.train.decay_factor},
      {"alpha", c.alpha},
      {"clip_threshold", c.clip_threshold},
      {"model", c.model_path},
      {"out", c.out_dir},
  };
}

RunConfig config_from_json(const json& j, RunConfig c) {
  if (!j.is_object()) throw DomainError("config document must be a JSON object");
  // Overlays built from flags carry no version; files always do (see load_config).
  if (j.contains("schema_version")) check_schema(j, kConfigSchemaVersion, "config");
  try {
    if (j.contains("pipeline")) c.pipeline = pipeline_from_json(j.at("pipeline"));
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("loss")) c.train.options.loss_mode = parse_loss(j.at("loss").get<std::string>());
    if (j.contains("dynamic")) c.train.options.dynamic = j.at("dynamic").get<bool>();
    if (j.contains("denominator")) c.train.options.denominator = parse_scope(j.at("denominator").get<std::string>());
    if (j.contains("mu")) c.train.options.mu = j.at("mu").get<double>();
    if (j.contains("learning_rate")) c.train.options.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("optimizer")) c.train.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
    if (j.contains("steps")) c.train.steps = j.at("steps").get<std::size_t>();
    if (j.contains("batch_size")) c.train.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("decay_every")) c.train.decay_every = j.at("decay_every").get<std::size_t>();
    if (j.contains("decay_factor")) c.train.decay_factor = j.at("decay_factor").get<double>();
    if (j.contains("alpha")) c.alpha = j.at("alpha").get<double>();
    if (j.contains("clip_threshold")) c.clip_threshold = j.at("clip_threshold").get<double>();
    if (j.contains("model")) c.model_path = j.at("model").get<std::string>();
    if (j.contains("out")) c.out_dir = j.at("out").get<std::string>();
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed config document: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  try {
    check_schema(j, kConfigSchemaVersion, "config");
    return config_from_json(j);
  } catch (const DomainError& e) {
    throw IoError(path.string(), e.what());
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError(path.string(), std::string("invalid JSON: ") + e.what());
  }
}

void write_json_file(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError(path.string(), "write failed");
}

}  // namespace harmonizer
