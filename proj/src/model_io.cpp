#include "skipgan/model_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "skipgan/error.hpp"

namespace skipgan {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json config_json(const TrainConfig& c) {
  ordered_json j;
  j["batch_size"] = c.batch_size;
  j["q"] = c.q;
  j["omega"] = c.omega;
  j["epochs"] = c.epochs;
  j["pac"] = c.pac;
  j["gp_lambda"] = c.gp_lambda;
  j["learning_rate"] = c.adam.learning_rate;
  j["beta1"] = c.adam.beta1;
  j["beta2"] = c.adam.beta2;
  j["adam_eps"] = c.adam.eps;
  j["weight_decay"] = c.adam.weight_decay;
  j["noise_dim"] = c.noise_dim;
  j["generator_hidden"] = c.generator_hidden;
  j["critic_hidden"] = c.critic_hidden;
  j["critic_dropout"] = c.critic_dropout;
  j["temperature"] = c.temperature;
  j["enforce"] = c.enforce;
  j["importance_decay"] = c.importance_decay;
  j["embedding_dim"] = c.embedding_dim;
  j["classifier_hidden"] = c.classifier.hidden;
  j["classifier_aux_hidden"] = c.classifier.aux_hidden;
  j["classifier_aux_layers"] = c.classifier.aux_layers;
  j["sparsity_coefficient"] = c.classifier.sparsity_coefficient;
  j["seed"] = c.seed;
  return j;
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("/") + key, "wrong type for field '" + std::string(key) + "'");
  }
}

TrainConfig config_from(const json& j, TrainConfig c) {
  if (!j.is_object()) throw ParseError("/", "train config must be a JSON object");
  const ordered_json known = config_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ParseError("/" + key, "unknown field '" + key + "'");
  }
  read_field(j, "batch_size", c.batch_size);
  read_field(j, "q", c.q);
  read_field(j, "omega", c.omega);
  read_field(j, "epochs", c.epochs);
  read_field(j, "pac", c.pac);
  read_field(j, "gp_lambda", c.gp_lambda);
  read_field(j, "learning_rate", c.adam.learning_rate);
  read_field(j, "beta1", c.adam.beta1);
  read_field(j, "beta2", c.adam.beta2);
  read_field(j, "adam_eps", c.adam.eps);
  read_field(j, "weight_decay", c.adam.weight_decay);
  read_field(j, "noise_dim", c.noise_dim);
  read_field(j, "generator_hidden", c.generator_hidden);
  read_field(j, "critic_hidden", c.critic_hidden);
  read_field(j, "critic_dropout", c.critic_dropout);
  read_field(j, "temperature", c.temperature);
  read_field(j, "enforce", c.enforce);
  read_field(j, "importance_decay", c.importance_decay);
  read_field(j, "embedding_dim", c.embedding_dim);
  read_field(j, "classifier_hidden", c.classifier.hidden);
  read_field(j, "classifier_aux_hidden", c.classifier.aux_hidden);
  read_field(j, "classifier_aux_layers", c.classifier.aux_layers);
  read_field(j, "sparsity_coefficient", c.classifier.sparsity_coefficient);
  read_field(j, "seed", c.seed);
  c.validate();
  return c;
}

ordered_json state_json(const TrainState& s) {
  ordered_json j;
  j["epochs_completed"] = s.epochs_completed;
  j["iterations_per_epoch"] = s.iterations_per_epoch;
  std::vector<double> d, g, ds, c;
  for (const auto& r : s.iterations) {
    d.push_back(r.critic);
    g.push_back(r.generator_orig);
    ds.push_back(r.generator_dstream);
    c.push_back(r.classifier);
  }
  j["loss_critic"] = d;
  j["loss_generator_orig"] = g;
  j["loss_generator_dstream"] = ds;
  j["loss_classifier"] = c;
  j["condition_match"] = s.condition_match;
  j["mean_assigned"] = s.mean_assigned;
  j["importance_features"] = s.importance_features;
  j["importance"] = s.importance;
  j["parameter_checksum"] = hex64(s.parameter_checksum);
  return j;
}

TrainState state_from(const json& j) {
  TrainState s;
  s.epochs_completed = j.at("epochs_completed").get<int>();
  s.iterations_per_epoch = j.at("iterations_per_epoch").get<int>();
  const auto d = j.at("loss_critic").get<std::vector<double>>();
  const auto g = j.at("loss_generator_orig").get<std::vector<double>>();
  const auto ds = j.at("loss_generator_dstream").get<std::vector<double>>();
  const auto c = j.at("loss_classifier").get<std::vector<double>>();
  if (g.size() != d.size() || ds.size() != d.size() || c.size() != d.size()) {
    throw FormatError("model file: loss histories differ in length");
  }
  for (std::size_t i = 0; i < d.size(); ++i) s.iterations.push_back({d[i], g[i], ds[i], c[i]});
  s.condition_match = j.at("condition_match").get<std::vector<double>>();
  s.mean_assigned = j.at("mean_assigned").get<std::vector<double>>();
  s.importance_features = j.at("importance_features").get<std::vector<int>>();
  s.importance = j.at("importance").get<std::vector<double>>();
  s.parameter_checksum = parse_hex64(j.at("parameter_checksum").get<std::string>());
  return s;
}

template <typename T>
void put(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::string_view& in) {
  if (in.size() < sizeof(T)) throw FormatError("model file is truncated");
  T v;
  std::memcpy(&v, in.data(), sizeof(T));
  in.remove_prefix(sizeof(T));
  return v;
}

struct TensorRef {
  float* data;
  Eigen::Index rows, cols;
};

std::vector<TensorRef> tensors(Generator& g) {
  std::vector<TensorRef> out;
  for (auto* p : g.parameters()) out.push_back({p->value.data(), p->value.rows(), p->value.cols()});
  for (auto* b : g.buffers()) out.push_back({b->data(), 1, b->size()});
  return out;
}

}  // namespace

std::string train_config_to_json(const TrainConfig& config) { return config_json(config).dump(2) + "\n"; }

TrainConfig train_config_from_json(std::string_view document, const TrainConfig& base) {
  json j;
  try {
    j = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError("byte " + std::to_string(e.byte), "malformed train config");
  }
  return config_from(j, base);
}

std::uint64_t config_hash(const TrainConfig& config) { return fnv1a(config_json(config).dump()); }

void save_model(GanModel& model, const std::string& path) {
  ordered_json h;
  h["schema"] = serialize_schema(model.schema);
  h["schema_hash"] = hex64(model.schema.hash());
  ordered_json spans = ordered_json::array();
  for (const auto& s : model.transformer.layout().spans) spans.push_back({s.offset, s.width});
  h["layout"] = {{"spans", spans}, {"total_width", model.transformer.layout().total_width}};
  ordered_json norm = ordered_json::array();
  for (const auto& modes : model.transformer.normalizer().modes) {
    ordered_json f = ordered_json::array();
    for (const auto& m : modes) f.push_back({m.mean, m.stddev, m.weight});
    norm.push_back(f);
  }
  h["normalizer"] = norm;
  h["config"] = config_json(model.config);
  h["config_hash"] = hex64(config_hash(model.config));
  h["state"] = state_json(model.state);
  h["target_counts"] = model.target_counts;
  h["generator"] = {{"noise_dim", model.generator.noise_dim()},
                    {"cond_dim", model.generator.cond_dim()},
                    {"data_dim", model.generator.data_dim()},
                    {"hidden", model.generator.hidden()}};
  const std::string header = h.dump();

  std::string out(kModelMagic, sizeof(kModelMagic));
  put(out, kModelVersion);
  put(out, static_cast<std::uint64_t>(header.size()));
  out += header;
  const auto ts = tensors(model.generator);
  put(out, static_cast<std::uint64_t>(ts.size()));
  for (const auto& t : ts) {
    put(out, static_cast<std::uint64_t>(t.rows));
    put(out, static_cast<std::uint64_t>(t.cols));
    out.append(reinterpret_cast<const char*>(t.data), static_cast<std::size_t>(t.rows * t.cols) * sizeof(float));
  }
  put(out, fnv1a(out));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write model file '" + path + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error("failed writing model file '" + path + "'");
}

GanModel load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open model file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string bytes = ss.str();
  if (bytes.size() < sizeof(kModelMagic) + 4 + 8 + 8 || std::memcmp(bytes.data(), kModelMagic, sizeof(kModelMagic)) != 0) {
    throw FormatError("'" + path + "' is not a model file (bad magic)");
  }
  std::string_view body(bytes.data(), bytes.size() - 8);
  std::string_view tail(bytes.data() + bytes.size() - 8, 8);
  if (get<std::uint64_t>(tail) != fnv1a(body)) throw FormatError("model file '" + path + "' is corrupt (checksum)");
  std::string_view in = body.substr(sizeof(kModelMagic));
  const auto version = get<std::uint32_t>(in);
  if (version != kModelVersion) {
    throw FormatError("model file version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kModelVersion) + ")");
  }
  const auto header_len = get<std::uint64_t>(in);
  if (in.size() < header_len) throw FormatError("model file is truncated");
  GanModel m;
  try {
    const json h = json::parse(in.substr(0, header_len));
    in.remove_prefix(header_len);
    m.schema = parse_schema(h.at("schema").get<std::string>());
    if (hex64(m.schema.hash()) != h.at("schema_hash").get<std::string>()) {
      throw SchemaMismatchError("model file: schema hash " + h.at("schema_hash").get<std::string>() +
                                " does not match the stored schema (" + hex64(m.schema.hash()) + ")");
    }
    ContinuousNormalizer norm;
    norm.modes.resize(static_cast<std::size_t>(m.schema.num_features()));
    const auto& nj = h.at("normalizer");
    if (nj.size() != norm.modes.size()) throw FormatError("model file: normalizer size mismatch");
    for (std::size_t i = 0; i < nj.size(); ++i) {
      for (const auto& mode : nj[i]) norm.modes[i].push_back({mode.at(0).get<double>(), mode.at(1).get<double>(), mode.at(2).get<double>()});
    }
    m.transformer = DataTransformer(m.schema, norm);
    ColumnLayout stored;
    for (const auto& s : h.at("layout").at("spans")) stored.spans.push_back({s.at(0).get<int>(), s.at(1).get<int>()});
    stored.total_width = h.at("layout").at("total_width").get<int>();
    if (!(stored == m.transformer.layout())) throw FormatError("model file: layout does not match normalizer");
    m.cond_layout = make_cond_layout(m.schema);
    m.config = config_from(h.at("config"), TrainConfig{});
    if (hex64(config_hash(m.config)) != h.at("config_hash").get<std::string>()) {
      throw FormatError("model file: stored config does not match its hash");
    }
    m.state = state_from(h.at("state"));
    m.target_counts = h.at("target_counts").get<std::vector<int>>();
    const auto& g = h.at("generator");
    Rng dummy(0);
    m.generator = Generator(g.at("noise_dim").get<int>(), g.at("cond_dim").get<int>(), g.at("data_dim").get<int>(),
                            g.at("hidden").get<int>(), dummy);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file header is malformed: ") + e.what());
  }
  if (m.generator.cond_dim() != m.cond_layout.width || m.generator.data_dim() != m.transformer.layout().total_width) {
    throw FormatError("model file: generator dimensions do not match the schema");
  }
  const auto ts = tensors(m.generator);
  if (get<std::uint64_t>(in) != ts.size()) throw FormatError("model file: tensor count mismatch");
  for (const auto& t : ts) {
    const auto rows = get<std::uint64_t>(in), cols = get<std::uint64_t>(in);
    if (rows != static_cast<std::uint64_t>(t.rows) || cols != static_cast<std::uint64_t>(t.cols)) {
      throw FormatError("model file: tensor shape mismatch");
    }
    const std::size_t n = static_cast<std::size_t>(rows * cols) * sizeof(float);
    if (in.size() < n) throw FormatError("model file is truncated");
    std::memcpy(t.data, in.data(), n);
    in.remove_prefix(n);
  }
  if (!in.empty()) throw FormatError("model file has trailing bytes");
  return m;
}

GanModel load_model(const std::string& path, std::uint64_t expected_schema_hash) {
  GanModel m = load_model(path);
  if (m.schema.hash() != expected_schema_hash) {
    throw SchemaMismatchError("model '" + path + "' was trained on schema " + hex64(m.schema.hash()) +
                              ", expected " + hex64(expected_schema_hash));
  }
  return m;
}

}  // namespace skipgan
