#include "easiernet/core/model_io.hpp"

#include <fstream>
#include <sstream>

#include "easiernet/core/errors.hpp"
#include "json.hpp"

namespace easiernet {
namespace {

using nlohmann::json;

constexpr const char* kFormatName = "easiernet-model";

json matrix_to_json(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

Matrix matrix_from_json(const json& j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                j.at("data").get<std::vector<double>>());
}

json params_to_json(const NetworkParams& p) {
  json weights = json::array();
  for (const auto& w : p.weights) weights.push_back(matrix_to_json(w));
  json skip = json::array();
  for (const auto& w : p.skip_weights) skip.push_back(matrix_to_json(w));
  return json{{"beta", p.beta},
              {"weights", weights},
              {"biases", p.biases},
              {"skip_weights", skip},
              {"skip_biases", p.skip_biases},
              {"alpha", p.alpha}};
}

NetworkParams params_from_json(const json& j) {
  NetworkParams p;
  p.beta = j.at("beta").get<std::vector<double>>();
  for (const auto& w : j.at("weights")) p.weights.push_back(matrix_from_json(w));
  p.biases = j.at("biases").get<std::vector<std::vector<double>>>();
  for (const auto& w : j.at("skip_weights")) p.skip_weights.push_back(matrix_from_json(w));
  p.skip_biases = j.at("skip_biases").get<std::vector<std::vector<double>>>();
  p.alpha = j.at("alpha").get<std::vector<double>>();
  return p;
}

}  // namespace

std::string serialize_model(const EnsembleModel& model) {
  model.validate();
  const auto& c = model.config;
  json config{{"input_dim", c.input_dim},
              {"num_layers", c.num_layers},
              {"hidden_widths", c.hidden_widths},
              {"task", c.task.is_classification() ? "classification" : "regression"},
              {"num_classes", c.task.num_classes},
              {"skip_connections", c.skip_connections_enabled}};
  const auto& s = model.preprocessing;
  json preprocessing{{"feature_mean", s.feature_mean},
                     {"feature_sd", s.feature_sd},
                     {"feature_constant", s.feature_constant},
                     {"target_mean", s.target_mean},
                     {"target_sd", s.target_sd},
                     {"target_standardized", s.target_standardized}};
  json members = json::array();
  for (const auto& m : model.members) members.push_back(params_to_json(m));

  json doc{{"format", kFormatName},
           {"version", kModelFormatVersion},
           {"config", config},
           {"penalty", {{"lambda1", model.penalty.lambda1}, {"lambda2", model.penalty.lambda2}}},
           {"preprocessing", preprocessing},
           {"feature_names", model.feature_names},
           {"target_name", model.target_name},
           {"class_labels", model.class_labels},
           {"master_seed", model.master_seed},
           {"member_seeds", model.member_seeds},
           {"members", members}};
  return doc.dump(1) + "\n";
}

EnsembleModel deserialize_model(const std::string& text) {
  EnsembleModel model;
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != kFormatName) throw DataError("not an easiernet model file");
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw DataError("unsupported model format version " + std::to_string(version));
    }
    const json& c = doc.at("config");
    model.config.input_dim = c.at("input_dim").get<std::size_t>();
    model.config.num_layers = c.at("num_layers").get<std::size_t>();
    model.config.hidden_widths = c.at("hidden_widths").get<std::vector<std::size_t>>();
    const std::string task = c.at("task").get<std::string>();
    if (task == "classification") {
      model.config.task = TaskKind::classification(c.at("num_classes").get<std::size_t>());
    } else if (task == "regression") {
      model.config.task = TaskKind::regression();
    } else {
      throw DataError("unknown task '" + task + "' in model file");
    }
    model.config.skip_connections_enabled = c.at("skip_connections").get<bool>();

    const json& p = doc.at("penalty");
    model.penalty = PenaltySpec{p.at("lambda1").get<double>(), p.at("lambda2").get<double>()};

    const json& s = doc.at("preprocessing");
    model.preprocessing.feature_mean = s.at("feature_mean").get<std::vector<double>>();
    model.preprocessing.feature_sd = s.at("feature_sd").get<std::vector<double>>();
    model.preprocessing.feature_constant = s.at("feature_constant").get<std::vector<bool>>();
    model.preprocessing.target_mean = s.at("target_mean").get<double>();
    model.preprocessing.target_sd = s.at("target_sd").get<double>();
    model.preprocessing.target_standardized = s.at("target_standardized").get<bool>();

    model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    model.target_name = doc.at("target_name").get<std::string>();
    model.class_labels = doc.at("class_labels").get<std::vector<std::string>>();
    model.master_seed = doc.at("master_seed").get<std::uint64_t>();
    model.member_seeds = doc.at("member_seeds").get<std::vector<std::uint64_t>>();
    for (const auto& m : doc.at("members")) model.members.push_back(params_from_json(m));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
  const std::size_t d = model.config.input_dim;
  if (model.preprocessing.feature_mean.size() != d || model.preprocessing.feature_sd.size() != d ||
      model.preprocessing.feature_constant.size() != d) {
    throw DataError("model preprocessing does not match the input dimension");
  }
  try {
    model.validate();
  } catch (const ContractViolation& e) {
    throw DataError(std::string("inconsistent model file: ") + e.what());
  }
  return model;
}

void save_model(const EnsembleModel& model, const std::string& path) {
  const std::string text = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("failed while writing '" + path + "'");
}

EnsembleModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_model(buffer.str());
}

}  // namespace easiernet
