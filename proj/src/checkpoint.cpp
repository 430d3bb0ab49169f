#include "graphbd/checkpoint.hpp"

#include <fstream>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "graphbd/error.hpp"

namespace graphbd {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "graphbd.checkpoint";
constexpr int kVersion = 1;

json config_to_json(const ModelConfig& c) {
  return json{{"architecture", to_string(c.architecture)},
              {"layer_count", c.layer_count},
              {"hidden_dim", c.hidden_dim},
              {"attention_heads", c.attention_heads},
              {"readout", to_string(c.readout)},
              {"learning_rate", c.learning_rate},
              {"epochs", c.epochs},
              {"dropout", c.dropout},
              {"weight_decay", c.weight_decay},
              {"batch_size", c.batch_size},
              {"seed", c.seed}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.architecture = architecture_from_string(j.at("architecture").get<std::string>());
  c.layer_count = j.at("layer_count").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.attention_heads = j.at("attention_heads").get<int>();
  c.readout = readout_from_string(j.at("readout").get<std::string>());
  c.learning_rate = j.at("learning_rate").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void save_checkpoint(const GnnModel& model, const std::filesystem::path& path) {
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["task"] = to_string(model.task());
  j["feature_dim"] = model.feature_dim();
  j["class_count"] = model.class_count();
  j["config"] = config_to_json(model.config());
  json params = json::array();
  for (size_t i = 0; i < model.parameters().size(); ++i) {
    const Eigen::MatrixXd& p = model.parameters()[i];
    json entry;
    entry["name"] = model.parameter_names()[i];
    entry["rows"] = p.rows();
    entry["cols"] = p.cols();
    std::vector<double> flat(static_cast<size_t>(p.size()));
    // Row-major flattening, independent of Eigen's storage order.
    size_t k = 0;
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.cols(); ++c) flat[k++] = p(r, c);
    }
    entry["data"] = std::move(flat);
    params.push_back(std::move(entry));
  }
  j["parameters"] = std::move(params);

  std::ofstream out(path);
  if (!out) throw IngestionError("cannot open checkpoint for writing: " + path.string());
  out << j.dump();
  out.close();
  if (!out) throw IngestionError("failed while writing checkpoint: " + path.string());
}

GnnModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open checkpoint: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SchemaError("checkpoint is not valid JSON: " + std::string(e.what()));
  }
  try {
    if (!j.contains("format") || j.at("format").get<std::string>() != kFormat) {
      throw SchemaError("not a model checkpoint: " + path.string());
    }
    if (j.at("version").get<int>() != kVersion) {
      throw SchemaError("unsupported checkpoint version " +
                        j.at("version").dump() + " (expected " +
                        std::to_string(kVersion) + ")");
    }
    ModelConfig config = config_from_json(j.at("config"));
    GnnModel model(config, task_from_string(j.at("task").get<std::string>()),
                   j.at("feature_dim").get<int>(), j.at("class_count").get<int>());
    const json& params = j.at("parameters");
    if (params.size() != model.parameter_names().size()) {
      throw SchemaError("checkpoint parameter count does not match its config");
    }
    std::vector<Eigen::MatrixXd> values;
    values.reserve(params.size());
    for (size_t i = 0; i < params.size(); ++i) {
      const json& entry = params[i];
      if (entry.at("name").get<std::string>() != model.parameter_names()[i]) {
        throw SchemaError("unexpected parameter '" +
                          entry.at("name").get<std::string>() + "' (expected '" +
                          model.parameter_names()[i] + "')");
      }
      const auto rows = entry.at("rows").get<Eigen::Index>();
      const auto cols = entry.at("cols").get<Eigen::Index>();
      const auto& flat = entry.at("data");
      if (static_cast<Eigen::Index>(flat.size()) != rows * cols) {
        throw SchemaError("parameter '" + model.parameter_names()[i] +
                          "' has wrong element count");
      }
      Eigen::MatrixXd m(rows, cols);
      size_t k = 0;
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = flat[k++].get<double>();
      }
      values.push_back(std::move(m));
    }
    try {
      model.set_parameters(std::move(values));
    } catch (const Error& e) {
      throw SchemaError(std::string("checkpoint parameters inconsistent: ") + e.what());
    }
    return model;
  } catch (const json::exception& e) {
    throw SchemaError("malformed checkpoint: " + std::string(e.what()));
  }
}

}  // namespace graphbd
