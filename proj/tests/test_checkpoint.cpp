#include <doctest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

#include "graphbd/checkpoint.hpp"
#include "graphbd/error.hpp"
#include "graphbd/model.hpp"
#include "graphbd/train.hpp"
#include "synthetic.hpp"

using namespace graphbd;
namespace fs = std::filesystem;

namespace {

fs::path scratch_file(const std::string& leaf) {
  fs::path dir = fs::temp_directory_path() / "graphbd_tests" / "ckpt";
  fs::create_directories(dir);
  return dir / leaf;
}

GnnModel trained_toy_model() {
  GraphDataset ds = testsupport::make_motif_dataset(8, 19);
  ModelConfig cfg = default_graph_config(Architecture::Gin);
  cfg.layer_count = 2;
  cfg.hidden_dim = 4;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  cfg.seed = 23;
  GnnModel model(cfg, TaskKind::GraphClassification, ds.feature_dim(),
                 ds.class_count);
  train(model, ds);
  return model;
}

}  // namespace

TEST_CASE("checkpoint round trip restores the model bitwise") {
  GnnModel model = trained_toy_model();
  fs::path path = scratch_file("roundtrip.json");
  save_checkpoint(model, path);
  GnnModel restored = load_checkpoint(path);

  CHECK(restored.task() == model.task());
  CHECK(restored.feature_dim() == model.feature_dim());
  CHECK(restored.class_count() == model.class_count());
  CHECK(restored.config().architecture == model.config().architecture);
  CHECK(restored.config().layer_count == model.config().layer_count);
  CHECK(restored.config().seed == model.config().seed);
  CHECK(restored.parameter_names() == model.parameter_names());
  REQUIRE(restored.parameters().size() == model.parameters().size());
  for (size_t i = 0; i < model.parameters().size(); ++i) {
    // Doubles must survive the text format exactly, not approximately.
    CHECK((restored.parameters()[i] - model.parameters()[i]).cwiseAbs().maxCoeff() ==
          0.0);
  }
}

TEST_CASE("gat checkpoints keep head tensors intact") {
  ModelConfig cfg = default_node_config(Architecture::Gat);
  cfg.layer_count = 2;
  cfg.hidden_dim = 8;
  cfg.attention_heads = 4;
  GnnModel model(cfg, TaskKind::NodeClassification, 6, 3);
  fs::path path = scratch_file("gat.json");
  save_checkpoint(model, path);
  GnnModel restored = load_checkpoint(path);
  CHECK(restored.config().attention_heads == 4);
  for (size_t i = 0; i < model.parameters().size(); ++i) {
    CHECK((restored.parameters()[i] - model.parameters()[i]).cwiseAbs().maxCoeff() ==
          0.0);
  }
}

TEST_CASE("loading a missing file reports ingestion trouble") {
  CHECK_THROWS_AS(load_checkpoint(scratch_file("not_there.json")), IngestionError);
}

TEST_CASE("load rejects foreign or damaged containers") {
  GnnModel model = trained_toy_model();
  fs::path path = scratch_file("tamper.json");
  save_checkpoint(model, path);

  nlohmann::json doc;
  {
    std::ifstream in(path);
    in >> doc;
  }

  auto rewrite = [&](const nlohmann::json& changed) {
    std::ofstream out(path);
    out << changed.dump(2);
  };

  SUBCASE("wrong container format string") {
    nlohmann::json bad = doc;
    bad["format"] = "model.bundle";
    rewrite(bad);
    CHECK_THROWS_AS(load_checkpoint(path), SchemaError);
  }
  SUBCASE("unsupported version") {
    nlohmann::json bad = doc;
    bad["version"] = 999;
    rewrite(bad);
    CHECK_THROWS_AS(load_checkpoint(path), SchemaError);
  }
  SUBCASE("parameter tensor with foreign shape") {
    nlohmann::json bad = doc;
    bad["parameters"][0]["data"] = nlohmann::json::array({1.0, 2.0, 3.0});
    rewrite(bad);
    CHECK_THROWS_AS(load_checkpoint(path), SchemaError);
  }
  SUBCASE("parameter renamed") {
    nlohmann::json bad = doc;
    bad["parameters"][0]["name"] = "layer0.mystery";
    rewrite(bad);
    CHECK_THROWS_AS(load_checkpoint(path), SchemaError);
  }
  SUBCASE("not json at all") {
    std::ofstream out(path);
    out << "definitely not a checkpoint";
    out.close();
    CHECK_THROWS_AS(load_checkpoint(path), SchemaError);
  }
}

TEST_CASE("restored models predict identically") {
  GnnModel model = trained_toy_model();
  fs::path path = scratch_file("predict.json");
  save_checkpoint(model, path);
  GnnModel restored = load_checkpoint(path);

  GraphDataset probe = testsupport::make_motif_dataset(5, 77);
  for (const Graph& g : probe.graphs) {
    Eigen::VectorXd a = model.predict_graph(g);
    Eigen::VectorXd b = restored.predict_graph(g);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  }
}
