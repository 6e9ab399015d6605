#include "rfmia/nn/serialize.hpp"

#include <fstream>

#include "rfmia/io.hpp"

namespace rfmia::nn {
namespace {

nlohmann::json vec_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd json_vec(const nlohmann::json& j, Eigen::Index expected, const char* what) {
  const auto values = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != expected)
    throw InvalidInput(std::string("model file: wrong length for ") + what);
  return Eigen::Map<const Eigen::VectorXd>(values.data(), expected);
}

}  // namespace

nlohmann::json to_json(const MlpModel& model) {
  const auto& spec = model.spec();
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : model.layers()) {
    // column-major flattening, matching Eigen storage
    layers.push_back({{"rows", l.weight.rows()},
                      {"cols", l.weight.cols()},
                      {"weight", std::vector<double>(l.weight.data(), l.weight.data() + l.weight.size())},
                      {"bias", vec_json(l.bias)}});
  }
  return {{"format", "rfmia-mlp"},
          {"version", kModelFormatVersion},
          {"spec",
           {{"input_dim", spec.input_dim},
            {"hidden_dims", spec.hidden_dims},
            {"output_dim", spec.output_dim},
            {"hidden_activation", "relu"},
            {"output_activation", "softmax"}}},
          {"trained", model.trained()},
          {"input_shift", vec_json(model.input_shift())},
          {"input_scale", vec_json(model.input_scale())},
          {"layers", layers}};
}

MlpModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "rfmia-mlp") throw InvalidInput("not an rfmia model file");
  if (j.at("version").get<int>() != kModelFormatVersion)
    throw InvalidInput("unsupported model format version " + j.at("version").dump());
  LayerSpec spec;
  spec.input_dim = j.at("spec").at("input_dim").get<int>();
  spec.hidden_dims = j.at("spec").at("hidden_dims").get<std::vector<int>>();
  spec.output_dim = j.at("spec").at("output_dim").get<int>();

  MlpModel model = MlpModel::zeros(spec);
  const auto& layers = j.at("layers");
  if (layers.size() != model.layers().size()) throw InvalidInput("model file: layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto& dst = model.layers()[l];
    const auto w = json_vec(layers[l].at("weight"), dst.weight.size(), "weight");
    dst.weight = Eigen::Map<const Eigen::MatrixXd>(w.data(), dst.weight.rows(), dst.weight.cols());
    dst.bias = json_vec(layers[l].at("bias"), dst.bias.size(), "bias");
  }
  model.set_input_normalization(json_vec(j.at("input_shift"), spec.input_dim, "input_shift"),
                                json_vec(j.at("input_scale"), spec.input_dim, "input_scale"));
  model.set_trained(j.at("trained").get<bool>());
  return model;
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, to_json(model).dump());
}

MlpModel load_model(const std::filesystem::path& path) { return model_from_json(read_json(path)); }

}  // namespace rfmia::nn
