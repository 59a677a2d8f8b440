#include "era/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

namespace era {

using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blob format assumes a little-endian host");

struct TensorSpec {
  const char* name;
  std::vector<long> shape;
};

std::vector<TensorSpec> tensor_specs(const ModelParams& p) {
  const long d = p.config.input_dim, h = p.config.hidden_dim, v = p.config.vocab_size;
  std::vector<TensorSpec> specs = {
      {"trunk.w1", {h, d}}, {"trunk.b1", {h}},
      {"trunk.w2", {h, h}}, {"trunk.b2", {h}},
      {"head_rag.w", {4, h}}, {"head_rag.b", {4}},
      {"head_param.w", {4, h}}, {"head_param.b", {4}},
      {"head_policy.w", {v, h}}, {"head_policy.b", {v}},
  };
  if (p.variant == Variant::learnable_w) specs.push_back({"gate", {1}});
  return specs;
}

}  // namespace

void save_checkpoint(const ModelParams& params, std::uint64_t config_hash,
                     const std::string& manifest_path, const std::string& blob_path) {
  json tensors = json::array();
  std::size_t offset = 0;
  for (const TensorSpec& spec : tensor_specs(params)) {
    long count = 1;
    for (long s : spec.shape) count *= s;
    tensors.push_back(
        {{"name", spec.name}, {"shape", spec.shape}, {"offset", offset}, {"count", count}});
    offset += static_cast<std::size_t>(count);
  }
  if (offset != params.size())
    throw std::runtime_error("save_checkpoint: manifest/parameter size mismatch");

  json manifest{{"type", "era-checkpoint"},
                {"format", "f64-le"},
                {"variant", variant_name(params.variant)},
                {"config_hash", config_hash},
                {"quadrant_order", {"KG", "KN", "UG", "UN"}},
                {"model", {{"input_dim", params.config.input_dim},
                           {"hidden_dim", params.config.hidden_dim},
                           {"vocab_size", params.config.vocab_size}}},
                {"param_count", params.size()},
                {"blob", blob_path.substr(blob_path.find_last_of('/') + 1)},
                {"tensors", tensors}};

  std::ofstream mf(manifest_path, std::ios::binary);
  if (!mf) throw std::runtime_error("save_checkpoint: cannot open " + manifest_path);
  mf << manifest.dump(2) << "\n";

  std::ofstream bf(blob_path, std::ios::binary);
  if (!bf) throw std::runtime_error("save_checkpoint: cannot open " + blob_path);
  bf.write(reinterpret_cast<const char*>(params.theta.data()),
           static_cast<std::streamsize>(params.theta.size() * sizeof(double)));
  if (!bf) throw std::runtime_error("save_checkpoint: blob write failed");
}

ModelParams load_checkpoint(const std::string& manifest_path, std::uint64_t* config_hash_out) {
  std::ifstream mf(manifest_path, std::ios::binary);
  if (!mf) throw std::runtime_error("load_checkpoint: cannot open " + manifest_path);
  json manifest = json::parse(mf);
  if (manifest.value("type", "") != "era-checkpoint")
    throw std::runtime_error("load_checkpoint: not a checkpoint manifest");
  const std::vector<std::string> order =
      manifest.at("quadrant_order").get<std::vector<std::string>>();
  if (order != std::vector<std::string>{"KG", "KN", "UG", "UN"})
    throw std::runtime_error("load_checkpoint: unexpected quadrant ordering");

  ModelParams params;
  params.config.input_dim = manifest.at("model").at("input_dim").get<int>();
  params.config.hidden_dim = manifest.at("model").at("hidden_dim").get<int>();
  params.config.vocab_size = manifest.at("model").at("vocab_size").get<int>();
  params.variant = variant_from_name(manifest.at("variant").get<std::string>());
  const std::size_t count = manifest.at("param_count").get<std::size_t>();
  if (count != params.param_count())
    throw std::runtime_error("load_checkpoint: parameter count does not match manifest shapes");

  const std::string blob_name = manifest.at("blob").get<std::string>();
  std::string blob_path = manifest_path;
  const auto slash = blob_path.find_last_of('/');
  blob_path = (slash == std::string::npos ? "" : blob_path.substr(0, slash + 1)) + blob_name;

  std::ifstream bf(blob_path, std::ios::binary);
  if (!bf) throw std::runtime_error("load_checkpoint: cannot open blob " + blob_path);
  params.theta.resize(count);
  bf.read(reinterpret_cast<char*>(params.theta.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (static_cast<std::size_t>(bf.gcount()) != count * sizeof(double))
    throw std::runtime_error("load_checkpoint: blob truncated");

  if (config_hash_out) *config_hash_out = manifest.at("config_hash").get<std::uint64_t>();
  return params;
}

}  // namespace era
