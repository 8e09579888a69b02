#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "naim/data.hpp"
#include "naim/model.hpp"

namespace naim {

// Binary checkpoint: carries the model configuration, the feature schema and
// the fitted preprocessor alongside the weights, so `evaluate` can run from
// the file plus a raw CSV alone.
//
//   magic "NAIMCKPT" | u32 version=1 | u64 json_len | json bytes
//   u64 n_params | per param: u64 name_len | name | u64 rank | u64 dims[rank]
//                             | f64 data[count] (little-endian)
namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
inline void put_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }
inline std::uint32_t get_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
inline std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

}  // namespace detail

struct Checkpoint {
  NaimParameters params;
  Preprocessor preprocessor;

  static nlohmann::json config_json(const NaimConfig& c) {
    return {{"embed_dim", c.embed_dim}, {"layers", c.layers},       {"heads", c.heads},
            {"ff_dim", c.ff_dim},       {"embedding_bias", c.embedding_bias},
            {"double_masking", c.double_masking},                   {"ln_eps", c.ln_eps}};
  }

  static NaimConfig config_from_json(const nlohmann::json& j) {
    NaimConfig c;
    c.embed_dim = j.at("embed_dim").get<std::size_t>();
    c.layers = j.at("layers").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.ff_dim = j.at("ff_dim").get<std::size_t>();
    c.embedding_bias = j.at("embedding_bias").get<bool>();
    c.double_masking = j.at("double_masking").get<bool>();
    c.ln_eps = j.at("ln_eps").get<double>();
    return c;
  }
};

inline void save_checkpoint(const std::string& path, NaimParameters& params, const Preprocessor& prep) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("save_checkpoint: cannot open '" + path + "' for writing");
  os.write("NAIMCKPT", 8);
  detail::put_u32(os, 1);

  nlohmann::json meta;
  meta["config"] = Checkpoint::config_json(params.config);
  meta["schema"] = prep.schema.to_json();
  meta["preprocessor"] = prep.to_json();
  meta["n_classes"] = params.spec.n_classes;
  const std::string blob = meta.dump();
  detail::put_u64(os, blob.size());
  os.write(blob.data(), static_cast<std::streamsize>(blob.size()));

  std::vector<NamedParam> named = params.named();
  detail::put_u64(os, named.size());
  for (const NamedParam& np : named) {
    detail::put_u64(os, np.name.size());
    os.write(np.name.data(), static_cast<std::streamsize>(np.name.size()));
    detail::put_u64(os, np.value->rank());
    for (std::size_t d : np.value->shape) detail::put_u64(os, d);
    os.write(reinterpret_cast<const char*>(np.value->data.data()),
             static_cast<std::streamsize>(np.value->data.size() * sizeof(double)));
  }
  if (!os) throw DataError("save_checkpoint: write to '" + path + "' failed");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("load_checkpoint: cannot open '" + path + "'");
  char magic[8] = {};
  is.read(magic, 8);
  if (!is || std::memcmp(magic, "NAIMCKPT", 8) != 0)
    throw DataError("load_checkpoint: '" + path + "' is not a checkpoint file");
  const std::uint32_t version = detail::get_u32(is);
  if (version != 1) throw DataError("load_checkpoint: unsupported version " + std::to_string(version));

  const std::uint64_t blob_len = detail::get_u64(is);
  std::string blob(blob_len, '\0');
  is.read(blob.data(), static_cast<std::streamsize>(blob_len));
  if (!is) throw DataError("load_checkpoint: truncated metadata");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(blob);
  } catch (const std::exception& e) {
    throw DataError(std::string("load_checkpoint: bad metadata JSON: ") + e.what());
  }

  Checkpoint ck;
  const FeatureSchema schema = FeatureSchema::from_json(meta.at("schema"));
  ck.preprocessor = Preprocessor::from_json(meta.at("preprocessor"), schema);
  const NaimConfig config = Checkpoint::config_from_json(meta.at("config"));
  ModelSpec spec = ModelSpec::from(ck.preprocessor);
  spec.n_classes = meta.at("n_classes").get<std::size_t>();
  ck.params = init_naim(config, spec, 0);

  const std::uint64_t n_params = detail::get_u64(is);
  std::vector<NamedParam> named = ck.params.named();
  if (n_params != named.size())
    throw DataError("load_checkpoint: parameter count mismatch (file " + std::to_string(n_params) +
                    ", model " + std::to_string(named.size()) + ")");
  for (NamedParam& np : named) {
    const std::uint64_t name_len = detail::get_u64(is);
    std::string name(name_len, '\0');
    is.read(name.data(), static_cast<std::streamsize>(name_len));
    if (name != np.name)
      throw DataError("load_checkpoint: parameter order mismatch: file has '" + name + "', expected '" +
                      np.name + "'");
    const std::uint64_t rank = detail::get_u64(is);
    std::vector<std::size_t> shape(rank);
    for (std::uint64_t d = 0; d < rank; ++d) shape[d] = static_cast<std::size_t>(detail::get_u64(is));
    if (shape != np.value->shape)
      throw DataError("load_checkpoint: shape mismatch for parameter '" + name + "'");
    is.read(reinterpret_cast<char*>(np.value->data.data()),
            static_cast<std::streamsize>(np.value->data.size() * sizeof(double)));
    if (!is) throw DataError("load_checkpoint: truncated tensor data for '" + name + "'");
  }
  return ck;
}

}  // namespace naim
