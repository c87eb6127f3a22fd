#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bge/errors.hpp"
#include "bge/similarity.hpp"

namespace bge {

// Checkpoint format: a single versioned JSON document holding the encoder
// architecture and the flat parameter vector. Doubles round-trip exactly
// through the serializer, so save + load reproduces theta bit for bit.
inline void save_checkpoint(const ModelParams& p,
                            const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["format"] = "bge.checkpoint";
  doc["version"] = 1;
  doc["embed_dim"] = p.embed_dim();
  doc["views"] = nlohmann::json::array();
  for (int d = 0; d < p.num_views(); ++d) {
    const auto& s = p.spec(d);
    doc["views"].push_back({{"kind", to_string(s.kind)},
                            {"in_dim", s.in_dim},
                            {"hidden_dim", s.hidden_dim}});
  }
  doc["theta"] = std::vector<double>(p.theta.data(), p.theta.data() + p.size());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint: " + path.string());
  out << doc.dump(2) << '\n';
}

inline ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad checkpoint JSON: ") + e.what(), 0);
  }
  if (doc.value("format", "") != "bge.checkpoint")
    throw ValidationError("not a checkpoint file: " + path.string());
  if (doc.value("version", 0) != 1)
    throw ValidationError("unsupported checkpoint version");
  std::vector<EncoderSpec> specs;
  for (const auto& v : doc.at("views")) {
    EncoderSpec s;
    s.kind = encoder_kind_from_string(v.at("kind").get<std::string>());
    s.in_dim = v.at("in_dim").get<int>();
    s.hidden_dim = v.at("hidden_dim").get<int>();
    specs.push_back(s);
  }
  ModelParams p(std::move(specs), doc.at("embed_dim").get<int>());
  auto theta = doc.at("theta").get<std::vector<double>>();
  if (static_cast<int>(theta.size()) != p.size())
    throw ValidationError("checkpoint theta length " +
                          std::to_string(theta.size()) +
                          " does not match the declared architecture (" +
                          std::to_string(p.size()) + ")");
  for (int k = 0; k < p.size(); ++k) p.theta[k] = theta[static_cast<std::size_t>(k)];
  return p;
}

}  // namespace bge
