#include "au2vec/manifest.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <memory>

#include <json.hpp>

#include "au2vec/binio.hpp"
#include "au2vec/error.hpp"

namespace au2vec {

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

FileRecord record_file(const std::filesystem::path& path, const std::filesystem::path& base) {
  namespace fs = std::filesystem;
  const auto abs = fs::weakly_canonical(fs::absolute(path));
  const auto abs_base = fs::weakly_canonical(fs::absolute(base));
  auto rel = abs.lexically_relative(abs_base);
  const bool inside = !rel.empty() && *rel.begin() != "..";
  return {inside ? rel.generic_string() : abs.generic_string(), sha256_file(path)};
}

std::string format_manifest(const PipelineManifest& manifest) {
  using nlohmann::json;
  auto files = [](const std::vector<FileRecord>& recs) {
    json arr = json::array();
    for (const auto& r : recs) arr.push_back({{"path", r.path}, {"sha256", r.sha256}});
    return arr;
  };
  json j;
  j["tool_version"] = manifest.tool_version;
  j["stages"] = json::array();
  for (const auto& s : manifest.stages) {
    j["stages"].push_back({{"stage", s.stage},
                           {"inputs", files(s.inputs)},
                           {"outputs", files(s.outputs)},
                           {"params", s.params},
                           {"seconds", s.seconds}});
  }
  return j.dump(2) + "\n";
}

PipelineManifest parse_manifest(std::string_view json_text, const std::string& what) {
  using nlohmann::json;
  PipelineManifest m;
  try {
    const auto j = json::parse(json_text);
    auto files = [](const json& arr) {
      std::vector<FileRecord> out;
      for (const auto& r : arr) out.push_back({r.at("path").get<std::string>(), r.at("sha256").get<std::string>()});
      return out;
    };
    m.tool_version = j.value("tool_version", "");
    for (const auto& s : j.at("stages")) {
      StageRecord rec;
      rec.stage = s.at("stage").get<std::string>();
      rec.inputs = files(s.at("inputs"));
      rec.outputs = files(s.at("outputs"));
      rec.params = s.at("params").get<std::map<std::string, std::string>>();
      rec.seconds = s.at("seconds").get<double>();
      m.stages.push_back(std::move(rec));
    }
  } catch (const json::exception& e) {
    throw FormatError(what + ": " + e.what());
  }
  return m;
}

void write_manifest(const PipelineManifest& manifest, const std::filesystem::path& path) {
  write_file(path, format_manifest(manifest));
}

PipelineManifest read_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_file(path), path.string());
}

std::vector<std::string> verify_manifest(const PipelineManifest& manifest, const std::filesystem::path& base) {
  namespace fs = std::filesystem;
  std::vector<std::string> problems;
  for (const auto& stage : manifest.stages) {
    for (const auto* list : {&stage.inputs, &stage.outputs}) {
      for (const auto& rec : *list) {
        const fs::path p = fs::path(rec.path).is_absolute() ? fs::path(rec.path) : base / rec.path;
        if (!fs::is_regular_file(p)) {
          problems.push_back(stage.stage + ": missing " + rec.path);
        } else if (sha256_file(p) != rec.sha256) {
          problems.push_back(stage.stage + ": digest mismatch for " + rec.path);
        }
      }
    }
  }
  return problems;
}

}  // namespace au2vec
