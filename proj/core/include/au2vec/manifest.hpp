#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace au2vec {

/// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

struct FileRecord {
  /// Relative paths resolve against the manifest's directory.
  std::string path;
  std::string sha256;
};

struct StageRecord {
  std::string stage;
  std::vector<FileRecord> inputs;
  std::vector<FileRecord> outputs;
  std::map<std::string, std::string> params;
  double seconds = 0.0;
};

struct PipelineManifest {
  std::string tool_version;
  std::vector<StageRecord> stages;
};

/// Records `path` (digest computed now), expressed relative to `base` when it
/// lies underneath it.
FileRecord record_file(const std::filesystem::path& path, const std::filesystem::path& base);

std::string format_manifest(const PipelineManifest& manifest);
PipelineManifest parse_manifest(std::string_view json_text, const std::string& what = "manifest");
void write_manifest(const PipelineManifest& manifest, const std::filesystem::path& path);
PipelineManifest read_manifest(const std::filesystem::path& path);

/// Recomputes every recorded digest. Returns one message per missing or
/// modified file; empty when the manifest checks out.
std::vector<std::string> verify_manifest(const PipelineManifest& manifest, const std::filesystem::path& base);

}  // namespace au2vec
