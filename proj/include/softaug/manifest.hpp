#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "softaug/image.hpp"
#include "softaug/pipeline.hpp"

namespace softaug {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kManifestFormat = "softaug-manifest";
inline constexpr int kManifestVersion = 1;
inline constexpr std::string_view kManifestFile = "manifest.jsonl";
/// Present in the output directory while a run is in progress or after it failed.
inline constexpr std::string_view kIncompleteMarker = "INCOMPLETE";

/// `images/000042.png`
std::string image_relative_path(std::uint64_t sample_id);

Json spec_to_json(const TransformSpec& spec);
TransformSpec spec_from_json(const Json& j);

Json record_to_json(const AugmentationRecord& record, std::string_view image_path);

struct ManifestEntry {
  AugmentationRecord record;
  std::string image_path;
};

/// Inverse of record_to_json. The soft label is rebuilt from (true_class, class_count, confidence).
/// Throws FormatError on missing or mistyped fields.
ManifestEntry record_from_json(const Json& j);

/// Single-writer manifest sink. The first line is a header object; `extra` fields are merged into it.
/// An INCOMPLETE marker exists from construction until finish() succeeds.
class ManifestWriter {
 public:
  ManifestWriter(const std::filesystem::path& out_dir, const Json& extra = Json::object());
  ManifestWriter(const ManifestWriter&) = delete;
  ManifestWriter& operator=(const ManifestWriter&) = delete;

  void write(const Image& image, const AugmentationRecord& record);
  void finish();
  std::size_t count() const noexcept { return count_; }

 private:
  std::filesystem::path dir_;
  std::ofstream out_;
  std::size_t count_ = 0;
  bool finished_ = false;
};

struct Manifest {
  Json header;
  std::vector<ManifestEntry> entries;
};

/// Reads a manifest file. FormatError carries the 1-based line number.
Manifest read_manifest(const std::filesystem::path& manifest_file);

}  // namespace softaug
