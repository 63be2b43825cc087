#include "softaug/manifest.hpp"

#include <cstdio>
#include <system_error>

#include "softaug/dataset.hpp"
#include "softaug/errors.hpp"

namespace softaug {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

Json params_to_json(const TransformParams& params) {
  return std::visit(
      Overloaded{
          [](std::monostate) { return Json::object(); },
          [](const RotateParams& p) { return Json{{"degrees", p.degrees}}; },
          [](const ShearParams& p) { return Json{{"factor", p.factor}}; },
          [](const TranslateParams& p) { return Json{{"fraction", p.fraction}, {"pixels", p.pixels}}; },
          [](const EnhanceParams& p) { return Json{{"factor", p.factor}}; },
          [](const PosterizeParams& p) { return Json{{"bits_removed", p.bits_removed}, {"bits_kept", p.bits_kept}}; },
          [](const SolarizeParams& p) { return Json{{"threshold", p.threshold}}; },
          [](const EraseParams& p) {
            return Json{{"x", p.x},           {"y", p.y},
                        {"width", p.width},   {"height", p.height},
                        {"target_area", p.target_area}, {"aspect", p.aspect},
                        {"attempts", p.attempts}};
          },
          [](const NoiseParams& p) {
            return Json{{"sigma", p.sigma},         {"scale", p.scale},
                        {"area_fraction", p.area_fraction}, {"center_x", p.center_x},
                        {"center_y", p.center_y},   {"patch_side", p.patch_side}};
          },
          [](const CropParams& p) {
            return Json{{"padding", p.padding}, {"offset_x", p.offset_x}, {"offset_y", p.offset_y}};
          },
          [](const FlipParams& p) { return Json{{"flipped", p.flipped}}; },
      },
      params);
}

template <class T>
T field(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) throw FormatError(std::string("missing field '") + key + "'", 0);
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(std::string("field '") + key + "' has the wrong type", 0);
  }
}

TransformParams params_from_json(TransformKind kind, const Json& p) {
  switch (kind) {
    case TransformKind::Rotate:
      return RotateParams{field<double>(p, "degrees")};
    case TransformKind::ShearX:
    case TransformKind::ShearY:
      return ShearParams{field<double>(p, "factor")};
    case TransformKind::TranslateX:
    case TransformKind::TranslateY:
      return TranslateParams{field<double>(p, "fraction"), field<int>(p, "pixels")};
    case TransformKind::Brightness:
    case TransformKind::Contrast:
    case TransformKind::Sharpness:
    case TransformKind::Color:
      return EnhanceParams{field<double>(p, "factor")};
    case TransformKind::Posterize:
      return PosterizeParams{field<double>(p, "bits_removed"), field<int>(p, "bits_kept")};
    case TransformKind::Solarize:
      return SolarizeParams{field<double>(p, "threshold")};
    case TransformKind::Equalize:
    case TransformKind::AutoContrast:
    case TransformKind::Identity:
      return std::monostate{};
    case TransformKind::RandomErase:
      return EraseParams{field<int>(p, "x"),
                         field<int>(p, "y"),
                         field<int>(p, "width"),
                         field<int>(p, "height"),
                         field<double>(p, "target_area"),
                         field<double>(p, "aspect"),
                         field<int>(p, "attempts")};
    case TransformKind::GaussianNoise:
    case TransformKind::PatchGaussianNoise:
      return NoiseParams{field<double>(p, "sigma"),  field<double>(p, "scale"),    field<double>(p, "area_fraction"),
                         field<int>(p, "center_x"), field<int>(p, "center_y"), field<int>(p, "patch_side")};
    case TransformKind::RandomCrop:
      return CropParams{field<int>(p, "padding"), field<int>(p, "offset_x"), field<int>(p, "offset_y")};
    case TransformKind::HorizontalFlip:
      return FlipParams{field<bool>(p, "flipped")};
  }
  return std::monostate{};
}

}  // namespace

std::string image_relative_path(std::uint64_t sample_id) {
  char buffer[48];
  std::snprintf(buffer, sizeof buffer, "images/%06llu.png", static_cast<unsigned long long>(sample_id));
  return buffer;
}

Json spec_to_json(const TransformSpec& spec) {
  return Json{{"kind", kind_name(spec.kind)},
              {"phi", spec.phi},
              {"applied", spec.applied},
              {"params", params_to_json(spec.params)}};
}

TransformSpec spec_from_json(const Json& j) {
  const auto name = field<std::string>(j, "kind");
  const auto kind = parse_kind(name);
  if (!kind) throw FormatError("unknown transform kind '" + name + "'", 0);
  TransformSpec spec;
  spec.kind = *kind;
  spec.phi = field<double>(j, "phi");
  spec.applied = field<bool>(j, "applied");
  spec.params = params_from_json(*kind, field<Json>(j, "params"));
  return spec;
}

Json record_to_json(const AugmentationRecord& record, std::string_view image_path) {
  Json stages = Json::array();
  for (const auto& s : record.stages) {
    Json entry{{"stage", s.stage}, {"soft", s.soft}, {"confidence", s.confidence}};
    const Json spec = spec_to_json(s.spec);
    for (const auto& [key, value] : spec.items()) entry[key] = value;
    stages.push_back(std::move(entry));
  }
  return Json{{"sample_id", record.sample_id},
              {"image", image_path},
              {"true_class", record.true_class},
              {"class_count", record.class_count},
              {"confidence", record.soft_label.confidence},
              {"composed_confidence", record.composed_confidence},
              {"off_target", record.soft_label.off_target()},
              {"loss_weight", record.loss_weight},
              {"stages", std::move(stages)},
              {"rng", Json{{"seed", record.global_seed}, {"index", record.sample_index}}}};
}

ManifestEntry record_from_json(const Json& j) {
  ManifestEntry entry;
  AugmentationRecord& r = entry.record;
  entry.image_path = field<std::string>(j, "image");
  r.sample_id = field<std::uint64_t>(j, "sample_id");
  r.true_class = field<int>(j, "true_class");
  r.class_count = field<int>(j, "class_count");
  r.composed_confidence = field<double>(j, "composed_confidence");
  const double label_confidence = field<double>(j, "confidence");
  r.loss_weight = field<double>(j, "loss_weight");
  for (const auto& s : field<Json>(j, "stages")) {
    r.stages.push_back(StageOutcome{field<std::string>(s, "stage"), field<bool>(s, "soft"), spec_from_json(s),
                                    field<double>(s, "confidence")});
  }
  const auto rng = field<Json>(j, "rng");
  r.global_seed = field<std::uint64_t>(rng, "seed");
  r.sample_index = field<std::uint64_t>(rng, "index");
  try {
    r.soft_label = soft_target(r.true_class, r.class_count, label_confidence);
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("invalid label: ") + e.what(), 0);
  }
  r.soft_label.loss_weight = r.loss_weight;
  return entry;
}

ManifestWriter::ManifestWriter(const std::filesystem::path& out_dir, const Json& extra) : dir_(out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir_ / "images", ec);
  if (ec) throw IoError("cannot create " + (dir_ / "images").string() + ": " + ec.message());
  {
    std::ofstream marker(dir_ / kIncompleteMarker);
    if (!marker) throw IoError("cannot write to " + dir_.string());
    marker << "run in progress or aborted\n";
  }
  out_.open(dir_ / kManifestFile, std::ios::binary | std::ios::trunc);
  if (!out_) throw IoError("cannot create " + (dir_ / kManifestFile).string());
  Json header{{"format", kManifestFormat}, {"version", kManifestVersion}};
  for (auto& [key, value] : extra.items()) header[key] = value;
  out_ << header.dump() << '\n';
}

void ManifestWriter::write(const Image& image, const AugmentationRecord& record) {
  if (finished_) throw ContractViolation("manifest already finished");
  const std::string relative = image_relative_path(record.sample_id);
  write_png(dir_ / relative, image);
  out_ << record_to_json(record, relative).dump() << '\n';
  if (!out_) throw IoError("failed writing " + (dir_ / kManifestFile).string());
  ++count_;
}

void ManifestWriter::finish() {
  if (finished_) return;
  out_.flush();
  out_.close();
  if (out_.fail()) throw IoError("failed closing " + (dir_ / kManifestFile).string());
  std::filesystem::remove(dir_ / kIncompleteMarker);
  finished_ = true;
}

Manifest read_manifest(const std::filesystem::path& manifest_file) {
  std::ifstream in(manifest_file, std::ios::binary);
  if (!in) throw IoError("cannot open " + manifest_file.string());
  Manifest manifest;
  std::string line;
  std::uint64_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(manifest_file.string() + ":" + std::to_string(line_number) + ": " + e.what(), line_number);
    }
    if (line_number == 1) {
      if (j.value("format", std::string{}) != kManifestFormat) {
        throw FormatError(manifest_file.string() + ": missing manifest header", 1);
      }
      if (j.value("version", 0) != kManifestVersion) {
        throw FormatError(manifest_file.string() + ": unsupported manifest version", 1);
      }
      manifest.header = std::move(j);
      continue;
    }
    try {
      manifest.entries.push_back(record_from_json(j));
    } catch (const FormatError& e) {
      throw FormatError(manifest_file.string() + ":" + std::to_string(line_number) + ": " + e.what(), line_number);
    }
  }
  if (line_number == 0) throw FormatError(manifest_file.string() + ": empty manifest", 0);
  return manifest;
}

}  // namespace softaug
