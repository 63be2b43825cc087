#include "softaug/dataset.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <iterator>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "softaug/errors.hpp"

namespace softaug {

namespace {

constexpr std::array<const char*, 10> kCifar10Names = {"airplane", "automobile", "bird",  "cat",  "deer",
                                                       "dog",      "frog",       "horse", "ship", "truck"};

struct CifarFile {
  std::filesystem::path path;
  std::vector<std::uint8_t> bytes;
};

class CifarSource final : public DatasetHandle::Source {
 public:
  CifarSource(std::vector<CifarFile> files, CifarVariant variant) : files_(std::move(files)), variant_(variant) {
    const std::size_t record = cifar_record_size(variant_);
    std::size_t running = 0;
    for (const auto& f : files_) {
      running += f.bytes.size() / record;
      ends_.push_back(running);
    }
  }

  std::size_t size() const override { return ends_.empty() ? 0 : ends_.back(); }

  Sample sample(std::size_t index) const override {
    const auto [file, offset] = locate(index);
    const std::size_t record = cifar_record_size(variant_);
    const std::uint8_t* base = files_[file].bytes.data() + offset * record;
    const std::uint8_t* pixels = base + (variant_ == CifarVariant::Cifar10 ? 1 : 2);
    Image img(32, 32, 3);
    // Source is planar (all R, all G, all B); the image is interleaved.
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < 32; ++y) {
        for (int x = 0; x < 32; ++x) img.at(x, y, c) = pixels[c * 1024 + y * 32 + x];
      }
    }
    const int label = variant_ == CifarVariant::Cifar10 ? base[0] : base[1];
    return Sample{std::move(img), label};
  }

  std::string describe(std::size_t index) const override {
    const auto [file, offset] = locate(index);
    return files_[file].path.string() + ":" + std::to_string(offset);
  }

 private:
  std::pair<std::size_t, std::size_t> locate(std::size_t index) const {
    const auto it = std::upper_bound(ends_.begin(), ends_.end(), index);
    if (it == ends_.end()) throw ContractViolation("sample index " + std::to_string(index) + " out of range");
    const auto file = static_cast<std::size_t>(it - ends_.begin());
    const std::size_t start = file == 0 ? 0 : ends_[file - 1];
    return {file, index - start};
  }

  std::vector<CifarFile> files_;
  CifarVariant variant_;
  std::vector<std::size_t> ends_;
};

class FolderSource final : public DatasetHandle::Source {
 public:
  FolderSource(std::vector<std::filesystem::path> paths, std::vector<int> labels)
      : paths_(std::move(paths)), labels_(std::move(labels)) {}

  std::size_t size() const override { return paths_.size(); }
  Sample sample(std::size_t index) const override {
    if (index >= paths_.size()) throw ContractViolation("sample index out of range");
    return Sample{read_image(paths_[index]), labels_[index]};
  }
  std::string describe(std::size_t index) const override { return paths_.at(index).string(); }

 private:
  std::vector<std::filesystem::path> paths_;
  std::vector<int> labels_;
};

class MemorySource final : public DatasetHandle::Source {
 public:
  explicit MemorySource(std::vector<Sample> samples) : samples_(std::move(samples)) {}
  std::size_t size() const override { return samples_.size(); }
  Sample sample(std::size_t index) const override { return samples_.at(index); }
  std::string describe(std::size_t index) const override { return "memory:" + std::to_string(index); }

 private:
  std::vector<Sample> samples_;
};

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

cv::Mat to_mat(const Image& img) {
  if (img.channels() == 1) {
    cv::Mat m(img.height(), img.width(), CV_8UC1);
    std::copy(img.data().begin(), img.data().end(), m.data);
    return m;
  }
  cv::Mat rgb(img.height(), img.width(), CV_8UC3);
  std::copy(img.data().begin(), img.data().end(), rgb.data);
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  return bgr;
}

}  // namespace

DatasetHandle::DatasetHandle(DatasetSource kind, int class_count, std::vector<std::string> class_names,
                             std::shared_ptr<const Source> source)
    : kind_(kind), class_count_(class_count), class_names_(std::move(class_names)), source_(std::move(source)) {}

Sample DatasetHandle::sample(std::size_t index) const { return source_->sample(index); }

std::string DatasetHandle::class_name(int label) const {
  if (label >= 0 && static_cast<std::size_t>(label) < class_names_.size()) {
    return class_names_[static_cast<std::size_t>(label)];
  }
  return "class " + std::to_string(label);
}

DatasetHandle load_cifar(std::span<const std::filesystem::path> files, CifarVariant variant) {
  const std::size_t record = cifar_record_size(variant);
  const int class_count = variant == CifarVariant::Cifar10 ? 10 : 100;
  std::vector<CifarFile> loaded;
  for (const auto& path : files) {
    CifarFile f{path, read_bytes(path)};
    if (f.bytes.size() % record != 0) {
      const std::uint64_t offset = f.bytes.size() / record * record;
      throw FormatError(path.string() + ": truncated CIFAR record at byte offset " + std::to_string(offset) +
                            " (file size " + std::to_string(f.bytes.size()) + " is not a multiple of " +
                            std::to_string(record) + ")",
                        offset);
    }
    const std::size_t label_byte = variant == CifarVariant::Cifar10 ? 0 : 1;
    for (std::size_t offset = 0; offset < f.bytes.size(); offset += record) {
      if (f.bytes[offset + label_byte] >= class_count) {
        throw FormatError(path.string() + ": label " + std::to_string(f.bytes[offset + label_byte]) +
                              " out of range at byte offset " + std::to_string(offset + label_byte),
                          offset + label_byte);
      }
    }
    loaded.push_back(std::move(f));
  }
  std::vector<std::string> names;
  if (variant == CifarVariant::Cifar10) names.assign(kCifar10Names.begin(), kCifar10Names.end());
  return DatasetHandle(variant == CifarVariant::Cifar10 ? DatasetSource::Cifar10 : DatasetSource::Cifar100,
                       class_count, std::move(names),
                       std::make_shared<CifarSource>(std::move(loaded), variant));
}

DatasetHandle load_cifar(const std::filesystem::path& file, CifarVariant variant) {
  return load_cifar(std::span<const std::filesystem::path>(&file, 1), variant);
}

DatasetHandle load_image_folder(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) throw IoError(root.string() + " is not a directory");
  std::vector<std::filesystem::path> class_dirs;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());

  std::vector<std::string> names;
  std::vector<std::filesystem::path> paths;
  std::vector<int> labels;
  for (std::size_t label = 0; label < class_dirs.size(); ++label) {
    names.push_back(class_dirs[label].filename().string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(class_dirs[label])) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) spdlog::warn("class directory {} contains no images", class_dirs[label].string());
    for (auto& f : files) {
      paths.push_back(std::move(f));
      labels.push_back(static_cast<int>(label));
    }
  }
  const int class_count = static_cast<int>(class_dirs.size());
  return DatasetHandle(DatasetSource::ImageFolder, class_count, std::move(names),
                       std::make_shared<FolderSource>(std::move(paths), std::move(labels)));
}

DatasetHandle make_in_memory_dataset(std::vector<Sample> samples, int class_count) {
  for (const auto& s : samples) {
    if (s.label < 0 || s.label >= class_count) throw ContractViolation("sample label out of range");
  }
  return DatasetHandle(DatasetSource::InMemory, class_count, {},
                       std::make_shared<MemorySource>(std::move(samples)));
}

void write_cifar(const std::filesystem::path& file, std::span<const Sample> samples, CifarVariant variant) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw IoError("cannot write " + file.string());
  for (const auto& s : samples) {
    if (s.image.width() != 32 || s.image.height() != 32 || s.image.channels() != 3) {
      throw ContractViolation("CIFAR records hold 32x32x3 images");
    }
    std::vector<char> record;
    record.reserve(cifar_record_size(variant));
    if (variant == CifarVariant::Cifar100) record.push_back(0);  // coarse label is not tracked
    record.push_back(static_cast<char>(s.label));
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < 32; ++y) {
        for (int x = 0; x < 32; ++x) record.push_back(static_cast<char>(s.image.at(x, y, c)));
      }
    }
    out.write(record.data(), static_cast<std::streamsize>(record.size()));
  }
  if (!out) throw IoError("failed writing " + file.string());
}

std::vector<std::uint8_t> encode_png(const Image& img) {
  std::vector<std::uint8_t> buffer;
  if (!cv::imencode(".png", to_mat(img), buffer, {cv::IMWRITE_PNG_COMPRESSION, 6})) {
    throw IoError("PNG encoding failed");
  }
  return buffer;
}

void write_png(const std::filesystem::path& path, const Image& img) {
  const auto bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("cannot write " + path.string());
}

Image read_image(const std::filesystem::path& path) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (m.empty()) throw FormatError("cannot decode image " + path.string(), 0);
  if (m.depth() != CV_8U) {
    cv::Mat converted;
    m.convertTo(converted, CV_8U, m.depth() == CV_16U ? 1.0 / 257.0 : 1.0);
    m = converted;
  }
  cv::Mat normalized;
  int channels = 3;
  switch (m.channels()) {
    case 1:
      normalized = m;
      channels = 1;
      break;
    case 2: {
      cv::extractChannel(m, normalized, 0);
      channels = 1;
      break;
    }
    case 3:
      cv::cvtColor(m, normalized, cv::COLOR_BGR2RGB);
      break;
    case 4:
      cv::cvtColor(m, normalized, cv::COLOR_BGRA2RGB);
      break;
    default:
      throw FormatError("unsupported channel count in " + path.string(), 0);
  }
  if (!normalized.isContinuous()) normalized = normalized.clone();
  std::vector<std::uint8_t> data(normalized.data, normalized.data + normalized.total() * normalized.elemSize());
  return Image(normalized.cols, normalized.rows, channels, std::move(data));
}

}  // namespace softaug
