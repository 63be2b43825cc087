#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "softaug/image.hpp"

namespace softaug {

enum class DatasetSource { Cifar10, Cifar100, ImageFolder, InMemory };

enum class CifarVariant { Cifar10, Cifar100 };

/// Bytes per record: label byte(s) followed by a 32x32x3 channel-planar image.
inline constexpr std::size_t kCifarPixels = 32 * 32 * 3;
constexpr std::size_t cifar_record_size(CifarVariant v) {
  return (v == CifarVariant::Cifar10 ? 1 : 2) + kCifarPixels;
}

struct Sample {
  Image image;
  int label = 0;
};

/// Read-only random-access view of a labelled image collection. Cheap to copy; shareable
/// across threads.
class DatasetHandle {
 public:
  class Source {
   public:
    virtual ~Source() = default;
    virtual std::size_t size() const = 0;
    virtual Sample sample(std::size_t index) const = 0;
    virtual std::string describe(std::size_t index) const = 0;
  };

  DatasetHandle(DatasetSource kind, int class_count, std::vector<std::string> class_names,
                std::shared_ptr<const Source> source);

  DatasetSource source() const noexcept { return kind_; }
  int class_count() const noexcept { return class_count_; }
  std::size_t size() const { return source_->size(); }
  /// Decodes one sample. Image-folder handles decode lazily and may throw FormatError here.
  Sample sample(std::size_t index) const;
  /// Where a sample came from (`file:record` or a path), for error messages.
  std::string describe(std::size_t index) const { return source_->describe(index); }
  std::string class_name(int label) const;

 private:
  DatasetSource kind_;
  int class_count_;
  std::vector<std::string> class_names_;
  std::shared_ptr<const Source> source_;
};

/// Loads CIFAR binary batches (concatenated in the given order). CIFAR-100 uses the fine label.
/// Throws FormatError (with the byte offset of the first incomplete record) for truncated files.
DatasetHandle load_cifar(std::span<const std::filesystem::path> files, CifarVariant variant);
DatasetHandle load_cifar(const std::filesystem::path& file, CifarVariant variant);

/// Class-per-directory layout; classes are numbered by sorted directory name and files are
/// visited in sorted order.
DatasetHandle load_image_folder(const std::filesystem::path& root);

DatasetHandle make_in_memory_dataset(std::vector<Sample> samples, int class_count);

/// Writes samples in CIFAR binary layout (32x32x3 images only).
void write_cifar(const std::filesystem::path& file, std::span<const Sample> samples, CifarVariant variant);

/// PNG codec. Colour images are stored as RGB, gray as 8-bit gray.
std::vector<std::uint8_t> encode_png(const Image& img);
void write_png(const std::filesystem::path& path, const Image& img);
/// Decodes any format OpenCV reads into 1 or 3 channels (alpha is dropped).
Image read_image(const std::filesystem::path& path);

}  // namespace softaug
