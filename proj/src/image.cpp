#include "softaug/image.hpp"

#include <cmath>
#include <string>

#include "softaug/errors.hpp"

namespace softaug {

namespace {

void check_shape(int width, int height, int channels) {
  if (width < 1 || height < 1) {
    throw ContractViolation("image dimensions must be positive, got " + std::to_string(width) +
                            "x" + std::to_string(height));
  }
  if (channels != 1 && channels != 3) {
    throw ContractViolation("image must have 1 or 3 channels, got " + std::to_string(channels));
  }
}

}  // namespace

Image::Image(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels) {
  check_shape(width, height, channels);
  data_.assign(pixel_count() * static_cast<std::size_t>(channels), fill);
}

Image::Image(int width, int height, int channels, std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  check_shape(width, height, channels);
  if (data_.size() != pixel_count() * static_cast<std::size_t>(channels)) {
    throw ContractViolation("image buffer holds " + std::to_string(data_.size()) +
                            " bytes, expected " +
                            std::to_string(pixel_count() * static_cast<std::size_t>(channels)));
  }
}

std::uint8_t saturate_u8(double value) noexcept {
  if (!(value > 0.0)) return 0;
  if (value >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::lround(value));
}

}  // namespace softaug
