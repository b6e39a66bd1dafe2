// Image preparation for the LED-strip camera view: difference images against
// a no-contact reference, red-minus-green monochrome, LED-region crops and
// scale/shift augmentation.

#ifndef TFOLD_IMAGING_HPP
#define TFOLD_IMAGING_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace tfold {

/// 8-bit RGB, row-major, channels interleaved.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Frame() = default;
  /// Throws DomainError unless both dimensions are positive.
  Frame(int width, int height, std::uint8_t fill = 0);

  std::uint8_t& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  bool operator==(const Frame&) const = default;
};

/// Signed per-channel difference, same layout as Frame.
struct DiffImage {
  int width = 0;
  int height = 0;
  std::vector<std::int16_t> data;

  std::int16_t at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
};

struct MonoImage {
  int width = 0;
  int height = 0;
  std::vector<std::int16_t> data;

  std::int16_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

/// Channel-major floating-point image (channel, row, column).
struct PlanarImage {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  PlanarImage() = default;
  PlanarImage(int channels, int height, int width, double fill = 0.0);

  double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
};

struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

/// frame - reference per channel, unclamped. Throws DomainError on a size mismatch.
DiffImage color_difference(const Frame& frame, const Frame& reference);

/// red - green of a difference image.
MonoImage monochrome_difference(const DiffImage& diff);

/// 8-bit view of a signed monochrome image: clamp(v, -127, 127) + 128.
std::vector<std::uint8_t> visualize(const MonoImage& mono);

/// Bilinear resize with pixel centers at +0.5 and edge clamping. Equal sizes
/// copy exactly.
std::vector<double> resize_bilinear(const std::vector<double>& plane, int width, int height, int out_width,
                                    int out_height);

/// Crops `region_a` from the red channel and `region_b` from the green
/// channel, resizes both to out_width x out_height and stacks them as
/// channels 0 and 1. Throws DomainError for regions outside the image.
PlanarImage crop_led_regions(const DiffImage& diff, const Rect& region_a, const Rect& region_b, int out_width,
                             int out_height);

struct AugmentRange {
  double min_scale = 0.9;
  double max_scale = 1.1;
  double max_shift = 5.0;
};

struct AffineParams {
  double scale = 1.0;
  double shift_x = 0.0;
  double shift_y = 0.0;
};

/// Scales about the image center, then shifts; samples bilinearly with edge padding.
PlanarImage affine_resample(const PlanarImage& image, const AffineParams& params);

AffineParams draw_augmentation(std::uint64_t seed, const AugmentRange& range = {});

/// affine_resample(image, draw_augmentation(seed, range))
PlanarImage augment(const PlanarImage& image, std::uint64_t seed, const AugmentRange& range = {});

/// Binary P6 / P5 with maxval 255. Writes are atomic; errors throw IoError.
void write_ppm(const std::string& path, const Frame& frame);
Frame read_ppm(const std::string& path);
void write_pgm(const std::string& path, int width, int height, const std::vector<std::uint8_t>& gray);

std::string encode_ppm(const Frame& frame);
Frame decode_ppm(const std::string& bytes);

}  // namespace tfold

#endif  // TFOLD_IMAGING_HPP
