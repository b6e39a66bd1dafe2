#include "tfold/imaging.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <sstream>

#include "tfold/geometry.hpp"
#include "tfold/io.hpp"

namespace tfold {

namespace {

void check_rect(const Rect& r, int width, int height, const char* name) {
  if (r.width <= 0 || r.height <= 0 || r.x < 0 || r.y < 0 || r.x + r.width > width || r.y + r.height > height)
    throw DomainError(std::string(name) + " lies outside the " + std::to_string(width) + "x" +
                      std::to_string(height) + " image");
}

// Bilinear sample at continuous pixel coordinates (pixel centers on integers),
// clamped to the edge.
double sample_clamped(const double* plane, int width, int height, double u, double v) {
  u = std::clamp(u, 0.0, static_cast<double>(width - 1));
  v = std::clamp(v, 0.0, static_cast<double>(height - 1));
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const int x1 = std::min(x0 + 1, width - 1);
  const int y1 = std::min(y0 + 1, height - 1);
  const double fx = u - x0;
  const double fy = v - y0;
  auto px = [&](int x, int y) { return plane[static_cast<std::size_t>(y) * width + x]; };
  const double top = px(x0, y0) + fx * (px(x1, y0) - px(x0, y0));
  const double bottom = px(x0, y1) + fx * (px(x1, y1) - px(x0, y1));
  return top + fy * (bottom - top);
}

void skip_ws_and_comments(std::istream& in) {
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

}  // namespace

Frame::Frame(int w, int h, std::uint8_t fill) : width(w), height(h) {
  if (w <= 0 || h <= 0) throw DomainError("frame dimensions must be positive");
  data.assign(static_cast<std::size_t>(w) * h * 3, fill);
}

PlanarImage::PlanarImage(int c, int h, int w, double fill) : channels(c), height(h), width(w) {
  if (c <= 0 || h <= 0 || w <= 0) throw DomainError("image dimensions must be positive");
  data.assign(static_cast<std::size_t>(c) * h * w, fill);
}

DiffImage color_difference(const Frame& frame, const Frame& reference) {
  if (frame.width != reference.width || frame.height != reference.height)
    throw DomainError("frame is " + std::to_string(frame.width) + "x" + std::to_string(frame.height) +
                      " but reference is " + std::to_string(reference.width) + "x" +
                      std::to_string(reference.height));
  DiffImage out{frame.width, frame.height, std::vector<std::int16_t>(frame.data.size())};
  for (std::size_t i = 0; i < frame.data.size(); ++i)
    out.data[i] = static_cast<std::int16_t>(static_cast<int>(frame.data[i]) - static_cast<int>(reference.data[i]));
  return out;
}

MonoImage monochrome_difference(const DiffImage& diff) {
  MonoImage out{diff.width, diff.height, std::vector<std::int16_t>(static_cast<std::size_t>(diff.width) * diff.height)};
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = static_cast<std::int16_t>(diff.data[3 * i] - diff.data[3 * i + 1]);
  return out;
}

std::vector<std::uint8_t> visualize(const MonoImage& mono) {
  std::vector<std::uint8_t> out(mono.data.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(std::clamp<int>(mono.data[i], -127, 127) + 128);
  return out;
}

std::vector<double> resize_bilinear(const std::vector<double>& plane, int width, int height, int out_width,
                                    int out_height) {
  if (width <= 0 || height <= 0 || out_width <= 0 || out_height <= 0)
    throw DomainError("resize dimensions must be positive");
  if (width == out_width && height == out_height) return plane;
  std::vector<double> out(static_cast<std::size_t>(out_width) * out_height);
  const double sx = static_cast<double>(width) / out_width;
  const double sy = static_cast<double>(height) / out_height;
  for (int y = 0; y < out_height; ++y) {
    const double v = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < out_width; ++x) {
      const double u = (x + 0.5) * sx - 0.5;
      out[static_cast<std::size_t>(y) * out_width + x] = sample_clamped(plane.data(), width, height, u, v);
    }
  }
  return out;
}

PlanarImage crop_led_regions(const DiffImage& diff, const Rect& region_a, const Rect& region_b, int out_width,
                             int out_height) {
  check_rect(region_a, diff.width, diff.height, "region_a");
  check_rect(region_b, diff.width, diff.height, "region_b");
  PlanarImage out(2, out_height, out_width);
  const std::pair<const Rect*, int> sources[] = {{&region_a, 0}, {&region_b, 1}};
  for (int ch = 0; ch < 2; ++ch) {
    const Rect& r = *sources[ch].first;
    std::vector<double> plane(static_cast<std::size_t>(r.width) * r.height);
    for (int y = 0; y < r.height; ++y)
      for (int x = 0; x < r.width; ++x)
        plane[static_cast<std::size_t>(y) * r.width + x] = diff.at(r.x + x, r.y + y, sources[ch].second);
    const std::vector<double> resized = resize_bilinear(plane, r.width, r.height, out_width, out_height);
    std::copy(resized.begin(), resized.end(), out.data.begin() + static_cast<std::ptrdiff_t>(ch) * out_width * out_height);
  }
  return out;
}

PlanarImage affine_resample(const PlanarImage& image, const AffineParams& params) {
  if (!(params.scale > 0.0)) throw DomainError("augmentation scale must be positive");
  PlanarImage out(image.channels, image.height, image.width);
  const double cx = 0.5 * (image.width - 1);
  const double cy = 0.5 * (image.height - 1);
  const std::size_t plane = static_cast<std::size_t>(image.width) * image.height;
  for (int c = 0; c < image.channels; ++c) {
    const double* src = image.data.data() + c * plane;
    for (int y = 0; y < image.height; ++y) {
      const double v = (y - cy - params.shift_y) / params.scale + cy;
      for (int x = 0; x < image.width; ++x) {
        const double u = (x - cx - params.shift_x) / params.scale + cx;
        out.at(c, y, x) = sample_clamped(src, image.width, image.height, u, v);
      }
    }
  }
  return out;
}

AffineParams draw_augmentation(std::uint64_t seed, const AugmentRange& range) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> scale(range.min_scale, range.max_scale);
  std::uniform_real_distribution<double> shift(-range.max_shift, range.max_shift);
  AffineParams p;
  p.scale = scale(rng);
  p.shift_x = shift(rng);
  p.shift_y = shift(rng);
  return p;
}

PlanarImage augment(const PlanarImage& image, std::uint64_t seed, const AugmentRange& range) {
  return affine_resample(image, draw_augmentation(seed, range));
}

std::string encode_ppm(const Frame& frame) {
  std::string out = "P6\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(frame.data.data()), frame.data.size());
  return out;
}

Frame decode_ppm(const std::string& bytes) {
  std::istringstream in(bytes);
  std::string magic;
  in >> magic;
  if (magic != "P6") throw IoError("not a binary PPM (P6) image");
  int w = 0;
  int h = 0;
  int maxval = 0;
  skip_ws_and_comments(in);
  in >> w;
  skip_ws_and_comments(in);
  in >> h;
  skip_ws_and_comments(in);
  in >> maxval;
  if (!in || w <= 0 || h <= 0 || maxval != 255) throw IoError("unsupported PPM header");
  in.get();
  Frame frame(w, h);
  in.read(reinterpret_cast<char*>(frame.data.data()), static_cast<std::streamsize>(frame.data.size()));
  if (in.gcount() != static_cast<std::streamsize>(frame.data.size())) throw IoError("truncated PPM data");
  return frame;
}

void write_ppm(const std::string& path, const Frame& frame) { write_file_atomic(path, encode_ppm(frame)); }

Frame read_ppm(const std::string& path) { return decode_ppm(read_file(path)); }

void write_pgm(const std::string& path, int width, int height, const std::vector<std::uint8_t>& gray) {
  if (gray.size() != static_cast<std::size_t>(width) * height) throw DomainError("gray buffer size mismatch");
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(gray.data()), gray.size());
  write_file_atomic(path, out);
}

}  // namespace tfold
