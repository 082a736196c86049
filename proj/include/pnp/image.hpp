#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "pnp/error.hpp"

namespace pnp {

using Index = Eigen::Index;

struct Shape {
  Index height = 0;
  Index width = 0;
  Index channels = 0;

  Index pixels() const { return height * width; }
  Index size() const { return height * width * channels; }
  bool operator==(const Shape&) const = default;
};

inline std::string to_string(const Shape& s) {
  return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" +
         std::to_string(s.channels);
}

/// Dense H x W x C image, row-major with interleaved channels.
///
/// Storage is a flat Eigen column array so element-wise arithmetic composes
/// as ordinary Eigen array expressions: `a.array() * p.array() + b.array()`.
template <typename Scalar>
class Image {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

  Image() = default;
  explicit Image(Shape shape, Scalar fill = Scalar(0))
      : shape_(shape), data_(Array::Constant(shape.size(), fill)) {}
  Image(Index height, Index width, Index channels, Scalar fill = Scalar(0))
      : Image(Shape{height, width, channels}, fill) {}

  template <typename Derived>
  Image(Shape shape, const Eigen::ArrayBase<Derived>& data)
      : shape_(shape), data_(data) {
    if (data_.size() != shape.size()) {
      throw ShapeError("image data length " + std::to_string(data_.size()) +
                       " does not match shape " + to_string(shape));
    }
  }

  static Image constant(Shape shape, Scalar value) { return Image(shape, value); }
  static Image zeros(Shape shape) { return Image(shape, Scalar(0)); }
  static Image ones(Shape shape) { return Image(shape, Scalar(1)); }

  const Shape& shape() const { return shape_; }
  Index height() const { return shape_.height; }
  Index width() const { return shape_.width; }
  Index channels() const { return shape_.channels; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Index index(Index row, Index col, Index channel) const {
    return (row * shape_.width + col) * shape_.channels + channel;
  }
  Scalar& operator()(Index row, Index col, Index channel = 0) {
    return data_[index(row, col, channel)];
  }
  Scalar operator()(Index row, Index col, Index channel = 0) const {
    return data_[index(row, col, channel)];
  }
  Scalar& operator[](Index i) { return data_[i]; }
  Scalar operator[](Index i) const { return data_[i]; }

  Array& array() { return data_; }
  const Array& array() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  template <typename Other>
  Image<Other> cast() const {
    return Image<Other>(shape_, data_.template cast<Other>());
  }

  /// Same shape, new values.
  template <typename Derived>
  Image with(const Eigen::ArrayBase<Derived>& values) const {
    return Image(shape_, values);
  }

  bool all_finite() const { return data_.allFinite(); }

  bool operator==(const Image& o) const {
    return shape_ == o.shape_ && (data_ == o.data_).all();
  }

 private:
  Shape shape_;
  Array data_;
};

using ImageTensor = Image<double>;
using ImageF = Image<float>;

/// Per-entry noise standard deviation (the diagonal of Sigma^{1/2}). Same
/// layout as the image it parameterizes; entries are >= 0.
using NoiseLevelMap = Image<double>;

/// Binary indicator per entry. Stored as doubles in {0, 1} so it composes
/// directly with image expressions.
class PixelMask {
 public:
  PixelMask() = default;
  explicit PixelMask(Shape shape) : values_(shape, 0.0) {}
  explicit PixelMask(ImageTensor values);

  const Shape& shape() const { return values_.shape(); }
  bool operator()(Index row, Index col, Index channel = 0) const {
    return values_(row, col, channel) != 0.0;
  }
  void set(Index row, Index col, Index channel, bool on) {
    values_(row, col, channel) = on ? 1.0 : 0.0;
  }
  const ImageTensor& values() const { return values_; }
  const ImageTensor::Array& array() const { return values_.array(); }
  Index count() const { return static_cast<Index>(values_.array().sum()); }

  /// Single-channel mask of one channel.
  PixelMask channel(Index c) const;

  bool operator==(const PixelMask& o) const { return values_ == o.values_; }

 private:
  ImageTensor values_;
};

inline PixelMask::PixelMask(ImageTensor values) : values_(std::move(values)) {
  if (!((values_.array() == 0.0) || (values_.array() == 1.0)).all()) {
    throw InvalidArgument("mask entries must be 0 or 1");
  }
}

inline PixelMask PixelMask::channel(Index c) const {
  PixelMask out(Shape{shape().height, shape().width, 1});
  for (Index i = 0; i < shape().height; ++i)
    for (Index j = 0; j < shape().width; ++j) out.set(i, j, 0, (*this)(i, j, c));
  return out;
}

template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
  if (!(a.shape() == b.shape())) {
    throw ShapeError(std::string(what) + ": shape mismatch " +
                     to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

template <typename A>
void require_shape(const A& a, const Shape& shape, const char* what) {
  if (!(a.shape() == shape)) {
    throw ShapeError(std::string(what) + ": expected shape " + to_string(shape) + ", got " +
                     to_string(a.shape()));
  }
}

/// Mean of squared differences over every entry.
template <typename Scalar>
double mse_between(const Image<Scalar>& a, const Image<Scalar>& b) {
  require_same_shape(a, b, "mse_between");
  if (a.size() == 0) return 0.0;
  return (a.array().template cast<double>() - b.array().template cast<double>())
             .square()
             .mean();
}

/// Peak signal-to-noise ratio in dB over all entries jointly. Returns +inf
/// when the images are identical.
template <typename Scalar>
double psnr(const Image<Scalar>& reference, const Image<Scalar>& test,
            double peak = 1.0) {
  if (!(peak > 0.0)) throw InvalidArgument("psnr: peak must be positive");
  const double mse = mse_between(reference, test);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

/// Element-wise clamp, used only on final outputs.
template <typename Scalar>
Image<Scalar> clip(const Image<Scalar>& x, Scalar lo = Scalar(0),
                   Scalar hi = Scalar(1)) {
  return x.with(x.array().max(lo).min(hi));
}

}  // namespace pnp
