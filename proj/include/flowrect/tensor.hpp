#ifndef FLOWRECT_TENSOR_HPP
#define FLOWRECT_TENSOR_HPP

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>

#include "flowrect/errors.hpp"

namespace flowrect {

// Shape of a video-like dense array: frames x channels x height x width.
struct Shape4 {
    std::int64_t l = 0, c = 0, h = 0, w = 0;

    std::int64_t numel() const { return l * c * h * w; }
    std::int64_t frame_numel() const { return c * h * w; }
    bool operator==(const Shape4&) const = default;

    std::string str() const {
        return "[" + std::to_string(l) + "," + std::to_string(c) + "," +
               std::to_string(h) + "," + std::to_string(w) + "]";
    }

    void validate() const {
        if (l < 1 || c < 1 || h < 1 || w < 1)
            throw ShapeError("invalid shape " + str() + ": all dims must be >= 1");
    }
};

// Dense row-major [L,C,H,W] tensor on top of an Eigen array.
// Element (l,c,h,w) lives at ((l*C + c)*H + h)*W + w.
template <typename Scalar>
class Tensor4 {
  public:
    using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
    using Map2d = Eigen::Map<Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
    using ConstMap2d =
        Eigen::Map<const Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

    Tensor4() = default;
    explicit Tensor4(Shape4 shape) : shape_(shape) {
        shape_.validate();
        data_ = Array::Zero(shape_.numel());
    }
    Tensor4(Shape4 shape, Array data) : shape_(shape), data_(std::move(data)) {
        shape_.validate();
        if (data_.size() != shape_.numel())
            throw ShapeError("data size " + std::to_string(data_.size()) +
                             " does not match shape " + shape_.str());
    }

    static Tensor4 zeros(Shape4 shape) { return Tensor4(shape); }
    static Tensor4 constant(Shape4 shape, Scalar v) {
        Tensor4 t(shape);
        t.data_.setConstant(v);
        return t;
    }

    const Shape4& shape() const { return shape_; }
    std::int64_t size() const { return data_.size(); }

    Array& array() { return data_; }
    const Array& array() const { return data_; }
    Scalar* data() { return data_.data(); }
    const Scalar* data() const { return data_.data(); }

    Scalar& at(std::int64_t l, std::int64_t c, std::int64_t h, std::int64_t w) {
        return data_[index(l, c, h, w)];
    }
    Scalar at(std::int64_t l, std::int64_t c, std::int64_t h, std::int64_t w) const {
        return data_[index(l, c, h, w)];
    }

    std::int64_t index(std::int64_t l, std::int64_t c, std::int64_t h, std::int64_t w) const {
        return ((l * shape_.c + c) * shape_.h + h) * shape_.w + w;
    }

    // H x W view of one (frame, channel) plane.
    Map2d plane(std::int64_t l, std::int64_t c) {
        return Map2d(data_.data() + index(l, c, 0, 0), shape_.h, shape_.w);
    }
    ConstMap2d plane(std::int64_t l, std::int64_t c) const {
        return ConstMap2d(data_.data() + index(l, c, 0, 0), shape_.h, shape_.w);
    }

    // Copy of frame l as a [1,C,H,W] tensor.
    Tensor4 frame(std::int64_t l) const {
        Tensor4 out(Shape4{1, shape_.c, shape_.h, shape_.w});
        out.data_ = data_.segment(l * shape_.frame_numel(), shape_.frame_numel());
        return out;
    }

    bool all_finite() const { return data_.isFinite().all(); }

    template <typename Other>
    Tensor4<Other> cast() const {
        return Tensor4<Other>(shape_, data_.template cast<Other>());
    }

  private:
    Shape4 shape_;
    Array data_;
};

using Tensor4f = Tensor4<float>;
using Tensor4d = Tensor4<double>;

template <typename S>
void require_same_shape(const Tensor4<S>& a, const Tensor4<S>& b, const char* what) {
    if (!(a.shape() == b.shape()))
        throw ShapeError(std::string(what) + ": shape mismatch " + a.shape().str() + " vs " +
                         b.shape().str());
}

template <typename S>
S max_abs_diff(const Tensor4<S>& a, const Tensor4<S>& b) {
    require_same_shape(a, b, "max_abs_diff");
    return (a.array() - b.array()).abs().maxCoeff();
}

template <typename S>
double mse(const Tensor4<S>& a, const Tensor4<S>& b) {
    require_same_shape(a, b, "mse");
    return (a.array() - b.array()).template cast<double>().square().mean();
}

template <typename S>
double mean_abs_diff(const Tensor4<S>& a, const Tensor4<S>& b) {
    require_same_shape(a, b, "mean_abs_diff");
    return (a.array() - b.array()).template cast<double>().abs().mean();
}

template <typename S>
Tensor4<S> clamped(const Tensor4<S>& t, S lo, S hi) {
    Tensor4<S> out = t;
    out.array() = out.array().min(hi).max(lo);
    return out;
}

template <typename S>
bool bit_equal(const Tensor4<S>& a, const Tensor4<S>& b) {
    if (!(a.shape() == b.shape())) return false;
    return std::memcmp(a.data(), b.data(), sizeof(S) * a.size()) == 0;
}

// A video clip with pixel values in [-1,1]; clamps on construction.
struct FrameSequence {
    Tensor4f frames;

    FrameSequence() = default;
    explicit FrameSequence(Tensor4f t) : frames(std::move(t)) {
        if (!frames.all_finite())
            throw NumericError("FrameSequence: non-finite values in " + frames.shape().str());
        frames.array() = frames.array().min(1.0f).max(-1.0f);
    }

    const Shape4& shape() const { return frames.shape(); }
    std::int64_t length() const { return frames.shape().l; }
};

// Evolving ODE state of one branch.
template <typename Scalar = float>
struct LatentState {
    Tensor4<Scalar> z;
    double t = 0.0;
};

// Deterministically regenerable Gaussian sample (see random.hpp).
struct NoiseTensor {
    Tensor4f eps;
    std::uint64_t seed = 0;
};

}  // namespace flowrect

#endif
