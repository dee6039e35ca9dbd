#ifndef FLOWRECT_SMPI_HPP
#define FLOWRECT_SMPI_HPP

#include "flowrect/condition.hpp"
#include "flowrect/optical_flow.hpp"
#include "flowrect/tensor.hpp"

namespace flowrect {

struct SmpiConfig {
    double t_max = 0.95;  // boundary mixing timestep
    double beta = 0.025;  // condition padding scale
    double alpha = 0.95;  // noise blending factor; 1 = i.i.d. noise
    // Warp the already-modulated previous noise instead of the raw one.
    // The printed recurrence uses the raw noise; this stays off by default.
    bool recursive_warp = false;

    void validate() const {
        if (!(t_max > 0.0) || t_max > 1.0) throw DomainError("smpi: t_max must be in (0,1]");
        if (beta < 0.0) throw DomainError("smpi: beta must be >= 0");
        if (alpha < 0.0 || alpha > 1.0) throw DomainError("smpi: alpha must be in [0,1]");
    }
};

// Motion-correlated noise:
//   eps^m_1 = eps_1
//   eps^m_i = ((1-a) warp(eps_{i-1}, o_i) + a eps_i) / sqrt((1-a)^2 + a^2)
// The warp input is the raw previous noise; each output pixel therefore
// blends two independent N(0,1) samples and the scale restores unit variance.
template <typename S>
Tensor4<S> correlated_noise(const Tensor4<S>& eps, const FlowField& flow, double alpha,
                            bool recursive = false) {
    if (alpha < 0.0 || alpha > 1.0) throw DomainError("correlated_noise: alpha must be in [0,1]");
    const auto& s = eps.shape();
    if (alpha == 1.0) return eps;  // zero weight on the warp; scale is exactly 1
    if (s.l > 1) {
        if (flow.pairs() != s.l - 1)
            throw ShapeError("correlated_noise: expected " + std::to_string(s.l - 1) +
                             " flow entries, got " + std::to_string(flow.pairs()));
        if (flow.flow.shape().h != s.h || flow.flow.shape().w != s.w)
            throw ShapeError("correlated_noise: flow resolution does not match noise");
    }

    const S a = S(alpha);
    const S scale = S(1) / S(std::sqrt((1.0 - alpha) * (1.0 - alpha) + alpha * alpha));
    Tensor4<S> out = eps;
    Tensor4f flow_i(Shape4{1, 2, s.h, s.w});
    for (std::int64_t i = 1; i < s.l; ++i) {
        std::memcpy(flow_i.data(), flow.flow.data() + flow.flow.index(i - 1, 0, 0, 0),
                    sizeof(float) * flow_i.size());
        const Tensor4<S> prev = recursive ? out.frame(i - 1) : eps.frame(i - 1);
        Tensor4<S> warped = warp_noise(prev, flow_i);
        auto dst = Eigen::Map<Eigen::Array<S, Eigen::Dynamic, 1>>(
            out.data() + out.index(i, 0, 0, 0), s.frame_numel());
        auto fresh = Eigen::Map<const Eigen::Array<S, Eigen::Dynamic, 1>>(
            eps.data() + eps.index(i, 0, 0, 0), s.frame_numel());
        dst = ((S(1) - a) * warped.array() + a * fresh) * scale;
    }
    return out;
}

// Boundary condition z = (1 - t_max) x_src + t_max eps; the same value
// initializes both ODE branches.
template <typename S>
LatentState<S> init_boundary(const Tensor4<S>& x_src, const Tensor4<S>& eps_m, double t_max) {
    if (!(t_max > 0.0) || t_max > 1.0) throw DomainError("init_boundary: t_max must be in (0,1]");
    require_same_shape(x_src, eps_m, "init_boundary");
    LatentState<S> st;
    st.z = Tensor4<S>(x_src.shape());
    st.z.array() = S(1.0 - t_max) * x_src.array() + S(t_max) * eps_m.array();
    st.t = t_max;
    return st;
}

// c_tar = concat(x_1^edit, beta * source frames 2..L)
inline Condition build_target_condition(const Tensor4f& x_edit_first, const FrameSequence& x_src,
                                        double beta, int token) {
    if (beta < 0.0) throw DomainError("build_target_condition: beta must be >= 0");
    const auto& s = x_src.shape();
    const auto& e = x_edit_first.shape();
    if (e.l != 1 || e.c != s.c || e.h != s.h || e.w != s.w)
        throw ShapeError("build_target_condition: edited frame " + e.str() +
                         " does not match source " + s.str());
    Condition c;
    c.first_frame = x_edit_first;
    if (s.l > 1) {
        Tensor4f pad(Shape4{s.l - 1, s.c, s.h, s.w});
        auto src = Eigen::Map<const Eigen::ArrayXf>(
            x_src.frames.data() + x_src.frames.shape().frame_numel(), pad.size());
        pad.array() = float(beta) * src;
        c.padded_frames = std::move(pad);
    }
    c.content_token = token;
    return c;
}

// c_src = the original first frame with zero padding.
inline Condition build_source_condition(const FrameSequence& x_src, int token) {
    const auto& s = x_src.shape();
    Condition c;
    c.first_frame = x_src.frames.frame(0);
    if (s.l > 1) c.padded_frames = Tensor4f::zeros(Shape4{s.l - 1, s.c, s.h, s.w});
    c.content_token = token;
    return c;
}

}  // namespace flowrect

#endif
