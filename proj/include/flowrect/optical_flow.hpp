#ifndef FLOWRECT_OPTICAL_FLOW_HPP
#define FLOWRECT_OPTICAL_FLOW_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <vector>

#include "flowrect/tensor.hpp"

namespace flowrect {

// Dense per-frame-pair displacement field. Entry i maps frame i+1 coordinates
// back to frame i: frame_{i+1}(p) ~ frame_i(p - flow_i(p)). Channel 0 is the
// horizontal displacement, channel 1 the vertical one, in pixels.
struct FlowField {
    Tensor4f flow;  // [L-1, 2, H, W]

    std::int64_t pairs() const { return flow.size() ? flow.shape().l : 0; }

    void validate(std::int64_t h, std::int64_t w) const {
        if (!flow.all_finite()) throw NumericError("FlowField: non-finite displacement");
        const float cap = float(std::max(h, w));
        if (flow.array().abs().maxCoeff() > cap)
            throw DomainError("FlowField: displacement exceeds frame size");
    }

    static FlowField zero(std::int64_t pairs, std::int64_t h, std::int64_t w) {
        FlowField f;
        if (pairs > 0) f.flow = Tensor4f::zeros(Shape4{pairs, 2, h, w});
        return f;
    }
};

namespace detail {

using Plane = Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Plane grayscale(const Tensor4f& frames, std::int64_t l) {
    const auto& s = frames.shape();
    Plane out = Plane::Zero(s.h, s.w);
    for (std::int64_t c = 0; c < s.c; ++c) out += frames.plane(l, c);
    return out / float(s.c);
}

inline Plane downsample_half(const Plane& p) {
    const auto h = p.rows(), w = p.cols();
    const auto h2 = std::max<Eigen::Index>(1, h / 2), w2 = std::max<Eigen::Index>(1, w / 2);
    Plane out(h2, w2);
    for (Eigen::Index y = 0; y < h2; ++y) {
        for (Eigen::Index x = 0; x < w2; ++x) {
            const Eigen::Index y0 = std::min(2 * y, h - 1), y1 = std::min(2 * y + 1, h - 1);
            const Eigen::Index x0 = std::min(2 * x, w - 1), x1 = std::min(2 * x + 1, w - 1);
            out(y, x) = 0.25f * (p(y0, x0) + p(y0, x1) + p(y1, x0) + p(y1, x1));
        }
    }
    return out;
}

inline float sample_clamped(const Plane& p, std::int64_t y, std::int64_t x) {
    y = std::clamp<std::int64_t>(y, 0, p.rows() - 1);
    x = std::clamp<std::int64_t>(x, 0, p.cols() - 1);
    return p(y, x);
}

// One block-matching pass: for every block of `prev`/`next`, search the
// displacement around the initial guess that minimizes the sum of absolute
// differences. Cost ties break on total displacement magnitude, then on
// lexicographic (dy, dx). Flow is stored densely, constant within blocks.
inline void block_match_level(const Plane& prev, const Plane& next, Plane& fx, Plane& fy,
                              int block, int radius) {
    const auto h = next.rows(), w = next.cols();
    for (Eigen::Index by = 0; by < h; by += block) {
        for (Eigen::Index bx = 0; bx < w; bx += block) {
            const Eigen::Index y0 = by, y1 = std::min<Eigen::Index>(by + block, h);
            const Eigen::Index x0 = bx, x1 = std::min<Eigen::Index>(bx + block, w);

            // initial guess: upsampled coarse flow at the block center, rounded
            const Eigen::Index cy = (y0 + y1 - 1) / 2, cx = (x0 + x1 - 1) / 2;
            const std::int64_t init_dx = std::llround(fx(cy, cx));
            const std::int64_t init_dy = std::llround(fy(cy, cx));

            double best_cost = std::numeric_limits<double>::infinity();
            std::int64_t best_dx = init_dx, best_dy = init_dy;
            std::int64_t best_mag = std::numeric_limits<std::int64_t>::max();
            for (std::int64_t ddy = -radius; ddy <= radius; ++ddy) {
                for (std::int64_t ddx = -radius; ddx <= radius; ++ddx) {
                    const std::int64_t dy = init_dy + ddy, dx = init_dx + ddx;
                    double cost = 0.0;
                    for (Eigen::Index y = y0; y < y1; ++y)
                        for (Eigen::Index x = x0; x < x1; ++x)
                            cost += std::abs(double(next(y, x)) -
                                             double(sample_clamped(prev, y - dy, x - dx)));
                    const std::int64_t mag = dx * dx + dy * dy;
                    const bool better =
                        cost < best_cost ||
                        (cost == best_cost &&
                         (mag < best_mag ||
                          (mag == best_mag &&
                           (dy < best_dy || (dy == best_dy && dx < best_dx)))));
                    if (better) {
                        best_cost = cost;
                        best_dx = dx;
                        best_dy = dy;
                        best_mag = mag;
                    }
                }
            }
            for (Eigen::Index y = y0; y < y1; ++y)
                for (Eigen::Index x = x0; x < x1; ++x) {
                    fx(y, x) = float(best_dx);
                    fy(y, x) = float(best_dy);
                }
        }
    }
}

inline Plane upsample_double(const Plane& p, Eigen::Index h, Eigen::Index w) {
    Plane out(h, w);
    for (Eigen::Index y = 0; y < h; ++y)
        for (Eigen::Index x = 0; x < w; ++x)
            out(y, x) = 2.0f * p(std::min(y / 2, p.rows() - 1), std::min(x / 2, p.cols() - 1));
    return out;
}

}  // namespace detail

constexpr int kFlowPyramidLevels = 3;
constexpr int kFlowBlockSize = 8;
constexpr int kFlowSearchRadius = 4;

// Coarse-to-fine block matching over a 3-level pyramid (block 8, radius 4
// per level, SAD cost). Deterministic; designed for the synthetic clips.
inline FlowField estimate_flow(const FrameSequence& seq) {
    const auto& s = seq.shape();
    if (s.l < 2) throw DomainError("estimate_flow: need at least 2 frames");

    // grayscale pyramids per frame
    std::vector<std::vector<detail::Plane>> pyr(s.l);
    for (std::int64_t l = 0; l < s.l; ++l) {
        pyr[l].resize(kFlowPyramidLevels);
        pyr[l][0] = detail::grayscale(seq.frames, l);
        for (int lev = 1; lev < kFlowPyramidLevels; ++lev)
            pyr[l][lev] = detail::downsample_half(pyr[l][lev - 1]);
    }

    FlowField field = FlowField::zero(s.l - 1, s.h, s.w);
    for (std::int64_t i = 0; i + 1 < s.l; ++i) {
        detail::Plane fx, fy;
        for (int lev = kFlowPyramidLevels - 1; lev >= 0; --lev) {
            const auto& prev = pyr[i][lev];
            const auto& next = pyr[i + 1][lev];
            if (lev == kFlowPyramidLevels - 1) {
                fx = detail::Plane::Zero(next.rows(), next.cols());
                fy = detail::Plane::Zero(next.rows(), next.cols());
            } else {
                fx = detail::upsample_double(fx, next.rows(), next.cols());
                fy = detail::upsample_double(fy, next.rows(), next.cols());
            }
            detail::block_match_level(prev, next, fx, fy, kFlowBlockSize, kFlowSearchRadius);
        }
        field.flow.plane(i, 0) = fx;
        field.flow.plane(i, 1) = fy;
    }
    field.validate(s.h, s.w);
    return field;
}

// One PGM per frame pair; magnitudes scaled to [0,255] by the per-pair peak.
inline void export_flow_magnitude(const FlowField& field, const std::filesystem::path& dir,
                                  const std::string& stem = "flowmag") {
    const auto& s = field.flow.shape();
    std::filesystem::create_directories(dir);
    for (std::int64_t p = 0; p < field.pairs(); ++p) {
        detail::Plane mag =
            (field.flow.plane(p, 0).square() + field.flow.plane(p, 1).square()).sqrt();
        const float peak = mag.maxCoeff();
        char name[64];
        std::snprintf(name, sizeof(name), "%s_%03lld.pgm", stem.c_str(), static_cast<long long>(p));
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw IoError("cannot open for writing: " + (dir / name).string());
        out << "P5\n" << s.w << " " << s.h << "\n255\n";
        for (std::int64_t y = 0; y < s.h; ++y)
            for (std::int64_t x = 0; x < s.w; ++x) {
                const float v = peak > 0.f ? mag(y, x) / peak : 0.f;
                out.put(static_cast<char>(std::lround(255.0f * v)));
            }
    }
}

// Backward bilinear warp of one [1,C,H,W] frame by a [1,2,H,W] flow:
// out(p) = bilinear sample of frame at p - flow(p), clamped to the edges.
// Zero flow reproduces the input bit-exactly.
template <typename S>
Tensor4<S> warp_bilinear(const Tensor4<S>& frame, const Tensor4f& flow) {
    const auto& fs = frame.shape();
    const auto& ws = flow.shape();
    if (ws.c != 2 || ws.h != fs.h || ws.w != fs.w || ws.l != 1 || fs.l != 1)
        throw ShapeError("warp_bilinear: frame " + fs.str() + " vs flow " + ws.str());
    Tensor4<S> out(fs);
    for (std::int64_t y = 0; y < fs.h; ++y) {
        for (std::int64_t x = 0; x < fs.w; ++x) {
            double sx = double(x) - double(flow.at(0, 0, y, x));
            double sy = double(y) - double(flow.at(0, 1, y, x));
            sx = std::clamp(sx, 0.0, double(fs.w - 1));
            sy = std::clamp(sy, 0.0, double(fs.h - 1));
            const std::int64_t x0 = std::int64_t(sx), y0 = std::int64_t(sy);
            const std::int64_t x1 = std::min(x0 + 1, fs.w - 1), y1 = std::min(y0 + 1, fs.h - 1);
            const S wx = S(sx - double(x0)), wy = S(sy - double(y0));
            for (std::int64_t c = 0; c < fs.c; ++c) {
                const S p00 = frame.at(0, c, y0, x0), p01 = frame.at(0, c, y0, x1);
                const S p10 = frame.at(0, c, y1, x0), p11 = frame.at(0, c, y1, x1);
                out.at(0, c, y, x) = (S(1) - wy) * ((S(1) - wx) * p00 + wx * p01) +
                                     wy * ((S(1) - wx) * p10 + wx * p11);
            }
        }
    }
    return out;
}

// Noise variant: displacement rounded half-away-from-zero, nearest-neighbor
// copy with edge clamp. Every output element is a single input element, so
// per-pixel N(0,1) marginals survive exactly.
template <typename S>
Tensor4<S> warp_noise(const Tensor4<S>& noise, const Tensor4f& flow) {
    const auto& fs = noise.shape();
    const auto& ws = flow.shape();
    if (ws.c != 2 || ws.h != fs.h || ws.w != fs.w || ws.l != 1 || fs.l != 1)
        throw ShapeError("warp_noise: noise " + fs.str() + " vs flow " + ws.str());
    Tensor4<S> out(fs);
    for (std::int64_t y = 0; y < fs.h; ++y) {
        for (std::int64_t x = 0; x < fs.w; ++x) {
            const std::int64_t dx = std::llround(double(flow.at(0, 0, y, x)));
            const std::int64_t dy = std::llround(double(flow.at(0, 1, y, x)));
            const std::int64_t sx = std::clamp<std::int64_t>(x - dx, 0, fs.w - 1);
            const std::int64_t sy = std::clamp<std::int64_t>(y - dy, 0, fs.h - 1);
            for (std::int64_t c = 0; c < fs.c; ++c) out.at(0, c, y, x) = noise.at(0, c, sy, sx);
        }
    }
    return out;
}

}  // namespace flowrect

#endif
