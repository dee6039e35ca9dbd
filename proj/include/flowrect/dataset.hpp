#ifndef FLOWRECT_DATASET_HPP
#define FLOWRECT_DATASET_HPP

#include <array>
#include <string>

#include "flowrect/condition.hpp"
#include "flowrect/random.hpp"
#include "flowrect/tensor.hpp"

namespace flowrect {

enum class MotionFamily { translate, bounce, rotate_hue };
enum class ShapeFamily { square, disc };

inline std::string to_string(MotionFamily m) {
    switch (m) {
        case MotionFamily::translate: return "translate";
        case MotionFamily::bounce: return "bounce";
        case MotionFamily::rotate_hue: return "rotate-hue";
    }
    return "?";
}
inline std::string to_string(ShapeFamily s) {
    return s == ShapeFamily::square ? "square" : "disc";
}

inline MotionFamily motion_from_string(const std::string& s) {
    if (s == "translate") return MotionFamily::translate;
    if (s == "bounce") return MotionFamily::bounce;
    if (s == "rotate-hue") return MotionFamily::rotate_hue;
    throw DomainError("unknown motion family '" + s + "'");
}
inline ShapeFamily shape_from_string(const std::string& s) {
    if (s == "square") return ShapeFamily::square;
    if (s == "disc") return ShapeFamily::disc;
    throw DomainError("unknown shape family '" + s + "'");
}

// Deterministic synthetic clips with exact ground-truth optical flow.
struct SyntheticDatasetSpec {
    MotionFamily motion = MotionFamily::translate;
    ShapeFamily shape = ShapeFamily::square;
    int size = 16;  // square frames, H = W
    int frames = 8;
    int channels = 3;
    int num_classes = 6;
    int num_clips = 16;
    std::uint64_t seed = 0;

    void validate() const {
        if (size < 8) throw DomainError("dataset: size must be >= 8");
        if (frames < 1) throw DomainError("dataset: frames must be >= 1");
        if (channels != 1 && channels != 3) throw DomainError("dataset: channels must be 1 or 3");
        if (num_classes < 2) throw DomainError("dataset: need at least 2 classes");
        if (num_clips < 1) throw DomainError("dataset: need at least 1 clip");
    }
};

// Class color map: evenly spaced hues, fixed saturation/value, in [-1,1].
inline std::array<float, 3> class_color(const SyntheticDatasetSpec& spec, int token) {
    const double hue = 360.0 * token / spec.num_classes;
    const double c = 0.9, x = c * (1.0 - std::abs(std::fmod(hue / 60.0, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    if (hue < 60) r = c, g = x;
    else if (hue < 120) r = x, g = c;
    else if (hue < 180) g = c, b = x;
    else if (hue < 240) g = x, b = c;
    else if (hue < 300) r = x, b = c;
    else r = c, b = x;
    // lift into [-1,1] with a bright floor so shapes stand out on the texture
    auto lift = [](double v) { return static_cast<float>(2.0 * (0.1 + 0.85 * v) - 1.0); };
    return {lift(r), lift(g), lift(b)};
}

inline float class_gray(const SyntheticDatasetSpec& spec, int token) {
    return -0.2f + 1.1f * static_cast<float>(token) / static_cast<float>(spec.num_classes);
}

struct ClipSample {
    FrameSequence clip;
    Tensor4f gt_flow;  // [L-1, 2, H, W]; channel 0 horizontal, 1 vertical
    int token = 0;
    int edit_token = 0;
    Tensor4f edited_first;  // frame 1 re-rendered with the edit token's color
    MotionFamily motion = MotionFamily::translate;
    std::int64_t velocity_x = 0, velocity_y = 0;
};

namespace detail {

// Smooth low-frequency texture shared by all channels; range about [-0.8,0.2].
inline Tensor4f background_texture(int size, int channels, Rng& rng) {
    Tensor4f bg(Shape4{1, channels, size, size});
    struct Wave {
        double fx, fy, phase, amp;
    };
    Wave waves[3];
    for (auto& w : waves) {
        w.fx = double(rng.uniform_int(1, 3));
        w.fy = double(rng.uniform_int(1, 3));
        w.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        w.amp = 0.16;
    }
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            double v = -0.3;
            for (auto& w : waves)
                v += w.amp * std::sin(2.0 * std::numbers::pi * (w.fx * x + w.fy * y) / size + w.phase);
            for (int c = 0; c < channels; ++c) bg.at(0, c, y, x) = static_cast<float>(v);
        }
    }
    return bg;
}

inline bool inside_shape(ShapeFamily fam, int size, std::int64_t cx, std::int64_t cy,
                         std::int64_t x, std::int64_t y) {
    const std::int64_t half = size / 6;  // square half-side / disc radius
    const std::int64_t dx = x - cx, dy = y - cy;
    if (fam == ShapeFamily::square) return std::abs(dx) <= half && std::abs(dy) <= half;
    return dx * dx + dy * dy <= half * half;
}

inline void draw_shape(Tensor4f& frame, std::int64_t l, ShapeFamily fam, std::int64_t cx,
                       std::int64_t cy, const std::array<float, 3>& color, bool toroidal) {
    const auto& s = frame.shape();
    for (std::int64_t y = 0; y < s.h; ++y) {
        for (std::int64_t x = 0; x < s.w; ++x) {
            std::int64_t ex = x, ey = y;
            if (toroidal) {
                // compare against the nearest toroidal copy of the center
                std::int64_t ddx = ((x - cx) % s.w + s.w + s.w / 2) % s.w - s.w / 2;
                std::int64_t ddy = ((y - cy) % s.h + s.h + s.h / 2) % s.h - s.h / 2;
                ex = cx + ddx;
                ey = cy + ddy;
            }
            if (!inside_shape(fam, int(s.w), cx, cy, ex, ey)) continue;
            for (std::int64_t c = 0; c < s.c; ++c) frame.at(l, c, y, x) = color[std::size_t(c)];
        }
    }
}

}  // namespace detail

// Deterministic function of (spec, index); the same index always yields the
// same clip, flow, and edited frame.
inline ClipSample make_clip(const SyntheticDatasetSpec& spec, std::int64_t index) {
    spec.validate();
    Rng rng(splitmix64(stream_seed(spec.seed, "data/clip") + std::uint64_t(index)));
    const int n = spec.size, l = spec.frames, ch = spec.channels;

    ClipSample out;
    out.motion = spec.motion;
    out.token = int(rng.uniform_int(std::uint64_t(spec.num_classes)));
    out.edit_token =
        int((out.token + 1 + rng.uniform_int(std::uint64_t(spec.num_classes - 1))) % spec.num_classes);

    auto color_of = [&](int token) -> std::array<float, 3> {
        if (ch == 3) return class_color(spec, token);
        const float g = class_gray(spec, token);
        return {g, g, g};
    };

    Tensor4f bg = detail::background_texture(n, ch, rng);
    Tensor4f frames(Shape4{l, ch, n, n});
    Tensor4f flow = (l > 1) ? Tensor4f(Shape4{l - 1, 2, n, n}) : Tensor4f();

    std::int64_t vx = 0, vy = 0;
    if (spec.motion != MotionFamily::rotate_hue) {
        do {
            vx = rng.uniform_int(-2, 2);
            vy = rng.uniform_int(-2, 2);
        } while (vx == 0 && vy == 0);
    }
    out.velocity_x = vx;
    out.velocity_y = vy;

    const std::int64_t margin = n / 6 + 2;
    std::int64_t cx = rng.uniform_int(margin, n - 1 - margin);
    std::int64_t cy = rng.uniform_int(margin, n - 1 - margin);
    const std::int64_t cx0 = cx, cy0 = cy;

    if (spec.motion == MotionFamily::translate) {
        // whole frame rolls toroidally; flow is the constant velocity
        Tensor4f base(Shape4{1, ch, n, n});
        base.array() = bg.array();
        detail::draw_shape(base, 0, spec.shape, cx, cy, color_of(out.token), true);
        for (std::int64_t f = 0; f < l; ++f) {
            const std::int64_t sx = (f * vx) % n, sy = (f * vy) % n;
            for (std::int64_t c = 0; c < ch; ++c)
                for (std::int64_t y = 0; y < n; ++y)
                    for (std::int64_t x = 0; x < n; ++x)
                        frames.at(f, c, y, x) =
                            base.at(0, c, ((y - sy) % n + n) % n, ((x - sx) % n + n) % n);
        }
        for (std::int64_t f = 0; f + 1 < l; ++f) {
            flow.plane(f, 0).setConstant(float(vx));
            flow.plane(f, 1).setConstant(float(vy));
        }
    } else if (spec.motion == MotionFamily::bounce) {
        std::vector<std::int64_t> xs(l), ys(l);
        std::int64_t dx = vx, dy = vy;
        for (std::int64_t f = 0; f < l; ++f) {
            xs[f] = cx;
            ys[f] = cy;
            if (cx + dx < margin || cx + dx > n - 1 - margin) dx = -dx;
            if (cy + dy < margin || cy + dy > n - 1 - margin) dy = -dy;
            cx += dx;
            cy += dy;
        }
        for (std::int64_t f = 0; f < l; ++f) {
            for (std::int64_t c = 0; c < ch; ++c) frames.plane(f, c) = bg.plane(0, c);
            detail::draw_shape(frames, f, spec.shape, xs[f], ys[f], color_of(out.token), false);
        }
        for (std::int64_t f = 0; f + 1 < l; ++f) {
            flow.plane(f, 0).setZero();
            flow.plane(f, 1).setZero();
            const std::int64_t mx = xs[f + 1] - xs[f], my = ys[f + 1] - ys[f];
            for (std::int64_t y = 0; y < n; ++y)
                for (std::int64_t x = 0; x < n; ++x)
                    if (detail::inside_shape(spec.shape, n, xs[f + 1], ys[f + 1], x, y)) {
                        flow.at(f, 0, y, x) = float(mx);
                        flow.at(f, 1, y, x) = float(my);
                    }
        }
    } else {  // rotate_hue: static geometry, class color cycles per frame
        for (std::int64_t f = 0; f < l; ++f) {
            for (std::int64_t c = 0; c < ch; ++c) frames.plane(f, c) = bg.plane(0, c);
            detail::draw_shape(frames, f, spec.shape, cx0, cy0,
                               color_of(int((out.token + f) % spec.num_classes)), false);
        }
        if (l > 1) flow.array().setZero();
    }

    Tensor4f edited(Shape4{1, ch, n, n});
    for (std::int64_t c = 0; c < ch; ++c) edited.plane(0, c) = frames.plane(0, c);
    // recolor only; geometry identical to frame 1
    detail::draw_shape(edited, 0, spec.shape, cx0, cy0, color_of(out.edit_token),
                       spec.motion == MotionFamily::translate);

    out.clip = FrameSequence(std::move(frames));
    out.gt_flow = std::move(flow);
    out.edited_first = std::move(edited);
    return out;
}

// Training view: clip plus its condition (first frame, zero padding, token).
inline std::pair<FrameSequence, Condition> sample_training_pair(const SyntheticDatasetSpec& spec,
                                                                Rng& rng) {
    const std::int64_t idx = std::int64_t(rng.uniform_int(std::uint64_t(spec.num_clips)));
    ClipSample s = make_clip(spec, idx);
    Condition c;
    c.first_frame = s.clip.frames.frame(0);
    if (spec.frames > 1)
        c.padded_frames = Tensor4f::zeros(
            Shape4{spec.frames - 1, spec.channels, spec.size, spec.size});
    c.content_token = s.token;
    return {std::move(s.clip), std::move(c)};
}

}  // namespace flowrect

#endif
