#ifndef FLOWRECT_CONDITION_HPP
#define FLOWRECT_CONDITION_HPP

#include "flowrect/tensor.hpp"

namespace flowrect {

// First-frame conditioning for the flow model. When uncond is set the model
// ignores every field here (the whole condition is dropped).
struct Condition {
    Tensor4f first_frame;    // [1,C,H,W]
    Tensor4f padded_frames;  // [L-1,C,H,W]; empty when L == 1
    int content_token = 0;
    bool uncond = false;

    static Condition unconditional() {
        Condition c;
        c.uncond = true;
        return c;
    }

    Condition as_uncond() const {
        Condition c = *this;
        c.uncond = true;
        return c;
    }

    bool has_padding() const { return padded_frames.size() > 0; }

    // Frame count this condition is meant for.
    std::int64_t length() const {
        return 1 + (has_padding() ? padded_frames.shape().l : 0);
    }

    void validate() const {
        if (uncond) return;
        if (first_frame.size() == 0) throw ShapeError("Condition: missing first frame");
        if (first_frame.shape().l != 1) throw ShapeError("Condition: first_frame must be [1,C,H,W]");
        if (has_padding()) {
            const auto& f = first_frame.shape();
            const auto& p = padded_frames.shape();
            if (p.c != f.c || p.h != f.h || p.w != f.w)
                throw ShapeError("Condition: padded_frames " + p.str() +
                                 " does not match first_frame " + f.str());
        }
    }

    // Dense [L,C,H,W] stack: first frame followed by the padded frames.
    Tensor4f as_video() const {
        validate();
        const auto& f = first_frame.shape();
        const std::int64_t l = length();
        Tensor4f out(Shape4{l, f.c, f.h, f.w});
        std::memcpy(out.data(), first_frame.data(), sizeof(float) * first_frame.size());
        if (has_padding())
            std::memcpy(out.data() + first_frame.size(), padded_frames.data(),
                        sizeof(float) * padded_frames.size());
        return out;
    }
};

inline bool condition_equal(const Condition& a, const Condition& b) {
    if (a.uncond != b.uncond) return false;
    if (a.uncond) return true;
    if (a.content_token != b.content_token) return false;
    if (!(a.first_frame.shape() == b.first_frame.shape())) return false;
    if (!(a.first_frame.array() == b.first_frame.array()).all()) return false;
    if (a.has_padding() != b.has_padding()) return false;
    if (a.has_padding() && !(a.padded_frames.array() == b.padded_frames.array()).all())
        return false;
    return true;
}

}  // namespace flowrect

#endif
