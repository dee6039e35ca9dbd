#ifndef FLOWRECT_MODEL_HPP
#define FLOWRECT_MODEL_HPP

#include "flowrect/condition.hpp"
#include "flowrect/toy_net.hpp"

namespace flowrect {

enum class Branch { source, target };

// One model evaluation, tagged with where it came from.
template <typename S = float>
struct VectorFieldEval {
    Tensor4<S> v;
    double t = 0.0;
    Branch branch = Branch::target;

    void validate() const {
        if (!v.all_finite()) throw NumericError("VectorFieldEval: non-finite field");
    }
};

// Trained conditional flow model; evaluation is a pure function of
// (parameters, inputs).
template <typename S = float>
struct ToyModel {
    ToyNet<S> net;

    explicit ToyModel(ToyNet<S> n) : net(std::move(n)) {}
    explicit ToyModel(ToyNetDescriptor d = {}) : net(d) {}

    const ToyNetDescriptor& descriptor() const { return net.desc; }

    Tensor4<S> evaluate(const Tensor4<S>& z, double t, const Condition& c) const {
        if (!(t > 0.0) || t > 1.0)
            throw DomainError("evaluate: t must be in (0,1], got " + std::to_string(t));
        if (!z.all_finite()) throw NumericError("evaluate: non-finite latent input");
        if (c.uncond)
            return toy_net_forward<S>(net, z, t, nullptr, 0, true, nullptr);
        c.validate();
        const Tensor4<S> cond_video = [&] {
            if constexpr (std::is_same_v<S, float>)
                return c.as_video();
            else
                return c.as_video().template cast<S>();
        }();
        return toy_net_forward<S>(net, z, t, &cond_video, c.content_token, false, nullptr);
    }
};

template <typename S>
struct CfgResult {
    Tensor4<S> v;
    int evals = 0;  // model evaluations spent
};

// Classifier-free guidance: v_u + s (v_c - v_u). The degenerate scales skip
// the unused branch entirely, so s=1 is bit-identical to a conditional call.
template <typename Model, typename S>
CfgResult<S> cfg_evaluate(const Model& model, const Tensor4<S>& z, double t, const Condition& c,
                          double guidance_scale) {
    if (guidance_scale < 0.0)
        throw DomainError("cfg_evaluate: guidance scale must be >= 0");
    if (guidance_scale == 1.0) return {model.evaluate(z, t, c), 1};
    if (guidance_scale == 0.0) return {model.evaluate(z, t, c.as_uncond()), 1};
    Tensor4<S> v_c = model.evaluate(z, t, c);
    Tensor4<S> v_u = model.evaluate(z, t, c.as_uncond());
    Tensor4<S> v(z.shape());
    v.array() = v_u.array() + S(guidance_scale) * (v_c.array() - v_u.array());
    return {std::move(v), 2};
}

}  // namespace flowrect

#endif
