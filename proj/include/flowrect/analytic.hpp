#ifndef FLOWRECT_ANALYTIC_HPP
#define FLOWRECT_ANALYTIC_HPP

#include "flowrect/tensor.hpp"

namespace flowrect {

// Closed-form conditional flow oracle: data x0 ~ N(mean, sigma2 * I),
// noise eps ~ N(0, I), interpolation z_t = (1-t) x0 + t eps.
template <typename Scalar>
struct AnalyticGaussianSpec {
    Tensor4<Scalar> mean;
    Scalar sigma2 = Scalar(1);

    AnalyticGaussianSpec(Tensor4<Scalar> mu, Scalar s2) : mean(std::move(mu)), sigma2(s2) {
        if (!(sigma2 > Scalar(0))) throw DomainError("AnalyticGaussianSpec: sigma2 must be > 0");
    }
    static AnalyticGaussianSpec broadcast(Shape4 shape, Scalar mu, Scalar s2) {
        return AnalyticGaussianSpec(Tensor4<Scalar>::constant(shape, mu), s2);
    }
};

// v(z,t) = (z - E[x0|z_t]) / t with the Gaussian posterior mean
//   E[x0|z] = (mu/s2 + (1-t) z / t^2) / (1/s2 + (1-t)^2 / t^2).
// Singular at t = 0; callers never evaluate there.
template <typename Scalar>
Tensor4<Scalar> analytic_gaussian_field(const AnalyticGaussianSpec<Scalar>& spec,
                                        const Tensor4<Scalar>& z, double t) {
    if (!(t > 0.0) || t > 1.0)
        throw DomainError("analytic_gaussian_field: t must be in (0,1], got " + std::to_string(t));
    require_same_shape(spec.mean, z, "analytic_gaussian_field");
    const Scalar tt = Scalar(t);
    const Scalar one_minus_t = Scalar(1) - tt;
    const Scalar prior_precision = Scalar(1) / spec.sigma2;
    const Scalar like_precision = one_minus_t * one_minus_t / (tt * tt);
    const Scalar denom = prior_precision + like_precision;
    Tensor4<Scalar> v(z.shape());
    // posterior mean, then (z - mean)/t, elementwise
    v.array() = (spec.mean.array() * prior_precision + z.array() * (one_minus_t / (tt * tt))) / denom;
    v.array() = (z.array() - v.array()) / tt;
    return v;
}

// sigma2 -> 0 limit: all mass at one point a, field (z - a)/t.
template <typename Scalar>
Tensor4<Scalar> analytic_delta_field(const Tensor4<Scalar>& a, const Tensor4<Scalar>& z, double t) {
    if (!(t > 0.0) || t > 1.0)
        throw DomainError("analytic_delta_field: t must be in (0,1], got " + std::to_string(t));
    require_same_shape(a, z, "analytic_delta_field");
    Tensor4<Scalar> v(z.shape());
    v.array() = (z.array() - a.array()) / Scalar(t);
    return v;
}

// v_gt = eps - x0, the exact field along the sample's interpolation path.
template <typename Scalar>
Tensor4<Scalar> ground_truth_vector(const Tensor4<Scalar>& x0, const Tensor4<Scalar>& eps) {
    require_same_shape(x0, eps, "ground_truth_vector");
    Tensor4<Scalar> v(x0.shape());
    v.array() = eps.array() - x0.array();
    return v;
}

}  // namespace flowrect

#endif
