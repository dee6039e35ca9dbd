#ifndef FLOWRECT_DCACHE_HPP
#define FLOWRECT_DCACHE_HPP

#include <limits>
#include <string>

#include "flowrect/tensor.hpp"

namespace flowrect {

// Default threshold for the mean-normalized L1 variation at this scale,
// fixed once from recorded traces: it sits above the tail-step variation and
// below the early-step terms, so the first sampling steps always refresh.
constexpr double kDefaultCacheDelta = 0.35;

// Cache threshold configuration; delta may be +infinity.
struct CacheSetting {
    bool enabled = true;
    double delta = kDefaultCacheDelta;

    static CacheSetting off() { return {false, 0.0}; }
    static CacheSetting infinite() { return {true, std::numeric_limits<double>::infinity()}; }
    static CacheSetting with_delta(double d) {
        if (d < 0.0) throw DomainError("cache delta must be >= 0");
        return {true, d};
    }
    // accepts "off", "inf", or a non-negative real
    static CacheSetting parse(const std::string& s) {
        if (s == "off") return off();
        if (s == "inf") return infinite();
        try {
            std::size_t pos = 0;
            const double d = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument(s);
            return with_delta(d);
        } catch (const DomainError&) {
            throw;
        } catch (const std::exception&) {
            throw DomainError("cache delta: expected off|inf|<real>, got '" + s + "'");
        }
    }
    std::string str() const {
        if (!enabled) return "off";
        if (std::isinf(delta)) return "inf";
        return std::to_string(delta);
    }
};

// Per-run cache of the source-branch prediction. d_cum accumulates the
// mean-normalized L1 variation of the target vector since the last fresh
// source evaluation at t_p; it resets to zero on every refresh.
template <typename S = float>
struct CacheState {
    double t_p = 0.0;
    Tensor4<S> cached_v_src;
    Tensor4<S> prev_v_tar;
    double d_cum = 0.0;
    int hits = 0;
    int misses = 0;
    bool has_cache = false;

    int steps_elapsed() const { return hits + misses; }
};

// One variation term: the L1 difference normalized by element count, so the
// threshold is resolution-independent.
template <typename S>
double variation_term(const Tensor4<S>& v_tar_now, const Tensor4<S>& v_tar_prev) {
    require_same_shape(v_tar_now, v_tar_prev, "variation_term");
    return mean_abs_diff(v_tar_now, v_tar_prev);
}

template <typename S>
void accumulate(CacheState<S>& state, const Tensor4<S>& v_tar_now, const Tensor4<S>& v_tar_prev) {
    state.d_cum += variation_term(v_tar_now, v_tar_prev);
}

// Reuse while the accumulated variation stays under the threshold. The first
// step has nothing cached and always refreshes.
template <typename S>
bool decide_reuse(const CacheState<S>& state, const CacheSetting& cache) {
    return cache.enabled && state.has_cache && state.d_cum <= cache.delta;
}

template <typename S>
void commit_refresh(CacheState<S>& state, double t, Tensor4<S> v_src) {
    state.cached_v_src = std::move(v_src);
    state.t_p = t;
    state.d_cum = 0.0;
    state.misses++;
    state.has_cache = true;
}

template <typename S>
void commit_hit(CacheState<S>& state) {
    state.hits++;
}

struct CacheReport {
    int steps = 0;
    int src_evals = 0;
    int hits = 0;
    double hit_rate = 0.0;       // hits / steps
    double reduction_pct = 0.0;  // source-eval reduction vs cache-disabled run
};

inline CacheReport make_cache_report(int steps, int src_evals) {
    CacheReport r;
    r.steps = steps;
    r.src_evals = src_evals;
    r.hits = steps - src_evals;
    r.hit_rate = steps > 0 ? double(r.hits) / steps : 0.0;
    r.reduction_pct = steps > 0 ? 100.0 * double(steps - src_evals) / steps : 0.0;
    return r;
}

}  // namespace flowrect

#endif
