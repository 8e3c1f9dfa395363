#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lexgraph/error.hpp"

namespace lexgraph {

// Working-precision embedding. Occurrence embeddings are stored as f32 in the
// corpus; everything derived from them (means, queries, context embedding)
// lives in double.
using Vector = std::vector<double>;

namespace detail {

inline void require_same_dim(std::size_t a, std::size_t b) {
    if (a != b) {
        throw InvalidArgument("dimension mismatch: " + std::to_string(a) + " vs " +
                              std::to_string(b));
    }
}

}  // namespace detail

// Four independent partial sums; the summation order is fixed, so results are
// reproducible run to run.
template <std::floating_point A, std::floating_point B>
[[nodiscard]] inline double dot(std::span<const A> a, std::span<const B> b) {
    detail::require_same_dim(a.size(), b.size());
    const std::size_t n = a.size();
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += static_cast<double>(a[i]) * static_cast<double>(b[i]);
        s1 += static_cast<double>(a[i + 1]) * static_cast<double>(b[i + 1]);
        s2 += static_cast<double>(a[i + 2]) * static_cast<double>(b[i + 2]);
        s3 += static_cast<double>(a[i + 3]) * static_cast<double>(b[i + 3]);
    }
    for (; i < n; ++i) s0 += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return (s0 + s1) + (s2 + s3);
}

template <std::floating_point A>
[[nodiscard]] inline double l2_norm(std::span<const A> a) {
    return std::sqrt(dot(a, a));
}

[[nodiscard]] inline double l2_norm(const Vector& a) { return l2_norm(std::span<const double>(a)); }

// Cosine from a precomputed dot product and norms, clamped against rounding
// overshoot.
[[nodiscard]] inline double cosine_from_parts(double dot_ab, double norm_a, double norm_b) {
    return std::clamp(dot_ab / (norm_a * norm_b), -1.0, 1.0);
}

template <std::floating_point A, std::floating_point B>
[[nodiscard]] inline double cosine_similarity(std::span<const A> a, std::span<const B> b) {
    detail::require_same_dim(a.size(), b.size());
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) throw InvalidArgument("cosine similarity of a zero vector");
    return cosine_from_parts(dot(a, b), na, nb);
}

[[nodiscard]] inline double cosine_similarity(const Vector& a, const Vector& b) {
    return cosine_similarity(std::span<const double>(a), std::span<const double>(b));
}

// weight * a + (1 - weight) * b, component-wise.
[[nodiscard]] inline Vector blend(const Vector& a, const Vector& b, double weight) {
    detail::require_same_dim(a.size(), b.size());
    Vector out(a.size());
    const double rest = 1.0 - weight;
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = weight * a[i] + rest * b[i];
    return out;
}

inline void add_into(Vector& acc, std::span<const float> v) {
    detail::require_same_dim(acc.size(), v.size());
    for (std::size_t i = 0; i < v.size(); ++i) acc[i] += static_cast<double>(v[i]);
}

inline void add_into(Vector& acc, const Vector& v) {
    detail::require_same_dim(acc.size(), v.size());
    for (std::size_t i = 0; i < v.size(); ++i) acc[i] += v[i];
}

inline void scale(Vector& v, double factor) {
    for (double& x : v) x *= factor;
}

[[nodiscard]] inline bool all_finite(std::span<const float> v) {
    return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
}

}  // namespace lexgraph
