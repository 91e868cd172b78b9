/**
 * Copyright (c) 2026 The mcx authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mcx/error.hpp"
#include "mcx/model.hpp"
#include "mcx/rng.hpp"

namespace mcx {

// ---------------------------------------------------------------------------
// Hash families
// ---------------------------------------------------------------------------

/// p-stable projection hash for l_p spaces: bucket = floor((a.q + b) / w).
/// With standard-normal entries in `a` this is the classic l_2 family.
struct PStableHash {
    std::vector<double> a; // projection vector, one entry per dimension
    double b = 0.0;        // uniform offset in [0, w)
    double w = 1.0;        // bucket width

    std::int64_t bucket(std::span<const float> point) const {
        if (point.size() != a.size()) {
            throw ContractError("point dimensionality " + std::to_string(point.size()) +
                                " != hash dimensionality " + std::to_string(a.size()));
        }
        double dot = b;
        for (std::size_t j = 0; j < a.size(); ++j) dot += a[j] * point[j];
        return static_cast<std::int64_t>(std::floor(dot / w));
    }
};

inline PStableHash sample_pstable(std::size_t dims, double w, SplitMix64& rng) {
    if (w <= 0.0) throw ContractError("bucket width must be positive");
    PStableHash h;
    h.w = w;
    h.a.resize(dims);
    for (double& v : h.a) v = rng.normal();
    h.b = rng.uniform(w);
    return h;
}

/// Random Binning Hash for the Laplacian kernel exp(-|p-q|_1 / sigma): a
/// randomly shifted grid whose cell pitch is drawn from p(g) = g k''(g),
/// i.e. Gamma(shape 2, scale sigma). The pitch and shift are drawn
/// independently per dimension; that is what makes the collision
/// probability factor into the product kernel exp(-|p-q|_1 / sigma).
struct RbhHash {
    std::vector<double> pitch; // g_j, Gamma(2, sigma) each
    std::vector<double> shift; // u_j, uniform in [0, g_j]

    void signature(std::span<const float> point, std::span<std::int64_t> out) const {
        if (point.size() != pitch.size() || out.size() != pitch.size()) {
            throw ContractError("point dimensionality " + std::to_string(point.size()) +
                                " != hash dimensionality " + std::to_string(pitch.size()));
        }
        for (std::size_t j = 0; j < pitch.size(); ++j) {
            out[j] = static_cast<std::int64_t>(std::floor((point[j] - shift[j]) / pitch[j]));
        }
    }
};

inline RbhHash sample_rbh(double sigma, std::size_t dims, SplitMix64& rng) {
    if (sigma <= 0.0) throw ContractError("kernel width must be positive");
    RbhHash h;
    h.pitch.resize(dims);
    h.shift.resize(dims);
    for (std::size_t j = 0; j < dims; ++j) {
        h.pitch[j] = rng.gamma2(sigma);
        h.shift[j] = rng.uniform(h.pitch[j]);
    }
    return h;
}

/// Seeded projection of an arbitrary-size signature into [0, D): a 64-bit
/// avalanche mix folded over the signature words, reduced mod D.
/// Deterministic for a fixed (seed, signature); empirically uniform over
/// random signatures (checked by chi-square in the tests).
class Rehasher {
public:
    Rehasher(std::uint64_t seed, std::uint32_t domain) : seed_(seed), domain_(domain) {
        if (domain == 0) throw ContractError("re-hash domain must be positive");
    }

    Token operator()(std::span<const std::int64_t> signature) const noexcept {
        std::uint64_t state = mix64(seed_);
        for (std::int64_t word : signature) {
            state = mix64(state ^ static_cast<std::uint64_t>(word));
        }
        return static_cast<Token>(state % domain_);
    }

    Token operator()(std::int64_t word) const noexcept {
        const std::int64_t one[1] = {word};
        return (*this)(std::span<const std::int64_t>(one, 1));
    }

    std::uint32_t domain() const noexcept { return domain_; }
    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
    std::uint32_t domain_;
};

// ---------------------------------------------------------------------------
// Encoder: points -> match-count objects / queries
// ---------------------------------------------------------------------------

enum class LshFamily { p_stable, random_binning };

struct LshEncoderConfig {
    LshFamily family = LshFamily::random_binning;
    std::uint32_t m = 237;   // paper default: binomial sizing at worst-case s = 0.5
    std::uint32_t dims = 0;  // point dimensionality
    std::uint64_t seed = 1;
    std::uint32_t rehash_domain = 8192; // D
    // p-stable parameters
    double w = 4.0;
    std::uint32_t bucket_count = 67; // token domain for raw p-stable buckets
    std::int64_t bucket_min = -33;   // raw bucket mapped as token = raw - bucket_min, clamped
    bool rehash_pstable = false;     // clamped buckets already fit a small domain
    // random-binning parameter
    double sigma = 1.0;
};

/// A bank of m hash functions; function index i is the keyword dim and
/// f_i(p) the token. Immutable after construction; encoding is pure.
class LshEncoder {
public:
    static LshEncoder create(const LshEncoderConfig& config) {
        if (config.m == 0) throw ContractError("encoder needs at least one hash function");
        if (config.dims == 0) throw ContractError("encoder needs a point dimensionality");
        if (config.m > 0x10000u) throw ContractError("m exceeds the 16-bit dim space");
        LshEncoder enc(config);
        for (std::uint32_t i = 0; i < config.m; ++i) {
            SplitMix64 fn_rng(mix64(config.seed) ^ mix64(0x9e3779b9u + i));
            if (config.family == LshFamily::p_stable) {
                enc.pstable_.push_back(sample_pstable(config.dims, config.w, fn_rng));
            } else {
                enc.rbh_.push_back(sample_rbh(config.sigma, config.dims, fn_rng));
            }
            enc.rehashers_.emplace_back(fn_rng.next(), config.rehash_domain);
        }
        return enc;
    }

    const LshEncoderConfig& config() const noexcept { return config_; }
    std::uint32_t m() const noexcept { return config_.m; }

    Token token(std::uint32_t function, std::span<const float> point) const {
        std::vector<std::int64_t> scratch(config_.family == LshFamily::p_stable ? 0 : config_.dims);
        return token_impl(function, point, scratch);
    }

    ObjectRecord encode_point(std::span<const float> point, ObjectId id) const {
        std::vector<std::int64_t> scratch(config_.dims);
        std::vector<Keyword> kws;
        kws.reserve(config_.m);
        for (std::uint32_t i = 0; i < config_.m; ++i) {
            kws.push_back(Keyword{static_cast<DimId>(i), token_impl(i, point, scratch)});
        }
        return ObjectRecord(id, std::move(kws));
    }

    Query encode_query_point(std::span<const float> point, std::uint32_t k,
                             std::uint32_t query_id = 0) const {
        std::vector<std::int64_t> scratch(config_.dims);
        std::vector<QueryItem> items;
        items.reserve(config_.m);
        for (std::uint32_t i = 0; i < config_.m; ++i) {
            items.push_back(QueryItem::point(static_cast<DimId>(i), token_impl(i, point, scratch)));
        }
        return Query(query_id, std::move(items), k);
    }

private:
    explicit LshEncoder(const LshEncoderConfig& config) : config_(config) {}

    Token token_impl(std::uint32_t function, std::span<const float> point,
                     std::span<std::int64_t> scratch) const {
        if (function >= config_.m) throw ContractError("hash function index out of range");
        if (config_.family == LshFamily::p_stable) {
            const std::int64_t raw = pstable_[function].bucket(point);
            if (config_.rehash_pstable) return rehashers_[function](raw);
            const std::int64_t offset = raw - config_.bucket_min;
            const std::int64_t clamped =
                std::clamp<std::int64_t>(offset, 0, static_cast<std::int64_t>(config_.bucket_count) - 1);
            return static_cast<Token>(clamped);
        }
        rbh_[function].signature(point, scratch);
        return rehashers_[function](scratch);
    }

    LshEncoderConfig config_;
    std::vector<PStableHash> pstable_;
    std::vector<RbhHash> rbh_;
    std::vector<Rehasher> rehashers_;
};

// ---------------------------------------------------------------------------
// Estimators and sizing
// ---------------------------------------------------------------------------

/// Maximum-likelihood similarity estimate from a match count of c out of m.
inline double estimate_similarity(std::uint32_t c, std::uint32_t m) {
    if (m == 0) throw ContractError("m must be positive");
    if (c > m) throw ContractError("count " + std::to_string(c) + " exceeds m " + std::to_string(m));
    return static_cast<double>(c) / static_cast<double>(m);
}

/// Hoeffding sizing: ceil(2 ln(3/delta) / eps^2) hash functions guarantee
/// |c/m - sim| < eps + 1/D with probability at least 1 - delta.
inline std::uint32_t required_m_hoeffding(double eps, double delta) {
    if (!(eps > 0.0 && eps < 1.0)) throw ContractError("eps must be in (0, 1)");
    if (!(delta > 0.0 && delta < 1.0)) throw ContractError("delta must be in (0, 1)");
    return static_cast<std::uint32_t>(std::ceil(2.0 * std::log(3.0 / delta) / (eps * eps)));
}

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

} // namespace detail

/// Pr[ floor((s-eps)m) <= Binomial(m, s) <= ceil((s+eps)m) ], bounds clamped
/// to [0, m]. Exact log-space summation up to m = 10^4; beyond that a normal
/// approximation with continuity correction (the two agree to ~1e-3 at the
/// crossover, which the tests pin down).
inline double binomial_window_mass(std::uint32_t m, double s, double eps) {
    if (!(s > 0.0 && s < 1.0)) throw ContractError("s must be in (0, 1)");
    const double lo_real = (s - eps) * m;
    const double hi_real = (s + eps) * m;
    const std::int64_t lo = std::max<std::int64_t>(static_cast<std::int64_t>(std::floor(lo_real)), 0);
    const std::int64_t hi = std::min<std::int64_t>(static_cast<std::int64_t>(std::ceil(hi_real)), m);
    if (hi < lo) return 0.0;

    if (m > 10000) {
        const double mu = m * s;
        const double sd = std::sqrt(m * s * (1.0 - s));
        return detail::normal_cdf((static_cast<double>(hi) + 0.5 - mu) / sd) -
               detail::normal_cdf((static_cast<double>(lo) - 0.5 - mu) / sd);
    }

    const double log_s = std::log(s);
    const double log_1s = std::log1p(-s);
    const double lg_m1 = std::lgamma(static_cast<double>(m) + 1.0);
    double mass = 0.0;
    for (std::int64_t c = lo; c <= hi; ++c) {
        const double log_pmf = lg_m1 - std::lgamma(static_cast<double>(c) + 1.0) -
                               std::lgamma(static_cast<double>(m - c) + 1.0) + c * log_s +
                               (m - c) * log_1s;
        mass += std::exp(log_pmf);
    }
    return mass;
}

/// Smallest m whose binomial window mass reaches 1 - delta and stays there
/// for every larger m. The mass is not monotone in m (the integer window
/// tightens and relaxes with a parity rhythm), so the single-crossing point
/// is taken after the last failure rather than at the first success.
inline std::uint32_t required_m_binomial(double s, double eps, double delta) {
    if (!(s > 0.0 && s < 1.0)) throw ContractError("s must be in (0, 1)");
    if (!(eps > 0.0 && eps < 1.0)) throw ContractError("eps must be in (0, 1)");
    if (!(delta > 0.0 && delta < 1.0)) throw ContractError("delta must be in (0, 1)");
    // the closed-form sizing is an upper bound on the binomial requirement
    const std::uint32_t horizon = required_m_hoeffding(eps, delta) + 64;
    std::uint32_t last_fail = 0;
    for (std::uint32_t m = 1; m <= horizon; ++m) {
        if (binomial_window_mass(m, s, eps) < 1.0 - delta) last_fail = m;
    }
    return last_fail + 1;
}

// ---------------------------------------------------------------------------
// Quality metrics
// ---------------------------------------------------------------------------

inline double lp_distance(std::span<const float> a, std::span<const float> b, double p) {
    if (a.size() != b.size()) throw ContractError("dimensionality mismatch");
    if (!(p >= 1.0)) throw ContractError("p must be >= 1");
    double acc = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        acc += std::pow(std::abs(static_cast<double>(a[j]) - b[j]), p);
    }
    return std::pow(acc, 1.0 / p);
}

/// Mean ratio of reported-to-true neighbor distances; >= 1 for a correct
/// truth list. Exact-duplicate nearest neighbors (0/0) count as ratio 1.
inline double approximation_ratio(std::span<const std::vector<float>> reported,
                                  std::span<const std::vector<float>> truth,
                                  std::span<const float> query, double p) {
    if (reported.size() != truth.size() || reported.empty()) {
        throw ContractError("reported and truth must be non-empty lists of equal length");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < reported.size(); ++i) {
        const double num = lp_distance(reported[i], query, p);
        const double den = lp_distance(truth[i], query, p);
        if (den == 0.0 && num == 0.0) {
            sum += 1.0;
        } else {
            sum += num / den; // +inf if the truth distance is 0 and ours is not
        }
    }
    return sum / static_cast<double>(reported.size());
}

/// Mean pairwise l_1 distance over the sample; the usual kernel-width pick.
/// Large samples are subsampled to at most max_pairs pairs deterministically.
/// Returns 0 for an all-duplicates sample (degenerate width; callers warn).
inline double kernel_width_heuristic(std::span<const std::vector<float>> points,
                                     std::uint64_t max_pairs = 1000000) {
    const std::size_t n = points.size();
    if (n < 2) throw ContractError("kernel width needs at least 2 points");
    auto l1 = [&](std::size_t i, std::size_t j) {
        double d = 0.0;
        for (std::size_t t = 0; t < points[i].size(); ++t) {
            d += std::abs(static_cast<double>(points[i][t]) - points[j][t]);
        }
        return d;
    };
    const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    double sum = 0.0;
    std::uint64_t used = 0;
    if (total <= max_pairs) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) sum += l1(i, j);
        }
        used = total;
    } else {
        SplitMix64 rng(0x6d63782d7730u); // fixed: the subsample must be reproducible
        for (std::uint64_t t = 0; t < max_pairs; ++t) {
            const std::size_t i = static_cast<std::size_t>(rng.next() % n);
            std::size_t j = static_cast<std::size_t>(rng.next() % (n - 1));
            if (j >= i) ++j;
            sum += l1(i, j);
        }
        used = max_pairs;
    }
    return sum / static_cast<double>(used);
}

} // namespace mcx
