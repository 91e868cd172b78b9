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

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "mcx/cpq.hpp"
#include "mcx/model.hpp"

namespace mcx {

/// Per-object match counts for one query by scanning the whole dataset with
/// the reference evaluator. The ground-truth pipeline starts here.
inline std::vector<std::uint32_t> full_scan_counts(const Query& query,
                                                   std::span<const ObjectRecord> objects) {
    std::vector<std::uint32_t> counts;
    counts.reserve(objects.size());
    for (const ObjectRecord& obj : objects) counts.push_back(match_count_reference(query, obj));
    return counts;
}

/// Exact top-k by (count desc, id asc), zero counts included.
inline std::vector<TopKEntry> sort_topk(std::span<const std::uint32_t> counts, std::size_t k) {
    if (k > counts.size()) throw ContractError("sort_topk: k exceeds array length");
    std::vector<TopKEntry> all;
    all.reserve(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        all.push_back(TopKEntry{static_cast<ObjectId>(i), counts[i]});
    }
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                      TopKEntry::better);
    all.resize(k);
    return all;
}

inline constexpr std::uint32_t kDefaultBucketNum = 1024;

/// Iterative bucket k-selection over a count array. Each round assigns the
/// surviving candidates to bucket_num value buckets via
/// bucket = floor((count - min) / (max - min) * bucket_num), keeps everything
/// in buckets strictly above the one holding the k-th largest, and recurses
/// into that boundary bucket with recomputed min/max. A single-valued bucket
/// finishes with ties broken by ascending id. Counts equal to max clamp into
/// the top bucket.
inline std::vector<TopKEntry> bucket_kselect(std::span<const std::uint32_t> counts, std::size_t k,
                                             std::uint32_t bucket_num = kDefaultBucketNum,
                                             std::uint32_t* iterations_out = nullptr) {
    if (k > counts.size()) throw ContractError("bucket_kselect: k exceeds array length");
    if (bucket_num < 2) throw ContractError("bucket_kselect: bucket_num must be >= 2");
    if (iterations_out) *iterations_out = 0;

    std::vector<TopKEntry> taken;
    taken.reserve(k);
    std::vector<ObjectId> survivors(counts.size());
    std::iota(survivors.begin(), survivors.end(), 0u);
    std::size_t remaining = k;

    std::vector<std::vector<ObjectId>> buckets(bucket_num);
    while (remaining > 0) {
        if (iterations_out) ++*iterations_out;
        std::uint32_t lo = counts[survivors.front()];
        std::uint32_t hi = lo;
        for (ObjectId id : survivors) {
            lo = std::min(lo, counts[id]);
            hi = std::max(hi, counts[id]);
        }
        if (lo == hi || remaining == survivors.size()) {
            // single-valued bucket (or everything survives): tie rule on ids
            std::sort(survivors.begin(), survivors.end());
            if (lo != hi) {
                std::stable_sort(survivors.begin(), survivors.end(),
                                 [&](ObjectId a, ObjectId b) { return counts[a] > counts[b]; });
            }
            for (std::size_t i = 0; i < remaining; ++i) {
                taken.push_back(TopKEntry{survivors[i], counts[survivors[i]]});
            }
            break;
        }

        for (auto& b : buckets) b.clear();
        const std::uint64_t range = hi - lo;
        for (ObjectId id : survivors) {
            std::uint64_t bid = static_cast<std::uint64_t>(counts[id] - lo) * bucket_num / range;
            if (bid >= bucket_num) bid = bucket_num - 1; // count == max clamps
            buckets[static_cast<std::size_t>(bid)].push_back(id);
        }

        // walk buckets from the largest values down to the boundary bucket
        std::size_t b = bucket_num;
        while (b-- > 0) {
            if (buckets[b].size() < remaining) {
                for (ObjectId id : buckets[b]) taken.push_back(TopKEntry{id, counts[id]});
                remaining -= buckets[b].size();
            } else {
                survivors = buckets[b];
                break;
            }
        }
    }

    std::sort(taken.begin(), taken.end(), TopKEntry::better);
    return taken;
}

} // namespace mcx
