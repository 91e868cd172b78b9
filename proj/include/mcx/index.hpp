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
#include <optional>
#include <span>
#include <vector>

#include "mcx/model.hpp"

namespace mcx {

/// Half-open offset range [begin, end) into the list array.
struct PostingsSpan {
    std::uint64_t begin = 0;
    std::uint64_t end = 0;

    std::uint64_t length() const noexcept { return end - begin; }
    friend constexpr bool operator==(const PostingsSpan&, const PostingsSpan&) = default;
};

/// Inverted index over one dataset: a position map from keyword to one or
/// more spans (more than one only after long-list splitting) inside a single
/// contiguous postings array. Immutable after build; concurrent read-only
/// access is safe.
class InvertedIndex {
public:
    struct KeywordEntry {
        Keyword keyword;
        std::uint32_t first_span = 0;
        std::uint16_t span_count = 0;
    };

    struct DimStats {
        DimId dim = 0;
        Token max_token = 0;
        // largest number of tokens a single object carries in this dim
        std::uint32_t max_multiplicity = 0;
    };

    InvertedIndex() = default;
    InvertedIndex(std::uint32_t num_objects, std::vector<KeywordEntry> entries,
                  std::vector<PostingsSpan> spans, std::vector<ObjectId> list_array,
                  std::optional<std::uint32_t> split_threshold)
        : num_objects_(num_objects),
          entries_(std::move(entries)),
          spans_(std::move(spans)),
          list_array_(std::move(list_array)),
          split_threshold_(split_threshold) {
        rebuild_dim_stats();
    }

    std::uint32_t num_objects() const noexcept { return num_objects_; }
    std::size_t keyword_count() const noexcept { return entries_.size(); }
    const std::vector<KeywordEntry>& entries() const noexcept { return entries_; }
    const std::vector<PostingsSpan>& spans() const noexcept { return spans_; }
    const std::vector<ObjectId>& list_array() const noexcept { return list_array_; }
    std::optional<std::uint32_t> split_threshold() const noexcept { return split_threshold_; }

    std::span<const ObjectId> ids(const PostingsSpan& span) const {
        return std::span<const ObjectId>(list_array_).subspan(span.begin, span.length());
    }

    std::span<const PostingsSpan> spans_of(const KeywordEntry& entry) const {
        return std::span<const PostingsSpan>(spans_).subspan(entry.first_span, entry.span_count);
    }

    /// Spans of every indexed keyword inside the item's range. Absent
    /// keywords contribute nothing; an item on an unknown dim yields an
    /// empty result.
    void lookup_into(const QueryItem& item, std::vector<PostingsSpan>& out) const {
        auto it = std::lower_bound(entries_.begin(), entries_.end(), Keyword{item.dim, item.lo},
                                   [](const KeywordEntry& e, const Keyword& kw) {
                                       return e.keyword < kw;
                                   });
        const Keyword upper{item.dim, item.hi};
        for (; it != entries_.end() && !(upper < it->keyword); ++it) {
            const auto ss = spans_of(*it);
            out.insert(out.end(), ss.begin(), ss.end());
        }
    }

    std::vector<PostingsSpan> lookup(const QueryItem& item) const {
        std::vector<PostingsSpan> out;
        lookup_into(item, out);
        return out;
    }

    std::optional<Token> max_token(DimId dim) const {
        const DimStats* s = find_dim(dim);
        if (!s) return std::nullopt;
        return s->max_token;
    }

    std::uint32_t max_multiplicity(DimId dim) const {
        const DimStats* s = find_dim(dim);
        return s ? s->max_multiplicity : 0;
    }

    /// Upper bound on any object's match count for this query: per item, no
    /// object can match more than the number of indexed keywords in the
    /// range, nor more than the dim's worst-case per-object multiplicity.
    std::uint64_t max_count_bound(const Query& query) const {
        std::uint64_t bound = 0;
        for (const QueryItem& item : query.items) {
            auto lo = std::lower_bound(entries_.begin(), entries_.end(), Keyword{item.dim, item.lo},
                                       [](const KeywordEntry& e, const Keyword& kw) {
                                           return e.keyword < kw;
                                       });
            auto hi = std::upper_bound(entries_.begin(), entries_.end(), Keyword{item.dim, item.hi},
                                       [](const Keyword& kw, const KeywordEntry& e) {
                                           return kw < e.keyword;
                                       });
            const std::uint64_t in_range = static_cast<std::uint64_t>(hi - lo);
            bound += std::min<std::uint64_t>(in_range, max_multiplicity(item.dim));
        }
        return bound;
    }

    std::uint64_t longest_list() const {
        std::uint64_t longest = 0;
        for (const KeywordEntry& e : entries_) {
            std::uint64_t total = 0;
            for (const PostingsSpan& s : spans_of(e)) total += s.length();
            longest = std::max(longest, total);
        }
        return longest;
    }

private:
    const DimStats* find_dim(DimId dim) const {
        auto it = std::lower_bound(dim_stats_.begin(), dim_stats_.end(), dim,
                                   [](const DimStats& s, DimId d) { return s.dim < d; });
        if (it == dim_stats_.end() || it->dim != dim) return nullptr;
        return &*it;
    }

    void rebuild_dim_stats() {
        dim_stats_.clear();
        // multiplicity: count per (dim, object) across all keywords of a dim
        std::vector<std::uint32_t> per_object;
        std::size_t i = 0;
        while (i < entries_.size()) {
            std::size_t j = i;
            DimStats stats;
            stats.dim = entries_[i].keyword.dim;
            per_object.assign(num_objects_, 0);
            for (; j < entries_.size() && entries_[j].keyword.dim == stats.dim; ++j) {
                stats.max_token = std::max(stats.max_token, entries_[j].keyword.token);
                for (const PostingsSpan& s : spans_of(entries_[j])) {
                    for (ObjectId id : ids(s)) {
                        stats.max_multiplicity = std::max(stats.max_multiplicity, ++per_object[id]);
                    }
                }
            }
            dim_stats_.push_back(stats);
            i = j;
        }
    }

    std::uint32_t num_objects_ = 0;
    std::vector<KeywordEntry> entries_; // sorted by keyword
    std::vector<PostingsSpan> spans_;
    std::vector<ObjectId> list_array_;
    std::optional<std::uint32_t> split_threshold_;
    std::vector<DimStats> dim_stats_; // sorted by dim
};

/// Paper default for long-list splitting (4K ids per sub-list).
inline constexpr std::uint32_t kDefaultSplitThreshold = 4096;

/// Builds the index. Object ids must be dense 0..n-1 (any order); a
/// duplicate or out-of-range id is a build error. With a split threshold,
/// no span is longer than the threshold.
inline InvertedIndex build_index(std::span<const ObjectRecord> objects,
                                 std::optional<std::uint32_t> split_threshold = std::nullopt) {
    if (split_threshold && *split_threshold == 0) {
        throw ContractError("split_threshold must be positive");
    }
    const std::uint32_t n = static_cast<std::uint32_t>(objects.size());
    std::vector<bool> seen(n, false);
    std::size_t total_keywords = 0;
    for (const ObjectRecord& obj : objects) {
        if (obj.id() >= n || seen[obj.id()]) {
            throw DataError("object ids must be dense 0.." + std::to_string(n ? n - 1 : 0) +
                            ": bad id " + std::to_string(obj.id()));
        }
        seen[obj.id()] = true;
        total_keywords += obj.keywords().size();
    }

    std::vector<std::pair<std::uint64_t, ObjectId>> pairs;
    pairs.reserve(total_keywords);
    for (const ObjectRecord& obj : objects) {
        for (const Keyword& kw : obj.keywords()) pairs.emplace_back(kw.packed(), obj.id());
    }
    std::sort(pairs.begin(), pairs.end());

    std::vector<InvertedIndex::KeywordEntry> entries;
    std::vector<PostingsSpan> spans;
    std::vector<ObjectId> list_array;
    list_array.reserve(pairs.size());

    std::size_t i = 0;
    while (i < pairs.size()) {
        std::size_t j = i;
        while (j < pairs.size() && pairs[j].first == pairs[i].first) ++j;

        InvertedIndex::KeywordEntry entry;
        entry.keyword = Keyword{static_cast<DimId>(pairs[i].first >> 32),
                                static_cast<Token>(pairs[i].first & 0xffffffffu)};
        entry.first_span = static_cast<std::uint32_t>(spans.size());

        const std::uint64_t limit =
            split_threshold ? *split_threshold : static_cast<std::uint64_t>(j - i);
        std::size_t pos = i;
        while (pos < j) {
            const std::size_t take = std::min<std::uint64_t>(limit, j - pos);
            PostingsSpan span{list_array.size(), list_array.size() + take};
            for (std::size_t t = 0; t < take; ++t) list_array.push_back(pairs[pos + t].second);
            spans.push_back(span);
            pos += take;
        }
        const std::size_t created = spans.size() - entry.first_span;
        if (created > 0xffff) {
            throw DataError("keyword has too many sub-lists (" + std::to_string(created) + ")");
        }
        entry.span_count = static_cast<std::uint16_t>(created);
        entries.push_back(entry);
        i = j;
    }

    return InvertedIndex(n, std::move(entries), std::move(spans), std::move(list_array),
                         split_threshold);
}

/// One slice of a partitioned dataset, indexed over local ids.
/// local id + id_offset == global id.
struct IndexPartition {
    std::uint32_t part_id = 0;
    ObjectId id_offset = 0;
    std::uint32_t size = 0;
    InvertedIndex index;
};

/// Splits the dataset into ceil(n / part_capacity) consecutive parts,
/// preserving object order. Requires objects in id order (id == position).
inline std::vector<IndexPartition> partition_dataset(
    std::span<const ObjectRecord> objects, std::uint32_t part_capacity,
    std::optional<std::uint32_t> split_threshold = std::nullopt) {
    if (part_capacity == 0) throw ContractError("part_capacity must be >= 1");
    for (std::size_t i = 0; i < objects.size(); ++i) {
        if (objects[i].id() != i) {
            throw DataError("partitioning requires objects in dense id order");
        }
    }
    std::vector<IndexPartition> parts;
    std::size_t start = 0;
    std::uint32_t part_id = 0;
    while (start < objects.size()) {
        const std::size_t count = std::min<std::size_t>(part_capacity, objects.size() - start);
        std::vector<ObjectRecord> local;
        local.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            local.emplace_back(static_cast<ObjectId>(i), objects[start + i].keywords());
        }
        IndexPartition part;
        part.part_id = part_id++;
        part.id_offset = static_cast<ObjectId>(start);
        part.size = static_cast<std::uint32_t>(count);
        part.index = build_index(local, split_threshold);
        parts.push_back(std::move(part));
        start += count;
    }
    return parts;
}

} // namespace mcx
