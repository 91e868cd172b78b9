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
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mcx/error.hpp"

namespace mcx {

using DimId = std::uint16_t;
using Token = std::uint32_t;
using ObjectId = std::uint32_t;

/// One universe element: a (dimension, token) pair. Dimensions are
/// attribute or hash-function indices; tokens are discretized values,
/// hash buckets or packed sub-unit ids.
struct Keyword {
    DimId dim = 0;
    Token token = 0;

    friend constexpr auto operator<=>(const Keyword&, const Keyword&) = default;

    /// The pair packed into one 64-bit word, ordering-compatible with <=>.
    constexpr std::uint64_t packed() const noexcept {
        return (static_cast<std::uint64_t>(dim) << 32) | token;
    }
};

/// An indexed object: a set of distinct keywords. Keywords are sorted at
/// construction and duplicates are rejected; a duplicate always indicates
/// a caller bug (sequence adapters make repeated sub-units distinct via
/// occurrence indices before they get here).
class ObjectRecord {
public:
    ObjectRecord(ObjectId id, std::vector<Keyword> keywords)
        : id_(id), keywords_(std::move(keywords)) {
        std::sort(keywords_.begin(), keywords_.end());
        const auto dup = std::adjacent_find(keywords_.begin(), keywords_.end());
        if (dup != keywords_.end()) {
            throw ContractError("ObjectRecord " + std::to_string(id) +
                                ": duplicate keyword (dim=" + std::to_string(dup->dim) +
                                ", token=" + std::to_string(dup->token) + ")");
        }
    }

    ObjectId id() const noexcept { return id_; }
    const std::vector<Keyword>& keywords() const noexcept { return keywords_; }

private:
    ObjectId id_;
    std::vector<Keyword> keywords_;
};

/// One query item: an inclusive token range on a single dimension.
struct QueryItem {
    DimId dim = 0;
    Token lo = 0;
    Token hi = 0;

    QueryItem() = default;
    QueryItem(DimId d, Token l, Token h) : dim(d), lo(l), hi(h) {
        if (lo > hi) {
            throw ContractError("QueryItem: lo " + std::to_string(lo) + " > hi " +
                                std::to_string(hi) + " on dim " + std::to_string(dim));
        }
    }

    static QueryItem point(DimId d, Token t) { return QueryItem(d, t, t); }
};

/// A range-item query asking for the k objects with the largest match count.
struct Query {
    std::uint32_t id = 0;
    std::vector<QueryItem> items;
    std::uint32_t k = 1;

    Query() = default;
    Query(std::uint32_t qid, std::vector<QueryItem> qitems, std::uint32_t qk)
        : id(qid), items(std::move(qitems)), k(qk) {
        if (items.empty()) throw ContractError("Query " + std::to_string(qid) + ": no items");
        if (k == 0) throw ContractError("Query " + std::to_string(qid) + ": k must be >= 1");
    }
};

/// Reference match-count evaluator: the number of object keywords contained
/// in each item's range, summed over items. Deliberately simple; this is
/// the oracle every other execution path is checked against.
inline std::uint32_t match_count_reference(const Query& query, const ObjectRecord& object) {
    const auto& kws = object.keywords();
    std::uint32_t total = 0;
    for (const QueryItem& item : query.items) {
        const auto first = std::lower_bound(kws.begin(), kws.end(), Keyword{item.dim, item.lo});
        const auto last = std::upper_bound(kws.begin(), kws.end(), Keyword{item.dim, item.hi});
        total += static_cast<std::uint32_t>(last - first);
    }
    return total;
}

/// Per-attribute token domains of a relational table, post-discretization.
class RelationalSchema {
public:
    explicit RelationalSchema(std::vector<Token> domain_sizes)
        : domain_sizes_(std::move(domain_sizes)) {
        if (domain_sizes_.empty()) throw ContractError("RelationalSchema: empty schema");
        for (std::size_t a = 0; a < domain_sizes_.size(); ++a) {
            if (domain_sizes_[a] == 0) {
                throw ContractError("RelationalSchema: attribute " + std::to_string(a) +
                                    " has empty domain");
            }
        }
    }

    std::size_t attribute_count() const noexcept { return domain_sizes_.size(); }
    Token domain_size(std::size_t attr) const { return domain_sizes_.at(attr); }

private:
    std::vector<Token> domain_sizes_;
};

/// One keyword per attribute, dim = attribute index.
inline ObjectRecord encode_relational_tuple(const RelationalSchema& schema,
                                            std::span<const Token> values, ObjectId id) {
    if (values.size() != schema.attribute_count()) {
        throw ContractError("tuple arity " + std::to_string(values.size()) +
                            " != schema arity " + std::to_string(schema.attribute_count()));
    }
    std::vector<Keyword> kws;
    kws.reserve(values.size());
    for (std::size_t a = 0; a < values.size(); ++a) {
        if (values[a] >= schema.domain_size(a)) {
            throw DataError("attribute " + std::to_string(a) + ": token " +
                            std::to_string(values[a]) + " outside domain [0, " +
                            std::to_string(schema.domain_size(a)) + ")");
        }
        kws.push_back(Keyword{static_cast<DimId>(a), values[a]});
    }
    return ObjectRecord(id, std::move(kws));
}

struct AttributeRange {
    std::size_t attr = 0;
    std::int64_t lo = 0; // pre-clamp, may be negative (e.g. windowed point queries)
    std::int64_t hi = 0;
};

/// One item per range; bounds are clamped into the attribute's domain.
/// A range that misses the domain entirely is an error.
inline Query encode_relational_query(const RelationalSchema& schema,
                                     std::span<const AttributeRange> ranges, std::uint32_t k,
                                     std::uint32_t query_id = 0) {
    std::vector<QueryItem> items;
    items.reserve(ranges.size());
    for (const AttributeRange& r : ranges) {
        if (r.attr >= schema.attribute_count()) {
            throw ContractError("range on unknown attribute " + std::to_string(r.attr));
        }
        const std::int64_t domain = schema.domain_size(r.attr);
        const std::int64_t lo = std::max<std::int64_t>(r.lo, 0);
        const std::int64_t hi = std::min<std::int64_t>(r.hi, domain - 1);
        if (lo > hi) {
            throw DataError("attribute " + std::to_string(r.attr) + ": range [" +
                            std::to_string(r.lo) + ", " + std::to_string(r.hi) +
                            "] is empty after clamping to [0, " + std::to_string(domain) + ")");
        }
        items.emplace_back(static_cast<DimId>(r.attr), static_cast<Token>(lo),
                           static_cast<Token>(hi));
    }
    return Query(query_id, std::move(items), k);
}

} // namespace mcx
