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
#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>

#include "mcx/index.hpp"
#include "mcx/index_io.hpp"
#include "mcx/model.hpp"

using namespace mcx;

namespace {

std::vector<ObjectRecord> example_objects() {
    std::vector<ObjectRecord> objects;
    objects.emplace_back(0, std::vector<Keyword>{{0, 1}, {1, 2}, {2, 1}});
    objects.emplace_back(1, std::vector<Keyword>{{0, 2}, {1, 1}, {2, 2}});
    objects.emplace_back(2, std::vector<Keyword>{{0, 1}, {1, 2}, {2, 2}});
    return objects;
}

std::vector<ObjectId> ids_of(const InvertedIndex& index, Keyword kw) {
    std::vector<ObjectId> ids;
    for (const PostingsSpan& span : index.lookup(QueryItem::point(kw.dim, kw.token))) {
        const auto s = index.ids(span);
        ids.insert(ids.end(), s.begin(), s.end());
    }
    return ids;
}

std::vector<ObjectRecord> random_objects(std::mt19937& rng, std::size_t n, int dims, int tokens) {
    std::uniform_int_distribution<int> dim(0, dims - 1), tok(0, tokens - 1), len(0, 6);
    std::vector<ObjectRecord> objects;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<Keyword> kws;
        for (int t = len(rng); t > 0; --t) {
            const Keyword kw{static_cast<DimId>(dim(rng)), static_cast<Token>(tok(rng))};
            if (std::find(kws.begin(), kws.end(), kw) == kws.end()) kws.push_back(kw);
        }
        objects.emplace_back(static_cast<ObjectId>(i), std::move(kws));
    }
    return objects;
}

} // namespace

TEST_CASE("postings of the running example", "[index]") {
    const auto index = build_index(example_objects());
    CHECK(index.num_objects() == 3);
    CHECK(index.keyword_count() == 6);
    CHECK(ids_of(index, {0, 1}) == std::vector<ObjectId>{0, 2});
    CHECK(ids_of(index, {1, 2}) == std::vector<ObjectId>{0, 2});
    CHECK(ids_of(index, {2, 2}) == std::vector<ObjectId>{1, 2});
    CHECK(index.max_token(0) == Token{2});
    CHECK(index.max_multiplicity(1) == 1);
}

TEST_CASE("empty dataset builds an empty index", "[index]") {
    const auto index = build_index(std::vector<ObjectRecord>{});
    CHECK(index.num_objects() == 0);
    CHECK(index.keyword_count() == 0);
    CHECK(index.list_array().empty());
}

TEST_CASE("duplicate object ids are a build error", "[index]") {
    std::vector<ObjectRecord> objects;
    objects.emplace_back(0, std::vector<Keyword>{{0, 1}});
    objects.emplace_back(0, std::vector<Keyword>{{0, 2}});
    CHECK_THROWS_AS(build_index(objects), DataError);
}

TEST_CASE("long lists split at the threshold", "[index]") {
    std::vector<ObjectRecord> objects;
    for (std::size_t i = 0; i < 10000; ++i) {
        objects.emplace_back(static_cast<ObjectId>(i), std::vector<Keyword>{{0, 0}});
    }
    const auto index = build_index(objects, 4096);
    REQUIRE(index.keyword_count() == 1);
    const auto spans = index.lookup(QueryItem::point(0, 0));
    REQUIRE(spans.size() == 3);
    CHECK(spans[0].length() == 4096);
    CHECK(spans[1].length() == 4096);
    CHECK(spans[2].length() == 1808);
}

TEST_CASE("splitting preserves the postings multiset", "[index]") {
    std::mt19937 rng(7);
    const auto objects = random_objects(rng, 500, 3, 4);
    const auto whole = build_index(objects);
    const auto split = build_index(objects, 32);
    for (const auto& entry : whole.entries()) {
        auto a = ids_of(whole, entry.keyword);
        auto b = ids_of(split, entry.keyword);
        CHECK(a == b); // both ascending, so multiset equality is equality
    }
    for (const PostingsSpan& span : split.spans()) CHECK(span.length() <= 32);
}

TEST_CASE("lookup resolves range items", "[index]") {
    const auto index = build_index(example_objects());
    // (A,[1,2]) touches the spans of (A,1) and (A,2)
    const auto spans = index.lookup(QueryItem(0, 1, 2));
    std::size_t total = 0;
    for (const auto& s : spans) total += s.length();
    CHECK(total == 3);
    CHECK(index.lookup(QueryItem(9, 0, 100)).empty());
    // full-domain item covers every object carrying the dim once per keyword
    const auto full = index.lookup(QueryItem(2, 0, 0xffffffffu));
    std::size_t full_total = 0;
    for (const auto& s : full) full_total += s.length();
    CHECK(full_total == 3);
}

TEST_CASE("round trip: every keyword of every object is found once", "[index]") {
    std::mt19937 rng(11);
    const auto objects = random_objects(rng, 300, 4, 6);
    const auto index = build_index(objects, 16);
    for (const auto& obj : objects) {
        for (const Keyword& kw : obj.keywords()) {
            const auto ids = ids_of(index, kw);
            CHECK(std::count(ids.begin(), ids.end(), obj.id()) == 1);
        }
    }
}

TEST_CASE("per-query span increments agree with the reference count", "[index]") {
    std::mt19937 rng(13);
    const auto objects = random_objects(rng, 200, 3, 5);
    const auto index = build_index(objects, 8);
    std::uniform_int_distribution<int> dim(0, 2), tok(0, 4), items(1, 4);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<QueryItem> qitems;
        for (int i = items(rng); i > 0; --i) {
            const Token lo = static_cast<Token>(tok(rng));
            qitems.push_back(QueryItem(static_cast<DimId>(dim(rng)), lo,
                                       lo + static_cast<Token>(tok(rng))));
        }
        const Query query(0, qitems, 1);
        std::vector<std::uint32_t> counts(objects.size(), 0);
        for (const QueryItem& item : query.items) {
            for (const PostingsSpan& span : index.lookup(item)) {
                for (ObjectId id : index.ids(span)) ++counts[id];
            }
        }
        for (const auto& obj : objects) {
            CHECK(counts[obj.id()] == match_count_reference(query, obj));
        }
    }
}

TEST_CASE("max_count_bound dominates every object's count", "[index]") {
    std::mt19937 rng(17);
    const auto objects = random_objects(rng, 150, 3, 5);
    const auto index = build_index(objects);
    std::uniform_int_distribution<int> dim(0, 2), tok(0, 4), items(1, 5);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<QueryItem> qitems;
        for (int i = items(rng); i > 0; --i) {
            const Token lo = static_cast<Token>(tok(rng));
            qitems.push_back(QueryItem(static_cast<DimId>(dim(rng)), lo,
                                       lo + static_cast<Token>(tok(rng))));
        }
        const Query query(0, qitems, 1);
        const std::uint64_t bound = index.max_count_bound(query);
        for (const auto& obj : objects) {
            CHECK(match_count_reference(query, obj) <= bound);
        }
    }
}

TEST_CASE("partitioning covers the dataset in order", "[index]") {
    std::mt19937 rng(19);
    const auto objects36 = random_objects(rng, 36, 3, 4);
    const auto parts6 = partition_dataset(objects36, 6);
    REQUIRE(parts6.size() == 6);
    for (const auto& part : parts6) CHECK(part.size == 6);

    const auto one = partition_dataset(objects36, 100);
    REQUIRE(one.size() == 1);
    CHECK(one[0].size == 36);
    CHECK(one[0].id_offset == 0);

    const auto objects10 = random_objects(rng, 10, 3, 4);
    const auto parts = partition_dataset(objects10, 4);
    REQUIRE(parts.size() == 3);
    CHECK(parts[0].size == 4);
    CHECK(parts[1].size == 4);
    CHECK(parts[2].size == 2);
    CHECK(parts[0].id_offset == 0);
    CHECK(parts[1].id_offset == 4);
    CHECK(parts[2].id_offset == 8);

    // local id + offset == global id, postings preserved
    for (const auto& part : parts) {
        for (const auto& entry : part.index.entries()) {
            for (ObjectId local : ids_of(part.index, entry.keyword)) {
                const ObjectId global = local + part.id_offset;
                const auto& kws = objects10[global].keywords();
                CHECK(std::find(kws.begin(), kws.end(), entry.keyword) != kws.end());
            }
        }
    }

    CHECK_THROWS_AS(partition_dataset(objects10, 0), ContractError);
}

TEST_CASE("index serialization round-trips bit-exactly", "[index][io]") {
    std::mt19937 rng(23);
    const auto objects = random_objects(rng, 400, 4, 6);
    const auto index = build_index(objects, 64);
    const auto bytes = serialize_index(index);
    const auto reloaded = deserialize_index(bytes.data(), bytes.size());
    CHECK(serialize_index(reloaded) == bytes);
    CHECK(reloaded.num_objects() == index.num_objects());
    CHECK(reloaded.keyword_count() == index.keyword_count());
    // dim stats are rebuilt on load
    for (const auto& entry : index.entries()) {
        CHECK(reloaded.max_multiplicity(entry.keyword.dim) ==
              index.max_multiplicity(entry.keyword.dim));
    }
}

TEST_CASE("loader rejects corrupted images", "[index][io]") {
    const auto index = build_index(example_objects());
    auto bytes = serialize_index(index);

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(deserialize_index(bad_magic.data(), bad_magic.size()), DataError);

    CHECK_THROWS_AS(deserialize_index(bytes.data(), bytes.size() - 2), DataError);

    // the last span holds ids {1, 2}; zeroing the tail id breaks the order
    auto unsorted = bytes;
    unsorted[unsorted.size() - 4] = 0;
    CHECK_THROWS_AS(deserialize_index(unsorted.data(), unsorted.size()), DataError);

    auto bad_id = bytes;
    bad_id[bad_id.size() - 4] = 0x7f; // object id way out of range
    CHECK_THROWS_AS(deserialize_index(bad_id.data(), bad_id.size()), DataError);
}
