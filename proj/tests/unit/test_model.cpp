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

#include <algorithm>
#include <random>

#include "mcx/model.hpp"

using namespace mcx;

namespace {

// the running three-attribute example: O1=(1,2,1), O2=(2,1,2), O3=(1,2,2)
ObjectRecord example_object(ObjectId id) {
    switch (id) {
        case 0: return ObjectRecord(0, {{0, 1}, {1, 2}, {2, 1}});
        case 1: return ObjectRecord(1, {{0, 2}, {1, 1}, {2, 2}});
        default: return ObjectRecord(2, {{0, 1}, {1, 2}, {2, 2}});
    }
}

Query example_query(std::uint32_t k = 1) {
    return Query(0, {QueryItem(0, 1, 2), QueryItem(1, 1, 1), QueryItem(2, 2, 3)}, k);
}

} // namespace

TEST_CASE("keywords order lexicographically by (dim, token)", "[model]") {
    CHECK(Keyword{0, 5} < Keyword{1, 0});
    CHECK(Keyword{2, 1} < Keyword{2, 2});
    CHECK(Keyword{1, 7}.packed() == ((1ull << 32) | 7));
    CHECK(Keyword{0, 1} == Keyword{0, 1});
}

TEST_CASE("object records reject duplicate keywords", "[model]") {
    CHECK_THROWS_AS(ObjectRecord(3, {{0, 1}, {0, 1}}), ContractError);
    // same dim with different tokens is legal (multi-token dims)
    const ObjectRecord obj(4, {{0, 2}, {0, 1}});
    CHECK(obj.keywords().front().token == 1); // sorted at construction
}

TEST_CASE("query items validate their range", "[model]") {
    CHECK_THROWS_AS(QueryItem(0, 3, 2), ContractError);
    CHECK(QueryItem::point(1, 9).lo == 9);
    CHECK_THROWS_AS(Query(0, {}, 1), ContractError);
    CHECK_THROWS_AS(Query(0, {QueryItem::point(0, 0)}, 0), ContractError);
}

TEST_CASE("match count on the running example", "[model]") {
    const Query q1 = example_query();
    CHECK(match_count_reference(q1, example_object(0)) == 1);
    CHECK(match_count_reference(q1, example_object(1)) == 3);
    CHECK(match_count_reference(q1, example_object(2)) == 2);
}

TEST_CASE("match count with no range overlap is zero", "[model]") {
    const Query q(0, {QueryItem(0, 5, 9)}, 1);
    CHECK(match_count_reference(q, ObjectRecord(0, {{0, 1}})) == 0);
}

TEST_CASE("match count counts every matching token of a multi-token dim", "[model]") {
    const Query q(0, {QueryItem(0, 1, 4)}, 1);
    const ObjectRecord obj(0, {{0, 1}, {0, 2}, {0, 7}});
    CHECK(match_count_reference(q, obj) == 2);
}

TEST_CASE("match count is permutation invariant", "[model]") {
    std::mt19937 rng(41);
    std::uniform_int_distribution<int> dim(0, 3), tok(0, 9), len(1, 8);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Keyword> kws;
        for (int i = 0; i < len(rng); ++i) {
            const Keyword kw{static_cast<DimId>(dim(rng)), static_cast<Token>(tok(rng))};
            if (std::find(kws.begin(), kws.end(), kw) == kws.end()) kws.push_back(kw);
        }
        std::vector<QueryItem> items;
        for (int i = 0; i < len(rng); ++i) {
            const Token lo = static_cast<Token>(tok(rng));
            items.push_back(QueryItem(static_cast<DimId>(dim(rng)), lo,
                                      lo + static_cast<Token>(tok(rng))));
        }
        const Query q(0, items, 1);
        auto shuffled_kws = kws;
        std::shuffle(shuffled_kws.begin(), shuffled_kws.end(), rng);
        auto shuffled_items = items;
        std::shuffle(shuffled_items.begin(), shuffled_items.end(), rng);
        const Query q2(0, shuffled_items, 1);
        CHECK(match_count_reference(q, ObjectRecord(0, kws)) ==
              match_count_reference(q2, ObjectRecord(0, shuffled_kws)));
    }
}

TEST_CASE("adding keywords moves the count by exactly the match", "[model]") {
    const Query q = example_query();
    std::vector<Keyword> kws = {{0, 1}};
    const std::uint32_t base = match_count_reference(q, ObjectRecord(0, kws));
    kws.push_back({1, 3}); // outside (1,[1,1])
    CHECK(match_count_reference(q, ObjectRecord(0, kws)) == base);
    kws.push_back({1, 1}); // inside
    CHECK(match_count_reference(q, ObjectRecord(0, kws)) == base + 1);
}

TEST_CASE("relational tuples encode one keyword per attribute", "[model]") {
    const RelationalSchema schema({4, 4, 4});
    const ObjectRecord o1 = encode_relational_tuple(schema, std::vector<Token>{1, 2, 1}, 0);
    REQUIRE(o1.keywords().size() == 3);
    CHECK(o1.keywords()[0] == Keyword{0, 1});
    CHECK(o1.keywords()[1] == Keyword{1, 2});
    CHECK(o1.keywords()[2] == Keyword{2, 1});

    const ObjectRecord zero = encode_relational_tuple(RelationalSchema({2, 2}),
                                                      std::vector<Token>{0, 0}, 7);
    CHECK(zero.keywords() == std::vector<Keyword>{{0, 0}, {1, 0}});

    CHECK_THROWS_AS(RelationalSchema({}), ContractError);
    CHECK_THROWS_AS(encode_relational_tuple(schema, std::vector<Token>{1, 2, 9}, 0), DataError);
    CHECK_THROWS_AS(encode_relational_tuple(schema, std::vector<Token>{1, 2}, 0), ContractError);
}

TEST_CASE("relational queries clamp ranges into the domain", "[model]") {
    const RelationalSchema schema({4, 4, 4});
    const std::vector<AttributeRange> fig1 = {{0, 1, 2}, {1, 1, 1}, {2, 2, 3}};
    const Query q1 = encode_relational_query(schema, fig1, 1);
    REQUIRE(q1.items.size() == 3);
    CHECK(q1.items[2].hi == 3);

    // full-domain range
    const Query full = encode_relational_query(schema, std::vector<AttributeRange>{{0, 0, 3}}, 1);
    CHECK(full.items[0].lo == 0);
    CHECK(full.items[0].hi == 3);

    // windowed point query on a 1024-bin attribute clamps at the edges
    const RelationalSchema wide({1024});
    const Query window =
        encode_relational_query(wide, std::vector<AttributeRange>{{0, 20 - 50, 20 + 50}}, 1);
    CHECK(window.items[0].lo == 0);
    CHECK(window.items[0].hi == 70);
    const Query window_hi =
        encode_relational_query(wide, std::vector<AttributeRange>{{0, 1000 - 50, 1000 + 50}}, 1);
    CHECK(window_hi.items[0].hi == 1023);

    // empty after clamping
    CHECK_THROWS_AS(encode_relational_query(schema, std::vector<AttributeRange>{{0, 9, 12}}, 1),
                    DataError);
}
