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

#include <random>
#include <set>

#include "mcx/sa.hpp"

using namespace mcx;

namespace {

// independent reference DP for cross-checking the library's edit distance
std::uint32_t dp_edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::vector<std::uint32_t>> dp(a.size() + 1,
                                               std::vector<std::uint32_t>(b.size() + 1));
    for (std::size_t i = 0; i <= a.size(); ++i) dp[i][0] = static_cast<std::uint32_t>(i);
    for (std::size_t j = 0; j <= b.size(); ++j) dp[0][j] = static_cast<std::uint32_t>(j);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            dp[i][j] = std::min({dp[i - 1][j] + 1, dp[i][j - 1] + 1,
                                 dp[i - 1][j - 1] + (a[i - 1] != b[j - 1] ? 1 : 0)});
        }
    }
    return dp[a.size()][b.size()];
}

std::string random_string(std::mt19937& rng, std::size_t len, int alphabet) {
    std::uniform_int_distribution<int> ch(0, alphabet - 1);
    std::string s(len, 'a');
    for (auto& c : s) c = static_cast<char>('a' + ch(rng));
    return s;
}

std::string mutate(std::string s, std::mt19937& rng, std::size_t edits, int alphabet) {
    std::uniform_int_distribution<int> op(0, 2), ch(0, alphabet - 1);
    for (std::size_t e = 0; e < edits && !s.empty(); ++e) {
        const std::size_t pos = rng() % s.size();
        switch (op(rng)) {
            case 0: s[pos] = static_cast<char>('a' + ch(rng)); break;
            case 1: s.erase(pos, 1); break;
            default: s.insert(pos, 1, static_cast<char>('a' + ch(rng))); break;
        }
    }
    return s;
}

} // namespace

TEST_CASE("ordered grams on the worked sequence", "[sa]") {
    const auto grams = decompose_sequence("aabaab", 3);
    const std::vector<OrderedNGram> expected = {
        {"aab", 0}, {"aba", 0}, {"baa", 0}, {"aab", 1}};
    CHECK(grams == expected);

    CHECK(decompose_sequence("ab", 3).empty());

    const auto runs = decompose_sequence("aaaa", 2);
    const std::vector<OrderedNGram> expected_runs = {{"aa", 0}, {"aa", 1}, {"aa", 2}};
    CHECK(runs == expected_runs);

    CHECK_THROWS_AS(decompose_sequence("abc", 0), ContractError);
}

TEST_CASE("window count matches the decomposition size", "[sa]") {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t len = rng() % 30;
        const std::string s = random_string(rng, len, 3);
        const auto grams = decompose_sequence(s, 3);
        CHECK(grams.size() == (len >= 3 ? len - 2 : 0));
    }
}

TEST_CASE("shared gram counts on the worked pairs", "[sa]") {
    CHECK(shared_gram_count("aabaab", "aabaab", 3) == 4);
    CHECK(shared_gram_count("aabaab", "abab", 3) == 1); // only aba is shared
    CHECK(shared_gram_count("aaaa", "bbbb", 2) == 0);
}

TEST_CASE("gram encoding realizes the min-count rule through match counts", "[sa]") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::string s = random_string(rng, 3 + rng() % 25, 2);
        const std::string q = random_string(rng, 3 + rng() % 25, 2);
        const std::vector<std::string> corpus = {s, q};
        const GramCodec codec = GramCodec::build(corpus, 3);
        const ObjectRecord obj = codec.encode(s, 0);
        const auto query = codec.encode_query(q, 1);
        const std::uint64_t expected = shared_gram_count(s, q, 3);
        if (!query) {
            CHECK(expected == 0);
        } else {
            CHECK(match_count_reference(*query, obj) == expected);
        }
    }
}

TEST_CASE("count lower bound arithmetic", "[sa]") {
    CHECK(count_lower_bound(40, 40, 3, 2) == 32);
    CHECK(count_lower_bound(10, 10, 3, 5) <= 0); // vacuous filter
    CHECK_THROWS_AS(count_lower_bound(10, 10, 0, 1), ContractError);
}

TEST_CASE("edit distance classics", "[sa]") {
    CHECK(edit_distance("kitten", "sitting") == 3);
    CHECK(edit_distance("same", "same") == 0);
    CHECK(edit_distance("", "abc") == 3);
    CHECK(edit_distance("abc", "") == 3);
}

TEST_CASE("edit distance equals the reference DP on random pairs", "[sa]") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        const std::string a = random_string(rng, rng() % 40, 3);
        const std::string b = random_string(rng, rng() % 40, 3);
        const std::uint32_t expected = dp_edit_distance(a, b);
        CHECK(edit_distance(a, b) == expected);
        // banded variant: exact within the cap, cap+1 beyond it
        const std::uint32_t cap = rng() % 12;
        const std::uint32_t bounded = edit_distance_bounded(a, b, cap);
        if (expected <= cap) {
            CHECK(bounded == expected);
        } else {
            CHECK(bounded == cap + 1);
        }
    }
}

TEST_CASE("gram-count bound is sound against true edit distance", "[sa]") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        const std::string s = random_string(rng, 5 + rng() % 40, 4);
        const std::string q = mutate(s, rng, rng() % 8, 4);
        const std::uint32_t tau = dp_edit_distance(s, q);
        const std::int64_t bound = count_lower_bound(static_cast<std::int64_t>(q.size()),
                                                     static_cast<std::int64_t>(s.size()), 3, tau);
        CHECK(static_cast<std::int64_t>(shared_gram_count(s, q, 3)) >= bound);
    }
}

TEST_CASE("certificate inequality is strict", "[sa]") {
    CHECK(topk_certificate(5, 40, 3, 2));       // 5 < 32
    CHECK_FALSE(topk_certificate(32, 40, 3, 2)); // equality fails
    CHECK_FALSE(topk_certificate(33, 40, 3, 2));
}

TEST_CASE("verification with a single candidate", "[sa]") {
    const std::vector<std::string> corpus = {"abcdef", "zzzzzz"};
    const std::vector<CandidateHit> hits = {{0, 4}};
    const auto out = verify_candidates("abcdxf", hits, 3, corpus, 1);
    CHECK(out.best_id == 0);
    CHECK(out.best_distance == 1);
    CHECK(out.candidates_used == 1);

    CHECK_THROWS_AS(verify_candidates("abc", {}, 3, corpus), ContractError);
}

TEST_CASE("the filtering bound breaks the loop early", "[sa]") {
    // best distance 0 after the first candidate pushes theta to |Q|+1,
    // above any count, so the loop never touches the second candidate
    const std::vector<std::string> corpus = {"abcdefgh", "abcdefgx"};
    const std::vector<CandidateHit> hits = {{0, 6}, {1, 5}};
    const auto out = verify_candidates("abcdefgh", hits, 3, corpus, 2);
    CHECK(out.best_id == 0);
    CHECK(out.best_distance == 0);
    CHECK(out.candidates_used == 1);
    CHECK(out.threshold_at_stop > 6);
}

TEST_CASE("early break never changes the winner", "[sa]") {
    std::mt19937 rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::string> corpus;
        for (int i = 0; i < 20; ++i) corpus.push_back(random_string(rng, 10 + rng() % 10, 3));
        const std::string query = mutate(corpus[rng() % corpus.size()], rng, rng() % 5, 3);
        std::vector<CandidateHit> hits;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            hits.push_back(CandidateHit{static_cast<ObjectId>(i),
                                        static_cast<std::uint32_t>(
                                            shared_gram_count(corpus[i], query, 3))});
        }
        std::sort(hits.begin(), hits.end(), [](const CandidateHit& a, const CandidateHit& b) {
            if (a.count != b.count) return a.count > b.count;
            return a.id < b.id;
        });
        const auto with_break = verify_candidates(query, hits, 3, corpus, hits.size(), true);
        const auto no_break = verify_candidates(query, hits, 3, corpus, hits.size(), false);
        CHECK(with_break.best_distance == no_break.best_distance);
        CHECK(with_break.best_id == no_break.best_id);
    }
}

TEST_CASE("documents deduplicate and intersect", "[sa]") {
    CHECK(tokenize_document("a b a").size() == 2);
    CHECK(tokenize_document("The the THE").size() == 1);
    CHECK(tokenize_document("the cat", {"the"}).size() == 1);

    const std::vector<std::string> corpus = {"big data engine", "data data lake"};
    const DocumentCodec codec = DocumentCodec::build(corpus);
    const ObjectRecord d0 = codec.encode(corpus[0], 0);
    const ObjectRecord d1 = codec.encode(corpus[1], 1);
    const auto q = codec.encode_query("engine data", 2);
    REQUIRE(q.has_value());
    CHECK(match_count_reference(*q, d0) == 2);
    CHECK(match_count_reference(*q, d1) == 1);

    // identical documents match on every distinct word
    const auto self = codec.encode_query(corpus[0], 1);
    CHECK(match_count_reference(*self, d0) == 3);

    CHECK_FALSE(codec.encode_query("unseen words only", 1).has_value());
}

TEST_CASE("document match counts equal set intersections", "[sa]") {
    std::mt19937 rng(17);
    const std::vector<std::string> words = {"red", "green", "blue", "cyan", "teal",
                                            "gray", "pink", "gold", "jade", "rust"};
    for (int trial = 0; trial < 100; ++trial) {
        auto pick = [&]() {
            std::set<std::string> s;
            const std::size_t n = 1 + rng() % 6;
            while (s.size() < n) s.insert(words[rng() % words.size()]);
            std::string joined;
            for (const auto& w : s) joined += w + " ";
            return std::make_pair(joined, s);
        };
        const auto [doc_text, doc_set] = pick();
        const auto [q_text, q_set] = pick();
        const std::vector<std::string> corpus = {doc_text};
        const DocumentCodec codec = DocumentCodec::build(corpus);
        const ObjectRecord obj = codec.encode(doc_text, 0);
        const auto query = codec.encode_query(q_text, 1);
        std::size_t common = 0;
        for (const auto& w : q_set) common += doc_set.contains(w);
        if (!query) {
            CHECK(common == 0);
        } else {
            CHECK(match_count_reference(*query, obj) == common);
        }
    }
}

TEST_CASE("certified searches match the exhaustive scan", "[sa][e2e]") {
    std::mt19937 rng(19);
    std::vector<std::string> corpus;
    for (int i = 0; i < 400; ++i) corpus.push_back(random_string(rng, 20, 6));
    const SequenceSearcher searcher(corpus, 3);
    EngineConfig config;
    config.mode = ExecMode::sequential;

    int certified = 0;
    for (int t = 0; t < 60; ++t) {
        const std::string query = mutate(corpus[rng() % corpus.size()], rng, 1 + rng() % 3, 6);
        const auto result = searcher.search_once(query, 16, config);

        std::uint32_t best = dp_edit_distance(query, corpus[0]);
        for (std::size_t i = 1; i < corpus.size(); ++i) {
            best = std::min(best, dp_edit_distance(query, corpus[i]));
        }
        if (result.outcome.certified) {
            ++certified;
            CHECK(result.outcome.best_distance == best);
        }
        // escalation ends certified and exact, scan fallback included
        const auto sure = searcher.search_certified(query, std::vector<std::uint32_t>{16, 64},
                                                    config);
        CHECK(sure.outcome.certified);
        CHECK(sure.outcome.best_distance == best);
    }
    CHECK(certified > 0); // the certificate must actually fire on this workload
}
