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
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mcx/engine.hpp"
#include "mcx/error.hpp"
#include "mcx/model.hpp"

namespace mcx {

// ---------------------------------------------------------------------------
// Ordered n-grams
// ---------------------------------------------------------------------------

/// A sliding-window gram made unique by its occurrence index: the i-th copy
/// of the same gram in a sequence is the pair (gram, i).
struct OrderedNGram {
    std::string gram;
    std::uint32_t occurrence = 0;

    friend bool operator==(const OrderedNGram&, const OrderedNGram&) = default;
};

inline std::vector<OrderedNGram> decompose_sequence(std::string_view text, std::uint32_t n) {
    if (n == 0) throw ContractError("gram length must be >= 1");
    std::vector<OrderedNGram> grams;
    if (text.size() < n) return grams;
    grams.reserve(text.size() - n + 1);
    std::unordered_map<std::string_view, std::uint32_t> seen;
    for (std::size_t i = 0; i + n <= text.size(); ++i) {
        const std::string_view window = text.substr(i, n);
        grams.push_back(OrderedNGram{std::string(window), seen[window]++});
    }
    return grams;
}

/// Number of grams shared between two sequences, counting a gram that occurs
/// c_s times in one and c_q times in the other as min(c_s, c_q).
inline std::uint64_t shared_gram_count(std::string_view s, std::string_view q, std::uint32_t n) {
    if (n == 0) throw ContractError("gram length must be >= 1");
    auto windows = [n](std::string_view text) {
        std::vector<std::string_view> w;
        if (text.size() >= n) {
            w.reserve(text.size() - n + 1);
            for (std::size_t i = 0; i + n <= text.size(); ++i) w.push_back(text.substr(i, n));
        }
        std::sort(w.begin(), w.end());
        return w;
    };
    const auto ws = windows(s);
    const auto wq = windows(q);
    std::uint64_t shared = 0;
    std::size_t i = 0, j = 0;
    while (i < ws.size() && j < wq.size()) {
        if (ws[i] < wq[j]) {
            ++i;
        } else if (wq[j] < ws[i]) {
            ++j;
        } else {
            const std::string_view g = ws[i];
            std::size_t ci = 0, cj = 0;
            while (i < ws.size() && ws[i] == g) ++i, ++ci;
            while (j < wq.size() && wq[j] == g) ++j, ++cj;
            shared += std::min(ci, cj);
        }
    }
    return shared;
}

/// Gram-count lower bound implied by an edit distance of tau:
/// max(qlen, slen) - n + 1 - tau * n. Non-positive means the filter is
/// vacuous for that tau.
inline std::int64_t count_lower_bound(std::int64_t qlen, std::int64_t slen, std::int64_t n,
                                      std::int64_t tau) {
    if (n < 1) throw ContractError("gram length must be >= 1");
    return std::max(qlen, slen) - n + 1 - tau * n;
}

// ---------------------------------------------------------------------------
// Edit distance
// ---------------------------------------------------------------------------

/// Exact Levenshtein distance, unit costs, two-row dynamic program.
inline std::uint32_t edit_distance(std::string_view a, std::string_view b) {
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::uint32_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = static_cast<std::uint32_t>(j);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::uint32_t diag = row[0];
        row[0] = static_cast<std::uint32_t>(i);
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::uint32_t up = row[j];
            row[j] = std::min({up + 1, row[j - 1] + 1, diag + (a[i - 1] != b[j - 1] ? 1u : 0u)});
            diag = up;
        }
    }
    return row[b.size()];
}

/// Banded variant: exact when the distance is <= cap, otherwise returns
/// cap + 1. Exits as soon as every band cell exceeds cap.
inline std::uint32_t edit_distance_bounded(std::string_view a, std::string_view b,
                                           std::uint32_t cap) {
    const std::size_t la = a.size(), lb = b.size();
    const std::size_t diff = la > lb ? la - lb : lb - la;
    if (diff > cap) return cap + 1;
    const std::uint32_t inf = cap + 1;
    std::vector<std::uint32_t> row(lb + 1, inf);
    for (std::size_t j = 0; j <= std::min<std::size_t>(lb, cap); ++j) {
        row[j] = static_cast<std::uint32_t>(j);
    }
    for (std::size_t i = 1; i <= la; ++i) {
        const std::size_t jlo = i > cap ? i - cap : 0;
        const std::size_t jhi = std::min<std::size_t>(lb, i + cap);
        std::uint32_t diag = jlo > 0 ? row[jlo - 1] : (i == 1 ? 0 : inf);
        if (jlo > 0) row[jlo - 1] = inf; // slides out of the band
        std::uint32_t best = inf;
        for (std::size_t j = jlo; j <= jhi; ++j) {
            const std::uint32_t up = row[j];
            std::uint32_t v = inf;
            if (j == 0) {
                v = static_cast<std::uint32_t>(i);
            } else {
                const std::uint32_t left = row[j - 1];
                v = std::min(diag + (a[i - 1] != b[j - 1] ? 1u : 0u),
                             std::min(up, left) == inf ? inf : std::min(up, left) + 1);
                if (v > inf) v = inf;
            }
            row[j] = std::min(v, inf);
            best = std::min(best, row[j]);
            diag = up;
        }
        if (jhi < lb) row[jhi + 1] = inf; // right edge stays outside the band
        if (best > cap) return cap + 1;
    }
    return std::min(row[lb], inf);
}

// ---------------------------------------------------------------------------
// Keyword encoding for ordered n-grams
// ---------------------------------------------------------------------------

namespace detail {

inline DimId gram_dim(std::string_view gram) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : gram) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    h = mix64(h);
    return static_cast<DimId>(h & 0xffffu);
}

} // namespace detail

/// Maps ordered n-grams onto index keywords: dim is a stable 16-bit hash
/// bucket of the gram string, token packs (per-dim gram ordinal, occurrence)
/// into 32 bits. Distinct grams falling into one dim are disambiguated by a
/// vocabulary fixed at build time, so data-side encodings never collide.
class GramCodec {
public:
    static GramCodec build(std::span<const std::string> corpus, std::uint32_t n) {
        if (n == 0) throw ContractError("gram length must be >= 1");
        GramCodec codec;
        codec.n_ = n;
        std::map<std::pair<DimId, std::string>, Token> ordinals;
        for (const std::string& text : corpus) {
            if (text.size() < n) continue;
            for (std::size_t i = 0; i + n <= text.size(); ++i) {
                const std::string_view window = std::string_view(text).substr(i, n);
                ordinals.emplace(std::make_pair(detail::gram_dim(window), std::string(window)), 0);
            }
        }
        DimId current_dim = 0;
        Token next_ordinal = 0;
        bool first = true;
        for (auto& [key, ordinal] : ordinals) {
            if (first || key.first != current_dim) {
                current_dim = key.first;
                next_ordinal = 0;
                first = false;
            }
            if (next_ordinal > 0xffffu) {
                throw DataError("more than 65536 distinct grams share one dim bucket");
            }
            ordinal = next_ordinal++;
            codec.vocab_.emplace(key, ordinal);
        }
        return codec;
    }

    std::uint32_t n() const noexcept { return n_; }

    /// Encodes a corpus sequence; every gram must be in the vocabulary.
    ObjectRecord encode(std::string_view text, ObjectId id) const {
        std::vector<Keyword> kws;
        for_each_gram(text, [&](std::string_view gram, std::uint32_t occurrence) {
            const auto kw = keyword_for(gram, occurrence);
            if (!kw) throw ContractError("sequence contains a gram outside the vocabulary");
            kws.push_back(*kw);
        });
        return ObjectRecord(id, std::move(kws));
    }

    /// Encodes a query sequence. Grams absent from the vocabulary cannot
    /// match any indexed sequence and are dropped; when nothing remains the
    /// query is unanswerable through the index (nullopt).
    std::optional<Query> encode_query(std::string_view text, std::uint32_t k,
                                      std::uint32_t query_id = 0) const {
        std::vector<QueryItem> items;
        for_each_gram(text, [&](std::string_view gram, std::uint32_t occurrence) {
            if (const auto kw = keyword_for(gram, occurrence)) {
                items.push_back(QueryItem::point(kw->dim, kw->token));
            }
        });
        if (items.empty()) return std::nullopt;
        return Query(query_id, std::move(items), k);
    }

    std::optional<Keyword> keyword_for(std::string_view gram, std::uint32_t occurrence) const {
        if (occurrence > 0xffffu) throw DataError("gram occurrence index exceeds 16 bits");
        const DimId dim = detail::gram_dim(gram);
        const auto it = vocab_.find(std::make_pair(dim, std::string(gram)));
        if (it == vocab_.end()) return std::nullopt;
        return Keyword{dim, (it->second << 16) | occurrence};
    }

private:
    template <typename Fn>
    void for_each_gram(std::string_view text, Fn&& fn) const {
        if (text.size() < n_) return;
        std::unordered_map<std::string_view, std::uint32_t> seen;
        for (std::size_t i = 0; i + n_ <= text.size(); ++i) {
            const std::string_view window = text.substr(i, n_);
            fn(window, seen[window]++);
        }
    }

    std::uint32_t n_ = 0;
    std::map<std::pair<DimId, std::string>, Token> vocab_;
};

// ---------------------------------------------------------------------------
// Candidate verification (assembly step)
// ---------------------------------------------------------------------------

struct CandidateHit {
    ObjectId id = 0;
    std::uint32_t count = 0;
};

struct VerificationOutcome {
    ObjectId best_id = 0;
    std::uint32_t best_distance = 0;
    bool certified = false;
    std::uint32_t candidates_used = 0;  // candidates examined before stopping
    std::int64_t threshold_at_stop = 0; // filtering bound at loop exit
};

inline bool topk_certificate(std::int64_t c_k, std::int64_t qlen, std::int64_t n,
                             std::int64_t tau_kprime) {
    return c_k < qlen - n + 1 - tau_kprime * n;
}

/// Verifies top-count candidates against true edit distance. Candidates must
/// be sorted by descending count. The loop breaks as soon as the filtering
/// bound exceeds the next candidate's count (no remaining candidate can be
/// strictly closer), and skips candidates whose length difference already
/// exceeds the best distance. `requested_k` is the K the candidates were
/// asked for; when fewer exist, every unreturned sequence shares no gram and
/// the certificate is evaluated with a K-th count of zero.
inline VerificationOutcome verify_candidates(std::string_view query,
                                             std::span<const CandidateHit> candidates,
                                             std::uint32_t n, std::span<const std::string> corpus,
                                             std::size_t requested_k = 0,
                                             bool early_break = true) {
    if (candidates.empty()) throw ContractError("verify_candidates: empty candidate list");
    if (requested_k == 0) requested_k = candidates.size();
    const std::int64_t qlen = static_cast<std::int64_t>(query.size());

    VerificationOutcome out;
    out.best_id = candidates[0].id;
    out.best_distance = edit_distance(query, corpus[candidates[0].id]);
    out.candidates_used = 1;
    std::int64_t theta = qlen - n + 1 -
                         static_cast<std::int64_t>(n) * (static_cast<std::int64_t>(out.best_distance) - 1);

    for (std::size_t j = 1; j < candidates.size(); ++j) {
        if (early_break && theta > static_cast<std::int64_t>(candidates[j].count)) break;
        ++out.candidates_used;
        const std::string& text = corpus[candidates[j].id];
        const std::int64_t len_diff =
            std::abs(static_cast<std::int64_t>(text.size()) - qlen);
        if (len_diff > static_cast<std::int64_t>(out.best_distance)) continue;
        if (out.best_distance == 0) continue; // cannot improve on an exact match
        const std::uint32_t dist = edit_distance_bounded(query, text, out.best_distance - 1);
        if (dist < out.best_distance) {
            out.best_distance = dist;
            out.best_id = candidates[j].id;
            theta = qlen - n + 1 -
                    static_cast<std::int64_t>(n) * (static_cast<std::int64_t>(dist) - 1);
        }
    }

    const std::int64_t c_k =
        candidates.size() >= requested_k ? static_cast<std::int64_t>(candidates.back().count) : 0;
    out.certified = topk_certificate(c_k, qlen, n, out.best_distance);
    out.threshold_at_stop = theta;
    return out;
}

// ---------------------------------------------------------------------------
// Documents
// ---------------------------------------------------------------------------

/// Lowercased whitespace tokens minus stop words, deduplicated.
inline std::vector<std::string> tokenize_document(std::string_view text,
                                                  const std::set<std::string>& stop_words = {}) {
    std::set<std::string> words;
    std::string current;
    auto flush = [&]() {
        if (!current.empty() && !stop_words.contains(current)) words.insert(current);
        current.clear();
    };
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            flush();
        } else {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        }
    }
    flush();
    return std::vector<std::string>(words.begin(), words.end());
}

/// Build-time word vocabulary for the document adapter; the match count of
/// two encoded documents is the size of their word-set intersection.
class DocumentCodec {
public:
    static DocumentCodec build(std::span<const std::string> corpus,
                               std::set<std::string> stop_words = {}) {
        DocumentCodec codec;
        codec.stop_words_ = std::move(stop_words);
        std::set<std::string> all;
        for (const std::string& doc : corpus) {
            for (std::string& w : tokenize_document(doc, codec.stop_words_)) {
                all.insert(std::move(w));
            }
        }
        Token next = 0;
        for (const std::string& w : all) codec.vocab_.emplace(w, next++);
        return codec;
    }

    std::size_t vocabulary_size() const noexcept { return vocab_.size(); }

    ObjectRecord encode(std::string_view text, ObjectId id) const {
        std::vector<Keyword> kws;
        for (const std::string& w : tokenize_document(text, stop_words_)) {
            const auto it = vocab_.find(w);
            if (it == vocab_.end()) throw ContractError("document word outside the vocabulary");
            kws.push_back(Keyword{0, it->second});
        }
        return ObjectRecord(id, std::move(kws));
    }

    std::optional<Query> encode_query(std::string_view text, std::uint32_t k,
                                      std::uint32_t query_id = 0) const {
        std::vector<QueryItem> items;
        for (const std::string& w : tokenize_document(text, stop_words_)) {
            if (const auto it = vocab_.find(w); it != vocab_.end()) {
                items.push_back(QueryItem::point(0, it->second));
            }
        }
        if (items.empty()) return std::nullopt;
        return Query(query_id, std::move(items), k);
    }

private:
    std::set<std::string> stop_words_;
    std::unordered_map<std::string, Token> vocab_;
};

// ---------------------------------------------------------------------------
// End-to-end sequence search
// ---------------------------------------------------------------------------

/// Default candidate-list escalation when a round fails to certify.
inline constexpr std::uint32_t kDefaultCandidateSchedule[] = {32, 64, 128, 256};

/// Index-backed 1-NN sequence search under edit distance: retrieve the K
/// highest-count candidates through the inverted index, then verify.
class SequenceSearcher {
public:
    SequenceSearcher(std::vector<std::string> corpus, std::uint32_t n,
                     std::optional<std::uint32_t> split_threshold = std::nullopt)
        : corpus_(std::move(corpus)), n_(n), codec_(GramCodec::build(corpus_, n)) {
        std::vector<ObjectRecord> records;
        records.reserve(corpus_.size());
        for (std::size_t i = 0; i < corpus_.size(); ++i) {
            records.push_back(codec_.encode(corpus_[i], static_cast<ObjectId>(i)));
        }
        index_ = build_index(records, split_threshold);
    }

    struct SearchResult {
        VerificationOutcome outcome;
        std::vector<CandidateHit> candidates;
        bool answered_by_scan = false;
    };

    const InvertedIndex& index() const noexcept { return index_; }
    const GramCodec& codec() const noexcept { return codec_; }
    std::span<const std::string> corpus() const noexcept { return corpus_; }

    std::vector<CandidateHit> retrieve(std::string_view query_text, std::uint32_t big_k,
                                       const EngineConfig& config = {}) const {
        const std::optional<Query> query = codec_.encode_query(query_text, big_k);
        if (!query) return {};
        const BatchResult batch = execute_batch(index_, std::span<const Query>(&*query, 1), config);
        std::vector<CandidateHit> hits;
        hits.reserve(batch.results[0].entries.size());
        for (const TopKEntry& e : batch.results[0].entries) {
            hits.push_back(CandidateHit{e.id, e.count});
        }
        return hits;
    }

    /// One retrieval round with a fixed K; the outcome may or may not carry
    /// a certificate.
    SearchResult search_once(std::string_view query_text, std::uint32_t big_k = 32,
                             const EngineConfig& config = {}) const {
        if (corpus_.empty()) throw ContractError("empty corpus");
        SearchResult result;
        result.candidates = retrieve(query_text, big_k, config);
        if (result.candidates.empty()) {
            // nothing shares a gram with the query; only a scan can answer
            result.outcome = scan(query_text);
            result.answered_by_scan = true;
            return result;
        }
        result.outcome =
            verify_candidates(query_text, result.candidates, n_, corpus_, big_k);
        return result;
    }

    /// Escalates K through the schedule until a round certifies, then falls
    /// back to a full scan, which is exact by construction.
    SearchResult search_certified(std::string_view query_text,
                                  std::span<const std::uint32_t> schedule =
                                      kDefaultCandidateSchedule,
                                  const EngineConfig& config = {}) const {
        SearchResult last;
        for (std::uint32_t big_k : schedule) {
            last = search_once(query_text, big_k, config);
            if (last.outcome.certified) return last;
        }
        last.outcome = scan(query_text);
        last.answered_by_scan = true;
        return last;
    }

private:
    VerificationOutcome scan(std::string_view query_text) const {
        VerificationOutcome out;
        out.best_id = 0;
        out.best_distance = edit_distance(query_text, corpus_[0]);
        for (std::size_t i = 1; i < corpus_.size() && out.best_distance > 0; ++i) {
            const std::uint32_t d =
                edit_distance_bounded(query_text, corpus_[i], out.best_distance - 1);
            if (d < out.best_distance) {
                out.best_distance = d;
                out.best_id = static_cast<ObjectId>(i);
            }
        }
        out.certified = true; // exhaustive comparison
        out.candidates_used = static_cast<std::uint32_t>(corpus_.size());
        out.threshold_at_stop = 0;
        return out;
    }

    std::vector<std::string> corpus_;
    std::uint32_t n_;
    GramCodec codec_;
    InvertedIndex index_;
};

} // namespace mcx
