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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "mcx/cpq.hpp"
#include "mcx/index.hpp"
#include "mcx/select.hpp"

namespace mcx {

enum class Selector { cpq, bucket, sort };
enum class ExecMode { parallel, sequential };

struct EngineConfig {
    Selector selector = Selector::cpq;
    ExecMode mode = ExecMode::parallel;
    std::uint32_t workers = 0;           // 0: one per hardware thread
    std::uint32_t span_chunk = 4096;     // ids per task chunk, echoes the 4K sub-list limit
    std::uint32_t max_spans_per_task = 2; // chunks grouped into one task
};

struct StageTimings {
    std::uint64_t lookup_ns = 0;
    std::uint64_t match_ns = 0;
    std::uint64_t select_ns = 0;
    std::uint64_t merge_ns = 0;
    std::uint64_t total_ns = 0;
};

struct MemoryStats {
    std::size_t counter_bytes = 0; // packed per-object counters, summed over queries
    std::size_t gate_bytes = 0;
    std::size_t table_bytes = 0;
};

struct BatchResult {
    std::vector<TopKResult> results; // one per query, in request order
    StageTimings timings;
    MemoryStats memory;
};

namespace detail {

struct Chunk {
    std::uint32_t query = 0;
    std::uint64_t begin = 0;
    std::uint64_t end = 0;
};

struct Task {
    std::uint32_t first_chunk = 0;
    std::uint32_t chunk_count = 0;
};

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    std::uint64_t lap() {
        const auto now = std::chrono::steady_clock::now();
        const auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(now - start_).count();
        start_ = now;
        return static_cast<std::uint64_t>(ns);
    }

private:
    std::chrono::steady_clock::time_point start_;
};

/// Runs fn(task_index) for every index in [0, count), either inline in
/// deterministic order or pulled from a shared cursor by worker threads.
/// The first exception wins and is rethrown after all workers stop.
template <typename Fn>
void run_tasks(std::size_t count, ExecMode mode, std::uint32_t workers, Fn&& fn) {
    if (mode == ExecMode::sequential || workers == 1 || count == 0) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::uint32_t n = workers;
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&]() {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1, std::memory_order_relaxed);
            if (i >= count || failed.load(std::memory_order_relaxed)) return;
            try {
                fn(i);
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(n);
    for (std::uint32_t t = 0; t < n; ++t) threads.emplace_back(body);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);
}

inline void attach_query_id(const Query& query, const char* stage) {
    try {
        throw;
    } catch (const InvariantError& e) {
        throw InvariantError("query " + std::to_string(query.id) + " (" + stage + "): " + e.what());
    } catch (const ContractError& e) {
        throw ContractError("query " + std::to_string(query.id) + " (" + stage + "): " + e.what());
    }
}

} // namespace detail

/// Hash over a batch's results; equal batches hash equal. Used by the
/// benchmark to assert selector and worker-count invariance.
inline std::uint64_t hash_results(std::span<const TopKResult> results) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix_in = [&h](std::uint64_t v) { h = mix64(h ^ v); };
    for (const TopKResult& r : results) {
        mix_in(r.query_id);
        mix_in(r.threshold);
        mix_in(r.entries.size());
        for (const TopKEntry& e : r.entries) {
            mix_in((static_cast<std::uint64_t>(e.id) << 32) | e.count);
        }
    }
    return h;
}

/// Merges per-partition top-k lists (already translated to global ids) by
/// (count desc, id asc). Partitions must be disjoint, so a duplicate global
/// id is a configuration error.
inline TopKResult merge_topk(std::span<const TopKResult> locals, std::uint32_t k,
                             std::uint32_t query_id) {
    TopKResult merged;
    merged.query_id = query_id;
    for (const TopKResult& local : locals) {
        merged.entries.insert(merged.entries.end(), local.entries.begin(), local.entries.end());
    }
    std::sort(merged.entries.begin(), merged.entries.end(),
              [](const TopKEntry& a, const TopKEntry& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < merged.entries.size(); ++i) {
        if (merged.entries[i].id == merged.entries[i - 1].id) {
            throw ContractError("merge_topk: object " + std::to_string(merged.entries[i].id) +
                                " reported by more than one partition");
        }
    }
    std::sort(merged.entries.begin(), merged.entries.end(), TopKEntry::better);
    if (merged.entries.size() > k) merged.entries.resize(k);
    merged.threshold = merged.entries.size() >= k ? merged.entries.back().count : 0;
    return merged;
}

/// Executes a batch of queries against one index. Work is decomposed into
/// (query, span-chunk) tasks; every object id in every matched span causes
/// exactly one counter update on that query's selector state. Extraction
/// happens strictly after all tasks complete. Sequential mode processes the
/// same task list in deterministic order and must produce identical results.
inline BatchResult execute_batch(const InvertedIndex& index, std::span<const Query> queries,
                                 const EngineConfig& config = {}) {
    if (config.span_chunk == 0 || config.max_spans_per_task == 0) {
        throw ContractError("span_chunk and max_spans_per_task must be positive");
    }
    detail::Stopwatch total_clock;
    detail::Stopwatch clock;
    BatchResult batch;
    batch.results.resize(queries.size());

    // lookup stage: resolve items to span chunks and size the selector state
    std::vector<detail::Chunk> chunks;
    std::vector<detail::Task> tasks;
    std::vector<std::uint64_t> bounds(queries.size(), 0);
    {
        std::vector<PostingsSpan> spans;
        for (std::size_t q = 0; q < queries.size(); ++q) {
            spans.clear();
            for (const QueryItem& item : queries[q].items) index.lookup_into(item, spans);
            const std::size_t first = chunks.size();
            for (const PostingsSpan& span : spans) {
                for (std::uint64_t at = span.begin; at < span.end; at += config.span_chunk) {
                    chunks.push_back(detail::Chunk{static_cast<std::uint32_t>(q), at,
                                                   std::min<std::uint64_t>(at + config.span_chunk,
                                                                           span.end)});
                }
            }
            for (std::size_t c = first; c < chunks.size(); c += config.max_spans_per_task) {
                tasks.push_back(detail::Task{
                    static_cast<std::uint32_t>(c),
                    static_cast<std::uint32_t>(
                        std::min<std::size_t>(config.max_spans_per_task, chunks.size() - c))});
            }
            bounds[q] = index.max_count_bound(queries[q]);
        }
    }
    batch.timings.lookup_ns = clock.lap();

    const std::uint32_t n = index.num_objects();
    std::vector<std::unique_ptr<CountPriorityQueue>> cpqs;
    std::vector<std::unique_ptr<std::atomic<std::uint32_t>[]>> plain_counts;
    if (config.selector == Selector::cpq) {
        cpqs.resize(queries.size());
        for (std::size_t q = 0; q < queries.size(); ++q) {
            const std::uint64_t bound = std::max<std::uint64_t>(bounds[q], 1);
            try {
                if (bound > 0xffffu) {
                    throw ContractError("match-count bound " + std::to_string(bound) +
                                        " exceeds the counter range");
                }
                cpqs[q] = std::make_unique<CountPriorityQueue>(
                    n, static_cast<std::uint32_t>(bound), queries[q].k);
            } catch (...) {
                detail::attach_query_id(queries[q], "setup");
            }
            batch.memory.counter_bytes += cpqs[q]->counter_bytes();
            batch.memory.gate_bytes += cpqs[q]->gate_bytes();
            batch.memory.table_bytes += cpqs[q]->table_bytes();
        }
    } else {
        plain_counts.resize(queries.size());
        for (std::size_t q = 0; q < queries.size(); ++q) {
            plain_counts[q] = std::make_unique<std::atomic<std::uint32_t>[]>(n);
            for (std::uint32_t i = 0; i < n; ++i) {
                plain_counts[q][i].store(0, std::memory_order_relaxed);
            }
            batch.memory.counter_bytes += static_cast<std::size_t>(n) * 4;
        }
    }

    // match stage
    detail::run_tasks(tasks.size(), config.mode, config.workers, [&](std::size_t t) {
        const detail::Task& task = tasks[t];
        for (std::uint32_t c = 0; c < task.chunk_count; ++c) {
            const detail::Chunk& chunk = chunks[task.first_chunk + c];
            const auto ids =
                index.ids(PostingsSpan{chunk.begin, chunk.end});
            if (config.selector == Selector::cpq) {
                CountPriorityQueue& pq = *cpqs[chunk.query];
                try {
                    for (ObjectId id : ids) pq.update(id);
                } catch (...) {
                    detail::attach_query_id(queries[chunk.query], "match");
                }
            } else {
                auto* counts = plain_counts[chunk.query].get();
                for (ObjectId id : ids) {
                    counts[id].fetch_add(1, std::memory_order_relaxed);
                }
            }
        }
    });
    batch.timings.match_ns = clock.lap();

    // select stage (all updates for every query have completed)
    for (std::size_t q = 0; q < queries.size(); ++q) {
        if (config.selector == Selector::cpq) {
            batch.results[q] = cpqs[q]->extract(queries[q].id);
            continue;
        }
        std::vector<std::uint32_t> counts(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            counts[i] = plain_counts[q][i].load(std::memory_order_relaxed);
        }
        const std::size_t k_eff = std::min<std::size_t>(queries[q].k, counts.size());
        std::vector<TopKEntry> picked =
            config.selector == Selector::sort
                ? sort_topk(counts, k_eff)
                : bucket_kselect(counts, k_eff);
        TopKResult& result = batch.results[q];
        result.query_id = queries[q].id;
        result.threshold =
            queries[q].k <= counts.size() && !picked.empty() ? picked.back().count : 0;
        for (const TopKEntry& e : picked) {
            if (e.count > 0) result.entries.push_back(e);
        }
    }
    batch.timings.select_ns = clock.lap();
    batch.timings.total_ns = total_clock.lap();
    return batch;
}

/// Runs the batch on every partition in turn and merges the per-part top-k
/// lists into global results, translating local ids by each part's offset.
inline BatchResult execute_partitioned(std::span<const IndexPartition> partitions,
                                       std::span<const Query> queries,
                                       const EngineConfig& config = {}) {
    // partitions must cover the id space disjointly and completely
    std::uint64_t expected_offset = 0;
    for (const IndexPartition& part : partitions) {
        if (part.id_offset != expected_offset || part.index.num_objects() != part.size) {
            throw ContractError("partitions must be disjoint and contiguous");
        }
        expected_offset += part.size;
    }

    detail::Stopwatch total_clock;
    BatchResult batch;
    batch.results.resize(queries.size());
    std::vector<std::vector<TopKResult>> locals(queries.size());

    for (const IndexPartition& part : partitions) {
        BatchResult local = execute_batch(part.index, queries, config);
        batch.timings.lookup_ns += local.timings.lookup_ns;
        batch.timings.match_ns += local.timings.match_ns;
        batch.timings.select_ns += local.timings.select_ns;
        batch.memory.counter_bytes = std::max(batch.memory.counter_bytes,
                                              local.memory.counter_bytes);
        batch.memory.gate_bytes = std::max(batch.memory.gate_bytes, local.memory.gate_bytes);
        batch.memory.table_bytes = std::max(batch.memory.table_bytes, local.memory.table_bytes);
        for (std::size_t q = 0; q < queries.size(); ++q) {
            for (TopKEntry& e : local.results[q].entries) e.id += part.id_offset;
            locals[q].push_back(std::move(local.results[q]));
        }
    }

    detail::Stopwatch merge_clock;
    for (std::size_t q = 0; q < queries.size(); ++q) {
        batch.results[q] = merge_topk(locals[q], queries[q].k, queries[q].id);
    }
    batch.timings.merge_ns = merge_clock.lap();
    batch.timings.total_ns = total_clock.lap();
    return batch;
}

} // namespace mcx
