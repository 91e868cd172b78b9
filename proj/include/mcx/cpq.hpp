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
#include <bit>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "mcx/error.hpp"
#include "mcx/model.hpp"
#include "mcx/rng.hpp"

namespace mcx {

struct TopKEntry {
    ObjectId id = 0;
    std::uint32_t count = 0;

    friend constexpr bool operator==(const TopKEntry&, const TopKEntry&) = default;
    // result order: larger count first, smaller id on ties
    static constexpr bool better(const TopKEntry& a, const TopKEntry& b) noexcept {
        if (a.count != b.count) return a.count > b.count;
        return a.id < b.id;
    }
};

struct TopKResult {
    std::uint32_t query_id = 0;
    std::vector<TopKEntry> entries; // sorted by (count desc, id asc)
    std::uint32_t threshold = 0;    // the k-th match count (0 if fewer than k touched)
};

/// Bit-packed per-object counters. The width is the smallest of 4/8/16/32
/// bits that can hold max_count; exceeding max_count is a contract
/// violation, not saturation. Increments are lock-free and return the new
/// value exactly once per level.
class BitmapCounter {
public:
    BitmapCounter(std::uint32_t num_objects, std::uint32_t max_count)
        : num_objects_(num_objects), max_count_(max_count), width_(width_for(max_count)) {
        const std::uint64_t bits = static_cast<std::uint64_t>(num_objects) * width_;
        const std::size_t words = static_cast<std::size_t>((bits + 31) / 32);
        words_ = std::make_unique<std::atomic<std::uint32_t>[]>(words);
        for (std::size_t i = 0; i < words; ++i) words_[i].store(0, std::memory_order_relaxed);
    }

    static std::uint32_t width_for(std::uint32_t max_count) {
        for (std::uint32_t w : {4u, 8u, 16u}) {
            if (max_count <= (1u << w) - 1) return w;
        }
        return 32;
    }

    std::uint32_t increment(ObjectId id) {
        check_id(id);
        const std::uint32_t per_word = 32 / width_;
        const std::size_t word = id / per_word;
        const std::uint32_t shift = (id % per_word) * width_;
        const std::uint32_t mask = width_ == 32 ? 0xffffffffu : ((1u << width_) - 1u);
        std::uint32_t cur = words_[word].load(std::memory_order_relaxed);
        for (;;) {
            const std::uint32_t value = (cur >> shift) & mask;
            if (value >= max_count_) {
                throw ContractError("counter overflow: object " + std::to_string(id) +
                                    " beyond max_count " + std::to_string(max_count_));
            }
            const std::uint32_t next = cur + (1u << shift);
            if (words_[word].compare_exchange_weak(cur, next, std::memory_order_relaxed)) {
                return value + 1;
            }
        }
    }

    std::uint32_t get(ObjectId id) const {
        check_id(id);
        const std::uint32_t per_word = 32 / width_;
        const std::uint32_t mask = width_ == 32 ? 0xffffffffu : ((1u << width_) - 1u);
        const std::uint32_t word = words_[id / per_word].load(std::memory_order_relaxed);
        return (word >> ((id % per_word) * width_)) & mask;
    }

    std::uint32_t num_objects() const noexcept { return num_objects_; }
    std::uint32_t max_count() const noexcept { return max_count_; }
    std::uint32_t width_bits() const noexcept { return width_; }

    /// Exact packed footprint in bytes: ceil(num_objects * width / 8).
    std::size_t counter_bytes() const noexcept {
        return static_cast<std::size_t>(
            (static_cast<std::uint64_t>(num_objects_) * width_ + 7) / 8);
    }

private:
    void check_id(ObjectId id) const {
        if (id >= num_objects_) {
            throw ContractError("object id " + std::to_string(id) + " >= num_objects " +
                                std::to_string(num_objects_));
        }
    }

    std::uint32_t num_objects_;
    std::uint32_t max_count_;
    std::uint32_t width_;
    std::unique_ptr<std::atomic<std::uint32_t>[]> words_;
};

/// Open-addressing hash table of (object id, count value) pairs under the
/// modified Robin Hood scheme: a probing entry displaces a resident with a
/// smaller age, and any resident whose value has fallen below the audit
/// threshold minus one is dead and may be overwritten in place. Slots are
/// single 64-bit words updated with CAS, so concurrent updaters are safe;
/// an id may transiently own more than one slot, with the stale copy either
/// below threshold or superseded by a larger value.
class CountHashTable {
public:
    struct Entry {
        ObjectId id = 0;
        std::uint32_t value = 0;
        std::uint32_t age = 0;
    };

    explicit CountHashTable(std::uint64_t min_capacity) {
        const std::uint64_t cap = std::bit_ceil(std::max<std::uint64_t>(min_capacity, 2));
        capacity_ = static_cast<std::size_t>(cap);
        mask_ = capacity_ - 1;
        slots_ = std::make_unique<std::atomic<std::uint64_t>[]>(capacity_);
        for (std::size_t i = 0; i < capacity_; ++i) {
            slots_[i].store(kEmpty, std::memory_order_relaxed);
        }
    }

    std::size_t capacity() const noexcept { return capacity_; }

    void insert(ObjectId id, std::uint32_t value, std::uint32_t current_at) {
        if (value == 0) throw ContractError("hash table values start at 1");
        if (value > 0xffffu) {
            throw ContractError("count value " + std::to_string(value) + " exceeds table range");
        }
        std::uint64_t carried = pack(id, value, 0);
        std::size_t slot = static_cast<std::size_t>(mix64(id)) & mask_;
        for (std::size_t probes = 0; probes <= capacity_; ++probes) {
            std::uint64_t resident = slots_[slot].load(std::memory_order_relaxed);
            for (;;) {
                if (resident == kEmpty) {
                    if (slots_[slot].compare_exchange_weak(resident, carried,
                                                           std::memory_order_relaxed)) {
                        return;
                    }
                    continue; // slot changed under us; re-evaluate it
                }
                const Entry res = unpack(resident);
                const Entry car = unpack(carried);
                if (res.id == car.id) {
                    // same id: raise the value in place, keep the resident's age
                    if (res.value >= car.value) return;
                    const std::uint64_t merged = pack(res.id, car.value, res.age);
                    if (slots_[slot].compare_exchange_weak(resident, merged,
                                                           std::memory_order_relaxed)) {
                        return;
                    }
                    continue;
                }
                if (static_cast<std::uint64_t>(res.value) + 1 < current_at) {
                    // dead entry: cannot be a top-k candidate any more, overwrite
                    if (slots_[slot].compare_exchange_weak(resident, carried,
                                                           std::memory_order_relaxed)) {
                        return;
                    }
                    continue;
                }
                if (res.age < car.age) {
                    // Robin Hood displacement: the richer resident yields
                    if (slots_[slot].compare_exchange_weak(resident, carried,
                                                           std::memory_order_relaxed)) {
                        carried = pack(res.id, res.value, res.age);
                        break; // continue probing with the displaced entry
                    }
                    continue;
                }
                break; // keep probing downstream
            }
            slot = (slot + 1) & mask_;
            const Entry car = unpack(carried);
            if (car.age >= 0xffffu) break;
            carried = pack(car.id, car.value, car.age + 1);
        }
        throw InvariantError("count hash table full: capacity " + std::to_string(capacity_) +
                             " violated its population bound");
    }

    std::optional<Entry> slot_entry(std::size_t slot) const {
        const std::uint64_t word = slots_[slot].load(std::memory_order_relaxed);
        if (word == kEmpty) return std::nullopt;
        return unpack(word);
    }

    /// Largest stored value for the id, if present (there may be stale
    /// duplicates; the maximum is the authoritative one).
    std::optional<std::uint32_t> find(ObjectId id) const {
        std::optional<std::uint32_t> best;
        for (std::size_t i = 0; i < capacity_; ++i) {
            if (auto e = slot_entry(i); e && e->id == id) {
                best = best ? std::max(*best, e->value) : e->value;
            }
        }
        return best;
    }

    std::vector<Entry> live_entries() const {
        std::vector<Entry> out;
        for (std::size_t i = 0; i < capacity_; ++i) {
            if (auto e = slot_entry(i)) out.push_back(*e);
        }
        return out;
    }

    /// Number of distinct object ids resident in the table.
    std::size_t population() const {
        std::vector<ObjectId> ids;
        for (std::size_t i = 0; i < capacity_; ++i) {
            if (auto e = slot_entry(i)) ids.push_back(e->id);
        }
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        return ids.size();
    }

    std::size_t table_bytes() const noexcept { return capacity_ * sizeof(std::uint64_t); }

private:
    static constexpr std::uint64_t kEmpty = ~0ull;

    static constexpr std::uint64_t pack(ObjectId id, std::uint32_t value,
                                        std::uint32_t age) noexcept {
        return (static_cast<std::uint64_t>(id) << 32) |
               (static_cast<std::uint64_t>(value & 0xffffu) << 16) |
               static_cast<std::uint64_t>(age & 0xffffu);
    }

    static constexpr Entry unpack(std::uint64_t word) noexcept {
        return Entry{static_cast<ObjectId>(word >> 32),
                     static_cast<std::uint32_t>((word >> 16) & 0xffffu),
                     static_cast<std::uint32_t>(word & 0xffffu)};
    }

    std::size_t capacity_ = 0;
    std::size_t mask_ = 0;
    std::unique_ptr<std::atomic<std::uint64_t>[]> slots_;
};

/// Count Priority Queue: exact top-k-by-count selection for one query.
///
/// Lower level: a BitmapCounter holding every object's running count.
/// Upper level: the CountHashTable holding the few objects that passed the
/// Gate. The Gate is a ZipperArray ZA (per-level tallies capped at k) plus
/// the monotone AuditThreshold AT; an update with new value v passes when
/// v >= AT, and AT advances while ZA[AT] >= k. At quiescence the k-th
/// largest count equals AT - 1.
///
/// Concurrency: any number of workers may call update() on one instance;
/// counter increments, ZA tallies and AT advancement are atomic, and a
/// lagging AT read only causes extra hash-table insertions, never missed
/// ones. extract() requires all updates to have completed.
class CountPriorityQueue {
public:
    CountPriorityQueue(std::uint32_t num_objects, std::uint32_t max_count, std::uint32_t k)
        : counters_(num_objects, checked_max_count(max_count)),
          table_(2ull * k * max_count),
          k_(k),
          max_count_(max_count),
          audit_threshold_(1) {
        if (k == 0) throw ContractError("k must be >= 1");
        zipper_ = std::make_unique<std::atomic<std::uint32_t>[]>(max_count_ + 1);
        for (std::uint32_t i = 0; i <= max_count_; ++i) {
            zipper_[i].store(0, std::memory_order_relaxed);
        }
    }

    void update(ObjectId id) {
        const std::uint32_t value = counters_.increment(id);
        if (value >= audit_threshold_.load(std::memory_order_relaxed)) {
            table_.insert(id, value, audit_threshold_.load(std::memory_order_relaxed));
            bump_zipper(value);
            advance_threshold();
        }
    }

    /// Exact top-k once all updates are done. Entries with count above the
    /// threshold are read from the hash table (complete by construction);
    /// ties at the threshold are filled in ascending id order from the
    /// counters so that the result does not depend on update scheduling.
    TopKResult extract(std::uint32_t query_id = 0) const {
        TopKResult result;
        result.query_id = query_id;
        const std::uint32_t at = audit_threshold_.load(std::memory_order_relaxed);
        result.threshold = at - 1;

        std::vector<TopKEntry> candidates = dedup_table_entries();
        if (result.threshold == 0) {
            // fewer than k objects were touched: everything lives in the table
            std::sort(candidates.begin(), candidates.end(), TopKEntry::better);
            if (candidates.size() > k_) candidates.resize(k_);
            result.entries = std::move(candidates);
            return result;
        }

        std::vector<TopKEntry> above;
        for (const TopKEntry& e : candidates) {
            if (e.count > result.threshold) above.push_back(e);
        }
        std::sort(above.begin(), above.end(), TopKEntry::better);
        if (above.size() > k_) above.resize(k_);
        result.entries = std::move(above);

        std::size_t need = k_ - result.entries.size();
        for (ObjectId id = 0; need > 0 && id < counters_.num_objects(); ++id) {
            if (counters_.get(id) == result.threshold) {
                result.entries.push_back(TopKEntry{id, result.threshold});
                --need;
            }
        }
        std::sort(result.entries.begin(), result.entries.end(), TopKEntry::better);
        return result;
    }

    std::uint32_t audit_threshold() const noexcept {
        return audit_threshold_.load(std::memory_order_relaxed);
    }

    /// ZA[level], 1-based, capped at k.
    std::uint32_t zipper(std::uint32_t level) const {
        if (level == 0 || level > max_count_) {
            throw ContractError("zipper level out of range");
        }
        return zipper_[level].load(std::memory_order_relaxed);
    }

    std::uint32_t k() const noexcept { return k_; }
    std::uint32_t max_count() const noexcept { return max_count_; }
    const BitmapCounter& counters() const noexcept { return counters_; }
    const CountHashTable& table() const noexcept { return table_; }

    std::size_t counter_bytes() const noexcept { return counters_.counter_bytes(); }
    std::size_t gate_bytes() const noexcept {
        return (max_count_ + 1) * sizeof(std::uint32_t) + sizeof(std::uint32_t);
    }
    std::size_t table_bytes() const noexcept { return table_.table_bytes(); }

private:
    static std::uint32_t checked_max_count(std::uint32_t max_count) {
        if (max_count == 0) throw ContractError("max_count must be >= 1");
        if (max_count > 0xffffu) {
            throw ContractError("max_count " + std::to_string(max_count) +
                                " exceeds the packed hash-table value range");
        }
        return max_count;
    }

    void bump_zipper(std::uint32_t level) {
        std::uint32_t cur = zipper_[level].load(std::memory_order_relaxed);
        while (cur < k_) {
            if (zipper_[level].compare_exchange_weak(cur, cur + 1, std::memory_order_relaxed)) {
                return;
            }
        }
    }

    void advance_threshold() {
        for (;;) {
            std::uint32_t at = audit_threshold_.load(std::memory_order_relaxed);
            if (at > max_count_ || zipper_[at].load(std::memory_order_relaxed) < k_) return;
            audit_threshold_.compare_exchange_weak(at, at + 1, std::memory_order_relaxed);
        }
    }

    std::vector<TopKEntry> dedup_table_entries() const {
        std::vector<TopKEntry> entries;
        for (const auto& e : table_.live_entries()) {
            entries.push_back(TopKEntry{e.id, e.value});
        }
        std::sort(entries.begin(), entries.end(), [](const TopKEntry& a, const TopKEntry& b) {
            if (a.id != b.id) return a.id < b.id;
            return a.count > b.count;
        });
        entries.erase(std::unique(entries.begin(), entries.end(),
                                  [](const TopKEntry& a, const TopKEntry& b) {
                                      return a.id == b.id;
                                  }),
                      entries.end());
        return entries;
    }

    BitmapCounter counters_;
    CountHashTable table_;
    std::uint32_t k_;
    std::uint32_t max_count_;
    std::unique_ptr<std::atomic<std::uint32_t>[]> zipper_; // 1-based, [1, max_count]
    std::atomic<std::uint32_t> audit_threshold_;           // in [1, max_count + 1]
};

} // namespace mcx
