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

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "mcx/index.hpp"

namespace mcx {

// Index file layout (all integers little-endian):
//   magic "MCIX", u32 version=1, u32 num_objects, u32 num_keywords,
//   num_keywords x { dim u16, token u32, span_count u16,
//                    span_count x { start u64, end u64 } },
//   list array as u32 object ids (length = sum of span lengths).

namespace detail {

inline void put_bytes(std::vector<std::uint8_t>& out, std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

class ByteReader {
public:
    ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    std::uint64_t take(int n) {
        if (pos_ + static_cast<std::size_t>(n) > size_) {
            throw DataError("index file truncated at offset " + std::to_string(pos_));
        }
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::size_t remaining() const noexcept { return size_ - pos_; }

private:
    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline std::vector<std::uint8_t> serialize_index(const InvertedIndex& index) {
    std::vector<std::uint8_t> out;
    out.reserve(16 + index.entries().size() * 24 + index.list_array().size() * 4);
    out.insert(out.end(), {'M', 'C', 'I', 'X'});
    detail::put_bytes(out, 1, 4);
    detail::put_bytes(out, index.num_objects(), 4);
    detail::put_bytes(out, index.keyword_count(), 4);
    for (const auto& entry : index.entries()) {
        detail::put_bytes(out, entry.keyword.dim, 2);
        detail::put_bytes(out, entry.keyword.token, 4);
        detail::put_bytes(out, entry.span_count, 2);
        for (const PostingsSpan& span : index.spans_of(entry)) {
            detail::put_bytes(out, span.begin, 8);
            detail::put_bytes(out, span.end, 8);
        }
    }
    for (ObjectId id : index.list_array()) detail::put_bytes(out, id, 4);
    return out;
}

/// Parses and validates an index image. Every structural invariant is
/// checked: keyword order, span bounds, ascending ids per keyword, and that
/// the spans tile the list array exactly.
inline InvertedIndex deserialize_index(const std::uint8_t* data, std::size_t size) {
    detail::ByteReader in(data, size);
    if (in.take(1) != 'M' || in.take(1) != 'C' || in.take(1) != 'I' || in.take(1) != 'X') {
        throw DataError("not an MCIX index file (bad magic)");
    }
    const std::uint64_t version = in.take(4);
    if (version != 1) throw DataError("unsupported index version " + std::to_string(version));
    const std::uint32_t num_objects = static_cast<std::uint32_t>(in.take(4));
    const std::uint32_t num_keywords = static_cast<std::uint32_t>(in.take(4));

    std::vector<InvertedIndex::KeywordEntry> entries;
    entries.reserve(num_keywords);
    std::vector<PostingsSpan> spans;
    std::uint64_t total_ids = 0;
    for (std::uint32_t kw = 0; kw < num_keywords; ++kw) {
        InvertedIndex::KeywordEntry entry;
        entry.keyword.dim = static_cast<DimId>(in.take(2));
        entry.keyword.token = static_cast<Token>(in.take(4));
        entry.span_count = static_cast<std::uint16_t>(in.take(2));
        entry.first_span = static_cast<std::uint32_t>(spans.size());
        if (!entries.empty() && !(entries.back().keyword < entry.keyword)) {
            throw DataError("index keywords out of order");
        }
        if (entry.span_count == 0) throw DataError("keyword with no postings spans");
        for (std::uint16_t s = 0; s < entry.span_count; ++s) {
            PostingsSpan span{in.take(8), in.take(8)};
            if (span.begin > span.end) throw DataError("span with begin > end");
            // builder emits spans in list-array order; require exact tiling
            if (span.begin != total_ids) throw DataError("spans do not tile the list array");
            total_ids = span.end;
            spans.push_back(span);
        }
        entries.push_back(entry);
    }

    if (in.remaining() != total_ids * 4) {
        throw DataError("list array size mismatch: spans cover " + std::to_string(total_ids) +
                        " ids, file holds " + std::to_string(in.remaining() / 4));
    }
    std::vector<ObjectId> list_array;
    list_array.reserve(total_ids);
    for (std::uint64_t i = 0; i < total_ids; ++i) {
        const ObjectId id = static_cast<ObjectId>(in.take(4));
        if (id >= num_objects) {
            throw DataError("object id " + std::to_string(id) + " out of range");
        }
        list_array.push_back(id);
    }

    // per keyword, the concatenation of its spans must be strictly ascending
    for (const auto& entry : entries) {
        bool first = true;
        ObjectId prev = 0;
        for (std::uint16_t s = 0; s < entry.span_count; ++s) {
            const PostingsSpan& span = spans[entry.first_span + s];
            for (std::uint64_t i = span.begin; i < span.end; ++i) {
                if (!first && list_array[i] <= prev) {
                    throw DataError("postings of one keyword not strictly ascending");
                }
                prev = list_array[i];
                first = false;
            }
        }
    }

    return InvertedIndex(num_objects, std::move(entries), std::move(spans), std::move(list_array),
                         std::nullopt);
}

inline void save_index(const InvertedIndex& index, const std::string& path) {
    const std::vector<std::uint8_t> bytes = serialize_index(index);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed: " + path);
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw DataError("cannot open " + path);
    const std::streamsize size = in.tellg();
    in.seekg(0);
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
    if (size > 0) in.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!in) throw DataError("read failed: " + path);
    return bytes;
}

inline InvertedIndex load_index(const std::string& path) {
    const auto bytes = read_file_bytes(path);
    return deserialize_index(bytes.data(), bytes.size());
}

/// FNV-1a over a byte image; used to tie encoder sidecars to index files.
inline std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= data[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace mcx
