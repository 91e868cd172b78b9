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
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcx/error.hpp"
#include "mcx/lsh.hpp"
#include "mcx/model.hpp"

namespace mcx {

// ---------------------------------------------------------------------------
// Relational tables: CSV rows + a JSON schema sidecar
// ---------------------------------------------------------------------------

struct TableAttribute {
    enum class Kind { categorical, numeric };

    std::string name;
    Kind kind = Kind::categorical;
    // categorical: token domain size (0 = resolve from data as max token + 1)
    Token domain = 0;
    // numeric: discretization grid; bounds resolved from data when absent
    std::uint32_t bins = 1024;
    std::optional<double> min;
    std::optional<double> max;

    Token domain_size() const { return kind == Kind::numeric ? bins : domain; }

    Token discretize(double value) const {
        if (kind != Kind::numeric) throw ContractError("discretize on categorical attribute");
        if (!min || !max) throw ContractError("numeric attribute bounds unresolved");
        if (*max <= *min) return 0;
        const double t = (value - *min) / (*max - *min) * bins;
        const auto bin = static_cast<std::int64_t>(std::floor(t));
        return static_cast<Token>(std::clamp<std::int64_t>(bin, 0, static_cast<std::int64_t>(bins) - 1));
    }
};

struct TableSpec {
    std::vector<TableAttribute> attributes;

    RelationalSchema schema() const {
        std::vector<Token> sizes;
        sizes.reserve(attributes.size());
        for (const TableAttribute& a : attributes) sizes.push_back(a.domain_size());
        return RelationalSchema(std::move(sizes));
    }
};

inline nlohmann::json table_spec_json(const TableSpec& spec) {
    nlohmann::json attrs = nlohmann::json::array();
    for (const TableAttribute& a : spec.attributes) {
        nlohmann::json j;
        j["name"] = a.name;
        j["kind"] = a.kind == TableAttribute::Kind::numeric ? "numeric" : "categorical";
        if (a.kind == TableAttribute::Kind::numeric) {
            j["bins"] = a.bins;
            if (a.min) j["min"] = *a.min;
            if (a.max) j["max"] = *a.max;
        } else {
            j["domain"] = a.domain;
        }
        attrs.push_back(std::move(j));
    }
    return nlohmann::json{{"attributes", std::move(attrs)}};
}

inline TableSpec parse_table_spec(const nlohmann::json& j) {
    TableSpec spec;
    if (!j.contains("attributes") || !j["attributes"].is_array() || j["attributes"].empty()) {
        throw DataError("schema: missing or empty \"attributes\" array");
    }
    for (const auto& a : j["attributes"]) {
        TableAttribute attr;
        attr.name = a.value("name", "attr" + std::to_string(spec.attributes.size()));
        const std::string kind = a.value("kind", "categorical");
        if (kind == "numeric") {
            attr.kind = TableAttribute::Kind::numeric;
            attr.bins = a.value("bins", 1024u);
            if (attr.bins == 0) throw DataError("schema: bins must be positive");
            if (a.contains("min")) attr.min = a["min"].get<double>();
            if (a.contains("max")) attr.max = a["max"].get<double>();
        } else if (kind == "categorical") {
            attr.kind = TableAttribute::Kind::categorical;
            attr.domain = a.value("domain", 0u);
        } else {
            throw DataError("schema: unknown attribute kind \"" + kind + "\"");
        }
        spec.attributes.push_back(std::move(attr));
    }
    return spec;
}

inline TableSpec load_table_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open schema " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("schema " + path + ": " + e.what());
    }
    return parse_table_spec(j);
}

struct RelationalDataset {
    TableSpec spec; // bounds and domains resolved
    std::vector<ObjectRecord> records;
};

/// Loads a CSV of tuples under the spec, resolving unresolved numeric bounds
/// and categorical domains from the data, then discretizing and encoding.
/// Malformed rows are reported with their line number.
inline RelationalDataset load_relational_csv(const std::string& path, TableSpec spec) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset " + path);

    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                const double v = std::stod(cell, &used);
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) {
                    ++used;
                }
                if (used != cell.size()) throw std::invalid_argument(cell);
                row.push_back(v);
            } catch (const std::exception&) {
                throw DataError(path + ":" + std::to_string(line_no) + ": bad cell \"" + cell +
                                "\"");
            }
        }
        if (row.size() != spec.attributes.size()) {
            throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(spec.attributes.size()) + " cells, got " +
                            std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError(path + ": no records");

    for (std::size_t a = 0; a < spec.attributes.size(); ++a) {
        TableAttribute& attr = spec.attributes[a];
        if (attr.kind == TableAttribute::Kind::numeric) {
            if (!attr.min || !attr.max) {
                double lo = rows[0][a], hi = rows[0][a];
                for (const auto& row : rows) {
                    lo = std::min(lo, row[a]);
                    hi = std::max(hi, row[a]);
                }
                if (!attr.min) attr.min = lo;
                if (!attr.max) attr.max = hi;
            }
        } else if (attr.domain == 0) {
            double hi = 0;
            for (const auto& row : rows) hi = std::max(hi, row[a]);
            attr.domain = static_cast<Token>(hi) + 1;
        }
    }

    RelationalDataset dataset;
    dataset.spec = spec;
    const RelationalSchema schema = spec.schema();
    dataset.records.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::vector<Token> tokens(spec.attributes.size());
        for (std::size_t a = 0; a < spec.attributes.size(); ++a) {
            const TableAttribute& attr = spec.attributes[a];
            if (attr.kind == TableAttribute::Kind::numeric) {
                tokens[a] = attr.discretize(rows[r][a]);
            } else {
                const double v = rows[r][a];
                if (v < 0 || v != std::floor(v)) {
                    throw DataError(path + ": categorical cell must be a non-negative integer");
                }
                tokens[a] = static_cast<Token>(v);
            }
        }
        dataset.records.push_back(encode_relational_tuple(schema, tokens,
                                                          static_cast<ObjectId>(r)));
    }
    return dataset;
}

// ---------------------------------------------------------------------------
// Vector datasets: per record u32 dimension then that many f32, little-endian
// ---------------------------------------------------------------------------

inline std::vector<std::vector<float>> load_vectors_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset " + path);
    std::vector<std::vector<float>> points;
    for (;;) {
        std::uint8_t head[4];
        in.read(reinterpret_cast<char*>(head), 4);
        if (in.gcount() == 0) break;
        if (in.gcount() != 4) throw DataError(path + ": truncated record header");
        const std::uint32_t dims = static_cast<std::uint32_t>(head[0]) | (head[1] << 8) |
                                   (head[2] << 16) | (static_cast<std::uint32_t>(head[3]) << 24);
        if (dims == 0 || dims > (1u << 20)) {
            throw DataError(path + ": implausible record dimensionality " + std::to_string(dims));
        }
        std::vector<float> point(dims);
        for (std::uint32_t j = 0; j < dims; ++j) {
            std::uint8_t raw[4];
            in.read(reinterpret_cast<char*>(raw), 4);
            if (in.gcount() != 4) throw DataError(path + ": truncated record body");
            std::uint32_t bits = static_cast<std::uint32_t>(raw[0]) | (raw[1] << 8) |
                                 (raw[2] << 16) | (static_cast<std::uint32_t>(raw[3]) << 24);
            float v;
            std::memcpy(&v, &bits, 4);
            point[j] = v;
        }
        if (!points.empty() && points.front().size() != dims) {
            throw DataError(path + ": records have mixed dimensionality");
        }
        points.push_back(std::move(point));
    }
    return points;
}

inline void save_vectors_binary(std::span<const std::vector<float>> points,
                                const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path + " for writing");
    for (const auto& point : points) {
        const std::uint32_t dims = static_cast<std::uint32_t>(point.size());
        std::uint8_t head[4] = {static_cast<std::uint8_t>(dims & 0xff),
                                static_cast<std::uint8_t>((dims >> 8) & 0xff),
                                static_cast<std::uint8_t>((dims >> 16) & 0xff),
                                static_cast<std::uint8_t>((dims >> 24) & 0xff)};
        out.write(reinterpret_cast<const char*>(head), 4);
        for (float v : point) {
            std::uint32_t bits;
            std::memcpy(&bits, &v, 4);
            std::uint8_t raw[4] = {static_cast<std::uint8_t>(bits & 0xff),
                                   static_cast<std::uint8_t>((bits >> 8) & 0xff),
                                   static_cast<std::uint8_t>((bits >> 16) & 0xff),
                                   static_cast<std::uint8_t>((bits >> 24) & 0xff)};
            out.write(reinterpret_cast<const char*>(raw), 4);
        }
    }
    if (!out) throw DataError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Line-oriented datasets (sequences, documents, stop words)
// ---------------------------------------------------------------------------

inline std::vector<std::string> load_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

inline std::set<std::string> load_stopwords(const std::string& path) {
    std::set<std::string> words;
    for (std::string& line : load_lines(path)) {
        if (!line.empty()) words.insert(std::move(line));
    }
    return words;
}

// ---------------------------------------------------------------------------
// Encoder sidecar: everything needed to encode queries bit-identically,
// plus a hash tying the sidecar to its index file
// ---------------------------------------------------------------------------

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

inline std::uint64_t parse_hex64(const std::string& s) {
    std::uint64_t v = 0;
    if (s.empty() || s.size() > 16) throw DataError("bad 64-bit hex value \"" + s + "\"");
    for (char ch : s) {
        v <<= 4;
        if (ch >= '0' && ch <= '9') {
            v |= static_cast<std::uint64_t>(ch - '0');
        } else if (ch >= 'a' && ch <= 'f') {
            v |= static_cast<std::uint64_t>(ch - 'a' + 10);
        } else {
            throw DataError("bad 64-bit hex value \"" + s + "\"");
        }
    }
    return v;
}

enum class Adapter { relational, vectors_pstable, vectors_rbh, sequences, documents };

inline std::string adapter_name(Adapter a) {
    switch (a) {
        case Adapter::relational: return "relational";
        case Adapter::vectors_pstable: return "vectors-pstable";
        case Adapter::vectors_rbh: return "vectors-rbh";
        case Adapter::sequences: return "sequences";
        case Adapter::documents: return "documents";
    }
    throw InvariantError("unreachable adapter");
}

inline Adapter parse_adapter(const std::string& name) {
    if (name == "relational") return Adapter::relational;
    if (name == "vectors-pstable") return Adapter::vectors_pstable;
    if (name == "vectors-rbh") return Adapter::vectors_rbh;
    if (name == "sequences") return Adapter::sequences;
    if (name == "documents") return Adapter::documents;
    throw DataError("unknown adapter \"" + name + "\"");
}

struct EncoderSpec {
    Adapter adapter = Adapter::relational;
    std::uint64_t index_hash = 0;
    // relational
    TableSpec table;
    // vectors
    LshEncoderConfig lsh;
    // sequences
    std::uint32_t gram_n = 3;
    // documents
    std::vector<std::string> doc_vocabulary;
    std::vector<std::string> doc_stopwords;
};

inline nlohmann::json encoder_spec_json(const EncoderSpec& spec) {
    nlohmann::json j;
    j["adapter"] = adapter_name(spec.adapter);
    j["index_hash"] = hex64(spec.index_hash);
    switch (spec.adapter) {
        case Adapter::relational:
            j["table"] = table_spec_json(spec.table);
            break;
        case Adapter::vectors_pstable:
        case Adapter::vectors_rbh: {
            nlohmann::json l;
            l["m"] = spec.lsh.m;
            l["dims"] = spec.lsh.dims;
            l["seed"] = hex64(spec.lsh.seed);
            l["rehash_domain"] = spec.lsh.rehash_domain;
            l["w"] = spec.lsh.w;
            l["bucket_count"] = spec.lsh.bucket_count;
            l["bucket_min"] = spec.lsh.bucket_min;
            l["rehash_pstable"] = spec.lsh.rehash_pstable;
            l["sigma"] = spec.lsh.sigma;
            j["lsh"] = std::move(l);
            break;
        }
        case Adapter::sequences:
            j["n"] = spec.gram_n;
            break;
        case Adapter::documents:
            j["vocabulary"] = spec.doc_vocabulary;
            j["stopwords"] = spec.doc_stopwords;
            break;
    }
    return j;
}

inline EncoderSpec parse_encoder_spec(const nlohmann::json& j) {
    EncoderSpec spec;
    spec.adapter = parse_adapter(j.at("adapter").get<std::string>());
    spec.index_hash = parse_hex64(j.at("index_hash").get<std::string>());
    switch (spec.adapter) {
        case Adapter::relational:
            spec.table = parse_table_spec(j.at("table"));
            break;
        case Adapter::vectors_pstable:
        case Adapter::vectors_rbh: {
            const auto& l = j.at("lsh");
            spec.lsh.family = spec.adapter == Adapter::vectors_pstable ? LshFamily::p_stable
                                                                       : LshFamily::random_binning;
            spec.lsh.m = l.at("m").get<std::uint32_t>();
            spec.lsh.dims = l.at("dims").get<std::uint32_t>();
            spec.lsh.seed = parse_hex64(l.at("seed").get<std::string>());
            spec.lsh.rehash_domain = l.at("rehash_domain").get<std::uint32_t>();
            spec.lsh.w = l.at("w").get<double>();
            spec.lsh.bucket_count = l.at("bucket_count").get<std::uint32_t>();
            spec.lsh.bucket_min = l.at("bucket_min").get<std::int64_t>();
            spec.lsh.rehash_pstable = l.at("rehash_pstable").get<bool>();
            spec.lsh.sigma = l.at("sigma").get<double>();
            break;
        }
        case Adapter::sequences:
            spec.gram_n = j.at("n").get<std::uint32_t>();
            break;
        case Adapter::documents:
            spec.doc_vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
            spec.doc_stopwords = j.at("stopwords").get<std::vector<std::string>>();
            break;
    }
    return spec;
}

inline void save_encoder_spec(const EncoderSpec& spec, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out << encoder_spec_json(spec).dump(2) << "\n";
    if (!out) throw DataError("write failed: " + path);
}

inline EncoderSpec load_encoder_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open encoder sidecar " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("sidecar " + path + ": " + e.what());
    }
    try {
        return parse_encoder_spec(j);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("sidecar " + path + ": " + e.what());
    }
}

} // namespace mcx
