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
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mcx/dataset.hpp"
#include "mcx/mcx.hpp"

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

struct BuildOptions {
    std::string dataset;
    std::string format = "auto";
    std::string adapter = "relational";
    std::string index_path;
    std::string schema_path;
    std::string stopwords_path;
    std::uint32_t gram_n = 3;
    std::uint32_t m = 237;
    std::uint32_t rehash_domain = 8192;
    double w = 4.0;
    std::uint32_t bucket_count = 67;
    std::int64_t bucket_min = -33;
    double sigma = 0.0; // 0: mean pairwise l1 heuristic
    std::uint64_t seed = 1;
    std::uint32_t split_threshold = 0; // 0: splitting off (the default)
};

struct QueryOptions {
    std::string index_path;
    std::string queries_path;
    std::string dataset; // needed for --oracle, --partition-capacity, sequences
    std::uint32_t k = 10;
    std::string selector = "cpq";
    std::uint32_t workers = 0;
    std::uint32_t partition_capacity = 0;
    bool oracle = false;
    bool verify = false;
    std::string stats_out;
};

struct BenchOptions {
    std::string dataset;
    std::string adapter = "relational";
    std::string schema_path;
    std::string queries_path;
    std::uint32_t k = 10;
    std::uint32_t runs = 10;
    std::uint32_t workers = 0;
    std::uint64_t seed = 1;
    std::uint32_t gram_n = 3;
    std::uint32_t m = 237;
};

mcx::Selector parse_selector(const std::string& name) {
    if (name == "cpq") return mcx::Selector::cpq;
    if (name == "bucket") return mcx::Selector::bucket;
    if (name == "sort") return mcx::Selector::sort;
    throw mcx::DataError("unknown selector \"" + name + "\"");
}

std::uint32_t workers_or_env(std::uint32_t workers) {
    if (workers != 0) return workers;
    if (const char* env = std::getenv("MCX_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<std::uint32_t>(v);
    }
    return 0;
}

mcx::EngineConfig engine_config(const std::string& selector, std::uint32_t workers) {
    mcx::EngineConfig config;
    config.selector = parse_selector(selector);
    config.workers = workers_or_env(workers);
    config.mode = config.workers == 1 ? mcx::ExecMode::sequential : mcx::ExecMode::parallel;
    return config;
}

std::string default_schema_path(const std::string& dataset) { return dataset + ".schema.json"; }
std::string sidecar_path(const std::string& index_path) { return index_path + ".encoder.json"; }

// Everything the adapters produce for a dataset: the records that get
// indexed, plus whatever is needed to encode queries the same way.
struct EncodedDataset {
    std::vector<mcx::ObjectRecord> records;
    mcx::EncoderSpec spec;
    // adapter state for query encoding
    std::optional<mcx::LshEncoder> lsh;
    std::optional<mcx::GramCodec> gram_codec;
    std::optional<mcx::DocumentCodec> doc_codec;
    std::vector<std::string> texts; // sequence corpus for verification
};

EncodedDataset encode_dataset(const BuildOptions& opt,
                              const mcx::TableSpec* resolved_table = nullptr) {
    EncodedDataset out;
    out.spec.adapter = mcx::parse_adapter(opt.adapter);
    switch (out.spec.adapter) {
        case mcx::Adapter::relational: {
            if (opt.format != "auto" && opt.format != "csv") {
                throw mcx::DataError("relational adapter expects csv input");
            }
            mcx::TableSpec table;
            if (resolved_table) {
                table = *resolved_table;
            } else {
                const std::string schema =
                    opt.schema_path.empty() ? default_schema_path(opt.dataset) : opt.schema_path;
                table = mcx::load_table_spec(schema);
            }
            mcx::RelationalDataset data = mcx::load_relational_csv(opt.dataset, std::move(table));
            out.spec.table = data.spec;
            out.records = std::move(data.records);
            break;
        }
        case mcx::Adapter::vectors_pstable:
        case mcx::Adapter::vectors_rbh: {
            if (opt.format != "auto" && opt.format != "vectors") {
                throw mcx::DataError("vector adapters expect binary vector input");
            }
            const auto points = mcx::load_vectors_binary(opt.dataset);
            if (points.empty()) throw mcx::DataError(opt.dataset + ": no records");
            mcx::LshEncoderConfig config;
            config.family = out.spec.adapter == mcx::Adapter::vectors_pstable
                                ? mcx::LshFamily::p_stable
                                : mcx::LshFamily::random_binning;
            config.m = opt.m;
            config.dims = static_cast<std::uint32_t>(points.front().size());
            config.seed = opt.seed;
            config.rehash_domain = opt.rehash_domain;
            config.w = opt.w;
            config.bucket_count = opt.bucket_count;
            config.bucket_min = opt.bucket_min;
            config.sigma = opt.sigma;
            if (config.family == mcx::LshFamily::random_binning && config.sigma <= 0.0) {
                config.sigma = mcx::kernel_width_heuristic(points);
                if (config.sigma <= 0.0) {
                    throw mcx::DataError("degenerate kernel width: all points identical");
                }
                std::cerr << "sigma " << config.sigma << " (mean pairwise l1)\n";
            }
            out.spec.lsh = config;
            out.lsh = mcx::LshEncoder::create(config);
            out.records.reserve(points.size());
            for (std::size_t i = 0; i < points.size(); ++i) {
                out.records.push_back(
                    out.lsh->encode_point(points[i], static_cast<mcx::ObjectId>(i)));
            }
            break;
        }
        case mcx::Adapter::sequences: {
            out.texts = mcx::load_lines(opt.dataset);
            if (out.texts.empty()) throw mcx::DataError(opt.dataset + ": no records");
            out.spec.gram_n = opt.gram_n;
            out.gram_codec = mcx::GramCodec::build(out.texts, opt.gram_n);
            out.records.reserve(out.texts.size());
            for (std::size_t i = 0; i < out.texts.size(); ++i) {
                out.records.push_back(
                    out.gram_codec->encode(out.texts[i], static_cast<mcx::ObjectId>(i)));
            }
            break;
        }
        case mcx::Adapter::documents: {
            out.texts = mcx::load_lines(opt.dataset);
            if (out.texts.empty()) throw mcx::DataError(opt.dataset + ": no records");
            std::set<std::string> stopwords;
            if (!opt.stopwords_path.empty()) stopwords = mcx::load_stopwords(opt.stopwords_path);
            out.spec.doc_stopwords.assign(stopwords.begin(), stopwords.end());
            out.doc_codec = mcx::DocumentCodec::build(out.texts, stopwords);
            // the sidecar carries the vocabulary so query encoding needs no corpus
            out.spec.doc_vocabulary.clear();
            {
                std::set<std::string> all;
                for (const auto& doc : out.texts) {
                    for (auto& w : mcx::tokenize_document(doc, stopwords)) all.insert(std::move(w));
                }
                out.spec.doc_vocabulary.assign(all.begin(), all.end());
            }
            out.records.reserve(out.texts.size());
            for (std::size_t i = 0; i < out.texts.size(); ++i) {
                out.records.push_back(
                    out.doc_codec->encode(out.texts[i], static_cast<mcx::ObjectId>(i)));
            }
            break;
        }
    }
    return out;
}

int cmd_build(const BuildOptions& opt) {
    EncodedDataset data = encode_dataset(opt);
    const std::optional<std::uint32_t> split =
        opt.split_threshold ? std::optional<std::uint32_t>(opt.split_threshold) : std::nullopt;
    const mcx::InvertedIndex index = mcx::build_index(data.records, split);
    const std::vector<std::uint8_t> bytes = mcx::serialize_index(index);
    {
        std::ofstream out(opt.index_path, std::ios::binary | std::ios::trunc);
        if (!out) throw mcx::DataError("cannot open " + opt.index_path + " for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out) throw mcx::DataError("write failed: " + opt.index_path);
    }
    data.spec.index_hash = mcx::fnv1a64(bytes.data(), bytes.size());
    mcx::save_encoder_spec(data.spec, sidecar_path(opt.index_path));

    std::cout << "objects " << index.num_objects() << "\n"
              << "keywords " << index.keyword_count() << "\n"
              << "longest_list " << index.longest_list() << "\n"
              << "index_bytes " << bytes.size() << "\n";
    return 0;
}

// --- query loading ----------------------------------------------------------

std::vector<mcx::Query> parse_relational_queries(const std::string& path,
                                                 const mcx::TableSpec& table, std::uint32_t k) {
    const mcx::RelationalSchema schema = table.schema();
    std::vector<mcx::Query> queries;
    std::size_t line_no = 0;
    for (const std::string& line : mcx::load_lines(path)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw mcx::DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        std::vector<mcx::AttributeRange> ranges;
        for (const auto& item : j.at("items")) {
            mcx::AttributeRange r;
            r.attr = item.at("attr").get<std::size_t>();
            if (r.attr >= table.attributes.size()) {
                throw mcx::DataError(path + ":" + std::to_string(line_no) +
                                     ": unknown attribute index");
            }
            const mcx::TableAttribute& attr = table.attributes[r.attr];
            if (item.contains("value")) {
                std::int64_t center;
                if (attr.kind == mcx::TableAttribute::Kind::numeric) {
                    center = attr.discretize(item.at("value").get<double>());
                } else {
                    center = item.at("value").get<std::int64_t>();
                }
                const std::int64_t window = item.value("window", 0);
                r.lo = center - window;
                r.hi = center + window;
            } else {
                if (attr.kind == mcx::TableAttribute::Kind::numeric) {
                    r.lo = attr.discretize(item.at("lo").get<double>());
                    r.hi = attr.discretize(item.at("hi").get<double>());
                } else {
                    r.lo = item.at("lo").get<std::int64_t>();
                    r.hi = item.at("hi").get<std::int64_t>();
                }
            }
            ranges.push_back(r);
        }
        const std::uint32_t qk = j.value("k", k);
        queries.push_back(mcx::encode_relational_query(
            schema, ranges, qk, static_cast<std::uint32_t>(queries.size())));
    }
    return queries;
}

struct LoadedQueries {
    std::vector<mcx::Query> queries;
    std::vector<std::string> texts; // raw sequence/document query texts
    // query indices that had no indexable keywords (documents/sequences)
    std::vector<std::size_t> unanswerable;
};

LoadedQueries load_queries(const std::string& path, const mcx::EncoderSpec& spec,
                           std::uint32_t default_k) {
    LoadedQueries out;
    switch (spec.adapter) {
        case mcx::Adapter::relational:
            out.queries = parse_relational_queries(path, spec.table, default_k);
            return out;
        case mcx::Adapter::vectors_pstable:
        case mcx::Adapter::vectors_rbh: {
            const mcx::LshEncoder encoder = mcx::LshEncoder::create(spec.lsh);
            std::size_t line_no = 0;
            for (const std::string& line : mcx::load_lines(path)) {
                ++line_no;
                if (line.empty()) continue;
                json j;
                try {
                    j = json::parse(line);
                } catch (const json::exception& e) {
                    throw mcx::DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
                }
                const auto point = j.at("point").get<std::vector<float>>();
                const std::uint32_t qk = j.value("k", default_k);
                out.queries.push_back(encoder.encode_query_point(
                    point, qk, static_cast<std::uint32_t>(out.queries.size())));
            }
            return out;
        }
        case mcx::Adapter::sequences:
        case mcx::Adapter::documents: {
            std::optional<mcx::DocumentCodec> doc_codec;
            if (spec.adapter == mcx::Adapter::documents) {
                // rebuild the codec from the sidecar vocabulary
                std::set<std::string> stops(spec.doc_stopwords.begin(),
                                            spec.doc_stopwords.end());
                doc_codec = mcx::DocumentCodec::build(spec.doc_vocabulary, stops);
            }
            std::size_t line_no = 0;
            for (const std::string& line : mcx::load_lines(path)) {
                ++line_no;
                if (line.empty()) continue;
                json j;
                try {
                    j = json::parse(line);
                } catch (const json::exception& e) {
                    throw mcx::DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
                }
                out.texts.push_back(j.at("text").get<std::string>());
                const std::uint32_t qk = j.value("k", default_k);
                // materialized later for sequences (needs the dataset codec)
                if (doc_codec) {
                    const auto query = doc_codec->encode_query(
                        out.texts.back(), qk, static_cast<std::uint32_t>(out.queries.size()));
                    if (query) {
                        out.queries.push_back(*query);
                    } else {
                        out.unanswerable.push_back(out.texts.size() - 1);
                        out.queries.push_back(mcx::Query(
                            static_cast<std::uint32_t>(out.queries.size()),
                            {mcx::QueryItem::point(0, 0xffffffffu)}, qk)); // matches nothing
                    }
                } else {
                    // placeholder; rebuilt against the gram codec by the caller
                    out.queries.push_back(mcx::Query(
                        static_cast<std::uint32_t>(out.queries.size()),
                        {mcx::QueryItem::point(0, 0)}, qk));
                }
            }
            return out;
        }
    }
    throw mcx::InvariantError("unreachable adapter");
}

json stats_json(const mcx::BatchResult& batch, std::size_t query_count) {
    json stats;
    stats["queries"] = query_count;
    stats["lookup_ns"] = batch.timings.lookup_ns;
    stats["match_ns"] = batch.timings.match_ns;
    stats["select_ns"] = batch.timings.select_ns;
    stats["merge_ns"] = batch.timings.merge_ns;
    stats["total_ns"] = batch.timings.total_ns;
    stats["counter_bytes"] = batch.memory.counter_bytes;
    stats["gate_bytes"] = batch.memory.gate_bytes;
    stats["table_bytes"] = batch.memory.table_bytes;
    stats["result_hash"] = mcx::hex64(mcx::hash_results(batch.results));
    return stats;
}

int cmd_query(const QueryOptions& opt) {
    const mcx::EncoderSpec spec = mcx::load_encoder_spec(sidecar_path(opt.index_path));
    const std::vector<std::uint8_t> index_bytes = mcx::read_file_bytes(opt.index_path);
    if (mcx::fnv1a64(index_bytes.data(), index_bytes.size()) != spec.index_hash) {
        throw mcx::DataError("index file does not match its encoder sidecar; refusing to run");
    }
    const mcx::InvertedIndex index =
        mcx::deserialize_index(index_bytes.data(), index_bytes.size());

    LoadedQueries loaded = load_queries(opt.queries_path, spec, opt.k);

    // sequence queries need the corpus-derived gram codec (and the corpus
    // itself for verification)
    std::vector<std::string> corpus;
    std::optional<mcx::GramCodec> gram_codec;
    if (spec.adapter == mcx::Adapter::sequences) {
        if (opt.dataset.empty()) {
            throw mcx::DataError("sequences adapter needs --dataset at query time");
        }
        corpus = mcx::load_lines(opt.dataset);
        gram_codec = mcx::GramCodec::build(corpus, spec.gram_n);
        for (std::size_t i = 0; i < loaded.texts.size(); ++i) {
            const std::uint32_t qk = loaded.queries[i].k;
            const auto query = gram_codec->encode_query(
                loaded.texts[i], qk, static_cast<std::uint32_t>(i));
            if (query) {
                loaded.queries[i] = *query;
            } else {
                loaded.unanswerable.push_back(i);
                loaded.queries[i] = mcx::Query(static_cast<std::uint32_t>(i),
                                               {mcx::QueryItem::point(0, 0xffffffffu)}, qk);
            }
        }
    }

    // records encoded exactly as at build time, pinned by the sidecar
    auto reencode = [&]() {
        BuildOptions rebuild;
        rebuild.dataset = opt.dataset;
        rebuild.adapter = mcx::adapter_name(spec.adapter);
        rebuild.gram_n = spec.gram_n;
        rebuild.stopwords_path = ""; // sidecar stop words applied below
        if (spec.adapter == mcx::Adapter::vectors_pstable ||
            spec.adapter == mcx::Adapter::vectors_rbh) {
            rebuild.m = spec.lsh.m;
            rebuild.seed = spec.lsh.seed;
            rebuild.rehash_domain = spec.lsh.rehash_domain;
            rebuild.w = spec.lsh.w;
            rebuild.bucket_count = spec.lsh.bucket_count;
            rebuild.bucket_min = spec.lsh.bucket_min;
            rebuild.sigma = spec.lsh.sigma;
        }
        if (spec.adapter == mcx::Adapter::documents && !spec.doc_stopwords.empty()) {
            // document records depend on the stop-word set; rebuild from texts
            EncodedDataset out;
            out.spec = spec;
            out.texts = mcx::load_lines(opt.dataset);
            std::set<std::string> stops(spec.doc_stopwords.begin(), spec.doc_stopwords.end());
            out.doc_codec = mcx::DocumentCodec::build(out.texts, stops);
            for (std::size_t i = 0; i < out.texts.size(); ++i) {
                out.records.push_back(
                    out.doc_codec->encode(out.texts[i], static_cast<mcx::ObjectId>(i)));
            }
            return out;
        }
        return encode_dataset(rebuild,
                              spec.adapter == mcx::Adapter::relational ? &spec.table : nullptr);
    };

    const mcx::EngineConfig config = engine_config(opt.selector, opt.workers);
    mcx::BatchResult batch;
    if (opt.partition_capacity > 0) {
        if (opt.dataset.empty()) {
            throw mcx::DataError("--partition-capacity needs --dataset to rebuild partitions");
        }
        const EncodedDataset data = reencode();
        const auto parts = mcx::partition_dataset(data.records, opt.partition_capacity);
        batch = mcx::execute_partitioned(parts, loaded.queries, config);
    } else {
        batch = mcx::execute_batch(index, loaded.queries, config);
    }

    if (opt.oracle) {
        if (opt.dataset.empty()) {
            throw mcx::DataError("--oracle needs --dataset to run the reference scan");
        }
        const EncodedDataset data = reencode();
        for (std::size_t q = 0; q < loaded.queries.size(); ++q) {
            const auto counts = mcx::full_scan_counts(loaded.queries[q], data.records);
            const std::size_t k_eff = std::min<std::size_t>(loaded.queries[q].k, counts.size());
            auto expect = mcx::sort_topk(counts, k_eff);
            std::vector<mcx::TopKEntry> nonzero;
            for (const auto& e : expect) {
                if (e.count > 0) nonzero.push_back(e);
            }
            const std::uint32_t threshold =
                loaded.queries[q].k <= counts.size() && !expect.empty() ? expect.back().count : 0;
            if (nonzero != batch.results[q].entries || threshold != batch.results[q].threshold) {
                throw mcx::InvariantError("oracle mismatch on query " +
                                          std::to_string(loaded.queries[q].id));
            }
        }
    }

    for (std::size_t q = 0; q < batch.results.size(); ++q) {
        const mcx::TopKResult& r = batch.results[q];
        ordered_json line;
        line["query_id"] = r.query_id;
        ordered_json topk = ordered_json::array();
        for (const mcx::TopKEntry& e : r.entries) {
            ordered_json entry;
            entry["id"] = e.id;
            entry["count"] = e.count;
            topk.push_back(std::move(entry));
        }
        line["topk"] = std::move(topk);
        line["threshold"] = r.threshold;
        if (opt.verify && spec.adapter == mcx::Adapter::sequences) {
            std::vector<mcx::CandidateHit> hits;
            for (const mcx::TopKEntry& e : r.entries) {
                hits.push_back(mcx::CandidateHit{e.id, e.count});
            }
            ordered_json v;
            if (hits.empty()) {
                v["certified"] = false;
            } else {
                const auto outcome = mcx::verify_candidates(loaded.texts[q], hits, spec.gram_n,
                                                            corpus, loaded.queries[q].k);
                v["best_id"] = outcome.best_id;
                v["distance"] = outcome.best_distance;
                v["certified"] = outcome.certified;
            }
            line["verified"] = std::move(v);
        }
        std::cout << line.dump() << "\n";
    }

    if (!opt.stats_out.empty()) {
        std::ofstream out(opt.stats_out, std::ios::trunc);
        if (!out) throw mcx::DataError("cannot open " + opt.stats_out + " for writing");
        out << stats_json(batch, loaded.queries.size()).dump(2) << "\n";
    }
    return 0;
}

int cmd_estimate_m(double eps, double delta, const std::string& mode) {
    if (mode != "closed" && mode != "binomial" && mode != "both") {
        throw mcx::DataError("mode must be closed, binomial or both");
    }
    if (mode != "binomial") {
        std::cout << "m_hoeffding," << mcx::required_m_hoeffding(eps, delta) << "\n";
    }
    if (mode != "closed") {
        std::cout << "s,m_binomial\n";
        for (int i = 1; i <= 19; ++i) {
            const double s = 0.05 * i;
            std::cout << s << "," << mcx::required_m_binomial(s, eps, delta) << "\n";
        }
    }
    return 0;
}

int cmd_bench(const BenchOptions& opt) {
    BuildOptions build;
    build.dataset = opt.dataset;
    build.adapter = opt.adapter;
    build.schema_path = opt.schema_path;
    build.seed = opt.seed;
    build.gram_n = opt.gram_n;
    build.m = opt.m;

    const auto t0 = std::chrono::steady_clock::now();
    EncodedDataset data = encode_dataset(build);
    const mcx::InvertedIndex index = mcx::build_index(data.records);
    const auto t1 = std::chrono::steady_clock::now();
    const double build_ms =
        std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(t1 - t0).count();

    // load stage analogue: deserialize the serialized image
    const auto image = mcx::serialize_index(index);
    const auto t2 = std::chrono::steady_clock::now();
    const mcx::InvertedIndex loaded = mcx::deserialize_index(image.data(), image.size());
    const auto t3 = std::chrono::steady_clock::now();
    const double load_ms =
        std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(t3 - t2).count();

    LoadedQueries queries = load_queries(opt.queries_path, data.spec, opt.k);
    if (data.spec.adapter == mcx::Adapter::sequences) {
        for (std::size_t i = 0; i < queries.texts.size(); ++i) {
            const auto query = data.gram_codec->encode_query(queries.texts[i], queries.queries[i].k,
                                                             static_cast<std::uint32_t>(i));
            queries.queries[i] =
                query ? *query
                      : mcx::Query(static_cast<std::uint32_t>(i),
                                   {mcx::QueryItem::point(0, 0xffffffffu)}, queries.queries[i].k);
        }
    }

    std::cout << "selector,workers,runs,build_ms,load_ms,match_ms,select_ms,merge_ms,total_ms,"
                 "result_hash,counter_bytes_per_query\n";
    const std::uint32_t parallel_workers = workers_or_env(opt.workers);
    for (const std::string selector : {"cpq", "bucket", "sort"}) {
        for (std::uint32_t workers : {1u, parallel_workers}) {
            mcx::EngineConfig config = engine_config(selector, workers);
            double match_ms = 0, select_ms = 0, total_ms = 0;
            std::uint64_t hash = 0;
            std::size_t counter_bytes = 0;
            for (std::uint32_t run = 0; run < opt.runs; ++run) {
                const mcx::BatchResult batch = mcx::execute_batch(loaded, queries.queries, config);
                match_ms += static_cast<double>(batch.timings.match_ns) / 1e6;
                select_ms += static_cast<double>(batch.timings.select_ns) / 1e6;
                total_ms += static_cast<double>(batch.timings.total_ns) / 1e6;
                hash = mcx::hash_results(batch.results);
                counter_bytes = batch.memory.counter_bytes;
            }
            const double runs = static_cast<double>(opt.runs);
            std::cout << selector << "," << (workers == 0 ? std::thread::hardware_concurrency()
                                                          : workers)
                      << "," << opt.runs << "," << build_ms << "," << load_ms << ","
                      << match_ms / runs << "," << select_ms / runs << ",0," << total_ms / runs
                      << "," << mcx::hex64(hash) << ","
                      << (queries.queries.empty() ? 0 : counter_bytes / queries.queries.size())
                      << "\n";
            if (workers == parallel_workers) break; // identical configs collapse to one row
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mcx: parallel inverted-index engine for top-k match-count search"};
    app.require_subcommand(1);

    BuildOptions build;
    CLI::App* cmd_b = app.add_subcommand("build", "ingest a dataset and write an index");
    cmd_b->add_option("--dataset", build.dataset, "input dataset path")->required();
    cmd_b->add_option("--format", build.format, "input format (auto|csv|vectors|lines)");
    cmd_b->add_option("--adapter", build.adapter,
                      "relational|vectors-pstable|vectors-rbh|sequences|documents");
    cmd_b->add_option("--index", build.index_path, "output index path")->required();
    cmd_b->add_option("--schema", build.schema_path, "relational schema sidecar (JSON)");
    cmd_b->add_option("--stopwords", build.stopwords_path, "stop-word list, one per line");
    cmd_b->add_option("--n", build.gram_n, "gram length for sequences");
    cmd_b->add_option("--m", build.m, "number of hash functions");
    cmd_b->add_option("--rehash-domain", build.rehash_domain, "re-hash token domain D");
    cmd_b->add_option("--w", build.w, "p-stable bucket width");
    cmd_b->add_option("--buckets", build.bucket_count, "p-stable token bucket count");
    cmd_b->add_option("--bucket-min", build.bucket_min, "smallest raw bucket mapped to token 0");
    cmd_b->add_option("--sigma", build.sigma, "kernel width (0: mean pairwise l1)");
    cmd_b->add_option("--seed", build.seed, "master seed; fixes every random choice");
    cmd_b->add_option("--split-threshold", build.split_threshold,
                      "split postings lists longer than this (0: off)");

    QueryOptions query;
    CLI::App* cmd_q = app.add_subcommand("query", "run a batch of queries against an index");
    cmd_q->add_option("--index", query.index_path, "index path")->required();
    cmd_q->add_option("--queries", query.queries_path, "JSON-lines query file")->required();
    cmd_q->add_option("--dataset", query.dataset,
                      "dataset path (oracle, partitioned runs, sequences)");
    cmd_q->add_option("--k", query.k, "default result count");
    cmd_q->add_option("--selector", query.selector, "cpq|bucket|sort");
    cmd_q->add_option("--workers", query.workers, "worker threads (0: hardware, env MCX_WORKERS)");
    cmd_q->add_option("--partition-capacity", query.partition_capacity,
                      "execute over dataset partitions of this capacity");
    cmd_q->add_flag("--oracle", query.oracle, "also run the reference scan and compare");
    cmd_q->add_flag("--verify", query.verify, "verify sequence candidates by edit distance");
    cmd_q->add_option("--stats-out", query.stats_out, "write timing/memory stats (JSON)");

    double eps = 0.06, delta = 0.06;
    std::string mode = "both";
    CLI::App* cmd_m = app.add_subcommand("estimate-m", "hash-count sizing table");
    cmd_m->add_option("--eps", eps, "accuracy tolerance");
    cmd_m->add_option("--delta", delta, "failure probability");
    cmd_m->add_option("--mode", mode, "closed|binomial|both");

    BenchOptions bench;
    CLI::App* cmd_bn = app.add_subcommand("bench", "stage timing report over a workload");
    cmd_bn->add_option("--dataset", bench.dataset, "input dataset path")->required();
    cmd_bn->add_option("--adapter", bench.adapter, "adapter");
    cmd_bn->add_option("--schema", bench.schema_path, "relational schema sidecar");
    cmd_bn->add_option("--queries", bench.queries_path, "JSON-lines query file")->required();
    cmd_bn->add_option("--k", bench.k, "default result count");
    cmd_bn->add_option("--runs", bench.runs, "repetitions per row (mean reported)");
    cmd_bn->add_option("--workers", bench.workers, "worker threads");
    cmd_bn->add_option("--seed", bench.seed, "master seed");
    cmd_bn->add_option("--n", bench.gram_n, "gram length for sequences");
    cmd_bn->add_option("--m", bench.m, "number of hash functions");

    try {
        app.parse(argc, argv);
        if (cmd_b->parsed()) return cmd_build(build);
        if (cmd_q->parsed()) return cmd_query(query);
        if (cmd_m->parsed()) return cmd_estimate_m(eps, delta, mode);
        if (cmd_bn->parsed()) return cmd_bench(bench);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const mcx::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const mcx::ContractError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
