#include "mpo/dataset.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <unordered_map>

#include <fmt/format.h>

#include "mpo/csv.hpp"
#include "mpo/error.hpp"

namespace mpo {

namespace {

constexpr std::pair<Adapter, std::string_view> kAdapterNames[] = {
    {Adapter::Generic, "generic"},
    {Adapter::EllipticPP, "ellipticpp"},
    {Adapter::EthereumFraud, "ethereum"},
    {Adapter::Wormhole, "wormhole"},
};

/// Streams a headed CSV file; `row` receives the split fields.
void scan_table(const std::filesystem::path& path, const std::function<void(const std::vector<std::string_view>&)>& header,
                const std::function<void(const std::vector<std::string_view>&, const csv::Reader&)>& row) {
    if (!std::filesystem::exists(path)) throw AdapterError("missing file " + path.string());
    csv::Reader reader(path);
    std::string line;
    if (!reader.next(line)) throw AdapterError(path.string() + ": empty file, expected a header row");
    header(csv::split(line));
    while (reader.next(line)) row(csv::split(line), reader);
}

Timestamp parse_time(std::string_view field, const csv::Reader& reader) {
    if (const auto i = csv::parse_int(field)) {
        if (*i < 0) throw ValidationError(reader.file() + ":" + std::to_string(reader.line_number()) + ": negative timestamp");
        return *i;
    }
    if (const auto d = csv::parse_double(field); d && *d >= 0.0) return static_cast<Timestamp>(std::floor(*d));
    throw ParseError(reader.file(), reader.line_number(), "timestamp '" + std::string(field) + "' is not numeric");
}

std::string_view field_at(const std::vector<std::string_view>& fields, std::size_t idx, const csv::Reader& reader) {
    if (idx >= fields.size()) throw ParseError(reader.file(), reader.line_number(), "row is too short");
    return fields[idx];
}

std::string read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TransactionGraph load_adapter(const AdapterColumns& c, const std::filesystem::path& root) {
    GraphBuilder builder;
    std::unordered_map<std::string, Timestamp> node_time;

    if (!c.nodes_file.empty()) {
        std::size_t id_col = 0;
        std::size_t time_col = 0;
        scan_table(
            root / c.nodes_file,
            [&](const auto& header) {
                const auto file = (root / c.nodes_file).string();
                id_col = csv::column_index(header, c.node_id, file);
                if (!c.node_time.empty()) time_col = csv::column_index(header, c.node_time, file);
                if (c.node_feature_count >= 0) {
                    std::size_t features = header.size() - 1;
                    if (c.labels_file == c.nodes_file && !c.label_value.empty()) {
                        csv::column_index(header, c.label_value, file);
                        --features;
                    }
                    if (features != static_cast<std::size_t>(c.node_feature_count))
                        throw AdapterError(file + ": expected " + std::to_string(c.node_feature_count) +
                                           " node feature columns, found " + std::to_string(features));
                }
            },
            [&](const auto& f, const csv::Reader& r) {
                if (!c.node_time.empty())
                    node_time[std::string(field_at(f, id_col, r))] = parse_time(field_at(f, time_col, r), r);
            });
    }

    std::size_t src_col = 0, dst_col = 0, w_col = 0, t_col = 0;
    scan_table(
        root / c.edges_file,
        [&](const auto& header) {
            const auto file = (root / c.edges_file).string();
            src_col = csv::column_index(header, c.edge_src, file);
            dst_col = csv::column_index(header, c.edge_dst, file);
            if (!c.edge_weight.empty()) w_col = csv::column_index(header, c.edge_weight, file);
            if (!c.edge_timestamp.empty()) t_col = csv::column_index(header, c.edge_timestamp, file);
        },
        [&](const auto& f, const csv::Reader& r) {
            const auto src = field_at(f, src_col, r);
            const auto dst = field_at(f, dst_col, r);
            double weight = 1.0;
            if (!c.edge_weight.empty()) {
                const auto w = csv::parse_double(field_at(f, w_col, r));
                if (!w) throw ParseError(r.file(), r.line_number(), "weight is not a number");
                if (*w < 0.0) throw ValidationError(r.file() + ":" + std::to_string(r.line_number()) + ": negative weight");
                weight = *w;
            }
            Timestamp ts = 0;
            if (!c.node_time.empty()) {
                const auto s_it = node_time.find(std::string(src));
                const auto d_it = node_time.find(std::string(dst));
                if (s_it == node_time.end() || d_it == node_time.end())
                    throw AdapterError(r.file() + ":" + std::to_string(r.line_number()) + ": endpoint missing from " +
                                       c.nodes_file);
                if (c.max_time_step >= 0 && (s_it->second >= c.max_time_step || d_it->second >= c.max_time_step)) return;
                ts = s_it->second;
            }
            if (!c.edge_timestamp.empty()) ts = parse_time(field_at(f, t_col, r), r);
            builder.add_edge(src, dst, weight, ts);
        });

    if (!c.labels_file.empty()) {
        std::size_t id_col = 0, value_col = 0;
        scan_table(
            root / c.labels_file,
            [&](const auto& header) {
                const auto file = (root / c.labels_file).string();
                id_col = csv::column_index(header, c.label_id, file);
                value_col = csv::column_index(header, c.label_value, file);
            },
            [&](const auto& f, const csv::Reader& r) {
                const auto value = field_at(f, value_col, r);
                int label = -1;
                if (value == c.illicit_value) label = 1;
                else if (c.licit_value.empty() || value == c.licit_value) label = 0;
                if (label < 0) return;
                // Only nodes that survived edge filtering are labelled.
                if (const auto id = builder.find(field_at(f, id_col, r))) builder.set_label(*id, label);
            });
    }
    return builder.build();
}

constexpr char kCacheMagic[] = "MPOGRAPH1";

std::uint64_t csv_checksum(const std::filesystem::path& dir) {
    std::uint64_t h = fnv1a64("graph-dir");
    for (const char* name : {"edges.csv", "address_map.csv", "labels.csv"}) {
        const auto path = dir / name;
        h = fnv1a64(name, h);
        if (!std::filesystem::exists(path)) {
            h = fnv1a64("<absent>", h);
            continue;
        }
        h = fnv1a64(read_bytes(path), h);
    }
    return h;
}

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
bool get(std::ifstream& in, T& v) {
    return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

void write_cache(const TransactionGraph& g, std::uint64_t checksum, const std::filesystem::path& path) {
    auto out = csv::open_output(path);
    out.write(kCacheMagic, sizeof(kCacheMagic));
    put(out, checksum);
    put(out, static_cast<std::uint64_t>(g.node_count()));
    for (NodeId v = 0; v < g.node_count(); ++v) {
        const auto& a = g.address(v);
        put(out, static_cast<std::uint32_t>(a.size()));
        out.write(a.data(), static_cast<std::streamsize>(a.size()));
    }
    out.write(reinterpret_cast<const char*>(g.labels().data()), static_cast<std::streamsize>(g.labels().size()));
    put(out, static_cast<std::uint64_t>(g.edge_count()));
    for (const Edge& e : g.edges()) {
        put(out, e.src);
        put(out, e.dst);
        put(out, e.weight);
        put(out, e.timestamp);
    }
}

std::optional<TransactionGraph> read_cache(const std::filesystem::path& path, std::uint64_t checksum) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    char magic[sizeof(kCacheMagic)];
    std::uint64_t stored = 0, n = 0, m = 0;
    if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0) return std::nullopt;
    if (!get(in, stored) || stored != checksum || !get(in, n)) return std::nullopt;
    GraphBuilder builder;
    std::string addr;
    for (std::uint64_t v = 0; v < n; ++v) {
        std::uint32_t len = 0;
        if (!get(in, len)) return std::nullopt;
        addr.resize(len);
        if (!in.read(addr.data(), len)) return std::nullopt;
        builder.add_node(addr);
    }
    if (builder.node_count() != n) return std::nullopt;
    std::vector<std::int8_t> labels(n);
    if (!in.read(reinterpret_cast<char*>(labels.data()), static_cast<std::streamsize>(n))) return std::nullopt;
    for (std::uint64_t v = 0; v < n; ++v) {
        if (labels[v] != TransactionGraph::kUnlabeled) builder.set_label(static_cast<NodeId>(v), labels[v]);
    }
    if (!get(in, m)) return std::nullopt;
    for (std::uint64_t i = 0; i < m; ++i) {
        Edge e;
        if (!get(in, e.src) || !get(in, e.dst) || !get(in, e.weight) || !get(in, e.timestamp)) return std::nullopt;
        builder.add_edge(e.src, e.dst, e.weight, e.timestamp);
    }
    return builder.build();
}

TransactionGraph parse_graph_dir(const std::filesystem::path& dir) {
    GraphBuilder builder;
    const auto map_path = dir / "address_map.csv";
    std::size_t mapped = 0;
    if (std::filesystem::exists(map_path)) {
        std::vector<std::string> by_id;
        csv::Reader reader(map_path);
        std::string line;
        bool first = true;
        while (reader.next(line)) {
            const auto f = csv::split(line);
            const bool header = first;
            first = false;
            if (f.size() != 2) throw ParseError(reader.file(), reader.line_number(), "expected address,node_id");
            const auto id = csv::parse_int(f[1]);
            if (!id) {
                if (header) continue;
                throw ParseError(reader.file(), reader.line_number(), "node id is not an integer");
            }
            if (*id < 0) throw ParseError(reader.file(), reader.line_number(), "negative node id");
            const auto idx = static_cast<std::size_t>(*id);
            if (idx >= by_id.size()) by_id.resize(idx + 1);
            if (!by_id[idx].empty()) throw ParseError(reader.file(), reader.line_number(), "duplicate node id");
            by_id[idx] = std::string(f[0]);
        }
        for (std::size_t i = 0; i < by_id.size(); ++i) {
            if (by_id[i].empty()) throw ConsistencyError(map_path.string() + ": node ids are not contiguous (missing " + std::to_string(i) + ")");
            builder.add_node(by_id[i]);
        }
        mapped = by_id.size();
        if (builder.node_count() != mapped) throw ConsistencyError(map_path.string() + ": duplicate address");
    }
    read_edge_list(builder, dir / "edges.csv");
    if (std::filesystem::exists(dir / "labels.csv")) read_labels(builder, dir / "labels.csv");
    if (mapped && builder.node_count() != mapped)
        throw ConsistencyError(dir.string() + ": edges or labels mention addresses absent from address_map.csv");
    return builder.build();
}

}  // namespace

Adapter parse_adapter(std::string_view name) {
    for (const auto& [a, n] : kAdapterNames) {
        if (n == name) return a;
    }
    throw ValidationError("unknown adapter '" + std::string(name) + "'");
}

std::string_view to_string(Adapter adapter) {
    for (const auto& [a, n] : kAdapterNames) {
        if (a == adapter) return n;
    }
    return "unknown";
}

AdapterColumns AdapterColumns::defaults(Adapter adapter) {
    AdapterColumns c;
    switch (adapter) {
    case Adapter::Generic:
        c.edges_file = "edges.csv";
        c.labels_file = "labels.csv";
        break;
    case Adapter::EllipticPP:
        c = {"txs_edgelist.csv", "txId1", "txId2", "", "", "txs_features.csv", "txId", "Time step",
             "txs_classes.csv", "txId", "class", "1", "2", 42, -1};
        break;
    case Adapter::EthereumFraud:
        c = {"transactions.csv", "from_address", "to_address", "value", "block_timestamp", "", "", "",
             "transaction_dataset.csv", "Address", "FLAG", "1", "", -1, -1};
        break;
    case Adapter::Wormhole:
        c = {"edges.csv", "src", "dst", "amount", "timestamp", "nodes.csv", "address", "",
             "nodes.csv", "address", "label", "1", "", -1, 9};
        break;
    }
    return c;
}

void AdapterColumns::apply(const Config& o) {
    auto str = [&](const char* key, std::string& field) { field = o.get_string(std::string("adapter.") + key, field); };
    str("edges_file", edges_file);
    str("edge_src", edge_src);
    str("edge_dst", edge_dst);
    str("edge_weight", edge_weight);
    str("edge_timestamp", edge_timestamp);
    str("nodes_file", nodes_file);
    str("node_id", node_id);
    str("node_time", node_time);
    str("labels_file", labels_file);
    str("label_id", label_id);
    str("label_value", label_value);
    str("illicit_value", illicit_value);
    str("licit_value", licit_value);
    max_time_step = static_cast<int>(o.get_int("adapter.max_time_step", max_time_step));
    node_feature_count = static_cast<int>(o.get_int("adapter.node_feature_count", node_feature_count));
}

TransactionGraph load_dataset(Adapter adapter, const std::filesystem::path& path, const Config& overrides) {
    if (adapter == Adapter::Generic) {
        if (std::filesystem::is_directory(path)) return load_graph_dir(path);
        if (!std::filesystem::exists(path)) throw Error("missing dataset " + path.string());
        return ingest_edge_list(path);
    }
    if (!std::filesystem::is_directory(path)) throw AdapterError(path.string() + " is not a dataset directory");
    auto columns = AdapterColumns::defaults(adapter);
    columns.apply(overrides);
    return load_adapter(columns, path);
}

void save_graph_dir(const TransactionGraph& g, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_edge_list(g, dir / "edges.csv");
    write_address_map(g, dir / "address_map.csv");
    write_labels(g, dir / "labels.csv");
    write_cache(g, csv_checksum(dir), dir / "graph.bin");
}

TransactionGraph load_graph_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::exists(dir / "edges.csv")) throw Error("missing " + (dir / "edges.csv").string());
    const auto checksum = csv_checksum(dir);
    if (auto cached = read_cache(dir / "graph.bin", checksum)) return std::move(*cached);
    return parse_graph_dir(dir);
}

std::uint64_t graph_checksum(const TransactionGraph& g) {
    std::uint64_t h = fnv1a64("graph");
    for (NodeId v = 0; v < g.node_count(); ++v) {
        h = fnv1a64(g.address(v), h);
        h = fnv1a64(fmt::format("|{}\n", static_cast<int>(g.labels()[v])), h);
    }
    for (const Edge& e : g.edges()) h = fnv1a64(fmt::format("{},{},{},{}\n", e.src, e.dst, e.weight, e.timestamp), h);
    return h;
}

}  // namespace mpo
