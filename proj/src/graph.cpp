#include "mpo/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mpo/csv.hpp"
#include "mpo/error.hpp"

namespace mpo {

// ---------------------------------------------------------------------------
// TransactionGraph

void TransactionGraph::check(NodeId v) const {
    if (v >= node_count()) throw LookupError("unknown node id " + std::to_string(v));
}

std::span<const EdgeId> TransactionGraph::out_edges(NodeId v) const {
    check(v);
    return {out_edge_ids_.data() + out_offsets_[v], out_offsets_[v + 1] - out_offsets_[v]};
}

std::span<const NodeId> TransactionGraph::out_targets(NodeId v) const {
    check(v);
    return {out_targets_.data() + out_offsets_[v], out_offsets_[v + 1] - out_offsets_[v]};
}

std::span<const EdgeId> TransactionGraph::in_edges(NodeId v) const {
    check(v);
    return {in_edge_ids_.data() + in_offsets_[v], in_offsets_[v + 1] - in_offsets_[v]};
}

const std::string& TransactionGraph::address(NodeId v) const {
    check(v);
    return addresses_[v];
}

std::optional<NodeId> TransactionGraph::find(std::string_view address) const {
    const auto it = index_.find(std::string(address));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

NodeId TransactionGraph::id_of(std::string_view address) const {
    if (auto id = find(address)) return *id;
    throw LookupError("unknown address '" + std::string(address) + "'");
}

std::optional<int> TransactionGraph::label(NodeId v) const {
    check(v);
    if (labels_[v] == kUnlabeled) return std::nullopt;
    return labels_[v];
}

// ---------------------------------------------------------------------------
// GraphBuilder

NodeId GraphBuilder::add_node(std::string_view address) {
    std::string key(address);
    if (auto it = index_.find(key); it != index_.end()) return it->second;
    if (addresses_.size() >= std::numeric_limits<NodeId>::max())
        throw ValidationError("too many nodes for 32-bit node ids");
    const auto id = static_cast<NodeId>(addresses_.size());
    index_.emplace(key, id);
    addresses_.push_back(std::move(key));
    labels_.push_back(TransactionGraph::kUnlabeled);
    return id;
}

std::optional<NodeId> GraphBuilder::find(std::string_view address) const {
    const auto it = index_.find(std::string(address));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void GraphBuilder::add_edge(NodeId src, NodeId dst, double weight, Timestamp timestamp) {
    if (src >= addresses_.size() || dst >= addresses_.size())
        throw LookupError("edge endpoint is not a known node");
    if (!std::isfinite(weight) || weight < 0.0)
        throw ValidationError("edge weight must be a finite non-negative number");
    if (timestamp < 0) throw ValidationError("edge timestamp must be non-negative");
    edges_.push_back({src, dst, weight, timestamp});
}

void GraphBuilder::add_edge(std::string_view src, std::string_view dst, double weight, Timestamp timestamp) {
    const NodeId s = add_node(src);
    const NodeId d = add_node(dst);
    add_edge(s, d, weight, timestamp);
}

void GraphBuilder::set_label(NodeId v, int label) {
    if (v >= addresses_.size()) throw LookupError("unknown node id " + std::to_string(v));
    if (label != 0 && label != 1) throw ValidationError("label must be 0 or 1");
    labels_[v] = static_cast<std::int8_t>(label);
}

void GraphBuilder::set_label(std::string_view address, int label) { set_label(add_node(address), label); }

void GraphBuilder::reserve(std::size_t nodes, std::size_t edges) {
    addresses_.reserve(nodes);
    labels_.reserve(nodes);
    index_.reserve(nodes);
    edges_.reserve(edges);
}

TransactionGraph GraphBuilder::build() {
    TransactionGraph g;
    const std::size_t n = addresses_.size();
    const std::size_t m = edges_.size();

    g.out_offsets_.assign(n + 1, 0);
    g.in_offsets_.assign(n + 1, 0);
    for (const Edge& e : edges_) {
        ++g.out_offsets_[e.src + 1];
        ++g.in_offsets_[e.dst + 1];
    }
    for (std::size_t v = 0; v < n; ++v) {
        g.out_offsets_[v + 1] += g.out_offsets_[v];
        g.in_offsets_[v + 1] += g.in_offsets_[v];
    }
    g.out_edge_ids_.resize(m);
    g.out_targets_.resize(m);
    g.in_edge_ids_.resize(m);
    std::vector<std::size_t> out_cursor(g.out_offsets_.begin(), g.out_offsets_.end() - 1);
    std::vector<std::size_t> in_cursor(g.in_offsets_.begin(), g.in_offsets_.end() - 1);
    // Edge ids are assigned in insertion order, so both lists stay in row order.
    for (std::size_t i = 0; i < m; ++i) {
        const Edge& e = edges_[i];
        const auto id = static_cast<EdgeId>(i);
        const auto o = out_cursor[e.src]++;
        g.out_edge_ids_[o] = id;
        g.out_targets_[o] = e.dst;
        g.in_edge_ids_[in_cursor[e.dst]++] = id;
    }

    g.labelled_count_ = static_cast<std::size_t>(
        std::count_if(labels_.begin(), labels_.end(), [](auto l) { return l != TransactionGraph::kUnlabeled; }));
    g.edges_ = std::move(edges_);
    g.addresses_ = std::move(addresses_);
    g.index_ = std::move(index_);
    g.labels_ = std::move(labels_);
    *this = GraphBuilder{};
    return g;
}

// ---------------------------------------------------------------------------
// File formats

void read_edge_list(GraphBuilder& builder, const std::filesystem::path& edges, const EdgeListFormat& format) {
    csv::Reader reader(edges);
    std::string line;
    bool first = true;
    while (reader.next(line)) {
        const auto fields = csv::split(line, format.delimiter);
        const bool header_candidate = first;
        first = false;
        if (fields.size() != 4) {
            if (header_candidate && fields.size() >= 3 && !csv::parse_double(fields[2])) continue;
            throw ParseError(reader.file(), reader.line_number(),
                             "expected 4 fields (src,dst,weight,timestamp), got " + std::to_string(fields.size()));
        }
        const auto weight = csv::parse_double(fields[2]);
        if (!weight) {
            if (header_candidate) continue;
            throw ParseError(reader.file(), reader.line_number(),
                             "weight '" + std::string(fields[2]) + "' is not a number");
        }
        const auto ts = csv::parse_int(fields[3]);
        if (!ts) {
            throw ParseError(reader.file(), reader.line_number(),
                             "timestamp '" + std::string(fields[3]) + "' is not an integer");
        }
        if (fields[0].empty() || fields[1].empty())
            throw ParseError(reader.file(), reader.line_number(), "empty address");
        if (*weight < 0.0)
            throw ValidationError(reader.file() + ":" + std::to_string(reader.line_number()) +
                                  ": negative weight " + std::string(fields[2]));
        if (*ts < 0)
            throw ValidationError(reader.file() + ":" + std::to_string(reader.line_number()) +
                                  ": negative timestamp " + std::string(fields[3]));
        builder.add_edge(fields[0], fields[1], *weight, *ts);
    }
}

void read_labels(GraphBuilder& builder, const std::filesystem::path& labels, char delimiter) {
    csv::Reader reader(labels);
    std::string line;
    bool first = true;
    while (reader.next(line)) {
        const auto fields = csv::split(line, delimiter);
        const bool header_candidate = first;
        first = false;
        if (fields.size() != 2)
            throw ParseError(reader.file(), reader.line_number(), "expected 2 fields (address,label)");
        const auto label = csv::parse_int(fields[1]);
        if (!label) {
            if (header_candidate) continue;
            throw ParseError(reader.file(), reader.line_number(), "label is not an integer");
        }
        if (*label != 0 && *label != 1)
            throw ValidationError(reader.file() + ":" + std::to_string(reader.line_number()) +
                                  ": label must be 0 or 1");
        builder.set_label(fields[0], static_cast<int>(*label));
    }
}

TransactionGraph ingest_edge_list(const std::filesystem::path& edges, const EdgeListFormat& format) {
    GraphBuilder builder;
    read_edge_list(builder, edges, format);
    return builder.build();
}

TransactionGraph ingest_edge_list(const std::filesystem::path& edges, const std::filesystem::path& labels,
                                  const EdgeListFormat& format) {
    GraphBuilder builder;
    read_edge_list(builder, edges, format);
    read_labels(builder, labels, format.delimiter);
    return builder.build();
}

void write_edge_list(const TransactionGraph& g, const std::filesystem::path& path) {
    auto out = csv::open_output(path);
    out << "src,dst,weight,timestamp\n";
    for (const Edge& e : g.edges()) {
        out << g.address(e.src) << ',' << g.address(e.dst) << ',' << csv::format_double(e.weight) << ','
            << e.timestamp << '\n';
    }
}

void write_address_map(const TransactionGraph& g, const std::filesystem::path& path) {
    auto out = csv::open_output(path);
    out << "address,node_id\n";
    for (NodeId v = 0; v < g.node_count(); ++v) out << g.address(v) << ',' << v << '\n';
}

void write_labels(const TransactionGraph& g, const std::filesystem::path& path) {
    auto out = csv::open_output(path);
    out << "address,label\n";
    for (NodeId v = 0; v < g.node_count(); ++v) {
        if (auto l = g.label(v)) out << g.address(v) << ',' << *l << '\n';
    }
}

// ---------------------------------------------------------------------------
// Structural queries

std::vector<NodeId> identify_sources(const TransactionGraph& g) {
    std::vector<NodeId> sources;
    for (NodeId v = 0; v < g.node_count(); ++v) {
        if (g.in_degree(v) == 0 && g.out_degree(v) > 0) sources.push_back(v);
    }
    return sources;
}

double fan_in(const TransactionGraph& g, NodeId v, DegreeMode mode) {
    const auto in = g.in_edges(v);
    if (mode == DegreeMode::Count) return static_cast<double>(in.size());
    double sum = 0.0;
    for (EdgeId e : in) sum += g.edge(e).weight;
    return sum;
}

double fan_out(const TransactionGraph& g, NodeId v, DegreeMode mode) {
    const auto out = g.out_edges(v);
    if (mode == DegreeMode::Count) return static_cast<double>(out.size());
    double sum = 0.0;
    for (EdgeId e : out) sum += g.edge(e).weight;
    return sum;
}

double gather_scatter(const TransactionGraph& g, NodeId v, DegreeMode mode) {
    return fan_in(g, v, mode) + fan_out(g, v, mode);
}

std::pair<Timestamp, Timestamp> time_span(const TransactionGraph& g) {
    if (g.edge_count() == 0) return {0, 0};
    Timestamp lo = std::numeric_limits<Timestamp>::max();
    Timestamp hi = std::numeric_limits<Timestamp>::min();
    for (const Edge& e : g.edges()) {
        lo = std::min(lo, e.timestamp);
        hi = std::max(hi, e.timestamp);
    }
    return {lo, hi};
}

}  // namespace mpo
