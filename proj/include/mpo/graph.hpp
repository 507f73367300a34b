#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mpo {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;
using Timestamp = std::int64_t;

struct Edge {
    NodeId src = 0;
    NodeId dst = 0;
    double weight = 0.0;
    Timestamp timestamp = 0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Fan statistics can be taken as weighted sums (default) or as plain edge counts.
enum class DegreeMode { Weighted, Count };

/// Immutable directed multigraph of transfers.
///
/// Node ids are dense (0..node_count()-1) and map one-to-one onto external
/// addresses. Both adjacency directions are CSR indices into edges(); within a
/// node's list, edges keep their ingestion order. Safe for concurrent reads.
class TransactionGraph {
public:
    static constexpr std::int8_t kUnlabeled = -1;

    TransactionGraph() = default;

    std::size_t node_count() const noexcept { return addresses_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }

    std::span<const Edge> edges() const noexcept { return edges_; }
    const Edge& edge(EdgeId e) const { return edges_.at(e); }

    std::span<const EdgeId> out_edges(NodeId v) const;
    std::span<const EdgeId> in_edges(NodeId v) const;
    /// Out-neighbour of each out edge, parallel to out_edges(v). Repeats for parallel edges.
    std::span<const NodeId> out_targets(NodeId v) const;

    std::size_t out_degree(NodeId v) const { return out_edges(v).size(); }
    std::size_t in_degree(NodeId v) const { return in_edges(v).size(); }

    const std::string& address(NodeId v) const;
    std::optional<NodeId> find(std::string_view address) const;
    /// Like find() but throws LookupError.
    NodeId id_of(std::string_view address) const;

    bool has_labels() const noexcept { return labelled_count_ > 0; }
    std::optional<int> label(NodeId v) const;
    std::span<const std::int8_t> labels() const noexcept { return labels_; }

    bool contains(NodeId v) const noexcept { return v < node_count(); }

private:
    friend class GraphBuilder;

    void check(NodeId v) const;

    std::vector<Edge> edges_;
    std::vector<std::string> addresses_;
    std::unordered_map<std::string, NodeId> index_;
    std::vector<std::int8_t> labels_;
    std::size_t labelled_count_ = 0;

    std::vector<std::size_t> out_offsets_;
    std::vector<EdgeId> out_edge_ids_;
    std::vector<NodeId> out_targets_;
    std::vector<std::size_t> in_offsets_;
    std::vector<EdgeId> in_edge_ids_;
};

/// Accumulates nodes, edges and labels, then freezes them into a TransactionGraph.
class GraphBuilder {
public:
    /// Returns the id for address, creating an isolated node on first sight.
    NodeId add_node(std::string_view address);
    void add_edge(NodeId src, NodeId dst, double weight, Timestamp timestamp);
    void add_edge(std::string_view src, std::string_view dst, double weight, Timestamp timestamp);
    void set_label(NodeId v, int label);
    void set_label(std::string_view address, int label);

    std::optional<NodeId> find(std::string_view address) const;

    std::size_t node_count() const noexcept { return addresses_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    void reserve(std::size_t nodes, std::size_t edges);

    /// Builds the CSR indices. The builder is left empty.
    TransactionGraph build();

private:
    std::vector<Edge> edges_;
    std::vector<std::string> addresses_;
    std::unordered_map<std::string, NodeId> index_;
    std::vector<std::int8_t> labels_;
};

struct EdgeListFormat {
    char delimiter = ',';
};

/// Reads `src,dst,weight,timestamp` rows. A first row whose weight field is not
/// numeric is treated as a header. Throws ParseError (with line number) on
/// malformed rows and ValidationError on negative weight or timestamp.
TransactionGraph ingest_edge_list(const std::filesystem::path& edges, const EdgeListFormat& format = {});

/// Same as above, then attaches `address,label` ground truth. Addresses that
/// only appear in the label file become isolated nodes.
TransactionGraph ingest_edge_list(const std::filesystem::path& edges, const std::filesystem::path& labels,
                                  const EdgeListFormat& format = {});

/// Feeds an edge-list file into an existing builder.
void read_edge_list(GraphBuilder& builder, const std::filesystem::path& edges, const EdgeListFormat& format = {});
void read_labels(GraphBuilder& builder, const std::filesystem::path& labels, char delimiter = ',');

void write_edge_list(const TransactionGraph& g, const std::filesystem::path& path);
void write_address_map(const TransactionGraph& g, const std::filesystem::path& path);
/// Writes `address,label` for every labelled node, in id order.
void write_labels(const TransactionGraph& g, const std::filesystem::path& path);

/// Nodes with no incoming edge and at least one outgoing edge, ascending.
std::vector<NodeId> identify_sources(const TransactionGraph& g);

double fan_in(const TransactionGraph& g, NodeId v, DegreeMode mode = DegreeMode::Weighted);
double fan_out(const TransactionGraph& g, NodeId v, DegreeMode mode = DegreeMode::Weighted);
double gather_scatter(const TransactionGraph& g, NodeId v, DegreeMode mode = DegreeMode::Weighted);

/// Earliest and latest timestamp over all edges; {0,0} for an edgeless graph.
std::pair<Timestamp, Timestamp> time_span(const TransactionGraph& g);

}  // namespace mpo
