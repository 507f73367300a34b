#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "mpo/config.hpp"
#include "mpo/graph.hpp"

namespace mpo {

enum class Adapter { Generic, EllipticPP, EthereumFraud, Wormhole };

/// generic, ellipticpp, ethereum, wormhole
Adapter parse_adapter(std::string_view name);
std::string_view to_string(Adapter adapter);

/// File and column names an adapter reads. Defaults follow the public releases; any field can be
/// overridden through `adapter.<field>` config keys.
struct AdapterColumns {
    std::string edges_file;
    std::string edge_src;
    std::string edge_dst;
    std::string edge_weight;     ///< empty: every edge weighs 1
    std::string edge_timestamp;  ///< empty: timestamp taken from the node table
    std::string nodes_file;      ///< per-node table (time step, features); empty when unused
    std::string node_id;
    std::string node_time;
    std::string labels_file;
    std::string label_id;
    std::string label_value;
    std::string illicit_value;   ///< label value mapped to 1
    std::string licit_value;     ///< label value mapped to 0; empty: everything else is 0
    int max_time_step = -1;      ///< keep edges whose time step is below this; -1 keeps everything
    int node_feature_count = -1; ///< expected feature columns in the node table; -1 skips the check

    static AdapterColumns defaults(Adapter adapter);
    void apply(const Config& overrides);
};

/// Generic: `path` is a graph directory (edges.csv, optional labels.csv and address_map.csv) or a
/// single edge-list file. The other adapters read the column-mapped layout described by AdapterColumns.
/// Missing columns raise AdapterError naming the column.
TransactionGraph load_dataset(Adapter adapter, const std::filesystem::path& path, const Config& overrides = {});

/// Writes edges.csv, address_map.csv, labels.csv and the binary cache graph.bin.
void save_graph_dir(const TransactionGraph& g, const std::filesystem::path& dir);

/// Reads a graph directory. When address_map.csv exists node ids follow it exactly. A graph.bin whose
/// recorded checksum matches the CSV files is used instead of parsing them.
TransactionGraph load_graph_dir(const std::filesystem::path& dir);

/// FNV-1a over the canonical graph content (addresses, labels, edges).
std::uint64_t graph_checksum(const TransactionGraph& g);

}  // namespace mpo
