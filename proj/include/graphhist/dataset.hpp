#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "graphhist/graph.hpp"

namespace graphhist {

/// A labeled graph collection. Labels are dense class indices in
/// [0, num_classes); every class occurs at least once.
struct GraphDataset {
  std::string name;
  std::vector<Graph> graphs;
  std::vector<std::int64_t> labels;
  std::int64_t num_classes = 0;

  std::int64_t size() const { return static_cast<std::int64_t>(graphs.size()); }
};

struct LoadOptions {
  /// When true and `{name}_node_labels.txt` exists, node labels become
  /// one-hot features instead of the degree/constant default.
  bool use_node_labels = false;
};

/// Loads `{name}_A.txt`, `{name}_graph_indicator.txt` and
/// `{name}_graph_labels.txt` from `dir`. File node ids are 1-based; raw
/// labels are remapped to 0..m-1 in ascending order of raw value.
/// Self-loops and features are attached to every graph.
GraphDataset load_tu_dataset(const std::string& dir, const std::string& name,
                             const LoadOptions& options = {});

/// Writes the dataset back in the same three-file format (raw labels are the
/// dense indices). Reloading yields an isomorphic dataset.
void write_tu_dataset(const GraphDataset& ds, const std::string& dir, const std::string& name);

struct FoldPlan {
  // (train indices, test indices) per fold
  std::vector<std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>>> folds;
  std::uint64_t seed = 0;
};

/// Stratified k-fold split: per-class indices are shuffled by the seed and
/// dealt round-robin, so per-class fold sizes differ by at most one. A class
/// with fewer members than folds is spread best-effort with a warning on
/// stderr.
FoldPlan split_folds(const GraphDataset& ds, int n_folds, std::uint64_t seed);

/// Resamples minority classes with replacement until every class matches the
/// majority count, then shuffles. Every original index is retained.
std::vector<std::int64_t> oversample(const std::vector<std::int64_t>& train_indices,
                                     const std::vector<std::int64_t>& labels,
                                     std::uint64_t seed);

/// A mini-batch: the block-diagonal Laplacian of its member graphs, their
/// stacked features, and per-graph node ranges for the binning layer.
struct Batch {
  SparseLaplacian laplacian;
  Tensor features;                                        // total_nodes x f
  std::vector<std::pair<std::int64_t, std::int64_t>> boundaries;  // [start, end) per graph
  std::vector<std::int64_t> labels;

  std::int64_t num_graphs() const { return static_cast<std::int64_t>(boundaries.size()); }
};

Batch make_batch(const std::vector<const Graph*>& graphs,
                 const std::vector<std::int64_t>& labels);

/// Convenience: batch of the dataset members at `indices`.
Batch make_batch(const GraphDataset& ds, const std::vector<std::int64_t>& indices);

enum class SynthKind { stars_vs_cycles, er_density_pair };

SynthKind parse_synth_kind(const std::string& name);

/// Seeded synthetic corpus. stars_vs_cycles emits star graphs (class 0) and
/// cycle graphs (class 1); er_density_pair emits Erdos-Renyi graphs at two
/// distinct edge probabilities. Node counts are uniform in
/// [min_nodes, max_nodes]; min_nodes must be at least 3.
GraphDataset synth_dataset(SynthKind kind, std::int64_t count, std::int64_t min_nodes,
                           std::int64_t max_nodes, std::uint64_t seed);

}  // namespace graphhist
