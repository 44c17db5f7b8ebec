#include "graphhist/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "graphhist/rng.hpp"

namespace graphhist {

namespace {

namespace fs = std::filesystem;

std::string file_pos(const std::string& path, std::int64_t line) {
  return path + ":" + std::to_string(line);
}

/// Reads one integer token per comma/whitespace-separated field. Throws with
/// file and line number on anything that is not an integer.
std::vector<std::int64_t> parse_int_fields(const std::string& raw, const std::string& path,
                                           std::int64_t line_no) {
  std::vector<std::int64_t> fields;
  std::string token;
  std::istringstream ss(raw);
  while (std::getline(ss, token, ',')) {
    std::istringstream ts(token);
    std::int64_t v;
    if (!(ts >> v)) {
      throw std::runtime_error("non-integer token '" + token + "' at " +
                               file_pos(path, line_no));
    }
    std::string rest;
    if (ts >> rest) {
      throw std::runtime_error("trailing characters '" + rest + "' at " +
                               file_pos(path, line_no));
    }
    fields.push_back(v);
  }
  return fields;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  // trailing blank lines are common; interior ones are kept so line numbers
  // in diagnostics stay faithful
  while (!lines.empty() && lines.back().find_first_not_of(" \t\r") == std::string::npos) {
    lines.pop_back();
  }
  return lines;
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

GraphDataset load_tu_dataset(const std::string& dir, const std::string& name,
                             const LoadOptions& options) {
  const std::string a_path = (fs::path(dir) / (name + "_A.txt")).string();
  const std::string ind_path = (fs::path(dir) / (name + "_graph_indicator.txt")).string();
  const std::string lab_path = (fs::path(dir) / (name + "_graph_labels.txt")).string();
  const std::string node_lab_path = (fs::path(dir) / (name + "_node_labels.txt")).string();

  // graph indicator: line t holds the 1-based graph id of node t
  const std::vector<std::string> ind_lines = read_lines(ind_path);
  std::vector<std::int64_t> node_graph;  // 0-based graph id per 0-based global node
  node_graph.reserve(ind_lines.size());
  std::int64_t num_graphs = 0;
  for (std::size_t i = 0; i < ind_lines.size(); ++i) {
    if (blank(ind_lines[i])) {
      throw std::runtime_error("blank line at " + file_pos(ind_path, static_cast<std::int64_t>(i + 1)));
    }
    const auto fields = parse_int_fields(ind_lines[i], ind_path, static_cast<std::int64_t>(i + 1));
    if (fields.size() != 1 || fields[0] < 1) {
      throw std::runtime_error("expected one positive graph id at " +
                               file_pos(ind_path, static_cast<std::int64_t>(i + 1)));
    }
    node_graph.push_back(fields[0] - 1);
    num_graphs = std::max(num_graphs, fields[0]);
  }
  const std::int64_t total_nodes = static_cast<std::int64_t>(node_graph.size());

  // local ids per graph, in order of appearance
  std::vector<std::int64_t> local_id(node_graph.size());
  std::vector<std::int64_t> graph_size(static_cast<std::size_t>(num_graphs), 0);
  for (std::size_t i = 0; i < node_graph.size(); ++i) {
    local_id[i] = graph_size[static_cast<std::size_t>(node_graph[i])]++;
  }

  // edges
  std::vector<std::vector<Edge>> edges(static_cast<std::size_t>(num_graphs));
  const std::vector<std::string> a_lines = read_lines(a_path);
  for (std::size_t i = 0; i < a_lines.size(); ++i) {
    if (blank(a_lines[i])) continue;
    const std::int64_t line_no = static_cast<std::int64_t>(i + 1);
    const auto fields = parse_int_fields(a_lines[i], a_path, line_no);
    if (fields.size() != 2) {
      throw std::runtime_error("expected 'i, j' at " + file_pos(a_path, line_no));
    }
    const std::int64_t u = fields[0] - 1, v = fields[1] - 1;
    if (u < 0 || u >= total_nodes || v < 0 || v >= total_nodes) {
      throw std::runtime_error("node referenced outside any graph at " +
                               file_pos(a_path, line_no));
    }
    if (node_graph[static_cast<std::size_t>(u)] != node_graph[static_cast<std::size_t>(v)]) {
      throw std::runtime_error("edge crosses graph boundary at " + file_pos(a_path, line_no));
    }
    edges[static_cast<std::size_t>(node_graph[static_cast<std::size_t>(u)])].push_back(
        {local_id[static_cast<std::size_t>(u)], local_id[static_cast<std::size_t>(v)], 1.0});
  }

  // labels, remapped to a dense 0..m-1 range in ascending raw order
  const std::vector<std::string> lab_lines = read_lines(lab_path);
  if (static_cast<std::int64_t>(lab_lines.size()) != num_graphs) {
    throw std::runtime_error(lab_path + ": expected " + std::to_string(num_graphs) +
                             " labels, found " + std::to_string(lab_lines.size()));
  }
  std::vector<std::int64_t> raw_labels;
  raw_labels.reserve(lab_lines.size());
  for (std::size_t i = 0; i < lab_lines.size(); ++i) {
    const auto fields = parse_int_fields(lab_lines[i], lab_path, static_cast<std::int64_t>(i + 1));
    if (fields.size() != 1) {
      throw std::runtime_error("expected one label at " +
                               file_pos(lab_path, static_cast<std::int64_t>(i + 1)));
    }
    raw_labels.push_back(fields[0]);
  }
  std::map<std::int64_t, std::int64_t> remap;
  for (std::int64_t raw : raw_labels) remap.emplace(raw, 0);
  std::int64_t next = 0;
  for (auto& [raw, dense] : remap) dense = next++;

  // optional node labels as one-hot features
  std::vector<std::int64_t> node_labels;
  std::map<std::int64_t, std::int64_t> node_label_remap;
  if (options.use_node_labels) {
    const std::vector<std::string> nl_lines = read_lines(node_lab_path);
    if (static_cast<std::int64_t>(nl_lines.size()) != total_nodes) {
      throw std::runtime_error(node_lab_path + ": expected " + std::to_string(total_nodes) +
                               " node labels, found " + std::to_string(nl_lines.size()));
    }
    for (std::size_t i = 0; i < nl_lines.size(); ++i) {
      const auto fields =
          parse_int_fields(nl_lines[i], node_lab_path, static_cast<std::int64_t>(i + 1));
      if (fields.size() != 1) {
        throw std::runtime_error("expected one node label at " +
                                 file_pos(node_lab_path, static_cast<std::int64_t>(i + 1)));
      }
      node_labels.push_back(fields[0]);
      node_label_remap.emplace(fields[0], 0);
    }
    next = 0;
    for (auto& [raw, dense] : node_label_remap) dense = next++;
  }

  GraphDataset ds;
  ds.name = name;
  ds.num_classes = static_cast<std::int64_t>(remap.size());
  ds.graphs.reserve(static_cast<std::size_t>(num_graphs));
  for (std::int64_t g = 0; g < num_graphs; ++g) {
    Graph graph = add_self_loops(
        make_graph(graph_size[static_cast<std::size_t>(g)], edges[static_cast<std::size_t>(g)]));
    graph.features = default_features(graph);
    ds.graphs.push_back(std::move(graph));
    ds.labels.push_back(remap.at(raw_labels[static_cast<std::size_t>(g)]));
  }

  if (options.use_node_labels) {
    const std::int64_t alphabet = static_cast<std::int64_t>(node_label_remap.size());
    std::vector<Tensor> feats;
    feats.reserve(ds.graphs.size());
    for (const Graph& g : ds.graphs) feats.emplace_back(Tensor({g.n, alphabet}));
    for (std::int64_t v = 0; v < total_nodes; ++v) {
      const std::int64_t g = node_graph[static_cast<std::size_t>(v)];
      feats[static_cast<std::size_t>(g)](local_id[static_cast<std::size_t>(v)],
                                         node_label_remap.at(node_labels[static_cast<std::size_t>(v)])) = 1.0;
    }
    for (std::size_t g = 0; g < ds.graphs.size(); ++g) ds.graphs[g].features = std::move(feats[g]);
  }

  return ds;
}

void write_tu_dataset(const GraphDataset& ds, const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream a_out((fs::path(dir) / (name + "_A.txt")).string());
  std::ofstream ind_out((fs::path(dir) / (name + "_graph_indicator.txt")).string());
  std::ofstream lab_out((fs::path(dir) / (name + "_graph_labels.txt")).string());
  if (!a_out || !ind_out || !lab_out) {
    throw std::runtime_error("cannot write TU files under " + dir);
  }
  std::int64_t offset = 1;  // 1-based global ids
  for (std::size_t g = 0; g < ds.graphs.size(); ++g) {
    const Graph& graph = ds.graphs[g];
    for (const Edge& e : graph.edges) {
      a_out << offset + e.src << ", " << offset + e.dst << "\n";
    }
    for (std::int64_t v = 0; v < graph.n; ++v) ind_out << g + 1 << "\n";
    lab_out << ds.labels[g] << "\n";
    offset += graph.n;
  }
}

FoldPlan split_folds(const GraphDataset& ds, int n_folds, std::uint64_t seed) {
  if (n_folds < 2) throw std::invalid_argument("split_folds: need at least 2 folds");
  if (ds.size() < n_folds) {
    throw std::invalid_argument("split_folds: dataset smaller than fold count");
  }
  std::vector<std::vector<std::int64_t>> per_class(static_cast<std::size_t>(ds.num_classes));
  for (std::int64_t i = 0; i < ds.size(); ++i) {
    per_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])].push_back(i);
  }
  std::vector<std::vector<std::int64_t>> test_sets(static_cast<std::size_t>(n_folds));
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    if (per_class[c].size() < static_cast<std::size_t>(n_folds)) {
      std::cerr << "warning: class " << c << " has " << per_class[c].size()
                << " members for " << n_folds << " folds; spreading best-effort\n";
    }
    Rng rng(Rng::derive(seed, c));
    rng.shuffle(per_class[c]);
    for (std::size_t i = 0; i < per_class[c].size(); ++i) {
      test_sets[i % static_cast<std::size_t>(n_folds)].push_back(per_class[c][i]);
    }
  }
  FoldPlan plan;
  plan.seed = seed;
  for (int f = 0; f < n_folds; ++f) {
    auto& test = test_sets[static_cast<std::size_t>(f)];
    std::sort(test.begin(), test.end());
    std::vector<std::int64_t> train;
    train.reserve(static_cast<std::size_t>(ds.size()) - test.size());
    std::size_t t = 0;
    for (std::int64_t i = 0; i < ds.size(); ++i) {
      if (t < test.size() && test[t] == i) {
        ++t;
      } else {
        train.push_back(i);
      }
    }
    plan.folds.emplace_back(std::move(train), std::move(test));
  }
  return plan;
}

std::vector<std::int64_t> oversample(const std::vector<std::int64_t>& train_indices,
                                     const std::vector<std::int64_t>& labels,
                                     std::uint64_t seed) {
  if (train_indices.empty()) throw std::invalid_argument("oversample: empty index list");
  std::map<std::int64_t, std::vector<std::int64_t>> per_class;
  for (std::int64_t idx : train_indices) {
    per_class[labels[static_cast<std::size_t>(idx)]].push_back(idx);
  }
  std::size_t majority = 0;
  for (const auto& [cls, members] : per_class) majority = std::max(majority, members.size());

  Rng rng(seed);
  std::vector<std::int64_t> out = train_indices;
  for (const auto& [cls, members] : per_class) {
    for (std::size_t i = members.size(); i < majority; ++i) {
      out.push_back(members[static_cast<std::size_t>(
          rng.uniform_int(static_cast<std::int64_t>(members.size())))]);
    }
  }
  rng.shuffle(out);
  return out;
}

Batch make_batch(const std::vector<const Graph*>& graphs,
                 const std::vector<std::int64_t>& labels) {
  if (graphs.empty()) throw std::invalid_argument("make_batch: empty graph list");
  if (graphs.size() != labels.size()) {
    throw std::invalid_argument("make_batch: graphs and labels differ in length");
  }
  std::int64_t total_nodes = 0, total_nnz = 0;
  const std::int64_t f = graphs.front()->features ? graphs.front()->features->cols() : 0;
  if (f == 0) throw std::invalid_argument("make_batch: graphs carry no features");

  std::vector<SparseLaplacian> laps;
  laps.reserve(graphs.size());
  for (const Graph* g : graphs) {
    if (!g->features || g->features->cols() != f) {
      throw std::invalid_argument("make_batch: inconsistent feature widths");
    }
    laps.push_back(normalized_laplacian(*g));
    total_nodes += g->n;
    total_nnz += laps.back().nnz();
  }

  Batch batch;
  batch.labels = labels;
  batch.features = Tensor({total_nodes, f});
  batch.laplacian.n = total_nodes;
  batch.laplacian.row_ptr.reserve(static_cast<std::size_t>(total_nodes) + 1);
  batch.laplacian.row_ptr.push_back(0);
  batch.laplacian.col.reserve(static_cast<std::size_t>(total_nnz));
  batch.laplacian.val.reserve(static_cast<std::size_t>(total_nnz));

  std::int64_t offset = 0;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const Graph& g = *graphs[gi];
    const SparseLaplacian& lap = laps[gi];
    batch.boundaries.emplace_back(offset, offset + g.n);
    for (std::int64_t i = 0; i < g.n; ++i) {
      for (std::int64_t p = lap.row_ptr[static_cast<std::size_t>(i)];
           p < lap.row_ptr[static_cast<std::size_t>(i) + 1]; ++p) {
        batch.laplacian.col.push_back(lap.col[static_cast<std::size_t>(p)] + offset);
        batch.laplacian.val.push_back(lap.val[static_cast<std::size_t>(p)]);
      }
      batch.laplacian.row_ptr.push_back(
          static_cast<std::int64_t>(batch.laplacian.col.size()));
      for (std::int64_t j = 0; j < f; ++j) {
        batch.features(offset + i, j) = (*g.features)(i, j);
      }
    }
    offset += g.n;
  }
  return batch;
}

Batch make_batch(const GraphDataset& ds, const std::vector<std::int64_t>& indices) {
  std::vector<const Graph*> graphs;
  std::vector<std::int64_t> labels;
  graphs.reserve(indices.size());
  labels.reserve(indices.size());
  for (std::int64_t i : indices) {
    graphs.push_back(&ds.graphs[static_cast<std::size_t>(i)]);
    labels.push_back(ds.labels[static_cast<std::size_t>(i)]);
  }
  return make_batch(graphs, labels);
}

SynthKind parse_synth_kind(const std::string& name) {
  if (name == "stars_vs_cycles") return SynthKind::stars_vs_cycles;
  if (name == "er_density_pair") return SynthKind::er_density_pair;
  throw std::invalid_argument("unknown synthetic kind '" + name +
                              "' (expected stars_vs_cycles or er_density_pair)");
}

GraphDataset synth_dataset(SynthKind kind, std::int64_t count, std::int64_t min_nodes,
                           std::int64_t max_nodes, std::uint64_t seed) {
  if (min_nodes < 3) throw std::invalid_argument("synth_dataset: need at least 3 nodes");
  if (max_nodes < min_nodes) throw std::invalid_argument("synth_dataset: empty size range");
  if (count < 2) throw std::invalid_argument("synth_dataset: need at least 2 graphs");

  Rng rng(seed);
  GraphDataset ds;
  ds.name = kind == SynthKind::stars_vs_cycles ? "stars_vs_cycles" : "er_density_pair";
  ds.num_classes = 2;
  const std::int64_t class0 = (count + 1) / 2;
  for (std::int64_t i = 0; i < count; ++i) {
    const std::int64_t cls = i < class0 ? 0 : 1;
    const std::int64_t n = min_nodes + rng.uniform_int(max_nodes - min_nodes + 1);
    std::vector<Edge> edges;
    if (kind == SynthKind::stars_vs_cycles) {
      if (cls == 0) {
        for (std::int64_t v = 1; v < n; ++v) edges.push_back({0, v, 1.0});
      } else {
        for (std::int64_t v = 0; v < n; ++v) edges.push_back({v, (v + 1) % n, 1.0});
      }
    } else {
      const double p = cls == 0 ? 0.15 : 0.45;
      for (std::int64_t u = 0; u < n; ++u) {
        for (std::int64_t v = u + 1; v < n; ++v) {
          if (rng.uniform() < p) edges.push_back({u, v, 1.0});
        }
      }
    }
    Graph g = add_self_loops(make_graph(n, edges));
    g.features = default_features(g);
    ds.graphs.push_back(std::move(g));
    ds.labels.push_back(cls);
  }
  return ds;
}

}  // namespace graphhist
