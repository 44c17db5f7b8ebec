#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "doctest.h"
#include "graphhist/dataset.hpp"
#include "graphhist/rng.hpp"
#include "oracles.hpp"

using namespace graphhist;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("graphhist_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

using EdgeKey = std::tuple<std::int64_t, std::int64_t, double>;

std::multiset<EdgeKey> edge_multiset(const Graph& g) {
  std::multiset<EdgeKey> s;
  for (const Edge& e : g.edges) s.insert({e.src, e.dst, e.weight});
  return s;
}

}  // namespace

TEST_CASE("load_tu_dataset reads the minimal file set") {
  const fs::path dir = fresh_dir("tu_minimal");
  write_file(dir / "tiny_A.txt", "1, 2\n2, 1\n");
  write_file(dir / "tiny_graph_indicator.txt", "1\n1\n");
  write_file(dir / "tiny_graph_labels.txt", "0\n");

  const GraphDataset ds = load_tu_dataset(dir.string(), "tiny");
  CHECK(ds.size() == 1);
  CHECK(ds.num_classes == 1);
  CHECK(ds.graphs[0].n == 2);
  // one undirected edge plus two self-loops
  CHECK(ds.graphs[0].edges.size() == 4);
  CHECK(ds.graphs[0].features.has_value());
  CHECK((*ds.graphs[0].features)(0, 0) == 2.0);
}

TEST_CASE("raw labels remap to a dense ascending range") {
  const fs::path dir = fresh_dir("tu_labels");
  write_file(dir / "two_A.txt", "1, 2\n2, 1\n3, 4\n4, 3\n");
  write_file(dir / "two_graph_indicator.txt", "1\n1\n2\n2\n");
  write_file(dir / "two_graph_labels.txt", "1\n-1\n");

  const GraphDataset ds = load_tu_dataset(dir.string(), "two");
  CHECK(ds.num_classes == 2);
  CHECK(ds.labels == std::vector<std::int64_t>{1, 0});  // -1 -> 0, 1 -> 1
}

TEST_CASE("loader diagnostics carry file and line positions") {
  const fs::path dir = fresh_dir("tu_errors");
  CHECK_THROWS_WITH_AS(load_tu_dataset(dir.string(), "gone"),
                       doctest::Contains("missing file"), std::runtime_error);

  write_file(dir / "bad_A.txt", "1, 2\nx, 1\n");
  write_file(dir / "bad_graph_indicator.txt", "1\n1\n");
  write_file(dir / "bad_graph_labels.txt", "0\n");
  CHECK_THROWS_WITH_AS(load_tu_dataset(dir.string(), "bad"), doctest::Contains("bad_A.txt:2"),
                       std::runtime_error);

  write_file(dir / "oob_A.txt", "1, 7\n");
  write_file(dir / "oob_graph_indicator.txt", "1\n1\n");
  write_file(dir / "oob_graph_labels.txt", "0\n");
  CHECK_THROWS_WITH_AS(load_tu_dataset(dir.string(), "oob"),
                       doctest::Contains("outside any graph"), std::runtime_error);
}

TEST_CASE("node labels become one-hot features when requested") {
  const fs::path dir = fresh_dir("tu_node_labels");
  write_file(dir / "nl_A.txt", "1, 2\n2, 1\n3, 4\n4, 3\n");
  write_file(dir / "nl_graph_indicator.txt", "1\n1\n2\n2\n");
  write_file(dir / "nl_graph_labels.txt", "0\n1\n");
  write_file(dir / "nl_node_labels.txt", "5\n9\n9\n5\n");

  const GraphDataset plain = load_tu_dataset(dir.string(), "nl");
  CHECK(plain.graphs[0].features->cols() == 2);  // ignored by default

  LoadOptions opt;
  opt.use_node_labels = true;
  const GraphDataset ds = load_tu_dataset(dir.string(), "nl", opt);
  REQUIRE(ds.graphs[0].features->cols() == 2);  // alphabet {5, 9}
  CHECK((*ds.graphs[0].features)(0, 0) == 1.0);  // label 5 -> slot 0
  CHECK((*ds.graphs[0].features)(0, 1) == 0.0);
  CHECK((*ds.graphs[0].features)(1, 1) == 1.0);  // label 9 -> slot 1
  CHECK((*ds.graphs[1].features)(0, 1) == 1.0);
  CHECK((*ds.graphs[1].features)(1, 0) == 1.0);
}

TEST_CASE("TU round-trip preserves structure and labels") {
  const GraphDataset ds = synth_dataset(SynthKind::stars_vs_cycles, 12, 4, 9, 99);
  const fs::path dir = fresh_dir("tu_roundtrip");
  write_tu_dataset(ds, dir.string(), "round");
  const GraphDataset back = load_tu_dataset(dir.string(), "round");

  REQUIRE(back.size() == ds.size());
  CHECK(back.labels == ds.labels);
  for (std::int64_t i = 0; i < ds.size(); ++i) {
    CHECK(back.graphs[static_cast<std::size_t>(i)].n == ds.graphs[static_cast<std::size_t>(i)].n);
    CHECK(edge_multiset(back.graphs[static_cast<std::size_t>(i)]) ==
          edge_multiset(ds.graphs[static_cast<std::size_t>(i)]));
  }
}

TEST_CASE("split_folds partitions the dataset exactly") {
  const GraphDataset ds = synth_dataset(SynthKind::stars_vs_cycles, 40, 4, 8, 5);
  const FoldPlan plan = split_folds(ds, 10, 123);
  REQUIRE(plan.folds.size() == 10);

  std::multiset<std::int64_t> seen;
  for (const auto& [train, test] : plan.folds) {
    CHECK(test.size() == 4);  // 40 graphs, 10 folds
    CHECK(train.size() == 36);
    for (std::int64_t i : test) seen.insert(i);
    // each fold is stratified: 2 per class
    std::map<std::int64_t, int> counts;
    for (std::int64_t i : test) ++counts[ds.labels[static_cast<std::size_t>(i)]];
    CHECK(counts[0] == 2);
    CHECK(counts[1] == 2);
  }
  CHECK(seen.size() == 40);
  for (std::int64_t i = 0; i < 40; ++i) CHECK(seen.count(i) == 1);

  // determinism
  const FoldPlan again = split_folds(ds, 10, 123);
  CHECK(again.folds == plan.folds);
  CHECK_THROWS(split_folds(ds, 1, 0));
}

TEST_CASE("split_folds warns but proceeds when a class is tiny") {
  GraphDataset ds = synth_dataset(SynthKind::stars_vs_cycles, 12, 4, 6, 3);
  // shrink class 1 to two members
  GraphDataset small;
  small.name = ds.name;
  small.num_classes = 2;
  int kept1 = 0;
  for (std::int64_t i = 0; i < ds.size(); ++i) {
    if (ds.labels[static_cast<std::size_t>(i)] == 1 && kept1 >= 2) continue;
    if (ds.labels[static_cast<std::size_t>(i)] == 1) ++kept1;
    small.graphs.push_back(ds.graphs[static_cast<std::size_t>(i)]);
    small.labels.push_back(ds.labels[static_cast<std::size_t>(i)]);
  }
  const FoldPlan plan = split_folds(small, 4, 7);
  std::size_t total = 0;
  for (const auto& fold : plan.folds) total += fold.second.size();
  CHECK(total == small.graphs.size());
}

TEST_CASE("oversample balances classes and keeps every original index") {
  // counts {A: 3, B: 1} -> B's index appears 3 times
  const std::vector<std::int64_t> labels = {0, 0, 0, 1};
  const std::vector<std::int64_t> train = {0, 1, 2, 3};
  const auto out = oversample(train, labels, 42);
  CHECK(out.size() == 6);
  std::map<std::int64_t, int> counts;
  for (std::int64_t i : out) ++counts[i];
  CHECK(counts[3] == 3);
  CHECK(counts[0] == 1);
  CHECK(counts[1] == 1);
  CHECK(counts[2] == 1);

  // already balanced input comes back as a permutation
  const std::vector<std::int64_t> balanced_labels = {0, 1, 0, 1};
  const std::vector<std::int64_t> balanced = {0, 1, 2, 3};
  auto perm = oversample(balanced, balanced_labels, 1);
  std::sort(perm.begin(), perm.end());
  CHECK(perm == balanced);

  CHECK_THROWS(oversample({}, labels, 0));
}

TEST_CASE("oversample balances large imbalanced class counts") {
  std::vector<std::int64_t> labels;
  std::vector<std::int64_t> train;
  for (std::int64_t i = 0; i < 8842 + 6120; ++i) {
    labels.push_back(i < 8842 ? 1 : 0);  // 8842 bots, 6120 humans
    train.push_back(i);
  }
  const auto out = oversample(train, labels, 9);
  std::int64_t bots = 0, humans = 0;
  for (std::int64_t i : out) (labels[static_cast<std::size_t>(i)] == 1 ? bots : humans) += 1;
  CHECK(bots == 8842);
  CHECK(humans == 8842);
}

TEST_CASE("make_batch builds a block-diagonal laplacian") {
  const GraphDataset ds = synth_dataset(SynthKind::stars_vs_cycles, 6, 4, 8, 17);
  const Batch batch = make_batch(ds, {0, 3, 5});
  CHECK(batch.num_graphs() == 3);
  std::int64_t total = 0;
  for (const auto& [lo, hi] : batch.boundaries) total += hi - lo;
  CHECK(total == batch.laplacian.n);
  CHECK(batch.features.rows() == total);

  // no nonzero entry crosses a graph boundary
  for (std::size_t g = 0; g < batch.boundaries.size(); ++g) {
    const auto [lo, hi] = batch.boundaries[g];
    for (std::int64_t i = lo; i < hi; ++i) {
      for (std::int64_t p = batch.laplacian.row_ptr[static_cast<std::size_t>(i)];
           p < batch.laplacian.row_ptr[static_cast<std::size_t>(i) + 1]; ++p) {
        const std::int64_t c = batch.laplacian.col[static_cast<std::size_t>(p)];
        CHECK(c >= lo);
        CHECK(c < hi);
      }
    }
  }

  // a single-graph batch is the graph's own laplacian
  const Batch one = make_batch(ds, {2});
  const SparseLaplacian own = normalized_laplacian(ds.graphs[2]);
  CHECK(one.laplacian.row_ptr == own.row_ptr);
  CHECK(one.laplacian.col == own.col);
  CHECK(one.laplacian.val == own.val);

  CHECK_THROWS(make_batch(ds, {}));
}

TEST_CASE("synth_dataset contracts") {
  const GraphDataset ds = synth_dataset(SynthKind::stars_vs_cycles, 40, 10, 30, 7);
  CHECK(ds.size() == 40);
  std::int64_t stars = 0;
  for (std::int64_t l : ds.labels) stars += l == 0 ? 1 : 0;
  CHECK(stars == 20);

  // star structure: one hub of degree n, n-1 leaves of degree 2 (self-loops in)
  for (std::int64_t i = 0; i < ds.size(); ++i) {
    if (ds.labels[static_cast<std::size_t>(i)] != 0) continue;
    const Graph& g = ds.graphs[static_cast<std::size_t>(i)];
    const auto deg = degree_vector(g);
    std::int64_t hubs = 0, leaves = 0;
    for (double d : deg) {
      if (d == static_cast<double>(g.n)) ++hubs;
      if (d == 2.0) ++leaves;
    }
    CHECK(hubs == 1);
    CHECK(leaves == g.n - 1);
    CHECK(g.n >= 10);
    CHECK(g.n <= 30);
  }

  // cycles: every node degree 3 (two neighbors plus the self-loop)
  for (std::int64_t i = 0; i < ds.size(); ++i) {
    if (ds.labels[static_cast<std::size_t>(i)] != 1) continue;
    for (double d : degree_vector(ds.graphs[static_cast<std::size_t>(i)])) CHECK(d == 3.0);
  }

  // seeded determinism
  const GraphDataset again = synth_dataset(SynthKind::stars_vs_cycles, 40, 10, 30, 7);
  REQUIRE(again.size() == ds.size());
  for (std::int64_t i = 0; i < ds.size(); ++i) {
    CHECK(edge_multiset(again.graphs[static_cast<std::size_t>(i)]) ==
          edge_multiset(ds.graphs[static_cast<std::size_t>(i)]));
  }

  CHECK_THROWS(synth_dataset(SynthKind::stars_vs_cycles, 10, 2, 5, 0));
  CHECK(synth_dataset(SynthKind::er_density_pair, 10, 5, 9, 3).size() == 10);
  CHECK_THROWS(parse_synth_kind("nope"));
}
