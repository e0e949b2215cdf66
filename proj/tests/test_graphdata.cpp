#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <random>
#include <set>

#include "gpro/dataset_io.hpp"
#include "gpro/generator.hpp"
#include "gpro/graph.hpp"
#include "testutil.hpp"

using namespace gpro;
using Catch::Approx;

TEST_CASE("motif library") {
  // class 0: the chord duplicates a cycle edge, leaving a plain triangle
  std::vector<Edge> tri = motif_edges(0);
  CHECK(tri == std::vector<Edge>{{0, 1}, {0, 2}, {1, 2}});

  // larger classes: cycle of length 3+c plus a genuine chord
  CHECK(motif_edges(1).size() == 5);
  CHECK(motif_edges(2).size() == 6);
  CHECK(motif_size(3) == 6);

  // pairwise non-isomorphic for C <= 8 (brute force)
  for (int a = 0; a < 8; ++a)
    for (int b = a + 1; b < 8; ++b)
      CHECK_FALSE(graphs_isomorphic(motif_size(a), motif_edges(a), motif_size(b),
                                    motif_edges(b)));
  // sanity: the check itself recognizes a relabeled motif
  CHECK(graphs_isomorphic(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}, 4,
                          {{0, 2}, {1, 2}, {1, 3}, {0, 3}}));
}

TEST_CASE("generate_graph structure") {
  BiasSpec spec;
  std::mt19937_64 rng(3);
  Graph g = generate_graph(spec, 2, true, rng);

  CHECK(g.label == 2);
  CHECK(g.n >= motif_size(2) + spec.bg_min);
  CHECK(g.n <= motif_size(2) + spec.bg_max);
  CHECK(is_connected(g.n, g.edges));
  CHECK(g.features.cols == spec.num_classes + 1);

  // adjacency is symmetric with a zero diagonal and 0/1 entries
  Matrix A = g.adjacency();
  for (int i = 0; i < g.n; ++i) {
    CHECK(A(i, i) == 0.0);
    for (int j = 0; j < g.n; ++j) {
      CHECK(A(i, j) == A(j, i));
      CHECK((A(i, j) == 0.0 || A(i, j) == 1.0));
    }
  }

  // causal edges are the motif and are contained in the edge set
  std::set<Edge> all(g.edges.begin(), g.edges.end());
  for (const Edge& e : g.causal_edges) CHECK(all.count(e) == 1);

  // the marker channel stays exactly zero everywhere
  for (int i = 0; i < g.n; ++i) CHECK(g.features(i, spec.num_classes) == 0.0);

  // background nodes carry the one-hot color, motif nodes do not
  const int k = motif_size(2);
  for (int i = k; i < g.n; ++i) CHECK(g.features(i, g.bg_color) == Approx(1.0).margin(0.5));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < spec.num_classes; ++j)
      CHECK(std::abs(g.features(i, j)) < 0.5);

  SECTION("spec errors") {
    BiasSpec bad = spec;
    bad.bg_min = 2;
    CHECK_THROWS_AS(generate_graph(bad, 0, true, rng), ConfigError);
    bad = spec;
    bad.bg_edge_prob = 1.5;
    CHECK_THROWS_AS(generate_graph(bad, 0, true, rng), ConfigError);
    CHECK_THROWS_AS(generate_graph(spec, 9, true, rng), std::invalid_argument);
  }
}

TEST_CASE("bias calibration") {
  BiasSpec spec;
  SECTION("beta = 1.0 forces every background color to the class") {
    spec.bias_degree = 1.0;
    std::mt19937_64 rng(5);
    for (int i = 0; i < 50; ++i) {
      Graph g = generate_graph(spec, i % 4, true, rng);
      CHECK(g.bg_color == g.label);
    }
  }
  SECTION("monte carlo agreement at several bias degrees") {
    for (double beta : {0.8, 0.9, 0.95}) {
      spec.bias_degree = beta;
      std::mt19937_64 rng(7);
      int agree = 0;
      const int n = 10000;
      for (int i = 0; i < n; ++i) {
        Graph g = generate_graph(spec, i % 4, true, rng);
        agree += (g.bg_color == g.label);
      }
      CHECK(double(agree) / n == Approx(beta).margin(0.03));
    }
  }
  SECTION("beta = 1/C behaves like chance") {
    spec.bias_degree = 0.25;
    std::mt19937_64 rng(11);
    int agree = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i)
      agree += (generate_graph(spec, i % 4, true, rng).bg_color == i % 4);
    CHECK(double(agree) / n == Approx(0.25).margin(0.02));
  }
  SECTION("unbiased draw is uniform over all colors") {
    std::mt19937_64 rng(13);
    int agree = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i)
      agree += (generate_graph(spec, i % 4, false, rng).bg_color == i % 4);
    CHECK(double(agree) / n == Approx(0.25).margin(0.03));
  }
}

TEST_CASE("generate_dataset") {
  BiasSpec spec;  // 800/200/400, C=4, beta=0.9
  DatasetSplits s = generate_dataset(spec);
  REQUIRE(s.train.size() == 800);
  REQUIRE(s.val.size() == 200);
  REQUIRE(s.test.size() == 400);

  int per_class[4] = {0, 0, 0, 0};
  for (const Graph& g : s.train) ++per_class[g.label];
  for (int c = 0; c < 4; ++c) CHECK(per_class[c] == 200);

  CHECK(color_label_agreement(s.train) == Approx(0.9).margin(0.025));
  CHECK(color_label_agreement(s.test) == Approx(0.25).margin(0.03));

  SECTION("same seed reproduces byte-identical files") {
    DatasetSplits s2 = generate_dataset(spec);
    const std::string dir = testutil::temp_dir("ds_det");
    save_dataset(dir + "/a.txt", s.train, 4, 5);
    save_dataset(dir + "/b.txt", s2.train, 4, 5);
    CHECK(testutil::read_file(dir + "/a.txt") == testutil::read_file(dir + "/b.txt"));
    CHECK(!testutil::read_file(dir + "/a.txt").empty());
  }
}

TEST_CASE("batching") {
  BiasSpec spec;
  std::mt19937_64 rng(17);
  Graph a = generate_graph(spec, 0, true, rng);
  Graph b = generate_graph(spec, 1, true, rng);

  GraphBatch batch = make_batch({a, b});
  CHECK(batch.num_nodes == a.n + b.n);
  CHECK(batch.offsets == std::vector<int>{0, a.n, a.n + b.n});

  Matrix A = batch.block_adjacency();
  // no cross-graph edges
  for (int i = 0; i < a.n; ++i)
    for (int j = a.n; j < batch.num_nodes; ++j) CHECK(A(i, j) == 0.0);

  GraphBatch single = make_batch({a});
  Matrix sa = single.block_adjacency();
  Matrix ga = a.adjacency();
  for (int i = 0; i < sa.size(); ++i) CHECK(sa.a[i] == ga.a[i]);

  CHECK_THROWS_AS(make_batch(std::vector<Graph>{}), std::invalid_argument);
}

TEST_CASE("dataset save/load round trip") {
  BiasSpec spec;
  spec.train_size = 12;
  spec.val_size = 4;
  spec.test_size = 4;
  DatasetSplits s = generate_dataset(spec);
  const std::string dir = testutil::temp_dir("ds_io");
  save_dataset(dir + "/d.txt", s.train, spec.num_classes, spec.feature_dim());
  LoadedDataset ds = load_dataset(dir + "/d.txt");
  REQUIRE(ds.graphs.size() == s.train.size());
  CHECK(ds.num_classes == 4);
  CHECK(ds.feat_dim == 5);
  for (size_t i = 0; i < ds.graphs.size(); ++i) {
    const Graph& orig = s.train[i];
    const Graph& got = ds.graphs[i];
    CHECK(got.label == orig.label);
    CHECK(got.n == orig.n);
    CHECK(got.edges == orig.edges);  // adjacency bit-exact
    for (int k = 0; k < orig.features.size(); ++k)
      CHECK(got.features.a[k] == Approx(orig.features.a[k]).margin(1e-8));
  }

  SECTION("empty dataset") {
    std::ofstream f(dir + "/empty.txt", std::ios::binary);
    f << "#graphs 0 4 5\n";
    f.close();
    CHECK(load_dataset(dir + "/empty.txt").graphs.empty());
  }
  SECTION("truncated file names the line") {
    std::ofstream f(dir + "/bad.txt", std::ios::binary);
    f << "#graphs 1 4 5\ngraph 0 3 2\n0.1 0.2 0.3 0.4 0\n";
    f.close();
    CHECK_THROWS_WITH(load_dataset(dir + "/bad.txt"),
                      Catch::Matchers::ContainsSubstring("line 4"));
  }
  SECTION("malformed header") {
    std::ofstream f(dir + "/hdr.txt", std::ios::binary);
    f << "graphs 1 4\n";
    f.close();
    CHECK_THROWS_WITH(load_dataset(dir + "/hdr.txt"),
                      Catch::Matchers::ContainsSubstring("line 1"));
  }
  SECTION("bad edge") {
    std::ofstream f(dir + "/edge.txt", std::ios::binary);
    f << "#graphs 1 4 5\ngraph 0 2 1\n0 0 0 0 0\n1 0 0 0 0\n1 1\n";
    f.close();
    CHECK_THROWS_WITH(load_dataset(dir + "/edge.txt"),
                      Catch::Matchers::ContainsSubstring("bad edge"));
  }
}

TEST_CASE("per-graph seeding is order independent") {
  BiasSpec spec;
  // graph i of the train split only depends on seed ^ i
  DatasetSplits s = generate_dataset(spec);
  std::mt19937_64 rng(spec.seed ^ uint64_t(5));
  Graph g5 = generate_graph(spec, 5 % spec.num_classes, true, rng);
  CHECK(g5.n == s.train[5].n);
  CHECK(g5.edges == s.train[5].edges);
  CHECK(g5.bg_color == s.train[5].bg_color);
}
