#include <algorithm>
#include <cmath>
#include <numeric>

#include "fixtures.hpp"
#include "gradient_suite.hpp"
#include "tractflow/gat/encoder.hpp"
#include "tractflow/numeric/random.hpp"
#include "tractflow/train/multitask.hpp"

using namespace tractflow;
using namespace tractflow::testing;

namespace {

GatConfig small_config(int layers = 2, int heads = 1) {
  GatConfig c;
  c.layers = layers;
  c.attention_heads = heads;
  c.hidden_dim = 4;
  c.embedding_dim = 4;
  c.distance_scale_km = 5.0;
  return c;
}

FeatureSchema fitted_schema(const TractGraph& g) {
  FeatureSchema s = schema_of(g.tract(0).features.size());
  s.fit_normalization(g.tracts());
  return s;
}

std::vector<Tract> random_tracts(std::size_t n, std::size_t features, Rng& r) {
  std::vector<Tract> out;
  for (std::size_t i = 0; i < n; ++i) {
    Tract t{"t" + std::to_string(100 + i), {r.uniform(-0.05, 0.05), r.uniform(-0.05, 0.05)}, {}};
    for (std::size_t f = 0; f < features; ++f) t.features.push_back(r.uniform(0, 5));
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

TEST(Attention, IsolatedNodeAttendsToItself) {
  const TractGraph g({Tract{"solo", {0, 0}, {1.0}}}, {}, AdjacencyPolicy::k_nearest(1), default_distance_provider());
  const GatConfig cfg = small_config(1);
  const ParamStore p = init_model_params(1, cfg, 3);
  const auto w = attention_coefficients(g, Matrix{{0.3}}, p, cfg, kOriginEncoder, 0, 0, 0);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].first, 0u);
  EXPECT_DOUBLE_EQ(w[0].second, 1.0);
}

TEST(Attention, EqualNeighborsGetEqualWeights) {
  // Star: centre "m" with two leaves at the same distance and same features.
  std::vector<Tract> t{{"a", {0, -0.01}, {2.0}}, {"m", {0, 0}, {1.0}}, {"z", {0, 0.01}, {2.0}}};
  const TractGraph g = path_graph(std::move(t));
  const GatConfig cfg = small_config(1);
  const ParamStore p = init_model_params(1, cfg, 5);
  const auto w = attention_coefficients(g, Matrix{{2.0}, {1.0}, {2.0}}, p, cfg, kOriginEncoder, 0, 0, 1);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[0].second, w[2].second);
}

TEST(Attention, ThreeNodePathByHand) {
  const TractGraph g = path_graph(line_tracts(3, 1.0, 1));
  GatConfig cfg = small_config(1);
  cfg.embedding_dim = 1;
  ParamStore p = init_model_params(1, cfg, 1);
  const GatEncoder enc(std::string(kOriginEncoder), cfg, 1);
  p.value(enc.weight_name(0, 0)) = Matrix{{2.0}};
  p.value(enc.attn_self_name(0, 0)) = Matrix{{0.5}};
  p.value(enc.attn_neighbor_name(0, 0)) = Matrix{{-1.0}};
  const Matrix x{{1.0}, {-0.5}, {0.25}};

  // Hand evaluation for the middle node: z = 2x, e_j = leaky(0.5 z_1 - z_j) * exp(-km / 5).
  const double z[] = {2.0, -1.0, 0.5};
  auto leaky = [](double v) { return v > 0 ? v : 0.2 * v; };
  const double factor[] = {std::exp(-1.0 / 5.0), 1.0, std::exp(-1.0 / 5.0)};
  double e[3], sum = 0;
  for (int j = 0; j < 3; ++j) {
    e[j] = std::exp(leaky(0.5 * z[1] - z[j]) * factor[j]);
    sum += e[j];
  }
  const auto w = attention_coefficients(g, x, p, cfg, kOriginEncoder, 0, 0, 1);
  ASSERT_EQ(w.size(), 3u);
  for (int j = 0; j < 3; ++j) {
    EXPECT_EQ(w[j].first, static_cast<std::size_t>(j));
    EXPECT_NEAR(w[j].second, e[j] / sum, 1e-14);
  }

  // The embedding of the middle node is the weighted sum of z plus the bias.
  p.value(enc.bias_name(0)) = Matrix{{0.125}};
  const AttentionGraph ag = AttentionGraph::build(g, cfg.distance_scale_km);
  const EmbeddingSet emb = encode_normalized(ag, x, p, cfg);
  double want = 0.125;
  for (int j = 0; j < 3; ++j) want += e[j] / sum * z[j];
  EXPECT_NEAR(emb.origin(1, 0), want, 1e-14);
}

TEST(Attention, RowsSumToOne) {
  Rng r(21);
  const TractGraph g = build_graph(random_tracts(30, 3, r), AdjacencyPolicy::k_nearest(4));
  const GatConfig cfg = small_config(2, 2);
  const ParamStore p = init_model_params(3, cfg, 9);
  const Matrix x = fitted_schema(g).normalized_matrix(g.tracts());
  for (int layer = 0; layer < 2; ++layer) {
    for (int head = 0; head < 2; ++head) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        const auto w = attention_coefficients(g, x, p, cfg, kDestinationEncoder, layer, head, i);
        EXPECT_EQ(w.size(), g.neighbors(i).size() + 1);
        double s = 0;
        for (const auto& [_, v] : w) {
          EXPECT_GE(v, 0.0);
          s += v;
        }
        EXPECT_NEAR(s, 1.0, 1e-9);
      }
    }
  }
}

TEST(Encoder, ZeroNetworkReducesToFinalBias) {
  const TractGraph g = path_graph(line_tracts(5, 1.0, 2));
  const GatConfig cfg = small_config(3);
  ParamStore p = init_model_params(2, cfg, 4);
  const GatEncoder enc(std::string(kOriginEncoder), cfg, 2);
  for (auto& e : p.entries()) e.value.fill(0.0);
  p.value(enc.bias_name(2)) = Matrix{{0.5, -1.0, 2.0, 0.0}};
  const EmbeddingSet emb = encode(g, fitted_schema(g), p, cfg);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_EQ(emb.origin(i, 0), 0.5);
    EXPECT_EQ(emb.origin(i, 1), -1.0);
    EXPECT_EQ(emb.origin(i, 2), 2.0);
    EXPECT_EQ(emb.origin(i, 3), 0.0);
  }
}

TEST(Encoder, PermutationEquivariant) {
  Rng r(31);
  const auto tracts = random_tracts(25, 3, r);
  const TractGraph g = build_graph(tracts, AdjacencyPolicy::k_nearest(3));
  const FeatureSchema s = fitted_schema(g);
  const GatConfig cfg = small_config(2, 2);
  const ParamStore p = init_model_params(3, cfg, 12);
  const EmbeddingSet base = encode(g, s, p, cfg);

  std::vector<std::size_t> perm(tracts.size());
  std::iota(perm.begin(), perm.end(), 0);
  r.shuffle(std::span<std::size_t>(perm));
  std::vector<Tract> shuffled;
  for (auto i : perm) shuffled.push_back(tracts[i]);
  const TractGraph gp = build_graph(shuffled, AdjacencyPolicy::k_nearest(3));
  const EmbeddingSet moved = encode(gp, s, p, cfg);
  for (std::size_t k = 0; k < perm.size(); ++k) {
    for (std::size_t c = 0; c < 4; ++c) {
      EXPECT_EQ(moved.origin(k, c), base.origin(perm[k], c));
      EXPECT_EQ(moved.destination(k, c), base.destination(perm[k], c));
    }
  }
}

TEST(Encoder, TwinNodesShareEmbeddings) {
  // a and z mirror each other around m: same features, same distance, same degree.
  std::vector<Tract> t{{"a", {0, -0.01}, {2.0, 1.0}}, {"m", {0, 0}, {1.0, 3.0}}, {"z", {0, 0.01}, {2.0, 1.0}}};
  const TractGraph g = path_graph(std::move(t));
  const GatConfig cfg = small_config(2, 2);
  const ParamStore p = init_model_params(2, cfg, 8);
  const EmbeddingSet emb = encode(g, fitted_schema(g), p, cfg);
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_EQ(emb.origin(0, c), emb.origin(2, c));
    EXPECT_EQ(emb.destination(0, c), emb.destination(2, c));
  }
}

TEST(Encoder, ChangesStayWithinLayerHops) {
  const TractGraph g = path_graph(line_tracts(9, 1.0, 2));
  const FeatureSchema s = fitted_schema(g);
  for (int layers = 1; layers <= 3; ++layers) {
    const GatConfig cfg = small_config(layers);
    const ParamStore p = init_model_params(2, cfg, 6);
    const EmbeddingSet before = encode(g, s, p, cfg);
    auto edited = std::vector<Tract>(g.tracts().begin(), g.tracts().end());
    edited[4].features = {9.0, 0.1};
    const EmbeddingSet after = encode(g.with_tracts(edited), s, p, cfg);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const bool reach = static_cast<int>(i > 4 ? i - 4 : 4 - i) <= layers;
      bool same = true;
      for (std::size_t c = 0; c < 4; ++c) same &= before.origin(i, c) == after.origin(i, c);
      if (!reach) EXPECT_TRUE(same) << "node " << i << " layers " << layers;
      if (i == 4) EXPECT_FALSE(same);
    }
  }
}

TEST(Encoder, RejectsBadShapes) {
  const TractGraph g = path_graph(line_tracts(3, 1.0, 2));
  const GatConfig cfg = small_config(1);
  const ParamStore p = init_model_params(2, cfg, 1);
  const AttentionGraph ag = AttentionGraph::build(g, cfg.distance_scale_km);
  EXPECT_ERRC(encode_normalized(ag, Matrix(3, 3), p, cfg), Errc::SchemaMismatch);
  GatConfig bad = cfg;
  bad.attention_heads = 3;
  EXPECT_ERRC(bad.validate(), Errc::InvalidArgument);
}

TEST(Encoder, HeadsConcatenateToEmbeddingWidth) {
  const TractGraph g = path_graph(line_tracts(4, 1.0, 2));
  GatConfig cfg = small_config(2, 2);
  cfg.embedding_dim = 6;
  cfg.hidden_dim = 8;
  const ParamStore p = init_model_params(2, cfg, 2);
  const EmbeddingSet emb = encode(g, fitted_schema(g), p, cfg);
  EXPECT_EQ(emb.origin.rows(), 4u);
  EXPECT_EQ(emb.origin.cols(), 6u);
  EXPECT_TRUE(emb.destination.all_finite());
}
