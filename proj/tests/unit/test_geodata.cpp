#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "fixtures.hpp"
#include "tractflow/geodata/flows.hpp"
#include "tractflow/geodata/io.hpp"
#include "tractflow/numeric/random.hpp"

using namespace tractflow;
using namespace tractflow::testing;

namespace {

std::set<std::pair<std::size_t, std::size_t>> edge_set(const TractGraph& g) {
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (const auto& e : g.edges()) out.emplace(e.a, e.b);
  return out;
}

std::vector<RawFlow> numbered_flows(std::size_t n) {
  std::vector<RawFlow> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({"o" + std::to_string(i), "d" + std::to_string(i), 1});
  return out;
}

}  // namespace

TEST(Distance, OneDegreeOfLongitudeOnEquator) {
  const double d = great_circle_km({0.0, 0.0}, {0.0, 1.0});
  EXPECT_NEAR(d, 111.195, 0.01);
  EXPECT_NEAR(d, km_per_degree(), 1e-9);
}

TEST(Distance, SymmetricAndZeroOnSelf) {
  Rng r(4);
  for (int i = 0; i < 50; ++i) {
    const LatLon a{r.uniform(-80, 80), r.uniform(-179, 179)};
    const LatLon b{r.uniform(-80, 80), r.uniform(-179, 179)};
    EXPECT_DOUBLE_EQ(great_circle_km(a, b), great_circle_km(b, a));
    EXPECT_EQ(great_circle_km(a, a), 0.0);
  }
}

TEST(Distance, MatrixAveragesBothDirections) {
  MatrixDistance m;
  m.set("a", "b", 2.0);
  m.set("b", "a", 4.0);
  EXPECT_DOUBLE_EQ(m.km("a", "b"), 3.0);
  EXPECT_DOUBLE_EQ(m.km("b", "a"), 3.0);
  EXPECT_DOUBLE_EQ(m.km("a", "a"), 0.0);
  EXPECT_ERRC(m.km("a", "c"), Errc::UnknownTract);
  EXPECT_ERRC(m.set("a", "c", -1.0), Errc::NonFiniteValue);
}

TEST(Graph, CollinearKnnOne) {
  const TractGraph g = build_graph(line_tracts(3, 1.0), AdjacencyPolicy::k_nearest(1));
  const std::set<std::pair<std::size_t, std::size_t>> want{{0, 1}, {1, 2}};
  EXPECT_EQ(edge_set(g), want);
  for (const auto& e : g.edges()) EXPECT_NEAR(e.km, 1.0, 1e-9);
}

TEST(Graph, CollinearRadius) {
  const TractGraph g = build_graph(line_tracts(3, 1.0), AdjacencyPolicy::radius(1.5));
  const std::set<std::pair<std::size_t, std::size_t>> want{{0, 1}, {1, 2}};
  EXPECT_EQ(edge_set(g), want);
}

TEST(Graph, CoincidentCentroidsAreDegenerate) {
  auto t = line_tracts(3, 1.0);
  t[2].centroid = t[0].centroid;
  EXPECT_ERRC(build_graph(t, AdjacencyPolicy::k_nearest(1)), Errc::DegenerateGeometry);
}

TEST(Graph, DuplicateIdsRejected) {
  auto t = line_tracts(3, 1.0);
  t[2].id = t[0].id;
  EXPECT_ERRC(build_graph(t, AdjacencyPolicy::k_nearest(1)), Errc::DuplicateId);
}

TEST(Graph, PolicyParsing) {
  EXPECT_EQ(AdjacencyPolicy::parse("knn:8"), AdjacencyPolicy::k_nearest(8));
  EXPECT_EQ(AdjacencyPolicy::parse("radius:1.5"), AdjacencyPolicy::radius(1.5));
  EXPECT_EQ(AdjacencyPolicy::radius(1.5).describe(), "radius:1.5");
  EXPECT_ERRC(AdjacencyPolicy::parse("knn:0"), Errc::InvalidArgument);
  EXPECT_ERRC(AdjacencyPolicy::parse("ring:3"), Errc::InvalidArgument);
}

TEST(Graph, RandomGraphsAreSymmetricConnectedAndLoopFree) {
  Rng r(17);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Tract> tracts;
    for (int i = 0; i < 40; ++i) {
      tracts.push_back({"t" + std::to_string(i), {r.uniform(-0.1, 0.1), r.uniform(-0.1, 0.1)}, {}});
    }
    const auto policy = trial % 2 ? AdjacencyPolicy::k_nearest(3) : AdjacencyPolicy::radius(2.0);
    const TractGraph g = build_graph(tracts, policy);
    EXPECT_TRUE(g.is_connected());
    for (std::size_t i = 0; i < g.size(); ++i) {
      for (const auto& nb : g.neighbors(i)) {
        EXPECT_NE(nb.node, i);
        EXPECT_GT(nb.km, 0.0);
        EXPECT_TRUE(g.edge_km(nb.node, i).has_value());
        EXPECT_DOUBLE_EQ(*g.edge_km(nb.node, i), nb.km);
      }
      if (policy.kind == AdjacencyPolicy::Kind::KNearest) EXPECT_GE(g.neighbors(i).size(), 3u);
    }
  }
}

TEST(Graph, FarClustersAreJoined) {
  std::vector<Tract> tracts;
  for (int i = 0; i < 3; ++i) tracts.push_back({"w" + std::to_string(i), {0.0, 0.01 * i}, {}});
  for (int i = 0; i < 3; ++i) tracts.push_back({"e" + std::to_string(i), {0.0, 5.0 + 0.01 * i}, {}});
  const TractGraph g = build_graph(tracts, AdjacencyPolicy::k_nearest(1));
  EXPECT_TRUE(g.is_connected());
  // The only bridge is the closest cross pair.
  EXPECT_TRUE(g.edge_km(2, 3).has_value());
}

TEST(Graph, NeighborsOrderedById) {
  std::vector<Tract> tracts{{"c", {0, 0}, {}}, {"b", {0, 0.01}, {}}, {"a", {0.01, 0}, {}}, {"d", {-0.01, 0}, {}}};
  const TractGraph g = build_graph(tracts, AdjacencyPolicy::k_nearest(3));
  std::vector<std::string> ids;
  for (const auto& nb : g.neighbors(0)) ids.push_back(g.tract(nb.node).id);
  EXPECT_TRUE(std::is_sorted(ids.begin(), ids.end()));
}

TEST(Graph, WithinHopsOnPath) {
  const TractGraph g = path_graph(line_tracts(6, 1.0));
  const std::size_t seed[] = {2};
  EXPECT_EQ(g.within_hops(seed, 0), (std::vector<std::size_t>{2}));
  EXPECT_EQ(g.within_hops(seed, 2), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
}

TEST(Graph, WithTractsKeepsOrder) {
  const TractGraph g = path_graph(line_tracts(3, 1.0));
  auto t = std::vector<Tract>(g.tracts().begin(), g.tracts().end());
  std::swap(t[0], t[1]);
  EXPECT_ERRC(g.with_tracts(t), Errc::SchemaMismatch);
}

TEST(Split, TenPairs) {
  const FlowTable t = split_flows(numbered_flows(10), {}, 7);
  EXPECT_EQ(t.split_counts(), (std::array<std::size_t, 3>{6, 2, 2}));
}

TEST(Split, RecifeSizedTable) {
  EXPECT_EQ(split_sizes(15945, {}), (std::array<std::size_t, 3>{9567, 3189, 3189}));
  const FlowTable t = split_flows(numbered_flows(15945), {}, 7);
  EXPECT_EQ(t.split_counts(), (std::array<std::size_t, 3>{9567, 3189, 3189}));
}

TEST(Split, PartitionIsCompleteAndSeeded) {
  const auto raw = numbered_flows(101);
  const FlowTable a = split_flows(raw, {}, 3);
  const FlowTable b = split_flows(raw, {}, 3);
  const FlowTable c = split_flows(raw, {}, 4);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  std::set<std::string> seen;
  for (const auto& r : a.records()) EXPECT_TRUE(seen.insert(r.origin).second);
  EXPECT_EQ(seen.size(), raw.size());
}

TEST(Split, EmptyAndBadRatios) {
  EXPECT_ERRC(split_flows({}, {}, 1), Errc::EmptyInput);
  EXPECT_ERRC(split_flows(numbered_flows(3), SplitRatios{0.5, 0.5, 0.5}, 1), Errc::InvalidArgument);
}

TEST(Flows, ParseAndReject) {
  const auto ok = parse_flows("origin_id,dest_id,commuters\na,b,3\nb,a,0\n");
  ASSERT_EQ(ok.size(), 2u);
  EXPECT_EQ(ok[0], (RawFlow{"a", "b", 3}));
  EXPECT_ERRC(parse_flows("origin_id,dest_id\na,b\n"), Errc::MissingColumn);
  EXPECT_ERRC(parse_flows("origin_id,dest_id,commuters\na,b,3\na,b,4\n"), Errc::DuplicatePair);
  EXPECT_ERRC(parse_flows("origin_id,dest_id,commuters\na,b,-1\n"), Errc::NonFiniteValue);
  EXPECT_ERRC(parse_flows("origin_id,dest_id,commuters\na,a,2\n"), Errc::InvalidArgument);
}

TEST(Flows, TableCsvRoundTrip) {
  const FlowTable t = split_flows(numbered_flows(10), {}, 7);
  EXPECT_EQ(parse_flow_table(format_flow_table_csv(t), Split::Test), t);
  const FlowTable fallback = parse_flow_table("origin_id,dest_id,commuters\na,b,2\n", Split::Val);
  EXPECT_EQ(fallback.records()[0].split, Split::Val);
}

TEST(Flows, ParseSplitNames) {
  EXPECT_EQ(parse_split("validation"), Split::Val);
  EXPECT_EQ(parse_split("test"), Split::Test);
  EXPECT_ERRC(parse_split("holdout"), Errc::InvalidArgument);
}

TEST(Tracts, DelimitedErrors) {
  const FeatureSchema s = schema_of(1);
  EXPECT_EQ(parse_tracts_delimited("id,lat,lon,f0\nx,1,2,3\n", s).size(), 1u);
  EXPECT_ERRC(parse_tracts_delimited("id,lat,f0\nx,1,3\n", s), Errc::MissingColumn);
  EXPECT_ERRC(parse_tracts_delimited("id,lat,lon\nx,1,2\n", s), Errc::MissingColumn);
  EXPECT_ERRC(parse_tracts_delimited("id,lat,lon,f0\nx,91,2,3\n", s), Errc::NonFiniteValue);
  EXPECT_ERRC(parse_tracts_delimited("id,lat,lon,f0\nx,1,2,nan\n", s), Errc::NonFiniteValue);
  EXPECT_ERRC(parse_tracts_delimited("id,lat,lon,f0\nx,1,2,3\nx,1,3,4\n", s), Errc::DuplicateId);
  EXPECT_ERRC(parse_tracts_delimited("id,lat,lon,f0\nx,1,2,-3\n", s), Errc::NegativeForbidden);
}

TEST(Tracts, GeoJsonPolygonCentroid) {
  const std::string doc = R"({"type":"FeatureCollection","features":[
    {"type":"Feature","properties":{"id":"sq","f0":1.5},
     "geometry":{"type":"Polygon","coordinates":[[[10,20],[12,20],[12,24],[10,24],[10,20]]]}},
    {"type":"Feature","properties":{"id":"pt","f0":0},
     "geometry":{"type":"Point","coordinates":[-34.9,-8.05]}}]})";
  const auto t = parse_tracts_geojson(doc, schema_of(1));
  ASSERT_EQ(t.size(), 2u);
  EXPECT_NEAR(t[0].centroid.lon, 11.0, 1e-12);
  EXPECT_NEAR(t[0].centroid.lat, 22.0, 1e-12);
  EXPECT_DOUBLE_EQ(t[0].features[0], 1.5);
  EXPECT_DOUBLE_EQ(t[1].centroid.lat, -8.05);
}

TEST(Tracts, RingCentroidOfTriangle) {
  const LatLon c = ring_centroid({{0, 0}, {3, 0}, {0, 3}, {0, 0}});
  EXPECT_NEAR(c.lon, 1.0, 1e-12);
  EXPECT_NEAR(c.lat, 1.0, 1e-12);
  EXPECT_ERRC(ring_centroid({{0, 0}, {1, 1}, {2, 2}, {0, 0}}), Errc::DegenerateGeometry);
}

TEST(Tracts, CsvRoundTripThroughFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "tractflow_geodata_test";
  std::filesystem::create_directories(dir);
  const FeatureSchema s = schema_of(2);
  const auto tracts = line_tracts(4, 0.7);
  std::ofstream((dir / "t.csv").string()) << format_tracts_csv(tracts, s);
  std::ofstream((dir / "s.csv").string()) << format_schema_csv(s);
  EXPECT_EQ(load_tracts((dir / "t.csv").string(), load_schema((dir / "s.csv").string())), tracts);
  EXPECT_EQ(infer_schema((dir / "t.csv").string()).names(), s.names());
  EXPECT_ERRC(load_tracts((dir / "missing.csv").string(), s), Errc::MissingInput);
  std::filesystem::remove_all(dir);
}

TEST(Schema, NormalizationRoundTrip) {
  FeatureSchema s = schema_of(3);
  Rng r(8);
  std::vector<Tract> tracts;
  for (int i = 0; i < 30; ++i) {
    tracts.push_back({"t" + std::to_string(i), {0, 0}, {r.uniform(0, 100), r.uniform(0, 1e-3), 7.0}});
  }
  s.fit_normalization(tracts);
  EXPECT_TRUE(s.indicator(2).constant);
  for (const auto& t : tracts) {
    const auto z = s.normalize(t.features);
    const auto back = s.denormalize(z);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(back[k], t.features[k], 1e-9);
  }
  // Fitted columns come out with zero mean and unit population variance.
  const Matrix z = s.normalized_matrix(tracts);
  for (std::size_t c = 0; c < 2; ++c) {
    double m = 0, v = 0;
    for (std::size_t i = 0; i < z.rows(); ++i) m += z(i, c);
    m /= static_cast<double>(z.rows());
    for (std::size_t i = 0; i < z.rows(); ++i) v += (z(i, c) - m) * (z(i, c) - m);
    EXPECT_NEAR(m, 0.0, 1e-12);
    EXPECT_NEAR(v / static_cast<double>(z.rows()), 1.0, 1e-12);
  }
}

TEST(Schema, CategoriesAndDuplicates) {
  EXPECT_EQ(parse_indicator_category("land_use"), IndicatorCategory::LandUse);
  EXPECT_ERRC(parse_indicator_category("weather"), Errc::ParseError);
  const std::string dup[] = {"x", "x"};
  EXPECT_ERRC(FeatureSchema::from_names(dup), Errc::InvalidArgument);
}
