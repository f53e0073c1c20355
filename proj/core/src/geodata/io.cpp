#include "tractflow/geodata/io.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <set>

#include "tractflow/error.hpp"
#include "tractflow/util/table.hpp"

namespace tractflow {

namespace {

using ojson = nlohmann::ordered_json;

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

const std::set<std::string, std::less<>>& id_columns() {
  static const std::set<std::string, std::less<>> cols{"id", "tract_id", "GEOID", "geoid"};
  return cols;
}
const std::set<std::string, std::less<>>& lat_columns() {
  static const std::set<std::string, std::less<>> cols{"lat", "latitude", "centroid_lat", "y"};
  return cols;
}
const std::set<std::string, std::less<>>& lon_columns() {
  static const std::set<std::string, std::less<>> cols{"lon", "lng", "longitude", "centroid_lon", "x"};
  return cols;
}

bool is_reserved(std::string_view name) {
  return id_columns().count(name) || lat_columns().count(name) || lon_columns().count(name);
}

std::optional<std::size_t> find_any(const Table& t, const std::set<std::string, std::less<>>& names) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (names.count(t.columns[i])) return i;
  }
  return std::nullopt;
}

void check_centroid(const LatLon& c, std::string_view source, std::size_t row) {
  if (!std::isfinite(c.lat) || c.lat < -90.0 || c.lat > 90.0) {
    throw Error(Errc::NonFiniteValue, std::string(source) + ": row " + std::to_string(row) +
                                          ", column lat: latitude out of [-90, 90]");
  }
  if (!std::isfinite(c.lon) || c.lon < -180.0 || c.lon > 180.0) {
    throw Error(Errc::NonFiniteValue, std::string(source) + ": row " + std::to_string(row) +
                                          ", column lon: longitude out of [-180, 180]");
  }
}

void check_unique(std::vector<Tract>& tracts) {
  std::set<std::string_view> ids;
  for (const auto& t : tracts) {
    if (t.id.empty()) throw Error(Errc::ParseError, "empty tract id");
    if (!ids.insert(t.id).second) throw Error(Errc::DuplicateId, "tract id '" + t.id + "' appears twice");
  }
}

std::vector<std::pair<double, double>> ring_of(const ojson& coords) {
  std::vector<std::pair<double, double>> ring;
  for (const auto& p : coords) {
    if (!p.is_array() || p.size() < 2) throw Error(Errc::ParseError, "malformed GeoJSON position");
    ring.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  return ring;
}

/// Accumulates signed area and first moments of one ring.
void accumulate_ring(const std::vector<std::pair<double, double>>& ring, double sign, double& area, double& cx,
                     double& cy) {
  if (ring.size() < 3) return;
  double a = 0.0, x = 0.0, y = 0.0;
  // Rings are normally closed (first == last); the wrap-around term is then zero.
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const auto& p = ring[i];
    const auto& q = ring[(i + 1) % ring.size()];
    const double cross = p.first * q.second - q.first * p.second;
    a += cross;
    x += (p.first + q.first) * cross;
    y += (p.second + q.second) * cross;
  }
  // Orientation-independent: outer rings add, holes subtract.
  const double s = a < 0 ? -1.0 : 1.0;
  area += sign * s * a / 2.0;
  cx += sign * s * x / 6.0;
  cy += sign * s * y / 6.0;
}

LatLon geometry_centroid(const ojson& geom, std::string_view source, std::size_t row) {
  const std::string type = geom.value("type", "");
  const auto& coords = geom.at("coordinates");
  if (type == "Point") return LatLon{coords.at(1).get<double>(), coords.at(0).get<double>()};
  double area = 0.0, cx = 0.0, cy = 0.0;
  auto polygon = [&](const ojson& rings) {
    for (std::size_t r = 0; r < rings.size(); ++r) accumulate_ring(ring_of(rings[r]), r == 0 ? 1.0 : -1.0, area, cx, cy);
  };
  if (type == "Polygon") {
    polygon(coords);
  } else if (type == "MultiPolygon") {
    for (const auto& poly : coords) polygon(poly);
  } else {
    throw Error(Errc::ParseError, std::string(source) + ": feature " + std::to_string(row) +
                                      ": unsupported geometry type '" + type + "'");
  }
  if (!(std::abs(area) > 0.0)) {
    throw Error(Errc::DegenerateGeometry, std::string(source) + ": feature " + std::to_string(row) + " has zero area");
  }
  return LatLon{cy / area, cx / area};
}

double json_number(const ojson& v, std::string_view source, std::size_t row, std::string_view column) {
  if (v.is_number()) {
    const double d = v.get<double>();
    if (std::isfinite(d)) return d;
  } else if (v.is_string()) {
    return parse_number(v.get<std::string>(), source, row, column);
  }
  throw Error(Errc::NonFiniteValue, std::string(source) + ": row " + std::to_string(row) + ", column " +
                                        std::string(column));
}

std::string json_id(const ojson& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  return v.dump();
}

}  // namespace

TractFormat detect_tract_format(std::string_view path) {
  if (ends_with(path, ".geojson") || ends_with(path, ".json")) return TractFormat::GeoJson;
  return TractFormat::Delimited;
}

LatLon ring_centroid(const std::vector<std::pair<double, double>>& ring) {
  double area = 0.0, cx = 0.0, cy = 0.0;
  accumulate_ring(ring, 1.0, area, cx, cy);
  if (!(area > 0.0)) throw Error(Errc::DegenerateGeometry, "ring has zero area");
  return LatLon{cy / area, cx / area};
}

std::vector<Tract> parse_tracts_delimited(std::string_view text, const FeatureSchema& schema, std::string_view source) {
  const Table table = parse_table(text, source);
  const auto id_col = find_any(table, id_columns());
  const auto lat_col = find_any(table, lat_columns());
  const auto lon_col = find_any(table, lon_columns());
  if (!id_col) throw Error(Errc::MissingColumn, std::string(source) + ": id");
  if (!lat_col) throw Error(Errc::MissingColumn, std::string(source) + ": lat");
  if (!lon_col) throw Error(Errc::MissingColumn, std::string(source) + ": lon");
  std::vector<std::size_t> feature_cols;
  for (const auto& ind : schema.indicators()) {
    auto c = table.column(ind.name);
    if (!c) throw Error(Errc::MissingColumn, std::string(source) + ": " + ind.name);
    feature_cols.push_back(*c);
  }

  std::vector<Tract> tracts;
  tracts.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t row_no = r + 1;
    Tract t;
    t.id = row[*id_col];
    t.centroid.lat = parse_number(row[*lat_col], source, row_no, table.columns[*lat_col]);
    t.centroid.lon = parse_number(row[*lon_col], source, row_no, table.columns[*lon_col]);
    check_centroid(t.centroid, source, row_no);
    for (std::size_t c : feature_cols) t.features.push_back(parse_number(row[c], source, row_no, table.columns[c]));
    schema.validate(t.features, std::string(source) + ": row " + std::to_string(row_no));
    tracts.push_back(std::move(t));
  }
  check_unique(tracts);
  return tracts;
}

std::vector<Tract> parse_tracts_geojson(std::string_view text, const FeatureSchema& schema, std::string_view source) {
  ojson doc;
  try {
    doc = ojson::parse(text);
  } catch (const ojson::parse_error& e) {
    throw Error(Errc::ParseError, std::string(source) + ": " + e.what());
  }
  if (doc.value("type", "") != "FeatureCollection" || !doc.contains("features")) {
    throw Error(Errc::ParseError, std::string(source) + ": expected a GeoJSON FeatureCollection");
  }
  std::vector<Tract> tracts;
  std::size_t row_no = 0;
  for (const auto& f : doc["features"]) {
    ++row_no;
    const ojson props = f.contains("properties") && f["properties"].is_object() ? f["properties"] : ojson::object();
    Tract t;
    bool have_id = false;
    for (const auto& key : id_columns()) {
      if (props.contains(key)) {
        t.id = json_id(props[key]);
        have_id = true;
        break;
      }
    }
    if (!have_id && f.contains("id")) {
      t.id = json_id(f["id"]);
      have_id = true;
    }
    if (!have_id) throw Error(Errc::MissingColumn, std::string(source) + ": feature " + std::to_string(row_no) + ": id");

    if (f.contains("geometry") && !f["geometry"].is_null()) {
      t.centroid = geometry_centroid(f["geometry"], source, row_no);
    } else {
      std::optional<double> lat, lon;
      for (const auto& k : lat_columns()) {
        if (props.contains(k)) lat = json_number(props[k], source, row_no, k);
      }
      for (const auto& k : lon_columns()) {
        if (props.contains(k)) lon = json_number(props[k], source, row_no, k);
      }
      if (!lat || !lon) throw Error(Errc::MissingColumn, std::string(source) + ": feature " + std::to_string(row_no) + ": geometry or lat/lon");
      t.centroid = LatLon{*lat, *lon};
    }
    check_centroid(t.centroid, source, row_no);

    for (const auto& ind : schema.indicators()) {
      if (!props.contains(ind.name)) throw Error(Errc::MissingColumn, std::string(source) + ": " + ind.name);
      t.features.push_back(json_number(props[ind.name], source, row_no, ind.name));
    }
    schema.validate(t.features, std::string(source) + ": row " + std::to_string(row_no));
    tracts.push_back(std::move(t));
  }
  check_unique(tracts);
  return tracts;
}

std::vector<Tract> load_tracts(const std::string& path, const FeatureSchema& schema) {
  const std::string text = read_file(path);
  if (detect_tract_format(path) == TractFormat::GeoJson) return parse_tracts_geojson(text, schema, path);
  return parse_tracts_delimited(text, schema, path);
}

FeatureSchema infer_schema(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<std::string> names;
  if (detect_tract_format(path) == TractFormat::GeoJson) {
    const ojson doc = ojson::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.contains("features") || doc["features"].empty()) {
      throw Error(Errc::ParseError, path + ": expected a non-empty GeoJSON FeatureCollection");
    }
    const auto& props = doc["features"][0]["properties"];
    for (auto it = props.begin(); it != props.end(); ++it) {
      if (!is_reserved(it.key()) && it.value().is_number()) names.push_back(it.key());
    }
  } else {
    const Table table = parse_table(text, path);
    for (const auto& c : table.columns) {
      if (!is_reserved(c)) names.push_back(c);
    }
  }
  return FeatureSchema::from_names(names);
}

FeatureSchema load_schema(const std::string& path) {
  const Table table = read_table(path);
  const auto name_col = table.column("name");
  if (!name_col) throw Error(Errc::MissingColumn, path + ": name");
  const auto cat_col = table.column("category");
  const auto nonneg_col = table.column("nonnegative");
  std::vector<FeatureSchema::Indicator> inds;
  for (const auto& row : table.rows) {
    FeatureSchema::Indicator ind;
    ind.name = row[*name_col];
    if (cat_col) ind.category = parse_indicator_category(row[*cat_col]);
    if (nonneg_col) {
      const auto& v = row[*nonneg_col];
      ind.nonnegative = !(v == "0" || v == "false" || v == "no");
    }
    inds.push_back(std::move(ind));
  }
  return FeatureSchema(std::move(inds));
}

std::string format_tracts_csv(std::span<const Tract> tracts, const FeatureSchema& schema) {
  std::string out = "id,lat,lon";
  for (const auto& name : schema.names()) out += ',' + name;
  out += '\n';
  for (const auto& t : tracts) {
    out += t.id + ',' + format_double(t.centroid.lat) + ',' + format_double(t.centroid.lon);
    for (double v : t.features) out += ',' + format_double(v);
    out += '\n';
  }
  return out;
}

std::string format_schema_csv(const FeatureSchema& schema) {
  std::string out = "name,category,nonnegative\n";
  for (const auto& ind : schema.indicators()) {
    out += ind.name + ',' + std::string(to_string(ind.category)) + ',' + (ind.nonnegative ? "true" : "false") + '\n';
  }
  return out;
}

}  // namespace tractflow
