#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tractflow/geodata/tract.hpp"

namespace tractflow {

enum class TractFormat { Delimited, GeoJson };

/// Guesses the format from the file extension (.geojson / .json => GeoJSON).
TractFormat detect_tract_format(std::string_view path);

/// Loads tracts whose indicator columns match the schema. Delimited files need
/// id, lat and lon columns; GeoJSON features take the centroid from a Point or
/// the area centroid of a (Multi)Polygon.
std::vector<Tract> load_tracts(const std::string& path, const FeatureSchema& schema);
std::vector<Tract> parse_tracts_delimited(std::string_view text, const FeatureSchema& schema,
                                          std::string_view source = "<memory>");
std::vector<Tract> parse_tracts_geojson(std::string_view text, const FeatureSchema& schema,
                                        std::string_view source = "<memory>");

/// Schema from a tract file: every column other than id/lat/lon, in file order.
FeatureSchema infer_schema(const std::string& path);

/// Reads a schema table with columns name, category[, nonnegative].
FeatureSchema load_schema(const std::string& path);

/// "id,lat,lon,<indicators...>" with shortest round-trip number formatting.
std::string format_tracts_csv(std::span<const Tract> tracts, const FeatureSchema& schema);
/// "name,category,nonnegative".
std::string format_schema_csv(const FeatureSchema& schema);

/// Area-weighted centroid of a closed ring given as (lon, lat) vertices.
LatLon ring_centroid(const std::vector<std::pair<double, double>>& ring);

}  // namespace tractflow
