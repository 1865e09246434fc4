#include "geotweet/geo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <nlohmann/json.hpp>

#include "geotweet/error.hpp"
#include "geotweet/io.hpp"

namespace geotweet::geo {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kEdgeEps = 1e-12;

bool on_segment(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) noexcept {
  const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
  const double scale = std::max({1.0, std::abs(b.lon - a.lon), std::abs(b.lat - a.lat)});
  if (std::abs(cross) > kEdgeEps * scale) return false;
  return p.lon >= std::min(a.lon, b.lon) - kEdgeEps && p.lon <= std::max(a.lon, b.lon) + kEdgeEps &&
         p.lat >= std::min(a.lat, b.lat) - kEdgeEps && p.lat <= std::max(a.lat, b.lat) + kEdgeEps;
}

BoundingBox bbox_of(const std::vector<Ring>& rings) {
  BoundingBox box{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& ring : rings) {
    for (const auto& v : ring) {
      box.min_lat = std::min(box.min_lat, v.lat);
      box.max_lat = std::max(box.max_lat, v.lat);
      box.min_lon = std::min(box.min_lon, v.lon);
      box.max_lon = std::max(box.max_lon, v.lon);
    }
  }
  return box;
}

void validate_ring(const std::string& code, const Ring& ring) {
  if (ring.size() < 4) throw LoadError(code + ": ring has fewer than 4 vertices");
  if (!(ring.front() == ring.back())) throw LoadError(code + ": ring is not closed");
  for (std::size_t i = 0; i < ring.size(); ++i) {
    if (!ring[i].valid()) throw LoadError(code + ": ring vertex out of range");
    if (i > 0 && std::abs(ring[i].lon - ring[i - 1].lon) > 180.0) {
      throw LoadError(code + ": ring crosses the antimeridian (split it in the data file)");
    }
  }
}

}  // namespace

bool GeoPoint::valid() const noexcept {
  return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
         lon >= -180.0 && lon <= 180.0;
}

double haversine_km(const GeoPoint& a, const GeoPoint& b) noexcept {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double half_dphi = (phi2 - phi1) / 2.0;
  const double half_dlambda = (b.lon - a.lon) * kDegToRad / 2.0;
  const double s1 = std::sin(half_dphi);
  const double s2 = std::sin(half_dlambda);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(std::clamp(h, 0.0, 1.0)));
}

bool is_country_code(std::string_view code) noexcept {
  return code.size() == 2 && code[0] >= 'A' && code[0] <= 'Z' && code[1] >= 'A' && code[1] <= 'Z';
}

bool ring_set_contains(const std::vector<Ring>& rings, const GeoPoint& p) noexcept {
  bool inside = false;
  for (const auto& ring : rings) {
    for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
      const GeoPoint& a = ring[i];
      const GeoPoint& b = ring[j];
      if (on_segment(p, a, b)) return true;
      if ((a.lat > p.lat) != (b.lat > p.lat)) {
        const double x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
        if (p.lon < x) inside = !inside;
      }
    }
  }
  return inside;
}

void CountryTable::add(Country country) {
  if (!is_country_code(country.code)) {
    throw LoadError("invalid country code '" + country.code + "'");
  }
  if (countries_.contains(country.code)) throw LoadError("duplicate country code " + country.code);
  if (!country.centroid.valid()) throw LoadError(country.code + ": centroid out of range");
  for (const auto& ring : country.rings) validate_ring(country.code, ring);
  country.bbox = country.rings.empty() ? std::nullopt : std::optional(bbox_of(country.rings));
  auto code = country.code;
  countries_.emplace(std::move(code), std::move(country));
}

const Country* CountryTable::find(std::string_view code) const noexcept {
  const auto it = countries_.find(code);
  return it == countries_.end() ? nullptr : &it->second;
}

const Country& CountryTable::at(std::string_view code) const {
  const Country* c = find(code);
  if (!c) throw LookupError("unknown country code '" + std::string(code) + "'");
  return *c;
}

double country_distance_km(std::string_view c1, std::string_view c2, const CountryTable& table) {
  const Country& a = table.at(c1);
  const Country& b = table.at(c2);
  if (c1 == c2) return 0.0;
  return haversine_km(a.centroid, b.centroid);
}

std::optional<std::string> reverse_geocode(const GeoPoint& p, const CountryTable& table,
                                           double fallback_km) {
  const Country* best = nullptr;
  bool any_boundary = false;
  for (const auto& [code, c] : table.entries()) {
    if (!c.bbox) continue;
    any_boundary = true;
    if (!c.bbox->contains(p) || !ring_set_contains(c.rings, p)) continue;
    if (!best || c.bbox->area_deg2() < best->bbox->area_deg2()) best = &c;
  }
  if (!any_boundary) throw ConfigError("reverse geocoding needs a table with boundaries");
  if (best) return best->code;

  // One degree of latitude is ~111.19 km everywhere; use it to skip rings
  // that cannot hold a vertex within range.
  const double lat_margin = fallback_km / (kEarthRadiusKm * kDegToRad) + 1e-9;
  double best_km = std::numeric_limits<double>::infinity();
  for (const auto& [code, c] : table.entries()) {
    if (!c.bbox) continue;
    if (p.lat < c.bbox->min_lat - lat_margin || p.lat > c.bbox->max_lat + lat_margin) continue;
    for (const auto& ring : c.rings) {
      for (const auto& v : ring) {
        const double d = haversine_km(p, v);
        if (d < best_km) {
          best_km = d;
          best = &c;
        }
      }
    }
  }
  if (best && best_km <= fallback_km) return best->code;
  return std::nullopt;
}

namespace {

Ring parse_ring(const nlohmann::json& coords, const std::string& where) {
  if (!coords.is_array()) throw LoadError(where + ": ring is not an array");
  Ring ring;
  ring.reserve(coords.size());
  for (const auto& pt : coords) {
    if (!pt.is_array() || pt.size() < 2 || !pt[0].is_number() || !pt[1].is_number()) {
      throw LoadError(where + ": bad position");
    }
    ring.push_back(GeoPoint{pt[1].get<double>(), pt[0].get<double>()});
  }
  return ring;
}

void append_polygon(const nlohmann::json& poly, const std::string& where, std::vector<Ring>& out) {
  if (!poly.is_array()) throw LoadError(where + ": polygon is not an array");
  for (const auto& ring : poly) out.push_back(parse_ring(ring, where));
}

}  // namespace

CountryTable parse_centroids(std::string_view centroid_csv) {
  CountryTable table;
  io::for_each_line(centroid_csv, [&](std::size_t line_no, std::string_view line) {
    if (io::trim(line).empty()) return;
    const auto where = "centroids line " + std::to_string(line_no);
    const auto cols = io::split(line, ',');
    if (cols.size() != 3) throw LoadError(where + ": expected iso2,lat,lon");
    const auto lat = io::parse_double(cols[1]);
    const auto lon = io::parse_double(cols[2]);
    if (!lat || !lon) {
      if (line_no == 1) return;  // header
      throw LoadError(where + ": non-numeric coordinate");
    }
    Country c;
    c.code = std::string(io::trim(cols[0]));
    c.centroid = {*lat, *lon};
    try {
      table.add(std::move(c));
    } catch (const LoadError& e) {
      throw LoadError(where + ": " + e.what());
    }
  });
  return table;
}

CountryTable parse_country_table(std::string_view centroid_csv, std::string_view boundary_geojson) {
  CountryTable centroids = parse_centroids(centroid_csv);

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(boundary_geojson);
  } catch (const nlohmann::json::parse_error& e) {
    throw LoadError(std::string("boundaries: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("features") || !doc["features"].is_array()) {
    throw LoadError("boundaries: not a FeatureCollection");
  }

  std::map<std::string, std::vector<Ring>, std::less<>> rings;
  std::size_t index = 0;
  for (const auto& feature : doc["features"]) {
    const auto where = "boundaries feature " + std::to_string(index++);
    const auto* props = feature.contains("properties") ? &feature["properties"] : nullptr;
    if (!props || !props->is_object() || !props->contains("iso2") || !(*props)["iso2"].is_string()) {
      throw LoadError(where + ": missing string property iso2");
    }
    const auto code = (*props)["iso2"].get<std::string>();
    if (!centroids.contains(code)) throw LoadError(where + ": " + code + " has no centroid");
    if (!feature.contains("geometry") || !feature["geometry"].is_object()) {
      throw LoadError(where + ": missing geometry");
    }
    const auto& geom = feature["geometry"];
    const auto type = geom.value("type", std::string{});
    auto& out = rings[code];
    if (type == "Polygon") {
      append_polygon(geom.at("coordinates"), where, out);
    } else if (type == "MultiPolygon") {
      for (const auto& poly : geom.at("coordinates")) append_polygon(poly, where, out);
    } else {
      throw LoadError(where + ": unsupported geometry type '" + type + "'");
    }
  }

  CountryTable table;
  for (const auto& [code, c] : centroids.entries()) {
    Country copy = c;
    if (auto it = rings.find(code); it != rings.end()) copy.rings = std::move(it->second);
    table.add(std::move(copy));
  }
  return table;
}

CountryTable load_country_table(const std::filesystem::path& centroid_file,
                                const std::filesystem::path& boundary_file) {
  return parse_country_table(io::read_file(centroid_file), io::read_file(boundary_file));
}

}  // namespace geotweet::geo
