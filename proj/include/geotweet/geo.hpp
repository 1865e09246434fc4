#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace geotweet::geo {

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kDefaultFallbackKm = 100.0;

struct GeoPoint {
  double lat = 0.0;  // degrees, [-90, 90]
  double lon = 0.0;  // degrees, [-180, 180]

  bool valid() const noexcept;
  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

// Great-circle distance on a sphere of radius kEarthRadiusKm (haversine form).
double haversine_km(const GeoPoint& a, const GeoPoint& b) noexcept;

struct BoundingBox {
  double min_lat, max_lat, min_lon, max_lon;

  bool contains(const GeoPoint& p) const noexcept {
    return p.lat >= min_lat && p.lat <= max_lat && p.lon >= min_lon && p.lon <= max_lon;
  }
  double area_deg2() const noexcept { return (max_lat - min_lat) * (max_lon - min_lon); }
};

// Closed ring: front() == back(), at least 4 vertices.
using Ring = std::vector<GeoPoint>;

struct Country {
  std::string code;
  GeoPoint centroid;
  // All rings of all polygons; containment is even-odd over the whole set,
  // so holes and multipolygon parts need no special casing.
  std::vector<Ring> rings;
  std::optional<BoundingBox> bbox;  // absent for centroid-only entries
};

bool is_country_code(std::string_view code) noexcept;

// Even-odd ray casting in lon/lat space. Points on an edge count as inside.
bool ring_set_contains(const std::vector<Ring>& rings, const GeoPoint& p) noexcept;

class CountryTable {
 public:
  CountryTable() = default;

  // Validates the code, ring closure, vertex count and antimeridian rule.
  void add(Country country);

  const Country& at(std::string_view code) const;
  const Country* find(std::string_view code) const noexcept;
  bool contains(std::string_view code) const noexcept { return find(code) != nullptr; }
  std::size_t size() const noexcept { return countries_.size(); }
  bool empty() const noexcept { return countries_.empty(); }

  // Sorted by code.
  const std::map<std::string, Country, std::less<>>& entries() const noexcept {
    return countries_;
  }

 private:
  std::map<std::string, Country, std::less<>> countries_;
};

// Throws LookupError for an unknown code.
double country_distance_km(std::string_view c1, std::string_view c2, const CountryTable& table);

// Containing country (smallest bbox wins on overlap), else the country owning
// the nearest polygon vertex if it is within fallback_km, else nullopt.
// Throws ConfigError if the table has no boundaries at all.
std::optional<std::string> reverse_geocode(const GeoPoint& p, const CountryTable& table,
                                           double fallback_km = kDefaultFallbackKm);

// Centroid CSV (`iso2,lat,lon`, optional header) and a GeoJSON
// FeatureCollection whose features carry property `iso2` and Polygon or
// MultiPolygon geometry. Countries without boundaries are centroid-only.
CountryTable load_country_table(const std::filesystem::path& centroid_file,
                                const std::filesystem::path& boundary_file);
CountryTable parse_country_table(std::string_view centroid_csv, std::string_view boundary_geojson);
CountryTable parse_centroids(std::string_view centroid_csv);

}  // namespace geotweet::geo
