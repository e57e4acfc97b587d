#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gridalign {

struct LonLat {
    double lon = 0.0;
    double lat = 0.0;

    friend bool operator==(LonLat const&, LonLat const&) = default;
};

/// Closed ring: first vertex repeated at the end, at least 4 vertices.
using Ring = std::vector<LonLat>;

/// Exterior ring followed by any holes.
using Polygon = std::vector<Ring>;

struct Region {
    std::string name;
    std::vector<Polygon> polygons;
};

class GeoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotFoundError : public GeoError {
public:
    using GeoError::GeoError;
};

inline constexpr std::string_view kOtherRegion = "Other";
inline constexpr double kBoundaryEpsilon = 1e-9;

class RegionSet {
public:
    RegionSet() = default;
    /// Throws GeoError on malformed rings or duplicate names.
    explicit RegionSet(std::vector<Region> regions);

    std::vector<Region> const& regions() const noexcept { return regions_; }

private:
    std::vector<Region> regions_;
};

/// Reads a GeoJSON FeatureCollection; region names come from the `NAME`
/// property. Polygon and MultiPolygon geometries are accepted.
RegionSet parse_regions_geojson(std::string_view text);

struct RegionAssignment {
    std::string region;
    /// Point lies within kBoundaryEpsilon degrees of some ring edge.
    bool on_boundary = false;
    /// More than one region contains the point; the first in order won.
    bool overlapping = false;
};

/// Even-odd containment on planar lon/lat.
bool ring_contains(Ring const& ring, LonLat p);
bool polygon_contains(Polygon const& polygon, LonLat p);
double distance_to_ring(Ring const& ring, LonLat p);

/// First region containing the point, or "Other".
RegionAssignment assign_region(LonLat p, RegionSet const& regions);

class Gazetteer {
public:
    void insert(std::string zip, double latitude, double longitude);
    std::optional<LonLat> find(std::string_view zip) const;
    std::size_t size() const noexcept { return entries_.size(); }

private:
    std::unordered_map<std::string, LonLat> entries_;
};

/// `zip,latitude,longitude`
Gazetteer parse_gazetteer(std::string_view text);

/// Five ASCII digits. Throws std::invalid_argument otherwise.
std::string normalize_zip(std::string_view zip);

/// Exact lookup. Throws NotFoundError for unknown ZIPs.
LonLat zip_to_coords(std::string_view zip, Gazetteer const& g);

}  // namespace gridalign
