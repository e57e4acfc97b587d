#include "gridalign/geo.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "gridalign/csv.hpp"

namespace gridalign {

using nlohmann::json;

RegionSet::RegionSet(std::vector<Region> regions) : regions_(std::move(regions)) {
    std::set<std::string> names;
    for (auto const& r : regions_) {
        if (!names.insert(r.name).second) {
            throw GeoError(fmt::format("duplicate region name '{}'", r.name));
        }
        for (auto const& poly : r.polygons) {
            for (auto const& ring : poly) {
                if (ring.size() < 4 || !(ring.front() == ring.back())) {
                    throw GeoError(fmt::format("region '{}' has a ring that is not closed with >= 4 vertices", r.name));
                }
            }
        }
    }
}

namespace {

Ring parse_ring(json const& coords, std::string const& name) {
    Ring ring;
    for (auto const& pt : coords) {
        if (!pt.is_array() || pt.size() < 2) {
            throw GeoError(fmt::format("region '{}': malformed position", name));
        }
        ring.push_back(LonLat{pt[0].get<double>(), pt[1].get<double>()});
    }
    return ring;
}

Polygon parse_polygon(json const& coords, std::string const& name) {
    Polygon poly;
    for (auto const& ring : coords) {
        poly.push_back(parse_ring(ring, name));
    }
    return poly;
}

}  // namespace

RegionSet parse_regions_geojson(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (json::parse_error const& e) {
        throw GeoError(fmt::format("invalid GeoJSON: {}", e.what()));
    }
    if (doc.value("type", "") != "FeatureCollection" || !doc.contains("features")) {
        throw GeoError("GeoJSON root must be a FeatureCollection");
    }
    std::vector<Region> regions;
    try {
        for (auto const& feature : doc["features"]) {
            auto const& props = feature.at("properties");
            if (!props.contains("NAME") || !props["NAME"].is_string()) {
                throw GeoError("feature without a string NAME property");
            }
            Region region{props["NAME"].get<std::string>(), {}};
            auto const& geom = feature.at("geometry");
            auto type = geom.at("type").get<std::string>();
            auto const& coords = geom.at("coordinates");
            if (type == "Polygon") {
                region.polygons.push_back(parse_polygon(coords, region.name));
            } else if (type == "MultiPolygon") {
                for (auto const& p : coords) {
                    region.polygons.push_back(parse_polygon(p, region.name));
                }
            } else {
                throw GeoError(fmt::format("region '{}': unsupported geometry type '{}'", region.name, type));
            }
            regions.push_back(std::move(region));
        }
    } catch (json::exception const& e) {
        throw GeoError(fmt::format("malformed GeoJSON feature: {}", e.what()));
    }
    return RegionSet(std::move(regions));
}

bool ring_contains(Ring const& ring, LonLat p) {
    // Crossing count of a ray towards +lon; half-open edge rule avoids
    // counting a shared vertex twice.
    bool inside = false;
    for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
        auto const& a = ring[i];
        auto const& b = ring[j];
        if ((a.lat > p.lat) != (b.lat > p.lat)) {
            double x = (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon;
            if (p.lon < x) {
                inside = !inside;
            }
        }
    }
    return inside;
}

bool polygon_contains(Polygon const& polygon, LonLat p) {
    bool inside = false;
    for (auto const& ring : polygon) {
        if (ring_contains(ring, p)) inside = !inside;
    }
    return inside;
}

double distance_to_ring(Ring const& ring, LonLat p) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        auto const& a = ring[i];
        auto const& b = ring[i + 1];
        double dx = b.lon - a.lon;
        double dy = b.lat - a.lat;
        double len2 = dx * dx + dy * dy;
        double t = len2 > 0.0 ? ((p.lon - a.lon) * dx + (p.lat - a.lat) * dy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        double ex = a.lon + t * dx - p.lon;
        double ey = a.lat + t * dy - p.lat;
        best = std::min(best, std::hypot(ex, ey));
    }
    return best;
}

RegionAssignment assign_region(LonLat p, RegionSet const& regions) {
    RegionAssignment out{std::string(kOtherRegion), false, false};
    bool found = false;
    for (auto const& region : regions.regions()) {
        bool contains = false;
        for (auto const& poly : region.polygons) {
            for (auto const& ring : poly) {
                if (distance_to_ring(ring, p) <= kBoundaryEpsilon) {
                    out.on_boundary = true;
                }
            }
            if (polygon_contains(poly, p)) {
                contains = true;
            }
        }
        if (contains) {
            if (found) {
                out.overlapping = true;
            } else {
                out.region = region.name;
                found = true;
            }
        }
    }
    return out;
}

std::string normalize_zip(std::string_view zip) {
    zip = trim(zip);
    if (zip.size() != 5 || !std::all_of(zip.begin(), zip.end(), [](unsigned char c) { return std::isdigit(c); })) {
        throw std::invalid_argument(fmt::format("'{}' is not a five-digit ZIP code", zip));
    }
    return std::string(zip);
}

void Gazetteer::insert(std::string zip, double latitude, double longitude) {
    if (!(latitude >= -90.0 && latitude <= 90.0) || !(longitude >= -180.0 && longitude <= 180.0)) {
        throw GeoError(fmt::format("coordinates ({}, {}) for ZIP {} are out of range", latitude, longitude, zip));
    }
    entries_.insert_or_assign(normalize_zip(zip), LonLat{longitude, latitude});
}

std::optional<LonLat> Gazetteer::find(std::string_view zip) const {
    auto it = entries_.find(std::string(zip));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

Gazetteer parse_gazetteer(std::string_view text) {
    CsvTable table = parse_csv(text);
    auto zip = table.column("zip");
    auto lat = table.column("latitude");
    auto lon = table.column("longitude");
    if (!zip || !lat || !lon) {
        throw ParseError(1, "", "gazetteer header must contain zip,latitude,longitude");
    }
    Gazetteer g;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        auto const& row = table.rows[r];
        std::size_t line = table.line_numbers[r];
        if (std::max({*zip, *lat, *lon}) >= row.size()) {
            throw ParseError(line, "", "row has too few fields");
        }
        try {
            g.insert(std::string(trim(row[*zip])), parse_number(row[*lat]), parse_number(row[*lon]));
        } catch (std::exception const& e) {
            throw ParseError(line, "", e.what());
        }
    }
    return g;
}

LonLat zip_to_coords(std::string_view zip, Gazetteer const& g) {
    auto key = normalize_zip(zip);
    auto found = g.find(key);
    if (!found) {
        throw NotFoundError(fmt::format("ZIP {} is not in the gazetteer", key));
    }
    return *found;
}

}  // namespace gridalign
