#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "climoe/error.hpp"

namespace climoe::data {

enum class FeatureGroup { Momentum, Temperature, Moisture, Mass, Cloud, Radiation };

inline constexpr std::array<FeatureGroup, 6> kAllGroups = {
    FeatureGroup::Momentum, FeatureGroup::Temperature, FeatureGroup::Moisture,
    FeatureGroup::Mass,     FeatureGroup::Cloud,       FeatureGroup::Radiation};

inline constexpr std::string_view group_name(FeatureGroup g) {
    switch (g) {
        case FeatureGroup::Momentum: return "Momentum";
        case FeatureGroup::Temperature: return "Temperature";
        case FeatureGroup::Moisture: return "Moisture";
        case FeatureGroup::Mass: return "Mass";
        case FeatureGroup::Cloud: return "Cloud";
        case FeatureGroup::Radiation: return "Radiation";
    }
    return "?";
}

inline std::optional<FeatureGroup> parse_group(std::string_view s) {
    for (auto g : kAllGroups)
        if (group_name(g) == s) return g;
    return std::nullopt;
}

struct VariableMeta {
    int feature_id = 0;
    std::string name;
    std::string unit;
    FeatureGroup group = FeatureGroup::Moisture;
    std::string description;

    bool operator==(const VariableMeta&) const = default;
};

inline constexpr int kFeatureCount = 19;
inline constexpr int kPrecipRate = 1;
inline constexpr int kCloudCover = 2;
inline constexpr int kCanopyWater = 3;
inline constexpr int kSbtG12C3 = 4;
inline constexpr int kWindSpeed = 5;
inline constexpr int kTemperature2m = 6;
inline constexpr int kPressureCloudBase = 7;
inline constexpr int kWindU = 8;
inline constexpr int kWindV = 9;
inline constexpr int kDewPoint = 10;
inline constexpr int kMoistureAvail = 11;
inline constexpr int kTotalPrecip = 12;
inline constexpr int kLowCloud = 13;
inline constexpr int kMediumCloud = 14;
inline constexpr int kPressureCloudTop = 15;
inline constexpr int kRelHumidity = 16;
inline constexpr int kSbtG12C4 = 17;
inline constexpr int kSbtG11C3 = 18;
inline constexpr int kSbtG11C4 = 19;

// Canonical registry, ordered by feature id. Group membership follows the
// NOAA-informed six-group taxonomy.
inline const std::vector<VariableMeta>& variable_registry() {
    using G = FeatureGroup;
    static const std::vector<VariableMeta> reg = {
        {1, "Precipitation rate", "mm/hour", G::Moisture, "Surface precipitation rate"},
        {2, "Cloud cover", "%", G::Cloud, "Total cloud cover fraction of the column"},
        {3, "Plant canopy surface water", "kg/m^2", G::Moisture, "Water held on the plant canopy surface"},
        {4, "SBT GOES 12 C3", "K", G::Radiation, "Surface brightness temperature, GOES-12 channel 3"},
        {5, "Wind speed", "m/s", G::Momentum, "10 metre wind speed"},
        {6, "2 metre temperature", "K", G::Temperature, "Air temperature at 2 m above ground"},
        {7, "Pressure: cloud base", "hPa", G::Mass, "Pressure at the cloud base"},
        {8, "U component of wind", "m/s", G::Momentum, "Eastward 10 metre wind component"},
        {9, "V component of wind", "m/s", G::Momentum, "Northward 10 metre wind component"},
        {10, "Dew point temperature", "K", G::Temperature, "Dew point temperature at 2 m above ground"},
        {11, "Moisture availability", "%", G::Moisture, "Near-surface soil moisture availability"},
        {12, "Total precipitation", "mm", G::Moisture, "Precipitation accumulated since the first frame"},
        {13, "Low cloud cover", "%", G::Cloud, "Low-level cloud cover fraction"},
        {14, "Medium cloud cover", "%", G::Cloud, "Mid-level cloud cover fraction"},
        {15, "Pressure: cloud top", "hPa", G::Mass, "Pressure at the cloud top"},
        {16, "Relative humidity", "%", G::Moisture, "Relative humidity at 2 m above ground"},
        {17, "SBT GOES 12 C4", "K", G::Radiation, "Surface brightness temperature, GOES-12 channel 4"},
        {18, "SBT GOES 11 C3", "K", G::Radiation, "Surface brightness temperature, GOES-11 channel 3"},
        {19, "SBT GOES 11 C4", "K", G::Radiation, "Surface brightness temperature, GOES-11 channel 4"},
    };
    return reg;
}

inline const VariableMeta& variable_meta(int feature_id) {
    if (feature_id < 1 || feature_id > kFeatureCount)
        throw ConfigError("unknown feature id " + std::to_string(feature_id));
    return variable_registry()[static_cast<std::size_t>(feature_id - 1)];
}

inline std::vector<int> group_members(FeatureGroup g) {
    std::vector<int> ids;
    for (const auto& v : variable_registry())
        if (v.group == g) ids.push_back(v.feature_id);
    return ids;
}

}  // namespace climoe::data
