#pragma once

// Deterministic synthetic landfalling-storm generator.
//
// A vortex moves linearly along a track. Precipitation is an eyewall ring
// plus rotating spiral rainbands; every other variable is a bounded function
// of the precipitation field and the vortex geometry plus keyed noise, so
// all 19 features carry coupled signal. Noise for (variable, hour, cell) is
// drawn from a counter-based generator keyed by the seed, which makes each
// frame independent of evaluation order.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "climoe/data/series.hpp"
#include "climoe/error.hpp"
#include "climoe/rng.hpp"

namespace climoe::synth {

struct NoiseSigma {
    double precip = 0.05;      // mm/hour, half-normal
    double wind = 0.8;         // m/s
    double temperature = 0.3;  // K
    double cloud = 3.0;        // %
    double pressure = 1.5;     // hPa
    double moisture = 1.0;     // % (canopy water uses 1/100 of this)
    double radiation = 1.0;    // K
};

struct StormConfig {
    std::uint64_t seed = 42;
    int days = 9;
    data::Timestamp start = data::Timestamp::from_civil(2022, 9, 23);
    double start_lat = 25.2, start_lon = -84.2;
    double end_lat = 29.8, end_lon = -80.6;
    double radius_km = 45.0;
    int rainbands = 3;
    double eyewall_rate = 14.0;  // mm/hour peak
    double band_rate = 7.0;      // mm/hour peak
    double rotation_period_h = 9.0;
    double max_wind = 45.0;      // m/s
    NoiseSigma noise;
};

namespace detail {

inline double quantize(double x, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(x * scale) / scale + 0.0;  // +0.0 folds -0 into 0
}

inline double saturate(double x, double scale) { return 1.0 - std::exp(-std::max(x, 0.0) / scale); }

// Intensities below this are treated as exactly zero.
inline constexpr double kPrecipFloor = 1e-9;

}  // namespace detail

// Precipitation signal (before noise) at a point given in vortex-relative
// polar coordinates.
inline double storm_precip(const StormConfig& cfg, double rho_km, double theta, double hour) {
    const double R = cfg.radius_km;
    const double omega = 2.0 * std::numbers::pi / cfg.rotation_period_h;
    auto ring = [](double rho, double centre, double width) {
        const double d = (rho - centre) / width;
        return std::exp(-0.5 * d * d);
    };
    double p = cfg.eyewall_rate * ring(rho_km, 0.6 * R, 0.25 * R);
    for (int k = 0; k < cfg.rainbands; ++k) {
        const double centre = R * (1.6 + 0.9 * k);
        const double phase = theta - omega * hour - 2.0 * std::numbers::pi * k / std::max(cfg.rainbands, 1) +
                             rho_km / (1.5 * R);
        p += cfg.band_rate * ring(rho_km, centre, 0.35 * R) * (0.5 + 0.5 * std::cos(phase));
    }
    return p < detail::kPrecipFloor ? 0.0 : p;
}

inline data::FrameSeries generate(const StormConfig& cfg, const data::GridSpec& grid) {
    using namespace data;
    using detail::quantize;
    using detail::saturate;
    if (cfg.days < 1) throw ConfigError("generate: days must be at least 1");
    if (!(cfg.radius_km > 0.0)) throw ConfigError("generate: vortex radius must be positive");
    grid.validate();

    const std::size_t T = static_cast<std::size_t>(cfg.days) * 24;
    std::vector<Timestamp> ts(T);
    for (std::size_t t = 0; t < T; ++t) ts[t] = cfg.start.plus_hours(static_cast<std::int64_t>(t));
    FrameSeries s = FrameSeries::allocate(grid, std::move(ts));

    const double width_km = static_cast<double>(grid.cols) * grid.spacing_km;
    const double height_km = static_cast<double>(grid.rows) * grid.spacing_km;
    // km east of the west edge / km north of the south edge
    auto east_km = [&](double lon) { return (lon - grid.lon_min) / (grid.lon_max - grid.lon_min) * width_km; };
    auto north_km = [&](double lat) { return (lat - grid.lat_min) / (grid.lat_max - grid.lat_min) * height_km; };
    const double x0 = east_km(cfg.start_lon), y0 = north_km(cfg.start_lat);
    const double x1 = east_km(cfg.end_lon), y1 = north_km(cfg.end_lat);

    const double R = cfg.radius_km;
    const double Rm = 0.6 * R;
    const auto& ns = cfg.noise;
    const std::size_t cells = grid.cell_count();
    auto noise = [&](int id, std::size_t t, std::size_t c) {
        return gaussian_at(hash_key(cfg.seed, static_cast<std::uint64_t>(id), t, c));
    };

    std::vector<double> total(cells, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        const double hour = static_cast<double>(t);
        const double frac = T > 1 ? hour / static_cast<double>(T - 1) : 0.0;
        const double cx = x0 + (x1 - x0) * frac;
        const double cy = y0 + (y1 - y0) * frac;
        const double hour_of_day = std::fmod(hour + static_cast<double>(cfg.start.minutes / 60 % 24), 24.0);
        const double diurnal = std::sin(2.0 * std::numbers::pi * (hour_of_day - 9.0) / 24.0);

        auto out = [&](int id) { return s.frame(id, t); };
        auto p_f = out(kPrecipRate), cc_f = out(kCloudCover), cw_f = out(kCanopyWater);
        auto r4 = out(kSbtG12C3), ws_f = out(kWindSpeed), t2 = out(kTemperature2m);
        auto pb = out(kPressureCloudBase), u_f = out(kWindU), v_f = out(kWindV);
        auto td = out(kDewPoint), ma = out(kMoistureAvail), tp = out(kTotalPrecip);
        auto lc = out(kLowCloud), mc = out(kMediumCloud), pt = out(kPressureCloudTop);
        auto rh_f = out(kRelHumidity), r17 = out(kSbtG12C4), r18 = out(kSbtG11C3), r19 = out(kSbtG11C4);

        for (std::size_t r = 0; r < grid.rows; ++r) {
            const double y = height_km - (static_cast<double>(r) + 0.5) * grid.spacing_km;
            const double lat = grid.cell_lat(r);
            for (std::size_t col = 0; col < grid.cols; ++col) {
                const std::size_t c = grid.cell_index(r, col);
                const double x = (static_cast<double>(col) + 0.5) * grid.spacing_km;
                const double dx = x - cx, dy = y - cy;
                const double rho = std::hypot(dx, dy);
                const double theta = std::atan2(dy, dx);
                const double core = std::exp(-0.5 * (rho / (1.5 * R)) * (rho / (1.5 * R)));

                double p = storm_precip(cfg, rho, theta, hour);
                if (ns.precip > 0.0) p += ns.precip * std::max(0.0, noise(kPrecipRate, t, c));
                p = quantize(p, 4);
                p_f[c] = p;
                total[c] += p;
                tp[c] = total[c];

                // Cyclonic (counter-clockwise) vortex on a weak easterly flow.
                const double vt = rho > 0.0 ? cfg.max_wind * (rho / Rm) * std::exp(1.0 - rho / Rm) : 0.0;
                const double u = rho > 0.0 ? -vt * dy / rho : 0.0;
                const double v = rho > 0.0 ? vt * dx / rho : 0.0;
                u_f[c] = quantize(u - 2.0 + ns.wind * noise(kWindU, t, c), 2);
                v_f[c] = quantize(v + 1.0 + ns.wind * noise(kWindV, t, c), 2);
                ws_f[c] = std::sqrt(u_f[c] * u_f[c] + v_f[c] * v_f[c]);

                const double sat = saturate(p, 0.8);
                cc_f[c] = quantize(std::clamp(100.0 * sat + ns.cloud * noise(kCloudCover, t, c), 0.0, 100.0), 1);
                lc[c] = quantize(std::clamp(100.0 * saturate(p, 2.5) + ns.cloud * noise(kLowCloud, t, c), 0.0, 100.0), 1);
                mc[c] = quantize(
                    std::clamp(100.0 * saturate(p + 0.5 * core, 1.5) + ns.cloud * noise(kMediumCloud, t, c), 0.0, 100.0), 1);

                t2[c] = quantize(300.5 - 0.8 * (lat - grid.lat_min) + 1.5 * diurnal - 3.5 * core - 0.15 * p +
                                     ns.temperature * noise(kTemperature2m, t, c), 2);
                const double rh = std::clamp(62.0 + 38.0 * saturate(p, 1.2) + 10.0 * core +
                                                 ns.moisture * noise(kRelHumidity, t, c), 0.0, 100.0);
                rh_f[c] = quantize(rh, 2);
                td[c] = quantize(t2[c] - (100.0 - rh_f[c]) / 5.0, 2);

                cw_f[c] = quantize(std::max(0.0, 0.6 * saturate(p, 1.5) + 0.01 * ns.moisture * noise(kCanopyWater, t, c)), 4);
                ma[c] = quantize(std::clamp(35.0 + 60.0 * saturate(total[c], 30.0) +
                                                ns.moisture * noise(kMoistureAvail, t, c), 0.0, 100.0), 2);

                pb[c] = quantize(960.0 - 45.0 * std::exp(-rho / (1.5 * R)) - 3.0 * p / (1.0 + p) +
                                     ns.pressure * noise(kPressureCloudBase, t, c), 2);
                pt[c] = quantize(420.0 - 180.0 * saturate(p, 2.0) - 40.0 * std::exp(-rho / (2.0 * R)) +
                                     ns.pressure * noise(kPressureCloudTop, t, c), 2);

                const double cf = cc_f[c] / 100.0;
                r4[c] = quantize(245.0 - 25.0 * cf + ns.radiation * noise(kSbtG12C3, t, c), 2);
                r17[c] = quantize(295.0 - 70.0 * cf + 1.5 * ns.radiation * noise(kSbtG12C4, t, c), 2);
                r18[c] = quantize(243.0 - 22.0 * cf + 0.8 * ns.radiation * noise(kSbtG11C3, t, c), 2);
                r19[c] = quantize(293.0 - 65.0 * cf + 1.2 * ns.radiation * noise(kSbtG11C4, t, c), 2);
            }
        }
    }
    s.validate();
    return s;
}

// Grid of `size` x `size` cells spanning the default geographic box; spacing
// scales so the physical extent stays 300 km.
inline data::GridSpec square_grid(std::size_t size) {
    data::GridSpec g;
    g.rows = g.cols = size;
    g.spacing_km = 300.0 / static_cast<double>(size);
    return g;
}

}  // namespace climoe::synth
