#pragma once

// FrameSeries: the full dataset cube, plus its on-disk directory layout.
//
//   DIR/meta.json                      grid, variables, timestamps
//   DIR/var_{id}/{YYYY-MM-DD_HHMM}.csv one frame: rows lines of cols values,
//                                      row 0 = northernmost

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "climoe/data/grid.hpp"
#include "climoe/data/timestamp.hpp"
#include "climoe/data/variables.hpp"
#include "climoe/error.hpp"
#include "climoe/hash.hpp"

namespace climoe::data {

struct FrameSeries {
    GridSpec grid;
    std::vector<VariableMeta> variables;  // sorted by feature_id
    std::vector<Timestamp> timestamps;
    std::vector<double> values;           // [variable][timestamp][row][col]

    std::size_t frame_size() const { return grid.cell_count(); }
    std::size_t timestep_count() const { return timestamps.size(); }

    std::size_t variable_index(int feature_id) const {
        for (std::size_t k = 0; k < variables.size(); ++k)
            if (variables[k].feature_id == feature_id) return k;
        throw ConfigError("series has no variable with feature id " + std::to_string(feature_id));
    }

    std::span<const double> frame(int feature_id, std::size_t t) const {
        return {values.data() + offset(variable_index(feature_id), t), frame_size()};
    }
    std::span<double> frame(int feature_id, std::size_t t) {
        return {values.data() + offset(variable_index(feature_id), t), frame_size()};
    }

    // Fast path for callers that already resolved the variable index.
    std::span<const double> frame_at(std::size_t var_index, std::size_t t) const {
        return {values.data() + offset(var_index, t), frame_size()};
    }

    // Allocates a zero-filled cube with the canonical 19-variable registry.
    static FrameSeries allocate(const GridSpec& grid, std::vector<Timestamp> timestamps) {
        FrameSeries s;
        s.grid = grid;
        s.variables = variable_registry();
        s.timestamps = std::move(timestamps);
        s.values.assign(s.variables.size() * s.timestamps.size() * grid.cell_count(), 0.0);
        return s;
    }

    void validate() const;

    // Order-sensitive hash over geometry, metadata, timestamps and every value.
    std::uint64_t fingerprint() const {
        Fnv1a h;
        h.update(std::uint64_t{grid.rows});
        h.update(std::uint64_t{grid.cols});
        h.update(std::span<const double>(
            std::array{grid.spacing_km, grid.lat_min, grid.lat_max, grid.lon_min, grid.lon_max}));
        for (const auto& v : variables) h.update(static_cast<std::uint64_t>(v.feature_id));
        for (auto ts : timestamps) h.update(static_cast<std::uint64_t>(ts.minutes));
        h.update(std::span<const double>(values));
        return h.digest();
    }

private:
    std::size_t offset(std::size_t var_index, std::size_t t) const {
        return (var_index * timestamps.size() + t) * frame_size();
    }
};

inline void FrameSeries::validate() const {
    grid.validate();
    if (variables.empty()) throw SchemaError("no variables found");
    std::set<int> ids;
    for (const auto& v : variables) {
        if (v.feature_id < 1 || v.feature_id > kFeatureCount)
            throw SchemaError("feature id " + std::to_string(v.feature_id) + " outside 1.." +
                              std::to_string(kFeatureCount));
        if (!ids.insert(v.feature_id).second)
            throw SchemaError("duplicate feature id " + std::to_string(v.feature_id));
        if (v.group != variable_meta(v.feature_id).group)
            throw SchemaError("feature " + std::to_string(v.feature_id) + " assigned to group " +
                              std::string(group_name(v.group)) + ", expected " +
                              std::string(group_name(variable_meta(v.feature_id).group)));
    }
    if (ids.size() != static_cast<std::size_t>(kFeatureCount))
        throw SchemaError("expected " + std::to_string(kFeatureCount) + " variables, found " +
                          std::to_string(ids.size()));
    if (!std::is_sorted(variables.begin(), variables.end(),
                        [](const auto& a, const auto& b) { return a.feature_id < b.feature_id; }))
        throw SchemaError("variables not ordered by feature id");
    if (timestamps.empty()) throw SchemaError("no timestamps");
    for (std::size_t t = 1; t < timestamps.size(); ++t) {
        if (timestamps[t].minutes - timestamps[t - 1].minutes != 60)
            throw SchemaError("timestamps not uniform hourly: gap between " +
                              format_display(timestamps[t - 1]) + " and " + format_display(timestamps[t]));
    }
    if (values.size() != variables.size() * timestamps.size() * grid.cell_count())
        throw SchemaError("value array size does not match grid, variables and timestamps");
    for (int id : {kPrecipRate, kTotalPrecip}) {
        const auto k = variable_index(id);
        for (std::size_t t = 0; t < timestamps.size(); ++t) {
            auto f = frame_at(k, t);
            for (std::size_t c = 0; c < f.size(); ++c) {
                if (!(f[c] >= 0.0))
                    throw SchemaError("variable " + std::to_string(id) + " at " +
                                      format_display(timestamps[t]) + ", cell " + std::to_string(c) +
                                      ": negative or non-finite value");
            }
        }
    }
}

// ---- JSON ----------------------------------------------------------------

inline nlohmann::ordered_json grid_to_json(const GridSpec& g) {
    return {{"rows", g.rows},       {"cols", g.cols},       {"spacing_km", g.spacing_km},
            {"lat_min", g.lat_min}, {"lat_max", g.lat_max}, {"lon_min", g.lon_min},
            {"lon_max", g.lon_max}, {"vertical_levels", g.vertical_levels}};
}

inline GridSpec grid_from_json(const nlohmann::json& j) {
    GridSpec g;
    g.rows = j.at("rows").get<std::size_t>();
    g.cols = j.at("cols").get<std::size_t>();
    g.spacing_km = j.at("spacing_km").get<double>();
    g.lat_min = j.at("lat_min").get<double>();
    g.lat_max = j.at("lat_max").get<double>();
    g.lon_min = j.at("lon_min").get<double>();
    g.lon_max = j.at("lon_max").get<double>();
    g.vertical_levels = j.value("vertical_levels", 50);
    return g;
}

inline nlohmann::ordered_json variable_to_json(const VariableMeta& v) {
    return {{"feature_id", v.feature_id},
            {"name", v.name},
            {"unit", v.unit},
            {"group", std::string(group_name(v.group))},
            {"description", v.description}};
}

inline VariableMeta variable_from_json(const nlohmann::json& j) {
    VariableMeta v;
    v.feature_id = j.at("feature_id").get<int>();
    v.name = j.at("name").get<std::string>();
    v.unit = j.at("unit").get<std::string>();
    const auto g = j.at("group").get<std::string>();
    auto parsed = parse_group(g);
    if (!parsed) throw SchemaError("variable " + std::to_string(v.feature_id) + ": unknown group '" + g + "'");
    v.group = *parsed;
    v.description = j.value("description", "");
    return v;
}

// ---- CSV -------------------------------------------------------------------

// Shortest decimal text that parses back to the same double.
inline void append_number(std::string& out, double x) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    out.append(buf, r.ptr);
}

inline std::string encode_frame_csv(std::span<const double> frame, std::size_t rows, std::size_t cols) {
    std::string out;
    out.reserve(frame.size() * 8);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (c) out.push_back(',');
            append_number(out, frame[r * cols + c]);
        }
        out.push_back('\n');
    }
    return out;
}

inline void decode_frame_csv(std::string_view text, std::size_t rows, std::size_t cols,
                             std::span<double> out, const std::string& where) {
    std::size_t pos = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        if (pos >= text.size())
            throw SchemaError(where + ": expected " + std::to_string(rows) + " rows, found " + std::to_string(r));
        for (std::size_t c = 0; c < cols; ++c) {
            const char* first = text.data() + pos;
            const char* last = text.data() + text.size();
            double v = 0.0;
            auto res = std::from_chars(first, last, v);
            std::size_t end = pos;
            while (end < text.size() && text[end] != ',' && text[end] != '\n' && text[end] != '\r') ++end;
            if (res.ec != std::errc{} || res.ptr != text.data() + end || !std::isfinite(v)) {
                throw SchemaError(where + ": row " + std::to_string(r) + ", col " + std::to_string(c) +
                                  ": non-numeric value '" + std::string(text.substr(pos, end - pos)) + "'");
            }
            out[r * cols + c] = v;
            pos = end;
            const bool last_col = c + 1 == cols;
            if (!last_col) {
                if (pos >= text.size() || text[pos] != ',')
                    throw SchemaError(where + ": row " + std::to_string(r) + " has " + std::to_string(c + 1) +
                                      " columns, expected " + std::to_string(cols));
                ++pos;
            }
        }
        if (pos < text.size() && text[pos] == '\r') ++pos;
        if (pos < text.size() && text[pos] != '\n')
            throw SchemaError(where + ": row " + std::to_string(r) + " has more than " + std::to_string(cols) +
                              " columns");
        if (pos < text.size()) ++pos;
    }
    while (pos < text.size() && (text[pos] == '\n' || text[pos] == '\r')) ++pos;
    if (pos != text.size())
        throw SchemaError(where + ": more than " + std::to_string(rows) + " rows");
}

// ---- directory layout ----------------------------------------------------

namespace detail {

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw SchemaError("cannot read " + p.string());
    std::string s;
    in.seekg(0, std::ios::end);
    s.resize(static_cast<std::size_t>(in.tellg()));
    in.seekg(0);
    in.read(s.data(), static_cast<std::streamsize>(s.size()));
    return s;
}

inline void spill(const std::filesystem::path& p, std::string_view bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw SchemaError("cannot write " + p.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace detail

inline std::string var_dir_name(int feature_id) { return "var_" + std::to_string(feature_id); }

inline nlohmann::ordered_json series_meta_json(const FrameSeries& s) {
    nlohmann::ordered_json j;
    j["format"] = "climoe-dataset";
    j["version"] = 1;
    j["grid"] = grid_to_json(s.grid);
    auto vars = nlohmann::ordered_json::array();
    for (const auto& v : s.variables) vars.push_back(variable_to_json(v));
    j["variables"] = std::move(vars);
    auto ts = nlohmann::ordered_json::array();
    for (auto t : s.timestamps) ts.push_back(format_display(t));
    j["timestamps"] = std::move(ts);
    return j;
}

inline void save_series(const FrameSeries& s, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    s.validate();
    fs::create_directories(dir);
    detail::spill(dir / "meta.json", series_meta_json(s).dump(2) + "\n");
    for (std::size_t k = 0; k < s.variables.size(); ++k) {
        const auto vdir = dir / var_dir_name(s.variables[k].feature_id);
        fs::create_directories(vdir);
        for (std::size_t t = 0; t < s.timestamps.size(); ++t) {
            detail::spill(vdir / (format_stem(s.timestamps[t]) + ".csv"),
                          encode_frame_csv(s.frame_at(k, t), s.grid.rows, s.grid.cols));
        }
    }
}

inline FrameSeries load_series(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw SchemaError(dir.string() + ": not a directory");
    const auto meta_path = dir / "meta.json";
    if (!fs::exists(meta_path)) {
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_directory() && e.path().filename().string().rfind("var_", 0) == 0)
                throw SchemaError(dir.string() + ": meta.json missing");
        throw SchemaError(dir.string() + ": no variables found");
    }

    FrameSeries s;
    try {
        const auto meta = nlohmann::json::parse(detail::slurp(meta_path));
        s.grid = grid_from_json(meta.at("grid"));
        for (const auto& v : meta.at("variables")) s.variables.push_back(variable_from_json(v));
        for (const auto& t : meta.at("timestamps")) {
            const auto text = t.get<std::string>();
            auto ts = parse_display(text);
            if (!ts) throw SchemaError("meta.json: bad timestamp '" + text + "'");
            s.timestamps.push_back(*ts);
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(meta_path.string() + ": " + e.what());
    }
    if (s.variables.empty()) throw SchemaError(dir.string() + ": no variables found");
    std::sort(s.variables.begin(), s.variables.end(),
              [](const auto& a, const auto& b) { return a.feature_id < b.feature_id; });
    s.grid.validate();

    s.values.assign(s.variables.size() * s.timestamps.size() * s.grid.cell_count(), 0.0);
    for (std::size_t k = 0; k < s.variables.size(); ++k) {
        const int id = s.variables[k].feature_id;
        const auto vdir = dir / var_dir_name(id);
        if (!fs::is_directory(vdir))
            throw SchemaError(dir.string() + ": missing variable directory " + var_dir_name(id));

        std::set<std::string> present;
        for (const auto& e : fs::directory_iterator(vdir))
            if (e.is_regular_file() && e.path().extension() == ".csv") present.insert(e.path().stem().string());

        for (std::size_t t = 0; t < s.timestamps.size(); ++t) {
            const auto stem = format_stem(s.timestamps[t]);
            if (!present.erase(stem)) {
                std::string gap = "missing frame for " + format_display(s.timestamps[t]);
                if (t > 0) gap += " (gap after " + format_display(s.timestamps[t - 1]) + ")";
                throw SchemaError("variable " + std::to_string(id) + ": " + gap + ", expected file " +
                                  (vdir / (stem + ".csv")).string());
            }
            const auto path = vdir / (stem + ".csv");
            auto dst = std::span<double>(s.values).subspan((k * s.timestamps.size() + t) * s.frame_size(),
                                                           s.frame_size());
            decode_frame_csv(detail::slurp(path), s.grid.rows, s.grid.cols, dst, path.string());
        }
        if (!present.empty())
            throw SchemaError("variable " + std::to_string(id) + ": frame " + *present.begin() +
                              ".csv has no matching timestamp in meta.json");
    }
    s.validate();
    return s;
}

}  // namespace climoe::data
