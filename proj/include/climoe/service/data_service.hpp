#pragma once

// Read-only JSON API over one loaded dataset.
//
//   GET /api/meta                 grid, variables, timestamps, global ranges
//   GET /api/frame?var=ID&t=TS    one frame, TS as "YYYY-MM-DD HH:MM"
//   GET /api/range?var=ID         global min/max of one variable
//   GET /healthz
//
// Handlers are plain functions of the immutable dataset so they can be
// exercised without a socket; mount() wires them into cpp-httplib.

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "climoe/data/series.hpp"
#include "climoe/eval/experiment.hpp"

// After Eigen: <resolv.h>, pulled in by httplib, defines a macro named _res.
#include "httplib.h"
#include "json.hpp"

namespace climoe::service {

struct ApiResponse {
    int status = 200;
    std::string body;
};

class DataService {
public:
    explicit DataService(data::FrameSeries series) : series_(std::move(series)) {
        series_.validate();
        for (std::size_t k = 0; k < series_.variables.size(); ++k) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (double v : std::span<const double>(series_.values).subspan(
                     k * series_.timestep_count() * series_.frame_size(),
                     series_.timestep_count() * series_.frame_size())) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            ranges_.push_back({lo, hi});
        }
        for (std::size_t t = 0; t < series_.timestamps.size(); ++t) time_index_[series_.timestamps[t].minutes] = t;
        etag_ = "\"" + eval::hex64(series_.fingerprint()) + "\"";
        meta_body_ = build_meta().dump();
    }

    const data::FrameSeries& series() const { return series_; }
    const std::string& etag() const { return etag_; }

    ApiResponse meta() const { return {200, meta_body_}; }
    ApiResponse health() const { return {200, R"({"status":"ok"})"}; }

    ApiResponse range(std::optional<std::string_view> var) const {
        std::size_t k = 0;
        if (auto err = resolve_variable(var, k)) return *err;
        nlohmann::ordered_json j{{"feature_id", series_.variables[k].feature_id},
                                 {"unit", series_.variables[k].unit},
                                 {"min", ranges_[k].first},
                                 {"max", ranges_[k].second}};
        return {200, j.dump()};
    }

    ApiResponse frame(std::optional<std::string_view> var, std::optional<std::string_view> ts) const {
        std::size_t k = 0;
        if (auto err = resolve_variable(var, k)) return *err;
        if (!ts) return error(400, "missing query parameter", "t is required (YYYY-MM-DD HH:MM)");
        auto parsed = data::parse_display(*ts);
        if (!parsed) parsed = data::parse_stem(*ts);
        if (!parsed) return error(400, "malformed timestamp", "expected YYYY-MM-DD HH:MM, got '" + std::string(*ts) + "'");
        auto it = time_index_.find(parsed->minutes);
        if (it == time_index_.end())
            return error(404, "unknown timestamp", "no frame at " + data::format_display(*parsed));
        const auto values = series_.frame_at(k, it->second);
        const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        nlohmann::ordered_json j{{"feature_id", series_.variables[k].feature_id},
                                 {"timestamp", data::format_display(*parsed)},
                                 {"rows", series_.grid.rows},
                                 {"cols", series_.grid.cols},
                                 {"min", *lo},
                                 {"max", *hi},
                                 {"values", std::vector<double>(values.begin(), values.end())}};
        return {200, j.dump()};
    }

    static ApiResponse error(int status, std::string_view err, std::string_view detail) {
        return {status, nlohmann::ordered_json{{"error", err}, {"detail", detail}}.dump()};
    }

private:
    std::optional<ApiResponse> resolve_variable(std::optional<std::string_view> var, std::size_t& k) const {
        if (!var) return error(400, "missing query parameter", "var is required");
        int id = 0;
        auto r = std::from_chars(var->data(), var->data() + var->size(), id);
        if (r.ec != std::errc{} || r.ptr != var->data() + var->size())
            return error(400, "malformed variable id", "var must be an integer, got '" + std::string(*var) + "'");
        for (k = 0; k < series_.variables.size(); ++k)
            if (series_.variables[k].feature_id == id) return std::nullopt;
        return error(404, "unknown variable", "no variable with feature id " + std::to_string(id));
    }

    nlohmann::ordered_json build_meta() const {
        nlohmann::ordered_json j;
        j["grid"] = data::grid_to_json(series_.grid);
        auto vars = nlohmann::ordered_json::array();
        for (std::size_t k = 0; k < series_.variables.size(); ++k) {
            auto v = data::variable_to_json(series_.variables[k]);
            v["min"] = ranges_[k].first;
            v["max"] = ranges_[k].second;
            vars.push_back(std::move(v));
        }
        j["variables"] = std::move(vars);
        auto ts = nlohmann::ordered_json::array();
        for (auto t : series_.timestamps) ts.push_back(data::format_display(t));
        j["timestamps"] = std::move(ts);
        return j;
    }

    data::FrameSeries series_;
    std::vector<std::pair<double, double>> ranges_;
    std::map<std::int64_t, std::size_t> time_index_;
    std::string etag_;
    std::string meta_body_;
};

inline std::optional<std::string> query_param(const httplib::Request& req, const char* name) {
    if (!req.has_param(name)) return std::nullopt;
    return req.get_param_value(name);
}

// Registers the API routes and, when static_dir is given, serves it at "/".
inline void mount(httplib::Server& server, const DataService& svc,
                  const std::optional<std::filesystem::path>& static_dir = {}) {
    auto reply = [&svc](httplib::Response& res, const ApiResponse& r) {
        res.status = r.status;
        res.set_header("Cache-Control", r.status == 200 ? "public, max-age=86400, immutable" : "no-store");
        if (r.status == 200) res.set_header("ETag", svc.etag());
        res.set_content(r.body, "application/json; charset=utf-8");
    };
    server.Get("/api/meta", [&svc, reply](const httplib::Request&, httplib::Response& res) { reply(res, svc.meta()); });
    server.Get("/api/frame", [&svc, reply](const httplib::Request& req, httplib::Response& res) {
        const auto var = query_param(req, "var"), t = query_param(req, "t");
        reply(res, svc.frame(var, t));
    });
    server.Get("/api/range", [&svc, reply](const httplib::Request& req, httplib::Response& res) {
        const auto var = query_param(req, "var");
        reply(res, svc.range(var));
    });
    server.Get("/healthz", [&svc, reply](const httplib::Request&, httplib::Response& res) { reply(res, svc.health()); });
    if (static_dir) {
        if (!server.set_mount_point("/", static_dir->string()))
            throw ConfigError("static directory " + static_dir->string() + " does not exist");
    }
}

}  // namespace climoe::service
