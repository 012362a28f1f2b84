#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "climoe/synth/storm.hpp"

namespace fixtures {

// Removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("climoe_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline climoe::data::FrameSeries small_series(int days = 1, std::size_t grid = 6, std::uint64_t seed = 42) {
    climoe::synth::StormConfig cfg;
    cfg.seed = seed;
    cfg.days = days;
    return climoe::synth::generate(cfg, climoe::synth::square_grid(grid));
}

}  // namespace fixtures
