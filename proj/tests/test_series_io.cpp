#include <bit>
#include <fstream>

#include <gtest/gtest.h>

#include "climoe/data/series.hpp"
#include "fixtures.hpp"

using namespace climoe;
using namespace climoe::data;
namespace fs = std::filesystem;

namespace {

std::string load_error(const fs::path& dir) {
    try {
        load_series(dir);
    } catch (const SchemaError& e) {
        return e.what();
    }
    return "";
}

bool contains(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

}  // namespace

TEST(SeriesIo, RoundTripIsExact) {
    fixtures::TempDir tmp;
    const auto s = fixtures::small_series(1, 5);
    save_series(s, tmp.path());
    const auto back = load_series(tmp.path());
    EXPECT_EQ(back.grid, s.grid);
    EXPECT_EQ(back.timestamps, s.timestamps);
    EXPECT_EQ(back.fingerprint(), s.fingerprint());
    EXPECT_TRUE(fs::exists(tmp / "var_7" / "2022-09-23_0500.csv"));
}

TEST(SeriesIo, FullLengthSeries) {
    fixtures::TempDir tmp;
    save_series(fixtures::small_series(9, 3), tmp.path());
    const auto s = load_series(tmp.path());
    EXPECT_EQ(s.timestep_count(), 216u);
    EXPECT_EQ(format_display(s.timestamps.front()), "2022-09-23 00:00");
    EXPECT_EQ(format_display(s.timestamps.back()), "2022-10-01 23:00");
    EXPECT_EQ(s.variables.size(), 19u);
}

TEST(SeriesIo, EmptyDirectory) {
    fixtures::TempDir tmp;
    EXPECT_TRUE(contains(load_error(tmp.path()), "no variables found"));
}

TEST(SeriesIo, NotADirectory) {
    fixtures::TempDir tmp;
    EXPECT_TRUE(contains(load_error(tmp / "absent"), "not a directory"));
}

TEST(SeriesIo, MissingMeta) {
    fixtures::TempDir tmp;
    save_series(fixtures::small_series(1, 3), tmp.path());
    fs::remove(tmp / "meta.json");
    EXPECT_TRUE(contains(load_error(tmp.path()), "meta.json missing"));
}

TEST(SeriesIo, MissingHourNamesVariableAndGap) {
    fixtures::TempDir tmp;
    save_series(fixtures::small_series(1, 3), tmp.path());
    fs::remove(tmp / "var_3" / "2022-09-23_0700.csv");
    const auto err = load_error(tmp.path());
    EXPECT_TRUE(contains(err, "variable 3")) << err;
    EXPECT_TRUE(contains(err, "gap after 2022-09-23 06:00")) << err;
}

TEST(SeriesIo, MissingVariableDirectory) {
    fixtures::TempDir tmp;
    save_series(fixtures::small_series(1, 3), tmp.path());
    fs::remove_all(tmp / "var_11");
    EXPECT_TRUE(contains(load_error(tmp.path()), "missing variable directory var_11"));
}

TEST(SeriesIo, NonNumericCellNamesFileAndCell) {
    fixtures::TempDir tmp;
    save_series(fixtures::small_series(1, 3), tmp.path());
    write(tmp / "var_6" / "2022-09-23_0200.csv", "1,2,3\n4,abc,6\n7,8,9\n");
    const auto err = load_error(tmp.path());
    EXPECT_TRUE(contains(err, "var_6")) << err;
    EXPECT_TRUE(contains(err, "2022-09-23_0200.csv")) << err;
    EXPECT_TRUE(contains(err, "row 1, col 1")) << err;
    EXPECT_TRUE(contains(err, "non-numeric")) << err;
}

TEST(SeriesIo, DimensionMismatch) {
    fixtures::TempDir tmp;
    save_series(fixtures::small_series(1, 3), tmp.path());
    write(tmp / "var_6" / "2022-09-23_0200.csv", "1,2,3\n4,5\n7,8,9\n");
    EXPECT_TRUE(contains(load_error(tmp.path()), "row 1 has 2 columns, expected 3"));
    write(tmp / "var_6" / "2022-09-23_0200.csv", "1,2,3\n4,5,6\n");
    EXPECT_TRUE(contains(load_error(tmp.path()), "expected 3 rows"));
    write(tmp / "var_6" / "2022-09-23_0200.csv", "1,2,3,4\n4,5,6\n7,8,9\n");
    EXPECT_TRUE(contains(load_error(tmp.path()), "more than 3 columns"));
    write(tmp / "var_6" / "2022-09-23_0200.csv", "1,2,3\n4,5,6\n7,8,9\n1,1,1\n");
    EXPECT_TRUE(contains(load_error(tmp.path()), "more than 3 rows"));
}

TEST(SeriesIo, StrayFrame) {
    fixtures::TempDir tmp;
    save_series(fixtures::small_series(1, 3), tmp.path());
    fs::copy_file(tmp / "var_2" / "2022-09-23_0000.csv", tmp / "var_2" / "2022-09-25_0000.csv");
    EXPECT_TRUE(contains(load_error(tmp.path()), "no matching timestamp"));
}

TEST(SeriesIo, NegativePrecipitationRejected) {
    fixtures::TempDir tmp;
    save_series(fixtures::small_series(1, 3), tmp.path());
    write(tmp / "var_1" / "2022-09-23_0200.csv", "0,0,0\n0,-0.5,0\n0,0,0\n");
    EXPECT_FALSE(load_error(tmp.path()).empty());
}

TEST(SeriesIo, CsvShortestRoundTrip) {
    const std::vector<double> v{0.1, 1e-300, -0.0, 123456.789, 5e-324, 0.30000000000000004};
    const auto text = encode_frame_csv(v, 2, 3);
    std::vector<double> back(6);
    decode_frame_csv(text, 2, 3, back, "x");
    for (std::size_t k = 0; k < v.size(); ++k) EXPECT_EQ(std::bit_cast<std::uint64_t>(back[k]), std::bit_cast<std::uint64_t>(v[k]));
    EXPECT_EQ(encode_frame_csv(std::vector<double>{0.5, 2.0}, 1, 2), "0.5,2\n");
}
