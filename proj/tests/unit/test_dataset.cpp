#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "censnv/dataset.hpp"
#include "censnv/synthetic.hpp"

using namespace censnv;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("censnv_ds_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

}  // namespace

TEST(IsoDates, RoundTrip) {
    const auto d = parse_iso("2016-02-29");
    ASSERT_TRUE(d.has_value());
    EXPECT_EQ(to_iso(*d), "2016-02-29");
    EXPECT_FALSE(parse_iso("2017-02-29").has_value());
    EXPECT_FALSE(parse_iso("2016-1-01").has_value());
    EXPECT_FALSE(parse_iso("garbage").has_value());
}

TEST(Csv, SaveLoadRoundTripWithScaling) {
    TempDir tmp;
    auto raw = generate(DemandModelParams{}, 3);
    attach_q_star(raw, DemandModelParams{}, 0.85);
    const auto [train, test] = split_chronological(raw);
    const auto [strain, stest, rec] = scale(train, test);
    save_csv(stest, tmp.path / "test.csv");
    EXPECT_TRUE(std::filesystem::exists(sidecar_path(tmp.path / "test.csv")));
    const auto back = load_csv(tmp.path / "test.csv");
    EXPECT_EQ(back, stest);
}

TEST(Csv, MissingDemandColumnIsAllowed) {
    TempDir tmp;
    write_text(tmp.path / "d.csv", "date,category,sale,f01,f02\n2016-01-01,1,3.5,1,0.25\n2016-01-02,1,4,1,-1\n");
    const auto data = load_csv(tmp.path / "d.csv");
    ASSERT_EQ(data.size(), 2u);
    EXPECT_FALSE(data.rows[0].demand.has_value());
    EXPECT_FALSE(data.has_demand());
    EXPECT_EQ(data.dim(), 2u);
    EXPECT_DOUBLE_EQ(data.rows[1].features[1], -1.0);
}

TEST(Csv, EmptyDemandCellIsAbsent) {
    TempDir tmp;
    write_text(tmp.path / "d.csv", "date,category,sale,demand,f01\n2016-01-01,1,3.5,,1\n2016-01-02,1,4,5,1\n");
    const auto data = load_csv(tmp.path / "d.csv");
    EXPECT_FALSE(data.rows[0].demand.has_value());
    EXPECT_DOUBLE_EQ(*data.rows[1].demand, 5.0);
}

TEST(Csv, MissingSaleColumnNamed) {
    TempDir tmp;
    write_text(tmp.path / "d.csv", "date,category,demand,f01\n2016-01-01,1,3.5,1\n");
    try {
        load_csv(tmp.path / "d.csv");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("sale"), std::string::npos);
    }
}

TEST(Csv, NonNumericCellReportsRow) {
    TempDir tmp;
    write_text(tmp.path / "d.csv", "date,category,sale,f01\n2016-01-01,1,3.5,1\n2016-01-02,1,abc,1\n");
    try {
        load_csv(tmp.path / "d.csv");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.row(), 3u);
    }
}

TEST(Csv, DuplicateKeyReportsRow) {
    TempDir tmp;
    write_text(tmp.path / "d.csv", "date,category,sale,f01\n2016-01-01,1,3.5,1\n2016-01-01,1,2,1\n");
    try {
        load_csv(tmp.path / "d.csv");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.row(), 3u);
        EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
    }
}

TEST(Csv, MalformedHeader) {
    TempDir tmp;
    write_text(tmp.path / "d.csv", "date,category,sale\n2016-01-01,1,3.5\n");
    EXPECT_THROW(load_csv(tmp.path / "d.csv"), ParseError);
    write_text(tmp.path / "e.csv", "date,category,sale,f01,f03\n2016-01-01,1,3.5,1,2\n");
    EXPECT_THROW(load_csv(tmp.path / "e.csv"), ParseError);
}

TEST(Csv, MissingFileIsIoError) { EXPECT_THROW(load_csv("/nonexistent/dir/x.csv"), IoError); }

TEST(DatasetHelpers, SubsetAndRectangular) {
    const auto d = Dataset::from_xy({{1, 2}, {1, 3}, {1, 4}}, {1, 2, 3});
    const auto s = d.subset({2, 0});
    EXPECT_EQ(s.sales(), (std::vector<double>{3, 1}));
    auto bad = d;
    bad.rows[1].features.pop_back();
    EXPECT_THROW(bad.check_rectangular(), InputError);
    EXPECT_THROW(Dataset::from_xy({{1}}, {1, 2}), InputError);
}
