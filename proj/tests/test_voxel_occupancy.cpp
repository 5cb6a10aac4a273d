#include <orchard/occupancy.hpp>
#include <orchard/voxel.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"

namespace fs = std::filesystem;
using orchard::OccupancyMap;
using orchard::Point3;
using orchard::VoxelKey;

TEST(Voxel, KeyOfUsesFloorOnBothSidesOfZero) {
    EXPECT_EQ(orchard::key_of(Point3(0.004, 0.0, -0.001), 0.01), (VoxelKey{0, 0, -1}));
    EXPECT_EQ(orchard::key_of(Point3(-0.01, 0.01, 0.0199), 0.01), (VoxelKey{-1, 1, 1}));
}

TEST(Voxel, CenterOfIsTheCellMidpoint) {
    const Point3 c = orchard::center_of(VoxelKey{0, -1, 3}, 0.01);
    EXPECT_DOUBLE_EQ(c.x(), 0.005);
    EXPECT_DOUBLE_EQ(c.y(), -0.005);
    EXPECT_DOUBLE_EQ(c.z(), 0.035);
}

TEST(Voxel, CenterRoundTripsThroughKey) {
    std::mt19937 rng(9);
    std::uniform_int_distribution<int> coord(-500, 500);
    for (int i = 0; i < 1000; ++i) {
        const VoxelKey k{coord(rng), coord(rng), coord(rng)};
        EXPECT_EQ(orchard::key_of(orchard::center_of(k, 0.01), 0.01), k);
    }
}

TEST(Voxel, MortonOrderIsStrictOnDistinctKeys) {
    std::mt19937 rng(10);
    std::uniform_int_distribution<int> coord(-100, 100);
    for (int i = 0; i < 500; ++i) {
        const VoxelKey a{coord(rng), coord(rng), coord(rng)};
        const VoxelKey b{coord(rng), coord(rng), coord(rng)};
        if (a == b) EXPECT_EQ(orchard::morton_code(a), orchard::morton_code(b));
        else EXPECT_NE(orchard::morton_code(a), orchard::morton_code(b));
    }
}

TEST(OccupancyMap, QueryRadiusMatchesLinearOracle) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (int trial = 0; trial < 10; ++trial) {
        OccupancyMap map(0.01, orchard::ObstacleClass::branch_trunk);
        std::vector<VoxelKey> keys;
        for (int i = 0; i < 1000; ++i) {
            const Point3 p(u(rng), u(rng), u(rng));
            map.insert_point(p);
        }
        keys.assign(map.voxels().begin(), map.voxels().end());
        const Point3 q(u(rng) / 4, u(rng) / 4, u(rng) / 4);
        for (double radius : {0.0, 0.05, 0.2, 1.0}) {
            const auto got = map.query_radius(q, radius);
            const auto want = oracle::naive_radius_query(keys, 0.01, q, radius);
            ASSERT_EQ(got.size(), want.size()) << "radius " << radius;
            for (std::size_t i = 0; i < got.size(); ++i)
                ASSERT_TRUE((got[i].array() == want[i].array()).all()) << "radius " << radius;
        }
    }
}

TEST(OccupancyMap, QueryIsAClosedBall) {
    OccupancyMap map(0.01, orchard::ObstacleClass::branch_trunk);
    map.insert_key(VoxelKey{4, 0, 0}); // center (0.045, 0.005, 0.005)
    const Point3 q(0.005, 0.005, 0.005);
    const double exact = 0.04;
    EXPECT_EQ(map.query_radius(q, exact).size(), 1u);
    EXPECT_EQ(map.query_radius(q, exact - 1e-9).size(), 0u);
}

TEST(OccupancyMap, BuildMapRejectsFruitClouds) {
    orchard::ObjectCloud fruit{{Point3(0, 0, 0)}, orchard::CloudLabel::fruit(3), 1};
    EXPECT_THROW(orchard::build_map(fruit, 0.01), std::invalid_argument);
    orchard::ObjectCloud branch{{Point3(0, 0, 0)}, orchard::CloudLabel::branch(), 1};
    EXPECT_EQ(orchard::build_map(branch, 0.01).map_class(),
              orchard::ObstacleClass::branch_trunk);
}

TEST(OccupancyMap, DuplicatePointsOccupyOneVoxel) {
    OccupancyMap map(0.01, orchard::ObstacleClass::other_element);
    map.insert_point(Point3(0.001, 0.001, 0.001));
    map.insert_point(Point3(0.002, 0.003, 0.004));
    EXPECT_EQ(map.size(), 1u);
}

TEST(Voxmap, SaveLoadRoundTripsBitExactly) {
    std::mt19937 rng(12);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    OccupancyMap map(0.01, orchard::ObstacleClass::other_element);
    for (int i = 0; i < 1000; ++i) map.insert_point(Point3(u(rng), u(rng), u(rng)));

    const fs::path dir = fs::temp_directory_path() / "orchard_test_voxmap";
    fs::create_directories(dir);
    const fs::path a = dir / "a.voxmap";
    const fs::path b = dir / "b.voxmap";
    orchard::save_voxmap(a, map);
    const OccupancyMap loaded = orchard::load_voxmap(a);
    EXPECT_TRUE(loaded == map);
    orchard::save_voxmap(b, loaded);

    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_EQ(sa.str().rfind("voxmap v1 0.01 other_element ", 0), 0u);
}

TEST(Voxmap, HeaderCarriesResolutionClassAndCount) {
    OccupancyMap map(0.025, orchard::ObstacleClass::branch_trunk);
    map.insert_key(VoxelKey{1, 2, 3});
    const fs::path path = fs::temp_directory_path() / "orchard_test_voxmap_hdr.voxmap";
    orchard::save_voxmap(path, map);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "voxmap v1 0.025 branch_trunk 1");
}

TEST(Voxmap, LoadRejectsGarbage) {
    const fs::path path = fs::temp_directory_path() / "orchard_test_voxmap_bad.voxmap";
    std::ofstream(path) << "not a voxmap\n";
    try {
        orchard::load_voxmap(path);
        FAIL() << "expected an exception";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find(path.filename().string()), std::string::npos);
    }
}

TEST(Voxmap, LoadRejectsTruncatedList) {
    const fs::path path = fs::temp_directory_path() / "orchard_test_voxmap_trunc.voxmap";
    std::ofstream(path) << "voxmap v1 0.01 branch_trunk 2\n0.005 0.005 0.005\n";
    EXPECT_THROW(orchard::load_voxmap(path), std::runtime_error);
}
