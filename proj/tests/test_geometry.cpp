#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace wplap;

TEST(Geometry, UniformIntervalMesh) {
    const Mesh m = build_mesh(Domain::interval(0.0, 1.0), 0.25);
    ASSERT_EQ(m.num_cells(), 4u);
    ASSERT_EQ(m.num_vertices(), 5u);
    for (std::size_t i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(m.vertices[i][0], 0.25 * static_cast<double>(i));
    EXPECT_TRUE(m.on_boundary[0]);
    EXPECT_TRUE(m.on_boundary[4]);
    for (std::size_t i = 1; i < 4; ++i) EXPECT_FALSE(m.on_boundary[i]);
}

TEST(Geometry, FineIntervalMeshSize) {
    const Mesh m = build_mesh(Domain::interval(0.0, 1.0), 1.0 / 256.0);
    EXPECT_EQ(m.num_cells(), 256u);
    EXPECT_NEAR(m.h, 1.0 / 256.0, 1e-15);
}

TEST(Geometry, SquareMeshAreasSumToOne) {
    const Mesh m = build_mesh(Domain::box({0.0, 0.0}, {1.0, 1.0}), 0.5);
    EXPECT_NEAR(m.total_measure(), 1.0, 1e-12);
    EXPECT_LE(m.h, 0.5 + 1e-15);
}

TEST(Geometry, BoundaryFlagsLieOnBoundary) {
    for (const Domain& d : {Domain::interval(-1.0, 2.0), Domain::box({0.0, 0.0}, {2.0, 1.0}), Domain::ball({0.0, 0.0}, 1.0, 2)}) {
        const Mesh m = build_mesh(d, 0.1);
        for (std::size_t v = 0; v < m.num_vertices(); ++v)
            if (m.on_boundary[v]) { EXPECT_LE(std::abs(d.signed_distance(m.vertices[v])), 1e-12 * d.diameter()); }
    }
}

TEST(Geometry, MeshMeasureMatchesDomainMeasure) {
    for (const Domain& d : {Domain::interval(0.0, 3.0), Domain::box({0.0, 0.0}, {2.0, 1.0})}) {
        for (double h : {0.3, 0.1, 0.05}) {
            const Mesh m = build_mesh(d, h);
            EXPECT_NEAR(m.total_measure(), domain_measure(d), 1e-12);
            EXPECT_LE(m.h, h + 1e-14);
        }
    }
}

TEST(Geometry, BreakpointsBecomeVertices) {
    MeshOptions opt;
    opt.breakpoints = {0.3, 0.4, 0.6, 0.7, 0.123};
    const Mesh m = build_mesh(Domain::interval(0.0, 1.0), 1.0 / 64.0, opt);
    for (double b : opt.breakpoints) {
        bool found = false;
        for (const auto& v : m.vertices) found = found || std::abs(v[0] - b) < 1e-15;
        EXPECT_TRUE(found) << b;
    }
    EXPECT_NEAR(m.total_measure(), 1.0, 1e-14);
}

TEST(Geometry, RejectsUnsupportedDimension) {
    EXPECT_THROW(Domain::box({0.0, 0.0}, {1.0, 1.0}, 3), DimensionUnsupported);
    EXPECT_THROW(Domain::interval(1.0, 0.0), ArgumentError);
}

TEST(Geometry, DistanceToBoundary) {
    const Domain I = Domain::interval(0.0, 1.0);
    EXPECT_DOUBLE_EQ(distance_to_boundary(I, {0.3, 0.0}), 0.3);
    EXPECT_DOUBLE_EQ(distance_to_boundary(I, {0.5, 0.0}), 0.5);
    const Domain Q = Domain::box({0.0, 0.0}, {1.0, 1.0});
    EXPECT_NEAR(distance_to_boundary(Q, {0.2, 0.9}), 0.1, 1e-15);
    EXPECT_THROW(distance_to_boundary(I, {1.5, 0.0}), DomainMembershipError);
}

TEST(Geometry, RegionOf) {
    const BallSpec b{{0.5, 0.0}, 0.1, 0.2};
    EXPECT_EQ(region_of(b, {0.5, 0.0}, 1), Region::inner);
    EXPECT_EQ(region_of(b, {0.65, 0.0}, 1), Region::annulus);
    EXPECT_EQ(region_of(b, {0.9, 0.0}, 1), Region::outside);
    const BallSpec b2{{0.0, 0.0}, 0.5, 1.0};
    EXPECT_EQ(region_of(b2, {0.5, 0.0}, 2), Region::inner);
    EXPECT_EQ(region_of(b2, {0.0, 1.0}, 2), Region::annulus);
}

TEST(Geometry, UnitBallVolume) {
    EXPECT_DOUBLE_EQ(unit_ball_volume(1), 2.0);
    EXPECT_NEAR(unit_ball_volume(2), std::numbers::pi, 1e-15);
    EXPECT_NEAR(unit_ball_volume(3), 4.0 * std::numbers::pi / 3.0, 1e-14);
    EXPECT_THROW(unit_ball_volume(0), ArgumentError);
}

TEST(Geometry, BallSpecValidation) {
    const Domain I = Domain::interval(0.0, 1.0);
    EXPECT_NO_THROW((BallSpec{{0.5, 0.0}, 0.1, 0.2}.validate(I)));
    EXPECT_THROW((BallSpec{{0.5, 0.0}, 0.2, 0.1}.validate(I)), ArgumentError);
    EXPECT_THROW((BallSpec{{0.5, 0.0}, 0.1, 0.5}.validate(I)), ArgumentError);
}
