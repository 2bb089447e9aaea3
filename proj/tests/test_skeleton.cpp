#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <set>

#include "aagc/errors.hpp"
#include "aagc/skeleton.hpp"
#include "support/test_motion.hpp"

using namespace aagc;

namespace {

const Eigen::Vector3d kMirror(-1.0, 1.0, 1.0);

RowMat3 conjugate_mirror(const RowMat3& r) {
    RowMat3 out;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            out(i, j) = kMirror[i] * kMirror[j] * r(i, j);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("canonical graph structure") {
    auto g = build_skeleton();
    CHECK(g.joint_count == 15);

    // region partition from the longitudinal weighting joint sets
    const std::set<std::size_t> legs{0, 1, 3, 4};
    const std::set<std::size_t> arms{8, 9, 11, 12, 13, 14};
    const std::set<std::size_t> torso{2, 5, 6, 7, 10};
    for (std::size_t j = 0; j < 15; ++j) {
        Region want = legs.count(j) ? Region::Legs : arms.count(j) ? Region::Arms : Region::Torso;
        CHECK(g.region[j] == want);
    }
    CHECK(g.region[0] == Region::Legs);
    CHECK(g.region[10] == Region::Torso);
    CHECK(legs.size() == 4);
    CHECK(arms.size() == 6);
    CHECK(torso.size() == 5);

    CHECK(g.sensor_nodes == std::array<std::size_t, 5>{3, 4, 10, 13, 14});

    // parent links form a tree rooted at the virtual pelvis
    for (std::size_t j = 0; j < 15; ++j) {
        int cursor = static_cast<int>(j);
        std::size_t hops = 0;
        while (cursor >= 0 && hops <= 15) {
            cursor = g.parent[static_cast<std::size_t>(cursor)];
            ++hops;
        }
        CHECK(cursor == -1);
        CHECK(hops <= 15);
    }
}

TEST_CASE("mirror map pairs left and right") {
    auto g = build_skeleton();
    CHECK(g.mirror_map[0] == 1);
    CHECK(g.mirror_map[13] == 14);
    for (std::size_t j = 0; j < 15; ++j) {
        std::size_t m = g.mirror_map[j];
        CHECK(g.mirror_map[m] == j);                 // involution
        CHECK(g.region[m] == g.region[j]);           // same region
        if (g.region[j] == Region::Torso) {
            CHECK(m == j);  // midline joints fixed
        } else {
            CHECK(m != j);  // limb joints swap
        }
        // tree structure commutes with mirroring
        int pj = g.parent[j];
        int pm = g.parent[m];
        if (pj < 0) {
            CHECK(pm < 0);
        } else {
            CHECK(static_cast<std::size_t>(pm) == g.mirror_map[static_cast<std::size_t>(pj)]);
        }
        // rest pose is mirror-symmetric (exact by construction)
        Eigen::Vector3d reflected = g.rest_position[j].cwiseProduct(kMirror);
        CHECK(g.rest_position[m] == reflected);
    }
}

TEST_CASE("longitudinal loss weights") {
    CHECK(llw_weight(0) == 1.0);
    CHECK(llw_weight(13) == 0.5);
    CHECK(llw_weight(6) == 0.25);
    CHECK_THROWS_AS(llw_weight(15), UsageError);
}

TEST_CASE("adjacency initialization follows the complemented distance rule") {
    // 3 collinear nodes at y = 0, 1, 2: distances from node 0 are 0, 1, 2
    std::vector<Eigen::Vector3d> line = {{0, 0, 0}, {0, 1, 0}, {0, 2, 0}};
    auto a = init_adjacency(line);
    CHECK(std::fabs(a[0] - 1.0) <= 1e-12);
    CHECK(std::fabs(a[1] - 2.0 / 3.0) <= 1e-12);
    CHECK(std::fabs(a[2] - 1.0 / 3.0) <= 1e-12);

    auto g = build_skeleton();
    auto adj = init_adjacency(g);
    for (std::size_t i = 0; i < 15; ++i) {
        CHECK(adj[i * 15 + i] == 1.0);  // d(i,i) = 0
        double dist_sum = 0.0;
        for (std::size_t j = 0; j < 15; ++j) {
            dist_sum += (g.rest_position[i] - g.rest_position[j]).norm();
        }
        for (std::size_t j = 0; j < 15; ++j) {
            double d = (g.rest_position[i] - g.rest_position[j]).norm();
            if (i != j) {
                CHECK(adj[i * 15 + j] > 0.0);
                CHECK(adj[i * 15 + j] < 1.0);
            }
            // row identity: entry + d/sum == 1
            CHECK(std::fabs(adj[i * 15 + j] + d / dist_sum - 1.0) <= 1e-15);
        }
    }

    std::vector<Eigen::Vector3d> coincident = {{1, 2, 3}, {1, 2, 3}, {1, 2, 3}};
    CHECK_THROWS_AS(init_adjacency(coincident), ValidationError);
}

TEST_CASE("normalized tree adjacency for the baseline cell") {
    // two-node toy: A = [[0,1],[1,0]], D = deg(A+I) = diag(2,2)
    std::vector<std::pair<std::size_t, std::size_t>> edge = {{0, 1}};
    auto norm = normalized_tree_adjacency(edge, 2);
    for (double v : norm) {
        CHECK(std::fabs(v - 0.5) <= 1e-15);
    }

    auto g = build_skeleton();
    auto skel = normalized_tree_adjacency(g);
    // symmetric with positive diagonal
    for (std::size_t i = 0; i < 15; ++i) {
        CHECK(skel[i * 15 + i] > 0.0);
        for (std::size_t j = 0; j < 15; ++j) {
            CHECK(skel[i * 15 + j] == skel[j * 15 + i]);
        }
    }
}

TEST_CASE("forward kinematics at identity reproduces the rest pose") {
    auto g = build_skeleton();
    auto poses = testutil::identity_motion(3, 15);
    auto pos = forward_kinematics(poses, g);
    REQUIRE(pos.frame_count == 3);
    for (std::size_t t = 0; t < 3; ++t) {
        for (std::size_t j = 0; j < 15; ++j) {
            CHECK((pos.position(t, j) - g.rest_position[j]).norm() <= 1e-15);
        }
    }
}

TEST_CASE("forward kinematics hand case: hip rotated 90 degrees") {
    auto g = build_skeleton();
    auto poses = testutil::identity_motion(1, 15);
    Mat3Map(poses.rotation_ptr(0, 0)) = testutil::rotation_about_x(M_PI / 2.0);

    auto pos = forward_kinematics(poses, g);
    Eigen::Vector3d hip = pos.position(0, 0);
    Eigen::Vector3d knee = pos.position(0, 3);

    // hips are root-adjacent: identity parent keeps them at rest
    CHECK((hip - g.rest_position[0]).norm() <= 1e-15);

    // the knee offset swings from "down" (-y) into the z axis:
    // R_x(pi/2) maps (x, y, z) to (x, -z, y)
    Eigen::Vector3d rest_offset = g.rest_position[3] - g.rest_position[0];
    Eigen::Vector3d offset = knee - hip;
    CHECK(std::fabs(offset.y()) <= 1e-12);
    CHECK(offset.x() == doctest::Approx(rest_offset.x()).epsilon(1e-12));
    CHECK(offset.z() == doctest::Approx(rest_offset.y()).epsilon(1e-12));
    CHECK(std::fabs(offset.norm() - rest_offset.norm()) <= 1e-12);
}

TEST_CASE("forward kinematics preserves bone lengths and is deterministic") {
    auto g = build_skeleton();
    Rng rng(17);
    auto poses = testutil::random_motion(20, 15, rng);
    auto pos1 = forward_kinematics(poses, g);
    auto pos2 = forward_kinematics(poses, g);
    CHECK(pos1.xyz == pos2.xyz);

    for (std::size_t t = 0; t < 20; ++t) {
        for (std::size_t j = 0; j < 15; ++j) {
            int p = g.parent[j];
            Eigen::Vector3d parent_pos =
                p < 0 ? Eigen::Vector3d::Zero()
                      : Eigen::Vector3d(pos1.position(t, static_cast<std::size_t>(p)));
            Eigen::Vector3d parent_rest =
                p < 0 ? Eigen::Vector3d::Zero() : g.rest_position[static_cast<std::size_t>(p)];
            double rest_len = (g.rest_position[j] - parent_rest).norm();
            double len = (Eigen::Vector3d(pos1.position(t, j)) - parent_pos).norm();
            CHECK(std::fabs(len - rest_len) <= 1e-9);
        }
    }
}

TEST_CASE("forward kinematics rejects non-rotations") {
    auto g = build_skeleton();
    auto poses = testutil::identity_motion(1, 15);
    poses.rotations[0] = 2.0;  // break orthonormality of joint 0
    CHECK_THROWS_AS(forward_kinematics(poses, g), ValidationError);
}

TEST_CASE("pose mirroring is an involution and preserves validity") {
    auto g = build_skeleton();
    Rng rng(23);
    auto poses = testutil::random_motion(10, 15, rng);

    auto once = mirror_pose_sequence(poses, g);
    validate_rotations(once, 1e-12);
    auto twice = mirror_pose_sequence(once, g);
    CHECK(twice.rotations == poses.rotations);  // bit-exact
    CHECK(twice.frame_rate == poses.frame_rate);
}

TEST_CASE("bilaterally symmetric pose is a mirror fixed point") {
    auto g = build_skeleton();
    Rng rng(29);
    MotionSequence poses = testutil::identity_motion(4, 15);
    for (std::size_t t = 0; t < 4; ++t) {
        for (std::size_t j = 0; j < 15; ++j) {
            if (g.mirror_map[j] == j) {
                // torso: rotations about the lateral axis commute with M
                Mat3Map(poses.rotation_ptr(t, j)) =
                    testutil::rotation_about_x(rng.uniform(-1.0, 1.0));
            } else if (g.mirror_map[j] > j) {
                RowMat3 left = testutil::random_rotation(rng);
                Mat3Map(poses.rotation_ptr(t, j)) = left;
                Mat3Map(poses.rotation_ptr(t, g.mirror_map[j])) = conjugate_mirror(left);
            }
        }
    }
    auto mirrored = mirror_pose_sequence(poses, g);
    for (std::size_t i = 0; i < poses.rotations.size(); ++i) {
        CHECK(mirrored.rotations[i] == doctest::Approx(poses.rotations[i]).epsilon(1e-15));
    }
}

TEST_CASE("mirroring commutes with forward kinematics") {
    auto g = build_skeleton();
    Rng rng(31);
    auto poses = testutil::random_motion(8, 15, rng);

    auto mirrored_pos = forward_kinematics(mirror_pose_sequence(poses, g), g);
    auto pos = forward_kinematics(poses, g);

    for (std::size_t t = 0; t < 8; ++t) {
        for (std::size_t j = 0; j < 15; ++j) {
            Eigen::Vector3d expect =
                Eigen::Vector3d(pos.position(t, g.mirror_map[j])).cwiseProduct(kMirror);
            CHECK((Eigen::Vector3d(mirrored_pos.position(t, j)) - expect).norm() <= 1e-12);
        }
    }
}

TEST_CASE("imu mirroring is an involution with fixed points") {
    auto g = build_skeleton();
    Rng rng(37);

    ImuSequence imu;
    imu.frame_rate = 60.0;
    imu.sensor_joints = {3, 4, 10, 13, 14};
    const std::size_t frames = 6;
    imu.data.resize(frames * imu.channel_count() * 12);
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t c = 0; c < imu.channel_count(); ++c) {
            double* p = imu.channel_ptr(t, c);
            Mat3Map{p} = testutil::random_rotation(rng);
            p[9] = rng.uniform(-5, 5);
            p[10] = rng.uniform(-5, 5);
            p[11] = rng.uniform(-5, 5);
        }
    }

    auto once = mirror_imu_sequence(imu, g);
    validate_rotations(once, 1e-12);
    auto twice = mirror_imu_sequence(once, g);
    CHECK(twice.data == imu.data);  // bit-exact
    CHECK(twice.sensor_joints == imu.sensor_joints);

    // identity orientations with zero accelerations are unchanged
    ImuSequence still;
    still.sensor_joints = {3, 4, 10, 13, 14};
    still.data.assign(2 * still.channel_count() * 12, 0.0);
    for (std::size_t t = 0; t < 2; ++t) {
        for (std::size_t c = 0; c < still.channel_count(); ++c) {
            Mat3Map(still.channel_ptr(t, c)) = RowMat3::Identity();
        }
    }
    auto still_mirrored = mirror_imu_sequence(still, g);
    CHECK(still_mirrored.data == still.data);

    ImuSequence bad = imu;
    bad.sensor_joints = {3, 4, 10, 13, 7};  // 7 carries no sensor
    CHECK_THROWS_AS(mirror_imu_sequence(bad, g), ValidationError);
}
