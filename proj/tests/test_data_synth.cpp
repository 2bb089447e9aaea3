#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "aagc/data_synth.hpp"
#include "aagc/errors.hpp"
#include "support/test_motion.hpp"

using namespace aagc;
namespace fs = std::filesystem;

namespace {

template <typename Derived>
double rotation_angle(const Eigen::MatrixBase<Derived>& r) {
    double c = (r.trace() - 1.0) / 2.0;
    c = std::clamp(c, -1.0, 1.0);
    return std::acos(c);
}

Dataset small_dataset(std::uint64_t seed, std::size_t records, double duration = 1.0) {
    auto graph = build_skeleton();
    Dataset data;
    for (std::size_t i = 0; i < records; ++i) {
        GeneratorConfig cfg;
        cfg.duration_s = duration;
        cfg.seed = derive_seed(seed, i);
        DatasetRecord rec;
        rec.poses = generate_motion(cfg, graph);
        rec.imu = synthesize_imu(rec.poses, graph);
        data.push_back(std::move(rec));
    }
    return data;
}

}  // namespace

TEST_CASE("waveform motion hand case: unit sinusoid") {
    auto graph = build_skeleton();
    std::vector<JointWaveform> waves(15);
    waves[0].axis = Eigen::Vector3d::UnitX();
    waves[0].amplitude = M_PI / 2.0;
    waves[0].frequency = 1.0;
    waves[0].phase = 0.0;
    // remaining joints stay at amplitude 0

    auto seq = motion_from_waveforms(waves, 121, 60.0, graph);
    CHECK(seq.frame_count() == 121);

    // frame 15 = quarter period: maximum swing pi/2
    CHECK(rotation_angle(seq.rotation(15, 0)) == doctest::Approx(M_PI / 2).epsilon(1e-12));
    // frame 0, 30, 60 ... : sin = 0 -> identity
    for (std::size_t t : {std::size_t{0}, std::size_t{30}, std::size_t{60}, std::size_t{120}}) {
        CHECK(rotation_angle(seq.rotation(t, 0)) <= 1e-9);
    }
    // full period of 60 frames
    for (std::size_t t = 0; t + 60 < 121; t += 7) {
        CHECK((seq.rotation(t, 0) - seq.rotation(t + 60, 0)).cwiseAbs().maxCoeff() <= 1e-9);
    }
    // knee (child of the driven hip) inherits the hip's global rotation
    CHECK((seq.rotation(15, 3) - seq.rotation(15, 0)).cwiseAbs().maxCoeff() <= 1e-12);
    // untouched joints stay identity
    CHECK(rotation_angle(seq.rotation(15, 7)) <= 1e-12);
}

TEST_CASE("generated motion: determinism, validity, degenerate amplitudes") {
    auto graph = build_skeleton();
    GeneratorConfig cfg;
    cfg.duration_s = 2.0;
    cfg.seed = 77;

    auto a = generate_motion(cfg, graph);
    auto b = generate_motion(cfg, graph);
    CHECK(a.rotations == b.rotations);  // bit-identical
    CHECK(a.frame_count() == 120);
    CHECK(a.seed == 77);
    CHECK(a.config_digest != 0);

    GeneratorConfig still = cfg;
    still.legs_max_swing = 0.0;
    still.arms_max_swing = 0.0;
    still.torso_max_swing = 0.0;
    auto frozen = generate_motion(still, graph);
    for (std::size_t t = 0; t < frozen.frame_count(); ++t) {
        for (std::size_t j = 0; j < 15; ++j) {
            CHECK((frozen.rotation(t, j) - RowMat3::Identity()).cwiseAbs().maxCoeff() == 0.0);
        }
    }

    GeneratorConfig bad = cfg;
    bad.duration_s = 0.0;
    CHECK_THROWS_AS(generate_motion(bad, graph), ConfigError);
    bad = cfg;
    bad.max_frequency = 9.0;
    CHECK_THROWS_AS(generate_motion(bad, graph), ConfigError);
}

TEST_CASE("generated rotations stay valid across many random frames") {
    auto graph = build_skeleton();
    double worst = 0.0;
    std::size_t frames_checked = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        GeneratorConfig cfg;
        cfg.duration_s = 17.0;  // 1020 frames
        cfg.seed = derive_seed(1234, s);
        auto seq = generate_motion(cfg, graph);
        frames_checked += seq.frame_count();
        for (std::size_t t = 0; t < seq.frame_count(); ++t) {
            for (std::size_t j = 0; j < 15; ++j) {
                auto r = seq.rotation(t, j);
                worst = std::max(worst,
                                 (r.transpose() * r - RowMat3::Identity()).cwiseAbs().maxCoeff());
            }
        }
    }
    CHECK(frames_checked >= 10000);
    CHECK(worst < 1e-9);
}

TEST_CASE("acceleration second difference is exact for quadratics") {
    // p(t) = 1/2 g t^2 along y for one joint, constant for the other
    const double g = -9.81;
    const double rate = 60.0;
    JointPositions pos;
    pos.frame_count = 12;
    pos.joint_count = 2;
    pos.xyz.assign(12 * 2 * 3, 0.0);
    for (std::size_t t = 0; t < 12; ++t) {
        double time = static_cast<double>(t) / rate;
        pos.xyz[(t * 2 + 0) * 3 + 1] = 0.5 * g * time * time;
        pos.xyz[(t * 2 + 1) * 3 + 0] = 3.0;  // static joint
    }
    auto accel = acceleration_from_positions(pos, rate);
    for (std::size_t t = 0; t < 12; ++t) {
        CHECK(accel[(t * 2 + 0) * 3 + 1] == doctest::Approx(g).epsilon(1e-9));
        for (int k = 0; k < 3; ++k) {
            CHECK(accel[(t * 2 + 1) * 3 + k] == 0.0);
        }
    }
}

TEST_CASE("imu synthesis basics") {
    auto graph = build_skeleton();

    // static pose: zero acceleration everywhere, orientations = pose blocks
    auto still = testutil::identity_motion(10, 15);
    auto imu = synthesize_imu(still, graph);
    CHECK(imu.sensor_joints == std::vector<std::uint32_t>{3, 4, 10, 13, 14});
    for (std::size_t t = 0; t < 10; ++t) {
        for (std::size_t c = 0; c < imu.channel_count(); ++c) {
            CHECK((imu.acceleration(t, c).norm()) == 0.0);
            CHECK((imu.orientation(t, c) - RowMat3::Identity()).cwiseAbs().maxCoeff() == 0.0);
        }
    }

    Rng rng(5);
    auto moving = testutil::random_motion(8, 15, rng);
    auto imu2 = synthesize_imu(moving, graph);
    for (std::size_t t = 0; t < 8; ++t) {
        for (std::size_t c = 0; c < imu2.sensor_joints.size(); ++c) {
            auto j = imu2.sensor_joints[c];
            CHECK((imu2.orientation(t, c) - moving.rotation(t, j)).cwiseAbs().maxCoeff() == 0.0);
        }
        // root channel pinned
        CHECK((imu2.orientation(t, imu2.root_channel()) - RowMat3::Identity())
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
        CHECK(imu2.acceleration(t, imu2.root_channel()).norm() == 0.0);
    }

    auto too_short = testutil::identity_motion(2, 15);
    CHECK_THROWS_AS(synthesize_imu(too_short, graph), UsageError);
}

TEST_CASE("root-relative normalization") {
    auto graph = build_skeleton();
    Rng rng(11);

    // hand-built imu where every channel equals the root channel
    ImuSequence imu;
    imu.sensor_joints = {3, 4, 10, 13, 14};
    const std::size_t frames = 5;
    imu.data.resize(frames * imu.channel_count() * 12);
    for (std::size_t t = 0; t < frames; ++t) {
        auto rot = testutil::random_rotation(rng);
        Eigen::Vector3d acc(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
        for (std::size_t c = 0; c < imu.channel_count(); ++c) {
            double* p = imu.channel_ptr(t, c);
            Mat3Map{p} = rot;
            p[9] = acc.x();
            p[10] = acc.y();
            p[11] = acc.z();
        }
    }
    auto rows = normalize_to_root(imu, 15);
    REQUIRE(rows.size() == frames * 15 * 12);
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t j = 0; j < 15; ++j) {
            const double* row = rows.data() + (t * 15 + j) * 12;
            bool instrumented = j == 3 || j == 4 || j == 10 || j == 13 || j == 14;
            if (!instrumented) {
                for (int k = 0; k < 12; ++k) {
                    CHECK(row[k] == 0.0);  // exactly zero
                }
            } else {
                // self-normalization: identity rotation, zero acceleration
                CHECK((ConstMat3Map(row) - RowMat3::Identity()).cwiseAbs().maxCoeff() <= 1e-12);
                for (int k = 9; k < 12; ++k) {
                    CHECK(std::fabs(row[k]) <= 1e-12);
                }
            }
        }
    }

    // identity root passes sensor values through unchanged
    ImuSequence raw = imu;
    for (std::size_t t = 0; t < frames; ++t) {
        double* p = raw.channel_ptr(t, raw.root_channel());
        Mat3Map{p} = RowMat3::Identity();
        p[9] = p[10] = p[11] = 0.0;
    }
    auto passthrough = normalize_to_root(raw, 15);
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t c = 0; c < raw.sensor_joints.size(); ++c) {
            const double* row = passthrough.data() + (t * 15 + raw.sensor_joints[c]) * 12;
            const double* src = raw.channel_ptr(t, c);
            for (int k = 0; k < 12; ++k) {
                CHECK(row[k] == src[k]);
            }
        }
    }

    ImuSequence broken;
    broken.sensor_joints = {};
    broken.data = {};
    CHECK_THROWS_AS(normalize_to_root(broken, 15), ValidationError);
}

TEST_CASE("mirroring commutes with imu synthesis") {
    auto graph = build_skeleton();
    GeneratorConfig cfg;
    cfg.duration_s = 1.5;
    cfg.seed = 4242;
    auto poses = generate_motion(cfg, graph);

    auto path_a = mirror_imu_sequence(synthesize_imu(poses, graph), graph);
    auto path_b = synthesize_imu(mirror_pose_sequence(poses, graph), graph);

    REQUIRE(path_a.data.size() == path_b.data.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < path_a.data.size(); ++i) {
        worst = std::max(worst, std::fabs(path_a.data[i] - path_b.data[i]));
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("dataset round-trip and integrity gates") {
    auto dir = fs::temp_directory_path() / "aagc_dataset_test";
    fs::create_directories(dir);
    auto path = (dir / "data.gpd").string();
    auto path2 = (dir / "data2.gpd").string();

    auto data = small_dataset(900, 3);
    write_dataset(path, data);
    auto loaded = read_dataset(path);
    REQUIRE(loaded.size() == 3);
    write_dataset(path2, loaded);

    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);

    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(loaded[i].poses.rotations == data[i].poses.rotations);
        CHECK(loaded[i].imu.data == data[i].imu.data);
        CHECK(loaded[i].imu.sensor_joints == data[i].imu.sensor_joints);
    }

    SUBCASE("empty dataset is a valid file with zero records") {
        auto empty_path = (dir / "empty.gpd").string();
        write_dataset(empty_path, {});
        CHECK(read_dataset(empty_path).empty());
    }
    SUBCASE("corrupted record length names the record") {
        std::string clipped = b1.substr(0, b1.size() - 100);
        auto bad = (dir / "clipped.gpd").string();
        std::ofstream(bad, std::ios::binary)
            .write(clipped.data(), static_cast<std::streamsize>(clipped.size()));
        try {
            read_dataset(bad);
            FAIL("expected IntegrityError");
        } catch (const IntegrityError& e) {
            CHECK(std::string(e.what()).find("record 2") != std::string::npos);
        }
    }
    SUBCASE("magic and version gates") {
        std::string wrong = b1;
        wrong[0] = 'X';
        auto bad = (dir / "magic.gpd").string();
        std::ofstream(bad, std::ios::binary)
            .write(wrong.data(), static_cast<std::streamsize>(wrong.size()));
        CHECK_THROWS_AS(read_dataset(bad), FormatError);

        wrong = b1;
        wrong[4] = 9;
        auto bad2 = (dir / "version.gpd").string();
        std::ofstream(bad2, std::ios::binary)
            .write(wrong.data(), static_cast<std::streamsize>(wrong.size()));
        CHECK_THROWS_AS(read_dataset(bad2), FormatError);
    }
}

TEST_CASE("contralateral augmentation doubles and re-doubles") {
    auto graph = build_skeleton();
    auto data = small_dataset(31, 2);

    auto doubled = augment_with_cda(data, graph);
    REQUIRE(doubled.size() == 4);
    for (const auto& rec : doubled) {
        validate_rotations(rec.poses, 1e-9);
        validate_rotations(rec.imu, 1e-9);
        CHECK(rec.poses.frame_count() == rec.imu.frame_count());
    }

    auto quadrupled = augment_with_cda(doubled, graph);
    REQUIRE(quadrupled.size() == 8);
    // mirrored copies of mirrored copies reproduce the originals bit-exactly
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(quadrupled[4 + 2 + i].poses.rotations == data[i].poses.rotations);
        CHECK(quadrupled[4 + 2 + i].imu.data == data[i].imu.data);
    }
}
