#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace aagc {

using RowMat3 = Eigen::Matrix<double, 3, 3, Eigen::RowMajor>;
using Mat3Map = Eigen::Map<RowMat3>;
using ConstMat3Map = Eigen::Map<const RowMat3>;
using Vec3Map = Eigen::Map<Eigen::Vector3d>;
using ConstVec3Map = Eigen::Map<const Eigen::Vector3d>;

// Per-frame global joint rotations (relative to the pelvis frame).
struct MotionSequence {
    double frame_rate = 60.0;
    std::size_t joint_count = 0;
    std::vector<double> rotations;  // T * N * 9, row-major 3x3 blocks

    // generator provenance
    std::uint64_t seed = 0;
    std::uint64_t config_digest = 0;

    std::size_t frame_count() const {
        return joint_count == 0 ? 0 : rotations.size() / (joint_count * 9);
    }
    double* rotation_ptr(std::size_t t, std::size_t j) {
        return rotations.data() + (t * joint_count + j) * 9;
    }
    const double* rotation_ptr(std::size_t t, std::size_t j) const {
        return rotations.data() + (t * joint_count + j) * 9;
    }
    ConstMat3Map rotation(std::size_t t, std::size_t j) const {
        return ConstMat3Map(rotation_ptr(t, j));
    }
    Mat3Map rotation(std::size_t t, std::size_t j) {
        return Mat3Map(rotation_ptr(t, j));
    }
};

// Pelvis-origin joint positions, meters.
struct JointPositions {
    std::size_t frame_count = 0;
    std::size_t joint_count = 0;
    std::vector<double> xyz;  // T * N * 3

    const double* ptr(std::size_t t, std::size_t j) const {
        return xyz.data() + (t * joint_count + j) * 3;
    }
    double* ptr(std::size_t t, std::size_t j) {
        return xyz.data() + (t * joint_count + j) * 3;
    }
    ConstVec3Map position(std::size_t t, std::size_t j) const {
        return ConstVec3Map(ptr(t, j));
    }
};

// Virtual IMU streams: one channel per instrumented joint plus the root
// (pelvis) channel, stored last. Each channel frame is a 3x3 global
// orientation followed by a 3-vector acceleration (12 values).
struct ImuSequence {
    static constexpr std::uint32_t kRootChannelId = 0xffffffffu;

    double frame_rate = 60.0;
    std::vector<std::uint32_t> sensor_joints;  // ascending joint ids
    std::vector<double> data;                  // T * (S+1) * 12

    std::size_t channel_count() const { return sensor_joints.size() + 1; }
    std::size_t frame_count() const {
        return sensor_joints.empty() && data.empty() ? 0 : data.size() / (channel_count() * 12);
    }
    double* channel_ptr(std::size_t t, std::size_t ch) {
        return data.data() + (t * channel_count() + ch) * 12;
    }
    const double* channel_ptr(std::size_t t, std::size_t ch) const {
        return data.data() + (t * channel_count() + ch) * 12;
    }
    std::size_t root_channel() const { return sensor_joints.size(); }
    ConstMat3Map orientation(std::size_t t, std::size_t ch) const {
        return ConstMat3Map(channel_ptr(t, ch));
    }
    ConstVec3Map acceleration(std::size_t t, std::size_t ch) const {
        return ConstVec3Map(channel_ptr(t, ch) + 9);
    }
};

// Throws ValidationError unless every 3x3 block is a rotation within tol.
void validate_rotations(const MotionSequence& seq, double tol = 1e-9);
void validate_rotations(const ImuSequence& imu, double tol = 1e-9);

// True when R^T R = I and det R = +1 within tol.
bool is_rotation(const ConstMat3Map& m, double tol);
bool is_rotation(const RowMat3& m, double tol);

}  // namespace aagc
