#pragma once

// Shared helpers for constructing rotation/motion fixtures in tests.

#include <Eigen/Dense>
#include <cmath>

#include "aagc/rng.hpp"
#include "aagc/sequences.hpp"
#include "aagc/skeleton.hpp"

namespace testutil {

inline aagc::RowMat3 random_rotation(aagc::Rng& rng) {
    Eigen::Vector3d axis(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    while (axis.norm() < 1e-6) {
        axis = Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    }
    axis.normalize();
    double angle = rng.uniform(-M_PI, M_PI);
    return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

inline aagc::RowMat3 rotation_about_x(double angle) {
    return Eigen::AngleAxisd(angle, Eigen::Vector3d::UnitX()).toRotationMatrix();
}

// Arbitrary per-joint global rotations; any rotation assignment is a valid
// MotionSequence.
inline aagc::MotionSequence random_motion(std::size_t frames, std::size_t joints, aagc::Rng& rng,
                                          double frame_rate = 60.0) {
    aagc::MotionSequence seq;
    seq.frame_rate = frame_rate;
    seq.joint_count = joints;
    seq.rotations.resize(frames * joints * 9);
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t j = 0; j < joints; ++j) {
            aagc::Mat3Map(seq.rotation_ptr(t, j)) = random_rotation(rng);
        }
    }
    return seq;
}

inline aagc::MotionSequence identity_motion(std::size_t frames, std::size_t joints,
                                            double frame_rate = 60.0) {
    aagc::MotionSequence seq;
    seq.frame_rate = frame_rate;
    seq.joint_count = joints;
    seq.rotations.resize(frames * joints * 9);
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t j = 0; j < joints; ++j) {
            aagc::Mat3Map(seq.rotation_ptr(t, j)) = aagc::RowMat3::Identity();
        }
    }
    return seq;
}

}  // namespace testutil
