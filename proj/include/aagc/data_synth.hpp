#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "aagc/sequences.hpp"
#include "aagc/skeleton.hpp"

namespace aagc {

// Per-joint sinusoidal axis-angle trajectory:
// angle(t) = amplitude * sin(2 pi frequency t + phase) about a fixed axis.
struct JointWaveform {
    Eigen::Vector3d axis = Eigen::Vector3d::UnitX();
    double amplitude = 0.0;  // radians
    double frequency = 1.0;  // Hz
    double phase = 0.0;      // radians
};

// Procedural stand-in for a motion corpus. Amplitude caps act as the
// joint-limit table; frequencies stay well below Nyquist at 60 Hz.
struct GeneratorConfig {
    double duration_s = 10.0;
    double frame_rate = 60.0;
    std::uint64_t seed = 0;
    double min_frequency = 0.2;   // Hz
    double max_frequency = 2.0;   // Hz, must stay <= 5
    double legs_max_swing = 1.2;  // radians
    double arms_max_swing = 1.5;
    double torso_max_swing = 0.4;
};

std::string generator_config_to_json(const GeneratorConfig& config);

// Local waveform rotations composed along the kinematic chain into global
// rotations. The deterministic core behind generate_motion.
MotionSequence motion_from_waveforms(const std::vector<JointWaveform>& waveforms,
                                     std::size_t frame_count, double frame_rate,
                                     const SkeletalGraph& graph);

// Seeded sampling of per-joint waveforms within the config's limits.
MotionSequence generate_motion(const GeneratorConfig& config, const SkeletalGraph& graph);
MotionSequence generate_motion(const GeneratorConfig& config);

// Central second difference of positions: a_t = (p_{t+1} - 2 p_t + p_{t-1}) /
// dt^2, endpoint frames replicated from the nearest interior frame.
std::vector<double> acceleration_from_positions(const JointPositions& positions,
                                                double frame_rate);

// Virtual IMU synthesis: per sensor node the joint's global rotation plus the
// second-difference acceleration of its FK position; root channel carries
// identity orientation and zero acceleration. Needs at least 3 frames.
ImuSequence synthesize_imu(const MotionSequence& poses, const SkeletalGraph& graph);

// Root-relative model input: per instrumented node the row
// [flatten(R_root^T R_s), R_root^T (a_s - a_root)], all other rows zero.
// Returns T * joint_count * 12 values. No scale normalization is applied.
std::vector<double> normalize_to_root(const ImuSequence& imu, std::size_t joint_count);

struct DatasetRecord {
    MotionSequence poses;
    ImuSequence imu;
};
using Dataset = std::vector<DatasetRecord>;

// "GPD1" container, little-endian: magic, u32 version, u32 record count;
// per record u32 T, u32 N, f64 frame rate, pose block (T*N*9 f64), u32 sensor
// channel count, channel id list (root sentinel last), IMU block (T*S*12 f64).
void write_dataset(const std::string& path, const Dataset& dataset);
Dataset read_dataset(const std::string& path);

// Originals followed by their mirrored copies; exactly doubles the size.
Dataset augment_with_cda(const Dataset& dataset, const SkeletalGraph& graph);

}  // namespace aagc
