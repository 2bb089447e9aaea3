#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "aagc/sequences.hpp"

namespace aagc {

inline constexpr std::size_t kJointCount = 15;
inline constexpr std::size_t kSensorCount = 5;

enum class Region { Legs, Arms, Torso };

// 15-joint core body graph. Joints 0/1 hips, 2/5/6 spine chain, 3/4 knees,
// 7 neck, 8/9 collars, 10 head, 11/12 shoulders, 13/14 elbows. Root-adjacent
// joints parent to a virtual pelvis origin (index -1) that carries identity
// rotation and zero position in every frame.
struct SkeletalGraph {
    std::size_t joint_count = kJointCount;
    std::array<int, kJointCount> parent;
    std::array<Eigen::Vector3d, kJointCount> rest_position;
    std::array<Region, kJointCount> region;
    std::array<std::size_t, kSensorCount> sensor_nodes;  // {3,4,10,13,14}
    std::array<std::size_t, kJointCount> mirror_map;     // left<->right involution
};

SkeletalGraph build_skeleton();

// Longitudinal loss weight for a joint of the canonical skeleton:
// legs 1.0, arms 0.5, torso 0.25.
double llw_weight(Region region);
double llw_weight(std::size_t joint);

// Adjacency initialization from rest geometry: row-normalized complemented
// Euclidean distance, A[i][j] = 1 - d(i,j)/sum_j d(i,j). Returns an NxN
// row-major matrix; rows are normalized independently, so the matrix is
// generally asymmetric. Throws ValidationError on a zero row sum.
std::vector<double> init_adjacency(std::span<const Eigen::Vector3d> rest_positions);
std::vector<double> init_adjacency(const SkeletalGraph& graph);

// Symmetric normalization D^{-1/2} (A + I) D^{-1/2} of the skeleton's binary
// tree adjacency, D the node-degree matrix of (A + I). Used only by the
// fixed-adjacency baseline cell. Edges exist between real joints only; the
// virtual pelvis is not a node.
std::vector<double> normalized_tree_adjacency(const SkeletalGraph& graph);
std::vector<double> normalized_tree_adjacency(std::span<const std::pair<std::size_t, std::size_t>> edges,
                                              std::size_t node_count);

// Rigid stick-figure forward kinematics on global rotations:
// p_j = p_parent + R_parent * (rest_j - rest_parent), pelvis at the origin.
JointPositions forward_kinematics(const MotionSequence& poses, const SkeletalGraph& graph);

// Contralateral mirroring through the sagittal plane (lateral axis = x):
// output joint j at frame t is M * R[t, mirror_map(j)] * M, M = diag(-1,1,1).
MotionSequence mirror_pose_sequence(const MotionSequence& poses, const SkeletalGraph& graph);

// IMU counterpart: orientations R -> M R M, accelerations a -> M a, channels
// swapped per mirror_map restricted to sensor nodes; root channel fixed.
ImuSequence mirror_imu_sequence(const ImuSequence& imu, const SkeletalGraph& graph);

}  // namespace aagc
