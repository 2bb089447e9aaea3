#include "aagc/skeleton.hpp"

#include <cmath>
#include <string>

#include "aagc/errors.hpp"

namespace aagc {

namespace {

// Helper shared by pose and IMU mirroring: conjugation by M = diag(-1,1,1)
// flips the sign of the entries coupling the lateral axis to the others, so
// applying it twice restores the input bit-exactly.
void conjugate_by_mirror(const double* in, double* out) {
    static constexpr double kSign[3] = {-1.0, 1.0, 1.0};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            out[i * 3 + j] = kSign[i] * kSign[j] * in[i * 3 + j];
        }
    }
}

void reflect_vector(const double* in, double* out) {
    out[0] = -in[0];
    out[1] = in[1];
    out[2] = in[2];
}

void check_rotation_block(const double* p, double tol, const char* what, std::size_t frame,
                          std::size_t index) {
    if (!is_rotation(ConstMat3Map(p), tol)) {
        throw ValidationError(std::string(what) + " block at frame " + std::to_string(frame) +
                              ", index " + std::to_string(index) + " is not a rotation");
    }
}

}  // namespace

bool is_rotation(const ConstMat3Map& m, double tol) {
    RowMat3 gram = m.transpose() * m;
    if ((gram - RowMat3::Identity()).cwiseAbs().maxCoeff() > tol) {
        return false;
    }
    return std::fabs(m.determinant() - 1.0) <= tol;
}

bool is_rotation(const RowMat3& m, double tol) {
    return is_rotation(ConstMat3Map(m.data()), tol);
}

void validate_rotations(const MotionSequence& seq, double tol) {
    for (std::size_t t = 0; t < seq.frame_count(); ++t) {
        for (std::size_t j = 0; j < seq.joint_count; ++j) {
            check_rotation_block(seq.rotation_ptr(t, j), tol, "pose", t, j);
        }
    }
}

void validate_rotations(const ImuSequence& imu, double tol) {
    for (std::size_t t = 0; t < imu.frame_count(); ++t) {
        for (std::size_t c = 0; c < imu.channel_count(); ++c) {
            check_rotation_block(imu.channel_ptr(t, c), tol, "imu orientation", t, c);
        }
    }
}

SkeletalGraph build_skeleton() {
    SkeletalGraph g;
    g.parent = {-1, -1, -1, 0, 1, 2, 5, 6, 6, 6, 7, 8, 9, 11, 12};

    // Upright T-pose, pelvis at the origin, lateral axis x (left = +x),
    // vertical axis y. Proportions follow a 1.7 m body.
    g.rest_position = {{
        {+0.090, -0.060, 0.0},  //  0 hip L
        {-0.090, -0.060, 0.0},  //  1 hip R
        {0.000, +0.100, 0.0},   //  2 spine1
        {+0.100, -0.500, 0.0},  //  3 knee L
        {-0.100, -0.500, 0.0},  //  4 knee R
        {0.000, +0.240, 0.0},   //  5 spine2
        {0.000, +0.380, 0.0},   //  6 spine3
        {0.000, +0.540, 0.0},   //  7 neck
        {+0.070, +0.480, 0.0},  //  8 collar L
        {-0.070, +0.480, 0.0},  //  9 collar R
        {0.000, +0.660, 0.0},   // 10 head
        {+0.180, +0.500, 0.0},  // 11 shoulder L
        {-0.180, +0.500, 0.0},  // 12 shoulder R
        {+0.460, +0.500, 0.0},  // 13 elbow L
        {-0.460, +0.500, 0.0},  // 14 elbow R
    }};

    using enum Region;
    g.region = {Legs, Legs, Torso, Legs, Legs, Torso, Torso, Torso,
                Arms, Arms, Torso, Arms, Arms, Arms, Arms};

    g.sensor_nodes = {3, 4, 10, 13, 14};
    g.mirror_map = {1, 0, 2, 4, 3, 5, 6, 7, 9, 8, 10, 12, 11, 14, 13};
    return g;
}

double llw_weight(Region region) {
    switch (region) {
        case Region::Legs:
            return 1.0;
        case Region::Arms:
            return 0.5;
        case Region::Torso:
            return 0.25;
    }
    throw UsageError("invalid region");
}

double llw_weight(std::size_t joint) {
    if (joint >= kJointCount) {
        throw UsageError("joint index " + std::to_string(joint) + " out of range");
    }
    static const SkeletalGraph g = build_skeleton();
    return llw_weight(g.region[joint]);
}

std::vector<double> init_adjacency(std::span<const Eigen::Vector3d> rest_positions) {
    const std::size_t n = rest_positions.size();
    if (n < 2) {
        throw UsageError("adjacency initialization needs at least 2 joints");
    }
    for (const auto& p : rest_positions) {
        if (!p.allFinite()) {
            throw ValidationError("rest positions must be finite");
        }
    }
    std::vector<double> adj(n * n);
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            dist[j] = (rest_positions[i] - rest_positions[j]).norm();
            sum += dist[j];
        }
        if (sum <= 0.0) {
            throw ValidationError("degenerate rest geometry: zero distance sum for node " +
                                  std::to_string(i));
        }
        for (std::size_t j = 0; j < n; ++j) {
            adj[i * n + j] = 1.0 - dist[j] / sum;
        }
    }
    return adj;
}

std::vector<double> init_adjacency(const SkeletalGraph& graph) {
    return init_adjacency(std::span<const Eigen::Vector3d>(graph.rest_position));
}

std::vector<double> normalized_tree_adjacency(
    std::span<const std::pair<std::size_t, std::size_t>> edges, std::size_t node_count) {
    std::vector<double> a(node_count * node_count, 0.0);
    for (std::size_t i = 0; i < node_count; ++i) {
        a[i * node_count + i] = 1.0;  // self-connections
    }
    for (const auto& [u, v] : edges) {
        if (u >= node_count || v >= node_count) {
            throw UsageError("edge endpoint out of range");
        }
        a[u * node_count + v] = 1.0;
        a[v * node_count + u] = 1.0;
    }
    std::vector<double> inv_sqrt_deg(node_count);
    for (std::size_t i = 0; i < node_count; ++i) {
        double deg = 0.0;
        for (std::size_t j = 0; j < node_count; ++j) {
            deg += a[i * node_count + j];
        }
        inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
    }
    for (std::size_t i = 0; i < node_count; ++i) {
        for (std::size_t j = 0; j < node_count; ++j) {
            a[i * node_count + j] *= inv_sqrt_deg[i] * inv_sqrt_deg[j];
        }
    }
    return a;
}

std::vector<double> normalized_tree_adjacency(const SkeletalGraph& graph) {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t j = 0; j < graph.joint_count; ++j) {
        if (graph.parent[j] >= 0) {
            edges.emplace_back(static_cast<std::size_t>(graph.parent[j]), j);
        }
    }
    return normalized_tree_adjacency(edges, graph.joint_count);
}

JointPositions forward_kinematics(const MotionSequence& poses, const SkeletalGraph& graph) {
    if (poses.joint_count != graph.joint_count) {
        throw ValidationError("pose joint count " + std::to_string(poses.joint_count) +
                              " does not match graph joint count");
    }
    validate_rotations(poses);

    JointPositions out;
    out.frame_count = poses.frame_count();
    out.joint_count = graph.joint_count;
    out.xyz.resize(out.frame_count * out.joint_count * 3);

    // parents precede children in the canonical numbering except the spine
    // fan-out, so walk joints in parent-first order explicitly
    for (std::size_t t = 0; t < out.frame_count; ++t) {
        for (std::size_t j = 0; j < graph.joint_count; ++j) {
            int p = graph.parent[j];
            Eigen::Vector3d base = Eigen::Vector3d::Zero();
            Eigen::Vector3d parent_rest = Eigen::Vector3d::Zero();
            RowMat3 parent_rot = RowMat3::Identity();
            if (p >= 0) {
                auto q = static_cast<std::size_t>(p);
                base = ConstVec3Map(out.ptr(t, q));
                parent_rest = graph.rest_position[q];
                parent_rot = poses.rotation(t, q);
            }
            Eigen::Vector3d pos = base + parent_rot * (graph.rest_position[j] - parent_rest);
            out.xyz[(t * out.joint_count + j) * 3 + 0] = pos.x();
            out.xyz[(t * out.joint_count + j) * 3 + 1] = pos.y();
            out.xyz[(t * out.joint_count + j) * 3 + 2] = pos.z();
        }
    }
    return out;
}

MotionSequence mirror_pose_sequence(const MotionSequence& poses, const SkeletalGraph& graph) {
    if (poses.joint_count != graph.joint_count) {
        throw ValidationError("pose joint count does not match graph");
    }
    validate_rotations(poses);

    MotionSequence out = poses;
    for (std::size_t t = 0; t < poses.frame_count(); ++t) {
        for (std::size_t j = 0; j < graph.joint_count; ++j) {
            conjugate_by_mirror(poses.rotation_ptr(t, graph.mirror_map[j]),
                                out.rotation_ptr(t, j));
        }
    }
    return out;
}

ImuSequence mirror_imu_sequence(const ImuSequence& imu, const SkeletalGraph& graph) {
    // map sensor joint -> channel index, validating membership
    std::vector<std::size_t> swapped_channel(imu.sensor_joints.size());
    for (std::size_t c = 0; c < imu.sensor_joints.size(); ++c) {
        std::uint32_t joint = imu.sensor_joints[c];
        bool known = false;
        for (std::size_t s : graph.sensor_nodes) {
            known = known || s == joint;
        }
        if (!known || joint >= graph.joint_count) {
            throw ValidationError("unknown sensor node " + std::to_string(joint));
        }
        std::size_t mirrored_joint = graph.mirror_map[joint];
        bool found = false;
        for (std::size_t c2 = 0; c2 < imu.sensor_joints.size(); ++c2) {
            if (imu.sensor_joints[c2] == mirrored_joint) {
                swapped_channel[c] = c2;
                found = true;
            }
        }
        if (!found) {
            throw ValidationError("sensor set is not closed under mirroring: joint " +
                                  std::to_string(joint));
        }
    }

    ImuSequence out = imu;
    for (std::size_t t = 0; t < imu.frame_count(); ++t) {
        for (std::size_t c = 0; c < imu.sensor_joints.size(); ++c) {
            const double* src = imu.channel_ptr(t, swapped_channel[c]);
            double* dst = out.channel_ptr(t, c);
            conjugate_by_mirror(src, dst);
            reflect_vector(src + 9, dst + 9);
        }
        const double* root_src = imu.channel_ptr(t, imu.root_channel());
        double* root_dst = out.channel_ptr(t, out.root_channel());
        conjugate_by_mirror(root_src, root_dst);
        reflect_vector(root_src + 9, root_dst + 9);
    }
    return out;
}

}  // namespace aagc
