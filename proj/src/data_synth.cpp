#include "aagc/data_synth.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "aagc/digest.hpp"
#include "aagc/errors.hpp"
#include "aagc/rng.hpp"

namespace aagc {

namespace {

void check_generator_config(const GeneratorConfig& c) {
    if (c.duration_s <= 0.0) {
        throw ConfigError("duration must be positive");
    }
    if (c.frame_rate <= 0.0) {
        throw ConfigError("frame rate must be positive");
    }
    if (c.min_frequency < 0.0 || c.max_frequency < c.min_frequency) {
        throw ConfigError("invalid frequency range");
    }
    if (c.max_frequency > 5.0) {
        throw ConfigError("frequencies above 5 Hz violate the Nyquist margin at 60 Hz");
    }
    for (double swing : {c.legs_max_swing, c.arms_max_swing, c.torso_max_swing}) {
        if (swing < 0.0 || swing > M_PI) {
            throw ConfigError("joint swing limits must lie in [0, pi]");
        }
    }
}

double swing_limit(const GeneratorConfig& c, Region region) {
    switch (region) {
        case Region::Legs:
            return c.legs_max_swing;
        case Region::Arms:
            return c.arms_max_swing;
        case Region::Torso:
            return c.torso_max_swing;
    }
    throw UsageError("invalid region");
}

}  // namespace

std::string generator_config_to_json(const GeneratorConfig& c) {
    nlohmann::json j;
    j["arms_max_swing"] = c.arms_max_swing;
    j["duration_s"] = c.duration_s;
    j["frame_rate"] = c.frame_rate;
    j["legs_max_swing"] = c.legs_max_swing;
    j["max_frequency"] = c.max_frequency;
    j["min_frequency"] = c.min_frequency;
    j["seed"] = c.seed;
    j["torso_max_swing"] = c.torso_max_swing;
    return j.dump();
}

MotionSequence motion_from_waveforms(const std::vector<JointWaveform>& waveforms,
                                     std::size_t frame_count, double frame_rate,
                                     const SkeletalGraph& graph) {
    if (waveforms.size() != graph.joint_count) {
        throw UsageError("one waveform per joint required");
    }
    if (frame_count == 0) {
        throw UsageError("frame count must be positive");
    }
    MotionSequence seq;
    seq.frame_rate = frame_rate;
    seq.joint_count = graph.joint_count;
    seq.rotations.resize(frame_count * graph.joint_count * 9);

    for (std::size_t t = 0; t < frame_count; ++t) {
        const double time = static_cast<double>(t) / frame_rate;
        for (std::size_t j = 0; j < graph.joint_count; ++j) {
            const auto& w = waveforms[j];
            const double angle =
                w.amplitude * std::sin(2.0 * M_PI * w.frequency * time + w.phase);
            RowMat3 local = Eigen::AngleAxisd(angle, w.axis).toRotationMatrix();
            int p = graph.parent[j];
            if (p < 0) {
                Mat3Map{seq.rotation_ptr(t, j)} = local;
            } else {
                Mat3Map{seq.rotation_ptr(t, j)} =
                    seq.rotation(t, static_cast<std::size_t>(p)) * local;
            }
        }
    }
    return seq;
}

MotionSequence generate_motion(const GeneratorConfig& config, const SkeletalGraph& graph) {
    check_generator_config(config);
    const auto frame_count =
        static_cast<std::size_t>(std::llround(config.duration_s * config.frame_rate));
    if (frame_count == 0) {
        throw ConfigError("duration too short for one frame");
    }

    std::vector<JointWaveform> waveforms(graph.joint_count);
    for (std::size_t j = 0; j < graph.joint_count; ++j) {
        Rng rng(derive_seed(config.seed, j));
        JointWaveform w;
        Eigen::Vector3d axis(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        while (axis.norm() < 1e-3) {
            axis = Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        }
        w.axis = axis.normalized();
        w.amplitude = swing_limit(config, graph.region[j]) * rng.uniform(0.2, 1.0);
        w.frequency = rng.uniform(config.min_frequency, config.max_frequency);
        w.phase = rng.uniform(0.0, 2.0 * M_PI);
        waveforms[j] = w;
    }

    MotionSequence seq = motion_from_waveforms(waveforms, frame_count, config.frame_rate, graph);
    seq.seed = config.seed;
    seq.config_digest = fnv1a64(generator_config_to_json(config));
    return seq;
}

MotionSequence generate_motion(const GeneratorConfig& config) {
    return generate_motion(config, build_skeleton());
}

std::vector<double> acceleration_from_positions(const JointPositions& positions,
                                                double frame_rate) {
    const std::size_t frames = positions.frame_count;
    const std::size_t joints = positions.joint_count;
    if (frames < 3) {
        throw UsageError("acceleration needs at least 3 frames");
    }
    const double rate_sq = frame_rate * frame_rate;
    std::vector<double> accel(frames * joints * 3, 0.0);
    for (std::size_t t = 1; t + 1 < frames; ++t) {
        for (std::size_t j = 0; j < joints; ++j) {
            const double* prev = positions.ptr(t - 1, j);
            const double* cur = positions.ptr(t, j);
            const double* next = positions.ptr(t + 1, j);
            double* out = accel.data() + (t * joints + j) * 3;
            for (int k = 0; k < 3; ++k) {
                out[k] = (next[k] - 2.0 * cur[k] + prev[k]) * rate_sq;
            }
        }
    }
    // replicate nearest interior value at the endpoints
    std::memcpy(accel.data(), accel.data() + joints * 3, joints * 3 * sizeof(double));
    std::memcpy(accel.data() + (frames - 1) * joints * 3, accel.data() + (frames - 2) * joints * 3,
                joints * 3 * sizeof(double));
    return accel;
}

ImuSequence synthesize_imu(const MotionSequence& poses, const SkeletalGraph& graph) {
    if (poses.frame_count() < 3) {
        throw UsageError("IMU synthesis needs at least 3 frames");
    }
    auto positions = forward_kinematics(poses, graph);  // validates rotations
    auto accel = acceleration_from_positions(positions, poses.frame_rate);

    ImuSequence imu;
    imu.frame_rate = poses.frame_rate;
    imu.sensor_joints.assign(graph.sensor_nodes.begin(), graph.sensor_nodes.end());
    const std::size_t frames = poses.frame_count();
    imu.data.assign(frames * imu.channel_count() * 12, 0.0);

    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t c = 0; c < imu.sensor_joints.size(); ++c) {
            const std::size_t j = imu.sensor_joints[c];
            double* out = imu.channel_ptr(t, c);
            std::memcpy(out, poses.rotation_ptr(t, j), 9 * sizeof(double));
            std::memcpy(out + 9, accel.data() + (t * graph.joint_count + j) * 3,
                        3 * sizeof(double));
        }
        // pelvis channel: fixed at the origin in this surrogate corpus
        Mat3Map{imu.channel_ptr(t, imu.root_channel())} = RowMat3::Identity();
    }
    return imu;
}

std::vector<double> normalize_to_root(const ImuSequence& imu, std::size_t joint_count) {
    const std::size_t frames = imu.frame_count();
    const std::size_t channels = imu.channel_count();
    if (frames == 0 || channels < 1 || imu.data.size() != frames * channels * 12) {
        throw ValidationError("imu sequence is empty or missing its root channel");
    }
    for (std::uint32_t j : imu.sensor_joints) {
        if (j >= joint_count) {
            throw ValidationError("sensor joint " + std::to_string(j) + " out of range");
        }
    }

    std::vector<double> out(frames * joint_count * 12, 0.0);
    for (std::size_t t = 0; t < frames; ++t) {
        ConstMat3Map root_rot(imu.channel_ptr(t, imu.root_channel()));
        ConstVec3Map root_acc(imu.channel_ptr(t, imu.root_channel()) + 9);
        for (std::size_t c = 0; c < imu.sensor_joints.size(); ++c) {
            const std::size_t j = imu.sensor_joints[c];
            double* row = out.data() + (t * joint_count + j) * 12;
            RowMat3 rel = root_rot.transpose() * ConstMat3Map(imu.channel_ptr(t, c));
            Eigen::Vector3d acc =
                root_rot.transpose() * (ConstVec3Map(imu.channel_ptr(t, c) + 9) - root_acc);
            std::memcpy(row, rel.data(), 9 * sizeof(double));
            row[9] = acc.x();
            row[10] = acc.y();
            row[11] = acc.z();
        }
    }
    return out;
}

namespace {

constexpr char kMagic[4] = {'G', 'P', 'D', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& context) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) {
        throw IntegrityError(context + " truncated");
    }
    return value;
}

}  // namespace

void write_dataset(const std::string& path, const Dataset& dataset) {
    for (std::size_t i = 1; i < dataset.size(); ++i) {
        const auto& first = dataset.front();
        const auto& rec = dataset[i];
        if (rec.poses.joint_count != first.poses.joint_count ||
            rec.poses.frame_rate != first.poses.frame_rate ||
            rec.imu.frame_rate != first.imu.frame_rate ||
            rec.imu.sensor_joints != first.imu.sensor_joints) {
            throw UsageError("dataset records must share joint count, frame rate and sensors");
        }
    }
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (dataset[i].poses.frame_count() != dataset[i].imu.frame_count()) {
            throw UsageError("record " + std::to_string(i) +
                             ": pose and IMU frame counts differ");
        }
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open dataset for writing: " + path);
    }
    out.write(kMagic, 4);
    write_pod(out, kVersion);
    write_pod(out, static_cast<std::uint32_t>(dataset.size()));
    for (const auto& rec : dataset) {
        write_pod(out, static_cast<std::uint32_t>(rec.poses.frame_count()));
        write_pod(out, static_cast<std::uint32_t>(rec.poses.joint_count));
        write_pod(out, rec.poses.frame_rate);
        out.write(reinterpret_cast<const char*>(rec.poses.rotations.data()),
                  static_cast<std::streamsize>(rec.poses.rotations.size() * sizeof(double)));
        write_pod(out, static_cast<std::uint32_t>(rec.imu.channel_count()));
        for (std::uint32_t j : rec.imu.sensor_joints) {
            write_pod(out, j);
        }
        write_pod(out, ImuSequence::kRootChannelId);
        out.write(reinterpret_cast<const char*>(rec.imu.data.data()),
                  static_cast<std::streamsize>(rec.imu.data.size() * sizeof(double)));
    }
    if (!out) {
        throw IoError("failed writing dataset: " + path);
    }
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open dataset: " + path);
    }
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError("not a dataset file: " + path);
    }
    auto version = read_pod<std::uint32_t>(in, "header");
    if (version != kVersion) {
        throw FormatError("unsupported dataset version " + std::to_string(version));
    }
    auto count = read_pod<std::uint32_t>(in, "header");

    Dataset dataset;
    dataset.reserve(count);
    for (std::uint32_t r = 0; r < count; ++r) {
        const std::string ctx = "record " + std::to_string(r);
        auto frames = read_pod<std::uint32_t>(in, ctx);
        auto joints = read_pod<std::uint32_t>(in, ctx);
        auto frame_rate = read_pod<double>(in, ctx);
        if (frames == 0 || joints == 0 || frame_rate <= 0.0) {
            throw IntegrityError(ctx + ": invalid frame/joint header");
        }
        DatasetRecord rec;
        rec.poses.frame_rate = frame_rate;
        rec.poses.joint_count = joints;
        rec.poses.rotations.resize(static_cast<std::size_t>(frames) * joints * 9);
        in.read(reinterpret_cast<char*>(rec.poses.rotations.data()),
                static_cast<std::streamsize>(rec.poses.rotations.size() * sizeof(double)));
        if (!in) {
            throw IntegrityError(ctx + ": pose block truncated");
        }
        auto channels = read_pod<std::uint32_t>(in, ctx);
        if (channels < 1) {
            throw IntegrityError(ctx + ": missing sensor channels");
        }
        rec.imu.frame_rate = frame_rate;
        rec.imu.sensor_joints.resize(channels - 1);
        for (auto& j : rec.imu.sensor_joints) {
            j = read_pod<std::uint32_t>(in, ctx);
            if (j >= joints) {
                throw IntegrityError(ctx + ": sensor id out of range");
            }
        }
        if (read_pod<std::uint32_t>(in, ctx) != ImuSequence::kRootChannelId) {
            throw IntegrityError(ctx + ": root channel sentinel missing");
        }
        rec.imu.data.resize(static_cast<std::size_t>(frames) * channels * 12);
        in.read(reinterpret_cast<char*>(rec.imu.data.data()),
                static_cast<std::streamsize>(rec.imu.data.size() * sizeof(double)));
        if (!in) {
            throw IntegrityError(ctx + ": imu block truncated");
        }
        if (r > 0 && (rec.poses.joint_count != dataset.front().poses.joint_count ||
                      rec.poses.frame_rate != dataset.front().poses.frame_rate)) {
            throw FormatError(ctx + ": inconsistent joint count or frame rate");
        }
        dataset.push_back(std::move(rec));
    }
    if (in.peek() != std::ifstream::traits_type::eof()) {
        throw IntegrityError("trailing bytes after final record");
    }
    return dataset;
}

Dataset augment_with_cda(const Dataset& dataset, const SkeletalGraph& graph) {
    Dataset out;
    out.reserve(dataset.size() * 2);
    for (const auto& rec : dataset) {
        out.push_back(rec);
    }
    for (const auto& rec : dataset) {
        DatasetRecord mirrored;
        mirrored.poses = mirror_pose_sequence(rec.poses, graph);
        mirrored.imu = mirror_imu_sequence(rec.imu, graph);
        out.push_back(std::move(mirrored));
    }
    return out;
}

}  // namespace aagc
