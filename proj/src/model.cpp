#include "aagc/model.hpp"

#include <Eigen/SVD>
#include <cstring>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "aagc/errors.hpp"

namespace aagc {

namespace {

using json = nlohmann::json;

void check_config(const ModelConfig& c) {
    if (c.node_count < 2 || c.input_features == 0 || c.hidden_features == 0 ||
        c.output_features == 0) {
        throw ConfigError("model sizes must be positive (and at least 2 nodes)");
    }
    if (!(c.input_dropout >= 0.0 && c.input_dropout < 1.0) ||
        !(c.hidden_dropout >= 0.0 && c.hidden_dropout < 1.0)) {
        throw ConfigError("dropout rates must lie in [0,1)");
    }
}

}  // namespace

const char* to_string(CellKind kind) {
    switch (kind) {
        case CellKind::AagcLstm:
            return "aagc";
        case CellKind::GcLstm:
            return "gc";
        case CellKind::GgruStyle:
            return "ggru";
    }
    throw UsageError("invalid cell kind");
}

const char* to_string(Activation act) {
    switch (act) {
        case Activation::Identity:
            return "identity";
        case Activation::Relu:
            return "relu";
        case Activation::Tanh:
            return "tanh";
        case Activation::Sigmoid:
            return "sigmoid";
    }
    throw UsageError("invalid activation");
}

CellKind cell_kind_from_string(const std::string& s) {
    if (s == "aagc") return CellKind::AagcLstm;
    if (s == "gc") return CellKind::GcLstm;
    if (s == "ggru") return CellKind::GgruStyle;
    throw ConfigError("unknown cell kind '" + s + "'");
}

Activation activation_from_string(const std::string& s) {
    if (s == "identity") return Activation::Identity;
    if (s == "relu") return Activation::Relu;
    if (s == "tanh") return Activation::Tanh;
    if (s == "sigmoid") return Activation::Sigmoid;
    throw ConfigError("unknown activation '" + s + "'");
}

std::string config_to_json(const ModelConfig& c) {
    json j;
    j["cell"] = to_string(c.cell_kind);
    j["eq4_verbatim"] = c.eq4_verbatim;
    j["f_in"] = c.input_features;
    j["f_out"] = c.output_features;
    j["hidden"] = c.hidden_features;
    j["hidden_dropout"] = c.hidden_dropout;
    j["input_activation"] = to_string(c.input_activation);
    j["input_dropout"] = c.input_dropout;
    j["n"] = c.node_count;
    j["output_activation"] = to_string(c.output_activation);
    j["seed"] = c.seed;
    return j.dump();
}

ModelConfig config_from_json(const std::string& text) {
    ModelConfig c;
    try {
        json j = json::parse(text);
        c.cell_kind = cell_kind_from_string(j.at("cell").get<std::string>());
        c.eq4_verbatim = j.at("eq4_verbatim").get<bool>();
        c.input_features = j.at("f_in").get<std::size_t>();
        c.output_features = j.at("f_out").get<std::size_t>();
        c.hidden_features = j.at("hidden").get<std::size_t>();
        c.hidden_dropout = j.at("hidden_dropout").get<double>();
        c.input_activation = activation_from_string(j.at("input_activation").get<std::string>());
        c.input_dropout = j.at("input_dropout").get<double>();
        c.node_count = j.at("n").get<std::size_t>();
        c.output_activation = activation_from_string(j.at("output_activation").get<std::string>());
        c.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed model config: ") + e.what());
    }
    return c;
}

std::vector<double> adjacency_init_for(const ModelConfig& config) {
    if (config.node_count == kJointCount) {
        return init_adjacency(build_skeleton());
    }
    std::vector<Eigen::Vector3d> line(config.node_count);
    for (std::size_t i = 0; i < config.node_count; ++i) {
        line[i] = Eigen::Vector3d(0.0, static_cast<double>(i), 0.0);
    }
    return init_adjacency(line);
}

std::vector<double> fixed_adjacency_for(const ModelConfig& config) {
    if (config.node_count == kJointCount) {
        return normalized_tree_adjacency(build_skeleton());
    }
    std::vector<std::pair<std::size_t, std::size_t>> chain;
    for (std::size_t i = 0; i + 1 < config.node_count; ++i) {
        chain.emplace_back(i, i + 1);
    }
    return normalized_tree_adjacency(chain, config.node_count);
}

ModelParams build_model(const ModelConfig& config) {
    check_config(config);
    Rng rng(config.seed);
    auto adjacency = adjacency_init_for(config);
    std::vector<double> fixed;
    if (config.cell_kind == CellKind::GcLstm) {
        fixed = fixed_adjacency_for(config);
    }

    ModelParams p;
    p.config = config;
    p.input_layer = init_aagc_params(config.node_count, config.input_features,
                                     config.hidden_features, adjacency, rng);
    auto make_cell = [&]() {
        return init_cell(config.cell_kind, config.node_count, config.hidden_features,
                         config.hidden_features, adjacency, fixed, rng);
    };
    p.layer1_fwd = make_cell();
    p.layer1_bwd = make_cell();
    p.layer2_fwd = make_cell();
    p.layer2_bwd = make_cell();
    p.output_layer = init_aagc_params(config.node_count, config.hidden_features,
                                      config.output_features, adjacency, rng);
    return p;
}

void for_each_learnable(const ModelParams& params,
                        const std::function<void(const TensorPtr&)>& fn) {
    for_each_learnable(params.input_layer, fn);
    for_each_learnable(params.layer1_fwd, fn);
    for_each_learnable(params.layer1_bwd, fn);
    for_each_learnable(params.layer2_fwd, fn);
    for_each_learnable(params.layer2_bwd, fn);
    for_each_learnable(params.output_layer, fn);
}

std::size_t count_parameters(const ModelParams& params) {
    std::size_t n = 0;
    for_each_learnable(params, [&](const TensorPtr& t) { n += t->numel(); });
    return n;
}

std::size_t network_param_count(const ModelConfig& c) {
    return aagc_layer_param_count(c.node_count, c.input_features, c.hidden_features) +
           4 * cell_param_count(c.cell_kind, c.node_count, c.hidden_features, c.hidden_features) +
           aagc_layer_param_count(c.node_count, c.hidden_features, c.output_features);
}

std::vector<TensorPtr> model_forward(const std::vector<TensorPtr>& frames,
                                     const ModelParams& params, bool training, Rng& rng) {
    if (frames.empty()) {
        throw UsageError("model forward requires at least one frame");
    }
    const auto& c = params.config;
    for (const auto& f : frames) {
        if (f->shape != std::vector<std::size_t>{c.node_count, c.input_features}) {
            throw ShapeError("input frames must be " + std::to_string(c.node_count) + "x" +
                             std::to_string(c.input_features));
        }
    }

    StepOptions opt;
    opt.input_dropout = c.input_dropout;
    opt.hidden_dropout = c.hidden_dropout;
    opt.training = training;
    opt.eq4_verbatim = c.eq4_verbatim;

    std::vector<TensorPtr> seq(frames.size());
    for (std::size_t t = 0; t < frames.size(); ++t) {
        seq[t] = aagc_forward(frames[t], params.input_layer, c.input_activation);
    }
    seq = bidirectional_run(seq, params.layer1_fwd, params.layer1_bwd, opt, rng);
    seq = bidirectional_run(seq, params.layer2_fwd, params.layer2_bwd, opt, rng);
    for (auto& frame : seq) {
        frame = aagc_forward(frame, params.output_layer, c.output_activation);
    }
    return seq;
}

std::vector<double> model_forward_values(std::span<const double> frames, std::size_t frame_count,
                                         const ModelParams& params) {
    const auto& c = params.config;
    const std::size_t frame_values = c.node_count * c.input_features;
    if (frame_count == 0 || frames.size() != frame_count * frame_values) {
        throw ShapeError("flat input must hold frame_count * N * F_in values");
    }
    NoGradGuard no_grad;
    Rng rng(0);  // unused at inference
    std::vector<TensorPtr> in(frame_count);
    for (std::size_t t = 0; t < frame_count; ++t) {
        std::vector<double> v(frames.begin() + t * frame_values,
                              frames.begin() + (t + 1) * frame_values);
        in[t] = make_tensor({c.node_count, c.input_features}, std::move(v));
    }
    auto out = model_forward(in, params, false, rng);
    std::vector<double> flat;
    flat.reserve(frame_count * c.node_count * c.output_features);
    for (const auto& frame : out) {
        flat.insert(flat.end(), frame->values.begin(), frame->values.end());
    }
    return flat;
}

void project_to_rotation(const double* raw9, double* out9) {
    RowMat3 m;
    std::memcpy(m.data(), raw9, 9 * sizeof(double));
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (!(sv(0) > 0.0) || sv(2) <= sv(0) * 1e-12) {
        std::cerr << "project_to_rotation: rank-deficient input, falling back to identity\n";
        RowMat3 id = RowMat3::Identity();
        std::memcpy(out9, id.data(), 9 * sizeof(double));
        return;
    }
    Eigen::Matrix3d u = svd.matrixU();
    Eigen::Matrix3d v = svd.matrixV();
    double d = (u * v.transpose()).determinant();
    Eigen::Vector3d correction(1.0, 1.0, d < 0.0 ? -1.0 : 1.0);
    RowMat3 r = u * correction.asDiagonal() * v.transpose();
    std::memcpy(out9, r.data(), 9 * sizeof(double));
}

MotionSequence project_to_rotations(std::span<const double> raw, std::size_t frame_count,
                                    std::size_t joint_count, double frame_rate) {
    if (raw.size() != frame_count * joint_count * 9) {
        throw ShapeError("raw predictions must hold T * N * 9 values");
    }
    MotionSequence seq;
    seq.frame_rate = frame_rate;
    seq.joint_count = joint_count;
    seq.rotations.resize(raw.size());
    for (std::size_t i = 0; i < frame_count * joint_count; ++i) {
        project_to_rotation(raw.data() + i * 9, seq.rotations.data() + i * 9);
    }
    return seq;
}

namespace {

constexpr char kMagic[4] = {'A', 'A', 'G', 'C'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) {
        throw IntegrityError("checkpoint truncated");
    }
    return value;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open checkpoint for writing: " + path);
    }
    out.write(kMagic, 4);
    write_pod(out, kVersion);
    const std::string config = config_to_json(params.config);
    write_pod(out, static_cast<std::uint32_t>(config.size()));
    out.write(config.data(), static_cast<std::streamsize>(config.size()));
    for_each_learnable(params, [&](const TensorPtr& t) {
        write_pod(out, static_cast<std::uint32_t>(t->shape.size()));
        for (std::size_t d : t->shape) {
            write_pod(out, static_cast<std::uint64_t>(d));
        }
        out.write(reinterpret_cast<const char*>(t->values.data()),
                  static_cast<std::streamsize>(t->values.size() * sizeof(double)));
    });
    if (!out) {
        throw IoError("failed writing checkpoint: " + path);
    }
}

ModelParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open checkpoint: " + path);
    }
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError("not a checkpoint file: " + path);
    }
    auto version = read_pod<std::uint32_t>(in);
    if (version != kVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version));
    }
    auto config_len = read_pod<std::uint32_t>(in);
    std::string config_text(config_len, '\0');
    in.read(config_text.data(), config_len);
    if (!in) {
        throw IntegrityError("checkpoint truncated inside config");
    }
    ModelParams params = build_model(config_from_json(config_text));
    for_each_learnable(params, [&](const TensorPtr& t) {
        auto rank = read_pod<std::uint32_t>(in);
        if (rank != t->shape.size()) {
            throw IntegrityError("checkpoint tensor rank mismatch");
        }
        for (std::size_t d : t->shape) {
            if (read_pod<std::uint64_t>(in) != d) {
                throw IntegrityError("checkpoint tensor shape mismatch");
            }
        }
        in.read(reinterpret_cast<char*>(t->values.data()),
                static_cast<std::streamsize>(t->values.size() * sizeof(double)));
        if (!in) {
            throw IntegrityError("checkpoint truncated inside tensor data");
        }
    });
    if (in.peek() != std::ifstream::traits_type::eof()) {
        throw IntegrityError("trailing bytes after checkpoint payload");
    }
    return params;
}

}  // namespace aagc
