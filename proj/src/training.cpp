#include "aagc/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <thread>

#include "aagc/errors.hpp"

namespace aagc {

namespace {

constexpr std::uint64_t kSplitSalt = 0x5eedULL;
constexpr std::uint64_t kShuffleSalt = 0x7a11ULL;
constexpr std::uint64_t kWindowSalt = 0xd06eULL;

double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

OptimizerState init_optimizer(const std::vector<TensorPtr>& params) {
    OptimizerState state;
    state.first_moment.reserve(params.size());
    state.second_moment.reserve(params.size());
    for (const auto& p : params) {
        state.first_moment.emplace_back(p->numel(), 0.0);
        state.second_moment.emplace_back(p->numel(), 0.0);
    }
    return state;
}

TensorPtr llw_mse_loss(const std::vector<TensorPtr>& pred_frames, std::span<const double> truth,
                       std::span<const double> weights) {
    if (pred_frames.empty()) {
        throw UsageError("loss requires at least one frame");
    }
    const auto& shape = pred_frames.front()->shape;
    if (shape.size() != 2 || shape[0] != weights.size()) {
        throw ShapeError("per-frame predictions must be N x F with one weight per joint");
    }
    const std::size_t joints = shape[0];
    const std::size_t features = shape[1];
    const std::size_t frame_values = joints * features;
    if (truth.size() != pred_frames.size() * frame_values) {
        throw ShapeError("truth must hold T * N * F values");
    }

    // lambda broadcast across the feature axis, constant in the graph
    std::vector<double> lambda(frame_values);
    for (std::size_t n = 0; n < joints; ++n) {
        for (std::size_t f = 0; f < features; ++f) {
            lambda[n * features + f] = weights[n];
        }
    }
    auto lambda_t = make_tensor({joints, features}, std::move(lambda));

    TensorPtr total;
    for (std::size_t t = 0; t < pred_frames.size(); ++t) {
        if (pred_frames[t]->shape != shape) {
            throw ShapeError("prediction frames must share one shape");
        }
        std::vector<double> tv(truth.begin() + t * frame_values,
                               truth.begin() + (t + 1) * frame_values);
        auto diff = subtract(pred_frames[t], make_tensor(shape, std::move(tv)));
        auto weighted = multiply(square(diff), lambda_t);
        auto frame_loss = reduce_sum(weighted);
        total = total ? add(total, frame_loss) : frame_loss;
    }
    return scale_by_constant(total, 1.0 / static_cast<double>(pred_frames.size()));
}

double lr_schedule(std::size_t step, const TrainConfig& config) {
    const double exponent = static_cast<double>(step) / config.decay_steps;
    return config.initial_lr * std::pow(config.decay_rate, exponent);
}

double clip_global_norm(std::vector<std::vector<double>>& gradients, double clip_norm) {
    double sq = 0.0;
    for (const auto& g : gradients) {
        for (double v : g) {
            sq += v * v;
        }
    }
    const double norm = std::sqrt(sq);
    if (norm > clip_norm && norm > 0.0) {
        const double scale = clip_norm / norm;
        for (auto& g : gradients) {
            for (double& v : g) {
                v *= scale;
            }
        }
    }
    return norm;
}

void adam_step(const std::vector<TensorPtr>& params,
               const std::vector<std::vector<double>>& gradients, OptimizerState& state,
               double lr) {
    if (params.size() != gradients.size() || params.size() != state.first_moment.size()) {
        throw UsageError("optimizer state, params and gradients must align");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i]->values;
        const auto& g = gradients[i];
        auto& m = state.first_moment[i];
        auto& v = state.second_moment[i];
        if (g.size() != p.size()) {
            throw UsageError("gradient size mismatch at parameter " + std::to_string(i));
        }
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
            v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
            const double m_hat = m[k] / bc1;
            const double v_hat = v[k] / bc2;
            p[k] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
        }
    }
}

namespace {

struct WindowRef {
    std::size_t sequence = 0;
    std::size_t start = 0;
    std::size_t id = 0;  // stable id, independent of shuffling
};

struct SequenceBuffers {
    std::vector<double> inputs;  // T * N * 12
    const std::vector<double>* truth = nullptr;
};

struct WindowGrad {
    double loss = 0.0;
    std::vector<std::vector<double>> grads;  // aligned with leaf order
};

}  // namespace

TrainResult train(ModelParams& model, const Dataset& dataset, const TrainConfig& config,
                  const SkeletalGraph& graph) {
    if (dataset.empty()) {
        throw ConfigError("training dataset is empty");
    }
    if (config.epochs == 0) {
        throw ConfigError("epoch count must be positive");
    }
    if (model.config.node_count != graph.joint_count) {
        throw ConfigError("model and skeleton joint counts differ");
    }
    for (const auto& rec : dataset) {
        if (rec.poses.joint_count != graph.joint_count) {
            throw ConfigError("dataset joint count does not match the skeleton");
        }
    }

    Dataset augmented;
    const Dataset& working = config.cda_enabled
                                 ? (augmented = augment_with_cda(dataset, graph), augmented)
                                 : dataset;

    for (const auto& rec : working) {
        if (rec.poses.frame_count() < config.window_length) {
            throw ConfigError("window length " + std::to_string(config.window_length) +
                              " exceeds a sequence of " +
                              std::to_string(rec.poses.frame_count()) + " frames");
        }
    }

    const std::size_t joints = graph.joint_count;
    const std::size_t out_features = model.config.output_features;

    std::vector<SequenceBuffers> buffers(working.size());
    std::vector<WindowRef> windows;
    for (std::size_t s = 0; s < working.size(); ++s) {
        buffers[s].inputs = normalize_to_root(working[s].imu, joints);
        buffers[s].truth = &working[s].poses.rotations;
        const std::size_t frames = working[s].poses.frame_count();
        for (std::size_t start = 0; start + config.window_length <= frames;
             start += config.window_length) {
            windows.push_back({s, start, windows.size()});
        }
    }

    // seeded split: validation_fraction of windows held out
    {
        Rng split_rng(derive_seed(config.seed, kSplitSalt));
        split_rng.shuffle(windows);
    }
    const auto val_count =
        static_cast<std::size_t>(std::floor(config.validation_fraction *
                                            static_cast<double>(windows.size())));
    std::vector<WindowRef> val_windows(windows.end() - static_cast<std::ptrdiff_t>(val_count),
                                       windows.end());
    std::vector<WindowRef> train_windows(windows.begin(),
                                         windows.end() - static_cast<std::ptrdiff_t>(val_count));
    if (train_windows.empty()) {
        throw ConfigError("no training windows remain after the validation split");
    }

    std::vector<double> lambda(joints, 1.0);
    if (config.llw_enabled) {
        for (std::size_t j = 0; j < joints; ++j) {
            lambda[j] = llw_weight(graph.region[j]);
        }
    }

    // dropout rates flow from the train config into the forward passes
    model.config.input_dropout = config.input_dropout;
    model.config.hidden_dropout = config.hidden_dropout;

    std::vector<TensorPtr> leaves;
    for_each_learnable(model, [&](const TensorPtr& t) { leaves.push_back(t); });
    OptimizerState state = init_optimizer(leaves);

    const std::size_t threads =
        config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());

    auto window_frames = [&](const WindowRef& w) {
        std::vector<TensorPtr> frames(config.window_length);
        const auto& flat = buffers[w.sequence].inputs;
        const std::size_t frame_values = joints * 12;
        for (std::size_t t = 0; t < config.window_length; ++t) {
            const double* src = flat.data() + (w.start + t) * frame_values;
            frames[t] =
                make_tensor({joints, std::size_t{12}}, std::vector<double>(src, src + frame_values));
        }
        return frames;
    };
    auto window_truth = [&](const WindowRef& w) {
        const auto& truth = *buffers[w.sequence].truth;
        const std::size_t frame_values = joints * out_features;
        return std::span<const double>(truth.data() + w.start * frame_values,
                                       config.window_length * frame_values);
    };

    auto run_window = [&](const WindowRef& w, std::size_t epoch) {
        Rng rng(derive_seed(config.seed ^ kWindowSalt, epoch, w.id));
        auto out = model_forward(window_frames(w), model, /*training=*/true, rng);
        auto loss = llw_mse_loss(out, window_truth(w), lambda);
        WindowGrad wg;
        wg.loss = loss->values[0];
        auto grad_map = backward(loss, /*write_leaf_grads=*/false);
        wg.grads.reserve(leaves.size());
        for (const auto& leaf : leaves) {
            auto it = grad_map.find(leaf.get());
            if (it != grad_map.end()) {
                wg.grads.push_back(std::move(it->second));
            } else {
                wg.grads.emplace_back(leaf->numel(), 0.0);
            }
        }
        return wg;
    };

    auto validation_loss = [&]() {
        if (val_windows.empty()) {
            return nan_value();
        }
        NoGradGuard no_grad;
        Rng rng(0);  // unused at inference
        double total = 0.0;
        for (const auto& w : val_windows) {
            auto out = model_forward(window_frames(w), model, /*training=*/false, rng);
            total += llw_mse_loss(out, window_truth(w), lambda)->values[0];
        }
        return total / static_cast<double>(val_windows.size());
    };

    TrainResult result;
    result.train_windows = train_windows.size();
    result.val_windows = val_windows.size();
    result.dataset_records = working.size();

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        Rng epoch_rng(derive_seed(config.seed ^ kShuffleSalt, epoch));
        epoch_rng.shuffle(train_windows);

        double epoch_loss_sum = 0.0;
        std::size_t epoch_batches = 0;

        for (std::size_t batch_start = 0; batch_start < train_windows.size();
             batch_start += config.batch_size) {
            const std::size_t batch_end =
                std::min(batch_start + config.batch_size, train_windows.size());
            const std::size_t batch = batch_end - batch_start;

            std::vector<WindowGrad> results(batch);
            for (std::size_t offset = 0; offset < batch; offset += threads) {
                const std::size_t chunk = std::min(threads, batch - offset);
                std::vector<std::future<WindowGrad>> futures;
                futures.reserve(chunk);
                for (std::size_t k = 0; k < chunk; ++k) {
                    const WindowRef& w = train_windows[batch_start + offset + k];
                    futures.push_back(std::async(std::launch::async, run_window, w, epoch));
                }
                for (std::size_t k = 0; k < chunk; ++k) {
                    results[offset + k] = futures[k].get();
                }
            }

            // deterministic accumulation in window order, then batch mean
            std::vector<std::vector<double>> grads;
            grads.reserve(leaves.size());
            for (const auto& leaf : leaves) {
                grads.emplace_back(leaf->numel(), 0.0);
            }
            double batch_loss = 0.0;
            for (const auto& wg : results) {
                batch_loss += wg.loss;
                for (std::size_t i = 0; i < grads.size(); ++i) {
                    const auto& src = wg.grads[i];
                    auto& dst = grads[i];
                    for (std::size_t k = 0; k < dst.size(); ++k) {
                        dst[k] += src[k];
                    }
                }
            }
            batch_loss /= static_cast<double>(batch);
            const double inv_batch = 1.0 / static_cast<double>(batch);
            for (auto& g : grads) {
                for (double& v : g) {
                    v *= inv_batch;
                }
            }

            const double pre_norm = clip_global_norm(grads, config.clip_norm);
            result.max_clipped_grad_norm =
                std::max(result.max_clipped_grad_norm, std::min(pre_norm, config.clip_norm));

            const double lr = lr_schedule(state.step, config);
            const std::size_t this_step = state.step;
            adam_step(leaves, grads, state, lr);

            result.log.push_back({this_step, epoch, lr, batch_loss, nan_value()});
            epoch_loss_sum += batch_loss;
            ++epoch_batches;
        }

        const double epoch_train = epoch_loss_sum / static_cast<double>(epoch_batches);
        const double epoch_val = validation_loss();
        result.epoch_train_loss.push_back(epoch_train);
        result.epoch_val_loss.push_back(epoch_val);
        if (!result.log.empty()) {
            result.log.back().val_loss = epoch_val;
        }
    }
    result.total_steps = state.step;
    return result;
}

void write_train_log(const std::string& path, const std::vector<TrainLogEntry>& log) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot open training log for writing: " + path);
    }
    out << "step\tepoch\tlr\ttrain_loss\tval_loss\n";
    char buf[512];
    for (const auto& e : log) {
        if (std::isnan(e.val_loss)) {
            std::snprintf(buf, sizeof(buf), "%zu\t%zu\t%.6g\t%.6g\t-\n", e.step, e.epoch, e.lr,
                          e.train_loss);
        } else {
            std::snprintf(buf, sizeof(buf), "%zu\t%zu\t%.6g\t%.6g\t%.6g\n", e.step, e.epoch, e.lr,
                          e.train_loss, e.val_loss);
        }
        out << buf;
    }
    if (!out) {
        throw IoError("failed writing training log: " + path);
    }
}

}  // namespace aagc
