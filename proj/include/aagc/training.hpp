#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aagc/data_synth.hpp"
#include "aagc/model.hpp"

namespace aagc {

// Defaults follow the reference training recipe: Adam at 1e-3 with
// exponential decay 0.96 every 2000 steps (continuous exponent), gradients
// clipped to joint norm 1, dropout 0.2/0.3.
struct TrainConfig {
    double initial_lr = 0.001;
    double decay_rate = 0.96;
    double decay_steps = 2000.0;
    double clip_norm = 1.0;
    double input_dropout = 0.2;
    double hidden_dropout = 0.3;
    std::size_t window_length = 300;  // frames (5 s at 60 Hz)
    std::size_t batch_size = 16;
    std::size_t epochs = 1;
    std::uint64_t seed = 0;
    bool llw_enabled = true;
    bool cda_enabled = true;
    double validation_fraction = 0.1;
    std::size_t threads = 0;  // 0 = hardware concurrency
};

struct OptimizerState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t step = 0;
    std::vector<std::vector<double>> first_moment;   // per parameter tensor
    std::vector<std::vector<double>> second_moment;
};

OptimizerState init_optimizer(const std::vector<TensorPtr>& params);

// Sequence loss exactly as printed: mean over frames of the per-frame sum
// over joints of lambda_n times the sum of squared feature residuals.
// weights has one entry per joint; truth holds T * N * F values.
TensorPtr llw_mse_loss(const std::vector<TensorPtr>& pred_frames, std::span<const double> truth,
                       std::span<const double> weights);

// lr = initial * rate^(step / decay_steps), continuous exponent.
double lr_schedule(std::size_t step, const TrainConfig& config);

// Joint L2 clipping: every buffer scaled by min(1, clip/||g||). Zero norm is
// left unchanged. Returns the pre-clip joint norm.
double clip_global_norm(std::vector<std::vector<double>>& gradients, double clip_norm);

// Bias-corrected Adam update; params[i] is paired with gradients[i].
void adam_step(const std::vector<TensorPtr>& params,
               const std::vector<std::vector<double>>& gradients, OptimizerState& state,
               double lr);

struct TrainLogEntry {
    std::size_t step = 0;
    std::size_t epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_loss = 0.0;  // NaN when not measured at this step
};

struct TrainResult {
    std::vector<TrainLogEntry> log;
    std::vector<double> epoch_train_loss;
    std::vector<double> epoch_val_loss;  // NaN entries when no validation split
    double max_clipped_grad_norm = 0.0;
    std::size_t train_windows = 0;
    std::size_t val_windows = 0;
    std::size_t total_steps = 0;
    std::size_t dataset_records = 0;  // after optional CDA doubling
};

// Windowed training: optional CDA doubling, non-overlapping windows,
// seeded shuffle with a 10% validation split, per-batch mean loss, global
// norm clipping, Adam with the scheduled rate. Deterministic in config.seed
// (including across thread counts). Model parameters are updated in place.
TrainResult train(ModelParams& model, const Dataset& dataset, const TrainConfig& config,
                  const SkeletalGraph& graph);

// Tab-separated records: step, epoch, lr, train_loss, val_loss ("-" when
// absent); 6 significant digits.
void write_train_log(const std::string& path, const std::vector<TrainLogEntry>& log);

}  // namespace aagc
