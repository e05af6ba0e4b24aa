#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtlw/loss.hpp"
#include "mtlw/matrix.hpp"

namespace mtlw {

// ---------------------------------------------------------------------------
// Shared-encoder / per-task-head feed-forward network. One encoder stack is
// shared by all tasks; each task owns a head stack ending in a single raw
// logit. Hidden layers are rectified; the final head layer is linear (the
// sigmoid lives inside the loss).
// ---------------------------------------------------------------------------

struct ModelConfig {
    std::size_t input_dim = 32;
    std::vector<std::size_t> encoder_layers = {32, 16};  // empty = identity encoder
    std::vector<std::size_t> head_layers = {8, 1};       // identical across tasks, last must be 1
    std::size_t task_count = 5;
    std::uint64_t seed = 0;

    void validate() const;
};

struct AdamHyper {
    double learning_rate = 0.0001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const;
};

struct DenseLayer {
    Matrix w;                // out x in
    std::vector<double> b;   // out
};

using LayerStack = std::vector<DenseLayer>;

/// Gradient (or Adam moment) container mirroring the parameter layout.
struct LayerGrad {
    Matrix w;
    std::vector<double> b;
};

struct Gradients {
    std::vector<LayerGrad> encoder;
    std::vector<std::vector<LayerGrad>> heads;
};

struct AdamState {
    Gradients m;      // first moments
    Gradients v;      // second moments
    std::uint64_t step = 0;
};

struct Model {
    ModelConfig config;
    LayerStack encoder;
    std::vector<LayerStack> heads;
    AdamState adam;
};

/// Deterministic function of config.seed: weights uniform in
/// +-sqrt(6 / (fan_in + fan_out)), biases zero, Adam state zeroed.
Model init_model(const ModelConfig& config);

/// Per-task logits, shape batch x task_count. Pure function of
/// (model, batch).
Matrix forward(const Model& model, const Matrix& batch);

/// Gradients of total_loss(forward(model, batch), labels, weights) with
/// respect to every parameter. Not-coded labels contribute nothing; a task
/// with zero coded labels in the batch contributes zero gradient.
Gradients backward(const Model& model, const Matrix& batch, const LabelGrid& labels,
                   const WeightVector& weights, const std::vector<double>& pos_weights = {});

/// Standard Adam with bias correction; increments the shared step counter
/// once.
void adam_step(Model& model, const Gradients& grads, const AdamHyper& hyper);

/// All parameters in a flat, stable order: encoder layers first, then heads
/// in task order; per layer the weight matrix row-major, then the bias.
std::vector<double> flatten_parameters(const Model& model);

/// Text dump of flatten_parameters(), one value per line at 17 significant
/// digits.
void write_parameter_dump(const Model& model, const std::string& path);

}  // namespace mtlw
