#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "subic/codes.hpp"
#include "subic/data.hpp"
#include "subic/error.hpp"

namespace subic {

// Floor applied to the predicted probability of the true class inside the
// classification log only; the entropy terms never need one.
inline constexpr double kProbClamp = 1e-12;

// Encoder layer (input -> relu -> block softmax) plus linear classifier.
struct ModelParams {
    BlockShape shape;
    uint32_t d = 0;            // input feature dimension
    uint32_t num_classes = 0;

    std::vector<double> w0;    // d x width, row-major
    std::vector<double> b0;    // width
    std::vector<double> w1;    // width x num_classes, row-major
    std::vector<double> b1;    // num_classes

    size_t param_count() const { return w0.size() + b0.size() + w1.size() + b1.size(); }
    void validate() const;
};

struct Hyperparams {
    double gamma = 1.0;          // weight of the per-sample code entropy penalty
    double mu = 1.0;             // weight of the batch support-entropy reward
    double learning_rate = 0.1;
    double momentum = 0.9;
    size_t batch_size = 200;
    size_t num_batches = 5000;
    uint64_t seed = 0;

    void validate() const;
};

struct ForwardTrace {
    std::vector<double> z;       // post-relu activations, width entries
    SoftCode soft;               // relaxed code
    std::vector<double> probs;   // class probabilities
};

// Uniform init in +-sqrt(6 / (fan_in + fan_out)) per matrix, biases zero,
// fully determined by the seed.
ModelParams init_params(uint32_t d, BlockShape shape, uint32_t num_classes, uint64_t seed);

// relu(w0^T x + b0); the shared first stage of forward, database encoding
// and query embedding.
std::vector<double> relu_embedding(std::span<const double> x, const ModelParams& params);

ForwardTrace forward(std::span<const double> x, const ModelParams& params);

// Cross-entropy scaled by 1/log2(C) so its scale is class-count independent.
double classification_loss(std::span<const double> probs, uint32_t label);

struct LossBreakdown {
    double total = 0;
    double cls = 0;        // mean scaled cross-entropy
    double mean_ent = 0;   // gamma-weighted normalized code entropy, in [0, gamma]
    double batch_ent = 0;  // negated mu-weighted support entropy, in [-mu, 0]
    size_t clamped = 0;    // samples whose true-class probability hit kProbClamp
};

LossBreakdown total_loss(std::span<const ForwardTrace> traces, std::span<const uint32_t> labels,
                         double gamma, double mu);

struct Gradients {
    std::vector<double> w0, b0, w1, b1;
};

Gradients zeros_like(const ModelParams& params);

// Exact gradient of total_loss for the batch, including the coupling of
// every sample through the batch-mean code and relu subgradient 0 at 0.
Gradients backward(std::span<const double> x, std::span<const uint32_t> labels,
                   const ModelParams& params, double gamma, double mu);
Gradients backward_from_traces(std::span<const double> x, std::span<const ForwardTrace> traces,
                               std::span<const uint32_t> labels, const ModelParams& params,
                               double gamma, double mu);

struct FnEval {
    double value = 0;
    bool clamped = false;
};

struct GradCheckResult {
    double max_rel_error = 0;
    size_t checked = 0;
    size_t skipped = 0;  // coordinates whose probe evaluations hit the clamp
};

// Central differences against an arbitrary objective; the network overload
// probes total_loss coordinate by coordinate.
GradCheckResult check_gradient(std::span<double> theta, const std::function<FnEval()>& f,
                               std::span<const double> analytic, double step);
GradCheckResult grad_check(const ModelParams& params, std::span<const double> x,
                           std::span<const uint32_t> labels, double gamma, double mu, double step);

// Classical momentum: v <- momentum*v - lr*g; theta <- theta + v.
void sgd_step(ModelParams& params, const Gradients& grads, Gradients& velocity,
              double learning_rate, double momentum);

struct BatchLogEntry {
    size_t batch = 0;
    double total = 0, cls = 0, mean_ent = 0, batch_ent = 0;
};

struct TrainResult {
    ModelParams params;
    std::vector<BatchLogEntry> log;
};

// Seeded mini-batch SGD over the labeled dataset; deterministic per seed on
// one platform. Aborts with the batch number if the loss stops being finite.
TrainResult train(const Dataset& dataset, BlockShape shape, const Hyperparams& hyper);

struct Classification {
    std::vector<double> scores;
    uint32_t label = 0;
};

// Linear scores of a binary code: one row gather per block plus the bias,
// identical to the dense product against the one-hot expansion.
Classification classify_code(const BinaryCode& code, std::span<const double> weights,
                             std::span<const double> bias);

// Checkpoint file: "SUBM", version u32, d/m/k/num_classes u32, then
// w0, b0, w1, b1 as float64 LE in row-major order.
void save_model(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_model(const std::filesystem::path& path);

// CSV with header batch,total,cls,mean_ent,batch_ent.
void write_training_log(const std::filesystem::path& path, std::span<const BatchLogEntry> log);

}  // namespace subic
