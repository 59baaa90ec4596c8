#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "flowrnn/data.hpp"
#include "flowrnn/nn.hpp"
#include "flowrnn/zoo.hpp"

namespace flowrnn {

struct TrainConfig {
    double initial_lr = 0.01;
    double min_lr = 0.0001;
    double lr_reduce_factor = 0.5;
    int lr_patience = 2;          // epochs without improvement before reducing
    int early_stop_patience = 3;  // epochs without improvement before stopping
    int max_epochs = 100;
    int batch_size = 32;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double clip_norm = 5.0;  // global-norm gradient clip before each step
    std::uint64_t seed = 42;
    int threads = 0;  // 0 = all cores

    void validate() const;  // throws std::invalid_argument
};

struct AdamState {
    Network m;
    Network v;
    long step = 0;

    static AdamState for_network(const Network& net);
};

struct EpochStats {
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    double lr = 0.0;
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    std::string stop_reason;  // "early-stop" or "max-epochs"
    double best_test_accuracy = 0.0;
    int best_epoch = -1;  // -1 when no epoch ran
};

// -log(probs[target]) with probs clamped to >= 1e-12 before the log
double cross_entropy(const Vector& probs, std::size_t target);

// Random orthogonal matrix via Householder QR of a Gaussian draw, sign
// corrected so Q is uniquely determined by the draw. For rectangular
// shapes the smaller-dimension Gram matrix is the identity.
Matrix orthogonal_init(std::size_t rows, std::size_t cols, Rng& rng);

// orthogonal weight matrices, zero peepholes, zero biases except the
// forget-gate bias which starts at 1
void initialize_network(Network& net, Rng& rng);

Network init_network(const ArchSpec& arch, Rng& rng);

// standard bias-corrected Adam update; throws on shape mismatch
void adam_step(Network& params, const Gradients& grads, AdamState& state, double lr,
               const TrainConfig& cfg);

double evaluate_accuracy(const Network& net, const Dataset& data, Split split, int threads);

// Shuffled minibatch Adam with per-epoch test evaluation, plateau LR
// reduction and early stopping on test accuracy; returns the parameters
// of the best-accuracy epoch.
std::pair<Network, TrainReport> train(Network net, const Dataset& data, const TrainConfig& cfg);

// ---- checkpoint container ----

struct Checkpoint {
    ArchSpec arch;
    Network net;
    std::uint64_t seed = 0;
    std::size_t window_len = 0;   // training segment length in samples
    double sample_rate = 0.0;
    int epochs_run = 0;
    int best_epoch = -1;
    double best_test_accuracy = 0.0;
    std::string stop_reason;
};

// versioned text format, hex-float parameter payload; round-trips
// bit-exactly (see README)
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace flowrnn
