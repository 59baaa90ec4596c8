#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "flowrnn/data.hpp"
#include "flowrnn/optim.hpp"
#include "flowrnn/zoo.hpp"

namespace flowrnn {

struct BenchRow {
    std::string key;  // architecture descriptor or segment length like "5s"
    double accuracy_pct = 0.0;
    double relative_time = 0.0;
    double inference_s = 0.0;  // median wall time for one pass over the test set
    int epochs_trained = 0;
};

struct BenchReport {
    std::vector<BenchRow> rows;
    std::string baseline_key;
    std::uint64_t dataset_seed = 0;
    std::uint64_t genconfig_hash = 0;
};

struct BenchOptions {
    int timing_reps = 5;  // timed repetitions after the discarded warm-up
    std::string baseline = "LSTM-128H-2ReLU";
};

// median wall-clock seconds for one forward pass over the given items;
// reps timed repetitions after one discarded warm-up pass, single thread
double time_inference(const Network& net, const Dataset& data, Split split, int reps);

// fills relative_time as row.inference_s / baseline.inference_s;
// throws if the baseline key is missing
void normalize_relative_time(BenchReport& report);

// Trains a fresh instance of arch per segment length (shared base seed)
// and records test accuracy and prediction time. Rows keep the order of
// `lengths`; the first length is the timing baseline.
BenchReport sensitivity_study(const std::vector<double>& lengths_s, const ArchSpec& arch,
                              const GenConfig& gen, DatasetOptions data_opts,
                              const TrainConfig& train_cfg, const BenchOptions& opts = {});

// Trains every descriptor on one identical dataset/split and reports
// accuracy plus prediction time relative to opts.baseline.
BenchReport architecture_study(const std::vector<std::string>& descriptors, const GenConfig& gen,
                               const DatasetOptions& data_opts, const TrainConfig& train_cfg,
                               std::size_t feature_dim = 64, const BenchOptions& opts = {});

// writes <base>.txt (aligned table) and <base>.csv (machine-readable)
void emit_report(const BenchReport& report, const std::filesystem::path& base);

// reads a .csv written by emit_report back into an equal report
BenchReport parse_report(const std::filesystem::path& csv_path);

// the eight reference descriptors of the architecture comparison
const std::vector<std::string>& reference_descriptors();

}  // namespace flowrnn
