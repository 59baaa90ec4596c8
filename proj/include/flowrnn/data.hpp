#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flowrnn/tensor.hpp"

namespace flowrnn {

enum class FlowRegime : int {
    Bubbly = 0,
    CapBubbly = 1,
    Slug = 2,
    ChurnTurbulent = 3,
    Annular = 4,
};

inline constexpr std::size_t kRegimeCount = 5;

std::string_view regime_name(FlowRegime r);
std::optional<FlowRegime> regime_from_name(std::string_view name);
FlowRegime regime_from_index(std::size_t index);  // throws if index > 4

// One void-fraction time series. Samples are instantaneous area-averaged
// void fraction in [0, 1]: 0 all water, 1 all air.
struct Signal {
    std::vector<double> samples;
    double sample_rate = 0.0;  // Hz
    FlowRegime label = FlowRegime::Bubbly;
    std::string source_id;

    double duration_s() const { return samples.size() / sample_rate; }
};

// Stochastic process parameters for one regime archetype. Every regime
// uses base level + AR(1) band-limited Gaussian fluctuation; slug adds a
// two-state plateau switching process, churn adds decaying bursts.
struct RegimeGenParams {
    double level = 0.0;          // base void fraction
    double level_jitter = 0.0;   // per-condition uniform jitter half-width
    double noise_amp = 0.0;      // stationary std of the AR(1) fluctuation
    double noise_corr_s = 0.05;  // AR(1) correlation time
    // slug only
    double high_level = 0.0;
    double high_jitter = 0.0;
    double mean_low_s = 0.0;   // mean duration of low plateaus
    double mean_high_s = 0.0;  // mean duration of high plateaus
    double transition_s = 0.0; // first-order slew time between plateaus
    // churn only
    double burst_rate_hz = 0.0;
    double burst_amp = 0.0;
    double burst_decay_s = 0.0;
};

struct GenConfig {
    double sample_rate = 100.0;  // Hz; instrument-grade rigs run ~10 kHz,
                                 // 100 Hz keeps sequences tractable
    double duration_s = 60.0;
    std::uint64_t seed = 42;
    std::array<RegimeGenParams, kRegimeCount> regimes;

    GenConfig();

    // order-independent fingerprint of every generator parameter (seed
    // excluded; the pair (seed, hash) identifies a dataset)
    std::uint64_t hash() const;
};

enum class Split { Train, Test };

struct DatasetItem {
    Signal signal;
    Split split = Split::Train;
};

struct Dataset {
    std::vector<DatasetItem> items;
    double sample_rate = 0.0;
    std::size_t seg_len = 0;  // samples per item
    std::uint64_t seed = 0;
    std::uint64_t gen_hash = 0;

    std::vector<std::size_t> indices(Split split) const;
    std::array<std::size_t, kRegimeCount> label_counts() const;
};

struct DatasetOptions {
    std::size_t conditions_per_regime = 40;
    double seg_seconds = 5.0;
    bool augment_reverse = true;
    double split_ratio = 0.8;  // fraction of conditions assigned to train
};

// ---- generation & statistics ----

Signal generate(FlowRegime regime, const GenConfig& cfg, Rng& rng);

// amplitude histogram over [0,1] with equal bins, normalized to sum 1
std::vector<double> compute_pdf(const Signal& s, std::size_t bins);
// running sum of the PDF; final entry 1
std::vector<double> compute_cpdf(const Signal& s, std::size_t bins);

// consecutive non-overlapping pieces of floor(seg_seconds*rate) samples;
// the trailing remainder is discarded; segments inherit the parent label
std::vector<Signal> segment(const Signal& s, double seg_seconds);

Signal reverse(const Signal& s);

// Generates conditions_per_regime signals per regime, segments them and
// optionally adds the reversed copy of every segment (exactly doubling
// the item count). The train/test split is made at the condition level
// so no two segments of one condition straddle the split.
Dataset build_dataset(const GenConfig& cfg, const DatasetOptions& opts, const Rng& rng);

// ---- file formats ----

// Signal file: one header line "<sample_rate> <regime> <source_id>"
// followed by one sample per line, 17 significant digits.
void save_signal(const Signal& s, const std::filesystem::path& path);
Signal load_signal(const std::filesystem::path& path);  // errors carry the line number

// Dataset directory: signals/<regime>/<source_id>.sig plus manifest.txt
// (see README for the manifest layout).
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

// three-column plot export: bin center, PDF, CPDF
void export_pdf_cpdf(const Signal& s, std::size_t bins, const std::filesystem::path& path);

std::string condition_of(std::string_view source_id);  // source id up to the segment suffix

// one length-1 vector per sample, the network input layout
std::vector<Vector> as_sequence(const Signal& s);

}  // namespace flowrnn
