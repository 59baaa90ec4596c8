#include "flowrnn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace flowrnn {

namespace {

constexpr std::array<std::string_view, kRegimeCount> kRegimeNames = {
    "bubbly", "cap_bubbly", "slug", "churn_turbulent", "annular"};

std::string fmt_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

bool parse_double(std::string_view s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

}  // namespace

std::string_view regime_name(FlowRegime r) {
    return kRegimeNames[static_cast<std::size_t>(r)];
}

std::optional<FlowRegime> regime_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kRegimeCount; ++i)
        if (kRegimeNames[i] == name) return static_cast<FlowRegime>(i);
    return std::nullopt;
}

FlowRegime regime_from_index(std::size_t index) {
    if (index >= kRegimeCount)
        throw std::invalid_argument("regime_from_index: index " + std::to_string(index) +
                                    " out of range (5 regimes)");
    return static_cast<FlowRegime>(index);
}

GenConfig::GenConfig() {
    auto& b = regimes[static_cast<std::size_t>(FlowRegime::Bubbly)];
    b.level = 0.10;
    b.level_jitter = 0.04;
    b.noise_amp = 0.030;
    b.noise_corr_s = 0.05;

    auto& cb = regimes[static_cast<std::size_t>(FlowRegime::CapBubbly)];
    cb.level = 0.30;
    cb.level_jitter = 0.05;
    cb.noise_amp = 0.055;
    cb.noise_corr_s = 0.08;

    auto& sl = regimes[static_cast<std::size_t>(FlowRegime::Slug)];
    sl.level = 0.16;  // liquid-slug plateau
    sl.level_jitter = 0.03;
    sl.noise_amp = 0.035;
    sl.noise_corr_s = 0.04;
    sl.high_level = 0.68;  // Taylor-bubble plateau
    sl.high_jitter = 0.05;
    sl.mean_low_s = 0.8;
    sl.mean_high_s = 0.6;
    sl.transition_s = 0.05;

    auto& ch = regimes[static_cast<std::size_t>(FlowRegime::ChurnTurbulent)];
    ch.level = 0.58;
    ch.level_jitter = 0.06;
    ch.noise_amp = 0.13;
    ch.noise_corr_s = 0.12;
    ch.burst_rate_hz = 1.2;
    ch.burst_amp = 0.22;
    ch.burst_decay_s = 0.15;

    auto& an = regimes[static_cast<std::size_t>(FlowRegime::Annular)];
    an.level = 0.88;
    an.level_jitter = 0.03;
    an.noise_amp = 0.028;
    an.noise_corr_s = 0.05;
}

std::uint64_t GenConfig::hash() const {
    std::string canon = fmt_g17(sample_rate) + "|" + fmt_g17(duration_s);
    for (const auto& p : regimes) {
        for (double field : {p.level, p.level_jitter, p.noise_amp, p.noise_corr_s, p.high_level,
                             p.high_jitter, p.mean_low_s, p.mean_high_s, p.transition_s,
                             p.burst_rate_hz, p.burst_amp, p.burst_decay_s})
            canon += "|" + fmt_g17(field);
    }
    return fnv1a(canon);
}

std::vector<std::size_t> Dataset::indices(Split split) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < items.size(); ++i)
        if (items[i].split == split) out.push_back(i);
    return out;
}

std::array<std::size_t, kRegimeCount> Dataset::label_counts() const {
    std::array<std::size_t, kRegimeCount> counts{};
    for (const auto& item : items) counts[static_cast<std::size_t>(item.signal.label)]++;
    return counts;
}

Signal generate(FlowRegime regime, const GenConfig& cfg, Rng& rng) {
    if (cfg.sample_rate <= 0.0 || cfg.duration_s <= 0.0)
        throw std::invalid_argument("generate: sample_rate and duration must be positive");
    const RegimeGenParams& p = cfg.regimes[static_cast<std::size_t>(regime)];
    const std::size_t n = static_cast<std::size_t>(std::llround(cfg.duration_s * cfg.sample_rate));
    const double dt = 1.0 / cfg.sample_rate;

    // condition-level parameter draw
    const double level = p.level + rng.uniform(-p.level_jitter, p.level_jitter);
    const double amp = p.noise_amp * rng.uniform(0.8, 1.2);
    const double rho = std::exp(-dt / p.noise_corr_s);
    const double innovation = amp * std::sqrt(1.0 - rho * rho);

    Signal sig;
    sig.sample_rate = cfg.sample_rate;
    sig.label = regime;
    sig.samples.reserve(n);

    double noise = amp * rng.normal();

    if (regime == FlowRegime::Slug) {
        const double high = p.high_level + rng.uniform(-p.high_jitter, p.high_jitter);
        const double slew = 1.0 - std::exp(-dt / p.transition_s);
        bool in_high = rng.uniform() < 0.5;
        auto plateau_samples = [&](double mean_s) {
            const double d = -mean_s * std::log(1.0 - rng.uniform());
            return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(d / dt)));
        };
        std::size_t remaining = plateau_samples(in_high ? p.mean_high_s : p.mean_low_s);
        double base = in_high ? high : level;
        for (std::size_t t = 0; t < n; ++t) {
            if (remaining == 0) {
                in_high = !in_high;
                remaining = plateau_samples(in_high ? p.mean_high_s : p.mean_low_s);
            }
            --remaining;
            base += ((in_high ? high : level) - base) * slew;
            noise = rho * noise + innovation * rng.normal();
            sig.samples.push_back(clamp01(base + noise));
        }
    } else if (regime == FlowRegime::ChurnTurbulent) {
        const double burst_decay = std::exp(-dt / p.burst_decay_s);
        const double burst_prob = p.burst_rate_hz * dt;
        double burst = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            burst *= burst_decay;
            if (rng.uniform() < burst_prob) {
                const double mag = p.burst_amp * rng.uniform(0.6, 1.4);
                burst += rng.uniform() < 0.5 ? -mag : mag;
            }
            noise = rho * noise + innovation * rng.normal();
            sig.samples.push_back(clamp01(level + burst + noise));
        }
    } else {
        for (std::size_t t = 0; t < n; ++t) {
            noise = rho * noise + innovation * rng.normal();
            sig.samples.push_back(clamp01(level + noise));
        }
    }
    return sig;
}

std::vector<double> compute_pdf(const Signal& s, std::size_t bins) {
    if (bins < 2) throw std::invalid_argument("compute_pdf: need at least 2 bins");
    if (s.samples.empty()) throw std::invalid_argument("compute_pdf: empty signal");
    std::vector<double> pdf(bins, 0.0);
    for (double x : s.samples) {
        auto idx = static_cast<std::size_t>(clamp01(x) * static_cast<double>(bins));
        if (idx >= bins) idx = bins - 1;  // x == 1.0 lands in the last bin
        pdf[idx] += 1.0;
    }
    const double inv = 1.0 / static_cast<double>(s.samples.size());
    for (double& v : pdf) v *= inv;
    return pdf;
}

std::vector<double> compute_cpdf(const Signal& s, std::size_t bins) {
    std::vector<double> cpdf = compute_pdf(s, bins);
    for (std::size_t i = 1; i < cpdf.size(); ++i) cpdf[i] += cpdf[i - 1];
    return cpdf;
}

std::vector<Signal> segment(const Signal& s, double seg_seconds) {
    const auto seg_len = static_cast<std::size_t>(seg_seconds * s.sample_rate);
    if (seg_len < 1) throw std::invalid_argument("segment: segment shorter than one sample");
    if (seg_len > s.samples.size())
        throw std::invalid_argument("segment: segment of " + std::to_string(seg_len) +
                                    " samples longer than signal of " +
                                    std::to_string(s.samples.size()));
    const std::size_t count = s.samples.size() / seg_len;
    std::vector<Signal> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Signal piece;
        piece.sample_rate = s.sample_rate;
        piece.label = s.label;
        char suffix[16];
        std::snprintf(suffix, sizeof(suffix), "-s%03zu", i);
        piece.source_id = s.source_id + suffix;
        piece.samples.assign(s.samples.begin() + static_cast<std::ptrdiff_t>(i * seg_len),
                             s.samples.begin() + static_cast<std::ptrdiff_t>((i + 1) * seg_len));
        out.push_back(std::move(piece));
    }
    return out;
}

Signal reverse(const Signal& s) {
    if (s.samples.empty()) throw std::invalid_argument("reverse: empty signal");
    Signal out = s;
    std::reverse(out.samples.begin(), out.samples.end());
    out.source_id += "r";
    return out;
}

std::string condition_of(std::string_view source_id) {
    const std::size_t pos = source_id.rfind("-s");
    return std::string(source_id.substr(0, pos));  // npos keeps the whole id
}

std::vector<Vector> as_sequence(const Signal& s) {
    std::vector<Vector> seq;
    seq.reserve(s.samples.size());
    for (double x : s.samples) seq.push_back(Vector{x});
    return seq;
}

Dataset build_dataset(const GenConfig& cfg, const DatasetOptions& opts, const Rng& rng) {
    if (!(opts.split_ratio > 0.0 && opts.split_ratio < 1.0))
        throw std::invalid_argument("build_dataset: split_ratio must be in (0,1)");
    if (opts.conditions_per_regime < 2)
        throw std::invalid_argument("build_dataset: need at least 2 conditions per regime");

    const std::size_t conditions = opts.conditions_per_regime;
    const auto n_train = static_cast<std::size_t>(opts.split_ratio * static_cast<double>(conditions));
    if (n_train == 0 || n_train == conditions)
        throw std::invalid_argument("build_dataset: split ratio " + std::to_string(opts.split_ratio) +
                                    " leaves one side of the split empty");

    Dataset ds;
    ds.sample_rate = cfg.sample_rate;
    ds.seg_len = static_cast<std::size_t>(opts.seg_seconds * cfg.sample_rate);
    ds.seed = rng.seed();
    ds.gen_hash = cfg.hash();

    for (std::size_t r = 0; r < kRegimeCount; ++r) {
        const FlowRegime regime = static_cast<FlowRegime>(r);

        std::vector<std::size_t> order(conditions);
        for (std::size_t c = 0; c < conditions; ++c) order[c] = c;
        Rng split_rng = rng.derive(7'000'000 + r);
        split_rng.shuffle(order);
        std::vector<bool> is_train(conditions, false);
        for (std::size_t i = 0; i < n_train; ++i) is_train[order[i]] = true;

        for (std::size_t c = 0; c < conditions; ++c) {
            // each condition owns an independent stream, so generation is
            // order- and parallelism-invariant
            Rng crng = rng.derive(r * 100'003 + c);
            Signal sig = generate(regime, cfg, crng);
            char id[64];
            std::snprintf(id, sizeof(id), "%s-c%03zu", std::string(regime_name(regime)).c_str(), c);
            sig.source_id = id;

            const Split split = is_train[c] ? Split::Train : Split::Test;
            for (Signal& piece : segment(sig, opts.seg_seconds)) {
                if (opts.augment_reverse) {
                    Signal rev = reverse(piece);
                    ds.items.push_back({std::move(piece), split});
                    ds.items.push_back({std::move(rev), split});
                } else {
                    ds.items.push_back({std::move(piece), split});
                }
            }
        }
    }
    return ds;
}

// ---- file I/O ----

void save_signal(const Signal& s, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << fmt_g17(s.sample_rate) << ' ' << regime_name(s.label) << ' ' << s.source_id << '\n';
    for (double x : s.samples) out << fmt_g17(x) << '\n';
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

Signal load_signal(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    auto fail = [&](std::size_t line, const std::string& what) -> std::runtime_error {
        return std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + what);
    };

    Signal s;
    std::string line;
    if (!std::getline(in, line)) throw fail(1, "missing header line");
    {
        const std::size_t sp1 = line.find(' ');
        const std::size_t sp2 = sp1 == std::string::npos ? std::string::npos : line.find(' ', sp1 + 1);
        if (sp2 == std::string::npos)
            throw fail(1, "header must be \"<sample_rate> <regime> <source_id>\"");
        if (!parse_double(std::string_view(line).substr(0, sp1), s.sample_rate) ||
            s.sample_rate <= 0.0)
            throw fail(1, "bad sample rate \"" + line.substr(0, sp1) + "\"");
        const std::string name = line.substr(sp1 + 1, sp2 - sp1 - 1);
        const auto regime = regime_from_name(name);
        if (!regime) throw fail(1, "unknown flow regime \"" + name + "\"");
        s.label = *regime;
        s.source_id = line.substr(sp2 + 1);
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        double x = 0.0;
        if (!parse_double(line, x)) throw fail(lineno, "not a number: \"" + line + "\"");
        if (!(x >= 0.0 && x <= 1.0))
            throw fail(lineno, "sample " + line + " outside [0,1]");
        s.samples.push_back(x);
    }
    if (s.samples.empty()) throw fail(lineno, "signal has no samples");
    return s;
}

namespace {

std::filesystem::path item_relpath(const Signal& s) {
    return std::filesystem::path("signals") / std::string(regime_name(s.label)) /
           (s.source_id + ".sig");
}

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "signals");
    for (std::size_t r = 0; r < kRegimeCount; ++r)
        fs::create_directories(dir / "signals" / std::string(kRegimeNames[r]));

    std::ofstream manifest(dir / "manifest.txt");
    if (!manifest) throw std::runtime_error("cannot open manifest in " + dir.string());
    manifest << "flowrnn-manifest v1\n";
    manifest << "sample_rate " << fmt_g17(ds.sample_rate) << '\n';
    manifest << "seg_len " << ds.seg_len << '\n';
    manifest << "seed " << ds.seed << '\n';
    char hex[24];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(ds.gen_hash));
    manifest << "gen_hash " << hex << '\n';
    manifest << "items " << ds.items.size() << '\n';
    for (const auto& item : ds.items) {
        const auto rel = item_relpath(item.signal);
        save_signal(item.signal, dir / rel);
        manifest << rel.generic_string() << ' ' << regime_name(item.signal.label) << ' '
                 << (item.split == Split::Train ? "train" : "test") << '\n';
    }
    if (!manifest) throw std::runtime_error("write failed for manifest in " + dir.string());
}

Dataset load_dataset(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.txt";
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot open " + manifest_path.string());
    auto fail = [&](std::size_t line, const std::string& what) -> std::runtime_error {
        return std::runtime_error(manifest_path.string() + ":" + std::to_string(line) + ": " + what);
    };

    std::string line;
    std::size_t lineno = 0;
    auto next_line = [&]() -> std::string& {
        if (!std::getline(in, line)) throw fail(lineno + 1, "unexpected end of manifest");
        ++lineno;
        return line;
    };
    if (next_line() != "flowrnn-manifest v1") throw fail(lineno, "not a flowrnn manifest");

    Dataset ds;
    std::size_t item_count = 0;
    auto expect_field = [&](const std::string& key) -> std::string {
        next_line();
        if (line.rfind(key + " ", 0) != 0) throw fail(lineno, "expected \"" + key + "\" field");
        return line.substr(key.size() + 1);
    };
    if (!parse_double(expect_field("sample_rate"), ds.sample_rate))
        throw fail(lineno, "bad sample_rate");
    ds.seg_len = std::stoull(expect_field("seg_len"));
    ds.seed = std::stoull(expect_field("seed"));
    ds.gen_hash = std::stoull(expect_field("gen_hash"), nullptr, 16);
    item_count = std::stoull(expect_field("items"));

    ds.items.reserve(item_count);
    for (std::size_t i = 0; i < item_count; ++i) {
        next_line();
        const std::size_t sp1 = line.find(' ');
        const std::size_t sp2 = sp1 == std::string::npos ? std::string::npos : line.find(' ', sp1 + 1);
        if (sp2 == std::string::npos) throw fail(lineno, "expected \"<path> <regime> <split>\"");
        const std::string rel = line.substr(0, sp1);
        const std::string name = line.substr(sp1 + 1, sp2 - sp1 - 1);
        const std::string split_tag = line.substr(sp2 + 1);
        if (split_tag != "train" && split_tag != "test")
            throw fail(lineno, "unknown split tag \"" + split_tag + "\"");
        if (!regime_from_name(name)) throw fail(lineno, "unknown flow regime \"" + name + "\"");

        DatasetItem item;
        item.signal = load_signal(dir / rel);
        if (regime_name(item.signal.label) != name)
            throw fail(lineno, "label in " + rel + " does not match manifest");
        item.split = split_tag == "train" ? Split::Train : Split::Test;
        ds.items.push_back(std::move(item));
    }
    return ds;
}

void export_pdf_cpdf(const Signal& s, std::size_t bins, const std::filesystem::path& path) {
    const std::vector<double> pdf = compute_pdf(s, bins);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "# bin_center pdf cpdf\n";
    double cum = 0.0;
    for (std::size_t i = 0; i < bins; ++i) {
        cum += pdf[i];
        const double center = (static_cast<double>(i) + 0.5) / static_cast<double>(bins);
        out << fmt_g17(center) << ' ' << fmt_g17(pdf[i]) << ' ' << fmt_g17(cum) << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace flowrnn
