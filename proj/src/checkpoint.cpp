#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "flowrnn/optim.hpp"

namespace flowrnn {

namespace {

std::string fmt_hex(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%a", x);
    return buf;
}

std::string fmt_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

double parse_hex(const std::string& token, const std::string& context) {
    const char* s = token.c_str();
    char* end = nullptr;
    const double v = std::strtod(s, &end);
    if (end != s + token.size())
        throw std::runtime_error("checkpoint: bad value \"" + token + "\" in " + context);
    return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");

    out << "flowrnn-checkpoint v1\n";
    out << "arch " << format_arch(ckpt.arch) << '\n';
    out << "input_dim " << ckpt.arch.input_dim << '\n';
    out << "feature_dim " << ckpt.arch.feature_dim << '\n';
    out << "class_count " << ckpt.arch.class_count << '\n';
    out << "window_len " << ckpt.window_len << '\n';
    out << "sample_rate " << fmt_g17(ckpt.sample_rate) << '\n';
    out << "seed " << ckpt.seed << '\n';
    out << "epochs_run " << ckpt.epochs_run << '\n';
    out << "best_epoch " << ckpt.best_epoch << '\n';
    out << "best_test_accuracy " << fmt_hex(ckpt.best_test_accuracy) << '\n';
    out << "stop_reason " << (ckpt.stop_reason.empty() ? "none" : ckpt.stop_reason) << '\n';

    std::size_t tensor_count = 0;
    for_each_tensor(ckpt.net, [&](const std::string&, const auto&) { ++tensor_count; });
    out << "tensors " << tensor_count << '\n';

    for_each_tensor(ckpt.net, [&](const std::string& name, const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, Matrix>) {
            out << "tensor " << name << ' ' << t.rows << ' ' << t.cols << '\n';
            for (std::size_t r = 0; r < t.rows; ++r) {
                for (std::size_t c = 0; c < t.cols; ++c)
                    out << (c ? " " : "") << fmt_hex(t.at(r, c));
                out << '\n';
            }
        } else {
            out << "tensor " << name << ' ' << t.size() << '\n';
            for (std::size_t i = 0; i < t.size(); ++i) out << (i ? " " : "") << fmt_hex(t[i]);
            out << '\n';
        }
    });
    out << "end\n";
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());

    std::string line;
    auto next_line = [&]() -> std::string& {
        if (!std::getline(in, line))
            throw std::runtime_error("checkpoint " + path.string() + ": unexpected end of file");
        return line;
    };
    auto field = [&](const std::string& key) -> std::string {
        next_line();
        if (line.rfind(key + " ", 0) != 0)
            throw std::runtime_error("checkpoint " + path.string() + ": expected \"" + key +
                                     "\" field, got \"" + line + "\"");
        return line.substr(key.size() + 1);
    };

    if (next_line() != "flowrnn-checkpoint v1")
        throw std::runtime_error(path.string() + " is not a flowrnn checkpoint");

    Checkpoint ckpt;
    ckpt.arch = parse_arch(field("arch"));
    ckpt.arch.input_dim = std::stoull(field("input_dim"));
    ckpt.arch.feature_dim = std::stoull(field("feature_dim"));
    ckpt.arch.class_count = std::stoull(field("class_count"));
    ckpt.window_len = std::stoull(field("window_len"));
    ckpt.sample_rate = parse_hex(field("sample_rate"), "sample_rate");
    ckpt.seed = std::stoull(field("seed"));
    ckpt.epochs_run = std::stoi(field("epochs_run"));
    ckpt.best_epoch = std::stoi(field("best_epoch"));
    ckpt.best_test_accuracy = parse_hex(field("best_test_accuracy"), "best_test_accuracy");
    ckpt.stop_reason = field("stop_reason");

    const std::size_t tensor_count = std::stoull(field("tensors"));
    ckpt.net = build_network(ckpt.arch);

    std::size_t expected = 0;
    for_each_tensor(ckpt.net, [&](const std::string&, const auto&) { ++expected; });
    if (expected != tensor_count)
        throw std::runtime_error("checkpoint " + path.string() + ": holds " +
                                 std::to_string(tensor_count) + " tensors, architecture needs " +
                                 std::to_string(expected));

    for_each_tensor(ckpt.net, [&](const std::string& name, auto& t) {
        using T = std::decay_t<decltype(t)>;
        std::istringstream header(field("tensor"));
        std::string got_name;
        header >> got_name;
        if (got_name != name)
            throw std::runtime_error("checkpoint " + path.string() + ": expected tensor " + name +
                                     ", found " + got_name);
        auto read_row = [&](double* dst, std::size_t count) {
            next_line();
            std::istringstream row(line);
            std::string token;
            for (std::size_t i = 0; i < count; ++i) {
                if (!(row >> token))
                    throw std::runtime_error("checkpoint " + path.string() + ": tensor " + name +
                                             " row too short");
                dst[i] = parse_hex(token, name);
            }
        };
        if constexpr (std::is_same_v<T, Matrix>) {
            std::size_t rows = 0, cols = 0;
            header >> rows >> cols;
            if (rows != t.rows || cols != t.cols)
                throw std::runtime_error("checkpoint " + path.string() + ": tensor " + name +
                                         " has shape " + std::to_string(rows) + "x" +
                                         std::to_string(cols) + ", expected " +
                                         std::to_string(t.rows) + "x" + std::to_string(t.cols));
            for (std::size_t r = 0; r < rows; ++r) read_row(&t.data[r * cols], cols);
        } else {
            std::size_t len = 0;
            header >> len;
            if (len != t.size())
                throw std::runtime_error("checkpoint " + path.string() + ": tensor " + name +
                                         " has length " + std::to_string(len) + ", expected " +
                                         std::to_string(t.size()));
            read_row(t.data.data(), len);
        }
    });
    if (next_line() != "end")
        throw std::runtime_error("checkpoint " + path.string() + ": missing end marker");
    validate_network(ckpt.net);
    return ckpt;
}

}  // namespace flowrnn
