#include "flowrnn/zoo.hpp"

#include <cctype>
#include <stdexcept>

#include "flowrnn/optim.hpp"

namespace flowrnn {

namespace {

[[noreturn]] void bad_descriptor(std::string_view descriptor, std::string_view token,
                                 std::string_view what) {
    throw std::invalid_argument("bad architecture descriptor \"" + std::string(descriptor) +
                                "\": " + std::string(what) + " at \"" + std::string(token) + "\"");
}

// consumes a decimal run from s; empty result means no digits
std::string_view take_digits(std::string_view& s) {
    std::size_t n = 0;
    while (n < s.size() && std::isdigit(static_cast<unsigned char>(s[n]))) ++n;
    std::string_view digits = s.substr(0, n);
    s.remove_prefix(n);
    return digits;
}

bool take_literal(std::string_view& s, std::string_view lit) {
    if (s.substr(0, lit.size()) != lit) return false;
    s.remove_prefix(lit.size());
    return true;
}

std::size_t to_count(std::string_view descriptor, std::string_view digits) {
    std::size_t value = 0;
    for (char ch : digits) {
        value = value * 10 + static_cast<std::size_t>(ch - '0');
        if (value > 1'000'000) bad_descriptor(descriptor, digits, "count out of range");
    }
    return value;
}

// body grammar: [n]LSTM-{H}H-{m}ReLU
void parse_body(std::string_view descriptor, std::string_view body, ArchSpec& spec) {
    std::string_view s = body;
    std::string_view n_digits = take_digits(s);
    if (!take_literal(s, "LSTM-")) bad_descriptor(descriptor, s, "expected \"LSTM-\"");
    spec.lstm_layers = n_digits.empty() ? 1 : to_count(descriptor, n_digits);
    if (!n_digits.empty() && spec.lstm_layers == 0)
        bad_descriptor(descriptor, n_digits, "LSTM layer count must be >= 1");

    std::string_view h_digits = take_digits(s);
    if (h_digits.empty()) bad_descriptor(descriptor, s, "expected hidden cell count");
    spec.hidden_cells = to_count(descriptor, h_digits);
    if (spec.hidden_cells == 0) bad_descriptor(descriptor, h_digits, "hidden cell count must be >= 1");
    if (!take_literal(s, "H-")) bad_descriptor(descriptor, s, "expected \"H-\"");

    std::string_view m_digits = take_digits(s);
    if (m_digits.empty()) bad_descriptor(descriptor, s, "expected ReLU layer count");
    spec.relu_layers = to_count(descriptor, m_digits);
    if (!take_literal(s, "ReLU")) bad_descriptor(descriptor, s, "expected \"ReLU\"");
    if (!s.empty()) bad_descriptor(descriptor, s, "trailing characters");
}

}  // namespace

ArchSpec parse_arch(std::string_view descriptor) {
    ArchSpec spec;
    std::string_view s = descriptor;
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    if (s.empty()) bad_descriptor(descriptor, descriptor, "empty descriptor");

    if (s.front() == '(') {
        const std::size_t close = s.find(')');
        if (close == std::string_view::npos) bad_descriptor(descriptor, s, "missing \")\"");
        parse_body(descriptor, s.substr(1, close - 1), spec);
        s.remove_prefix(close + 1);
        // "x" or the multiplication sign (UTF-8 0xC3 0x97)
        if (!take_literal(s, "x") && !take_literal(s, "\xc3\x97"))
            bad_descriptor(descriptor, s, "expected \"x<count>\" after \")\"");
        std::string_view k_digits = take_digits(s);
        if (k_digits.empty()) bad_descriptor(descriptor, s, "expected stack count");
        spec.stack_factor = to_count(descriptor, k_digits);
        if (spec.stack_factor == 0) bad_descriptor(descriptor, k_digits, "stack count must be >= 1");
        if (!s.empty()) bad_descriptor(descriptor, s, "trailing characters");
    } else {
        parse_body(descriptor, s, spec);
        spec.stack_factor = 1;
    }
    return spec;
}

std::string format_arch(const ArchSpec& spec) {
    std::string body;
    if (spec.lstm_layers != 1) body += std::to_string(spec.lstm_layers);
    body += "LSTM-" + std::to_string(spec.hidden_cells) + "H-" +
            std::to_string(spec.relu_layers) + "ReLU";
    if (spec.stack_factor > 1) return "(" + body + ")x" + std::to_string(spec.stack_factor);
    return body;
}

Network build_network(const ArchSpec& spec) {
    if (spec.lstm_layers < 1 || spec.hidden_cells < 1 || spec.stack_factor < 1)
        throw std::invalid_argument("build_network: layer, cell and stack counts must be >= 1");
    if (spec.input_dim < 1 || spec.feature_dim < 1 || spec.class_count < 1)
        throw std::invalid_argument("build_network: dimensions must be >= 1");

    Network net;
    net.class_count = spec.class_count;
    net.layers.emplace_back(
        DenseParams::zeros(spec.feature_dim, spec.input_dim, Activation::Relu));
    std::size_t width = spec.feature_dim;
    for (std::size_t block = 0; block < spec.stack_factor; ++block) {
        for (std::size_t i = 0; i < spec.lstm_layers; ++i) {
            net.layers.emplace_back(LstmParams::zeros(width, spec.hidden_cells));
            width = spec.hidden_cells;
        }
        for (std::size_t i = 0; i < spec.relu_layers; ++i) {
            net.layers.emplace_back(DenseParams::zeros(spec.feature_dim, width, Activation::Relu));
            width = spec.feature_dim;
        }
    }
    net.layers.emplace_back(DenseParams::zeros(spec.class_count, width, Activation::Linear));
    validate_network(net);
    return net;
}

Network build(const ArchSpec& spec, Rng& rng) {
    Network net = build_network(spec);
    initialize_network(net, rng);
    return net;
}

}  // namespace flowrnn
