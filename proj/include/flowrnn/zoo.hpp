#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "flowrnn/nn.hpp"
#include "flowrnn/tensor.hpp"

namespace flowrnn {

// Parsed "[n]LSTM-{H}H-{m}ReLU" descriptor, optionally wrapped in
// "(...)xk" for k stacked copies of the block.
struct ArchSpec {
    std::size_t lstm_layers = 1;   // n, adjacent LSTM layers per block
    std::size_t hidden_cells = 128;  // H
    std::size_t relu_layers = 2;   // m, dense-ReLU layers per block
    std::size_t stack_factor = 1;  // k
    std::size_t input_dim = 1;
    std::size_t feature_dim = 64;  // width of every dense-ReLU layer
    std::size_t class_count = 5;
};

// throws std::invalid_argument quoting the offending token
ArchSpec parse_arch(std::string_view descriptor);

// canonical form: "LSTM-128H-2ReLU", "3LSTM-128H-2ReLU", "(LSTM-128H-2ReLU)x2"
std::string format_arch(const ArchSpec& spec);

// zero-parameter network with the layer layout
//   dense-ReLU(input->feature), then k blocks of
//   [n x LSTM(H), m x dense-ReLU(feature)], then linear head(class_count)
Network build_network(const ArchSpec& spec);

// build_network followed by the standard initialization (orthogonal
// weights, forget bias 1, see optim)
Network build(const ArchSpec& spec, Rng& rng);

}  // namespace flowrnn
