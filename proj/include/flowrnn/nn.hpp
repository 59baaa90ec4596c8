#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "flowrnn/tensor.hpp"

namespace flowrnn {

enum class Activation { Relu, Linear };

// Peephole LSTM cell parameters. Gate order throughout: input, forget,
// candidate, output. Peephole weights are diagonal and stored as vectors.
struct LstmParams {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    Matrix W_xi, W_hi;
    Matrix W_xf, W_hf;
    Matrix W_xc, W_hc;
    Matrix W_xo, W_ho;
    Vector w_ci, w_cf, w_co;
    Vector b_i, b_f, b_c, b_o;

    static LstmParams zeros(std::size_t input_dim, std::size_t hidden_dim);
};

struct CellState {
    Vector h;
    Vector c;

    static CellState zeros(std::size_t hidden_dim);
};

struct LstmGates {
    Vector i, f, a, o;
};

struct DenseParams {
    Matrix W;
    Vector b;
    Activation activation = Activation::Relu;

    static DenseParams zeros(std::size_t out_dim, std::size_t in_dim, Activation act);
    std::size_t out_dim() const { return W.rows; }
    std::size_t in_dim() const { return W.cols; }
};

using Layer = std::variant<DenseParams, LstmParams>;

// A network is an ordered layer list ending in a linear dense head whose
// output width equals class_count; softmax is applied on top of the head.
// Layers up to and including the last LSTM run on the full sequence, the
// final hidden vector is then fed through the remaining dense layers.
struct Network {
    std::vector<Layer> layers;
    std::size_t class_count = 0;

    std::size_t input_dim() const;
};

// throws std::invalid_argument if layer dimensions do not chain, the head
// is not linear with class_count outputs, or no LSTM layer is present
void validate_network(const Network& net);

std::size_t param_count(const Network& net);

// deterministic enumeration of every parameter tensor; f is called with
// (name, Matrix&) or (name, Vector&)
template <typename Net, typename F>
void for_each_tensor(Net& net, F&& f) {
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        const std::string p = "layer" + std::to_string(li) + ".";
        auto& layer = net.layers[li];
        if (auto* d = std::get_if<DenseParams>(&layer)) {
            f(p + "W", d->W);
            f(p + "b", d->b);
        } else {
            auto& l = std::get<LstmParams>(layer);
            f(p + "W_xi", l.W_xi);
            f(p + "W_hi", l.W_hi);
            f(p + "W_xf", l.W_xf);
            f(p + "W_hf", l.W_hf);
            f(p + "W_xc", l.W_xc);
            f(p + "W_hc", l.W_hc);
            f(p + "W_xo", l.W_xo);
            f(p + "W_ho", l.W_ho);
            f(p + "w_ci", l.w_ci);
            f(p + "w_cf", l.w_cf);
            f(p + "w_co", l.w_co);
            f(p + "b_i", l.b_i);
            f(p + "b_f", l.b_f);
            f(p + "b_c", l.b_c);
            f(p + "b_o", l.b_o);
        }
    }
}

// gradients reuse the Network layout so shapes mirror parameters exactly
using Gradients = Network;

Network zeros_like(const Network& net);
void accumulate(Network& acc, const Network& delta);
void scale_params(Network& net, double factor);
double global_norm(const Network& grads);
// scales gradients down so the global L2 norm does not exceed max_norm
void clip_by_global_norm(Network& grads, double max_norm);

// ---- forward/backward tapes ----

struct DenseTape {
    std::vector<Vector> inputs;
    std::vector<Vector> preacts;
};

struct LstmTape {
    std::vector<Vector> inputs;
    std::vector<LstmGates> gates;
    std::vector<Vector> cells;
    std::vector<Vector> hiddens;
};

using LayerTape = std::variant<DenseTape, LstmTape>;

struct ForwardTape {
    std::vector<LayerTape> layers;
    std::size_t seq_len = 0;
    std::size_t last_lstm = 0;  // index of the last LSTM layer
    Vector probs;
};

// ---- operations ----

// One step of the peephole cell:
//   i = sig(W_xi x + W_hi h_prev + w_ci.c_prev + b_i)
//   f = sig(W_xf x + W_hf h_prev + w_cf.c_prev + b_f)
//   a = tanh(W_xc x + W_hc h_prev + b_c)
//   c = f.c_prev + i.a
//   o = sig(W_xo x + W_ho h_prev + w_co.c + b_o)
//   h = o.tanh(c)
std::pair<CellState, LstmGates> lstm_cell_forward(const Vector& x, const CellState& prev,
                                                  const LstmParams& p);

std::pair<std::vector<Vector>, LstmTape> lstm_layer_forward(const std::vector<Vector>& seq,
                                                            const LstmParams& p,
                                                            const CellState& init);

std::pair<Vector, ForwardTape> network_forward(const Network& net, const std::vector<Vector>& seq);

struct Prediction {
    std::size_t label = 0;  // argmax class index, ties broken toward index 0
    Vector probs;
};

Prediction predict(const Network& net, const std::vector<Vector>& seq);

// BPTT for the categorical cross-entropy loss -log probs[target].
// The tape must come from network_forward on the same network.
Gradients network_backward(const Network& net, const ForwardTape& tape, std::size_t target);

}  // namespace flowrnn
