#include "flowrnn/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace flowrnn {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

std::size_t layer_out_dim(const Layer& layer) {
    if (auto* d = std::get_if<DenseParams>(&layer)) return d->out_dim();
    return std::get<LstmParams>(layer).hidden_dim;
}

std::size_t layer_in_dim(const Layer& layer) {
    if (auto* d = std::get_if<DenseParams>(&layer)) return d->in_dim();
    return std::get<LstmParams>(layer).input_dim;
}

void check_lstm_shapes(const LstmParams& p) {
    const std::size_t in = p.input_dim, hid = p.hidden_dim;
    auto mat_ok = [&](const Matrix& m, std::size_t r, std::size_t c) {
        return m.rows == r && m.cols == c;
    };
    const bool ok = mat_ok(p.W_xi, hid, in) && mat_ok(p.W_hi, hid, hid) &&
                    mat_ok(p.W_xf, hid, in) && mat_ok(p.W_hf, hid, hid) &&
                    mat_ok(p.W_xc, hid, in) && mat_ok(p.W_hc, hid, hid) &&
                    mat_ok(p.W_xo, hid, in) && mat_ok(p.W_ho, hid, hid) &&
                    p.w_ci.size() == hid && p.w_cf.size() == hid && p.w_co.size() == hid &&
                    p.b_i.size() == hid && p.b_f.size() == hid && p.b_c.size() == hid &&
                    p.b_o.size() == hid;
    require(ok, "LstmParams: tensor shapes inconsistent with input_dim=" + std::to_string(in) +
                    " hidden_dim=" + std::to_string(hid));
}

}  // namespace

LstmParams LstmParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
    LstmParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    p.W_xi = Matrix(hidden_dim, input_dim);
    p.W_hi = Matrix(hidden_dim, hidden_dim);
    p.W_xf = Matrix(hidden_dim, input_dim);
    p.W_hf = Matrix(hidden_dim, hidden_dim);
    p.W_xc = Matrix(hidden_dim, input_dim);
    p.W_hc = Matrix(hidden_dim, hidden_dim);
    p.W_xo = Matrix(hidden_dim, input_dim);
    p.W_ho = Matrix(hidden_dim, hidden_dim);
    p.w_ci = Vector(hidden_dim);
    p.w_cf = Vector(hidden_dim);
    p.w_co = Vector(hidden_dim);
    p.b_i = Vector(hidden_dim);
    p.b_f = Vector(hidden_dim);
    p.b_c = Vector(hidden_dim);
    p.b_o = Vector(hidden_dim);
    return p;
}

CellState CellState::zeros(std::size_t hidden_dim) {
    CellState s;
    s.h = Vector(hidden_dim);
    s.c = Vector(hidden_dim);
    return s;
}

DenseParams DenseParams::zeros(std::size_t out_dim, std::size_t in_dim, Activation act) {
    DenseParams d;
    d.W = Matrix(out_dim, in_dim);
    d.b = Vector(out_dim);
    d.activation = act;
    return d;
}

std::size_t Network::input_dim() const {
    if (layers.empty()) return 0;
    return layer_in_dim(layers.front());
}

void validate_network(const Network& net) {
    require(!net.layers.empty(), "network: no layers");
    require(net.class_count >= 1, "network: class_count must be >= 1");
    bool has_lstm = false;
    for (std::size_t i = 0; i + 1 < net.layers.size(); ++i) {
        const std::size_t out = layer_out_dim(net.layers[i]);
        const std::size_t in = layer_in_dim(net.layers[i + 1]);
        require(out == in, "network: layer " + std::to_string(i) + " output width " +
                               std::to_string(out) + " does not match layer " +
                               std::to_string(i + 1) + " input width " + std::to_string(in));
    }
    for (const auto& layer : net.layers) {
        if (auto* l = std::get_if<LstmParams>(&layer)) {
            has_lstm = true;
            check_lstm_shapes(*l);
        }
    }
    require(has_lstm, "network: at least one LSTM layer is required");
    const auto* head = std::get_if<DenseParams>(&net.layers.back());
    require(head != nullptr && head->activation == Activation::Linear,
            "network: last layer must be a linear dense head");
    require(head->out_dim() == net.class_count,
            "network: head width " + std::to_string(head->out_dim()) +
                " does not match class_count " + std::to_string(net.class_count));
}

std::size_t param_count(const Network& net) {
    std::size_t n = 0;
    for_each_tensor(net, [&](const std::string&, const auto& t) { n += t.data.size(); });
    return n;
}

Network zeros_like(const Network& net) {
    Network z = net;
    for_each_tensor(z, [](const std::string&, auto& t) {
        std::fill(t.data.begin(), t.data.end(), 0.0);
    });
    return z;
}

namespace {

template <typename F>
void zip_tensors(Network& a, const Network& b, F&& f) {
    std::vector<std::vector<double>*> lhs;
    std::vector<const std::vector<double>*> rhs;
    for_each_tensor(a, [&](const std::string&, auto& t) { lhs.push_back(&t.data); });
    for_each_tensor(b, [&](const std::string&, const auto& t) { rhs.push_back(&t.data); });
    if (lhs.size() != rhs.size()) throw std::invalid_argument("networks have different layouts");
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        if (lhs[i]->size() != rhs[i]->size())
            throw std::invalid_argument("networks have different tensor shapes");
        f(*lhs[i], *rhs[i]);
    }
}

}  // namespace

void accumulate(Network& acc, const Network& delta) {
    zip_tensors(acc, delta, [](std::vector<double>& a, const std::vector<double>& d) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += d[i];
    });
}

void scale_params(Network& net, double factor) {
    for_each_tensor(net, [&](const std::string&, auto& t) {
        for (double& x : t.data) x *= factor;
    });
}

double global_norm(const Network& grads) {
    double sq = 0.0;
    for_each_tensor(grads, [&](const std::string&, const auto& t) {
        for (double x : t.data) sq += x * x;
    });
    return std::sqrt(sq);
}

void clip_by_global_norm(Network& grads, double max_norm) {
    const double norm = global_norm(grads);
    if (norm > max_norm && norm > 0.0) scale_params(grads, max_norm / norm);
}

std::pair<CellState, LstmGates> lstm_cell_forward(const Vector& x, const CellState& prev,
                                                  const LstmParams& p) {
    check_lstm_shapes(p);
    require(x.size() == p.input_dim, "lstm_cell_forward: input length " +
                                         std::to_string(x.size()) + " does not match input_dim " +
                                         std::to_string(p.input_dim));
    require(prev.h.size() == p.hidden_dim && prev.c.size() == p.hidden_dim,
            "lstm_cell_forward: state length does not match hidden_dim " +
                std::to_string(p.hidden_dim));

    const std::size_t hid = p.hidden_dim;
    LstmGates g;
    g.i = matvec(p.W_xi, x);
    g.f = matvec(p.W_xf, x);
    g.a = matvec(p.W_xc, x);
    g.o = matvec(p.W_xo, x);
    const Vector hi = matvec(p.W_hi, prev.h);
    const Vector hf = matvec(p.W_hf, prev.h);
    const Vector hc = matvec(p.W_hc, prev.h);
    const Vector ho = matvec(p.W_ho, prev.h);

    CellState next;
    next.c = Vector(hid);
    next.h = Vector(hid);
    for (std::size_t j = 0; j < hid; ++j) {
        g.i[j] = sigmoid(g.i[j] + hi[j] + p.w_ci[j] * prev.c[j] + p.b_i[j]);
        g.f[j] = sigmoid(g.f[j] + hf[j] + p.w_cf[j] * prev.c[j] + p.b_f[j]);
        g.a[j] = std::tanh(g.a[j] + hc[j] + p.b_c[j]);
        next.c[j] = g.f[j] * prev.c[j] + g.i[j] * g.a[j];
        g.o[j] = sigmoid(g.o[j] + ho[j] + p.w_co[j] * next.c[j] + p.b_o[j]);
        next.h[j] = g.o[j] * std::tanh(next.c[j]);
    }
    return {next, g};
}

std::pair<std::vector<Vector>, LstmTape> lstm_layer_forward(const std::vector<Vector>& seq,
                                                            const LstmParams& p,
                                                            const CellState& init) {
    require(!seq.empty(), "lstm_layer_forward: empty sequence");
    LstmTape tape;
    tape.inputs = seq;
    tape.gates.reserve(seq.size());
    tape.cells.reserve(seq.size());
    tape.hiddens.reserve(seq.size());

    std::vector<Vector> outputs;
    outputs.reserve(seq.size());
    CellState state = init;
    for (const Vector& x : seq) {
        auto [next, gates] = lstm_cell_forward(x, state, p);
        state = next;
        tape.gates.push_back(std::move(gates));
        tape.cells.push_back(state.c);
        tape.hiddens.push_back(state.h);
        outputs.push_back(state.h);
    }
    return {std::move(outputs), std::move(tape)};
}

namespace {

Vector dense_apply(const DenseParams& d, const Vector& in, Vector& preact_out) {
    Vector z = matvec(d.W, in);
    for (std::size_t j = 0; j < z.size(); ++j) z[j] += d.b[j];
    preact_out = z;
    if (d.activation == Activation::Relu)
        for (double& x : z.data) x = relu(x);
    return z;
}

std::size_t find_last_lstm(const Network& net) {
    std::size_t last = net.layers.size();
    for (std::size_t i = 0; i < net.layers.size(); ++i)
        if (std::holds_alternative<LstmParams>(net.layers[i])) last = i;
    return last;
}

}  // namespace

std::pair<Vector, ForwardTape> network_forward(const Network& net, const std::vector<Vector>& seq) {
    validate_network(net);
    require(!seq.empty(), "network_forward: empty sequence");
    require(seq.front().size() == net.input_dim(),
            "network_forward: input width " + std::to_string(seq.front().size()) +
                " does not match network input " + std::to_string(net.input_dim()));

    ForwardTape tape;
    tape.seq_len = seq.size();
    tape.last_lstm = find_last_lstm(net);
    tape.layers.reserve(net.layers.size());

    std::vector<Vector> cur = seq;
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        if (auto* d = std::get_if<DenseParams>(&net.layers[li])) {
            DenseTape dt;
            dt.inputs.reserve(cur.size());
            dt.preacts.reserve(cur.size());
            for (Vector& v : cur) {
                Vector preact;
                Vector out = dense_apply(*d, v, preact);
                dt.inputs.push_back(std::move(v));
                dt.preacts.push_back(std::move(preact));
                v = std::move(out);
            }
            tape.layers.emplace_back(std::move(dt));
        } else {
            const auto& p = std::get<LstmParams>(net.layers[li]);
            auto [outputs, lt] = lstm_layer_forward(cur, p, CellState::zeros(p.hidden_dim));
            cur = std::move(outputs);
            tape.layers.emplace_back(std::move(lt));
            if (li == tape.last_lstm) {
                // classification reads the final-timestep hidden vector
                Vector last = std::move(cur.back());
                cur.clear();
                cur.push_back(std::move(last));
            }
        }
    }
    tape.probs = softmax(cur.front());
    return {tape.probs, std::move(tape)};
}

Prediction predict(const Network& net, const std::vector<Vector>& seq) {
    Prediction pred;
    pred.probs = network_forward(net, seq).first;
    for (std::size_t i = 1; i < pred.probs.size(); ++i)
        if (pred.probs[i] > pred.probs[pred.label]) pred.label = i;
    return pred;
}

namespace {

// single-vector dense backward; returns gradient w.r.t. the input
Vector dense_backward_one(const DenseParams& d, DenseParams& grad, const Vector& input,
                          const Vector& preact, const Vector& dout) {
    Vector dz = dout;
    if (d.activation == Activation::Relu)
        for (std::size_t j = 0; j < dz.size(); ++j)
            if (preact[j] <= 0.0) dz[j] = 0.0;
    add_outer(grad.W, dz, input);
    for (std::size_t j = 0; j < dz.size(); ++j) grad.b[j] += dz[j];
    return matvec_t(d.W, dz);
}

// full BPTT through one LSTM layer; dh_seq holds dL/dh_t from the layers
// above, the return value is dL/dx_t for the layer below
std::vector<Vector> lstm_backward(const LstmParams& p, LstmParams& grad, const LstmTape& tape,
                                  std::vector<Vector>& dh_seq) {
    const std::size_t T = tape.inputs.size();
    const std::size_t hid = p.hidden_dim;
    const Vector zero(hid);

    std::vector<Vector> dx_seq(T);
    Vector dh_rec(hid);   // recurrent contribution to dL/dh_t from step t+1
    Vector dc_carry(hid); // contribution to dL/dc_t from step t+1 (f-path and peepholes)

    for (std::size_t ti = T; ti-- > 0;) {
        const LstmGates& g = tape.gates[ti];
        const Vector& c = tape.cells[ti];
        const Vector& c_prev = ti > 0 ? tape.cells[ti - 1] : zero;
        const Vector& h_prev = ti > 0 ? tape.hiddens[ti - 1] : zero;
        const Vector& x = tape.inputs[ti];

        Vector dz_i(hid), dz_f(hid), dz_a(hid), dz_o(hid);
        Vector dc_next(hid);  // becomes dc_carry for step t-1
        for (std::size_t j = 0; j < hid; ++j) {
            const double dh = dh_seq[ti][j] + dh_rec[j];
            const double tc = std::tanh(c[j]);
            dz_o[j] = dh * tc * g.o[j] * (1.0 - g.o[j]);
            const double dc = dh * g.o[j] * (1.0 - tc * tc) + dc_carry[j] + dz_o[j] * p.w_co[j];
            dz_i[j] = dc * g.a[j] * g.i[j] * (1.0 - g.i[j]);
            dz_f[j] = dc * c_prev[j] * g.f[j] * (1.0 - g.f[j]);
            dz_a[j] = dc * g.i[j] * (1.0 - g.a[j] * g.a[j]);
            dc_next[j] = dc * g.f[j] + dz_i[j] * p.w_ci[j] + dz_f[j] * p.w_cf[j];

            grad.b_i[j] += dz_i[j];
            grad.b_f[j] += dz_f[j];
            grad.b_c[j] += dz_a[j];
            grad.b_o[j] += dz_o[j];
            grad.w_ci[j] += dz_i[j] * c_prev[j];
            grad.w_cf[j] += dz_f[j] * c_prev[j];
            grad.w_co[j] += dz_o[j] * c[j];
        }
        add_outer(grad.W_xi, dz_i, x);
        add_outer(grad.W_xf, dz_f, x);
        add_outer(grad.W_xc, dz_a, x);
        add_outer(grad.W_xo, dz_o, x);
        if (ti > 0) {
            add_outer(grad.W_hi, dz_i, h_prev);
            add_outer(grad.W_hf, dz_f, h_prev);
            add_outer(grad.W_hc, dz_a, h_prev);
            add_outer(grad.W_ho, dz_o, h_prev);
        }

        Vector dx = matvec_t(p.W_xi, dz_i);
        const Vector dxf = matvec_t(p.W_xf, dz_f);
        const Vector dxa = matvec_t(p.W_xc, dz_a);
        const Vector dxo = matvec_t(p.W_xo, dz_o);
        for (std::size_t j = 0; j < dx.size(); ++j) dx[j] += dxf[j] + dxa[j] + dxo[j];
        dx_seq[ti] = std::move(dx);

        Vector dhr = matvec_t(p.W_hi, dz_i);
        const Vector dhf = matvec_t(p.W_hf, dz_f);
        const Vector dha = matvec_t(p.W_hc, dz_a);
        const Vector dho = matvec_t(p.W_ho, dz_o);
        for (std::size_t j = 0; j < hid; ++j) dhr[j] += dhf[j] + dha[j] + dho[j];
        dh_rec = std::move(dhr);
        dc_carry = std::move(dc_next);
    }
    return dx_seq;
}

}  // namespace

Gradients network_backward(const Network& net, const ForwardTape& tape, std::size_t target) {
    validate_network(net);
    require(tape.layers.size() == net.layers.size(),
            "network_backward: tape does not match network (layer count " +
                std::to_string(tape.layers.size()) + " vs " + std::to_string(net.layers.size()) +
                ")");
    require(target < net.class_count, "network_backward: target " + std::to_string(target) +
                                          " out of range for " + std::to_string(net.class_count) +
                                          " classes");

    Gradients grads = zeros_like(net);

    // cross-entropy + softmax head: dL/dlogits = probs - onehot(target)
    Vector dvec = tape.probs;
    dvec[target] -= 1.0;

    // collapsed tail: single-vector dense layers above the last LSTM
    std::size_t li = net.layers.size();
    while (li-- > tape.last_lstm + 1) {
        const auto* d = std::get_if<DenseParams>(&net.layers[li]);
        const auto* dt = std::get_if<DenseTape>(&tape.layers[li]);
        require(d != nullptr && dt != nullptr && dt->inputs.size() == 1,
                "network_backward: tape does not match network layout");
        dvec = dense_backward_one(*d, std::get<DenseParams>(grads.layers[li]), dt->inputs[0],
                                  dt->preacts[0], dvec);
    }

    // sequence region: loss reaches the last LSTM only through its final step
    std::vector<Vector> dseq(tape.seq_len);
    {
        const auto& lt = std::get<LstmTape>(tape.layers[tape.last_lstm]);
        require(lt.inputs.size() == tape.seq_len, "network_backward: tape sequence length mismatch");
        const std::size_t hid = std::get<LstmParams>(net.layers[tape.last_lstm]).hidden_dim;
        for (std::size_t t = 0; t + 1 < tape.seq_len; ++t) dseq[t] = Vector(hid);
        dseq[tape.seq_len - 1] = std::move(dvec);
    }

    for (li = tape.last_lstm + 1; li-- > 0;) {
        if (const auto* p = std::get_if<LstmParams>(&net.layers[li])) {
            dseq = lstm_backward(*p, std::get<LstmParams>(grads.layers[li]),
                                 std::get<LstmTape>(tape.layers[li]), dseq);
        } else {
            const auto& d = std::get<DenseParams>(net.layers[li]);
            const auto& dt = std::get<DenseTape>(tape.layers[li]);
            require(dt.inputs.size() == tape.seq_len,
                    "network_backward: tape sequence length mismatch");
            auto& dg = std::get<DenseParams>(grads.layers[li]);
            for (std::size_t t = 0; t < tape.seq_len; ++t)
                dseq[t] = dense_backward_one(d, dg, dt.inputs[t], dt.preacts[t], dseq[t]);
        }
    }
    return grads;
}

}  // namespace flowrnn
