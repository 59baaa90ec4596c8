#include "flowrnn/optim.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "flowrnn/parallel.hpp"

namespace flowrnn {

void TrainConfig::validate() const {
    if (!(initial_lr > 0.0)) throw std::invalid_argument("TrainConfig: initial_lr must be > 0");
    if (!(min_lr > 0.0 && min_lr <= initial_lr))
        throw std::invalid_argument("TrainConfig: need 0 < min_lr <= initial_lr");
    if (!(lr_reduce_factor > 0.0 && lr_reduce_factor < 1.0))
        throw std::invalid_argument("TrainConfig: lr_reduce_factor must be in (0,1)");
    if (lr_patience < 1 || early_stop_patience < 1)
        throw std::invalid_argument("TrainConfig: patience values must be >= 1");
    if (max_epochs < 0) throw std::invalid_argument("TrainConfig: max_epochs must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(clip_norm > 0.0)) throw std::invalid_argument("TrainConfig: clip_norm must be > 0");
}

double cross_entropy(const Vector& probs, std::size_t target) {
    if (target >= probs.size())
        throw std::invalid_argument("cross_entropy: target " + std::to_string(target) +
                                    " out of range for " + std::to_string(probs.size()) +
                                    " classes");
    const double p = std::max(probs[target], 1e-12);
    return -std::log(p);
}

Matrix orthogonal_init(std::size_t rows, std::size_t cols, Rng& rng) {
    if (rows < 1 || cols < 1)
        throw std::invalid_argument("orthogonal_init: shape must be at least 1x1");
    const bool transpose = rows < cols;
    const std::size_t m = transpose ? cols : rows;
    const std::size_t n = transpose ? rows : cols;

    Matrix a(m, n);
    for (double& x : a.data) x = rng.normal();

    // Householder QR; reflectors stay in the lower triangle of a
    std::vector<double> betas(n, 0.0);
    std::vector<double> diag(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double norm_sq = 0.0;
        for (std::size_t i = k; i < m; ++i) norm_sq += a.at(i, k) * a.at(i, k);
        const double norm = std::sqrt(norm_sq);
        if (norm == 0.0) {
            diag[k] = 0.0;
            continue;
        }
        const double alpha = a.at(k, k) >= 0.0 ? -norm : norm;
        const double v0 = a.at(k, k) - alpha;
        a.at(k, k) = v0;
        betas[k] = v0 == 0.0 ? 0.0 : -1.0 / (alpha * v0);  // 2 / v^T v
        diag[k] = alpha;
        for (std::size_t j = k + 1; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t i = k; i < m; ++i) dot += a.at(i, k) * a.at(i, j);
            dot *= betas[k];
            for (std::size_t i = k; i < m; ++i) a.at(i, j) -= dot * a.at(i, k);
        }
    }

    // accumulate the thin Q by applying reflectors to the thin identity
    Matrix q(m, n);
    for (std::size_t j = 0; j < n; ++j) q.at(j, j) = 1.0;
    for (std::size_t k = n; k-- > 0;) {
        if (betas[k] == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) {
            double dot = 0.0;
            for (std::size_t i = k; i < m; ++i) dot += a.at(i, k) * q.at(i, j);
            dot *= betas[k];
            for (std::size_t i = k; i < m; ++i) q.at(i, j) -= dot * a.at(i, k);
        }
    }
    // sign correction pins the factorization down uniquely
    for (std::size_t j = 0; j < n; ++j) {
        if (diag[j] < 0.0) continue;
        for (std::size_t i = 0; i < m; ++i) q.at(i, j) = -q.at(i, j);
    }

    if (!transpose) return q;
    Matrix qt(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) qt.at(i, j) = q.at(j, i);
    return qt;
}

void initialize_network(Network& net, Rng& rng) {
    for (auto& layer : net.layers) {
        if (auto* d = std::get_if<DenseParams>(&layer)) {
            d->W = orthogonal_init(d->W.rows, d->W.cols, rng);
            std::fill(d->b.data.begin(), d->b.data.end(), 0.0);
        } else {
            auto& l = std::get<LstmParams>(layer);
            for (Matrix* w : {&l.W_xi, &l.W_hi, &l.W_xf, &l.W_hf, &l.W_xc, &l.W_hc, &l.W_xo,
                              &l.W_ho})
                *w = orthogonal_init(w->rows, w->cols, rng);
            for (Vector* v : {&l.w_ci, &l.w_cf, &l.w_co, &l.b_i, &l.b_c, &l.b_o})
                std::fill(v->data.begin(), v->data.end(), 0.0);
            // forget gate starts open so early steps do not wipe the cell
            std::fill(l.b_f.data.begin(), l.b_f.data.end(), 1.0);
        }
    }
}

Network init_network(const ArchSpec& arch, Rng& rng) {
    Network net = build_network(arch);
    initialize_network(net, rng);
    return net;
}

AdamState AdamState::for_network(const Network& net) {
    AdamState st;
    st.m = zeros_like(net);
    st.v = zeros_like(net);
    st.step = 0;
    return st;
}

namespace {

std::vector<std::vector<double>*> tensor_list(Network& net) {
    std::vector<std::vector<double>*> out;
    for_each_tensor(net, [&](const std::string&, auto& t) { out.push_back(&t.data); });
    return out;
}

std::vector<const std::vector<double>*> tensor_list(const Network& net) {
    std::vector<const std::vector<double>*> out;
    for_each_tensor(net, [&](const std::string&, const auto& t) { out.push_back(&t.data); });
    return out;
}

}  // namespace

void adam_step(Network& params, const Gradients& grads, AdamState& state, double lr,
               const TrainConfig& cfg) {
    auto ps = tensor_list(params);
    auto gs = tensor_list(grads);
    auto ms = tensor_list(state.m);
    auto vs = tensor_list(state.v);
    if (ps.size() != gs.size() || ps.size() != ms.size())
        throw std::invalid_argument("adam_step: parameter/gradient layout mismatch");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.step));

    for (std::size_t t = 0; t < ps.size(); ++t) {
        auto& p = *ps[t];
        const auto& g = *gs[t];
        auto& m = *ms[t];
        auto& v = *vs[t];
        if (p.size() != g.size())
            throw std::invalid_argument("adam_step: parameter/gradient shape mismatch");
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g[i];
            v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            p[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
        }
    }
}

double evaluate_accuracy(const Network& net, const Dataset& data, Split split, int threads) {
    const std::vector<std::size_t> idx = data.indices(split);
    if (idx.empty()) throw std::invalid_argument("evaluate_accuracy: empty split");
    std::vector<char> correct(idx.size(), 0);
    parallel_for(idx.size(), threads, [&](std::size_t i) {
        const Signal& sig = data.items[idx[i]].signal;
        const Prediction pred = predict(net, as_sequence(sig));
        correct[i] = pred.label == static_cast<std::size_t>(sig.label) ? 1 : 0;
    });
    const std::size_t hits = std::accumulate(correct.begin(), correct.end(), std::size_t{0});
    return static_cast<double>(hits) / static_cast<double>(idx.size());
}

std::pair<Network, TrainReport> train(Network net, const Dataset& data, const TrainConfig& cfg) {
    cfg.validate();
    validate_network(net);
    if (data.items.empty()) throw std::invalid_argument("train: empty dataset");
    const std::vector<std::size_t> train_idx = data.indices(Split::Train);
    const std::vector<std::size_t> test_idx = data.indices(Split::Test);
    if (train_idx.empty() || test_idx.empty())
        throw std::invalid_argument("train: both train and test splits must be nonempty");

    Rng rng(cfg.seed);
    AdamState adam = AdamState::for_network(net);
    TrainReport report;

    double lr = cfg.initial_lr;
    Network best = net;
    double best_acc = -1.0;
    int best_epoch = -1;
    int no_improve = 0;
    int lr_wait = 0;

    std::vector<std::size_t> order = train_idx;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        rng.shuffle(order);

        double loss_sum = 0.0;
        std::size_t correct = 0;
        const std::size_t batch_count =
            (order.size() + static_cast<std::size_t>(cfg.batch_size) - 1) /
            static_cast<std::size_t>(cfg.batch_size);

        for (std::size_t b = 0; b < batch_count; ++b) {
            const std::size_t begin = b * static_cast<std::size_t>(cfg.batch_size);
            const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
            const std::size_t count = end - begin;

            std::vector<Gradients> item_grads(count);
            std::vector<double> item_loss(count, 0.0);
            std::vector<char> item_correct(count, 0);
            parallel_for(count, cfg.threads, [&](std::size_t i) {
                const Signal& sig = data.items[order[begin + i]].signal;
                const auto target = static_cast<std::size_t>(sig.label);
                auto [probs, tape] = network_forward(net, as_sequence(sig));
                item_loss[i] = cross_entropy(probs, target);
                std::size_t arg = 0;
                for (std::size_t j = 1; j < probs.size(); ++j)
                    if (probs[j] > probs[arg]) arg = j;
                item_correct[i] = arg == target ? 1 : 0;
                item_grads[i] = network_backward(net, tape, target);
            });

            double batch_loss = 0.0;
            for (std::size_t i = 0; i < count; ++i) {
                batch_loss += item_loss[i];
                correct += static_cast<std::size_t>(item_correct[i]);
            }
            batch_loss /= static_cast<double>(count);
            loss_sum += batch_loss * static_cast<double>(count);
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("train: loss is not finite at epoch " +
                                         std::to_string(epoch) + ", batch " + std::to_string(b));

            // fixed-order reduction keeps runs bit-reproducible at any thread count
            Gradients grad = std::move(item_grads[0]);
            for (std::size_t i = 1; i < count; ++i) accumulate(grad, item_grads[i]);
            scale_params(grad, 1.0 / static_cast<double>(count));
            clip_by_global_norm(grad, cfg.clip_norm);
            adam_step(net, grad, adam, lr, cfg);
        }

        EpochStats stats;
        stats.train_loss = loss_sum / static_cast<double>(order.size());
        stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
        stats.test_accuracy = evaluate_accuracy(net, data, Split::Test, cfg.threads);
        stats.lr = lr;
        stats.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.epochs.push_back(stats);

        if (stats.test_accuracy > best_acc) {
            best_acc = stats.test_accuracy;
            best = net;
            best_epoch = epoch;
            no_improve = 0;
            lr_wait = 0;
        } else {
            ++no_improve;
            ++lr_wait;
            if (no_improve >= cfg.early_stop_patience) {
                report.stop_reason = "early-stop";
                break;
            }
            if (lr_wait >= cfg.lr_patience) {
                lr = std::max(lr * cfg.lr_reduce_factor, cfg.min_lr);
                lr_wait = 0;
            }
        }
    }

    if (report.stop_reason.empty()) report.stop_reason = "max-epochs";
    report.best_epoch = best_epoch;
    report.best_test_accuracy = best_epoch >= 0 ? best_acc : 0.0;
    if (best_epoch >= 0) net = std::move(best);
    return {std::move(net), std::move(report)};
}

}  // namespace flowrnn
