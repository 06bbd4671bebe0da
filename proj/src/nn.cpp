#include "isl/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "isl/errors.hpp"

namespace isl {

Activation parse_activation(std::string_view name) {
    if (name == "identity") return Activation::Identity;
    if (name == "relu") return Activation::ReLU;
    if (name == "elu") return Activation::ELU;
    if (name == "tanh") return Activation::Tanh;
    throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::ReLU: return "relu";
        case Activation::ELU: return "elu";
        case Activation::Tanh: return "tanh";
        case Activation::Identity: break;
    }
    return "identity";
}

void ParamLayout::add(std::string name, std::size_t rows, std::size_t cols) {
    slots_.push_back({std::move(name), rows, cols, size_});
    size_ += rows * cols;
}

void ParamLayout::append(const ParamLayout& other, std::string_view prefix) {
    for (const auto& s : other.slots()) add(std::string(prefix) + s.name, s.rows, s.cols);
}

bool ParamVector::all_finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

double ParamVector::norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s);
}

std::vector<std::vector<double>> unflatten(const ParamVector& p) {
    if (p.values.size() != p.layout.size()) throw ShapeError("parameter vector does not match its layout");
    std::vector<std::vector<double>> out;
    out.reserve(p.layout.slots().size());
    for (const auto& s : p.layout.slots()) {
        const auto first = p.values.begin() + static_cast<std::ptrdiff_t>(s.offset);
        out.emplace_back(first, first + static_cast<std::ptrdiff_t>(s.size()));
    }
    return out;
}

ParamVector flatten(const ParamLayout& layout, const std::vector<std::vector<double>>& tensors) {
    if (tensors.size() != layout.slots().size()) throw ShapeError("tensor count does not match layout");
    ParamVector p{layout, std::vector<double>(layout.size())};
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        const auto& s = layout.slots()[i];
        if (tensors[i].size() != s.size()) throw ShapeError("tensor '" + s.name + "' has the wrong size");
        std::copy(tensors[i].begin(), tensors[i].end(), p.values.begin() + static_cast<std::ptrdiff_t>(s.offset));
    }
    return p;
}

MlpSpec MlpSpec::generator(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
                           Activation hidden_act) {
    MlpSpec s;
    s.widths.push_back(in);
    for (auto h : hidden) {
        s.widths.push_back(h);
        s.activations.push_back(hidden_act);
    }
    s.widths.push_back(out);
    s.activations.push_back(Activation::Identity);
    return s;
}

void MlpSpec::validate() const {
    if (widths.size() < 2) throw std::invalid_argument("MLP needs at least an input and an output width");
    if (activations.size() != widths.size() - 1) {
        throw std::invalid_argument("MLP needs one activation per dense layer");
    }
    for (auto w : widths) {
        if (w == 0) throw std::invalid_argument("MLP widths must be positive");
    }
    if (!dropout.empty()) {
        if (dropout.size() != activations.size()) throw std::invalid_argument("one dropout rate per layer");
        for (double r : dropout) {
            if (!(r >= 0.0 && r < 1.0)) throw std::invalid_argument("dropout rate must be in [0, 1)");
        }
        if (dropout.back() != 0.0) throw std::invalid_argument("dropout applies to hidden layers only");
    }
}

Mlp::Mlp(MlpSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    for (std::size_t l = 0; l < spec_.layers(); ++l) {
        layout_.add("W" + std::to_string(l), spec_.widths[l + 1], spec_.widths[l]);
        layout_.add("b" + std::to_string(l), spec_.widths[l + 1], 1);
    }
}

void Mlp::check_theta(std::size_t n) const {
    if (n != layout_.size()) {
        throw ShapeError("MLP expects " + std::to_string(layout_.size()) + " parameters, got " +
                         std::to_string(n));
    }
}

ParamVector Mlp::init(Stream& rng) const {
    ParamVector p{layout_, std::vector<double>(layout_.size())};
    for (std::size_t l = 0; l < spec_.layers(); ++l) {
        const double bound = std::sqrt(1.0 / static_cast<double>(spec_.widths[l]));
        for (std::size_t k = 0; k < 2; ++k) {
            const auto& slot = layout_.slots()[2 * l + k];
            for (std::size_t i = 0; i < slot.size(); ++i) p.values[slot.offset + i] = rng.uniform(-bound, bound);
        }
    }
    return p;
}

std::vector<double> Mlp::forward(std::span<const double> theta, std::span<const double> input) const {
    check_theta(theta.size());
    if (input.size() != input_width()) throw ShapeError("MLP input width mismatch");
    std::vector<double> x(input.begin(), input.end());
    std::vector<double> y;
    for (std::size_t l = 0; l < spec_.layers(); ++l) {
        const auto& W = layout_.slots()[2 * l];
        const auto& b = layout_.slots()[2 * l + 1];
        y.assign(W.rows, 0.0);
        for (std::size_t r = 0; r < W.rows; ++r) {
            double acc = theta[b.offset + r];
            const double* row = theta.data() + W.offset + r * W.cols;
            for (std::size_t c = 0; c < W.cols; ++c) acc += row[c] * x[c];
            y[r] = activate(spec_.activations[l], acc);
        }
        x.swap(y);
    }
    return x;
}

double Mlp::forward_scalar(std::span<const double> theta, double input) const {
    return forward(theta, std::span<const double>(&input, 1)).front();
}

std::vector<ad::Var> Mlp::forward(std::span<const ad::Var> theta, std::span<const ad::Var> input) const {
    check_theta(theta.size());
    if (input.size() != input_width()) throw ShapeError("MLP input width mismatch");
    std::vector<ad::Var> x(input.begin(), input.end());
    for (std::size_t l = 0; l < spec_.layers(); ++l) {
        const auto& W = layout_.slots()[2 * l];
        const auto& b = layout_.slots()[2 * l + 1];
        std::vector<ad::Var> y;
        y.reserve(W.rows);
        for (std::size_t r = 0; r < W.rows; ++r) {
            ad::Var acc = theta[b.offset + r];
            for (std::size_t c = 0; c < W.cols; ++c) acc = acc + theta[W.offset + r * W.cols + c] * x[c];
            y.push_back(activate(spec_.activations[l], acc));
        }
        x = std::move(y);
    }
    return x;
}

void Mlp::forward_train(std::span<const double> theta, std::span<const double> inputs, std::size_t rows,
                        Trace& trace, Stream* dropout_rng) const {
    check_theta(theta.size());
    if (inputs.size() != rows * input_width()) throw ShapeError("MLP batch input size mismatch");
    const std::size_t L = spec_.layers();
    trace.rows = rows;
    trace.act.resize(L + 1);
    trace.pre.resize(L);
    trace.mask.resize(L);
    trace.act[0].assign(inputs.begin(), inputs.end());
    for (std::size_t l = 0; l < L; ++l) {
        const auto& W = layout_.slots()[2 * l];
        const auto& b = layout_.slots()[2 * l + 1];
        const auto& x = trace.act[l];
        auto& pre = trace.pre[l];
        auto& post = trace.act[l + 1];
        pre.resize(rows * W.rows);
        post.resize(rows * W.rows);
        const Activation act = spec_.activations[l];
        for (std::size_t n = 0; n < rows; ++n) {
            const double* xn = x.data() + n * W.cols;
            for (std::size_t r = 0; r < W.rows; ++r) {
                double acc = theta[b.offset + r];
                const double* row = theta.data() + W.offset + r * W.cols;
                for (std::size_t c = 0; c < W.cols; ++c) acc += row[c] * xn[c];
                pre[n * W.rows + r] = acc;
                post[n * W.rows + r] = activate(act, acc);
            }
        }
        auto& mask = trace.mask[l];
        mask.clear();
        const double rate = spec_.dropout.empty() ? 0.0 : spec_.dropout[l];
        if (dropout_rng && rate > 0.0) {
            mask.resize(post.size());
            for (std::size_t i = 0; i < post.size(); ++i) {
                mask[i] = dropout_rng->uniform() < rate ? 0.0 : 1.0 / (1.0 - rate);
                post[i] *= mask[i];
            }
        }
    }
}

void Mlp::backward(std::span<const double> theta, const Trace& trace, std::span<const double> d_outputs,
                   std::span<double> d_theta, std::span<double> d_inputs) const {
    check_theta(theta.size());
    check_theta(d_theta.size());
    const std::size_t rows = trace.rows;
    if (d_outputs.size() != rows * output_width()) throw ShapeError("MLP output gradient size mismatch");
    if (!d_inputs.empty() && d_inputs.size() != rows * input_width()) {
        throw ShapeError("MLP input gradient size mismatch");
    }
    std::vector<double> dy;
    std::vector<double> dx;
    for (std::size_t n = 0; n < rows; ++n) {
        dy.assign(d_outputs.begin() + static_cast<std::ptrdiff_t>(n * output_width()),
                  d_outputs.begin() + static_cast<std::ptrdiff_t>((n + 1) * output_width()));
        for (std::size_t l = spec_.layers(); l-- > 0;) {
            const auto& W = layout_.slots()[2 * l];
            const auto& b = layout_.slots()[2 * l + 1];
            const double* x = trace.act[l].data() + n * W.cols;
            const double* pre = trace.pre[l].data() + n * W.rows;
            const double* post = trace.act[l + 1].data() + n * W.rows;
            const double* mask = trace.mask[l].empty() ? nullptr : trace.mask[l].data() + n * W.rows;
            const Activation act = spec_.activations[l];
            dx.assign(W.cols, 0.0);
            for (std::size_t r = 0; r < W.rows; ++r) {
                double g = dy[r];
                double out = post[r];
                if (mask) {
                    g *= mask[r];
                    out = mask[r] != 0.0 ? out / mask[r] : activate(act, pre[r]);
                }
                const double dpre = g * activation_slope(act, pre[r], out);
                if (dpre == 0.0) continue;
                d_theta[b.offset + r] += dpre;
                double* drow = d_theta.data() + W.offset + r * W.cols;
                const double* row = theta.data() + W.offset + r * W.cols;
                for (std::size_t c = 0; c < W.cols; ++c) {
                    drow[c] += dpre * x[c];
                    dx[c] += dpre * row[c];
                }
            }
            dy.swap(dx);
        }
        if (!d_inputs.empty()) std::copy(dy.begin(), dy.end(), d_inputs.begin() + static_cast<std::ptrdiff_t>(n * input_width()));
    }
}

void RnnSpec::validate() const {
    if (input_width == 0 || hidden_width == 0 || num_layers == 0) {
        throw std::invalid_argument("RNN widths and layer count must be positive");
    }
    if (activation == Activation::Identity) throw std::invalid_argument("RNN activation must be relu, elu or tanh");
}

Rnn::Rnn(RnnSpec spec) : spec_(spec) {
    spec_.validate();
    for (std::size_t l = 0; l < spec_.num_layers; ++l) {
        const std::size_t in = l == 0 ? spec_.input_width : spec_.hidden_width;
        layout_.add("Wx" + std::to_string(l), spec_.hidden_width, in);
        layout_.add("Wh" + std::to_string(l), spec_.hidden_width, spec_.hidden_width);
        layout_.add("b" + std::to_string(l), spec_.hidden_width, 1);
    }
}

void Rnn::check_theta(std::size_t n) const {
    if (n != layout_.size()) {
        throw ShapeError("RNN expects " + std::to_string(layout_.size()) + " parameters, got " +
                         std::to_string(n));
    }
}

ParamVector Rnn::init(Stream& rng) const {
    ParamVector p{layout_, std::vector<double>(layout_.size())};
    for (std::size_t l = 0; l < spec_.num_layers; ++l) {
        const std::size_t in = l == 0 ? spec_.input_width : spec_.hidden_width;
        const double bound = std::sqrt(1.0 / static_cast<double>(in + spec_.hidden_width));
        for (std::size_t k = 0; k < 3; ++k) {
            const auto& slot = layout_.slots()[3 * l + k];
            for (std::size_t i = 0; i < slot.size(); ++i) p.values[slot.offset + i] = rng.uniform(-bound, bound);
        }
    }
    return p;
}

Rnn::State Rnn::step(std::span<const double> theta, std::span<const double> input, const State& prev) const {
    StepTrace t;
    step_train(theta, input, prev, t);
    return std::move(t.next);
}

void Rnn::step_train(std::span<const double> theta, std::span<const double> input, const State& prev,
                     StepTrace& trace) const {
    check_theta(theta.size());
    if (input.size() != spec_.input_width) throw ShapeError("RNN input width mismatch");
    const std::size_t H = spec_.hidden_width;
    if (prev.size() != spec_.num_layers * H) throw ShapeError("RNN state size mismatch");
    trace.input.assign(input.begin(), input.end());
    trace.prev = prev;
    trace.pre.resize(prev.size());
    trace.next.resize(prev.size());
    for (std::size_t l = 0; l < spec_.num_layers; ++l) {
        const auto& Wx = layout_.slots()[3 * l];
        const auto& Wh = layout_.slots()[3 * l + 1];
        const auto& b = layout_.slots()[3 * l + 2];
        const double* x = l == 0 ? trace.input.data() : trace.next.data() + (l - 1) * H;
        const double* hp = prev.data() + l * H;
        for (std::size_t r = 0; r < H; ++r) {
            double acc = theta[b.offset + r];
            const double* wx = theta.data() + Wx.offset + r * Wx.cols;
            for (std::size_t c = 0; c < Wx.cols; ++c) acc += wx[c] * x[c];
            const double* wh = theta.data() + Wh.offset + r * H;
            for (std::size_t c = 0; c < H; ++c) acc += wh[c] * hp[c];
            trace.pre[l * H + r] = acc;
            trace.next[l * H + r] = activate(spec_.activation, acc);
        }
    }
}

void Rnn::backward(std::span<const double> theta, std::span<const StepTrace> steps,
                   std::span<const std::vector<double>> d_top, std::span<double> d_theta) const {
    check_theta(theta.size());
    check_theta(d_theta.size());
    if (d_top.size() != steps.size()) throw ShapeError("one top-state gradient per step");
    const std::size_t H = spec_.hidden_width;
    const std::size_t L = spec_.num_layers;
    // dL/dh_l[t] flowing back from step t+1 through Wh.
    std::vector<double> carry(L * H, 0.0);
    std::vector<double> dh(L * H);
    std::vector<double> dpre(H);
    for (std::size_t t = steps.size(); t-- > 0;) {
        const auto& st = steps[t];
        dh = carry;
        if (!d_top[t].empty()) {
            for (std::size_t r = 0; r < H; ++r) dh[(L - 1) * H + r] += d_top[t][r];
        }
        std::fill(carry.begin(), carry.end(), 0.0);
        for (std::size_t l = L; l-- > 0;) {
            const auto& Wx = layout_.slots()[3 * l];
            const auto& Wh = layout_.slots()[3 * l + 1];
            const auto& b = layout_.slots()[3 * l + 2];
            const double* x = l == 0 ? st.input.data() : st.next.data() + (l - 1) * H;
            const double* hp = st.prev.data() + l * H;
            for (std::size_t r = 0; r < H; ++r) {
                dpre[r] = dh[l * H + r] *
                          activation_slope(spec_.activation, st.pre[l * H + r], st.next[l * H + r]);
            }
            for (std::size_t r = 0; r < H; ++r) {
                const double g = dpre[r];
                if (g == 0.0) continue;
                d_theta[b.offset + r] += g;
                double* dwx = d_theta.data() + Wx.offset + r * Wx.cols;
                const double* wx = theta.data() + Wx.offset + r * Wx.cols;
                for (std::size_t c = 0; c < Wx.cols; ++c) {
                    dwx[c] += g * x[c];
                    if (l > 0) dh[(l - 1) * H + c] += g * wx[c];
                }
                double* dwh = d_theta.data() + Wh.offset + r * H;
                const double* wh = theta.data() + Wh.offset + r * H;
                for (std::size_t c = 0; c < H; ++c) {
                    dwh[c] += g * hp[c];
                    carry[l * H + c] += g * wh[c];
                }
            }
        }
    }
}

AdamState::AdamState(std::size_t n, AdamConfig cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {
    if (!(cfg_.learning_rate > 0.0)) throw std::invalid_argument("Adam learning rate must be > 0");
}

void AdamState::step(std::span<double> theta, std::span<const double> grad) {
    if (theta.size() != m_.size() || grad.size() != m_.size()) throw ShapeError("Adam length mismatch");
    for (double g : grad) {
        if (!std::isfinite(g)) throw NumericError("adam", "non-finite gradient passed to Adam");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < theta.size(); ++i) {
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
        const double mhat = m_[i] / c1;
        const double vhat = v_[i] / c2;
        theta[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
}

bool clip_global_norm(std::span<double> g, double max_norm) {
    double s = 0.0;
    for (double v : g) s += v * v;
    const double n = std::sqrt(s);
    if (!(n > max_norm)) return false;
    const double scale = max_norm / n;
    for (double& v : g) v *= scale;
    return true;
}

}  // namespace isl
