#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "isl/autodiff.hpp"
#include "isl/random.hpp"

namespace isl {

enum class Activation { Identity, ReLU, ELU, Tanh };

Activation parse_activation(std::string_view name);
std::string to_string(Activation a);

inline double activate(Activation a, double x) {
    switch (a) {
        case Activation::ReLU: return ad::relu(x);
        case Activation::ELU: return ad::elu(x);
        case Activation::Tanh: return std::tanh(x);
        case Activation::Identity: break;
    }
    return x;
}

inline ad::Var activate(Activation a, ad::Var x) {
    switch (a) {
        case Activation::ReLU: return ad::relu(x);
        case Activation::ELU: return ad::elu(x);
        case Activation::Tanh: return ad::tanh(x);
        case Activation::Identity: break;
    }
    return x;
}

// d act / d pre, using whichever of (pre, post) is cheaper.
inline double activation_slope(Activation a, double pre, double post) {
    switch (a) {
        case Activation::ReLU: return pre > 0.0 ? 1.0 : 0.0;
        case Activation::ELU: return pre > 0.0 ? 1.0 : post + 1.0;
        case Activation::Tanh: return 1.0 - post * post;
        case Activation::Identity: break;
    }
    return 1.0;
}

// Shape and position of one tensor inside a flat parameter vector.
struct TensorSlot {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t offset = 0;

    std::size_t size() const noexcept { return rows * cols; }
    bool operator==(const TensorSlot&) const = default;
};

class ParamLayout {
public:
    void add(std::string name, std::size_t rows, std::size_t cols);
    // Append every slot of `other`, shifted to follow this layout.
    void append(const ParamLayout& other, std::string_view prefix);

    const std::vector<TensorSlot>& slots() const noexcept { return slots_; }
    std::size_t size() const noexcept { return size_; }
    bool operator==(const ParamLayout&) const = default;

private:
    std::vector<TensorSlot> slots_;
    std::size_t size_ = 0;
};

// Flat parameter vector theta plus its layout.
struct ParamVector {
    ParamLayout layout;
    std::vector<double> values;

    bool all_finite() const;
    double norm() const;
};

// One vector per tensor slot, row-major.
std::vector<std::vector<double>> unflatten(const ParamVector& p);
ParamVector flatten(const ParamLayout& layout, const std::vector<std::vector<double>>& tensors);

struct MlpSpec {
    std::vector<std::size_t> widths;        // input width first
    std::vector<Activation> activations;    // one per dense layer
    std::vector<double> dropout;            // per dense layer output, hidden layers only; empty = none

    // Dense generator: in -> hidden... -> out with `hidden_act` on hidden
    // layers and Identity on the output.
    static MlpSpec generator(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
                             Activation hidden_act);
    std::size_t layers() const noexcept { return activations.size(); }
    void validate() const;
};

// Multilayer perceptron with hand-written reverse pass.
class Mlp {
public:
    explicit Mlp(MlpSpec spec);

    const MlpSpec& spec() const noexcept { return spec_; }
    const ParamLayout& layout() const noexcept { return layout_; }
    std::size_t num_params() const noexcept { return layout_.size(); }
    std::size_t input_width() const noexcept { return spec_.widths.front(); }
    std::size_t output_width() const noexcept { return spec_.widths.back(); }

    // Uniform in [-sqrt(1/fan_in), sqrt(1/fan_in)] for weights and biases.
    ParamVector init(Stream& rng) const;

    // Inference pass (dropout off). Throws ShapeError on width mismatch.
    std::vector<double> forward(std::span<const double> theta, std::span<const double> input) const;
    // Scalar fast path for 1 -> 1 generators.
    double forward_scalar(std::span<const double> theta, double input) const;

    // The same computation on a tape, for gradient checks.
    std::vector<ad::Var> forward(std::span<const ad::Var> theta, std::span<const ad::Var> input) const;

    // Activations of a batch of rows, saved by forward_train for backward.
    struct Trace {
        std::size_t rows = 0;
        std::vector<std::vector<double>> act;   // act[0] = input, act[l+1] = layer l output (rows x width)
        std::vector<std::vector<double>> pre;   // pre-activations per layer
        std::vector<std::vector<double>> mask;  // inverted-dropout scale per hidden layer, empty if none
        std::span<const double> output() const { return act.back(); }
    };

    // Training pass over `rows` inputs stored row-major in `inputs`. Dropout
    // is applied when `dropout_rng` is non-null.
    void forward_train(std::span<const double> theta, std::span<const double> inputs, std::size_t rows,
                       Trace& trace, Stream* dropout_rng = nullptr) const;

    // Accumulates dL/dtheta into `d_theta` (rows in index order); writes
    // dL/dinputs (rows x input width) into `d_inputs` when it is non-empty.
    void backward(std::span<const double> theta, const Trace& trace, std::span<const double> d_outputs,
                  std::span<double> d_theta, std::span<double> d_inputs = {}) const;

private:
    void check_theta(std::size_t n) const;
    MlpSpec spec_;
    ParamLayout layout_;
};

struct RnnSpec {
    std::size_t input_width = 1;
    std::size_t hidden_width = 10;
    std::size_t num_layers = 1;
    Activation activation = Activation::ReLU;

    void validate() const;
};

// Stacked Elman cell: h_l[t] = act(Wx_l x_l + Wh_l h_l[t-1] + b_l), with
// x_0 the input and x_l = h_{l-1}[t].
class Rnn {
public:
    explicit Rnn(RnnSpec spec);

    // All layers' hidden states, layer-major (num_layers * hidden_width).
    using State = std::vector<double>;

    const RnnSpec& spec() const noexcept { return spec_; }
    const ParamLayout& layout() const noexcept { return layout_; }
    std::size_t num_params() const noexcept { return layout_.size(); }
    std::size_t hidden_width() const noexcept { return spec_.hidden_width; }

    ParamVector init(Stream& rng) const;
    State zero_state() const { return State(spec_.num_layers * spec_.hidden_width, 0.0); }
    std::span<const double> top(const State& s) const {
        return std::span<const double>(s).subspan((spec_.num_layers - 1) * spec_.hidden_width);
    }

    State step(std::span<const double> theta, std::span<const double> input, const State& prev) const;

    struct StepTrace {
        std::vector<double> input;
        State prev;
        State pre;
        State next;
    };
    void step_train(std::span<const double> theta, std::span<const double> input, const State& prev,
                    StepTrace& trace) const;

    // Backpropagation through time over `steps` (in time order). `d_top[t]`
    // is dL/d(top hidden state at step t). Accumulates into `d_theta`.
    void backward(std::span<const double> theta, std::span<const StepTrace> steps,
                  std::span<const std::vector<double>> d_top, std::span<double> d_theta) const;

private:
    void check_theta(std::size_t n) const;
    RnnSpec spec_;
    ParamLayout layout_;
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam. Owns the moment vectors for one parameter vector.
class AdamState {
public:
    AdamState(std::size_t n, AdamConfig cfg);

    // One update of `theta` in place. Non-finite gradients raise NumericError.
    void step(std::span<double> theta, std::span<const double> grad);

    const AdamConfig& config() const noexcept { return cfg_; }
    const std::vector<double>& first_moment() const noexcept { return m_; }
    const std::vector<double>& second_moment() const noexcept { return v_; }
    std::size_t steps() const noexcept { return t_; }

private:
    AdamConfig cfg_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::size_t t_ = 0;
};

// Rescale `g` so its Euclidean norm is at most `max_norm`; returns true when
// it was clipped.
bool clip_global_norm(std::span<double> g, double max_norm);

}  // namespace isl
