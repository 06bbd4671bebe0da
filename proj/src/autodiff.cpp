#include "isl/autodiff.hpp"

#include <string>

#include "isl/errors.hpp"

namespace isl::ad {

Var Tape::variable(double value) { return push({value, none, 0.0, none, 0.0}, "variable"); }

Var Tape::unary(double value, Var a, double da, const char* op) {
    return push({value, a.index(), da, none, 0.0}, op);
}

Var Tape::binary(double value, Var a, double da, Var b, double db, const char* op) {
    return push({value, a.index(), da, b.index(), db}, op);
}

Var Tape::push(Node n, const char* op) {
    if (!std::isfinite(n.value) || !std::isfinite(n.da) || !std::isfinite(n.db)) {
        throw NumericError(op, std::string("non-finite value produced by '") + op + "'");
    }
    nodes_.push_back(n);
    return Var(this, nodes_.size() - 1);
}

std::vector<double> Tape::gradient(Var output) const {
    std::vector<double> adj(nodes_.size(), 0.0);
    adj[output.index()] = 1.0;
    for (std::size_t i = output.index() + 1; i-- > 0;) {
        const auto& n = nodes_[i];
        if (adj[i] == 0.0) continue;
        if (n.a != none) adj[n.a] += adj[i] * n.da;
        if (n.b != none) adj[n.b] += adj[i] * n.db;
    }
    return adj;
}

Var operator+(Var a, Var b) { return a.tape()->binary(a.value() + b.value(), a, 1.0, b, 1.0, "add"); }
Var operator+(Var a, double b) { return a.tape()->unary(a.value() + b, a, 1.0, "add"); }
Var operator+(double a, Var b) { return b + a; }
Var operator-(Var a, Var b) { return a.tape()->binary(a.value() - b.value(), a, 1.0, b, -1.0, "sub"); }
Var operator-(Var a, double b) { return a.tape()->unary(a.value() - b, a, 1.0, "sub"); }
Var operator-(double a, Var b) { return b.tape()->unary(a - b.value(), b, -1.0, "sub"); }
Var operator-(Var a) { return a.tape()->unary(-a.value(), a, -1.0, "neg"); }
Var operator*(Var a, Var b) {
    return a.tape()->binary(a.value() * b.value(), a, b.value(), b, a.value(), "mul");
}
Var operator*(Var a, double b) { return a.tape()->unary(a.value() * b, a, b, "mul"); }
Var operator*(double a, Var b) { return b * a; }
Var operator/(Var a, Var b) {
    const double q = a.value() / b.value();
    return a.tape()->binary(q, a, 1.0 / b.value(), b, -q / b.value(), "div");
}
Var operator/(Var a, double b) { return a.tape()->unary(a.value() / b, a, 1.0 / b, "div"); }
Var operator/(double a, Var b) {
    const double q = a / b.value();
    return b.tape()->unary(q, b, -q / b.value(), "div");
}

Var exp(Var a) {
    const double e = std::exp(a.value());
    return a.tape()->unary(e, a, e, "exp");
}
Var log(Var a) { return a.tape()->unary(std::log(a.value()), a, 1.0 / a.value(), "log"); }
Var sqrt(Var a) {
    const double s = std::sqrt(a.value());
    return a.tape()->unary(s, a, 0.5 / s, "sqrt");
}
Var abs(Var a) {
    const double v = a.value();
    return a.tape()->unary(std::abs(v), a, v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0), "abs");
}
Var pow(Var a, double p) {
    const double v = a.value();
    return a.tape()->unary(std::pow(v, p), a, p * std::pow(v, p - 1.0), "pow");
}
Var square(Var a) { return a.tape()->unary(a.value() * a.value(), a, 2.0 * a.value(), "square"); }
Var sigmoid(Var a) {
    const double s = sigmoid(a.value());
    return a.tape()->unary(s, a, s * (1.0 - s), "sigmoid");
}
Var elu(Var a) {
    const double v = a.value();
    return a.tape()->unary(elu(v), a, v > 0.0 ? 1.0 : std::exp(v), "elu");
}
Var relu(Var a) {
    const double v = a.value();
    return a.tape()->unary(relu(v), a, v > 0.0 ? 1.0 : 0.0, "relu");
}
Var tanh(Var a) {
    const double t = std::tanh(a.value());
    return a.tape()->unary(t, a, 1.0 - t * t, "tanh");
}

std::vector<double> grad(const std::function<Var(Tape&, std::span<const Var>)>& loss,
                         std::span<const double> theta) {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(theta.size());
    for (double v : theta) vars.push_back(tape.variable(v));
    const Var out = loss(tape, vars);
    const auto adj = tape.gradient(out);
    std::vector<double> g(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) g[i] = adj[vars[i].index()];
    return g;
}

std::vector<double> finite_difference(const std::function<double(std::span<const double>)>& f,
                                      std::span<const double> theta, double step) {
    std::vector<double> x(theta.begin(), theta.end());
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + step;
        const double up = f(x);
        x[i] = orig - step;
        const double down = f(x);
        x[i] = orig;
        g[i] = (up - down) / (2.0 * step);
    }
    return g;
}

}  // namespace isl::ad
