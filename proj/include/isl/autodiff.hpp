#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace isl::ad {

class Tape;

// Scalar handle into a Tape. Cheap to copy; valid while its tape lives.
class Var {
public:
    Var() = default;
    double value() const;
    std::size_t index() const noexcept { return index_; }
    Tape* tape() const noexcept { return tape_; }

private:
    friend class Tape;
    Var(Tape* t, std::size_t i) : tape_(t), index_(i) {}
    Tape* tape_ = nullptr;
    std::size_t index_ = 0;
};

// Reverse-mode tape over a fixed scalar vocabulary. Each node records at
// most two parents with their local partial derivatives. A non-finite node
// value raises NumericError carrying the operation name.
class Tape {
public:
    Var variable(double value);
    // Adjoint of `output` with respect to every node, indexed by Var::index().
    std::vector<double> gradient(Var output) const;
    std::size_t size() const noexcept { return nodes_.size(); }
    double value(std::size_t i) const { return nodes_[i].value; }

    Var unary(double value, Var a, double da, const char* op);
    Var binary(double value, Var a, double da, Var b, double db, const char* op);

private:
    static constexpr std::size_t none = static_cast<std::size_t>(-1);
    struct Node {
        double value;
        std::size_t a;
        double da;
        std::size_t b;
        double db;
    };
    Var push(Node n, const char* op);
    std::vector<Node> nodes_;
};

inline double Var::value() const { return tape_->value(index_); }

Var operator+(Var a, Var b);
Var operator+(Var a, double b);
Var operator+(double a, Var b);
Var operator-(Var a, Var b);
Var operator-(Var a, double b);
Var operator-(double a, Var b);
Var operator-(Var a);
Var operator*(Var a, Var b);
Var operator*(Var a, double b);
Var operator*(double a, Var b);
Var operator/(Var a, Var b);
Var operator/(Var a, double b);
Var operator/(double a, Var b);

Var exp(Var a);
Var log(Var a);
Var sqrt(Var a);
Var abs(Var a);
Var pow(Var a, double p);
Var square(Var a);
Var sigmoid(Var a);
Var elu(Var a);
Var relu(Var a);
Var tanh(Var a);

inline double sigmoid(double x) {
    // Split by sign so exp() never overflows.
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}
inline double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
inline double relu(double x) { return x > 0.0 ? x : 0.0; }
inline double square(double x) { return x * x; }

// Gradient of a scalar function of theta built from Tape operations.
std::vector<double> grad(const std::function<Var(Tape&, std::span<const Var>)>& loss,
                         std::span<const double> theta);

// Central finite differences, for checking gradients.
std::vector<double> finite_difference(const std::function<double(std::span<const double>)>& f,
                                      std::span<const double> theta, double step = 1e-5);

}  // namespace isl::ad
