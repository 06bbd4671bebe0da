#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "isl/random.hpp"

namespace isl {

class Distribution;

struct Normal {
    double mu;
    double sigma;
};

struct Uniform {
    double a;
    double b;
};

struct Cauchy {
    double location;
    double scale;
};

// Pareto type I: support [scale, inf), cdf 1 - (scale/x)^shape.
struct Pareto {
    double scale;
    double shape;
};

struct Mixture {
    std::vector<Distribution> components;
    std::vector<double> weights;
};

// Analytic univariate target distribution. Parameters are validated at
// construction (std::invalid_argument); evaluation never throws except
// quantile() outside (0, 1).
class Distribution {
public:
    using Kind = std::variant<Normal, Uniform, Cauchy, Pareto, Mixture>;

    static Distribution normal(double mu, double sigma);
    static Distribution uniform(double a, double b);
    static Distribution cauchy(double location, double scale);
    static Distribution pareto(double scale, double shape);
    // Empty weights means equal weights.
    static Distribution mixture(std::vector<Distribution> components,
                                std::vector<double> weights = {});

    // Parse the compact grammar: `normal:4,2`, `uniform:-2,2`, `cauchy:1,2`,
    // `pareto:1,1`, `mix:[normal:5,2;normal:-1,1]` with optional `@w` weight
    // suffixes on mixture components. `model1`, `model2`, `model3` name the
    // mixture benchmarks.
    static Distribution parse(std::string_view text);

    const Kind& kind() const noexcept { return kind_; }
    bool is_mixture() const noexcept { return std::holds_alternative<Mixture>(kind_); }

    double pdf(double x) const;
    double cdf(double x) const;
    // Mixtures are inverted by bisection to |cdf(x) - u| <= 1e-8 or machine
    // resolution in x, whichever comes first. Throws std::domain_error for
    // u outside (0, 1).
    double quantile(double u) const;

    double sample(Stream& rng) const;
    std::vector<double> sample(std::size_t n, Stream& rng) const;

    // Round-trips through parse().
    std::string to_string() const;

    // Points where the pdf is discontinuous or the support ends.
    std::vector<double> breakpoints() const;

private:
    explicit Distribution(Kind k) : kind_(std::move(k)) {}
    Kind kind_;
};

// Latent noise p0 fed to generators.
class NoiseSource {
public:
    enum class Type { StandardNormal, Uniform };

    static NoiseSource standard_normal() { return NoiseSource(Type::StandardNormal, 0.0, 1.0); }
    static NoiseSource uniform(double a, double b);
    // `normal` or `uniform:a,b`.
    static NoiseSource parse(std::string_view text);

    Type type() const noexcept { return type_; }
    double sample(Stream& rng) const;
    double cdf(double z) const;
    // 1 - cdf(z), computed without cancellation.
    double ccdf(double z) const;
    std::string to_string() const;

private:
    NoiseSource(Type t, double a, double b) : type_(t), a_(a), b_(b) {}
    Type type_;
    double a_;
    double b_;
};

// F^{-1}(F_Z(z)), or F^{-1}(1 - F_Z(z)) when reflected: the two monotone maps
// pushing the noise law onto `dist`.
double optimal_transform(const Distribution& dist, const NoiseSource& noise, double z,
                         bool reflected);

// The mixture targets used in the 1D benchmarks.
Distribution model1();
Distribution model2();
Distribution model3();

double standard_normal_cdf(double x);
double standard_normal_quantile(double u);

}  // namespace isl
