#include "isl/distributions.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

namespace isl {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

double parse_number(std::string_view s) {
    s = trim(s);
    // std::from_chars for double is available in libstdc++ 11.
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    }
    return v;
}

std::vector<double> parse_numbers(std::string_view s) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto end = comma == std::string_view::npos ? s.size() : comma;
        out.push_back(parse_number(s.substr(start, end - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

// Split on `sep` at bracket depth zero.
std::vector<std::string_view> split_top_level(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    int depth = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '[') ++depth;
        if (s[i] == ']') --depth;
        if (depth < 0) throw std::invalid_argument("unbalanced brackets in distribution spec");
        if (s[i] == sep && depth == 0) {
            parts.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    if (depth != 0) throw std::invalid_argument("unbalanced brackets in distribution spec");
    parts.push_back(s.substr(start));
    return parts;
}

std::string format_number(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double standard_normal_quantile(double u) {
    if (!(u > 0.0 && u < 1.0)) throw std::domain_error("normal quantile needs u in (0, 1)");
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

Distribution Distribution::normal(double mu, double sigma) {
    require(std::isfinite(mu) && std::isfinite(sigma), "normal parameters must be finite");
    require(sigma > 0.0, "normal sigma must be > 0");
    return Distribution(Normal{mu, sigma});
}

Distribution Distribution::uniform(double a, double b) {
    require(std::isfinite(a) && std::isfinite(b), "uniform bounds must be finite");
    require(a < b, "uniform requires a < b");
    return Distribution(Uniform{a, b});
}

Distribution Distribution::cauchy(double location, double scale) {
    require(std::isfinite(location) && std::isfinite(scale), "cauchy parameters must be finite");
    require(scale > 0.0, "cauchy scale must be > 0");
    return Distribution(Cauchy{location, scale});
}

Distribution Distribution::pareto(double scale, double shape) {
    require(std::isfinite(scale) && std::isfinite(shape), "pareto parameters must be finite");
    require(scale > 0.0, "pareto scale must be > 0");
    require(shape > 0.0, "pareto shape must be > 0");
    return Distribution(Pareto{scale, shape});
}

Distribution Distribution::mixture(std::vector<Distribution> components, std::vector<double> weights) {
    require(!components.empty(), "mixture needs at least one component");
    if (weights.empty()) {
        weights.assign(components.size(), 1.0 / static_cast<double>(components.size()));
    }
    require(weights.size() == components.size(), "mixture weights/components size mismatch");
    double total = 0.0;
    for (double w : weights) {
        require(std::isfinite(w) && w >= 0.0, "mixture weights must be nonnegative");
        total += w;
    }
    require(std::abs(total - 1.0) <= 1e-12, "mixture weights must sum to 1");
    return Distribution(Mixture{std::move(components), std::move(weights)});
}

Distribution Distribution::parse(std::string_view text) {
    text = trim(text);
    if (text == "model1") return model1();
    if (text == "model2") return model2();
    if (text == "model3") return model3();

    const auto colon = text.find(':');
    if (colon == std::string_view::npos) {
        throw std::invalid_argument("distribution spec needs 'kind:params': '" + std::string(text) + "'");
    }
    const auto kind = trim(text.substr(0, colon));
    const auto body = trim(text.substr(colon + 1));

    if (kind == "mix") {
        if (body.size() < 2 || body.front() != '[' || body.back() != ']') {
            throw std::invalid_argument("mixture spec must be mix:[...]");
        }
        std::vector<Distribution> comps;
        std::vector<double> weights;
        bool any_weight = false;
        for (auto part : split_top_level(body.substr(1, body.size() - 2), ';')) {
            part = trim(part);
            // A weight suffix is the last '@' outside brackets.
            std::size_t at = std::string_view::npos;
            int depth = 0;
            for (std::size_t i = 0; i < part.size(); ++i) {
                if (part[i] == '[') ++depth;
                if (part[i] == ']') --depth;
                if (part[i] == '@' && depth == 0) at = i;
            }
            if (at != std::string_view::npos) {
                any_weight = true;
                weights.push_back(parse_number(part.substr(at + 1)));
                part = part.substr(0, at);
            } else {
                weights.push_back(std::numeric_limits<double>::quiet_NaN());
            }
            comps.push_back(parse(part));
        }
        if (!any_weight) return mixture(std::move(comps));
        for (double w : weights) {
            if (std::isnan(w)) throw std::invalid_argument("give weights for all mixture components or none");
        }
        return mixture(std::move(comps), std::move(weights));
    }

    const auto p = parse_numbers(body);
    if (p.size() != 2) {
        throw std::invalid_argument("distribution '" + std::string(kind) + "' takes two parameters");
    }
    if (kind == "normal") return normal(p[0], p[1]);
    if (kind == "uniform") return uniform(p[0], p[1]);
    if (kind == "cauchy") return cauchy(p[0], p[1]);
    if (kind == "pareto") return pareto(p[0], p[1]);
    throw std::invalid_argument("unknown distribution kind '" + std::string(kind) + "'");
}

double Distribution::pdf(double x) const {
    return std::visit(
        overloaded{
            [x](const Normal& d) {
                const double s = (x - d.mu) / d.sigma;
                return std::exp(-0.5 * s * s) / (d.sigma * std::sqrt(2.0 * std::numbers::pi));
            },
            [x](const Uniform& d) { return (x >= d.a && x <= d.b) ? 1.0 / (d.b - d.a) : 0.0; },
            [x](const Cauchy& d) {
                const double s = (x - d.location) / d.scale;
                return 1.0 / (std::numbers::pi * d.scale * (1.0 + s * s));
            },
            [x](const Pareto& d) {
                return x < d.scale ? 0.0 : d.shape * std::pow(d.scale / x, d.shape) / x;
            },
            [x](const Mixture& m) {
                double acc = 0.0;
                for (std::size_t i = 0; i < m.components.size(); ++i) {
                    acc += m.weights[i] * m.components[i].pdf(x);
                }
                return acc;
            },
        },
        kind_);
}

double Distribution::cdf(double x) const {
    return std::visit(
        overloaded{
            [x](const Normal& d) { return standard_normal_cdf((x - d.mu) / d.sigma); },
            [x](const Uniform& d) {
                if (x <= d.a) return 0.0;
                if (x >= d.b) return 1.0;
                return (x - d.a) / (d.b - d.a);
            },
            [x](const Cauchy& d) {
                return 0.5 + std::atan((x - d.location) / d.scale) / std::numbers::pi;
            },
            [x](const Pareto& d) { return x <= d.scale ? 0.0 : 1.0 - std::pow(d.scale / x, d.shape); },
            [x](const Mixture& m) {
                double acc = 0.0;
                for (std::size_t i = 0; i < m.components.size(); ++i) {
                    acc += m.weights[i] * m.components[i].cdf(x);
                }
                return acc;
            },
        },
        kind_);
}

double Distribution::quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw std::domain_error("quantile needs u in (0, 1)");
    return std::visit(
        overloaded{
            [u](const Normal& d) { return d.mu + d.sigma * standard_normal_quantile(u); },
            [u](const Uniform& d) { return d.a + (d.b - d.a) * u; },
            [u](const Cauchy& d) {
                return d.location + d.scale * std::tan(std::numbers::pi * (u - 0.5));
            },
            [u](const Pareto& d) { return d.scale / std::pow(1.0 - u, 1.0 / d.shape); },
            [this, u](const Mixture& m) {
                // Each component cdf at min_i Q_i(u) is <= u, and >= u at the
                // max, so the mixture root is bracketed.
                double lo = std::numeric_limits<double>::infinity();
                double hi = -lo;
                for (const auto& c : m.components) {
                    const double q = c.quantile(u);
                    lo = std::min(lo, q);
                    hi = std::max(hi, q);
                }
                for (int it = 0; it < 400 && lo < hi; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (mid <= lo || mid >= hi) break;
                    const double f = cdf(mid) - u;
                    if (std::abs(f) <= 1e-8 * 1e-3) return mid;
                    if (f < 0.0) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return 0.5 * (lo + hi);
            },
        },
        kind_);
}

double Distribution::sample(Stream& rng) const {
    return std::visit(
        overloaded{
            [&rng](const Normal& d) { return d.mu + d.sigma * rng.normal(); },
            [&rng](const Uniform& d) { return rng.uniform(d.a, d.b); },
            [&rng](const Cauchy& d) {
                return d.location + d.scale * std::tan(std::numbers::pi * (rng.uniform_open() - 0.5));
            },
            [&rng](const Pareto& d) { return d.scale / std::pow(rng.uniform_open(), 1.0 / d.shape); },
            [&rng](const Mixture& m) {
                if (m.components.size() == 1) return m.components.front().sample(rng);
                const double u = rng.uniform();
                double acc = 0.0;
                std::size_t pick = m.components.size() - 1;
                for (std::size_t i = 0; i < m.weights.size(); ++i) {
                    acc += m.weights[i];
                    if (u < acc) {
                        pick = i;
                        break;
                    }
                }
                return m.components[pick].sample(rng);
            },
        },
        kind_);
}

std::vector<double> Distribution::sample(std::size_t n, Stream& rng) const {
    std::vector<double> out(n);
    for (auto& x : out) x = sample(rng);
    return out;
}

std::string Distribution::to_string() const {
    return std::visit(
        overloaded{
            [](const Normal& d) { return "normal:" + format_number(d.mu) + "," + format_number(d.sigma); },
            [](const Uniform& d) { return "uniform:" + format_number(d.a) + "," + format_number(d.b); },
            [](const Cauchy& d) {
                return "cauchy:" + format_number(d.location) + "," + format_number(d.scale);
            },
            [](const Pareto& d) {
                return "pareto:" + format_number(d.scale) + "," + format_number(d.shape);
            },
            [](const Mixture& m) {
                std::string s = "mix:[";
                for (std::size_t i = 0; i < m.components.size(); ++i) {
                    if (i) s += ';';
                    s += m.components[i].to_string() + "@" + format_number(m.weights[i]);
                }
                return s + "]";
            },
        },
        kind_);
}

std::vector<double> Distribution::breakpoints() const {
    return std::visit(overloaded{
                          [](const Normal&) { return std::vector<double>{}; },
                          [](const Uniform& d) { return std::vector<double>{d.a, d.b}; },
                          [](const Cauchy&) { return std::vector<double>{}; },
                          [](const Pareto& d) { return std::vector<double>{d.scale}; },
                          [](const Mixture& m) {
                              std::vector<double> out;
                              for (const auto& c : m.components) {
                                  auto b = c.breakpoints();
                                  out.insert(out.end(), b.begin(), b.end());
                              }
                              std::sort(out.begin(), out.end());
                              out.erase(std::unique(out.begin(), out.end()), out.end());
                              return out;
                          },
                      },
                      kind_);
}

NoiseSource NoiseSource::uniform(double a, double b) {
    require(std::isfinite(a) && std::isfinite(b) && a < b, "uniform noise requires a < b");
    return NoiseSource(Type::Uniform, a, b);
}

NoiseSource NoiseSource::parse(std::string_view text) {
    text = trim(text);
    if (text == "normal" || text == "normal:0,1") return standard_normal();
    if (text.starts_with("uniform:")) {
        const auto p = parse_numbers(text.substr(8));
        if (p.size() != 2) throw std::invalid_argument("uniform noise takes two parameters");
        return uniform(p[0], p[1]);
    }
    throw std::invalid_argument("noise must be 'normal' or 'uniform:a,b'");
}

double NoiseSource::sample(Stream& rng) const {
    return type_ == Type::StandardNormal ? rng.normal() : rng.uniform(a_, b_);
}

double NoiseSource::cdf(double z) const {
    if (type_ == Type::StandardNormal) return standard_normal_cdf(z);
    return std::clamp((z - a_) / (b_ - a_), 0.0, 1.0);
}

double NoiseSource::ccdf(double z) const {
    if (type_ == Type::StandardNormal) return standard_normal_cdf(-z);
    return std::clamp((b_ - z) / (b_ - a_), 0.0, 1.0);
}

std::string NoiseSource::to_string() const {
    if (type_ == Type::StandardNormal) return "normal";
    return "uniform:" + format_number(a_) + "," + format_number(b_);
}

double optimal_transform(const Distribution& dist, const NoiseSource& noise, double z, bool reflected) {
    double u = reflected ? noise.ccdf(z) : noise.cdf(z);
    // Keep u inside (0, 1) so the quantile stays finite at extreme z.
    constexpr double tiny = std::numeric_limits<double>::min();
    u = std::clamp(u, tiny, std::nextafter(1.0, 0.0));
    return dist.quantile(u);
}

Distribution model1() {
    return Distribution::mixture({Distribution::normal(5, 2), Distribution::normal(-1, 1)});
}

Distribution model2() {
    return Distribution::mixture(
        {Distribution::normal(5, 2), Distribution::normal(-1, 1), Distribution::normal(-10, 3)});
}

Distribution model3() {
    return Distribution::mixture({Distribution::normal(-5, 2), Distribution::pareto(5, 1)});
}

}  // namespace isl
