#include "isl/isl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/binomial.hpp>

#include "isl/autodiff.hpp"
#include "isl/errors.hpp"

namespace isl {

namespace {

constexpr double quadrature_tolerance = 1e-6;

template <class F>
double integrate(F f, double a, double b, const char* what) {
    double error = 0.0;
    const double value =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, 1e-12, &error);
    if (!std::isfinite(value) || error > quadrature_tolerance) {
        throw NumericError("quadrature", std::string("quadrature did not converge for ") + what);
    }
    return value;
}

// Breakpoints plus each component's location, so every piece is smooth and
// unimodal enough for the adaptive rule.
void split_points(const Distribution& d, std::vector<double>& out) {
    const auto b = d.breakpoints();
    out.insert(out.end(), b.begin(), b.end());
    if (const auto* n = std::get_if<Normal>(&d.kind())) out.push_back(n->mu);
    if (const auto* c = std::get_if<Cauchy>(&d.kind())) out.push_back(c->location);
    if (const auto* m = std::get_if<Mixture>(&d.kind())) {
        for (const auto& comp : m->components) split_points(comp, out);
    }
}

template <class F>
double integrate_line(F f, std::vector<double> cuts, const char* what) {
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> edges{-inf};
    edges.insert(edges.end(), cuts.begin(), cuts.end());
    edges.push_back(inf);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) total += integrate(f, edges[i], edges[i + 1], what);
    return total;
}

}  // namespace

void IslConfig::validate() const {
    if (k < 1) throw std::invalid_argument("K must be >= 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
    if (!(nu > 0.0)) throw std::invalid_argument("nu must be > 0");
    if (norm_order != 1 && norm_order != 2) throw std::invalid_argument("norm order must be 1 or 2");
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
}

RankHistogram RankHistogram::from_ranks(std::span<const int> ranks, int K) {
    auto h = empty(K);
    for (int r : ranks) h.add(r);
    return h;
}

void RankHistogram::add(int rank) {
    if (rank < 0 || rank > k()) throw std::out_of_range("rank outside 0..K");
    ++counts[static_cast<std::size_t>(rank)];
    ++total;
}

int rank_statistic(double y, std::span<const double> samples) {
    int n = 0;
    for (double s : samples) n += s < y ? 1 : 0;
    return n;
}

double soft_count(double y, std::span<const double> samples, double alpha) {
    double a = 0.0;
    for (double s : samples) a += ad::sigmoid(alpha * (y - s));
    return a;
}

SoftHistogram soft_histogram(std::span<const double> soft_counts, int K, double nu) {
    if (!(nu > 0.0)) throw std::invalid_argument("nu must be > 0");
    if (K < 0) throw std::invalid_argument("K must be >= 0");
    if (soft_counts.empty()) throw std::invalid_argument("soft_histogram needs at least one soft count");
    const double two_nu2 = 2.0 * nu * nu;
    SoftHistogram h{std::vector<double>(static_cast<std::size_t>(K) + 1, 0.0)};
    for (int k = 0; k <= K; ++k) {
        double acc = 0.0;
        for (double a : soft_counts) {
            const double d = a - static_cast<double>(k);
            acc += std::exp(-(d * d) / two_nu2);
        }
        h.q[static_cast<std::size_t>(k)] = acc / static_cast<double>(soft_counts.size());
    }
    return h;
}

namespace {

double distance_to_uniform(std::span<const double> v, int norm_order) {
    const double u = 1.0 / static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) {
        const double d = u - x;
        acc += norm_order == 1 ? std::abs(d) : d * d;
    }
    return norm_order == 1 ? acc : std::sqrt(acc);
}

}  // namespace

double isl_loss(const SoftHistogram& q, int norm_order) {
    if (norm_order != 1 && norm_order != 2) throw std::invalid_argument("norm order must be 1 or 2");
    return distance_to_uniform(q.q, norm_order);
}

RankHistogram simulate_rank_histogram(const Distribution& p, const Distribution& p_tilde, int K,
                                      std::size_t trials, Stream& rng) {
    if (K < 0) throw std::invalid_argument("K must be >= 0");
    auto h = RankHistogram::empty(K);
    std::vector<double> draws(static_cast<std::size_t>(K));
    for (std::size_t t = 0; t < trials; ++t) {
        const double y = p.sample(rng);
        for (auto& d : draws) d = p_tilde.sample(rng);
        h.add(rank_statistic(y, draws));
    }
    return h;
}

double theoretical_isl(const RankHistogram& hist, int norm_order) {
    if (hist.total == 0) throw std::invalid_argument("theoretical loss needs a nonempty histogram");
    if (norm_order != 1 && norm_order != 2) throw std::invalid_argument("norm order must be 1 or 2");
    std::vector<double> freq(hist.counts.size());
    for (std::size_t i = 0; i < freq.size(); ++i) {
        freq[i] = static_cast<double>(hist.counts[i]) / static_cast<double>(hist.total);
    }
    return distance_to_uniform(freq, norm_order);
}

double q_k_oracle(const Distribution& p, const std::function<double(double)>& model_cdf, int K, int n,
                  std::span<const double> extra_cuts) {
    if (K < 0 || n < 0 || n > K) throw std::invalid_argument("q_k_oracle needs 0 <= n <= K");
    const double binom = boost::math::binomial_coefficient<double>(static_cast<unsigned>(K), static_cast<unsigned>(n));
    // Integrate against p's density over pieces split at both laws' kinks
    // and locations; infinite end pieces use the rule's range transform.
    std::vector<double> cuts(extra_cuts.begin(), extra_cuts.end());
    split_points(p, cuts);
    auto f = [&](double y) {
        const double pdf = p.pdf(y);
        if (pdf == 0.0) return 0.0;
        const double F = std::clamp(model_cdf(y), 0.0, 1.0);
        return binom * std::pow(F, n) * std::pow(1.0 - F, K - n) * pdf;
    };
    return integrate_line(f, cuts, "Q_K(n)");
}

std::vector<double> q_k_oracle_all(const Distribution& p, const std::function<double(double)>& model_cdf, int K,
                                   std::span<const double> extra_cuts) {
    std::vector<double> q(static_cast<std::size_t>(K) + 1);
    for (int n = 0; n <= K; ++n) q[static_cast<std::size_t>(n)] = q_k_oracle(p, model_cdf, K, n, extra_cuts);
    return q;
}

double l1_density_distance(const Distribution& p, const Distribution& p_tilde) {
    std::vector<double> cuts;
    split_points(p, cuts);
    split_points(p_tilde, cuts);
    auto f = [&](double x) { return std::abs(p.pdf(x) - p_tilde.pdf(x)); };
    return integrate_line(f, cuts, "|p - p~|");
}

BoundReport verify_theorem2_bound(const Distribution& p, const Distribution& p_tilde, int K) {
    BoundReport r;
    r.epsilon = l1_density_distance(p, p_tilde);
    std::vector<double> cuts;
    split_points(p_tilde, cuts);
    r.q = q_k_oracle_all(p, [&](double x) { return p_tilde.cdf(x); }, K, cuts);
    const double u = 1.0 / static_cast<double>(K + 1);
    for (double qn : r.q) r.max_deviation = std::max(r.max_deviation, std::abs(qn - u));
    r.max_violation = std::max(0.0, r.max_deviation - r.epsilon);
    return r;
}

double chi_square_critical_value(int dof, double significance) {
    if (dof < 1) throw std::invalid_argument("chi-square needs dof >= 1");
    if (!(significance > 0.0 && significance < 1.0)) throw std::invalid_argument("significance must be in (0, 1)");
    const boost::math::chi_squared_distribution<double> dist(dof);
    return boost::math::quantile(boost::math::complement(dist, significance));
}

ChiSquareReport chi_square_uniformity(const RankHistogram& hist, double significance) {
    if (hist.total == 0) throw std::invalid_argument("chi-square test on an empty histogram");
    ChiSquareReport r;
    const double bins = static_cast<double>(hist.counts.size());
    const double expected = static_cast<double>(hist.total) / bins;
    for (auto c : hist.counts) {
        const double d = static_cast<double>(c) - expected;
        r.statistic += d * d / expected;
    }
    r.dof = hist.k();
    r.low_expected_count = expected < 5.0;
    if (r.dof == 0) {
        r.accept = true;  // a single bin is trivially uniform
        return r;
    }
    r.critical_value = chi_square_critical_value(r.dof, significance);
    r.accept = r.statistic <= r.critical_value;
    return r;
}

bool MomentEstimate::within(double n_se) const { return std::abs(value - expected) <= n_se * std_error; }

std::vector<MomentEstimate> moment_uniformity_check(const Distribution& p,
                                                    const std::function<double(Stream&)>& sampler, int n_max,
                                                    std::size_t n_samples, Stream& rng,
                                                    std::size_t generator_samples) {
    if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
    if (n_samples < 2) throw std::invalid_argument("need at least two samples");
    if (generator_samples == 0) generator_samples = 10 * n_samples;
    std::vector<double> model(generator_samples);
    for (auto& x : model) x = sampler(rng);
    std::sort(model.begin(), model.end());

    std::vector<double> u(n_samples);
    for (auto& v : u) {
        const double y = p.sample(rng);
        // Empirical cdf: fraction of model draws <= y.
        const auto it = std::upper_bound(model.begin(), model.end(), y);
        v = static_cast<double>(it - model.begin()) / static_cast<double>(model.size());
    }

    std::vector<MomentEstimate> out;
    const double m = static_cast<double>(n_samples);
    for (int n = 1; n <= n_max; ++n) {
        double sum = 0.0;
        double sum2 = 0.0;
        for (double v : u) {
            const double t = std::pow(v, n);
            sum += t;
            sum2 += t * t;
        }
        const double mean = sum / m;
        const double var = std::max(0.0, (sum2 - m * mean * mean) / (m - 1.0));
        out.push_back({n, mean, std::sqrt(var / m), 1.0 / (n + 1.0)});
    }
    return out;
}

}  // namespace isl
