#include "coalim/sampling.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace coalim {

double log_pim_sampling_probability(const TypeConfiguration& config, double theta, std::span<const double> q) {
    if (config.dimension() != q.size()) throw InvalidArgument("configuration dimension does not match Q");
    if (!(theta > 0.0)) throw InvalidArgument("theta must be positive");
    const auto s = config.size();
    if (s < 1) throw InvalidArgument("configuration must hold at least one lineage");
    double lp = std::lgamma(static_cast<double>(s) + 1.0) + std::lgamma(theta) - std::lgamma(theta + static_cast<double>(s));
    for (std::size_t j = 0; j < q.size(); ++j) {
        const auto nj = config[j];
        if (nj < 0) throw InvalidArgument("negative type count");
        if (nj == 0) continue;
        if (!(q[j] > 0.0)) return -std::numeric_limits<double>::infinity();
        const double a = theta * q[j];
        lp += std::lgamma(a + static_cast<double>(nj)) - std::lgamma(a) - std::lgamma(static_cast<double>(nj) + 1.0);
    }
    return lp;
}

double pim_sampling_probability(const TypeConfiguration& config, double theta, std::span<const double> q) {
    return std::exp(log_pim_sampling_probability(config, theta, q));
}

double dirichlet_density(std::span<const double> x, double theta, std::span<const double> q) {
    if (x.size() != q.size()) throw InvalidArgument("dimension mismatch");
    if (x.size() == 1) return 1.0;
    double lp = std::lgamma(theta);
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!(x[j] > 0.0)) throw DomainError("Dirichlet density evaluated on the boundary of the simplex");
        const double a = theta * q[j];
        lp += (a - 1.0) * std::log(x[j]) - std::lgamma(a);
    }
    return std::exp(lp);
}

double pim_asymptotic_approx(std::span<const double> y, std::int64_t n, double theta, std::span<const double> q) {
    if (n < 1) throw InvalidArgument("scale must be at least 1");
    for (double v : y)
        if (!(v > 0.0)) throw DomainError("asymptotic approximation needs a strictly positive y");
    const double r = sum_norm(y);
    std::vector<double> x(y.begin(), y.end());
    for (auto& v : x) v /= r;
    const double e = 1.0 - static_cast<double>(y.size());
    return dirichlet_density(x, theta, q) * std::pow(r, e) * std::pow(static_cast<double>(n), e);
}

double SamplingProbabilityOracle::probability(const TypeConfiguration& config) const {
    return std::exp(log_probability(config));
}

PimSamplingOracle::PimSamplingOracle(double theta, std::vector<double> q) : theta_(theta), q_(std::move(q)) {
    if (!(theta_ > 0.0)) throw InvalidArgument("theta must be positive");
}

PimSamplingOracle::PimSamplingOracle(const MutationModel& model)
    : PimSamplingOracle(model.theta(), std::vector<double>(model.q().begin(), model.q().end())) {}

double PimSamplingOracle::log_probability(const TypeConfiguration& config) const {
    return log_pim_sampling_probability(config, theta_, q_);
}

std::string PimSamplingOracle::id() const {
    std::ostringstream os;
    os.precision(17);
    os << "pim(theta=" << theta_ << ",q=[";
    for (std::size_t j = 0; j < q_.size(); ++j) os << (j ? "," : "") << q_[j];
    os << "])";
    return os.str();
}

void forward_event_table(const TypeConfiguration& config, const MutationModel& model, std::vector<double>& out) {
    const std::size_t d = model.dimension();
    if (config.dimension() != d) throw InvalidArgument("configuration dimension does not match model");
    const auto size = config.size();
    if (size < 2)
        throw DomainError(
            "forward kernel is degenerate at a single individual: growth has probability (s-1)/(s-1+theta) = 0");
    const double s = static_cast<double>(size);
    const double theta = model.theta();
    const double grow = (s - 1.0) / (s - 1.0 + theta);
    const double mutate = theta / (s - 1.0 + theta);
    out.assign(d + d * d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        if (config[j] < 0) throw InvalidArgument("negative type count");
        out[j] = static_cast<double>(config[j]) / s * grow;
    }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) out[d + i * d + j] = static_cast<double>(config[i]) / s * mutate * model(i, j);
}

std::vector<Event> forward_event_distribution(const TypeConfiguration& config, const MutationModel& model) {
    std::vector<double> table;
    forward_event_table(config, model, table);
    const std::size_t d = model.dimension();
    std::vector<Event> events;
    for (std::size_t j = 0; j < d; ++j)
        if (table[j] > 0.0) events.push_back(Event::growth(j, table[j]));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            if (table[d + i * d + j] > 0.0) events.push_back(Event::mutation(i, j, table[d + i * d + j]));
    return events;
}

}  // namespace coalim
