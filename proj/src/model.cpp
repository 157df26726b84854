#include "coalim/model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace coalim {

std::int64_t TypeConfiguration::size() const {
    return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

std::vector<double> TypeConfiguration::scaled(std::int64_t n) const {
    std::vector<double> y(counts.size());
    for (std::size_t j = 0; j < counts.size(); ++j)
        y[j] = static_cast<double>(counts[j]) / static_cast<double>(n);
    return y;
}

TypeConfiguration TypeConfiguration::from_scaled(std::span<const double> y, std::int64_t n) {
    std::vector<std::int64_t> c(y.size());
    for (std::size_t j = 0; j < y.size(); ++j) {
        if (!(y[j] >= 0.0)) throw InvalidArgument("scaled configuration has a negative component");
        c[j] = std::llround(y[j] * static_cast<double>(n));
    }
    return TypeConfiguration(std::move(c));
}

MutationCountMatrix::MutationCountMatrix(std::size_t d, std::vector<std::int64_t> entries)
    : d_(d), m_(std::move(entries)) {
    if (m_.size() != d * d) throw InvalidArgument("mutation count matrix must have d*d entries");
    for (auto v : m_)
        if (v < 0) throw InvalidArgument("mutation counts must be nonnegative");
}

std::int64_t MutationCountMatrix::total() const {
    return std::accumulate(m_.begin(), m_.end(), std::int64_t{0});
}

MutationModel::MutationModel(double theta, std::size_t d, std::vector<double> row_major)
    : theta_(theta), d_(d), p_(std::move(row_major)), is_pim_(false) {
    if (p_.size() != d_ * d_) throw InvalidArgument("mutation matrix must have d*d entries");
    is_pim_ = d_ >= 1;
    for (std::size_t i = 1; i < d_ && is_pim_; ++i)
        for (std::size_t j = 0; j < d_; ++j)
            if (std::abs(p_[i * d_ + j] - p_[j]) > kStochasticTolerance) {
                is_pim_ = false;
                break;
            }
}

namespace {

void throw_if_invalid(const MutationModel& m) {
    auto report = m.validate();
    if (report.valid) return;
    std::ostringstream os;
    os << "invalid mutation model:";
    for (const auto& v : report.violations) os << ' ' << v << ';';
    throw InvalidArgument(os.str());
}

}  // namespace

MutationModel MutationModel::general(double theta, std::vector<std::vector<double>> rows) {
    const std::size_t d = rows.size();
    std::vector<double> flat;
    flat.reserve(d * d);
    for (const auto& r : rows) {
        if (r.size() != d) throw InvalidArgument("mutation matrix must be square");
        flat.insert(flat.end(), r.begin(), r.end());
    }
    MutationModel m(theta, d, std::move(flat));
    throw_if_invalid(m);
    return m;
}

MutationModel MutationModel::pim(double theta, std::vector<double> q) {
    const std::size_t d = q.size();
    std::vector<double> flat;
    flat.reserve(d * d);
    for (std::size_t i = 0; i < d; ++i) flat.insert(flat.end(), q.begin(), q.end());
    MutationModel m(theta, d, std::move(flat));
    throw_if_invalid(m);
    return m;
}

std::span<const double> MutationModel::q() const {
    if (!is_pim_) throw InvalidArgument("model is not parent independent");
    return row(0);
}

ValidationReport MutationModel::validate() const {
    ValidationReport r;
    auto fail = [&r](std::string msg) {
        r.valid = false;
        r.violations.push_back(std::move(msg));
    };
    if (d_ < 1) fail("dimension must be at least 1");
    if (!(theta_ > 0.0) || !std::isfinite(theta_)) fail("theta must be positive and finite");
    for (std::size_t i = 0; i < d_; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d_; ++j) {
            const double v = p_[i * d_ + j];
            if (!(v >= 0.0 && v <= 1.0)) {
                std::ostringstream os;
                os << "entry (" << i << ',' << j << ") outside [0,1]";
                fail(os.str());
            }
            s += v;
        }
        if (std::abs(s - 1.0) > kStochasticTolerance) {
            std::ostringstream os;
            os << "non-stochastic row " << i << " (sum " << s << ')';
            fail(os.str());
        }
    }
    r.is_pim = is_pim_;
    return r;
}

ValidationReport validate_model(const MutationModel& model) { return model.validate(); }

bool is_irreducible(const MutationModel& model) {
    const std::size_t d = model.dimension();
    auto reaches_all = [&](bool transpose) {
        std::vector<char> seen(d, 0);
        std::vector<std::size_t> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            const auto i = stack.back();
            stack.pop_back();
            for (std::size_t j = 0; j < d; ++j) {
                const double w = transpose ? model(j, i) : model(i, j);
                if (w > 0.0 && !seen[j]) {
                    seen[j] = 1;
                    stack.push_back(j);
                }
            }
        }
        return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
    };
    // Strongly connected iff state 0 reaches everything and is reached by everything.
    return d >= 1 && reaches_all(false) && reaches_all(true);
}

std::vector<double> stationary_distribution(const MutationModel& model) {
    const auto d = static_cast<Eigen::Index>(model.dimension());
    if (!is_irreducible(model)) throw ReducibleMatrix("mutation matrix is not irreducible");

    // (P^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    Eigen::MatrixXd a(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            a(i, j) = model(static_cast<std::size_t>(j), static_cast<std::size_t>(i)) - (i == j ? 1.0 : 0.0);
    a.row(d - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
    rhs(d - 1) = 1.0;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (lu.rank() < d) throw ReducibleMatrix("stationarity system is singular");
    Eigen::VectorXd pi = lu.solve(rhs);

    std::vector<double> out(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) {
        if (!(pi(i) > 0.0)) throw ReducibleMatrix("stationary distribution has a nonpositive entry");
        out[static_cast<std::size_t>(i)] = pi(i);
    }
    return out;
}

double sum_norm(std::span<const double> y) {
    double s = 0.0;
    for (double v : y) s += std::abs(v);
    return s;
}

double euclidean_norm(std::span<const double> y) {
    double s = 0.0;
    for (double v : y) s += v * v;
    return std::sqrt(s);
}

}  // namespace coalim
