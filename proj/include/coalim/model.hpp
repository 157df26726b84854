#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace coalim {

// Base of every error thrown by the library. The C API maps the subclasses
// onto its error codes.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
  public:
    using Error::Error;
};

// A value requested outside the domain of a formula (absorbed chain, horizon
// past the limit's exit time, origin input, ...).
class DomainError : public Error {
  public:
    using Error::Error;
};

class BudgetExceeded : public Error {
  public:
    using Error::Error;
};

class OracleMissing : public Error {
  public:
    using Error::Error;
};

class ReducibleMatrix : public Error {
  public:
    using Error::Error;
};

inline constexpr double kStochasticTolerance = 1e-12;

// Counts of lineages per type: the grid point n*y of the block counting chain.
struct TypeConfiguration {
    std::vector<std::int64_t> counts;

    TypeConfiguration() = default;
    explicit TypeConfiguration(std::vector<std::int64_t> c) : counts(std::move(c)) {}

    std::size_t dimension() const { return counts.size(); }
    std::int64_t size() const;
    std::int64_t operator[](std::size_t j) const { return counts[j]; }

    // counts / n
    std::vector<double> scaled(std::int64_t n) const;

    // round(n * y) componentwise.
    static TypeConfiguration from_scaled(std::span<const double> y, std::int64_t n);

    bool operator==(const TypeConfiguration&) const = default;
    auto operator<=>(const TypeConfiguration&) const = default;
};

// d x d matrix of accumulated i -> j mutation counts, row-major.
class MutationCountMatrix {
  public:
    MutationCountMatrix() = default;
    explicit MutationCountMatrix(std::size_t d) : d_(d), m_(d * d, 0) {}
    MutationCountMatrix(std::size_t d, std::vector<std::int64_t> entries);

    std::size_t dimension() const { return d_; }
    std::int64_t operator()(std::size_t i, std::size_t j) const { return m_[i * d_ + j]; }
    std::int64_t& operator()(std::size_t i, std::size_t j) { return m_[i * d_ + j]; }
    std::span<const std::int64_t> entries() const { return m_; }
    std::int64_t total() const;
    bool is_zero() const { return total() == 0; }

    bool operator==(const MutationCountMatrix&) const = default;
    auto operator<=>(const MutationCountMatrix&) const = default;

  private:
    std::size_t d_ = 0;
    std::vector<std::int64_t> m_;
};

struct ValidationReport {
    bool valid = true;
    bool is_pim = false;
    std::vector<std::string> violations;
};

// Mutation rate theta and the d x d mutation probability matrix P. A model
// whose rows coincide is parent independent (PIM) with common row Q.
class MutationModel {
  public:
    // Unchecked; use validate() or the factories below.
    MutationModel(double theta, std::size_t d, std::vector<double> row_major);

    // Throws InvalidArgument listing every violated invariant.
    static MutationModel general(double theta, std::vector<std::vector<double>> rows);
    static MutationModel pim(double theta, std::vector<double> q);

    double theta() const { return theta_; }
    std::size_t dimension() const { return d_; }
    double operator()(std::size_t i, std::size_t j) const { return p_[i * d_ + j]; }
    std::span<const double> row(std::size_t i) const { return {p_.data() + i * d_, d_}; }
    std::span<const double> matrix() const { return p_; }
    bool is_pim() const { return is_pim_; }

    // Common row Q. Throws InvalidArgument for non-PIM models.
    std::span<const double> q() const;

    ValidationReport validate() const;

  private:
    double theta_;
    std::size_t d_;
    std::vector<double> p_;
    bool is_pim_;
};

ValidationReport validate_model(const MutationModel& model);

// Reachability on the directed graph of positive entries.
bool is_irreducible(const MutationModel& model);

// Invariant distribution pi with pi P = pi. Throws ReducibleMatrix when P is
// not irreducible.
std::vector<double> stationary_distribution(const MutationModel& model);

double sum_norm(std::span<const double> y);
double euclidean_norm(std::span<const double> y);

}  // namespace coalim
