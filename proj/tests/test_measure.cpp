#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coalim/measure.hpp"

#include <cmath>
#include <functional>

using namespace coalim;
using doctest::Approx;

namespace {

TypeConfiguration cfg(std::vector<std::int64_t> c) { return TypeConfiguration(std::move(c)); }
const std::vector<double> kHalf{0.5, 0.5};
const std::vector<double> kSkew{0.3, 0.7};
const MutationModel kGeneral = MutationModel::general(4.0, {{0.7, 0.3}, {0.4, 0.6}});

ScaledPath make_path(TypeConfiguration initial, std::vector<Event> events) {
    ScaledPath p;
    p.scale = initial.size();
    p.initial = std::move(initial);
    p.events = std::move(events);
    return p;
}

}  // namespace

TEST_CASE("mutation weight") {
    MutationCountMatrix m(2, {1, 2, 0, 1});
    CHECK(mutation_weight(m, kGeneral, kHalf) == Approx(0.6048).epsilon(1e-14));
    CHECK(mutation_weight(MutationCountMatrix(2), kGeneral, kHalf) == 1.0);
    const auto same = MutationModel::pim(4.0, kHalf);
    CHECK(mutation_weight(m, same, kHalf) == Approx(1.0));
    const auto zero_p = MutationModel::general(4.0, {{1.0, 0.0}, {0.5, 0.5}});
    CHECK(mutation_weight(m, zero_p, kHalf) == 0.0);
    CHECK_THROWS_AS(mutation_weight(m, kGeneral, std::vector<double>{1.0, 0.0}), InvalidArgument);
}

TEST_CASE("sampling ratio") {
    const PimSamplingOracle q(4.0, kHalf), p(4.0, kSkew);
    CHECK(sampling_ratio(cfg({2, 0}), cfg({1, 1}), &p, q) == Approx((0.132 / 0.3) * (0.4 / 0.336)).epsilon(1e-13));
    CHECK(sampling_ratio(cfg({2, 0}), cfg({1, 1}), &p, q) == Approx(0.523810).epsilon(1e-6));
    CHECK(sampling_ratio(cfg({3, 4}), cfg({3, 4}), &p, q) == Approx(1.0));
    CHECK(sampling_ratio(cfg({3, 4}), cfg({1, 2}), &q, q) == Approx(1.0));
    CHECK_THROWS_AS(sampling_ratio(cfg({3, 4}), cfg({1, 2}), nullptr, q), OracleMissing);
}

TEST_CASE("MRCA oracle and complete history ratio") {
    const MrcaOracle mrca(kGeneral);
    CHECK(std::exp(mrca.log_probability(cfg({1, 0}))) == Approx(4.0 / 7.0));
    CHECK_THROWS_AS(mrca.log_probability(cfg({1, 1})), OracleMissing);
    // Proposal with the same invariant distribution: the endpoint factor is 1.
    const std::vector<double> pi{4.0 / 7.0, 3.0 / 7.0};
    const auto proposal = MutationModel::pim(4.0, pi);
    const MrcaOracle mrca_q(proposal);
    auto rng = Rng::for_stream(11, 0);
    for (int k = 0; k < 20; ++k) {
        const auto path = simulate_backward(cfg({3, 2}), proposal, 5, rng);
        REQUIRE(path.absorbed);
        const double lr = history_likelihood_ratio(path, Direction::Forward, &mrca, mrca_q, kGeneral, pi);
        CHECK(lr == Approx(mutation_weight(path.final_mutations(), kGeneral, pi)).epsilon(1e-12));
    }
}

TEST_CASE("history ratio equals the product of per-step ratios") {
    const auto target = MutationModel::pim(4.0, kSkew);
    const auto proposal = MutationModel::pim(4.0, kHalf);
    const PimSamplingOracle op(target), oq(proposal);
    const auto start = cfg({2, 1});
    std::map<std::pair<TypeConfiguration, MutationCountMatrix>, std::vector<double>> by_endpoint;
    std::vector<Event> events;
    std::function<void(TypeConfiguration, MutationCountMatrix, double)> walk = [&](TypeConfiguration c, MutationCountMatrix m,
                                                                               double step_ratio) {
        if (events.size() == 3 || c.size() == 1) {
            const auto path = make_path(start, events);
            const double lr = history_likelihood_ratio(path, Direction::Backward, &op, oq, target, kHalf);
            CHECK(std::abs(lr - step_ratio) <= 1e-12 * std::max(1.0, step_ratio));
            by_endpoint[{c, m}].push_back(lr);
            return;
        }
        for (const auto& e : backward_event_distribution(c, proposal)) {
            const double pt = e.kind == EventKind::Coalescence ? coalescence_probability(c, target, e.to)
                                                                : mutation_probability(c, target, e.from, e.to);
            auto c2 = c;
            auto m2 = m;
            apply_event(e, Direction::Backward, c2, m2);
            events.push_back(e);
            walk(c2, m2, step_ratio * pt / e.probability);
            events.pop_back();
        }
    };
    walk(start, MutationCountMatrix(2), 1.0);
    bool saw_shared = false;
    for (const auto& [key, values] : by_endpoint) {
        if (values.size() > 1) saw_shared = true;
        for (double v : values) CHECK(std::abs(v - values.front()) <= 1e-12);
    }
    CHECK(saw_shared);
}

TEST_CASE("P = Q gives unit ratios") {
    const auto model = MutationModel::pim(4.0, kHalf);
    const PimSamplingOracle o(model);
    auto rng = Rng::for_stream(2, 2);
    const auto path = simulate_backward(cfg({5, 5}), model, 10, rng);
    CHECK(history_likelihood_ratio(path, Direction::Backward, &o, o, model, kHalf) == Approx(1.0));
    ImportanceSpec spec{cfg({40, 60}), 100, 0.5, 200, 3, 0, RMode::Exact, 1};
    for (const auto& s : weighted_samples(spec, model, model)) {
        CHECK(s.c_value == 1.0);
        CHECK(s.r_value == Approx(1.0));
    }
}

TEST_CASE("enumerated unit expectation") {
    for (std::size_t k = 0; k <= 4; ++k) {
        CHECK(std::abs(enumerate_unit_expectation(cfg({1, 1}), k, 4.0, kHalf, kSkew) - 1.0) <= 1e-10);
        CHECK(std::abs(enumerate_unit_expectation(cfg({2, 1}), k, 4.0, kHalf, kSkew) - 1.0) <= 1e-10);
    }
    CHECK(enumerate_unit_expectation(cfg({2, 1}), 0, 4.0, kHalf, kSkew) == Approx(1.0));
    CHECK(enumerate_unit_expectation(cfg({2, 1}), 3, 4.0, kHalf, kHalf) == Approx(1.0));
    CHECK(std::abs(enumerate_unit_expectation(cfg({2, 2, 1}), 5, 1.5, std::vector<double>{0.2, 0.3, 0.5},
                                              std::vector<double>{0.4, 0.4, 0.2}) - 1.0) <= 1e-10);
    CHECK_THROWS_AS(enumerate_unit_expectation(cfg({3, 3}), 6, 4.0, kHalf, kSkew, 10), BudgetExceeded);
}

TEST_CASE("analytic unit expectation over random models") {
    Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t d = 1 + rng() % 5;
        std::vector<std::vector<double>> rows(d, std::vector<double>(d));
        for (auto& r : rows) {
            double s = 0;
            for (auto& x : r) s += (x = 0.05 + rng.uniform());
            for (auto& x : r) x /= s;
        }
        std::vector<double> q(d), y(d);
        double s = 0;
        for (auto& x : q) s += (x = 0.05 + rng.uniform());
        for (auto& x : q) x /= s;
        for (auto& x : y) x = 0.05 + rng.uniform();
        const double t = sum_norm(y) * 0.99 * rng.uniform();
        const auto target = MutationModel::general(0.1 + 10 * rng.uniform(), rows);
        CHECK(std::abs(analytic_unit_expectation(y, t, target, q) - 1.0) <= 1e-12);
    }
}

TEST_CASE("Monte Carlo unit expectation and cross-validated indicator") {
    const auto target = MutationModel::pim(4.0, kSkew);
    const auto proposal = MutationModel::pim(4.0, kHalf);
    const auto initial = cfg({80, 120});
    ImportanceSpec spec{initial, 200, 0.5, 100000, 21, 0, RMode::Exact, 2};
    const auto unit = importance_expectation([](const WeightedSample&) { return 1.0; }, spec, target, proposal);
    CHECK(std::abs(unit.mean - 1.0) <= 3.0 * unit.standard_error);

    const auto samples = weighted_samples(spec, target, proposal);
    for (const auto& s : samples) {
        CHECK(std::isfinite(s.weight()));
        CHECK(s.weight() > 0.0);
    }
    // Indicator {m_12 = 1}: weighted proposal estimate against direct target simulation.
    const auto g = [](const WeightedSample& s) { return s.m(0, 1) == 1 ? 1.0 : 0.0; };
    const auto weighted = importance_expectation(g, spec, target, proposal);
    const std::size_t steps = scaled_steps(200, 0.5);
    std::vector<double> direct(50000);
    for (std::size_t k = 0; k < direct.size(); ++k) {
        auto rng = Rng::for_stream(22, k);
        const auto path = simulate_backward(initial, target, 200, rng, steps);
        direct[k] = path.state_at_step(steps).second(0, 1) == 1 ? 1.0 : 0.0;
    }
    const auto plain = mean_and_error(direct);
    const double se = std::sqrt(weighted.standard_error * weighted.standard_error + plain.standard_error * plain.standard_error);
    CHECK(std::abs(weighted.mean - plain.mean) <= 3.0 * se);
}

TEST_CASE("asymptotic mode uses r = 1 and needs no oracle") {
    ImportanceSpec spec{cfg({40, 60}), 100, 0.5, 500, 5, 0, RMode::Asymptotic, 1};
    const auto samples = weighted_samples(spec, kGeneral, MutationModel::pim(4.0, kHalf));
    for (const auto& s : samples) {
        CHECK(s.r_value == 1.0);
        CHECK(s.c_value == Approx(mutation_weight(s.m, kGeneral, kHalf)));
    }
    spec.r_mode = RMode::Exact;
    CHECK_THROWS_AS(weighted_samples(spec, kGeneral, MutationModel::pim(4.0, kHalf)), OracleMissing);
}

TEST_CASE("weighted samples do not depend on thread count") {
    const auto target = MutationModel::pim(4.0, kSkew);
    const auto proposal = MutationModel::pim(4.0, kHalf);
    ImportanceSpec spec{cfg({40, 60}), 100, 0.5, 1000, 6, 0, RMode::Exact, 1};
    const auto a = weighted_samples(spec, target, proposal);
    spec.threads = 4;
    const auto b = weighted_samples(spec, target, proposal);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        CHECK(a[k].m == b[k].m);
        CHECK(a[k].weight() == b[k].weight());
    }
}
