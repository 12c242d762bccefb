#pragma once

// Discrete Bayes-filter engine for N-cell object search.
//
// The state is a probability vector over cells ("belief"). One cell is
// interrogated per step; the binary outcome is drawn from a Bernoulli
// detection/false-alarm model, and the posterior follows from Bayes' rule.
// Control policies pick the next cell to interrogate so that the Shannon
// entropy of the belief shrinks as fast as possible: greedily (one-step
// lookahead) or by exhaustive finite-horizon tree search.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "bayesosc/errors.hpp"
#include "bayesosc/rng.hpp"

namespace bayesosc::search {

constexpr double kNormalizationTol = 1e-12;

// Probability vector over N search cells.
class Belief {
public:
    explicit Belief(std::vector<double> probs) : probs_(std::move(probs)) {
        validate();
    }

    static Belief uniform(int n_cells) {
        if (n_cells < 1)
            throw ValidationError("belief_search", "belief needs at least one cell");
        return Belief(std::vector<double>(n_cells, 1.0 / n_cells));
    }

    static Belief delta(int n_cells, int cell) {
        std::vector<double> p(n_cells, 0.0);
        p.at(cell) = 1.0;
        return Belief(std::move(p));
    }

    int size() const { return static_cast<int>(probs_.size()); }
    double operator[](int i) const { return probs_[i]; }
    const std::vector<double>& probs() const { return probs_; }

    double max_prob() const {
        return *std::max_element(probs_.begin(), probs_.end());
    }

    bool operator==(const Belief& other) const { return probs_ == other.probs_; }

private:
    void validate() const {
        if (probs_.empty())
            throw ValidationError("belief_search", "belief needs at least one cell");
        double sum = 0.0;
        for (double p : probs_) {
            if (!(p >= 0.0))
                throw ValidationError("belief_search", "belief entries must be >= 0");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kNormalizationTol)
            throw ValidationError("belief_search",
                                  "belief entries must sum to 1, got " + std::to_string(sum));
    }

    std::vector<double> probs_;
};

// Bernoulli interrogation model: P(y=1 | cell holds object) = p_detect,
// P(y=1 | otherwise) = p_false.
struct MeasurementModel {
    double p_detect = 1.0;
    double p_false = 0.0;

    void validate() const {
        if (!(p_detect >= 0.0 && p_detect <= 1.0))
            throw ValidationError("belief_search", "p_detect must be in [0,1]");
        if (!(p_false >= 0.0 && p_false <= 1.0))
            throw ValidationError("belief_search", "p_false must be in [0,1]");
    }

    // An interrogation carries information only if the two rates differ.
    bool informative() const { return p_detect != p_false; }

    // Likelihood of outcome y when interrogating `action` and the object sits
    // in `cell`.
    double likelihood(int y, int action, int cell) const {
        const double p1 = (cell == action) ? p_detect : p_false;
        return y ? p1 : 1.0 - p1;
    }
};

// Which cell to interrogate next.
struct SearchAction {
    int cell = 0;
};

// Binary interrogation outcome.
struct Observation {
    int y = 0;  // 0 or 1
};

// Full record of one simulated search. Beliefs are post-update, one per step.
struct TrajectoryRecord {
    std::vector<SearchAction> actions;
    std::vector<Observation> observations;
    std::vector<Belief> beliefs;
    std::vector<double> entropies;  // bits, entropies[i] == H(beliefs[i])
};

inline void check_action(const Belief& belief, SearchAction action) {
    if (action.cell < 0 || action.cell >= belief.size())
        throw ValidationError("belief_search",
                              "action cell " + std::to_string(action.cell) +
                                  " out of range [0," + std::to_string(belief.size()) + ")");
}

// Posterior after observing `obs` from interrogating `action.cell`:
// p'(x) ∝ P(obs | action, x) p(x). Throws ContradictionError if the evidence
// has zero probability under the prior (never divides by zero).
inline Belief bayes_update(const Belief& belief, SearchAction action, Observation obs,
                           const MeasurementModel& model) {
    check_action(belief, action);
    model.validate();
    if (obs.y != 0 && obs.y != 1)
        throw ValidationError("belief_search", "observation must be 0 or 1");

    const int n = belief.size();
    std::vector<double> post(n);
    double evidence = 0.0;
    for (int x = 0; x < n; ++x) {
        post[x] = model.likelihood(obs.y, action.cell, x) * belief[x];
        evidence += post[x];
    }
    if (evidence <= 0.0)
        throw ContradictionError("belief_search",
                                 "observation has zero probability under the current belief");
    for (double& p : post) p /= evidence;
    return Belief(std::move(post));
}

// Marginal probability of outcome y for an interrogation of `action.cell`.
inline double outcome_probability(const Belief& belief, SearchAction action, int y,
                                  const MeasurementModel& model) {
    double p = 0.0;
    for (int x = 0; x < belief.size(); ++x)
        p += model.likelihood(y, action.cell, x) * belief[x];
    return p;
}

// Shannon entropy in bits; 0 log 0 := 0.
inline double shannon_entropy(const Belief& belief) {
    double h = 0.0;
    for (int i = 0; i < belief.size(); ++i) {
        const double p = belief[i];
        if (p > 0.0) h -= p * std::log2(p);
    }
    return h;
}

// One-step lookahead: E_y[ H(posterior) ] for interrogating `action.cell`.
// Outcomes with zero probability are skipped.
inline double expected_posterior_entropy(const Belief& belief, SearchAction action,
                                         const MeasurementModel& model) {
    check_action(belief, action);
    double expected = 0.0;
    for (int y : {0, 1}) {
        const double py = outcome_probability(belief, action, y, model);
        if (py <= 0.0) continue;
        expected += py * shannon_entropy(bayes_update(belief, action, Observation{y}, model));
    }
    return expected;
}

// Greedy policy: the cell whose interrogation minimizes the one-step expected
// posterior entropy. Ties break toward the lowest index.
inline SearchAction greedy_entropy_policy(const Belief& belief, const MeasurementModel& model) {
    int best_cell = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < belief.size(); ++a) {
        const double e = expected_posterior_entropy(belief, SearchAction{a}, model);
        if (e < best) {
            best = e;
            best_cell = a;
        }
    }
    return SearchAction{best_cell};
}

namespace detail {

inline double brute_force_value(const Belief& belief, const MeasurementModel& model,
                                int horizon, int* best_first_action) {
    if (horizon == 0) return shannon_entropy(belief);
    double best = std::numeric_limits<double>::infinity();
    int best_cell = 0;
    for (int a = 0; a < belief.size(); ++a) {
        double expected = 0.0;
        for (int y : {0, 1}) {
            const double py = outcome_probability(belief, SearchAction{a}, y, model);
            if (py <= 0.0) continue;
            const Belief post = bayes_update(belief, SearchAction{a}, Observation{y}, model);
            expected += py * brute_force_value(post, model, horizon - 1, nullptr);
        }
        if (expected < best) {
            best = expected;
            best_cell = a;
        }
    }
    if (best_first_action) *best_first_action = best_cell;
    return best;
}

}  // namespace detail

struct PolicyResult {
    SearchAction action;
    double expected_terminal_entropy = 0.0;  // bits
};

// Exact finite-horizon minimization of expected terminal entropy by
// exhaustive (action, observation) tree search. Serves as the oracle for the
// greedy policy; horizon 1 coincides with it by definition.
inline PolicyResult brute_force_policy(const Belief& belief, const MeasurementModel& model,
                                       int horizon) {
    if (horizon < 1)
        throw ValidationError("belief_search", "horizon must be >= 1");
    // Tree has (2N)^horizon leaves; refuse beyond the node budget.
    const double nodes = std::pow(2.0 * belief.size(), horizon);
    if (nodes > 1e6)
        throw SizeError("belief_search",
                        "brute-force tree of ~" + std::to_string(static_cast<long long>(nodes)) +
                            " nodes exceeds the 1e6 budget");
    int first = 0;
    const double value = detail::brute_force_value(belief, model, horizon, &first);
    return PolicyResult{SearchAction{first}, value};
}

struct PolicySpec {
    enum class Kind { greedy, brute_force };
    Kind kind = Kind::greedy;
    int horizon = 1;  // brute_force only

    SearchAction choose(const Belief& belief, const MeasurementModel& model) const {
        if (kind == Kind::greedy) return greedy_entropy_policy(belief, model);
        return brute_force_policy(belief, model, horizon).action;
    }
};

struct SimulationConfig {
    int n_cells = 0;
    int true_cell = 0;
    MeasurementModel model;
    PolicySpec policy;
    int max_steps = 100;
    double stop_threshold = 0.99;  // stop once max belief reaches this
    std::uint64_t seed = 0;
    std::vector<double> prior;  // empty = uniform
};

// Runs a seeded search: per step choose an action via the policy, sample the
// outcome from the Bernoulli model given the true cell, apply bayes_update,
// record. Stops at max_steps or once max belief >= stop_threshold.
inline TrajectoryRecord simulate_search(const SimulationConfig& config) {
    if (config.n_cells < 1)
        throw ValidationError("belief_search", "n_cells must be >= 1");
    if (config.true_cell < 0 || config.true_cell >= config.n_cells)
        throw ValidationError("belief_search", "true_cell out of range");
    if (config.max_steps < 0)
        throw ValidationError("belief_search", "max_steps must be >= 0");
    if (!(config.stop_threshold > 0.0 && config.stop_threshold <= 1.0))
        throw ValidationError("belief_search", "stop_threshold must be in (0,1]");
    config.model.validate();

    Belief belief = config.prior.empty() ? Belief::uniform(config.n_cells)
                                         : Belief(config.prior);
    if (belief.size() != config.n_cells)
        throw ValidationError("belief_search", "prior length must equal n_cells");

    Rng rng(config.seed);
    TrajectoryRecord record;
    for (int step = 0; step < config.max_steps; ++step) {
        if (belief.max_prob() >= config.stop_threshold) break;
        const SearchAction action = config.policy.choose(belief, config.model);
        const double p_hit = config.model.likelihood(1, action.cell, config.true_cell);
        const Observation obs{rng.bernoulli(p_hit) ? 1 : 0};
        belief = bayes_update(belief, action, obs, config.model);
        record.actions.push_back(action);
        record.observations.push_back(obs);
        record.beliefs.push_back(belief);
        record.entropies.push_back(shannon_entropy(belief));
    }
    return record;
}

}  // namespace bayesosc::search
