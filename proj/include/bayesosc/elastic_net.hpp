#pragma once

// Elastic-net TSP solver: a closed ring of nodes relaxes under a spring
// prior, (alpha/2) sum |w_{n+1}-w_n|^2, plus an annealed Gaussian attraction
// to the cities, -(beta/2) sum_m log sum_n exp(-|w_n - phi_m|^2 / (2 K^2)).
// Gradient descent at a decaying scale K sharpens the soft city-to-node
// assignment until the ring threads the cities; the tour is read off the
// converged ring. Nearest-neighbor and 2-opt baselines are included for
// quality comparisons.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "bayesosc/errors.hpp"
#include "bayesosc/rng.hpp"

namespace bayesosc::net {

struct City {
    Eigen::Vector2d position{0.0, 0.0};
};

struct NetNode {
    Eigen::Vector2d w{0.0, 0.0};
};

struct ElasticNetParams {
    double alpha = 0.2;      // spring stiffness
    double beta = 1.0;       // data-term weight
    double node_ratio = 2.5; // ring nodes per city

    void validate() const {
        if (!(alpha > 0.0)) throw ValidationError("elastic_net", "alpha must be > 0");
        if (!(beta > 0.0)) throw ValidationError("elastic_net", "beta must be > 0");
        if (!(node_ratio >= 1.0)) throw ValidationError("elastic_net", "node_ratio must be >= 1");
    }
};

struct AnnealSchedule {
    double k_start = 0.2;
    double k_decay = 0.99;
    double k_min = 0.01;
    int iters_per_stage = 25;
    double step_size = 1.0;  // dimensionless multiple of the per-stage stable step

    void validate() const {
        if (!(k_start > 0.0)) throw ValidationError("elastic_net", "k_start must be > 0");
        if (!(k_decay > 0.0 && k_decay < 1.0))
            throw ValidationError("elastic_net", "k_decay must be in (0,1)");
        if (!(k_min > 0.0)) throw ValidationError("elastic_net", "k_min must be > 0");
        if (!(k_min < k_start)) throw ValidationError("elastic_net", "k_min must be < k_start");
        if (iters_per_stage < 1)
            throw ValidationError("elastic_net", "iters_per_stage must be >= 1");
        if (!(step_size > 0.0)) throw ValidationError("elastic_net", "step_size must be > 0");
    }

    // Defaults scaled to the instance: the anneal starts at 0.2 x spread.
    static AnnealSchedule for_spread(double spread) {
        AnnealSchedule s;
        s.k_start = std::max(0.2 * spread, 2.0 * s.k_min);
        return s;
    }
};

// Soft city-to-node assignment; rows = cities, columns = nodes, rows sum to 1.
struct AssignmentWeights {
    Eigen::MatrixXd lambda;
};

struct Tour {
    std::vector<int> order;  // permutation of city indices
    double length = 0.0;     // closed Euclidean cycle length
};

inline double tour_length(const std::vector<City>& cities, const std::vector<int>& order) {
    const int n = static_cast<int>(order.size());
    double len = 0.0;
    for (int i = 0; i < n; ++i)
        len += (cities[order[(i + 1) % n]].position - cities[order[i]].position).norm();
    return len;
}

inline Tour make_tour(const std::vector<City>& cities, std::vector<int> order) {
    Tour t;
    t.length = tour_length(cities, order);
    t.order = std::move(order);
    return t;
}

// Diagonal of the bounding box; zero for coincident cities.
inline double instance_spread(const std::vector<City>& cities) {
    if (cities.empty()) return 0.0;
    Eigen::Vector2d lo = cities.front().position;
    Eigen::Vector2d hi = lo;
    for (const City& c : cities) {
        lo = lo.cwiseMin(c.position);
        hi = hi.cwiseMax(c.position);
    }
    return (hi - lo).norm();
}

// ceil(node_ratio x #cities) nodes on a circle of radius 0.1 x spread around
// the city centroid, with seeded jitter of magnitude <= 1e-3 to break
// symmetry.
inline std::vector<NetNode> init_ring(const std::vector<City>& cities,
                                      const ElasticNetParams& params, std::uint64_t seed) {
    params.validate();
    if (cities.size() < 2)
        throw ValidationError("elastic_net", "need at least 2 cities");
    for (const City& c : cities)
        if (!c.position.allFinite())
            throw ValidationError("elastic_net", "city coordinates must be finite");

    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const City& c : cities) centroid += c.position;
    centroid /= static_cast<double>(cities.size());

    const double radius = 0.1 * instance_spread(cities);
    const int count = static_cast<int>(std::ceil(params.node_ratio * cities.size()));

    Rng rng(seed);
    std::vector<NetNode> nodes(count);
    for (int i = 0; i < count; ++i) {
        const double theta = 2.0 * M_PI * i / count;
        const double jr = 1e-3 * rng.uniform();
        const double jphi = rng.uniform(0.0, 2.0 * M_PI);
        nodes[i].w = centroid +
                     radius * Eigen::Vector2d(std::cos(theta), std::sin(theta)) +
                     jr * Eigen::Vector2d(std::cos(jphi), std::sin(jphi));
    }
    return nodes;
}

// (alpha/2) sum_n |w_{n+1} - w_n|^2 with cyclic closure.
inline double prior_energy(const std::vector<NetNode>& nodes, double alpha) {
    if (nodes.size() < 2)
        throw ValidationError("elastic_net", "prior_energy needs at least 2 nodes");
    const int m = static_cast<int>(nodes.size());
    double sum = 0.0;
    for (int n = 0; n < m; ++n)
        sum += (nodes[(n + 1) % m].w - nodes[n].w).squaredNorm();
    return 0.5 * alpha * sum;
}

namespace detail {

// Per-city log sum exp of -d^2/(2k^2) over nodes, max-subtracted so distant
// cities give large finite energies instead of -inf.
inline double city_log_sum(const std::vector<NetNode>& nodes, const Eigen::Vector2d& city,
                           double k) {
    const double inv = 1.0 / (2.0 * k * k);
    double best = -std::numeric_limits<double>::infinity();
    for (const NetNode& node : nodes)
        best = std::max(best, -(node.w - city).squaredNorm() * inv);
    double acc = 0.0;
    for (const NetNode& node : nodes)
        acc += std::exp(-(node.w - city).squaredNorm() * inv - best);
    return best + std::log(acc);
}

}  // namespace detail

// -(beta/2) sum_m log sum_n exp(-|w_n - phi_m|^2 / (2 k^2)).
// At k = 1/sqrt(2) the exponent is exactly -|w - phi|^2.
inline double data_energy(const std::vector<NetNode>& nodes, const std::vector<City>& cities,
                          double beta, double k) {
    if (!(k > 0.0)) throw ValidationError("elastic_net", "k must be > 0");
    double sum = 0.0;
    for (const City& c : cities) sum += detail::city_log_sum(nodes, c.position, k);
    return -0.5 * beta * sum;
}

inline double total_energy(const std::vector<NetNode>& nodes, const std::vector<City>& cities,
                           const ElasticNetParams& params, double k) {
    return prior_energy(nodes, params.alpha) + data_energy(nodes, cities, params.beta, k);
}

// lambda[m][n] = softmax over nodes of -|w_n - phi_m|^2 / (2 k^2), rows
// normalized with max-subtraction.
inline AssignmentWeights responsibilities(const std::vector<NetNode>& nodes,
                                          const std::vector<City>& cities, double k) {
    if (!(k > 0.0)) throw ValidationError("elastic_net", "k must be > 0");
    const int m_cities = static_cast<int>(cities.size());
    const int n_nodes = static_cast<int>(nodes.size());
    AssignmentWeights w;
    w.lambda.resize(m_cities, n_nodes);
    const double inv = 1.0 / (2.0 * k * k);
    for (int m = 0; m < m_cities; ++m) {
        double best = -std::numeric_limits<double>::infinity();
        for (int n = 0; n < n_nodes; ++n) {
            const double s = -(nodes[n].w - cities[m].position).squaredNorm() * inv;
            w.lambda(m, n) = s;
            best = std::max(best, s);
        }
        double total = 0.0;
        for (int n = 0; n < n_nodes; ++n) {
            w.lambda(m, n) = std::exp(w.lambda(m, n) - best);
            total += w.lambda(m, n);
        }
        w.lambda.row(m) /= total;
    }
    return w;
}

// -grad E: per node, beta/(2k^2) sum_m lambda[m][n] (phi_m - w_n)
//          + alpha (w_{n+1} - 2 w_n + w_{n-1}).
inline std::vector<Eigen::Vector2d> descent_direction(const std::vector<NetNode>& nodes,
                                                      const std::vector<City>& cities,
                                                      const AssignmentWeights& weights,
                                                      const ElasticNetParams& params, double k) {
    const int n_nodes = static_cast<int>(nodes.size());
    const int m_cities = static_cast<int>(cities.size());
    const double coeff = params.beta / (2.0 * k * k);
    std::vector<Eigen::Vector2d> dir(n_nodes, Eigen::Vector2d::Zero());
    for (int n = 0; n < n_nodes; ++n) {
        Eigen::Vector2d pull = Eigen::Vector2d::Zero();
        for (int m = 0; m < m_cities; ++m)
            pull += weights.lambda(m, n) * (cities[m].position - nodes[n].w);
        const Eigen::Vector2d& prev = nodes[(n + n_nodes - 1) % n_nodes].w;
        const Eigen::Vector2d& next = nodes[(n + 1) % n_nodes].w;
        dir[n] = coeff * pull + params.alpha * (next - 2.0 * nodes[n].w + prev);
    }
    return dir;
}

// One explicit gradient step: w <- w + step_size * (-grad E).
inline std::vector<NetNode> update_step(const std::vector<NetNode>& nodes,
                                        const std::vector<City>& cities,
                                        const ElasticNetParams& params, double k,
                                        double step_size) {
    params.validate();
    if (!(k > 0.0)) throw ValidationError("elastic_net", "k must be > 0");
    const AssignmentWeights weights = responsibilities(nodes, cities, k);
    const auto dir = descent_direction(nodes, cities, weights, params, k);
    std::vector<NetNode> out(nodes.size());
    for (size_t n = 0; n < nodes.size(); ++n) {
        out[n].w = nodes[n].w + step_size * dir[n];
        if (!out[n].w.allFinite())
            throw DivergenceError("elastic_net",
                                  "node " + std::to_string(n) + " diverged to non-finite position");
    }
    return out;
}

// Upper bound on the curvature of the energy at the current assignment:
// beta/(2k^2) max_n sum_m lambda[m][n] from the data term plus 4 alpha from
// the ring Laplacian. 1/L is a stable explicit step.
inline double curvature_bound(const AssignmentWeights& weights, const ElasticNetParams& params,
                              double k) {
    double max_col = 0.0;
    for (int n = 0; n < weights.lambda.cols(); ++n)
        max_col = std::max(max_col, weights.lambda.col(n).sum());
    return params.beta / (2.0 * k * k) * max_col + 4.0 * params.alpha;
}

struct StageRecord {
    int stage = 0;
    double k = 0.0;
    double prior = 0.0;
    double data = 0.0;
    double total = 0.0;
    double tour_len = 0.0;
    std::vector<double> iter_energies;  // total energy after each accepted step
};

struct SolveResult {
    std::vector<NetNode> nodes;
    AssignmentWeights weights;  // assignment at the final scale
    std::vector<StageRecord> trace;
};

inline Tour extract_tour(const std::vector<NetNode>& nodes, const std::vector<City>& cities);

// Annealing loop: for K = k_start, k_start*k_decay, ... >= k_min, run
// iters_per_stage gradient steps. The step is schedule.step_size times the
// inverse curvature bound, halved (bounded backtracking) whenever a step
// fails to decrease the energy, so the within-stage energy trace is
// non-increasing by construction. Deterministic given the seed.
inline SolveResult solve(const std::vector<City>& cities, const ElasticNetParams& params,
                         const AnnealSchedule& schedule, std::uint64_t seed) {
    params.validate();
    schedule.validate();
    std::vector<NetNode> nodes = init_ring(cities, params, seed);

    SolveResult result;
    int stage_index = 0;
    for (double k = schedule.k_start; k >= schedule.k_min; k *= schedule.k_decay) {
        StageRecord record;
        record.stage = stage_index++;
        record.k = k;
        double energy = total_energy(nodes, cities, params, k);
        for (int iter = 0; iter < schedule.iters_per_stage; ++iter) {
            const AssignmentWeights weights = responsibilities(nodes, cities, k);
            double step = schedule.step_size / curvature_bound(weights, params, k);
            const auto dir = descent_direction(nodes, cities, weights, params, k);
            std::vector<NetNode> candidate(nodes.size());
            for (int attempt = 0;; ++attempt) {
                for (size_t n = 0; n < nodes.size(); ++n) {
                    candidate[n].w = nodes[n].w + step * dir[n];
                    if (!candidate[n].w.allFinite())
                        throw DivergenceError("elastic_net", "node " + std::to_string(n) +
                                                                 " diverged to non-finite position");
                }
                const double next = total_energy(candidate, cities, params, k);
                if (next <= energy + 1e-12 * (1.0 + std::abs(energy)) || attempt >= 40) {
                    energy = next;
                    break;
                }
                step *= 0.5;
            }
            nodes = candidate;
            record.iter_energies.push_back(energy);
        }
        record.prior = prior_energy(nodes, params.alpha);
        record.data = data_energy(nodes, cities, params.beta, k);
        record.total = record.prior + record.data;
        record.tour_len = extract_tour(nodes, cities).length;
        result.trace.push_back(std::move(record));
    }
    result.weights = responsibilities(nodes, cities, schedule.k_min);
    result.nodes = std::move(nodes);
    return result;
}

// Reads the city order off the ring: each city maps to its nearest node
// (ties -> lower node index); cities sort by node index, ties within a node
// by projection onto the local ring direction, then by city index.
inline Tour extract_tour(const std::vector<NetNode>& nodes, const std::vector<City>& cities) {
    const int n_nodes = static_cast<int>(nodes.size());
    const int m_cities = static_cast<int>(cities.size());

    struct Key {
        int node;
        double proj;
        int city;
    };
    std::vector<Key> keys(m_cities);
    for (int m = 0; m < m_cities; ++m) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int n = 0; n < n_nodes; ++n) {
            const double d = (nodes[n].w - cities[m].position).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = n;
            }
        }
        const Eigen::Vector2d tangent =
            nodes[(best + 1) % n_nodes].w - nodes[(best + n_nodes - 1) % n_nodes].w;
        keys[m] = Key{best, tangent.dot(cities[m].position - nodes[best].w), m};
    }
    std::vector<int> order(m_cities);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (keys[a].node != keys[b].node) return keys[a].node < keys[b].node;
        if (keys[a].proj != keys[b].proj) return keys[a].proj < keys[b].proj;
        return keys[a].city < keys[b].city;
    });
    return make_tour(cities, std::move(order));
}

// Nearest-neighbor construction from city 0.
inline Tour nearest_neighbor_tour(const std::vector<City>& cities) {
    const int n = static_cast<int>(cities.size());
    std::vector<bool> used(n, false);
    std::vector<int> order;
    order.reserve(n);
    int current = 0;
    used[0] = true;
    order.push_back(0);
    for (int step = 1; step < n; ++step) {
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
            if (used[j]) continue;
            const double d = (cities[j].position - cities[current].position).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        used[best] = true;
        order.push_back(best);
        current = best;
    }
    return make_tour(cities, std::move(order));
}

// Best-improvement 2-opt to a local optimum.
inline Tour two_opt_tour(const std::vector<City>& cities, std::vector<int> order) {
    const int n = static_cast<int>(order.size());
    auto dist = [&](int a, int b) {
        return (cities[a].position - cities[b].position).norm();
    };
    bool improved = true;
    while (improved) {
        improved = false;
        double best_gain = 1e-12;
        int best_i = -1, best_j = -1;
        for (int i = 0; i < n - 1; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const int a = order[i], b = order[(i + 1) % n];
                const int c = order[j], d = order[(j + 1) % n];
                if (a == c || b == d || a == d) continue;
                const double gain = dist(a, b) + dist(c, d) - dist(a, c) - dist(b, d);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_i = i;
                    best_j = j;
                }
            }
        }
        if (best_i >= 0) {
            std::reverse(order.begin() + best_i + 1, order.begin() + best_j + 1);
            improved = true;
        }
    }
    return make_tour(cities, std::move(order));
}

struct BaselineTours {
    Tour nearest_neighbor;
    Tour two_opt;
};

// Comparison heuristics: nearest-neighbor from city 0, then 2-opt descent
// from that tour. The seed is accepted for interface stability; both
// constructions are deterministic.
inline BaselineTours baseline_tours(const std::vector<City>& cities,
                                    [[maybe_unused]] std::uint64_t seed) {
    if (cities.size() < 3)
        throw ValidationError("elastic_net", "baselines need at least 3 cities");
    BaselineTours result;
    result.nearest_neighbor = nearest_neighbor_tour(cities);
    result.two_opt = two_opt_tour(cities, result.nearest_neighbor.order);
    return result;
}

}  // namespace bayesosc::net
