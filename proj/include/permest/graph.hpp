#pragma once

// Bipartite graphs ([m] left, [n] right) and the (delta, kappa) broad
// connectedness test:
//   (1) every right vertex has degree >= delta*m,
//   (2) every left vertex has degree >= delta*n,
//   (3) every nonempty J in [m] has |I(J)| >= min((1+kappa)|J|, n), where
//       I(J) holds the right vertices hit by at least floor(delta/2 * |J|)
//       members of J.
// Condition (3) only needs |J| <= (1 - delta/2) m: above that size every
// right vertex meeting (1) is a broad neighbor.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "permest/core.hpp"

namespace permest {

class BipartiteGraph {
public:
    BipartiteGraph(std::size_t left, std::size_t right);
    // neighbors[j] lists right vertices of left vertex j; sorted internally.
    // Throws DomainError on out-of-range or duplicate neighbors.
    BipartiteGraph(std::size_t left, std::size_t right, std::vector<std::vector<std::size_t>> neighbors);

    static BipartiteGraph complete(std::size_t left, std::size_t right);
    static BipartiteGraph perfect_matching(std::size_t n);

    std::size_t left_size() const noexcept { return left_; }
    std::size_t right_size() const noexcept { return right_; }
    const std::vector<std::size_t>& neighbors(std::size_t j) const { return adjacency_.at(j); }
    bool has_edge(std::size_t j, std::size_t i) const;
    std::size_t edge_count() const noexcept;

    std::size_t left_degree(std::size_t j) const { return adjacency_.at(j).size(); }
    std::vector<std::size_t> right_degrees() const;

    // Returns false if the edge already exists.
    bool add_edge(std::size_t j, std::size_t i);

    bool operator==(const BipartiteGraph&) const = default;

private:
    std::size_t left_;
    std::size_t right_;
    std::vector<std::vector<std::size_t>> adjacency_;
};

// Edge j -> i iff a(j, i) != 0.
BipartiteGraph graph_from_matrix(const DenseMatrix& a);
// Edge j -> i iff b(j, i) >= r / n; b must be square.
BipartiteGraph graph_from_threshold(const DenseMatrix& b, double r);

// I(J) in ascending order. Throws DomainError for empty J or out-of-range members.
std::vector<std::size_t> broad_neighbors(const BipartiteGraph& g, const std::vector<std::size_t>& left_set,
                                         double delta);

struct ConnectivityParams {
    double delta;
    double kappa;

    // Throws DomainError unless 0 < delta <= 1, kappa > 0 and delta/2 > kappa.
    ConnectivityParams(double delta, double kappa);
};

enum class Verdict { Verified, Refuted, NotRefuted };
std::string to_string(Verdict v);

struct Witness {
    int condition = 0;                    // 1, 2 or 3
    std::size_t vertex = 0;               // conditions 1 and 2
    std::size_t degree = 0;               // conditions 1 and 2
    double required = 0.0;                // delta*m, delta*n, or min((1+kappa)|J|, n)
    std::vector<std::size_t> left_set;    // condition 3
    std::size_t broad_neighbor_count = 0; // condition 3
};

struct ConnectivityReport {
    Verdict verdict = Verdict::NotRefuted;
    std::optional<Witness> witness;
    std::uint64_t subsets_examined = 0;
};

struct Exhaustive {
    std::size_t cap = 22;
    // When false, every cardinality 1..m is enumerated (no pruning).
    bool prune = true;
};
struct Randomized {
    std::uint64_t trials;
    SeedSpec seed;
};
using CheckMode = std::variant<Exhaustive, Randomized>;

// Largest |J| that condition (3) needs: ceil((1 - delta/2) m), clamped to [1, m].
std::size_t pruned_cardinality_bound(std::size_t m, double delta);

ConnectivityReport check_broadly_connected(const BipartiteGraph& g, const ConnectivityParams& params,
                                           const CheckMode& mode);

// True when some left-to-right matching covers every vertex (m == n required).
bool has_perfect_matching(const BipartiteGraph& g);

// Re-checks a refutation witness from scratch; true when it shows a violation.
bool witness_reproduces(const BipartiteGraph& g, const ConnectivityParams& params, const Witness& w);

nlohmann::json graph_to_json(const BipartiteGraph& g);
BipartiteGraph graph_from_json(const nlohmann::json& j);
BipartiteGraph load_graph(const std::string& path);

nlohmann::json report_to_json(const ConnectivityReport& r);

} // namespace permest
