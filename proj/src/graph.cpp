#include "permest/graph.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>

namespace permest {

namespace {

// Absorbs the rounding in products such as 0.3 * 10 so that integer
// thresholds compare the way they read.
constexpr double kSlack = 1e-9;

bool meets(double value, double required) { return value + kSlack * std::max(1.0, required) >= required; }

std::size_t broad_threshold(std::size_t set_size, double delta) {
    return static_cast<std::size_t>(std::floor(0.5 * delta * static_cast<double>(set_size) + kSlack));
}

double expansion_target(std::size_t set_size, std::size_t n, double kappa) {
    return std::min((1.0 + kappa) * static_cast<double>(set_size), static_cast<double>(n));
}

std::optional<Witness> check_degrees(const BipartiteGraph& g, const ConnectivityParams& p) {
    const auto m = g.left_size();
    const auto n = g.right_size();
    const auto right = g.right_degrees();
    const double need_right = p.delta * static_cast<double>(m);
    for (std::size_t i = 0; i < n; ++i) {
        if (!meets(static_cast<double>(right[i]), need_right)) {
            Witness w;
            w.condition = 1;
            w.vertex = i;
            w.degree = right[i];
            w.required = need_right;
            return w;
        }
    }
    const double need_left = p.delta * static_cast<double>(n);
    for (std::size_t j = 0; j < m; ++j) {
        if (!meets(static_cast<double>(g.left_degree(j)), need_left)) {
            Witness w;
            w.condition = 2;
            w.vertex = j;
            w.degree = g.left_degree(j);
            w.required = need_left;
            return w;
        }
    }
    return std::nullopt;
}

Witness expansion_witness(std::vector<std::size_t> left_set, std::size_t count, double required) {
    Witness w;
    w.condition = 3;
    std::ranges::sort(left_set);
    w.left_set = std::move(left_set);
    w.broad_neighbor_count = count;
    w.required = required;
    return w;
}

std::size_t count_broad(const BipartiteGraph& g, const std::vector<std::size_t>& left_set, double delta) {
    const std::size_t thr = broad_threshold(left_set.size(), delta);
    if (thr == 0) return g.right_size();
    std::vector<std::size_t> hits(g.right_size(), 0);
    for (auto j : left_set)
        for (auto i : g.neighbors(j)) ++hits[i];
    return static_cast<std::size_t>(std::ranges::count_if(hits, [thr](std::size_t h) { return h >= thr; }));
}

ConnectivityReport run_exhaustive(const BipartiteGraph& g, const ConnectivityParams& p, const Exhaustive& mode) {
    const auto m = g.left_size();
    const auto n = g.right_size();
    if (m > mode.cap || m > 63) {
        throw CapacityError("exhaustive check limited to m <= " + std::to_string(std::min<std::size_t>(mode.cap, 63)) +
                            " (got m = " + std::to_string(m) + "); use randomized mode");
    }
    // Bitmask of left neighbors per right vertex.
    std::vector<std::uint64_t> left_mask(n, 0);
    for (std::size_t j = 0; j < m; ++j)
        for (auto i : g.neighbors(j)) left_mask[i] |= std::uint64_t{1} << j;

    ConnectivityReport report;
    const std::size_t max_size = mode.prune ? pruned_cardinality_bound(m, p.delta) : m;
    std::vector<std::size_t> idx;
    for (std::size_t k = 1; k <= max_size; ++k) {
        const std::size_t thr = broad_threshold(k, p.delta);
        const double required = expansion_target(k, n, p.kappa);
        idx.resize(k);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        while (true) {
            ++report.subsets_examined;
            std::size_t count = n;
            if (thr > 0) {
                std::uint64_t set = 0;
                for (auto j : idx) set |= std::uint64_t{1} << j;
                count = 0;
                for (std::size_t i = 0; i < n; ++i)
                    if (static_cast<std::size_t>(std::popcount(left_mask[i] & set)) >= thr) ++count;
            }
            if (!meets(static_cast<double>(count), required)) {
                report.verdict = Verdict::Refuted;
                report.witness = expansion_witness(idx, count, required);
                return report;
            }
            // Next combination in lexicographic order.
            std::size_t pos = k;
            while (pos > 0 && idx[pos - 1] == m - k + pos - 1) --pos;
            if (pos == 0) break;
            ++idx[pos - 1];
            for (std::size_t q = pos; q < k; ++q) idx[q] = idx[q - 1] + 1;
        }
    }
    report.verdict = Verdict::Verified;
    return report;
}

ConnectivityReport run_randomized(const BipartiteGraph& g, const ConnectivityParams& p, const Randomized& mode) {
    const auto m = g.left_size();
    const auto n = g.right_size();
    ConnectivityReport report;
    report.verdict = Verdict::NotRefuted;
    if (m == 0) return report;
    const std::size_t max_size = pruned_cardinality_bound(m, p.delta);
    GaussianStream rng(mode.seed);
    std::vector<std::size_t> pool(m);
    for (std::uint64_t t = 0; t < mode.trials; ++t) {
        const std::size_t k = 1 + static_cast<std::size_t>(rng.below(max_size));
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t q = 0; q < k; ++q) {
            const auto r = q + static_cast<std::size_t>(rng.below(m - q));
            std::swap(pool[q], pool[r]);
        }
        std::vector<std::size_t> subset(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
        ++report.subsets_examined;
        const auto count = count_broad(g, subset, p.delta);
        const double required = expansion_target(k, n, p.kappa);
        if (!meets(static_cast<double>(count), required)) {
            report.verdict = Verdict::Refuted;
            report.witness = expansion_witness(std::move(subset), count, required);
            return report;
        }
    }
    return report;
}

} // namespace

BipartiteGraph::BipartiteGraph(std::size_t left, std::size_t right) : left_(left), right_(right), adjacency_(left) {}

BipartiteGraph::BipartiteGraph(std::size_t left, std::size_t right, std::vector<std::vector<std::size_t>> neighbors)
    : left_(left), right_(right), adjacency_(std::move(neighbors)) {
    if (adjacency_.size() != left_) throw DimensionError("BipartiteGraph: adjacency size differs from left size");
    for (auto& nbrs : adjacency_) {
        std::ranges::sort(nbrs);
        if (!nbrs.empty() && nbrs.back() >= right_) throw DomainError("BipartiteGraph: neighbor index out of range");
        if (std::ranges::adjacent_find(nbrs) != nbrs.end()) throw DomainError("BipartiteGraph: duplicate edge");
    }
}

BipartiteGraph BipartiteGraph::complete(std::size_t left, std::size_t right) {
    std::vector<std::size_t> all(right);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return BipartiteGraph(left, right, std::vector<std::vector<std::size_t>>(left, all));
}

BipartiteGraph BipartiteGraph::perfect_matching(std::size_t n) {
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t j = 0; j < n; ++j) adj[j] = {j};
    return BipartiteGraph(n, n, std::move(adj));
}

bool BipartiteGraph::has_edge(std::size_t j, std::size_t i) const {
    return std::ranges::binary_search(adjacency_.at(j), i);
}

std::size_t BipartiteGraph::edge_count() const noexcept {
    std::size_t total = 0;
    for (const auto& nbrs : adjacency_) total += nbrs.size();
    return total;
}

std::vector<std::size_t> BipartiteGraph::right_degrees() const {
    std::vector<std::size_t> deg(right_, 0);
    for (const auto& nbrs : adjacency_)
        for (auto i : nbrs) ++deg[i];
    return deg;
}

bool BipartiteGraph::add_edge(std::size_t j, std::size_t i) {
    if (j >= left_ || i >= right_) throw DomainError("add_edge: vertex out of range");
    auto& nbrs = adjacency_[j];
    auto it = std::ranges::lower_bound(nbrs, i);
    if (it != nbrs.end() && *it == i) return false;
    nbrs.insert(it, i);
    return true;
}

BipartiteGraph graph_from_matrix(const DenseMatrix& a) {
    std::vector<std::vector<std::size_t>> adj(a.rows());
    for (std::size_t j = 0; j < a.rows(); ++j)
        for (std::size_t i = 0; i < a.cols(); ++i)
            if (a(j, i) != 0.0) adj[j].push_back(i);
    return BipartiteGraph(a.rows(), a.cols(), std::move(adj));
}

BipartiteGraph graph_from_threshold(const DenseMatrix& b, double r) {
    if (!b.is_square()) throw DimensionError("graph_from_threshold: matrix must be square");
    if (!(r > 0.0)) throw DomainError("graph_from_threshold: r must be positive");
    const double cut = r / static_cast<double>(b.rows());
    std::vector<std::vector<std::size_t>> adj(b.rows());
    for (std::size_t j = 0; j < b.rows(); ++j)
        for (std::size_t i = 0; i < b.cols(); ++i)
            if (b(j, i) >= cut) adj[j].push_back(i);
    return BipartiteGraph(b.rows(), b.cols(), std::move(adj));
}

std::vector<std::size_t> broad_neighbors(const BipartiteGraph& g, const std::vector<std::size_t>& left_set,
                                         double delta) {
    if (left_set.empty()) throw DomainError("broad_neighbors: J must be nonempty");
    for (auto j : left_set)
        if (j >= g.left_size()) throw DomainError("broad_neighbors: left vertex out of range");
    const std::size_t thr = broad_threshold(left_set.size(), delta);
    std::vector<std::size_t> hits(g.right_size(), 0);
    for (auto j : left_set)
        for (auto i : g.neighbors(j)) ++hits[i];
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < g.right_size(); ++i)
        if (hits[i] >= thr) out.push_back(i);
    return out;
}

ConnectivityParams::ConnectivityParams(double delta_, double kappa_) : delta(delta_), kappa(kappa_) {
    if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("ConnectivityParams: delta must lie in (0, 1]");
    if (!(kappa > 0.0)) throw DomainError("ConnectivityParams: kappa must be positive");
    if (!(delta / 2.0 > kappa)) throw DomainError("ConnectivityParams: requires delta/2 > kappa");
}

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::Verified: return "Verified";
    case Verdict::Refuted: return "Refuted";
    case Verdict::NotRefuted: return "NotRefuted";
    }
    return "?";
}

std::size_t pruned_cardinality_bound(std::size_t m, double delta) {
    if (m == 0) return 0;
    const double bound = std::ceil((1.0 - delta / 2.0) * static_cast<double>(m) - kSlack);
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(bound, 1.0)), 1, m);
}

ConnectivityReport check_broadly_connected(const BipartiteGraph& g, const ConnectivityParams& params,
                                           const CheckMode& mode) {
    if (auto w = check_degrees(g, params)) {
        ConnectivityReport report;
        report.verdict = Verdict::Refuted;
        report.witness = std::move(w);
        return report;
    }
    return std::visit(
        [&](const auto& m) -> ConnectivityReport {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, Exhaustive>) {
                return run_exhaustive(g, params, m);
            } else {
                return run_randomized(g, params, m);
            }
        },
        mode);
}

bool has_perfect_matching(const BipartiteGraph& g) {
    const std::size_t m = g.left_size();
    if (m != g.right_size()) return false;
    constexpr auto kFree = static_cast<std::size_t>(-1);
    std::vector<std::size_t> match_right(m, kFree);
    std::vector<char> seen(m);
    // Kuhn's augmenting paths.
    auto augment = [&](auto&& self, std::size_t j) -> bool {
        for (auto i : g.neighbors(j)) {
            if (seen[i]) continue;
            seen[i] = 1;
            if (match_right[i] == kFree || self(self, match_right[i])) {
                match_right[i] = j;
                return true;
            }
        }
        return false;
    };
    for (std::size_t j = 0; j < m; ++j) {
        std::ranges::fill(seen, 0);
        if (!augment(augment, j)) return false;
    }
    return true;
}

bool witness_reproduces(const BipartiteGraph& g, const ConnectivityParams& params, const Witness& w) {
    switch (w.condition) {
    case 1: {
        if (w.vertex >= g.right_size()) return false;
        const auto deg = g.right_degrees()[w.vertex];
        return deg == w.degree && !meets(static_cast<double>(deg), params.delta * static_cast<double>(g.left_size()));
    }
    case 2: {
        if (w.vertex >= g.left_size()) return false;
        const auto deg = g.left_degree(w.vertex);
        return deg == w.degree && !meets(static_cast<double>(deg), params.delta * static_cast<double>(g.right_size()));
    }
    case 3: {
        if (w.left_set.empty()) return false;
        const auto nbrs = broad_neighbors(g, w.left_set, params.delta);
        return nbrs.size() == w.broad_neighbor_count &&
               !meets(static_cast<double>(nbrs.size()), expansion_target(w.left_set.size(), g.right_size(), params.kappa));
    }
    default: return false;
    }
}

nlohmann::json graph_to_json(const BipartiteGraph& g) {
    nlohmann::json edges = nlohmann::json::array();
    for (std::size_t j = 0; j < g.left_size(); ++j)
        for (auto i : g.neighbors(j)) edges.push_back({j, i});
    return {{"m", g.left_size()}, {"n", g.right_size()}, {"edges", edges}};
}

BipartiteGraph graph_from_json(const nlohmann::json& j) {
    try {
        const auto m = j.at("m").get<std::size_t>();
        const auto n = j.at("n").get<std::size_t>();
        std::vector<std::vector<std::size_t>> adj(m);
        for (const auto& e : j.at("edges")) {
            if (!e.is_array() || e.size() != 2) throw DomainError("graph JSON: each edge must be [j, i]");
            const auto left = e[0].get<std::size_t>();
            const auto right = e[1].get<std::size_t>();
            if (left >= m) throw DomainError("graph JSON: left vertex out of range");
            adj[left].push_back(right);
        }
        return BipartiteGraph(m, n, std::move(adj));
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("graph JSON: ") + e.what());
    }
}

BipartiteGraph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open graph file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DomainError("graph JSON '" + path + "': " + e.what());
    }
    return graph_from_json(j);
}

nlohmann::json report_to_json(const ConnectivityReport& r) {
    nlohmann::json out{{"verdict", to_string(r.verdict)}, {"subsets_examined", r.subsets_examined}};
    if (r.witness) {
        const auto& w = *r.witness;
        nlohmann::json wj{{"condition", w.condition}, {"required", w.required}};
        if (w.condition == 3) {
            wj["J"] = w.left_set;
            wj["broad_neighbors"] = w.broad_neighbor_count;
        } else {
            wj["vertex"] = w.vertex;
            wj["degree"] = w.degree;
        }
        out["witness"] = wj;
    } else {
        out["witness"] = nullptr;
    }
    return out;
}

} // namespace permest
