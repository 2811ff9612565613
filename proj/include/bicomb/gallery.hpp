#pragma once

// Example spaces: the butterfly retract, the discrete bigon, even polygons,
// samples of the convex cap set in l-infinity([0,1]), random metrics and tree
// metrics. Everything regenerates bit-identically from (id, parameters).

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "bicomb/bicombing.hpp"
#include "bicomb/metric_core.hpp"
#include "bicomb/random.hpp"
#include "bicomb/space_io.hpp"

namespace bicomb {

// ---------------------------------------------------------------------------
// Butterfly

/// X = {|u| <= 2, b(u) <= v <= |b(u)|} with b(u) = |u| - 1, inside the
/// triangle {|u| <= 2, b(u) <= v <= 1}; the vertical retraction is
/// pi(u, v) = (u, min(v, |b(u)|)).
inline std::shared_ptr<const RetractSpace> butterfly()
{
    auto s = std::make_shared<RetractSpace>();
    s->id = "butterfly";
    s->ambient_dim = 2;
    s->contains = [](const Point& p, double tol) {
        if (p.size() != 2 || std::abs(p[0]) > 2 + tol)
            return false;
        const double b = std::abs(p[0]) - 1;
        return p[1] >= b - tol && p[1] <= std::abs(b) + tol;
    };
    s->retract = [](const Point& p) {
        if (p.size() != 2)
            throw std::invalid_argument("butterfly: points are in the plane");
        return Point{p[0], std::min(p[1], std::abs(std::abs(p[0]) - 1))};
    };
    s->sample = [](Rng& rng) {
        const double u = rng.uniform(-2, 2);
        const double b = std::abs(u) - 1;
        return Point{u, rng.uniform(b, std::abs(b))};
    };
    return s;
}

/// The conical bicombing pi o linear on the butterfly.
inline Bicombing butterfly_bicombing()
{
    return retract_bicombing(butterfly(), linear_bicombing(2));
}

// ---------------------------------------------------------------------------
// Bigon

struct Bigon {
    std::size_t m = 1;
    FiniteMetricSpace space;
    /// Swaps alpha(k/m) and beta(k/m), fixes the endpoints.
    std::vector<std::size_t> iota;
    /// Points as functions on the grid {k/m}: alpha(s)(u) = (1-s)u + s(1-u),
    /// beta(t)(u) = |u - t|.
    std::vector<LinfPoint> embedding;
    std::vector<Scalar> grid;
    /// Curve samples alpha(k/m) and beta(k/m), k = 0..m, as indices.
    std::vector<std::size_t> alpha, beta;
};

/// Two geodesics from d0 to d1, alpha linear and beta(t) = d_t, sampled at
/// k/m and glued at the endpoints: 2m points. Index 0 is d0, 1..m-1 are
/// alpha(k/m), m is d1, m+1..2m-1 are beta(k/m).
inline Bigon bigon(std::size_t m)
{
    if (m < 1)
        throw std::invalid_argument("bigon: m must be at least 1");
    const std::size_t N = 2 * m;
    // (curve, k) per index; curve 0 = alpha, 1 = beta
    std::vector<std::pair<int, std::size_t>> where(N);
    std::vector<std::string> labels(N);
    std::vector<std::size_t> alpha(m + 1), beta(m + 1);
    for (std::size_t k = 0; k <= m; ++k) {
        alpha[k] = k;
        beta[k] = k == 0 ? 0 : k == m ? m : m + k;
    }
    for (std::size_t k = 0; k <= m; ++k) {
        where[alpha[k]] = {0, k};
        if (k != 0 && k != m)
            where[beta[k]] = {1, k};
    }
    for (std::size_t i = 0; i < N; ++i) {
        auto [c, k] = where[i];
        if (k == 0)
            labels[i] = "d0";
        else if (k == m)
            labels[i] = "d1";
        else
            labels[i] = std::string(c == 0 ? "a:" : "b:") + std::to_string(k) + "/" + std::to_string(m);
    }
    const Scalar M(static_cast<long>(m));
    auto param = [&](std::size_t k) { return Scalar(static_cast<long>(k)) / M; };
    std::vector<std::vector<Scalar>> d(N, std::vector<Scalar>(N, Scalar(0)));
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) {
            auto [ci, ki] = where[i];
            auto [cj, kj] = where[j];
            const Scalar s = param(ki), t = param(kj);
            if (ci == cj || ki == 0 || ki == m || kj == 0 || kj == m)
                d[i][j] = abs(Scalar(s - t));
            else
                d[i][j] = s + t - 2 * s * t;
        }
    Bigon out{m, make_metric(d, labels), {}, {}, {}, alpha, beta};
    out.iota.resize(N);
    for (std::size_t k = 0; k <= m; ++k) {
        out.iota[alpha[k]] = beta[k];
        out.iota[beta[k]] = alpha[k];
    }
    for (std::size_t k = 0; k <= m; ++k)
        out.grid.push_back(param(k));
    out.embedding.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        auto [c, k] = where[i];
        const Scalar s = param(k);
        for (const auto& u : out.grid)
            out.embedding[i].push_back(c == 0 ? Scalar((1 - s) * u + s * (1 - u)) : abs(Scalar(u - s)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Polygons, random metrics, trees

/// Vertices of a regular polygon with `vertices` (even) corners under the
/// inner metric: d(i, j) = min(|i-j|, vertices - |i-j|).
inline FiniteMetricSpace ngon(std::size_t vertices)
{
    if (vertices < 2 || vertices % 2 != 0)
        throw std::invalid_argument("ngon: vertex count must be even and at least 2");
    std::vector<std::vector<Scalar>> d(vertices, std::vector<Scalar>(vertices));
    for (std::size_t i = 0; i < vertices; ++i)
        for (std::size_t j = 0; j < vertices; ++j) {
            const std::size_t a = i > j ? i - j : j - i;
            d[i][j] = static_cast<long>(std::min(a, vertices - a));
        }
    return make_metric(d);
}

/// Shortest-path metric of a random connected graph: a random Hamiltonian
/// path plus each other edge with probability 1/2, weights p/q with
/// p in [1, 12], q in [1, 4].
inline FiniteMetricSpace random_metric(std::size_t n, std::uint64_t seed)
{
    if (n < 2)
        throw std::invalid_argument("random_metric: n must be at least 2");
    Rng rng(seed);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i)
        order[i] = i;
    for (std::size_t i = n - 1; i > 0; --i)
        std::swap(order[i], order[rng.below(i + 1)]);
    std::vector<std::vector<std::optional<Scalar>>> w(n, std::vector<std::optional<Scalar>>(n));
    auto weight = [&] { return Scalar(rng.between(1, 12)) / Scalar(rng.between(1, 4)); };
    for (std::size_t i = 0; i + 1 < n; ++i) {
        auto c = weight();
        w[order[i]][order[i + 1]] = c;
        w[order[i + 1]][order[i]] = c;
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (w[i][j] || rng.below(2) == 0)
                continue;
            auto c = weight();
            w[i][j] = c;
            w[j][i] = c;
        }
    for (std::size_t i = 0; i < n; ++i)
        w[i][i] = Scalar(0);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (w[i][k] && w[k][j] && (!w[i][j] || *w[i][k] + *w[k][j] < *w[i][j]))
                    w[i][j] = *w[i][k] + *w[k][j];
    std::vector<std::vector<Scalar>> d(n, std::vector<Scalar>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            d[i][j] = *w[i][j];
    return make_metric(d);
}

struct TreeEdge {
    std::size_t u = 0, v = 0;
    Scalar length;
};

/// Path-length metric between the chosen vertices of a weighted tree; by
/// default the leaves (degree-1 vertices) in increasing order.
inline FiniteMetricSpace tree_metric(std::size_t vertices, const std::vector<TreeEdge>& edges,
                                     std::vector<std::size_t> points = {})
{
    if (vertices < 2 || edges.size() != vertices - 1)
        throw std::invalid_argument("tree_metric: a tree on V vertices has V - 1 edges, V >= 2");
    std::vector<std::vector<std::pair<std::size_t, Scalar>>> adj(vertices);
    for (const auto& e : edges) {
        if (e.u >= vertices || e.v >= vertices || e.u == e.v)
            throw std::invalid_argument("tree_metric: bad edge endpoints");
        if (e.length <= 0)
            throw std::invalid_argument("tree_metric: edge lengths must be positive");
        adj[e.u].emplace_back(e.v, e.length);
        adj[e.v].emplace_back(e.u, e.length);
    }
    if (points.empty())
        for (std::size_t v = 0; v < vertices; ++v)
            if (adj[v].size() == 1)
                points.push_back(v);
    std::vector<std::vector<Scalar>> d;
    for (std::size_t a : points) {
        if (a >= vertices)
            throw std::invalid_argument("tree_metric: point index out of range");
        std::vector<std::optional<Scalar>> dist(vertices);
        std::vector<std::size_t> stack{a};
        dist[a] = Scalar(0);
        while (!stack.empty()) {
            std::size_t v = stack.back();
            stack.pop_back();
            for (const auto& [w, len] : adj[v])
                if (!dist[w]) {
                    dist[w] = *dist[v] + len;
                    stack.push_back(w);
                }
        }
        std::vector<Scalar> row;
        for (std::size_t b : points) {
            if (!dist[b])
                throw std::invalid_argument("tree_metric: edges do not form a connected tree");
            row.push_back(*dist[b]);
        }
        d.push_back(std::move(row));
    }
    std::vector<std::string> labels;
    for (std::size_t p : points)
        labels.push_back("v" + std::to_string(p));
    return make_metric(d, labels);
}

/// Star with `leaves` unit edges around vertex 0.
inline FiniteMetricSpace star_tree(std::size_t leaves)
{
    std::vector<TreeEdge> edges;
    for (std::size_t i = 1; i <= leaves; ++i)
        edges.push_back({0, i, Scalar(1)});
    return tree_metric(leaves + 1, edges);
}

// ---------------------------------------------------------------------------
// Convex cap set

/// Grid samples of C = {f : f(0) + f(1) = 1, f convex, f in Delta_1([0,1])}
/// at u_k = k/(g-1). Members are the hinges d_c(u) = |u - c|, the linear
/// profiles s + (1-2s)u, and seeded rational mixtures of those.
struct ConvexCapSample {
    std::vector<Scalar> grid;
    std::vector<std::vector<Scalar>> members;
    /// gamma(t) = d_t at each grid parameter t.
    std::vector<std::vector<Scalar>> gamma;
};

/// The three constraints of C, checked exactly on the grid.
inline bool in_convex_cap(const std::vector<Scalar>& grid, const std::vector<Scalar>& f)
{
    const std::size_t g = grid.size();
    if (f.size() != g || g < 2 || grid.front() != 0 || grid.back() != 1)
        return false;
    if (f.front() + f.back() != 1)
        return false;
    for (std::size_t k = 1; k + 1 < g; ++k) {
        // slope(k-1, k) <= slope(k, k+1)
        if ((f[k] - f[k - 1]) * (grid[k + 1] - grid[k]) > (f[k + 1] - f[k]) * (grid[k] - grid[k - 1]))
            return false;
    }
    for (std::size_t a = 0; a < g; ++a)
        for (std::size_t b = 0; b < g; ++b) {
            const Scalar gap = abs(Scalar(grid[a] - grid[b]));
            if (f[a] + f[b] < gap || abs(Scalar(f[a] - f[b])) > gap)
                return false;
        }
    return true;
}

inline ConvexCapSample convex_cap_set(std::size_t g, std::size_t mixtures = 8, std::uint64_t seed = 1)
{
    if (g < 2)
        throw std::invalid_argument("convex_cap_set: need at least 2 grid points");
    ConvexCapSample out;
    for (std::size_t k = 0; k < g; ++k)
        out.grid.push_back(Scalar(static_cast<long>(k)) / Scalar(static_cast<long>(g - 1)));
    auto hinge = [&](const Scalar& c) {
        std::vector<Scalar> f;
        for (const auto& u : out.grid)
            f.push_back(abs(Scalar(u - c)));
        return f;
    };
    for (const auto& t : out.grid)
        out.gamma.push_back(hinge(t));
    std::vector<std::vector<Scalar>> base = out.gamma;
    for (const auto& s : out.grid) {
        if (s == 0 || s == 1)
            continue; // s = 0, 1 give d0 and d1, already hinges
        std::vector<Scalar> f;
        for (const auto& u : out.grid)
            f.push_back(s + (1 - 2 * s) * u);
        base.push_back(std::move(f));
    }
    out.members = base;
    Rng rng(seed);
    for (std::size_t k = 0; k < mixtures; ++k) {
        const std::size_t parts = 2 + rng.below(2);
        std::vector<Scalar> weights;
        Scalar total = 0;
        for (std::size_t p = 0; p < parts; ++p) {
            weights.push_back(Scalar(rng.between(1, 6)));
            total += weights.back();
        }
        std::vector<Scalar> f(g, Scalar(0));
        for (std::size_t p = 0; p < parts; ++p) {
            const auto& b = base[rng.below(base.size())];
            for (std::size_t i = 0; i < g; ++i)
                f[i] += weights[p] / total * b[i];
        }
        if (std::find(out.members.begin(), out.members.end(), f) == out.members.end())
            out.members.push_back(std::move(f));
    }
    for (const auto& f : out.members)
        if (!in_convex_cap(out.grid, f))
            throw std::logic_error("convex_cap_set: generated member violates the constraints");
    return out;
}

/// The members as a finite metric space under the sup distance on the grid.
inline FiniteMetricSpace convex_cap_space(const ConvexCapSample& C)
{
    const std::size_t n = C.members.size();
    std::vector<std::vector<Scalar>> d(n, std::vector<Scalar>(n, Scalar(0)));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            d[a][b] = linf_distance(C.members[a], C.members[b]);
    return make_metric(d);
}

// ---------------------------------------------------------------------------
// Registry

struct GallerySpace {
    std::string id;
    json params;
    std::variant<FiniteMetricSpace, std::shared_ptr<const RetractSpace>> realized;
    std::string description;

    bool is_finite() const { return std::holds_alternative<FiniteMetricSpace>(realized); }
    const FiniteMetricSpace& finite() const { return std::get<FiniteMetricSpace>(realized); }
};

struct GalleryEntry {
    std::string id;
    json defaults;
    std::string description;
};

inline const std::vector<GalleryEntry>& gallery_entries()
{
    static const std::vector<GalleryEntry> entries = {
        {"butterfly", json::object(),
         "Butterfly-shaped planar set in l-inf^2 with the vertical retraction from its triangle; its "
         "retracted linear bicombing is conical but not convex."},
        {"bigon", {{"m", 4}},
         "Linear geodesic and Kuratowski curve from d0 to d1 in l-inf([0,1]), sampled at k/m and glued "
         "at the endpoints (2m points)."},
        {"ngon", {{"vertices", 6}}, "Vertices of a regular polygon with an even number of corners, inner metric."},
        {"convex-cap", {{"grid", 5}, {"mixtures", 8}, {"seed", 1}},
         "Grid samples of the convex set {f(0)+f(1)=1, f convex, f in Delta_1([0,1])} under the sup "
         "distance."},
        {"random", {{"n", 6}, {"seed", 42}}, "Shortest-path metric of a random rational weighted graph."},
        {"star", {{"leaves", 3}}, "Leaves of a star with unit edges."},
        {"tree", {{"vertices", 2}, {"edges", json::array({json::array({0, 1, "1"})})}},
         "Leaf metric of a weighted tree given as [u, v, length] edges."},
    };
    return entries;
}

/// Builds a gallery space; missing parameters take the listed defaults.
inline GallerySpace gallery_make(const std::string& id, const json& params = json::object())
{
    const auto& entries = gallery_entries();
    auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.id == id; });
    if (it == entries.end())
        throw std::invalid_argument("unknown gallery id '" + id + "'");
    json p = it->defaults;
    if (!params.is_null()) {
        if (!params.is_object())
            throw std::invalid_argument("gallery parameters must be a JSON object");
        for (auto& [k, v] : params.items()) {
            if (!p.contains(k))
                throw std::invalid_argument("gallery '" + id + "' has no parameter '" + k + "'");
            p[k] = v;
        }
    }
    auto count = [&](const char* key) {
        const auto& v = p.at(key);
        if (!v.is_number_integer() || v.get<long long>() < 0)
            throw std::invalid_argument(std::string("parameter '") + key + "' must be a non-negative integer");
        return static_cast<std::size_t>(v.get<long long>());
    };
    GallerySpace out{id, p, std::shared_ptr<const RetractSpace>{}, it->description};
    if (id == "butterfly")
        out.realized = butterfly();
    else if (id == "bigon")
        out.realized = bigon(count("m")).space;
    else if (id == "ngon")
        out.realized = ngon(count("vertices"));
    else if (id == "convex-cap")
        out.realized = convex_cap_space(convex_cap_set(count("grid"), count("mixtures"), count("seed")));
    else if (id == "random")
        out.realized = random_metric(count("n"), count("seed"));
    else if (id == "star")
        out.realized = star_tree(count("leaves"));
    else if (id == "tree") {
        std::vector<TreeEdge> edges;
        for (const auto& e : p.at("edges")) {
            if (!e.is_array() || e.size() != 3)
                throw std::invalid_argument("tree edges are [u, v, length] triples");
            edges.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), scalar_from_json(e[2])});
        }
        out.realized = tree_metric(count("vertices"), edges);
    }
    return out;
}

} // namespace bicomb
