#pragma once

// Injective hull (tight span) E(X) of a finite metric space X, realized inside
// R^X as the extremal members of
//   Delta(X) = { f : f(x) + f(y) >= d(x,y) for all x, y }.
// E(X) is the union of the bounded faces of the polyhedron Delta(X); each face
// is labelled by the graph A(f) of pairs attaining equality.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "bicomb/metric_core.hpp"

namespace bicomb {

/// A real function on the points of X (f, g, d_x, f* ...).
using MetricForm = std::vector<Scalar>;

template <class T>
std::vector<T> star_dual(const SquareMatrix<T>& d, std::span<const T> f)
{
    const std::size_t n = d.size();
    if (f.size() != n)
        throw std::invalid_argument("star_dual: form length does not match space");
    std::vector<T> out(n);
    for (std::size_t x = 0; x < n; ++x) {
        T best = d(x, 0) - f[0];
        for (std::size_t y = 1; y < n; ++y) {
            T v = d(x, y) - f[y];
            if (v > best)
                best = std::move(v);
        }
        out[x] = std::move(best);
    }
    return out;
}

/// f*(x) = max_y d(x,y) - f(y).
inline MetricForm star_dual(const FiniteMetricSpace& X, const MetricForm& f)
{
    return star_dual<Scalar>(X.distances(), f);
}

template <class T>
bool is_in_delta(const SquareMatrix<T>& d, std::span<const T> f)
{
    const std::size_t n = d.size();
    if (f.size() != n)
        return false;
    for (std::size_t x = 0; x < n; ++x)
        for (std::size_t y = x; y < n; ++y)
            if (f[x] + f[y] < d(x, y))
                return false;
    return true;
}

inline bool is_in_delta(const FiniteMetricSpace& X, const MetricForm& f)
{
    return is_in_delta<Scalar>(X.distances(), f);
}

/// Member of Delta(X) that is also 1-Lipschitz.
inline bool is_in_delta1(const FiniteMetricSpace& X, const MetricForm& f)
{
    if (!is_in_delta(X, f))
        return false;
    for (std::size_t x = 0; x < X.size(); ++x)
        for (std::size_t y = x + 1; y < X.size(); ++y)
            if (abs(Scalar(f[x] - f[y])) > X(x, y))
                return false;
    return true;
}

inline bool is_extremal(const FiniteMetricSpace& X, const MetricForm& f)
{
    return f.size() == X.size() && star_dual(X, f) == f;
}

/// Sup-norm distance between f and f*; zero exactly on E(X).
template <class T>
T extremality_defect(const SquareMatrix<T>& d, std::span<const T> f)
{
    auto fs = star_dual<T>(d, f);
    return linf_distance(std::vector<T>(f.begin(), f.end()), fs);
}

/// The canonical isometric embedding e(x) = d_x = d(x, .).
inline MetricForm kuratowski_embed(const FiniteMetricSpace& X, std::size_t x)
{
    if (x >= X.size())
        throw std::out_of_range("kuratowski_embed: point out of range");
    auto r = X.row(x);
    return MetricForm(r.begin(), r.end());
}

/// 1-Lipschitz retraction of R^X onto Delta(X): g -> max(g, g*).
template <class T>
std::vector<T> retract_to_delta(const SquareMatrix<T>& d, std::span<const T> g)
{
    auto gs = star_dual<T>(d, g);
    for (std::size_t i = 0; i < gs.size(); ++i)
        if (g[i] > gs[i])
            gs[i] = g[i];
    return gs;
}

inline MetricForm retract_to_delta(const FiniteMetricSpace& X, const MetricForm& g)
{
    return retract_to_delta<Scalar>(X.distances(), g);
}

namespace detail {

    /// Two certificates that the iteration from f (in Delta(X), f* = fs) has an
    /// exact limit L in E(X). Both rest on the segment g(s) = L + s v, v >= 0,
    /// along which g* is convex in s.
    ///  (a) L = f* extremal: g* equals f* at both ends of [L, f] and g <= f
    ///      forces g* >= f*, so g* = L on the segment and every step moves
    ///      towards L along it.
    ///  (b) L = (f + f*)/2 extremal, step <= 1/2, and each x has an L-tight
    ///      partner y (a loop allowed) with v_y = v_x where v = f - L: the
    ///      partner term gives g* >= L - s v, convexity gives <=, so a step
    ///      maps g(s) to g((1 - 2 step) s).
    template <class T>
    std::optional<std::vector<T>> exact_limit(const SquareMatrix<T>& d, const std::vector<T>& f,
                                              const std::vector<T>& fs, const T& step)
    {
        if (star_dual<T>(d, fs) == fs)
            return fs;
        if (step * 2 > 1)
            return std::nullopt;
        const std::size_t n = f.size();
        std::vector<T> L(n), v(n);
        for (std::size_t i = 0; i < n; ++i) {
            L[i] = (f[i] + fs[i]) / 2;
            v[i] = f[i] - L[i];
        }
        if (star_dual<T>(d, L) != L)
            return std::nullopt;
        for (std::size_t x = 0; x < n; ++x) {
            bool partner = false;
            for (std::size_t y = 0; y < n && !partner; ++y)
                partner = v[y] == v[x] && L[x] + L[y] == d(x, y);
            if (!partner)
                return std::nullopt;
        }
        return L;
    }

} // namespace detail

template <class T>
struct TightSpanRetraction {
    std::vector<T> form;
    std::size_t iterations = 0;
    T defect{};                   // ||form - form*||_inf at exit
    bool converged = false;
    bool limit_detected = false;  // exact mode: form is the limit of the iterates
    std::vector<T> defect_history; // defect before each step, then at exit
};

/// Iterates f -> (1 - step) f + step f* from f in Delta(X). On Delta(X) we have
/// f* <= f, so the iterates decrease pointwise and stay in Delta(X).
///
/// The iterates typically approach E(X) geometrically, so with exact scalars
/// each step also tests whether the limit can already be read off (see
/// detail::exact_limit). Otherwise the run ends at max_iter with
/// converged == false.
template <class T>
TightSpanRetraction<T> retract_to_tight_span(const SquareMatrix<T>& d, std::vector<T> f, T tol,
                                             std::size_t max_iter, T step = T(1) / T(2),
                                             bool keep_history = false)
{
    if (!is_in_delta<T>(d, f))
        throw std::invalid_argument("retract_to_tight_span: start point is not in Delta(X)");
    if (step <= 0 || step > 1)
        throw std::invalid_argument("retract_to_tight_span: step must lie in (0, 1]");
    TightSpanRetraction<T> out;
    const T keep = T(1) - step;
    for (;;) {
        auto fs = star_dual<T>(d, f);
        T defect = 0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            T diff = f[i] - fs[i];
            if (diff > defect)
                defect = diff;
        }
        if (keep_history)
            out.defect_history.push_back(defect);
        if (defect <= tol) {
            out.defect = defect;
            out.converged = true;
            break;
        }
        if (out.iterations == max_iter) {
            out.defect = defect;
            break;
        }
        if constexpr (!std::is_floating_point_v<T>) {
            // counted as one more step: the next iterate already lies on the
            // segment that leads to the limit
            if (auto limit = detail::exact_limit<T>(d, f, fs, step)) {
                f = std::move(*limit);
                ++out.iterations;
                out.defect = 0;
                out.converged = out.limit_detected = true;
                if (keep_history)
                    out.defect_history.push_back(T(0));
                break;
            }
        }
        for (std::size_t i = 0; i < f.size(); ++i)
            f[i] = keep * f[i] + step * fs[i];
        ++out.iterations;
    }
    out.form = std::move(f);
    return out;
}

inline TightSpanRetraction<Scalar> retract_to_tight_span(const FiniteMetricSpace& X, MetricForm f,
                                                         std::size_t max_iter = 10000)
{
    return retract_to_tight_span<Scalar>(X.distances(), std::move(f), Scalar(0), max_iter);
}

/// Unordered pair {a, b} with a <= b; a == b is a loop.
struct Edge {
    std::size_t a = 0, b = 0;
    Edge() = default;
    Edge(std::size_t x, std::size_t y) : a(std::min(x, y)), b(std::max(x, y)) {}
    bool is_loop() const noexcept { return a == b; }
    auto operator<=>(const Edge&) const = default;
};

/// Undirected graph on the points of X, typically A(f). Components carry a
/// parity flag: odd iff the component contains an odd cycle (a loop counts as
/// a cycle of length one).
class AdmissibleGraph {
public:
    struct Component {
        std::vector<std::size_t> vertices;
        bool odd = false;
    };

    AdmissibleGraph() = default;
    AdmissibleGraph(std::size_t n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges))
    {
        for (const auto& e : edges_)
            if (e.b >= n_)
                throw std::out_of_range("AdmissibleGraph: edge endpoint out of range");
        std::sort(edges_.begin(), edges_.end());
        edges_.erase(std::unique(edges_.begin(), edges_.end()), edges_.end());
        build_components();
    }

    std::size_t vertex_count() const noexcept { return n_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const std::vector<Component>& components() const noexcept { return components_; }

    bool contains(Edge e) const { return std::binary_search(edges_.begin(), edges_.end(), e); }

    bool contains_all(const AdmissibleGraph& other) const
    {
        return std::includes(edges_.begin(), edges_.end(), other.edges_.begin(),
                             other.edges_.end());
    }

    bool has_isolated_vertex() const
    {
        std::vector<bool> seen(n_, false);
        for (const auto& e : edges_)
            seen[e.a] = seen[e.b] = true;
        return std::find(seen.begin(), seen.end(), false) != seen.end();
    }

    /// Number of even components: the dimension of the face P(A).
    int rank() const
    {
        return static_cast<int>(std::count_if(components_.begin(), components_.end(),
                                              [](const Component& c) { return !c.odd; }));
    }

    bool operator==(const AdmissibleGraph& o) const { return n_ == o.n_ && edges_ == o.edges_; }

private:
    void build_components()
    {
        std::vector<std::vector<std::size_t>> adj(n_);
        std::vector<bool> loop(n_, false);
        for (const auto& e : edges_) {
            if (e.is_loop()) {
                loop[e.a] = true;
                continue;
            }
            adj[e.a].push_back(e.b);
            adj[e.b].push_back(e.a);
        }
        std::vector<int> colour(n_, -1);
        for (std::size_t s = 0; s < n_; ++s) {
            if (colour[s] != -1)
                continue;
            Component comp;
            std::vector<std::size_t> stack{s};
            colour[s] = 0;
            while (!stack.empty()) {
                std::size_t v = stack.back();
                stack.pop_back();
                comp.vertices.push_back(v);
                if (loop[v])
                    comp.odd = true;
                for (std::size_t w : adj[v]) {
                    if (colour[w] == -1) {
                        colour[w] = 1 - colour[v];
                        stack.push_back(w);
                    } else if (colour[w] == colour[v]) {
                        comp.odd = true;
                    }
                }
            }
            std::sort(comp.vertices.begin(), comp.vertices.end());
            components_.push_back(std::move(comp));
        }
    }

    std::size_t n_ = 0;
    std::vector<Edge> edges_;
    std::vector<Component> components_;
};

/// Equality graph of an arbitrary form (no extremality requirement).
template <class T>
AdmissibleGraph equality_graph(const SquareMatrix<T>& d, std::span<const T> f)
{
    std::vector<Edge> edges;
    for (std::size_t x = 0; x < d.size(); ++x)
        for (std::size_t y = x; y < d.size(); ++y)
            if (f[x] + f[y] == d(x, y))
                edges.emplace_back(x, y);
    return AdmissibleGraph(d.size(), std::move(edges));
}

/// A(f) = {{x,y} : f(x) + f(y) = d(x,y)} for extremal f, loops included.
inline AdmissibleGraph admissible_graph(const FiniteMetricSpace& X, const MetricForm& f)
{
    if (!is_extremal(X, f))
        throw std::invalid_argument("admissible_graph: form is not extremal");
    return equality_graph<Scalar>(X.distances(), f);
}

inline int rank(const AdmissibleGraph& A) { return A.rank(); }

/// One polyhedral cell P(A) of E(X).
struct Face {
    AdmissibleGraph graph;
    int rank = 0;
    MetricForm representative;        // average of the cell's vertices
    std::vector<std::size_t> vertices; // indices into FaceLattice::vertices
};

struct FaceLattice {
    std::vector<MetricForm> vertices;
    std::vector<Face> faces;

    int dimension() const
    {
        int best = 0;
        for (const auto& f : faces)
            best = std::max(best, f.rank);
        return best;
    }

    /// P(A') is a face of P(A) iff A is contained in A'.
    bool is_face_of(std::size_t sub, std::size_t super) const
    {
        return faces.at(sub).graph.contains_all(faces.at(super).graph);
    }
};

inline constexpr std::size_t default_face_cap = 8;
inline constexpr std::size_t max_face_cap = 10; // pair masks must fit in 64 bits

namespace detail {

    using PairMask = std::uint64_t;

    struct PairTable {
        std::size_t n = 0;
        std::vector<std::pair<std::size_t, std::size_t>> pairs; // a <= b
        std::vector<PairMask> incident;                          // pairs touching each point

        explicit PairTable(std::size_t n_) : n(n_), incident(n_, 0)
        {
            for (std::size_t b = 0; b < n; ++b)
                for (std::size_t a = 0; a <= b; ++a) {
                    incident[a] |= PairMask(1) << pairs.size();
                    incident[b] |= PairMask(1) << pairs.size();
                    pairs.emplace_back(a, b);
                }
        }

        bool covers(PairMask m) const
        {
            for (auto inc : incident)
                if ((inc & m) == 0)
                    return false;
            return true;
        }

        AdmissibleGraph graph(PairMask m) const
        {
            std::vector<Edge> edges;
            for (std::size_t p = 0; p < pairs.size(); ++p)
                if (m >> p & 1)
                    edges.emplace_back(pairs[p].first, pairs[p].second);
            return AdmissibleGraph(n, std::move(edges));
        }
    };

    inline PairMask tight_mask(const PairTable& t, const SquareMatrix<Scalar>& d,
                               const MetricForm& f)
    {
        PairMask m = 0;
        for (std::size_t p = 0; p < t.pairs.size(); ++p) {
            auto [a, b] = t.pairs[p];
            if (f[a] + f[b] == d(a, b))
                m |= PairMask(1) << p;
        }
        return m;
    }

    /// Even components of the graph (X, m) where the "tight" edges are the
    /// subset of m selected by `keep`. Isolated points count as even.
    inline int even_components(const PairTable& t, PairMask m)
    {
        const std::size_t n = t.n;
        std::vector<std::size_t> parent(n);
        std::vector<int> parity(n, 0); // parity relative to parent
        std::vector<bool> odd(n, false);
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](std::size_t v) {
            int par = 0;
            std::size_t r = v;
            while (parent[r] != r) {
                par ^= parity[r];
                r = parent[r];
            }
            return std::pair{r, par};
        };
        for (std::size_t p = 0; p < t.pairs.size(); ++p) {
            if (!(m >> p & 1))
                continue;
            auto [a, b] = t.pairs[p];
            auto [ra, pa] = find(a);
            auto [rb, pb] = find(b);
            if (ra == rb) {
                if (pa == pb) // closing an odd cycle (or a loop)
                    odd[ra] = true;
            } else {
                parent[rb] = ra;
                parity[rb] = pa ^ pb ^ 1;
                odd[ra] = odd[ra] || odd[rb];
            }
        }
        int even = 0;
        for (std::size_t v = 0; v < n; ++v)
            if (parent[v] == v && !odd[v])
                ++even;
        return even;
    }

    /// Vertices of Delta(X) reachable from d_0 along bounded edges, which is
    /// all of them since the 1-skeleton of E(X) is connected. Edge directions
    /// at a vertex v are the extreme rays of the cone
    ///   { u : u(x) + u(y) >= 0 for {x,y} in A(v) },
    /// and every such ray is a multiple of a {-1,0,1}-vector supported on a
    /// single even component of its tight subgraph.
    inline std::vector<MetricForm> enumerate_vertices(const FiniteMetricSpace& X,
                                                      const PairTable& t)
    {
        const std::size_t n = X.size();
        const auto& d = X.distances();
        std::map<MetricForm, PairMask> found;
        std::vector<MetricForm> queue{kuratowski_embed(X, 0)};
        found.emplace(queue.front(), tight_mask(t, d, queue.front()));

        std::size_t directions = 1;
        for (std::size_t i = 0; i < n; ++i)
            directions *= 3;
        std::vector<int> u(n);

        for (std::size_t head = 0; head < queue.size(); ++head) {
            const MetricForm v = queue[head];
            const PairMask A = found.at(v);
            for (std::size_t code = 1; code < directions; ++code) {
                std::size_t c = code;
                for (std::size_t i = 0; i < n; ++i) {
                    u[i] = static_cast<int>(c % 3) - 1;
                    c /= 3;
                }
                PairMask tight = 0;
                bool feasible = true;
                for (std::size_t p = 0; p < t.pairs.size() && feasible; ++p) {
                    if (!(A >> p & 1))
                        continue;
                    const int rate = u[t.pairs[p].first] + u[t.pairs[p].second];
                    if (rate < 0)
                        feasible = false;
                    else if (rate == 0)
                        tight |= PairMask(1) << p;
                }
                if (!feasible || even_components(t, tight) != 1)
                    continue;
                // Ratio test against the pairs that are slack at v.
                bool bounded = false;
                Scalar step;
                for (std::size_t p = 0; p < t.pairs.size(); ++p) {
                    if (A >> p & 1)
                        continue;
                    auto [a, b] = t.pairs[p];
                    const int rate = u[a] + u[b];
                    if (rate >= 0)
                        continue;
                    Scalar s = (v[a] + v[b] - d(a, b)) / Scalar(-rate);
                    if (!bounded || s < step) {
                        step = std::move(s);
                        bounded = true;
                    }
                }
                if (!bounded)
                    continue;
                MetricForm w = v;
                for (std::size_t i = 0; i < n; ++i)
                    if (u[i] != 0)
                        w[i] += step * u[i];
                if (found.contains(w))
                    continue;
                found.emplace(w, tight_mask(t, d, w));
                queue.push_back(std::move(w));
            }
        }
        std::vector<MetricForm> out;
        out.reserve(found.size());
        for (auto& [k, _] : found)
            out.push_back(k);
        return out;
    }

} // namespace detail

/// All cells of E(X): one entry per admissible set A, with rank, vertex list
/// and a representative in the relative interior. Faces are ordered by rank,
/// then by edge list.
inline FaceLattice enumerate_faces(const FiniteMetricSpace& X, std::size_t cap = default_face_cap)
{
    const std::size_t n = X.size();
    if (cap > max_face_cap)
        throw std::invalid_argument("enumerate_faces: cap above " + std::to_string(max_face_cap));
    if (n > cap)
        throw std::length_error("enumerate_faces: |X| = " + std::to_string(n) +
                                " exceeds cap " + std::to_string(cap));
    using detail::PairMask;
    const detail::PairTable table(n);
    FaceLattice lattice;
    lattice.vertices = detail::enumerate_vertices(X, table);

    std::vector<PairMask> vmask;
    vmask.reserve(lattice.vertices.size());
    for (const auto& v : lattice.vertices)
        vmask.push_back(detail::tight_mask(table, X.distances(), v));

    // Every face's admissible set is the intersection of its vertices' sets;
    // close the vertex sets under intersection, dropping sets with an isolated
    // point (those describe unbounded faces of Delta(X)).
    std::set<PairMask> masks(vmask.begin(), vmask.end());
    std::vector<PairMask> work(masks.begin(), masks.end());
    while (!work.empty()) {
        const PairMask a = work.back();
        work.pop_back();
        for (PairMask b : vmask) {
            const PairMask c = a & b;
            if (c == a || !table.covers(c))
                continue;
            if (masks.insert(c).second)
                work.push_back(c);
        }
    }

    for (PairMask m : masks) {
        Face face;
        face.graph = table.graph(m);
        face.rank = face.graph.rank();
        face.representative.assign(n, Scalar(0));
        for (std::size_t v = 0; v < vmask.size(); ++v) {
            if ((m & ~vmask[v]) != 0)
                continue;
            face.vertices.push_back(v);
            for (std::size_t i = 0; i < n; ++i)
                face.representative[i] += lattice.vertices[v][i];
        }
        for (auto& c : face.representative)
            c /= Scalar(static_cast<long>(face.vertices.size()));
        if (detail::tight_mask(table, X.distances(), face.representative) != m)
            throw std::logic_error("enumerate_faces: representative left its cell");
        lattice.faces.push_back(std::move(face));
    }
    std::sort(lattice.faces.begin(), lattice.faces.end(), [](const Face& a, const Face& b) {
        if (a.rank != b.rank)
            return a.rank < b.rank;
        return a.graph.edges() < b.graph.edges();
    });
    return lattice;
}

/// dim E(X); always between 0 and |X|/2.
inline int tight_span_dim(const FiniteMetricSpace& X, std::size_t cap = default_face_cap)
{
    if (X.size() == 1)
        return 0;
    return enumerate_faces(X, cap).dimension();
}

} // namespace bicomb
