#pragma once

// Independent reference computations used by the test suites. Nothing here
// calls into the algorithms under test; the only shared pieces are the value
// types (Scalar, FiniteMetricSpace).

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <vector>

#include "bicomb/metric_core.hpp"
#include "bicomb/random.hpp"

namespace oracle {

using bicomb::FiniteMetricSpace;
using bicomb::Scalar;
using Matrix = std::vector<std::vector<Scalar>>;

inline FiniteMetricSpace from_ints(const std::vector<std::vector<long>>& m)
{
    Matrix d(m.size());
    for (std::size_t i = 0; i < m.size(); ++i)
        for (long v : m[i])
            d[i].push_back(Scalar(v));
    return bicomb::make_metric(d);
}

/// Vertices of a regular 2n-gon with the arc-length metric, unit edges.
inline FiniteMetricSpace polygon_arc(std::size_t k)
{
    Matrix d(k, std::vector<Scalar>(k));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            std::size_t gap = i > j ? i - j : j - i;
            d[i][j] = Scalar(static_cast<long>(std::min(gap, k - gap)));
        }
    return bicomb::make_metric(d);
}

/// Shortest-path closure of random positive integer edge weights on K_n.
inline FiniteMetricSpace random_path_metric(std::size_t n, bicomb::Rng& rng, long lo = 1,
                                            long hi = 20)
{
    std::vector<std::vector<long>> w(n, std::vector<long>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            w[i][j] = w[j][i] = rng.between(lo, hi);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                w[i][j] = std::min(w[i][j], w[i][k] + w[k][j]);
    return from_ints(w);
}

/// Metric of a weighted tree given by parent pointers (parent[0] unused) and
/// edge lengths; distances computed by walking to the root.
inline FiniteMetricSpace tree_metric(const std::vector<std::size_t>& parent,
                                     const std::vector<long>& len)
{
    const std::size_t n = parent.size();
    auto path = [&](std::size_t v) {
        std::vector<std::pair<std::size_t, long>> out{{v, 0}};
        long acc = 0;
        while (v != 0) {
            acc += len[v];
            v = parent[v];
            out.push_back({v, acc});
        }
        return out;
    };
    std::vector<std::vector<long>> d(n, std::vector<long>(n, 0));
    for (std::size_t a = 0; a < n; ++a) {
        auto pa = path(a);
        for (std::size_t b = 0; b < n; ++b) {
            auto pb = path(b);
            long best = -1;
            for (auto [u, da] : pa)
                for (auto [v, db] : pb)
                    if (u == v && (best < 0 || da + db < best))
                        best = da + db;
            d[a][b] = best;
        }
    }
    return from_ints(d);
}

/// Random tree on n vertices with positive integer edge lengths.
inline FiniteMetricSpace random_tree(std::size_t n, bicomb::Rng& rng)
{
    std::vector<std::size_t> parent(n, 0);
    std::vector<long> len(n, 0);
    for (std::size_t v = 1; v < n; ++v) {
        parent[v] = rng.below(v);
        len[v] = rng.between(1, 9);
    }
    return tree_metric(parent, len);
}

/// Finite subset of l-infinity^dim with small rational coordinates.
inline FiniteMetricSpace random_linf_points(std::size_t n, std::size_t dim, bicomb::Rng& rng)
{
    std::set<std::vector<long>> pts;
    while (pts.size() < n) {
        std::vector<long> p(dim);
        for (auto& c : p)
            c = rng.between(-12, 12);
        pts.insert(p);
    }
    std::vector<std::vector<long>> v(pts.begin(), pts.end());
    Matrix d(n, std::vector<Scalar>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            long m = 0;
            for (std::size_t k = 0; k < dim; ++k)
                m = std::max(m, std::abs(v[i][k] - v[j][k]));
            d[i][j] = Scalar(m, 2);
        }
    return bicomb::make_metric(d);
}

/// Rank of a list of rational vectors by Gaussian elimination.
inline std::size_t matrix_rank(std::vector<std::vector<Scalar>> rows)
{
    if (rows.empty())
        return 0;
    const std::size_t cols = rows.front().size();
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < rows.size(); ++c) {
        std::size_t piv = r;
        while (piv < rows.size() && rows[piv][c] == 0)
            ++piv;
        if (piv == rows.size())
            continue;
        std::swap(rows[r], rows[piv]);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (i == r || rows[i][c] == 0)
                continue;
            Scalar factor = rows[i][c] / rows[r][c];
            for (std::size_t k = c; k < cols; ++k)
                rows[i][k] -= factor * rows[r][k];
        }
        ++r;
    }
    return r;
}

/// Dimension of the affine hull of a nonempty point list.
inline std::size_t affine_dim(const std::vector<std::vector<Scalar>>& pts)
{
    std::vector<std::vector<Scalar>> diffs;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        std::vector<Scalar> row(pts[i].size());
        for (std::size_t k = 0; k < row.size(); ++k)
            row[k] = pts[i][k] - pts[0][k];
        diffs.push_back(std::move(row));
    }
    return matrix_rank(std::move(diffs));
}

/// Unique solution of A x = b, or nothing if A is singular.
inline std::optional<std::vector<Scalar>> solve(std::vector<std::vector<Scalar>> A,
                                                std::vector<Scalar> b)
{
    const std::size_t n = A.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        while (piv < n && A[piv][c] == 0)
            ++piv;
        if (piv == n)
            return std::nullopt;
        std::swap(A[c], A[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t i = 0; i < n; ++i) {
            if (i == c || A[i][c] == 0)
                continue;
            Scalar f = A[i][c] / A[c][c];
            for (std::size_t k = c; k < n; ++k)
                A[i][k] -= f * A[c][k];
            b[i] -= f * b[c];
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        b[i] /= A[i][i];
    return b;
}

struct BruteFace {
    std::vector<std::pair<std::size_t, std::size_t>> edges; // sorted, a <= b
    std::size_t dim = 0;
    auto operator<=>(const BruteFace&) const = default;
};

inline void PrintTo(const BruteFace& f, std::ostream* os)
{
    *os << "{dim " << f.dim << ":";
    for (auto [a, b] : f.edges)
        *os << " " << a << "-" << b;
    *os << "}";
}

/// Every bounded face of Delta(X) by brute force: vertices are the feasible
/// solutions of all n-subsets of equality constraints, and a covering edge set
/// A is a face label iff it equals the common equality set of the vertices
/// lying on P(A). Face dimension is the affine dimension of those vertices.
inline std::vector<BruteFace> brute_force_faces(const FiniteMetricSpace& X)
{
    const std::size_t n = X.size();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t a = 0; a <= b; ++a)
            pairs.emplace_back(a, b);
    const std::size_t P = pairs.size();

    auto in_delta = [&](const std::vector<Scalar>& f) {
        for (auto [a, b] : pairs)
            if (f[a] + f[b] < X(a, b))
                return false;
        return true;
    };
    auto mask_of = [&](const std::vector<Scalar>& f) {
        std::uint64_t m = 0;
        for (std::size_t p = 0; p < P; ++p)
            if (f[pairs[p].first] + f[pairs[p].second] == X(pairs[p].first, pairs[p].second))
                m |= std::uint64_t(1) << p;
        return m;
    };

    std::set<std::vector<Scalar>> verts;
    std::vector<std::size_t> pick(n);
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t start, std::size_t depth) {
        if (depth == n) {
            std::vector<std::vector<Scalar>> A(n, std::vector<Scalar>(n, Scalar(0)));
            std::vector<Scalar> b(n);
            for (std::size_t r = 0; r < n; ++r) {
                auto [x, y] = pairs[pick[r]];
                A[r][x] += 1;
                A[r][y] += 1;
                b[r] = X(x, y);
            }
            if (auto s = solve(A, b); s && in_delta(*s))
                verts.insert(*s);
            return;
        }
        for (std::size_t p = start; p < P; ++p) {
            pick[depth] = p;
            rec(p + 1, depth + 1);
        }
    };
    rec(0, 0);

    std::vector<std::vector<Scalar>> V(verts.begin(), verts.end());
    std::vector<std::uint64_t> masks;
    for (const auto& v : V)
        masks.push_back(mask_of(v));

    std::vector<BruteFace> out;
    for (std::uint64_t A = 1; A < (std::uint64_t(1) << P); ++A) {
        std::uint64_t common = ~std::uint64_t(0);
        std::vector<std::vector<Scalar>> on;
        for (std::size_t v = 0; v < V.size(); ++v)
            if ((A & ~masks[v]) == 0) {
                common &= masks[v];
                on.push_back(V[v]);
            }
        if (on.empty() || common != A)
            continue;
        // faces with an uncovered point are unbounded (not part of E(X))
        std::vector<bool> covered(n, false);
        for (std::size_t p = 0; p < P; ++p)
            if (A >> p & 1)
                covered[pairs[p].first] = covered[pairs[p].second] = true;
        if (std::find(covered.begin(), covered.end(), false) != covered.end())
            continue;
        BruteFace f;
        for (std::size_t p = 0; p < P; ++p)
            if (A >> p & 1)
                f.edges.push_back(pairs[p]);
        std::sort(f.edges.begin(), f.edges.end());
        f.dim = affine_dim(on);
        out.push_back(std::move(f));
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Sum of d(z, sigma(z)) over z.
inline Scalar matching_sum(const FiniteMetricSpace& X, const std::vector<std::size_t>& Z,
                           const std::vector<std::size_t>& sigma)
{
    Scalar s = 0;
    for (std::size_t k = 0; k < Z.size(); ++k)
        s += X(Z[k], Z[sigma[k]]);
    return s;
}

/// All derangements of {0..m-1} in lexicographic order.
inline std::vector<std::vector<std::size_t>> derangements(std::size_t m)
{
    std::vector<std::size_t> p(m);
    std::iota(p.begin(), p.end(), 0);
    std::vector<std::vector<std::size_t>> out;
    do {
        bool ok = true;
        for (std::size_t k = 0; k < m; ++k)
            ok = ok && p[k] != k;
        if (ok)
            out.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
}

} // namespace oracle
