#pragma once

// Dress's criterion for the combinatorial dimension: the brute-force check
// over (Z, i), the flow LP mu(h) and the constructive certificates that show
// why a given (Z, i) satisfies or violates the matching inequality.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "bicomb/exact_lp.hpp"
#include "bicomb/metric_core.hpp"
#include "bicomb/parallel.hpp"
#include "bicomb/tight_span.hpp"

namespace bicomb {

/// Fixed-point-free involution on {0, .., size-1}.
class Involution {
public:
    Involution() = default;
    explicit Involution(std::vector<std::size_t> image) : image_(std::move(image))
    {
        for (std::size_t z : image_)
            if (z >= image_.size())
                throw std::out_of_range("Involution: image out of range");
        for (std::size_t z = 0; z < image_.size(); ++z) {
            if (image_[z] == z || image_[image_[z]] != z)
                throw std::invalid_argument("Involution: not a fixed-point-free involution");
        }
    }

    static Involution from_pairs(std::size_t n, const std::vector<Edge>& pairs)
    {
        std::vector<std::size_t> image(n, n);
        for (const auto& e : pairs) {
            if (e.b >= n)
                throw std::out_of_range("Involution: pair out of range");
            if (e.is_loop() || image[e.a] != n || image[e.b] != n)
                throw std::invalid_argument("Involution: pairs must be disjoint and proper");
            image[e.a] = e.b;
            image[e.b] = e.a;
        }
        return Involution(std::move(image));
    }

    std::size_t size() const noexcept { return image_.size(); }
    std::size_t operator()(std::size_t z) const { return image_.at(z); }
    const std::vector<std::size_t>& image() const noexcept { return image_; }

    /// Z_i as a sorted edge list.
    std::vector<Edge> pairs() const
    {
        std::vector<Edge> out;
        for (std::size_t z = 0; z < image_.size(); ++z)
            if (z < image_[z])
                out.emplace_back(z, image_[z]);
        return out;
    }

    bool operator==(const Involution&) const = default;

private:
    std::vector<std::size_t> image_;
};

/// Sum of d(z, j(z)) for a map j given by its image vector.
inline Scalar matching_sum(const FiniteMetricSpace& Z, const std::vector<std::size_t>& j)
{
    Scalar s = 0;
    for (std::size_t z = 0; z < j.size(); ++z)
        s += Z(z, j[z]);
    return s;
}

// ---------------------------------------------------------------------------
// dress_check

struct DressCheckResult {
    bool holds = true;
    std::vector<std::size_t> Z;     // indices into X of the violating subset
    std::optional<Involution> i;    // on positions 0..|Z|-1 of Z
    std::size_t subsets_checked = 0;
};

namespace detail {

    inline std::vector<std::vector<std::uint8_t>> derangement_table(std::size_t m)
    {
        std::vector<std::uint8_t> p(m);
        std::iota(p.begin(), p.end(), std::uint8_t(0));
        std::vector<std::vector<std::uint8_t>> out;
        do {
            bool ok = true;
            for (std::size_t k = 0; k < m && ok; ++k)
                ok = p[k] != k;
            if (ok)
                out.push_back(p);
        } while (std::next_permutation(p.begin(), p.end()));
        return out;
    }

    inline std::vector<std::vector<std::size_t>> combinations(std::size_t n, std::size_t k)
    {
        std::vector<std::vector<std::size_t>> out;
        if (k > n)
            return out;
        std::vector<std::size_t> c(k);
        std::iota(c.begin(), c.end(), std::size_t(0));
        for (;;) {
            out.push_back(c);
            std::size_t r = k;
            while (r > 0 && c[r - 1] == n - k + r - 1)
                --r;
            if (r == 0)
                return out;
            ++c[r - 1];
            for (std::size_t s = r; s < k; ++s)
                c[s] = c[s - 1] + 1;
        }
    }

    /// Distances scaled to a common denominator when the sums fit in 64 bits.
    inline std::optional<SquareMatrix<std::int64_t>> scaled_integers(const FiniteMetricSpace& X,
                                                                     std::size_t terms)
    {
        using boost::multiprecision::mpz_int;
        mpz_int L = 1;
        for (std::size_t a = 0; a < X.size(); ++a)
            for (std::size_t b = a + 1; b < X.size(); ++b)
                L = boost::multiprecision::lcm(L, mpz_int(denominator(X(a, b))));
        const mpz_int limit = mpz_int(std::numeric_limits<std::int64_t>::max() / 2) /
                              static_cast<long>(std::max<std::size_t>(terms, 1));
        SquareMatrix<std::int64_t> out(X.size());
        for (std::size_t a = 0; a < X.size(); ++a)
            for (std::size_t b = 0; b < X.size(); ++b) {
                mpz_int v = numerator(X(a, b)) * (L / denominator(X(a, b)));
                if (v > limit)
                    return std::nullopt;
                out(a, b) = v.convert_to<std::int64_t>();
            }
        return out;
    }

    /// If one derangement strictly beats all others and it is an involution,
    /// returns it.
    template <class T, class Dist>
    std::optional<std::vector<std::size_t>> unique_best_involution(
        const std::vector<std::vector<std::uint8_t>>& perms, const std::vector<std::size_t>& Z,
        const Dist& d)
    {
        const std::size_t m = Z.size();
        T best{};
        std::size_t best_at = 0, ties = 0;
        for (std::size_t p = 0; p < perms.size(); ++p) {
            T s{};
            for (std::size_t k = 0; k < m; ++k)
                s += d(Z[k], Z[perms[p][k]]);
            if (p == 0 || s > best) {
                best = s;
                best_at = p;
                ties = 1;
            } else if (s == best) {
                ++ties;
            }
        }
        if (ties != 1)
            return std::nullopt;
        std::vector<std::size_t> j(perms[best_at].begin(), perms[best_at].end());
        for (std::size_t k = 0; k < m; ++k)
            if (j[j[k]] != k)
                return std::nullopt;
        return j;
    }

} // namespace detail

/// Checks Dress's condition for dim_comb(X) <= n: every 2(n+1)-point Z and
/// fixed-point-free involution i admit a fixed-point-free bijection j != i
/// whose matching sum is at least that of i. Subsets are scanned in
/// lexicographic order and the first failure is reported.
inline DressCheckResult dress_check(const FiniteMetricSpace& X, std::size_t n,
                                    std::size_t max_points = 12, std::size_t max_n = 3)
{
    if (n < 1)
        throw std::invalid_argument("dress_check: n must be at least 1");
    if (n > max_n || X.size() > max_points)
        throw std::length_error("dress_check: budget exceeded (|X| = " + std::to_string(X.size()) +
                                ", n = " + std::to_string(n) + ")");
    const std::size_t m = 2 * (n + 1);
    DressCheckResult result;
    if (X.size() < m)
        return result;

    const auto perms = detail::derangement_table(m);
    const auto subsets = detail::combinations(X.size(), m);
    const auto scaled = detail::scaled_integers(X, m);
    std::vector<std::optional<std::vector<std::size_t>>> found(subsets.size());
    parallel_for(subsets.size(), [&](std::size_t s) {
        if (scaled)
            found[s] = detail::unique_best_involution<std::int64_t>(
                perms, subsets[s], [&](std::size_t a, std::size_t b) { return (*scaled)(a, b); });
        else
            found[s] = detail::unique_best_involution<Scalar>(
                perms, subsets[s], [&](std::size_t a, std::size_t b) { return X(a, b); });
    });
    result.subsets_checked = subsets.size();
    for (std::size_t s = 0; s < subsets.size(); ++s)
        if (found[s]) {
            result.holds = false;
            result.Z = subsets[s];
            result.i = Involution(*found[s]);
            break;
        }
    return result;
}

/// sup of dim E(Y) over nonempty Y subset of X. Subsets are visited by
/// decreasing size; a size class is skipped once |Y|/2 cannot beat the best.
inline int comb_dim_exhaustive(const FiniteMetricSpace& X, std::size_t cap = default_face_cap)
{
    if (X.size() > cap)
        throw std::length_error("comb_dim_exhaustive: |X| = " + std::to_string(X.size()) +
                                " exceeds cap " + std::to_string(cap));
    int best = 0;
    for (std::size_t k = X.size(); k >= 2; --k) {
        if (static_cast<int>(k / 2) <= best)
            break;
        for (const auto& Y : detail::combinations(X.size(), k))
            best = std::max(best, tight_span_dim(subspace(X, Y), cap));
    }
    return best;
}

// ---------------------------------------------------------------------------
// mu(h) = sup { S(w) : w in W(h) }

/// Weights on the unordered pairs {a, b}, a < b, of Z in lexicographic order.
struct FlowVector {
    std::size_t points = 0;
    std::vector<Edge> pairs;
    std::vector<Scalar> w;

    static FlowVector zero(std::size_t n)
    {
        FlowVector f;
        f.points = n;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b)
                f.pairs.emplace_back(a, b);
        f.w.assign(f.pairs.size(), Scalar(0));
        return f;
    }

    Scalar at(Edge e) const
    {
        auto it = std::lower_bound(pairs.begin(), pairs.end(), e);
        if (it == pairs.end() || *it != e)
            throw std::out_of_range("FlowVector: not a pair of distinct points");
        return w[static_cast<std::size_t>(it - pairs.begin())];
    }

    Scalar row_sum(std::size_t z) const
    {
        Scalar s = 0;
        for (std::size_t p = 0; p < pairs.size(); ++p)
            if (pairs[p].a == z || pairs[p].b == z)
                s += w[p];
        return s;
    }

    /// S(w) = sum of w({x,y}) d(x,y).
    Scalar value(const FiniteMetricSpace& Z) const
    {
        Scalar s = 0;
        for (std::size_t p = 0; p < pairs.size(); ++p)
            s += w[p] * Z(pairs[p].a, pairs[p].b);
        return s;
    }

    std::vector<std::size_t> support() const
    {
        std::vector<std::size_t> out;
        for (std::size_t p = 0; p < w.size(); ++p)
            if (w[p] != 0)
                out.push_back(p);
        return out;
    }

    /// Sign pattern and row sums of W(h).
    bool in_W(const Involution& i, const MetricForm& h) const
    {
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            const bool paired = i(pairs[p].a) == pairs[p].b;
            if (paired ? w[p] > 0 : w[p] < 0)
                return false;
        }
        for (std::size_t z = 0; z < points; ++z)
            if (row_sum(z) != h[z])
                return false;
        return true;
    }
};

struct MuResult {
    bool finite = true;
    Scalar value = 0;                // meaningful when finite
    std::optional<FlowVector> argmax; // when finite
    std::optional<FlowVector> ray;    // when infinite: w in W(0) with S(w) > 0
};

namespace detail {

    /// mu(h) with the flow restricted to the pairs flagged in `allowed`.
    inline MuResult mu_restricted(const FiniteMetricSpace& Z, const Involution& i,
                                  const MetricForm& h, const std::vector<bool>& allowed)
    {
        const std::size_t n = Z.size();
        FlowVector shape = FlowVector::zero(n);
        std::vector<std::size_t> cols;
        for (std::size_t p = 0; p < shape.pairs.size(); ++p)
            if (allowed[p])
                cols.push_back(p);
        auto sign = [&](std::size_t p) {
            return i(shape.pairs[p].a) == shape.pairs[p].b ? Scalar(-1) : Scalar(1);
        };
        std::vector<std::vector<Scalar>> A(n, std::vector<Scalar>(cols.size(), Scalar(0)));
        std::vector<Scalar> c(cols.size());
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const Edge e = shape.pairs[cols[k]];
            A[e.a][k] = A[e.b][k] = sign(cols[k]);
            c[k] = sign(cols[k]) * Z(e.a, e.b);
        }
        const LpResult lp = maximize(A, h, c);
        if (lp.status == LpStatus::infeasible)
            throw std::logic_error("mu_lp: W(h) is empty");
        auto lift = [&](const std::vector<Scalar>& x) {
            FlowVector f = shape;
            for (std::size_t k = 0; k < cols.size(); ++k)
                f.w[cols[k]] = sign(cols[k]) * x[k];
            return f;
        };
        MuResult r;
        if (lp.status == LpStatus::unbounded) {
            r.finite = false;
            r.ray = lift(lp.ray);
        } else {
            r.value = lp.value;
            r.argmax = lift(lp.x);
        }
        return r;
    }

    inline void require_pairing(const FiniteMetricSpace& Z, const Involution& i)
    {
        if (i.size() != Z.size())
            throw std::invalid_argument("pairing and point set differ in size");
    }

} // namespace detail

/// Exact value of mu(h), or +infinity with an improving ray.
inline MuResult mu_lp(const FiniteMetricSpace& Z, const Involution& i, const MetricForm& h)
{
    detail::require_pairing(Z, i);
    if (h.size() != Z.size())
        throw std::invalid_argument("mu_lp: h has the wrong length");
    return detail::mu_restricted(Z, i, h, std::vector<bool>(Z.size() * (Z.size() - 1) / 2, true));
}

// ---------------------------------------------------------------------------
// dress_witness

/// mu(0) = infinity: j(i(z_k)) = z_{k+1} along an alternating cycle of a
/// minimal-support positive flow, j = i elsewhere. Strictly beats i.
struct StrictBijection {
    std::vector<std::size_t> j;
    FlowVector flow; // the minimal-support flow the cycle was read from
    Scalar i_sum, j_sum;
};

/// mu(0) = 0: f in E(Z) with Z_i in A(f) and an involution j != i assembled
/// from an alternating cycle in A(f). Matches i exactly.
struct EqualityCertificate {
    MetricForm f;
    MetricForm nu; // nu(delta_z) per point
    Involution j;
    Scalar sum;
};

/// mu(0) = 0 and A(f) has no alternating cycle: i strictly beats every other
/// fixed-point-free bijection, so (Z, i) violates the criterion.
struct DressViolation {
    MetricForm f;
    MetricForm nu;
    Scalar i_sum;
};

using DressWitness = std::variant<StrictBijection, EqualityCertificate, DressViolation>;

namespace detail {

    /// First cycle z_0, .., z_l (l >= 1) with pairwise distinct i-pairs and
    /// link(i(z_k), z_{k+1}) for all k, z_{l+1} = z_0. Depth-first in
    /// lexicographic order.
    template <class Link>
    std::optional<std::vector<std::size_t>> alternating_cycle(const Involution& i, Link link)
    {
        const std::size_t n = i.size();
        std::vector<std::size_t> path;
        std::vector<bool> used(n, false);
        std::optional<std::vector<std::size_t>> found;
        auto dfs = [&](auto&& self, std::size_t z) -> void {
            const std::size_t u = i(z);
            for (std::size_t next = 0; next < n && !found; ++next) {
                if (next == u || next == z || !link(u, next))
                    continue;
                if (next == path.front() && path.size() >= 2) {
                    found = path;
                    return;
                }
                if (used[next])
                    continue;
                used[next] = used[i(next)] = true;
                path.push_back(next);
                self(self, next);
                path.pop_back();
                used[next] = used[i(next)] = false;
            }
        };
        for (std::size_t z0 = 0; z0 < n && !found; ++z0) {
            path = {z0};
            used.assign(n, false);
            used[z0] = used[i(z0)] = true;
            dfs(dfs, z0);
        }
        return found;
    }

    /// Shrinks the support of a positive flow in W(0) until no pair can be
    /// dropped.
    inline FlowVector minimal_support(const FiniteMetricSpace& Z, const Involution& i,
                                      FlowVector w)
    {
        const MetricForm zero(Z.size(), Scalar(0));
        for (bool shrunk = true; shrunk;) {
            shrunk = false;
            const auto spt = w.support();
            for (std::size_t drop : spt) {
                std::vector<bool> allowed(w.pairs.size(), false);
                for (std::size_t p : spt)
                    allowed[p] = p != drop;
                auto r = mu_restricted(Z, i, zero, allowed);
                if (!r.finite) {
                    w = std::move(*r.ray);
                    shrunk = true;
                    break;
                }
            }
        }
        return w;
    }

    inline std::vector<std::vector<std::size_t>> fixed_point_free_maps(std::size_t m)
    {
        std::vector<std::vector<std::size_t>> out;
        for (const auto& p : derangement_table(m))
            out.emplace_back(p.begin(), p.end());
        return out;
    }

} // namespace detail

/// Certificate for the matching inequality at (Z, i), following the two
/// branches mu(0) = infinity and mu(0) = 0. Every returned witness has been
/// re-checked in exact arithmetic; a failed check throws std::logic_error.
inline DressWitness dress_witness(const FiniteMetricSpace& Z, const Involution& i)
{
    detail::require_pairing(Z, i);
    const std::size_t n = Z.size();
    if (n < 4)
        throw std::invalid_argument("dress_witness: |Z| must be at least 4");
    const Scalar i_sum = matching_sum(Z, i.image());
    const MetricForm zero(n, Scalar(0));
    auto inconsistent = [](const std::string& what) {
        return std::logic_error("dress_witness: " + what);
    };

    const MuResult mu0 = mu_lp(Z, i, zero);
    if (!mu0.finite) {
        FlowVector w = detail::minimal_support(Z, i, *mu0.ray);
        // follow negative i-pairs and positive links until a point repeats
        std::size_t start = n;
        for (std::size_t z = 0; z < n && start == n; ++z)
            if (w.at(Edge(z, i(z))) < 0)
                start = z;
        if (start == n)
            throw inconsistent("positive flow without a negative pair");
        std::vector<std::size_t> walk{start};
        std::vector<std::size_t> seen_at(n, n);
        seen_at[start] = 0;
        std::vector<std::size_t> cycle;
        while (cycle.empty()) {
            const std::size_t u = i(walk.back());
            std::size_t next = n;
            for (std::size_t z = 0; z < n && next == n; ++z)
                if (z != u && w.at(Edge(u, z)) > 0)
                    next = z;
            if (next == n)
                throw inconsistent("alternating walk is stuck");
            if (seen_at[next] != n)
                cycle.assign(walk.begin() + static_cast<std::ptrdiff_t>(seen_at[next]), walk.end());
            seen_at[next] = walk.size();
            walk.push_back(next);
        }
        StrictBijection s;
        s.j = i.image();
        for (std::size_t k = 0; k < cycle.size(); ++k)
            s.j[i(cycle[k])] = cycle[(k + 1) % cycle.size()];
        s.flow = std::move(w);
        s.i_sum = i_sum;
        s.j_sum = matching_sum(Z, s.j);
        std::vector<std::size_t> sorted = s.j;
        std::sort(sorted.begin(), sorted.end());
        bool bijective = true;
        for (std::size_t z = 0; z < n; ++z)
            bijective = bijective && sorted[z] == z && s.j[z] != z;
        if (!bijective || s.j == i.image() || !(s.j_sum > s.i_sum) ||
            !s.flow.in_W(i, zero) || !(s.flow.value(Z) > 0))
            throw inconsistent("strict certificate failed re-verification");
        return s;
    }
    if (mu0.value != 0)
        throw inconsistent("mu(0) is finite but nonzero");

    // nu(delta_z) = (mu(delta_z) - mu(-delta_z)) / 2
    MetricForm nu(n);
    for (std::size_t z = 0; z < n; ++z) {
        MetricForm h(n, Scalar(0));
        h[z] = 1;
        const MuResult up = mu_lp(Z, i, h);
        h[z] = -1;
        const MuResult down = mu_lp(Z, i, h);
        if (!up.finite || !down.finite)
            throw inconsistent("mu(delta_z) unbounded although mu(0) = 0");
        nu[z] = (up.value - down.value) / 2;
    }
    // raise nu on each i-pair by half its slack so that f(x) + f(y) = d(x, y)
    MetricForm f = nu;
    for (const auto& e : i.pairs()) {
        const Scalar slack = Z(e.a, e.b) - nu[e.a] - nu[e.b];
        if (slack < 0)
            throw inconsistent("nu exceeds d on an i-pair");
        f[e.a] += slack / 2;
        f[e.b] += slack / 2;
    }
    if (!is_extremal(Z, f))
        throw inconsistent("constructed f is not extremal");
    const AdmissibleGraph A = admissible_graph(Z, f);
    for (const auto& e : i.pairs())
        if (!A.contains(e))
            throw inconsistent("Z_i is not contained in A(f)");

    auto cycle = detail::alternating_cycle(i, [&](std::size_t a, std::size_t b) {
        return A.contains(Edge(a, b));
    });
    if (!cycle) {
        DressViolation v{f, nu, i_sum};
        for (const auto& j : detail::fixed_point_free_maps(n))
            if (j != i.image() && matching_sum(Z, j) >= i_sum)
                throw inconsistent("no alternating cycle, yet another bijection matches i");
        return v;
    }
    std::vector<std::size_t> image = i.image();
    for (std::size_t k = 0; k < cycle->size(); ++k) {
        const std::size_t u = i((*cycle)[k]);
        const std::size_t next = (*cycle)[(k + 1) % cycle->size()];
        image[u] = next;
        image[next] = u;
    }
    EqualityCertificate cert{f, nu, Involution(std::move(image)), i_sum};
    if (cert.j == i || matching_sum(Z, cert.j.image()) != i_sum)
        throw inconsistent("equality certificate failed re-verification");
    for (std::size_t z = 0; z < n; ++z)
        if (f[z] < nu[z])
            throw inconsistent("f drops below nu");
    return cert;
}

// ---------------------------------------------------------------------------

/// Largest delta among the candidates such that
/// d(x0,y0) + d(x,y) <= d(x,y0) + d(x0,y) for all x, y in the closed balls
/// B(x0, delta) and B(y0, delta).
inline std::optional<Scalar> local_quadrilateral_delta(const FiniteMetricSpace& X, std::size_t x0,
                                                       std::size_t y0,
                                                       std::vector<Scalar> candidates)
{
    if (x0 >= X.size() || y0 >= X.size())
        throw std::out_of_range("local_quadrilateral_delta: point out of range");
    std::sort(candidates.begin(), candidates.end(), std::greater<>());
    for (const Scalar& delta : candidates) {
        if (delta <= 0)
            continue;
        bool ok = true;
        for (std::size_t x = 0; x < X.size() && ok; ++x) {
            if (X(x0, x) > delta)
                continue;
            for (std::size_t y = 0; y < X.size() && ok; ++y)
                if (X(y0, y) <= delta)
                    ok = X(x0, y0) + X(x, y) <= X(x, y0) + X(x0, y);
        }
        if (ok)
            return delta;
    }
    return std::nullopt;
}

} // namespace bicomb
