#pragma once

// Geodesic bicombings on subsets of l-infinity^d: the linear bicombing,
// bicombings obtained by retraction, defect scans for the axioms (conical,
// convex, discretely convex, consistent, reversible), the cat's-cradle
// refinement and its cascade, and straightness of discretized curves.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "bicomb/metric_core.hpp"
#include "bicomb/parallel.hpp"
#include "bicomb/random.hpp"
#include "bicomb/tight_span.hpp"

namespace bicomb {

/// Point of l-infinity^d, d <= Point::capacity, stored inline.
class Point {
public:
    static constexpr std::size_t capacity = 12;

    Point() = default;
    explicit Point(std::size_t n, double fill = 0.0) : n_(check(n)) { std::fill_n(c_.begin(), n, fill); }
    Point(std::initializer_list<double> v) : n_(check(v.size())) { std::copy(v.begin(), v.end(), c_.begin()); }
    explicit Point(const std::vector<double>& v) : n_(check(v.size())) { std::copy(v.begin(), v.end(), c_.begin()); }

    std::size_t size() const noexcept { return n_; }
    double& operator[](std::size_t i) noexcept { return c_[i]; }
    double operator[](std::size_t i) const noexcept { return c_[i]; }
    const double* begin() const noexcept { return c_.data(); }
    const double* end() const noexcept { return c_.data() + n_; }
    double* begin() noexcept { return c_.data(); }
    double* end() noexcept { return c_.data() + n_; }
    std::vector<double> to_vector() const { return {begin(), end()}; }

    bool operator==(const Point& o) const { return n_ == o.n_ && std::equal(begin(), end(), o.begin()); }
    bool operator<(const Point& o) const
    {
        return std::lexicographical_compare(begin(), end(), o.begin(), o.end());
    }

private:
    static std::size_t check(std::size_t n)
    {
        if (n > capacity)
            throw std::length_error("Point: dimension above " + std::to_string(capacity));
        return n;
    }

    std::array<double, capacity> c_{};
    std::size_t n_ = 0;
};

inline double linf(const Point& p, const Point& q)
{
    if (p.size() != q.size())
        throw std::invalid_argument("linf: dimension mismatch");
    double m = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
        m = std::max(m, std::abs(p[i] - q[i]));
    return m;
}

/// (1-t) x + t y, returning the endpoints exactly at t = 0 and t = 1.
inline Point lerp(const Point& x, const Point& y, double t)
{
    if (t == 0)
        return x;
    if (t == 1)
        return y;
    Point r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        r[i] = (1 - t) * x[i] + t * y[i];
    return r;
}

/// A subset X of l-infinity^d with a retraction from a linearly convex
/// superset onto X.
struct RetractSpace {
    std::string id;
    std::size_t ambient_dim = 0;
    std::function<bool(const Point&, double)> contains;
    std::function<Point(const Point&)> retract;
    std::function<Point(Rng&)> sample;
};

/// The cube [-radius, radius]^d in l-infinity^d, sampled uniformly; the
/// retraction is the identity.
inline std::shared_ptr<const RetractSpace> linf_space(std::size_t d, double radius = 4.0)
{
    if (d < 1)
        throw std::invalid_argument("linf_space: dimension must be at least 1");
    auto s = std::make_shared<RetractSpace>();
    s->id = "l-inf:" + std::to_string(d);
    s->ambient_dim = d;
    s->contains = [d](const Point& p, double) { return p.size() == d; };
    s->retract = [](const Point& p) { return p; };
    s->sample = [d, radius](Rng& rng) {
        Point p(d);
        for (auto& c : p)
            c = rng.uniform(-radius, radius);
        return p;
    };
    return s;
}

/// E(X) inside l-infinity^|X|. The retraction sends g to the limit of the
/// averaging iteration started at the Delta(X)-retract of g.
inline std::shared_ptr<const RetractSpace> tight_span_space(const FiniteMetricSpace& X,
                                                            double tol = 1e-13)
{
    const std::size_t n = X.size();
    if (n > Point::capacity)
        throw std::length_error("tight_span_space: |X| above Point capacity");
    auto d = std::make_shared<SquareMatrix<double>>(X.distances_as_double());
    const double diam = to_double(X.diameter());
    auto s = std::make_shared<RetractSpace>();
    s->id = "tight-span:" + std::to_string(n);
    s->ambient_dim = n;
    s->retract = [d, tol, n](const Point& g) {
        std::vector<double> v = g.to_vector();
        auto f = retract_to_delta<double>(*d, v);
        auto r = retract_to_tight_span<double>(*d, std::move(f), tol, 100000);
        if (!r.converged)
            throw std::runtime_error("tight_span_space: retraction did not converge");
        return Point(r.form);
    };
    s->contains = [d, n](const Point& f, double eps) {
        if (f.size() != n)
            return false;
        for (std::size_t x = 0; x < n; ++x) {
            double best = -1e300;
            for (std::size_t y = 0; y < n; ++y) {
                if (f[x] + f[y] < (*d)(x, y) - eps)
                    return false;
                best = std::max(best, (*d)(x, y) - f[y]);
            }
            if (std::abs(best - f[x]) > eps)
                return false;
        }
        return true;
    };
    auto retract = s->retract;
    s->sample = [retract, n, diam](Rng& rng) {
        Point g(n);
        for (auto& c : g)
            c = rng.uniform(0, diam);
        return retract(g);
    };
    return s;
}

// ---------------------------------------------------------------------------
// Bicombing

/// Fixed-point iteration bookkeeping for one cat's-cradle level.
struct ContractionStats {
    std::size_t fixed_points = 0;
    std::size_t checks = 0;
    std::size_t violations = 0;
    double max_excess = 0; // largest d(next) - (1 - 1/n) d(previous) seen
    std::size_t max_iterations = 0;
};

namespace detail {

    struct BicombingImpl {
        virtual ~BicombingImpl() = default;
        virtual Point eval(const Point& x, const Point& y, double t) const = 0;
    };

    struct FunctionImpl final : BicombingImpl {
        std::function<Point(const Point&, const Point&, double)> fn;
        Point eval(const Point& x, const Point& y, double t) const override { return fn(x, y, t); }
    };

} // namespace detail

class Bicombing {
public:
    Bicombing(std::shared_ptr<const detail::BicombingImpl> impl, std::shared_ptr<const RetractSpace> space,
              std::string provenance, int level, std::size_t discretization)
        : impl_(std::move(impl)),
          space_(std::move(space)),
          provenance_(std::move(provenance)),
          level_(level),
          n_(discretization)
    {
    }

    /// sigma_xy(t); t is clamped to [0, 1].
    Point operator()(const Point& x, const Point& y, double t) const
    {
        if (!(t > 0))
            return x;
        if (t >= 1)
            return y;
        return impl_->eval(x, y, t);
    }

    const std::string& provenance() const noexcept { return provenance_; }
    int level() const noexcept { return level_; }
    /// n such that the bicombing is built to be 1/n-discretely convex.
    std::size_t discretization() const noexcept { return n_; }
    const std::shared_ptr<const RetractSpace>& space() const noexcept { return space_; }
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }
    void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

    /// Contraction statistics of this level and of every level below it.
    std::vector<ContractionStats> contraction_stats() const
    {
        return stats_source_ ? stats_source_() : std::vector<ContractionStats>{};
    }
    void set_stats_source(std::function<std::vector<ContractionStats>()> f) { stats_source_ = std::move(f); }

private:
    std::shared_ptr<const detail::BicombingImpl> impl_;
    std::shared_ptr<const RetractSpace> space_;
    std::string provenance_;
    int level_ = 1;
    std::size_t n_ = 2;
    std::vector<std::string> warnings_;
    std::function<std::vector<ContractionStats>()> stats_source_;
};

/// Wraps an arbitrary evaluator, e.g. a deliberately broken one for tests.
inline Bicombing bicombing_from(std::string name, std::shared_ptr<const RetractSpace> space,
                                std::function<Point(const Point&, const Point&, double)> fn,
                                std::size_t discretization = 2)
{
    auto impl = std::make_shared<detail::FunctionImpl>();
    impl->fn = std::move(fn);
    return Bicombing(std::move(impl), std::move(space), std::move(name), 1, discretization);
}

/// sigma_xy(t) = (1-t) x + t y on l-infinity^d.
inline Bicombing linear_bicombing(std::size_t d)
{
    return bicombing_from("linear", linf_space(d), [](const Point& x, const Point& y, double t) {
        return lerp(x, y, t);
    });
}

/// pi o base on X x X x [0,1]. The retraction is spot-checked for
/// idempotence and the 1-Lipschitz property on seeded samples; failures are
/// attached as warnings.
inline Bicombing retract_bicombing(std::shared_ptr<const RetractSpace> space, const Bicombing& base,
                                   std::size_t spot_checks = 200, std::uint64_t seed = 7)
{
    if (!space)
        throw std::invalid_argument("retract_bicombing: no space");
    auto pi = space->retract;
    Bicombing inner = base;
    auto impl = std::make_shared<detail::FunctionImpl>();
    impl->fn = [pi, inner](const Point& x, const Point& y, double t) { return pi(inner(x, y, t)); };
    Bicombing out(std::move(impl), space, "retract:" + space->id, 1, 2);

    Rng rng(seed);
    double worst_lip = 0, worst_idem = 0;
    for (std::size_t k = 0; k < spot_checks; ++k) {
        Point a = space->sample(rng), b = space->sample(rng), c = space->sample(rng);
        Point u = base(a, b, rng.unit()), v = base(a, c, rng.unit());
        Point pu = pi(u), pv = pi(v);
        worst_lip = std::max(worst_lip, linf(pu, pv) - linf(u, v));
        worst_idem = std::max(worst_idem, linf(pi(pu), pu));
    }
    if (worst_lip > 1e-9)
        out.add_warning("retraction not 1-Lipschitz on samples (excess " + std::to_string(worst_lip) + ")");
    if (worst_idem > 1e-9)
        out.add_warning("retraction not idempotent on samples (gap " + std::to_string(worst_idem) + ")");
    return out;
}

// ---------------------------------------------------------------------------
// Defect scans

/// Explicit seeded sample: `samples` random tuples drawn from the space plus
/// the given anchor tuples, each evaluated on the parameter grid j/grid and
/// at one random parameter.
struct SampleSpec {
    std::size_t samples = 1000;
    std::uint64_t seed = 1;
    std::size_t grid = 8;
    std::vector<std::vector<Point>> anchors;
};

struct Witness {
    std::vector<Point> points;
    std::vector<double> params;
    auto operator<=>(const Witness& o) const
    {
        if (points != o.points)
            return std::lexicographical_compare(points.begin(), points.end(), o.points.begin(), o.points.end())
                       ? std::strong_ordering::less
                       : std::strong_ordering::greater;
        if (params != o.params)
            return params < o.params ? std::strong_ordering::less : std::strong_ordering::greater;
        return std::strong_ordering::equal;
    }
    bool operator==(const Witness&) const = default;
};

template <class T>
struct BasicDefectReport {
    T max_defect{};
    Witness witness;
    std::size_t samples = 0;
};

using DefectReport = BasicDefectReport<double>;

/// d(s_xy(t), s_x'y'(t)) - (1-t) d(x,x') - t d(y,y').
inline double conical_gap(const Bicombing& s, const Point& x, const Point& y, const Point& xp,
                          const Point& yp, double t)
{
    return linf(s(x, y, t), s(xp, yp, t)) - (1 - t) * linf(x, xp) - t * linf(y, yp);
}

/// Midpoint form: D((r+t)/2) - (D(r) + D(t))/2 with D(u) = d(s_xy(u), s_x'y'(u)).
inline double midpoint_gap(const Bicombing& s, const Point& x, const Point& y, const Point& xp,
                           const Point& yp, double r, double t)
{
    auto D = [&](double u) { return linf(s(x, y, u), s(xp, yp, u)); };
    return D((r + t) / 2) - (D(r) + D(t)) / 2;
}

/// d(sigma_pq(lambda), sigma_xy((1-lambda)s + lambda t)), p = sigma_xy(s), q = sigma_xy(t).
inline double consistency_gap(const Bicombing& sg, const Point& x, const Point& y, double s, double t,
                              double lambda)
{
    Point p = sg(x, y, s), q = sg(x, y, t);
    return linf(sg(p, q, lambda), sg(x, y, (1 - lambda) * s + lambda * t));
}

inline double reversibility_gap(const Bicombing& s, const Point& x, const Point& y, double t)
{
    return linf(s(x, y, t), s(y, x, 1 - t));
}

/// | d(s_xy(t), s_xy(u)) - |t-u| d(x,y) |.
inline double geodesic_gap(const Bicombing& s, const Point& x, const Point& y, double t, double u)
{
    return std::abs(linf(s(x, y, t), s(x, y, u)) - std::abs(t - u) * linf(x, y));
}

namespace detail {

    inline std::vector<std::vector<Point>> draw_tuples(const Bicombing& s, const SampleSpec& spec,
                                                       std::size_t arity, Rng& rng)
    {
        if (!s.space())
            throw std::invalid_argument("defect scan: bicombing has no space to sample from");
        std::vector<std::vector<Point>> out;
        for (const auto& a : spec.anchors) {
            if (a.size() < arity)
                throw std::invalid_argument("defect scan: anchor tuple too short");
            out.emplace_back(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(arity));
        }
        for (std::size_t k = 0; k < spec.samples; ++k) {
            std::vector<Point> t;
            for (std::size_t a = 0; a < arity; ++a)
                t.push_back(s.space()->sample(rng));
            out.push_back(std::move(t));
        }
        return out;
    }

    /// Evaluates each job in parallel, then reduces in order: maximum value,
    /// ties broken by the lexicographically smallest witness.
    template <class Job>
    DefectReport scan(std::size_t jobs, Job&& job, bool clamp)
    {
        std::vector<std::pair<double, Witness>> best(jobs);
        parallel_for(jobs, [&](std::size_t k) { best[k] = job(k); });
        DefectReport r;
        r.samples = jobs;
        bool first = true;
        for (auto& [v, w] : best) {
            if (first || v > r.max_defect || (v == r.max_defect && w < r.witness)) {
                r.max_defect = v;
                r.witness = std::move(w);
                first = false;
            }
        }
        if (clamp)
            r.max_defect = std::max(r.max_defect, 0.0);
        return r;
    }

    inline std::vector<double> grid_params(std::size_t grid)
    {
        std::vector<double> ts;
        for (std::size_t j = 0; j <= grid; ++j)
            ts.push_back(static_cast<double>(j) / static_cast<double>(grid));
        return ts;
    }

} // namespace detail

inline DefectReport conical_defect(const Bicombing& s, const SampleSpec& spec)
{
    Rng rng(spec.seed);
    auto tuples = detail::draw_tuples(s, spec, 4, rng);
    std::vector<double> extra;
    for (std::size_t k = 0; k < tuples.size(); ++k)
        extra.push_back(rng.unit());
    const auto ts = detail::grid_params(spec.grid);
    return detail::scan(tuples.size(), [&](std::size_t k) {
        const auto& q = tuples[k];
        std::pair<double, Witness> best{-1e300, {}};
        auto consider = [&](double t) {
            double g = conical_gap(s, q[0], q[1], q[2], q[3], t);
            if (g > best.first)
                best = {g, Witness{q, {t}}};
        };
        for (double t : ts)
            consider(t);
        consider(extra[k]);
        return best;
    }, true);
}

/// Midpoint convexity of t -> d(s_xy(t), s_x'y'(t)) over all grid triples
/// (s-h, s, s+h) and one random triple per tuple.
inline DefectReport convexity_defect(const Bicombing& s, const SampleSpec& spec)
{
    Rng rng(spec.seed);
    auto tuples = detail::draw_tuples(s, spec, 4, rng);
    std::vector<std::pair<double, double>> extra;
    for (std::size_t k = 0; k < tuples.size(); ++k) {
        double a = rng.unit(), b = rng.unit();
        extra.emplace_back(std::min(a, b), std::max(a, b));
    }
    const std::size_t G = std::max<std::size_t>(spec.grid, 2);
    return detail::scan(tuples.size(), [&](std::size_t k) {
        const auto& q = tuples[k];
        std::vector<double> D(G + 1);
        for (std::size_t j = 0; j <= G; ++j)
            D[j] = linf(s(q[0], q[1], double(j) / double(G)), s(q[2], q[3], double(j) / double(G)));
        std::pair<double, Witness> best{-1e300, {}};
        for (std::size_t j = 1; j < G; ++j)
            for (std::size_t h = 1; h <= std::min(j, G - j); ++h) {
                double g = D[j] - (D[j - h] + D[j + h]) / 2;
                if (g > best.first)
                    best = {g, Witness{q, {double(j - h) / double(G), double(j + h) / double(G)}}};
            }
        auto [r, t] = extra[k];
        double g = midpoint_gap(s, q[0], q[1], q[2], q[3], r, t);
        if (g > best.first)
            best = {g, Witness{q, {r, t}}};
        return best;
    }, true);
}

/// Local inequality on [0,1] cap (1/n)Z in midpoint form:
/// D(s) - (D(s - 1/n) + D(s + 1/n))/2.
inline DefectReport discrete_convexity_defect(const Bicombing& s, std::size_t n, const SampleSpec& spec)
{
    if (n < 2)
        throw std::invalid_argument("discrete_convexity_defect: n must be at least 2");
    Rng rng(spec.seed);
    auto tuples = detail::draw_tuples(s, spec, 4, rng);
    return detail::scan(tuples.size(), [&](std::size_t k) {
        const auto& q = tuples[k];
        std::vector<double> D(n + 1);
        for (std::size_t j = 0; j <= n; ++j)
            D[j] = linf(s(q[0], q[1], double(j) / double(n)), s(q[2], q[3], double(j) / double(n)));
        std::pair<double, Witness> best{-1e300, {}};
        for (std::size_t j = 1; j < n; ++j) {
            double g = D[j] - (D[j - 1] + D[j + 1]) / 2;
            if (g > best.first)
                best = {g, Witness{q, {double(j - 1) / double(n), double(j + 1) / double(n)}}};
        }
        return best;
    }, true);
}

inline DefectReport consistency_defect(const Bicombing& sg, const SampleSpec& spec)
{
    Rng rng(spec.seed);
    auto tuples = detail::draw_tuples(sg, spec, 2, rng);
    std::vector<std::array<double, 3>> params;
    for (std::size_t k = 0; k < tuples.size(); ++k) {
        double a = rng.unit(), b = rng.unit();
        params.push_back({std::min(a, b), std::max(a, b), rng.unit()});
    }
    const auto ts = detail::grid_params(spec.grid);
    return detail::scan(tuples.size(), [&](std::size_t k) {
        const auto& q = tuples[k];
        std::pair<double, Witness> best{-1e300, {}};
        auto consider = [&](double s, double t, double l) {
            double g = consistency_gap(sg, q[0], q[1], s, t, l);
            if (g > best.first)
                best = {g, Witness{q, {s, t, l}}};
        };
        consider(params[k][0], params[k][1], params[k][2]);
        for (std::size_t a = 0; a < ts.size(); ++a)
            for (std::size_t b = a + 1; b < ts.size(); ++b)
                consider(ts[a], ts[b], 0.5);
        return best;
    }, true);
}

inline DefectReport reversibility_defect(const Bicombing& s, const SampleSpec& spec)
{
    Rng rng(spec.seed);
    auto tuples = detail::draw_tuples(s, spec, 2, rng);
    std::vector<double> extra;
    for (std::size_t k = 0; k < tuples.size(); ++k)
        extra.push_back(rng.unit());
    const auto ts = detail::grid_params(spec.grid);
    return detail::scan(tuples.size(), [&](std::size_t k) {
        const auto& q = tuples[k];
        std::pair<double, Witness> best{-1e300, {}};
        auto consider = [&](double t) {
            double g = reversibility_gap(s, q[0], q[1], t);
            if (g > best.first)
                best = {g, Witness{q, {t}}};
        };
        for (double t : ts)
            consider(t);
        consider(extra[k]);
        return best;
    }, true);
}

/// Constant-speed geodesic property over grid pairs and one random pair.
inline DefectReport geodesic_defect(const Bicombing& s, const SampleSpec& spec)
{
    Rng rng(spec.seed);
    auto tuples = detail::draw_tuples(s, spec, 2, rng);
    std::vector<std::pair<double, double>> extra;
    for (std::size_t k = 0; k < tuples.size(); ++k)
        extra.emplace_back(rng.unit(), rng.unit());
    const auto ts = detail::grid_params(spec.grid);
    return detail::scan(tuples.size(), [&](std::size_t k) {
        const auto& q = tuples[k];
        std::vector<Point> pts;
        for (double t : ts)
            pts.push_back(s(q[0], q[1], t));
        const double L = linf(q[0], q[1]);
        std::pair<double, Witness> best{-1e300, {}};
        for (std::size_t a = 0; a < ts.size(); ++a)
            for (std::size_t b = a + 1; b < ts.size(); ++b) {
                double g = std::abs(linf(pts[a], pts[b]) - (ts[b] - ts[a]) * L);
                if (g > best.first)
                    best = {g, Witness{q, {ts[a], ts[b]}}};
            }
        double g = geodesic_gap(s, q[0], q[1], extra[k].first, extra[k].second);
        if (g > best.first)
            best = {g, Witness{q, {extra[k].first, extra[k].second}}};
        return best;
    }, true);
}

// ---------------------------------------------------------------------------
// Cat's cradle

struct CatsCradleOptions {
    double fixed_point_tol = 1e-12;
    std::size_t max_iterations = 10000;
    double contraction_slack = 1e-12; // float allowance in the per-iteration check
    std::size_t memo_limit = std::size_t(1) << 18;
    double tol = 1e-9;                 // for the input and output checks
    std::size_t verify_samples = 16;   // 0 skips the checks
    std::uint64_t verify_seed = 99;
};

namespace detail {

    class CatsCradleImpl final : public BicombingImpl {
    public:
        CatsCradleImpl(Bicombing base, std::size_t n, CatsCradleOptions opt)
            : base_(std::move(base)), n_(n), m_(2 * n - 1), opt_(opt)
        {
        }

        Point eval(const Point& x, const Point& y, double t) const override
        {
            auto grid = grid_points(x, y);
            const double tm = t * double(m_);
            std::size_t j = static_cast<std::size_t>(std::floor(tm));
            if (j >= m_)
                j = m_ - 1;
            const double local = tm - double(j);
            if (local <= 0)
                return (*grid)[j];
            if (local >= 1)
                return (*grid)[j + 1];
            return base_((*grid)[j], (*grid)[j + 1], local);
        }

        ContractionStats stats() const
        {
            std::lock_guard lock(stats_mutex_);
            return stats_;
        }

    private:
        using Grid = std::vector<Point>;

        struct Key {
            std::array<std::int64_t, 2 * Point::capacity> c{};
            std::size_t n = 0;
            bool operator==(const Key& o) const { return n == o.n && c == o.c; }
        };
        struct KeyHash {
            std::size_t operator()(const Key& k) const noexcept
            {
                std::uint64_t h = 1469598103934665603ull;
                for (std::size_t i = 0; i < k.n; ++i) {
                    h ^= static_cast<std::uint64_t>(k.c[i]);
                    h *= 1099511628211ull;
                }
                return static_cast<std::size_t>(h);
            }
        };

        static Key key_of(const Point& x, const Point& y)
        {
            Key k;
            k.n = x.size() + y.size();
            for (std::size_t i = 0; i < x.size(); ++i)
                k.c[i] = std::llround(x[i] * 1e12);
            for (std::size_t i = 0; i < y.size(); ++i)
                k.c[x.size() + i] = std::llround(y[i] * 1e12);
            return k;
        }

        std::shared_ptr<const Grid> grid_points(const Point& x, const Point& y) const
        {
            const Key k = key_of(x, y);
            {
                std::shared_lock lock(memo_mutex_);
                if (auto it = memo_.find(k); it != memo_.end())
                    return it->second;
            }
            auto g = std::make_shared<const Grid>(compute(x, y));
            std::unique_lock lock(memo_mutex_);
            if (memo_.size() >= opt_.memo_limit)
                memo_.clear();
            memo_.emplace(k, g);
            return g;
        }

        Grid compute(const Point& x, const Point& y) const
        {
            const double nn = double(n_), mm = double(m_);
            const double c = 1 - 1 / nn;
            ContractionStats local;
            local.fixed_points = 1;
            Point p = x, q = base_(x, y, nn / mm);
            if (!(x == y)) {
                // p_i := sigma(x, q_{i-1}, 1 - 1/n), q_i := sigma(p_i, y, 1/n)
                double dq_prev = -1; // d(q_{i-1}, q_i)
                bool done = false;
                for (std::size_t i = 1; !done; ++i) {
                    if (i > opt_.max_iterations)
                        throw std::runtime_error("cats_cradle: fixed-point iteration did not converge");
                    Point p_next = base_(x, q, 1 - 1 / nn);
                    const double dp = i == 1 ? -1 : linf(p, p_next);
                    if (dq_prev >= 0) {
                        record(local, dp - c * dq_prev);
                    }
                    Point q_next = base_(p_next, y, 1 / nn);
                    const double dq = linf(q, q_next);
                    if (dp >= 0)
                        record(local, dq - c * dp);
                    done = dp >= 0 && dp <= opt_.fixed_point_tol && dq <= opt_.fixed_point_tol;
                    p = std::move(p_next);
                    q = std::move(q_next);
                    dq_prev = i == 1 ? -1 : dq;
                    local.max_iterations = i;
                }
            } else {
                p = q = x;
            }
            {
                std::lock_guard lock(stats_mutex_);
                stats_.fixed_points += local.fixed_points;
                stats_.checks += local.checks;
                stats_.violations += local.violations;
                stats_.max_excess = std::max(stats_.max_excess, local.max_excess);
                stats_.max_iterations = std::max(stats_.max_iterations, local.max_iterations);
            }
            Grid g(m_ + 1);
            for (std::size_t j = 0; j <= m_; ++j) {
                if (j <= n_)
                    g[j] = base_(x, q, double(j) / nn);
                else
                    g[j] = base_(p, y, double(j - (n_ - 1)) / nn);
            }
            g[0] = x;
            g[m_] = y;
            return g;
        }

        void record(ContractionStats& s, double excess) const
        {
            ++s.checks;
            if (s.checks == 1 || excess > s.max_excess)
                s.max_excess = std::max(s.max_excess, excess);
            if (excess > opt_.contraction_slack)
                ++s.violations;
        }

        Bicombing base_;
        std::size_t n_, m_;
        CatsCradleOptions opt_;
        mutable std::shared_mutex memo_mutex_;
        mutable std::unordered_map<Key, std::shared_ptr<const Grid>, KeyHash> memo_;
        mutable std::mutex stats_mutex_;
        mutable ContractionStats stats_;
    };

} // namespace detail

/// One refinement: from a conical, 1/n-discretely convex sigma to a conical,
/// 1/(2n-1)-discretely convex one. Each pair (x, y) runs the p/q fixed-point
/// iteration once (memoized), lays out the 1/m grid, and fills each grid
/// interval with the input bicombing. Input and output are checked on a small
/// seeded sample; an input failure throws, an output failure becomes a warning.
inline Bicombing cats_cradle_step(const Bicombing& sigma, const CatsCradleOptions& opt = {})
{
    const std::size_t n = sigma.discretization();
    if (n < 2)
        throw std::invalid_argument("cats_cradle_step: discretization must be at least 2");
    const std::size_t m = 2 * n - 1;
    SampleSpec check{opt.verify_samples, opt.verify_seed, 4, {}};
    if (opt.verify_samples > 0) {
        auto con = conical_defect(sigma, check);
        auto dis = discrete_convexity_defect(sigma, n, check);
        if (con.max_defect > opt.tol || dis.max_defect > opt.tol)
            throw std::invalid_argument("cats_cradle_step: input not conical and 1/" + std::to_string(n) +
                                        "-discretely convex (defects " + std::to_string(con.max_defect) +
                                        ", " + std::to_string(dis.max_defect) + ")");
    }
    auto impl = std::make_shared<detail::CatsCradleImpl>(sigma, n, opt);
    Bicombing out(impl, sigma.space(), "cats_cradle:" + std::to_string(sigma.level() + 1), sigma.level() + 1, m);
    for (const auto& w : sigma.warnings())
        out.add_warning(w);
    auto below = sigma;
    out.set_stats_source([impl, below] {
        auto v = below.contraction_stats();
        v.push_back(impl->stats());
        return v;
    });
    if (opt.verify_samples > 0) {
        auto con = conical_defect(out, check);
        auto dis = discrete_convexity_defect(out, m, check);
        if (con.max_defect > opt.tol)
            out.add_warning("level " + std::to_string(out.level()) + " conical defect " + std::to_string(con.max_defect));
        if (dis.max_defect > opt.tol)
            out.add_warning("level " + std::to_string(out.level()) + " discrete convexity defect " +
                            std::to_string(dis.max_defect));
    }
    return out;
}

struct LevelReport {
    int level = 1;
    std::size_t n = 2;
    DefectReport conical;
    DefectReport discrete;  // at 1/n
    DefectReport convexity; // dyadic parameter grid
    std::optional<double> distance_to_previous;
};

struct ConvexifyResult {
    Bicombing sigma;
    std::vector<LevelReport> levels;
};

/// Uniform distance between two bicombings on sampled (x, y, t).
inline DefectReport uniform_distance(const Bicombing& a, const Bicombing& b, const SampleSpec& spec)
{
    Rng rng(spec.seed);
    auto tuples = detail::draw_tuples(a, spec, 2, rng);
    const auto ts = detail::grid_params(spec.grid);
    return detail::scan(tuples.size(), [&](std::size_t k) {
        const auto& q = tuples[k];
        std::pair<double, Witness> best{-1e300, {}};
        for (double t : ts) {
            double g = linf(a(q[0], q[1], t), b(q[0], q[1], t));
            if (g > best.first)
                best = {g, Witness{q, {t}}};
        }
        return best;
    }, true);
}

/// The cascade sigma^1 = sigma, sigma^{k+1} = cats_cradle_step(sigma^k), so
/// that sigma^k is 1/n_k-discretely convex with n_k = 2^(k-1) + 1. Returns
/// sigma^levels. With report.samples > 0 every level is measured on that
/// sample: conical and discrete defects, convexity on the dyadic grid, and
/// the uniform distance to the level below.
inline ConvexifyResult convexify(const Bicombing& sigma, int levels, const CatsCradleOptions& opt = {},
                                 SampleSpec report = {0, 1, 8, {}})
{
    if (levels < 1)
        throw std::invalid_argument("convexify: levels must be at least 1");
    if (sigma.discretization() != 2)
        throw std::invalid_argument("convexify: the cascade starts from a conical (1/2) bicombing");
    auto measure = [&](const Bicombing& s, const Bicombing* prev) {
        LevelReport r;
        r.level = s.level();
        r.n = s.discretization();
        if (report.samples == 0 && report.anchors.empty())
            return r;
        r.conical = conical_defect(s, report);
        r.discrete = discrete_convexity_defect(s, r.n, report);
        r.convexity = convexity_defect(s, report);
        if (prev)
            r.distance_to_previous = uniform_distance(*prev, s, report).max_defect;
        return r;
    };
    ConvexifyResult out{sigma, {}};
    out.levels.push_back(measure(sigma, nullptr));
    for (int k = 2; k <= levels; ++k) {
        Bicombing next = cats_cradle_step(out.sigma, opt);
        out.levels.push_back(measure(next, &out.sigma));
        out.sigma = std::move(next);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Straightness

/// Max over witnesses z and consecutive triples of the sampled curve of
/// d(z, g_k) - (d(z, g_{k-1}) + d(z, g_{k+1}))/2, clamped at 0. T may be
/// exact (Scalar) or double; the witness records double copies.
template <class T>
BasicDefectReport<T> straightness_defect(const std::vector<std::vector<T>>& curve,
                                         const std::vector<std::vector<T>>& witnesses)
{
    if (curve.size() < 3)
        throw std::invalid_argument("straightness_defect: need at least 3 curve samples");
    auto dist = [](const std::vector<T>& a, const std::vector<T>& b) {
        if (a.size() != b.size())
            throw std::invalid_argument("straightness_defect: dimension mismatch");
        T m = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            T d = a[i] - b[i];
            if (d < 0)
                d = -d;
            if (d > m)
                m = d;
        }
        return m;
    };
    auto as_point = [](const std::vector<T>& v) {
        std::vector<double> out;
        for (const auto& c : v)
            out.push_back(to_double(c));
        return out.size() <= Point::capacity ? Point(out) : Point();
    };
    BasicDefectReport<T> r;
    r.samples = witnesses.size() * (curve.size() - 2);
    bool first = true;
    std::size_t best_z = 0, best_k = 0;
    for (std::size_t z = 0; z < witnesses.size(); ++z) {
        std::vector<T> D;
        for (const auto& g : curve)
            D.push_back(dist(witnesses[z], g));
        for (std::size_t k = 1; k + 1 < curve.size(); ++k) {
            T g = D[k] - (D[k - 1] + D[k + 1]) / 2;
            if (first || g > r.max_defect) {
                r.max_defect = g;
                best_z = z;
                best_k = k;
                first = false;
            }
        }
    }
    if (r.max_defect < 0)
        r.max_defect = 0;
    if (!first) {
        const double step = 1.0 / double(curve.size() - 1);
        r.witness.points = {as_point(witnesses[best_z])};
        r.witness.params = {double(best_k) * step, double(best_z)};
    }
    return r;
}

struct UniquenessProbe {
    bool refused = false; // an input curve is not straight within tol
    DefectReport alpha_straightness, beta_straightness;
    DefectReport distance_convexity; // midpoint convexity of s -> d(alpha(s), beta(s))
    double max_pointwise_distance = 0;
};

/// Checks that both curves are straight against the witnesses, then measures
/// the convexity of their mutual distance along the common parameter grid.
inline UniquenessProbe straight_uniqueness_probe(const std::vector<std::vector<double>>& alpha,
                                                 const std::vector<std::vector<double>>& beta,
                                                 const std::vector<std::vector<double>>& witnesses,
                                                 double tol = 1e-9)
{
    if (alpha.size() != beta.size() || alpha.size() < 3)
        throw std::invalid_argument("straight_uniqueness_probe: curves need a common grid of >= 3 samples");
    UniquenessProbe r;
    r.alpha_straightness = straightness_defect(alpha, witnesses);
    r.beta_straightness = straightness_defect(beta, witnesses);
    if (r.alpha_straightness.max_defect > tol || r.beta_straightness.max_defect > tol) {
        r.refused = true;
        return r;
    }
    std::vector<double> D;
    for (std::size_t k = 0; k < alpha.size(); ++k) {
        double m = 0;
        for (std::size_t i = 0; i < alpha[k].size(); ++i)
            m = std::max(m, std::abs(alpha[k][i] - beta[k][i]));
        D.push_back(m);
        r.max_pointwise_distance = std::max(r.max_pointwise_distance, m);
    }
    r.distance_convexity.samples = D.size() - 2;
    r.distance_convexity.max_defect = 0;
    for (std::size_t k = 1; k + 1 < D.size(); ++k) {
        double g = D[k] - (D[k - 1] + D[k + 1]) / 2;
        if (g > r.distance_convexity.max_defect) {
            r.distance_convexity.max_defect = g;
            r.distance_convexity.witness.params = {double(k) / double(D.size() - 1)};
        }
    }
    return r;
}

/// Samples of s -> sigma_xy(s) at s = k/(count-1).
inline std::vector<std::vector<double>> sample_curve(const Bicombing& s, const Point& x, const Point& y,
                                                     std::size_t count)
{
    std::vector<std::vector<double>> out;
    for (std::size_t k = 0; k < count; ++k)
        out.push_back(s(x, y, double(k) / double(count - 1)).to_vector());
    return out;
}

} // namespace bicomb
