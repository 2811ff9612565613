#pragma once

// Generalized rays, radial retractions, the metric D_o on X cup boundary,
// cone neighborhoods and the contraction of the closure to a basepoint.
// Exact piecewise-linear profiles for l-infinity^d with the linear
// bicombing; sampled profiles for finite rays of any other bicombing.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bicomb/bicombing.hpp"
#include "bicomb/random.hpp"

namespace bicomb {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

/// A point of X (interior) or a boundary class. For l-infinity^d with the
/// linear bicombing a class is a direction of sup-norm 1.
class ClosurePoint {
public:
    static ClosurePoint interior(Point p) { return ClosurePoint(false, std::move(p)); }

    /// Normalized to sup-norm 1; throws on the zero vector.
    static ClosurePoint boundary(Point direction)
    {
        double n = 0;
        for (double c : direction)
            n = std::max(n, std::abs(c));
        if (!(n > 0) || !std::isfinite(n))
            throw std::invalid_argument("boundary direction must be a nonzero finite vector");
        for (double& c : direction)
            c /= n;
        return ClosurePoint(true, std::move(direction));
    }

    bool is_boundary() const noexcept { return boundary_; }
    /// The point, or the unit direction for a boundary class.
    const Point& point() const noexcept { return p_; }

    bool operator==(const ClosurePoint&) const = default;

private:
    ClosurePoint(bool b, Point p) : boundary_(b), p_(std::move(p)) {}
    bool boundary_;
    Point p_;
};

/// rho_ox for a point x (unit speed until d(o,x), then constant) or the
/// sigma-ray rho_{o xbar} for a boundary class. Without a bicombing the
/// linear one of l-infinity^d is used in closed form.
class GeneralizedRay {
public:
    GeneralizedRay(Point o, ClosurePoint target, std::optional<Bicombing> sigma = std::nullopt)
        : o_(std::move(o)), target_(std::move(target)), sigma_(std::move(sigma))
    {
        if (o_.size() != target_.point().size())
            throw std::invalid_argument("ray: basepoint and target differ in dimension");
        if (target_.is_boundary() && sigma_)
            throw std::invalid_argument("ray: boundary rays are only available in closed form");
        range_ = target_.is_boundary() ? infinity : linf(o_, target_.point());
    }

    Point operator()(double t) const
    {
        if (t < 0)
            throw std::invalid_argument("ray: negative parameter");
        if (target_.is_boundary()) {
            Point p = o_;
            for (std::size_t i = 0; i < p.size(); ++i)
                p[i] += t * target_.point()[i];
            return p;
        }
        if (t >= range_)
            return target_.point();
        const double s = t / range_;
        return sigma_ ? (*sigma_)(o_, target_.point(), s) : lerp(o_, target_.point(), s);
    }

    const Point& basepoint() const noexcept { return o_; }
    const ClosurePoint& target() const noexcept { return target_; }
    /// d(o, x), or infinity for a boundary target.
    double range() const noexcept { return range_; }
    bool is_linear() const noexcept { return !sigma_; }
    const std::optional<Bicombing>& bicombing() const noexcept { return sigma_; }

private:
    Point o_;
    ClosurePoint target_;
    std::optional<Bicombing> sigma_;
    double range_ = 0;
};

inline GeneralizedRay generalized_ray(const Point& o, const Point& x, std::optional<Bicombing> sigma = std::nullopt)
{
    return GeneralizedRay(o, ClosurePoint::interior(x), std::move(sigma));
}

inline GeneralizedRay ray_to_boundary(const Point& o, const Point& direction)
{
    return GeneralizedRay(o, ClosurePoint::boundary(direction));
}

inline GeneralizedRay ray_from_basepoint(const Point& o, const ClosurePoint& x,
                                         std::optional<Bicombing> sigma = std::nullopt)
{
    return GeneralizedRay(o, x, x.is_boundary() ? std::nullopt : std::move(sigma));
}

/// phi_r(x) = rho_ox(r).
inline Point radial_retraction(const Point& o, double r, const Point& x, std::optional<Bicombing> sigma = std::nullopt)
{
    if (r < 0)
        throw std::invalid_argument("radial_retraction: r must be non-negative");
    return generalized_ray(o, x, std::move(sigma))(r);
}

// ---------------------------------------------------------------------------
// Finite-horizon rays

/// Horizon bound 2 t d(o,p) / (T - d(o,p)) for points beyond T on a sigma-ray
/// from p, valid when T > 2 d(o,p) and t <= T - 2 d(o,p).
inline double horizon_error_bound(double d_op, double T, double t)
{
    if (!(T > 2 * d_op) || t > T - 2 * d_op)
        return infinity;
    return 2 * t * d_op / (T - d_op);
}

/// Smallest horizon T for which the bound at parameter t is <= accuracy.
inline double required_horizon(double d_op, double t, double accuracy)
{
    if (!(accuracy > 0))
        throw std::invalid_argument("required_horizon: accuracy must be positive");
    return std::max({d_op + 2 * t * d_op / accuracy, t + 2 * d_op, 2 * d_op}) * (1 + 1e-12) + 1e-300;
}

struct FiniteHorizonRay {
    GeneralizedRay ray; // rho_{o xi(T)}
    double horizon = 0;
    double d_op = 0;
    double bound(double t) const { return horizon_error_bound(d_op, horizon, t); }
};

class HorizonTooSmall : public std::runtime_error {
public:
    HorizonTooSmall(double given, double needed)
        : std::runtime_error("horizon " + std::to_string(given) + " too small for the requested accuracy; need T >= " +
                             std::to_string(needed)),
          required(needed)
    {
    }
    double required;
};

/// Approximates rho_{o xbar}, where xbar is the class of the sigma-ray xi,
/// by rho_{o xi(T)}. Throws HorizonTooSmall when the error bound at t_max
/// exceeds accuracy.
inline FiniteHorizonRay approximate_boundary_ray(const Point& o, const GeneralizedRay& xi, double T, double t_max,
                                                 double accuracy, std::optional<Bicombing> sigma = std::nullopt)
{
    if (!xi.target().is_boundary())
        throw std::invalid_argument("approximate_boundary_ray: xi must be a ray to the boundary");
    const double d_op = linf(o, xi.basepoint());
    const double need = required_horizon(d_op, t_max, accuracy);
    if (T < need)
        throw HorizonTooSmall(T, need);
    return {generalized_ray(o, xi(T), std::move(sigma)), T, d_op};
}

// ---------------------------------------------------------------------------
// Distance profiles and D_o

/// s -> d(rho1(s), rho2(s)) as affine pieces slope*s + intercept on
/// [start, end); the last piece may extend to infinity.
struct DistanceProfile {
    struct Piece {
        double start = 0, end = infinity, slope = 0, intercept = 0;
    };
    std::vector<Piece> pieces;
    bool exact = true;
    double mesh = 0; // sampling step for non-exact profiles

    double operator()(double s) const
    {
        for (const auto& p : pieces)
            if (s < p.end)
                return p.slope * s + p.intercept;
        const auto& last = pieces.back();
        return last.slope * s + last.intercept;
    }

    /// Integral of the profile against e^{-s} over [0, infinity), piece by
    /// piece with the antiderivative -(a s + a + b) e^{-s}.
    double integrate_exp() const
    {
        double total = 0;
        for (const auto& p : pieces) {
            auto F = [&](double s) {
                if (s == infinity)
                    return 0.0;
                return -(p.slope * s + p.slope + p.intercept) * std::exp(-s);
            };
            total += F(p.end) - F(p.start);
        }
        return total;
    }

    /// Largest midpoint-convexity violation across breakpoints (0 if convex).
    double convexity_defect() const
    {
        double worst = 0;
        for (std::size_t k = 0; k + 1 < pieces.size(); ++k)
            worst = std::max(worst, pieces[k].slope - pieces[k + 1].slope);
        return worst;
    }
};

namespace detail {

    struct Affine {
        double slope, intercept;
        double at(double s) const { return slope * s + intercept; }
    };

    /// Upper envelope of lines on [a, b], b possibly infinite.
    inline std::vector<DistanceProfile::Piece> upper_envelope(const std::vector<Affine>& lines, double a, double b)
    {
        std::vector<DistanceProfile::Piece> out;
        auto better_at = [&](std::size_t i, std::size_t j, double s) {
            const double vi = lines[i].at(s), vj = lines[j].at(s);
            return vi > vj || (vi == vj && lines[i].slope > lines[j].slope);
        };
        std::size_t cur = 0;
        for (std::size_t i = 1; i < lines.size(); ++i)
            if (better_at(i, cur, a))
                cur = i;
        double s = a;
        for (;;) {
            std::optional<std::size_t> next;
            double when = b;
            for (std::size_t j = 0; j < lines.size(); ++j) {
                if (lines[j].slope <= lines[cur].slope)
                    continue;
                double c = (lines[cur].intercept - lines[j].intercept) / (lines[j].slope - lines[cur].slope);
                if (c <= s)
                    c = s;
                if (c < when || (c == when && next && lines[j].slope > lines[*next].slope)) {
                    when = c;
                    next = j;
                }
            }
            if (!next || when >= b) {
                out.push_back({s, b, lines[cur].slope, lines[cur].intercept});
                return out;
            }
            if (when > s)
                out.push_back({s, when, lines[cur].slope, lines[cur].intercept});
            s = when;
            cur = *next;
        }
    }

    /// Closed-form linear ray on [a, b): rho(s) = c + s w.
    inline void affine_form(const GeneralizedRay& r, double a, Point& c, Point& w)
    {
        const Point& o = r.basepoint();
        c = o;
        w = Point(o.size());
        if (r.target().is_boundary()) {
            w = r.target().point();
        } else if (a < r.range()) {
            for (std::size_t i = 0; i < o.size(); ++i)
                w[i] = (r.target().point()[i] - o[i]) / r.range();
        } else {
            c = r.target().point();
        }
    }

} // namespace detail

struct ProfileOptions {
    double mesh = 1.0 / 1024; // for sampled profiles
};

inline DistanceProfile distance_profile(const GeneralizedRay& r1, const GeneralizedRay& r2, ProfileOptions opt = {})
{
    if (r1.basepoint().size() != r2.basepoint().size())
        throw std::invalid_argument("distance_profile: rays live in different dimensions");
    DistanceProfile prof;
    if (r1.is_linear() && r2.is_linear()) {
        std::vector<double> cuts{0};
        for (double R : {r1.range(), r2.range()})
            if (R > 0 && R < infinity)
                cuts.push_back(R);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        cuts.push_back(infinity);
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            Point c1, w1, c2, w2;
            detail::affine_form(r1, cuts[k], c1, w1);
            detail::affine_form(r2, cuts[k], c2, w2);
            std::vector<detail::Affine> lines;
            for (std::size_t i = 0; i < c1.size(); ++i) {
                detail::Affine l{w1[i] - w2[i], c1[i] - c2[i]};
                lines.push_back(l);
                lines.push_back({-l.slope, -l.intercept});
            }
            for (auto& p : detail::upper_envelope(lines, cuts[k], cuts[k + 1]))
                prof.pieces.push_back(p);
        }
        return prof;
    }
    if (r1.range() == infinity || r2.range() == infinity)
        throw std::invalid_argument("distance_profile: boundary rays need the closed-form linear bicombing");
    prof.exact = false;
    prof.mesh = opt.mesh;
    const double S = std::max(r1.range(), r2.range());
    const std::size_t steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(S / opt.mesh)));
    double prev_s = 0, prev_v = linf(r1(0), r2(0));
    for (std::size_t k = 1; k <= steps; ++k) {
        const double s = k == steps ? S : double(k) * opt.mesh;
        const double v = linf(r1(s), r2(s));
        const double slope = (v - prev_v) / (s - prev_s);
        prof.pieces.push_back({prev_s, s, slope, prev_v - slope * prev_s});
        prev_s = s;
        prev_v = v;
    }
    if (S == 0)
        prof.pieces.clear();
    prof.pieces.push_back({S, infinity, 0, linf(r1.target().point(), r2.target().point())});
    return prof;
}

/// D_o(xbar, ybar) = integral of d(rho_{o xbar}(s), rho_{o ybar}(s)) e^{-s} ds.
inline double d_o_metric(const ClosurePoint& x, const ClosurePoint& y, const Point& o,
                         std::optional<Bicombing> sigma = std::nullopt, ProfileOptions opt = {})
{
    return distance_profile(ray_from_basepoint(o, x, sigma), ray_from_basepoint(o, y, sigma), opt).integrate_exp();
}

/// psi_lambda(xbar) = rho_{o xbar}(-log(1 - lambda)) for lambda < 1, and
/// xbar itself for lambda = 1.
inline ClosurePoint psi_retraction(double lambda, const ClosurePoint& x, const Point& o,
                                   std::optional<Bicombing> sigma = std::nullopt)
{
    if (!(lambda >= 0 && lambda <= 1))
        throw std::invalid_argument("psi_retraction: lambda must lie in [0, 1]");
    if (lambda == 1)
        return x;
    return ClosurePoint::interior(ray_from_basepoint(o, x, std::move(sigma))(-std::log1p(-lambda)));
}

/// Membership of ybar in U_o(xbar, t, eps) = {d(rho_{o xbar}(t), rho_{o ybar}(t)) < eps}.
inline bool cone_neighborhood_contains(const Point& o, const ClosurePoint& x, double t, double eps,
                                       const ClosurePoint& y, std::optional<Bicombing> sigma = std::nullopt)
{
    if (!(t > 0) || !(eps > 0))
        throw std::invalid_argument("cone_neighborhood_contains: t and eps must be positive");
    return linf(ray_from_basepoint(o, x, sigma)(t), ray_from_basepoint(o, y, sigma)(t)) < eps;
}

/// (xbar, lambda) -> psi_{1 - lambda}(xbar): identity at 0, constant o at 1.
inline ClosurePoint contraction(const ClosurePoint& x, double lambda, const Point& o,
                                std::optional<Bicombing> sigma = std::nullopt)
{
    if (!(lambda >= 0 && lambda <= 1))
        throw std::invalid_argument("contraction: lambda must lie in [0, 1]");
    return psi_retraction(1 - lambda, x, o, std::move(sigma));
}

// ---------------------------------------------------------------------------
// Seeded checks of the inequalities in l-infinity^d

struct InequalityReport {
    std::string name;
    std::size_t samples = 0;
    std::size_t violations = 0; // excess above tol
    double max_excess = -infinity; // max of lhs - rhs
    std::vector<Point> witness;
    std::vector<double> witness_params;
};

namespace detail {

    inline Point random_point(Rng& rng, std::size_t d, double scale)
    {
        Point p(d);
        for (auto& c : p)
            c = rng.uniform(-scale, scale);
        return p;
    }

    inline ClosurePoint random_closure_point(Rng& rng, std::size_t d, double scale)
    {
        if (rng.below(3) == 0)
            return ClosurePoint::boundary(random_point(rng, d, 1.0));
        return ClosurePoint::interior(random_point(rng, d, scale));
    }

    inline void record(InequalityReport& r, double excess, double tol, std::vector<Point> pts, std::vector<double> params)
    {
        ++r.samples;
        if (excess > tol)
            ++r.violations;
        if (excess > r.max_excess) {
            r.max_excess = excess;
            r.witness = std::move(pts);
            r.witness_params = std::move(params);
        }
    }

    inline std::vector<Point> closure_points(std::initializer_list<ClosurePoint> ps)
    {
        std::vector<Point> out;
        for (const auto& p : ps)
            out.push_back(p.point());
        return out;
    }

} // namespace detail

/// Which inequality to sample. Dimensions are drawn from 1..max_dim.
enum class BoundaryCheck {
    d_o_formula, // D_o(x, phi_r x) = e^{-r} - e^{-R}
    phi_r,       // d(phi_r x, phi_r y) <= 2r/d(o,x) d(x,y)
    rho_r_t,     // d(rho_x(r), rho_y(r)) <= 2 d(rho_x(t), rho_y(t)), r <= t
    psi,         // psi_lambda 2-Lipschitz for D_o, and D_o(psi_l x, psi_m x) <= |l - m|
    sandwich,    // (a/2) e^{-t} <= D_o <= 2a(1 - e^{-t}) + 2(t+1) e^{-t}
    t_T,         // horizon bound for points beyond T on a ray from p
    cone,        // ball case of U_o and basepoint change
    d_o_metric,  // symmetry and triangle inequality of D_o
};

inline std::string_view to_string(BoundaryCheck c)
{
    switch (c) {
    case BoundaryCheck::d_o_formula: return "d-o-formula";
    case BoundaryCheck::phi_r: return "phi-r";
    case BoundaryCheck::rho_r_t: return "rho-r-t";
    case BoundaryCheck::psi: return "psi";
    case BoundaryCheck::sandwich: return "sandwich";
    case BoundaryCheck::t_T: return "t-T";
    case BoundaryCheck::cone: return "cone";
    case BoundaryCheck::d_o_metric: return "d-o-metric";
    }
    return "?";
}

inline std::optional<BoundaryCheck> boundary_check_from_string(std::string_view s)
{
    for (auto c : {BoundaryCheck::d_o_formula, BoundaryCheck::phi_r, BoundaryCheck::rho_r_t, BoundaryCheck::psi,
                   BoundaryCheck::sandwich, BoundaryCheck::t_T, BoundaryCheck::cone, BoundaryCheck::d_o_metric})
        if (to_string(c) == s)
            return c;
    return std::nullopt;
}

inline InequalityReport run_boundary_check(BoundaryCheck which, std::size_t samples, std::uint64_t seed,
                                           double tol = 1e-9, std::size_t max_dim = 4, double scale = 4.0)
{
    InequalityReport r;
    r.name = std::string(to_string(which));
    Rng rng(seed);
    for (std::size_t k = 0; k < samples; ++k) {
        const std::size_t d = 1 + rng.below(max_dim);
        const Point o = detail::random_point(rng, d, scale);
        switch (which) {
        case BoundaryCheck::d_o_formula: {
            const Point x = detail::random_point(rng, d, scale);
            const double R = linf(o, x);
            const double rr = rng.uniform(0, R);
            const Point y = radial_retraction(o, rr, x);
            const double got = d_o_metric(ClosurePoint::interior(x), ClosurePoint::interior(y), o);
            detail::record(r, std::abs(got - (std::exp(-rr) - std::exp(-R))), tol, {o, x}, {rr});
            break;
        }
        case BoundaryCheck::phi_r: {
            Point x = detail::random_point(rng, d, scale), y = detail::random_point(rng, d, scale);
            if (linf(o, x) < linf(o, y))
                std::swap(x, y);
            const double rr = rng.uniform(0, linf(o, x));
            if (!(linf(o, x) > rr))
                break;
            const double lhs = linf(radial_retraction(o, rr, x), radial_retraction(o, rr, y));
            const double rhs = 2 * rr / linf(o, x) * linf(x, y);
            detail::record(r, lhs - rhs, tol, {o, x, y}, {rr});
            break;
        }
        case BoundaryCheck::rho_r_t: {
            const auto x = detail::random_closure_point(rng, d, scale), y = detail::random_closure_point(rng, d, scale);
            const double t = rng.uniform(0, 3 * scale), rr = rng.uniform(0, t);
            const auto rx = ray_from_basepoint(o, x), ry = ray_from_basepoint(o, y);
            detail::record(r, linf(rx(rr), ry(rr)) - 2 * linf(rx(t), ry(t)), tol, detail::closure_points({x, y}),
                           {rr, t});
            break;
        }
        case BoundaryCheck::psi: {
            const auto x = detail::random_closure_point(rng, d, scale), y = detail::random_closure_point(rng, d, scale);
            const double l = rng.unit(), m = rng.unit();
            const double lhs1 = d_o_metric(psi_retraction(l, x, o), psi_retraction(l, y, o), o);
            detail::record(r, lhs1 - 2 * d_o_metric(x, y, o), tol, detail::closure_points({x, y}), {l});
            const double lhs2 = d_o_metric(psi_retraction(l, x, o), psi_retraction(m, x, o), o);
            double excess = lhs2 - std::abs(l - m);
            if (d_o_metric(ClosurePoint::interior(o), x, o) >= std::max(l, m))
                excess = std::abs(lhs2 - std::abs(l - m)); // equality case
            detail::record(r, excess, tol, detail::closure_points({x}), {l, m});
            break;
        }
        case BoundaryCheck::sandwich: {
            const auto x = detail::random_closure_point(rng, d, scale), y = detail::random_closure_point(rng, d, scale);
            const double t = rng.uniform(0, 3 * scale);
            const double a = linf(ray_from_basepoint(o, x)(t), ray_from_basepoint(o, y)(t));
            const double D = d_o_metric(x, y, o);
            const double lower = a / 2 * std::exp(-t);
            const double upper = 2 * a * (1 - std::exp(-t)) + 2 * (t + 1) * std::exp(-t);
            detail::record(r, std::max(lower - D, D - upper), tol, detail::closure_points({x, y}), {t});
            break;
        }
        case BoundaryCheck::t_T: {
            const Point p = detail::random_point(rng, d, scale);
            const auto xi = ray_to_boundary(p, detail::random_point(rng, d, 1.0));
            const double dop = linf(o, p);
            const double T = 2 * dop + rng.uniform(1e-3, 4 * scale);
            const Point x = xi(T + rng.uniform(0, 2 * scale)), y = xi(T + rng.uniform(0, 8 * scale));
            const double t = rng.uniform(0, T - 2 * dop);
            const double lhs = linf(generalized_ray(o, x)(t), generalized_ray(o, y)(t));
            detail::record(r, lhs - horizon_error_bound(dop, T, t), tol, {o, p, x, y}, {T, t});
            break;
        }
        case BoundaryCheck::cone: {
            // U_o(x, t, eps) is the open ball U(x, eps) once t >= d(o,x) + eps
            const Point x = detail::random_point(rng, d, scale);
            const double eps = rng.uniform(0.01, 1.0);
            const double t = linf(o, x) + eps + rng.uniform(0, scale);
            const auto y = detail::random_closure_point(rng, d, scale);
            Point yp = y.point();
            if (!y.is_boundary() && rng.below(2) == 0)
                for (std::size_t i = 0; i < d; ++i)
                    yp[i] = x[i] + rng.uniform(-1.5 * eps, 1.5 * eps);
            const auto Y = y.is_boundary() ? y : ClosurePoint::interior(yp);
            const bool in_u = cone_neighborhood_contains(o, ClosurePoint::interior(x), t, eps, Y);
            const bool in_ball = !Y.is_boundary() && linf(x, Y.point()) < eps;
            detail::record(r, in_u == in_ball ? -1.0 : 1.0, tol, {o, x, Y.point()}, {t, eps});
            break;
        }
        case BoundaryCheck::d_o_metric: {
            const auto x = detail::random_closure_point(rng, d, scale), y = detail::random_closure_point(rng, d, scale),
                       z = detail::random_closure_point(rng, d, scale);
            const double xy = d_o_metric(x, y, o), yx = d_o_metric(y, x, o);
            const double xz = d_o_metric(x, z, o), zy = d_o_metric(z, y, o);
            detail::record(r, std::max(std::abs(xy - yx), xy - xz - zy), tol, detail::closure_points({x, y, z}), {});
            break;
        }
        }
    }
    return r;
}

} // namespace bicomb
