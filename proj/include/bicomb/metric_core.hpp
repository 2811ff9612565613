#pragma once

// Exact finite metric spaces and the l-infinity ambient geometry shared by the
// rest of the library.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <ranges>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include <boost/multiprecision/gmp.hpp>

namespace bicomb {

/// Arbitrary precision rational. All distances of finite spaces live here.
using Scalar = boost::multiprecision::mpq_rational;

/// A point of l-infinity^d with exact coordinates.
using LinfPoint = std::vector<Scalar>;

inline Scalar parse_scalar(std::string_view text)
{
    std::string s(text);
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }),
            s.end());
    if (s.empty())
        throw std::invalid_argument("empty rational literal");
    const auto slash = s.find('/');
    auto is_integer = [](std::string_view v) {
        if (v.empty())
            return false;
        std::size_t k = (v[0] == '-' || v[0] == '+') ? 1 : 0;
        if (k == v.size())
            return false;
        return std::all_of(v.begin() + static_cast<std::ptrdiff_t>(k), v.end(),
                           [](unsigned char c) { return std::isdigit(c); });
    };
    if (slash == std::string::npos) {
        if (!is_integer(s))
            throw std::invalid_argument("malformed rational literal '" + s + "'");
        return Scalar(boost::multiprecision::mpz_int(s[0] == '+' ? s.substr(1) : s));
    }
    const std::string num = s.substr(0, slash), den = s.substr(slash + 1);
    if (!is_integer(num) || !is_integer(den) || den[0] == '-' || den[0] == '+')
        throw std::invalid_argument("malformed rational literal '" + s + "'");
    boost::multiprecision::mpz_int q(den);
    if (q == 0)
        throw std::invalid_argument("zero denominator in '" + s + "'");
    return Scalar(boost::multiprecision::mpz_int(num[0] == '+' ? num.substr(1) : num), q);
}

inline std::string to_string(const Scalar& v) { return v.str(); }

inline double to_double(const Scalar& v) { return v.convert_to<double>(); }

inline double to_double(double v) { return v; }

inline Scalar abs(const Scalar& v) { return v < 0 ? Scalar(-v) : v; }

/// Dense row-major square matrix.
template <class T>
class SquareMatrix {
public:
    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t n, const T& fill = T{}) : n_(n), a_(n * n, fill) {}

    std::size_t size() const noexcept { return n_; }
    T& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
    std::span<const T> row(std::size_t i) const { return {a_.data() + i * n_, n_}; }

    template <class U>
    SquareMatrix<U> cast() const
    {
        SquareMatrix<U> out(n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) {
                if constexpr (std::is_same_v<U, double>)
                    out(i, j) = to_double((*this)(i, j));
                else
                    out(i, j) = U((*this)(i, j));
            }
        return out;
    }

    bool operator==(const SquareMatrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<T> a_;
};

struct MetricViolation {
    enum class Kind { asymmetric, nonzero_diagonal, nonpositive, triangle };
    Kind kind;
    // triangle: defect = d(i,j) - d(i,k) - d(k,j), i.e. k is the intermediate point.
    // asymmetric: defect = d(i,j) - d(j,i). nonzero_diagonal: i == j, defect = d(i,i).
    std::size_t i = 0, j = 0, k = 0;
    Scalar defect;
};

inline std::string_view to_string(MetricViolation::Kind k)
{
    switch (k) {
    case MetricViolation::Kind::asymmetric: return "asymmetric";
    case MetricViolation::Kind::nonzero_diagonal: return "nonzero_diagonal";
    case MetricViolation::Kind::nonpositive: return "nonpositive";
    case MetricViolation::Kind::triangle: return "triangle";
    }
    return "?";
}

class FiniteMetricSpace;
struct ValidationResult;
ValidationResult validate_metric(const std::vector<std::vector<Scalar>>& dist,
                                 std::vector<std::string> labels);

/// A finite metric space with exact rational distances. Only obtainable
/// through validate_metric (or derived from an existing space), so every
/// instance satisfies the metric axioms.
class FiniteMetricSpace {
public:
    std::size_t size() const noexcept { return dist_.size(); }
    const Scalar& operator()(std::size_t i, std::size_t j) const { return dist_(i, j); }
    const SquareMatrix<Scalar>& distances() const noexcept { return dist_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    std::span<const Scalar> row(std::size_t i) const { return dist_.row(i); }

    SquareMatrix<double> distances_as_double() const { return dist_.cast<double>(); }

    Scalar diameter() const
    {
        Scalar best = 0;
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t j = i + 1; j < size(); ++j)
                best = std::max(best, dist_(i, j));
        return best;
    }

    bool operator==(const FiniteMetricSpace&) const = default;

private:
    FiniteMetricSpace(std::vector<std::string> labels, SquareMatrix<Scalar> dist)
        : labels_(std::move(labels)), dist_(std::move(dist))
    {
    }

    friend ValidationResult validate_metric(const std::vector<std::vector<Scalar>>&,
                                            std::vector<std::string>);
    friend FiniteMetricSpace subspace(const FiniteMetricSpace&, std::span<const std::size_t>);

    std::vector<std::string> labels_;
    SquareMatrix<Scalar> dist_;
};

struct ValidationResult {
    std::optional<FiniteMetricSpace> space;
    std::vector<MetricViolation> violations;

    bool ok() const noexcept { return space.has_value(); }
};

inline std::vector<std::string> default_labels(std::size_t n)
{
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(std::to_string(i));
    return out;
}

/// Checks symmetry, zero diagonal, positivity and every triangle inequality.
/// Throws std::invalid_argument for a non-square matrix, negative entries or
/// a label count that does not match.
inline ValidationResult validate_metric(const std::vector<std::vector<Scalar>>& dist,
                                        std::vector<std::string> labels = {})
{
    const std::size_t n = dist.size();
    if (n == 0)
        throw std::invalid_argument("distance matrix is empty");
    for (const auto& r : dist)
        if (r.size() != n)
            throw std::invalid_argument("distance matrix is not square");
    if (labels.empty())
        labels = default_labels(n);
    if (labels.size() != n)
        throw std::invalid_argument("label count does not match matrix size");

    SquareMatrix<Scalar> d(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (dist[i][j] < 0)
                throw std::invalid_argument("negative distance at (" + std::to_string(i) + "," +
                                            std::to_string(j) + ")");
            d(i, j) = dist[i][j];
        }

    ValidationResult result;
    using K = MetricViolation::Kind;
    bool symmetric = true;
    for (std::size_t i = 0; i < n; ++i) {
        if (d(i, i) != 0)
            result.violations.push_back({K::nonzero_diagonal, i, i, i, d(i, i)});
        for (std::size_t j = i + 1; j < n; ++j) {
            if (d(i, j) != d(j, i)) {
                symmetric = false;
                result.violations.push_back({K::asymmetric, i, j, 0, Scalar(d(i, j) - d(j, i))});
            }
            if (d(i, j) == 0 || d(j, i) == 0)
                result.violations.push_back({K::nonpositive, i, j, 0, Scalar(0)});
        }
    }
    // Triangle checks assume symmetry; on an asymmetric matrix they would
    // double-report the same defect.
    if (symmetric) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == i || k == j)
                        continue;
                    Scalar defect = d(i, j) - d(i, k) - d(k, j);
                    if (defect > 0)
                        result.violations.push_back({K::triangle, i, j, k, std::move(defect)});
                }
    }
    if (result.violations.empty())
        result.space = FiniteMetricSpace(std::move(labels), std::move(d));
    return result;
}

/// Like validate_metric but throws std::invalid_argument on any violation.
inline FiniteMetricSpace make_metric(const std::vector<std::vector<Scalar>>& dist,
                                     std::vector<std::string> labels = {})
{
    auto r = validate_metric(dist, std::move(labels));
    if (!r.ok()) {
        const auto& v = r.violations.front();
        throw std::invalid_argument("not a metric: " + std::string(to_string(v.kind)) + " at (" +
                                    std::to_string(v.i) + "," + std::to_string(v.j) + "," +
                                    std::to_string(v.k) + ")");
    }
    return std::move(*r.space);
}

/// Restriction of X to the listed indices, in the given order.
inline FiniteMetricSpace subspace(const FiniteMetricSpace& X, std::span<const std::size_t> S)
{
    if (S.empty())
        throw std::invalid_argument("subspace index set is empty");
    for (std::size_t a = 0; a < S.size(); ++a) {
        if (S[a] >= X.size())
            throw std::out_of_range("subspace index out of range");
        for (std::size_t b = 0; b < a; ++b)
            if (S[a] == S[b])
                throw std::invalid_argument("subspace index repeated");
    }
    SquareMatrix<Scalar> d(S.size());
    std::vector<std::string> labels;
    labels.reserve(S.size());
    for (std::size_t a = 0; a < S.size(); ++a) {
        labels.push_back(X.labels()[S[a]]);
        for (std::size_t b = 0; b < S.size(); ++b)
            d(a, b) = X(S[a], S[b]);
    }
    return FiniteMetricSpace(std::move(labels), std::move(d));
}

inline FiniteMetricSpace subspace(const FiniteMetricSpace& X, std::initializer_list<std::size_t> S)
{
    return subspace(X, std::span<const std::size_t>(S.begin(), S.size()));
}

/// max_i |p_i - q_i|; works for exact and floating coordinates alike.
template <class P>
auto linf_distance(const P& p, const P& q)
{
    using T = std::ranges::range_value_t<P>;
    if (std::ranges::size(p) != std::ranges::size(q))
        throw std::invalid_argument("linf_distance: dimension mismatch");
    T best = 0;
    auto qi = std::ranges::begin(q);
    for (const auto& pi : p) {
        T diff = pi - *qi++;
        if (diff < 0)
            diff = -diff;
        if (diff > best)
            best = diff;
    }
    return best;
}

/// d(x,x') + d(y,y') - max{d(x,y) + d(x',y'), d(x,y') + d(x',y)}. Non-positive
/// on every quadruple exactly when X is 0-hyperbolic (tree-like).
inline Scalar four_point_defect(const FiniteMetricSpace& X, std::size_t x, std::size_t xp,
                                std::size_t y, std::size_t yp)
{
    const std::size_t n = X.size();
    if (x >= n || xp >= n || y >= n || yp >= n)
        throw std::out_of_range("four_point_defect: index out of range");
    Scalar lhs = X(x, xp) + X(y, yp);
    Scalar a = X(x, y) + X(xp, yp);
    Scalar b = X(x, yp) + X(xp, y);
    return lhs - std::max(a, b);
}

/// Largest four-point defect over all quadruples together with its argument.
inline std::pair<Scalar, std::array<std::size_t, 4>> max_four_point_defect(const FiniteMetricSpace& X)
{
    const std::size_t n = X.size();
    Scalar best = 0;
    std::array<std::size_t, 4> arg{0, 0, 0, 0};
    bool first = true;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t c = 0; c < n; ++c)
                for (std::size_t e = 0; e < n; ++e) {
                    Scalar v = four_point_defect(X, a, b, c, e);
                    if (first || v > best) {
                        best = std::move(v);
                        arg = {a, b, c, e};
                        first = false;
                    }
                }
    return {best, arg};
}

} // namespace bicomb
