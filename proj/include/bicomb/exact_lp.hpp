#pragma once

// Dense two-phase simplex over exact rationals, Bland's rule throughout so it
// cannot cycle. Sized for the tiny flow problems of the comb_dim module.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bicomb/metric_core.hpp"

namespace bicomb {

enum class LpStatus { optimal, unbounded, infeasible };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    Scalar value = 0;        // optimum when status == optimal
    std::vector<Scalar> x;   // optimal vertex
    std::vector<Scalar> ray; // when unbounded: r >= 0, A r = 0, c.r > 0
};

/// Maximize c.x subject to A x = b, x >= 0.
inline LpResult maximize(std::vector<std::vector<Scalar>> A, std::vector<Scalar> b,
                         const std::vector<Scalar>& c)
{
    const std::size_t m = A.size();
    const std::size_t n = c.size();
    if (b.size() != m)
        throw std::invalid_argument("maximize: A and b disagree in row count");
    for (const auto& row : A)
        if (row.size() != n)
            throw std::invalid_argument("maximize: A and c disagree in column count");

    for (std::size_t r = 0; r < m; ++r)
        if (b[r] < 0) {
            for (auto& v : A[r])
                v = -v;
            b[r] = -b[r];
        }

    // tableau columns: n structural, m artificial, then rhs
    const std::size_t W = n + m + 1;
    std::vector<std::vector<Scalar>> T(m, std::vector<Scalar>(W, Scalar(0)));
    std::vector<std::size_t> basis(m);
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t j = 0; j < n; ++j)
            T[r][j] = A[r][j];
        T[r][n + r] = 1;
        T[r][W - 1] = b[r];
        basis[r] = n + r;
    }

    auto pivot = [&](std::size_t r, std::size_t col) {
        const Scalar p = T[r][col];
        for (auto& v : T[r])
            v /= p;
        for (std::size_t i = 0; i < T.size(); ++i) {
            if (i == r || T[i][col] == 0)
                continue;
            const Scalar f = T[i][col];
            for (std::size_t k = 0; k < W; ++k)
                if (T[r][k] != 0)
                    T[i][k] -= f * T[r][k];
        }
        basis[r] = col;
    };

    // reduced costs for maximizing cost over the columns allowed by `usable`
    auto reduced = [&](const std::vector<Scalar>& cost, std::size_t col) {
        Scalar rc = cost[col];
        for (std::size_t r = 0; r < T.size(); ++r)
            if (T[r][col] != 0)
                rc -= cost[basis[r]] * T[r][col];
        return rc;
    };

    // returns the entering column that proved unboundedness, if any
    auto run = [&](const std::vector<Scalar>& cost, std::size_t usable) -> std::optional<std::size_t> {
        for (;;) {
            std::optional<std::size_t> enter;
            for (std::size_t j = 0; j < usable && !enter; ++j)
                if (reduced(cost, j) > 0)
                    enter = j;
            if (!enter)
                return std::nullopt;
            std::optional<std::size_t> leave;
            Scalar best;
            for (std::size_t r = 0; r < T.size(); ++r) {
                if (T[r][*enter] <= 0)
                    continue;
                Scalar ratio = T[r][W - 1] / T[r][*enter];
                if (!leave || ratio < best || (ratio == best && basis[r] < basis[*leave])) {
                    leave = r;
                    best = ratio;
                }
            }
            if (!leave)
                return enter;
            pivot(*leave, *enter);
        }
    };

    std::vector<Scalar> phase1(n + m, Scalar(0));
    for (std::size_t r = 0; r < m; ++r)
        phase1[n + r] = -1;
    run(phase1, n + m);
    for (std::size_t r = 0; r < m; ++r)
        if (basis[r] >= n && T[r][W - 1] != 0)
            return {};

    // drive zero-valued artificials out of the basis, dropping redundant rows
    for (std::size_t r = 0; r < T.size();) {
        if (basis[r] < n) {
            ++r;
            continue;
        }
        std::optional<std::size_t> col;
        for (std::size_t j = 0; j < n && !col; ++j)
            if (T[r][j] != 0)
                col = j;
        if (col) {
            pivot(r, *col);
            ++r;
        } else {
            T.erase(T.begin() + static_cast<std::ptrdiff_t>(r));
            basis.erase(basis.begin() + static_cast<std::ptrdiff_t>(r));
        }
    }

    std::vector<Scalar> cost(n + m, Scalar(0));
    for (std::size_t j = 0; j < n; ++j)
        cost[j] = c[j];
    LpResult out;
    if (auto enter = run(cost, n)) {
        out.status = LpStatus::unbounded;
        out.ray.assign(n, Scalar(0));
        out.ray[*enter] = 1;
        for (std::size_t r = 0; r < T.size(); ++r)
            out.ray[basis[r]] = -T[r][*enter];
        return out;
    }
    out.status = LpStatus::optimal;
    out.x.assign(n, Scalar(0));
    for (std::size_t r = 0; r < T.size(); ++r)
        out.x[basis[r]] = T[r][W - 1];
    for (std::size_t j = 0; j < n; ++j)
        out.value += c[j] * out.x[j];
    return out;
}

} // namespace bicomb
