#pragma once

// Exact linear algebra over Z and Q: sparse fraction-free elimination for
// ranks, rational row reduction for kernels, and dense Smith normal form with
// unimodular certificates.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>

namespace operadkit {

using Integer = mpz_class;

/// Sparse integer matrix stored by columns; each column is sorted by row.
class SparseMatrix {
public:
    using Entry = std::pair<std::size_t, Integer>;
    using Column = std::vector<Entry>;

    SparseMatrix() = default;
    SparseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    void set_column(std::size_t c, Column col)
    {
        std::sort(col.begin(), col.end(), [](const Entry& a, const Entry& b) { return a.first < b.first; });
        col.erase(std::remove_if(col.begin(), col.end(), [](const Entry& e) { return sgn(e.second) == 0; }), col.end());
        for (const auto& e : col)
            if (e.first >= rows_)
                throw std::out_of_range("row index out of range");
        if (columns_.size() < cols_)
            columns_.resize(cols_);
        columns_.at(c) = std::move(col);
    }

    const Column& column(std::size_t c) const
    {
        static const Column empty;
        return c < columns_.size() ? columns_[c] : empty;
    }

    std::size_t nonzeros() const
    {
        std::size_t k = 0;
        for (const auto& c : columns_)
            k += c.size();
        return k;
    }

    bool is_zero() const { return nonzeros() == 0; }

    /// this * other
    SparseMatrix multiply(const SparseMatrix& other) const
    {
        if (cols_ != other.rows_)
            throw std::invalid_argument("shape mismatch in product");
        SparseMatrix out(rows_, other.cols_);
        for (std::size_t c = 0; c < other.cols_; ++c) {
            std::map<std::size_t, Integer> acc;
            for (const auto& [k, v] : other.column(c))
                for (const auto& [r, w] : column(k))
                    acc[r] += v * w;
            Column col;
            for (auto& [r, v] : acc)
                if (sgn(v) != 0)
                    col.emplace_back(r, std::move(v));
            out.set_column(c, std::move(col));
        }
        return out;
    }

    std::vector<std::vector<Integer>> dense() const
    {
        std::vector<std::vector<Integer>> d(rows_, std::vector<Integer>(cols_, 0));
        for (std::size_t c = 0; c < cols_; ++c)
            for (const auto& [r, v] : column(c))
                d[r][c] = v;
        return d;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Column> columns_;
};

namespace detail {

using SparseVec = std::vector<std::pair<std::size_t, Integer>>;

inline void remove_content(SparseVec& v)
{
    if (v.empty())
        return;
    Integer g = 0;
    for (const auto& e : v) {
        mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), e.second.get_mpz_t());
        if (g == 1)
            break;
    }
    if (sgn(v.front().second) < 0)
        g = -g;
    if (g != 1)
        for (auto& e : v)
            mpz_divexact(e.second.get_mpz_t(), e.second.get_mpz_t(), g.get_mpz_t());
}

// a*x - b*y on sparse vectors
inline SparseVec combine(const Integer& a, const SparseVec& x, const Integer& b, const SparseVec& y)
{
    SparseVec out;
    out.reserve(x.size() + y.size());
    std::size_t i = 0, j = 0;
    while (i < x.size() || j < y.size()) {
        if (j == y.size() || (i < x.size() && x[i].first < y[j].first)) {
            out.emplace_back(x[i].first, a * x[i].second);
            ++i;
        } else if (i == x.size() || y[j].first < x[i].first) {
            out.emplace_back(y[j].first, -b * y[j].second);
            ++j;
        } else {
            Integer v = a * x[i].second - b * y[j].second;
            if (sgn(v) != 0)
                out.emplace_back(x[i].first, std::move(v));
            ++i;
            ++j;
        }
    }
    return out;
}

} // namespace detail

/// Exact rank by fraction-free elimination of the columns.
inline std::size_t rank(const SparseMatrix& m)
{
    std::map<std::size_t, detail::SparseVec> pivots; // leading row -> reduced vector
    std::size_t r = 0;
    for (std::size_t c = 0; c < m.cols(); ++c) {
        detail::SparseVec v(m.column(c).begin(), m.column(c).end());
        while (!v.empty()) {
            auto it = pivots.find(v.front().first);
            if (it == pivots.end()) {
                detail::remove_content(v);
                pivots.emplace(v.front().first, std::move(v));
                ++r;
                break;
            }
            const auto& p = it->second;
            Integer g = gcd(p.front().second, v.front().second);
            Integer a = p.front().second / g, b = v.front().second / g;
            v = detail::combine(a, v, b, p);
            detail::remove_content(v);
        }
    }
    return r;
}

/// Basis of the kernel of m over Q, in reduced form: each vector has a 1 in
/// its own free column and zeros in the other free columns. Vectors are
/// returned scaled to primitive integer vectors.
inline std::vector<std::vector<Integer>> kernel_basis(const SparseMatrix& m)
{
    // Row-reduce the transpose view: build dense rational rows lazily.
    const std::size_t R = m.rows(), C = m.cols();
    std::vector<std::map<std::size_t, mpq_class>> rows(R);
    for (std::size_t c = 0; c < C; ++c)
        for (const auto& [r, v] : m.column(c))
            rows[r][c] = mpq_class(v);
    std::vector<std::map<std::size_t, mpq_class>> echelon;
    std::vector<std::size_t> pivot_cols;
    for (auto& row : rows) {
        // reduce against existing pivots
        for (std::size_t k = 0; k < echelon.size() && !row.empty(); ++k) {
            auto it = row.find(pivot_cols[k]);
            if (it == row.end())
                continue;
            mpq_class f = it->second;
            for (const auto& [c, v] : echelon[k]) {
                auto& x = row[c];
                x -= f * v;
                if (sgn(x) == 0)
                    row.erase(c);
            }
        }
        if (row.empty())
            continue;
        const std::size_t pc = row.begin()->first;
        mpq_class lead = row.begin()->second;
        for (auto& [c, v] : row)
            v /= lead;
        // back-substitute into earlier rows to keep the echelon reduced
        for (auto& e : echelon) {
            auto it = e.find(pc);
            if (it == e.end())
                continue;
            mpq_class f = it->second;
            for (const auto& [c, v] : row) {
                auto& x = e[c];
                x -= f * v;
                if (sgn(x) == 0)
                    e.erase(c);
            }
        }
        echelon.push_back(std::move(row));
        pivot_cols.push_back(pc);
    }
    std::vector<bool> is_pivot(C, false);
    for (auto pc : pivot_cols)
        is_pivot[pc] = true;
    std::vector<std::vector<Integer>> out;
    for (std::size_t f = 0; f < C; ++f) {
        if (is_pivot[f])
            continue;
        std::vector<mpq_class> v(C, 0);
        v[f] = 1;
        for (std::size_t k = 0; k < echelon.size(); ++k) {
            auto it = echelon[k].find(f);
            if (it != echelon[k].end())
                v[pivot_cols[k]] = -it->second;
        }
        Integer den = 1;
        for (const auto& x : v)
            den = lcm(den, x.get_den());
        std::vector<Integer> iv(C);
        Integer g = 0;
        for (std::size_t c = 0; c < C; ++c) {
            iv[c] = v[c].get_num() * (den / v[c].get_den());
            g = gcd(g, iv[c]);
        }
        if (g > 1)
            for (auto& x : iv)
                x /= g;
        out.push_back(std::move(iv));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Smith normal form

using DenseMatrix = std::vector<std::vector<Integer>>;

struct SmithResult {
    std::vector<Integer> invariant_factors; // nonzero diagonal, d1 | d2 | ...
    std::size_t rows = 0, cols = 0;
    std::optional<DenseMatrix> U, V;        // U * A * V = D when requested
    std::size_t rank() const { return invariant_factors.size(); }
};

inline DenseMatrix identity_matrix(std::size_t n)
{
    DenseMatrix I(n, std::vector<Integer>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
        I[i][i] = 1;
    return I;
}

inline DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b)
{
    const std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
    DenseMatrix c(n, std::vector<Integer>(m, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < k; ++t) {
            if (sgn(a[i][t]) == 0)
                continue;
            for (std::size_t j = 0; j < m; ++j)
                if (sgn(b[t][j]) != 0)
                    c[i][j] += a[i][t] * b[t][j];
        }
    return c;
}

namespace detail {

// Row operation on rows i, j: (ri, rj) <- (a ri + b rj, c ri + d rj)
inline void row_mix(DenseMatrix& M, std::size_t i, std::size_t j, const Integer& a, const Integer& b,
                    const Integer& c, const Integer& d)
{
    for (std::size_t k = 0; k < M[i].size(); ++k) {
        Integer x = M[i][k], y = M[j][k];
        if (sgn(x) == 0 && sgn(y) == 0)
            continue;
        M[i][k] = a * x + b * y;
        M[j][k] = c * x + d * y;
    }
}

inline void col_mix(DenseMatrix& M, std::size_t i, std::size_t j, const Integer& a, const Integer& b,
                    const Integer& c, const Integer& d)
{
    for (auto& row : M) {
        Integer x = row[i], y = row[j];
        if (sgn(x) == 0 && sgn(y) == 0)
            continue;
        row[i] = a * x + b * y;
        row[j] = c * x + d * y;
    }
}

} // namespace detail

/// Smith normal form of an integer matrix. With certificates, also returns
/// unimodular U, V with U * A * V diagonal.
inline SmithResult smith_normal_form(DenseMatrix A, bool certificates = false)
{
    SmithResult res;
    const std::size_t R = A.size(), C = R ? A[0].size() : 0;
    res.rows = R;
    res.cols = C;
    DenseMatrix U, V;
    if (certificates) {
        U = identity_matrix(R);
        V = identity_matrix(C);
    }
    std::size_t t = 0;
    while (t < R && t < C) {
        // pivot: smallest nonzero absolute value in the remaining block
        std::size_t pi = R, pj = C;
        for (std::size_t i = t; i < R; ++i)
            for (std::size_t j = t; j < C; ++j)
                if (sgn(A[i][j]) != 0 && (pi == R || abs(A[i][j]) < abs(A[pi][pj]))) {
                    pi = i;
                    pj = j;
                    if (abs(A[pi][pj]) == 1)
                        goto found;
                }
    found:
        if (pi == R)
            break;
        if (pi != t) {
            std::swap(A[pi], A[t]);
            if (certificates)
                std::swap(U[pi], U[t]);
        }
        if (pj != t) {
            for (auto& row : A)
                std::swap(row[pj], row[t]);
            if (certificates)
                for (auto& row : V)
                    std::swap(row[pj], row[t]);
        }
        bool clean = false;
        while (!clean) {
            clean = true;
            // clear column t below the pivot with extended gcd steps
            for (std::size_t i = t + 1; i < R; ++i) {
                if (sgn(A[i][t]) == 0)
                    continue;
                if (mpz_divisible_p(A[i][t].get_mpz_t(), A[t][t].get_mpz_t())) {
                    // plain subtraction leaves row t alone
                    const Integer q = A[i][t] / A[t][t];
                    detail::row_mix(A, i, t, 1, -q, 0, 1);
                    if (certificates)
                        detail::row_mix(U, i, t, 1, -q, 0, 1);
                    continue;
                }
                Integer g, s, u;
                mpz_gcdext(g.get_mpz_t(), s.get_mpz_t(), u.get_mpz_t(), A[t][t].get_mpz_t(), A[i][t].get_mpz_t());
                Integer a = A[t][t] / g, b = A[i][t] / g;
                // [s u; -b a] has determinant s a + u b = 1
                detail::row_mix(A, t, i, s, u, -b, a);
                if (certificates)
                    detail::row_mix(U, t, i, s, u, -b, a);
            }
            // clear row t right of the pivot
            for (std::size_t j = t + 1; j < C; ++j) {
                if (sgn(A[t][j]) == 0)
                    continue;
                if (mpz_divisible_p(A[t][j].get_mpz_t(), A[t][t].get_mpz_t())) {
                    const Integer q = A[t][j] / A[t][t];
                    detail::col_mix(A, j, t, 1, -q, 0, 1);
                    if (certificates)
                        detail::col_mix(V, j, t, 1, -q, 0, 1);
                    continue;
                }
                Integer g, s, u;
                mpz_gcdext(g.get_mpz_t(), s.get_mpz_t(), u.get_mpz_t(), A[t][t].get_mpz_t(), A[t][j].get_mpz_t());
                Integer a = A[t][t] / g, b = A[t][j] / g;
                detail::col_mix(A, t, j, s, u, -b, a);
                if (certificates)
                    detail::col_mix(V, t, j, s, u, -b, a);
                clean = false;
            }
            if (!clean)
                continue;
            for (std::size_t i = t + 1; i < R; ++i)
                if (sgn(A[i][t]) != 0)
                    clean = false;
            if (!clean)
                continue;
            // divisibility: the pivot must divide the rest of the block
            for (std::size_t i = t + 1; i < R && clean; ++i)
                for (std::size_t j = t + 1; j < C; ++j)
                    if (sgn(A[i][j]) != 0 && !mpz_divisible_p(A[i][j].get_mpz_t(), A[t][t].get_mpz_t())) {
                        // add row i to row t and redo the clearing
                        detail::row_mix(A, t, i, 1, 1, 0, 1);
                        if (certificates)
                            detail::row_mix(U, t, i, 1, 1, 0, 1);
                        clean = false;
                        break;
                    }
        }
        if (sgn(A[t][t]) < 0) {
            for (auto& x : A[t])
                x = -x;
            if (certificates)
                for (auto& x : U[t])
                    x = -x;
        }
        res.invariant_factors.push_back(A[t][t]);
        ++t;
    }
    if (certificates) {
        res.U = std::move(U);
        res.V = std::move(V);
    }
    return res;
}

/// Determinant by fraction-free Bareiss elimination.
inline Integer determinant(DenseMatrix M)
{
    const std::size_t n = M.size();
    for (const auto& row : M)
        if (row.size() != n)
            throw std::invalid_argument("determinant of a non-square matrix");
    Integer prev = 1;
    int sign = 1;
    for (std::size_t k = 0; k < n; ++k) {
        if (sgn(M[k][k]) == 0) {
            std::size_t s = k + 1;
            while (s < n && sgn(M[s][k]) == 0)
                ++s;
            if (s == n)
                return 0;
            std::swap(M[s], M[k]);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            for (std::size_t j = k + 1; j < n; ++j) {
                M[i][j] = M[i][j] * M[k][k] - M[i][k] * M[k][j];
                mpz_divexact(M[i][j].get_mpz_t(), M[i][j].get_mpz_t(), prev.get_mpz_t());
            }
            M[i][k] = 0;
        }
        prev = M[k][k];
    }
    return n == 0 ? Integer(1) : Integer(sign * prev);
}

/// Exact check that U * A * V is diagonal with the stated factors and that
/// U, V have determinant +-1.
inline bool verify_smith_certificate(const DenseMatrix& A, const SmithResult& s)
{
    if (!s.U || !s.V)
        return false;
    DenseMatrix D = multiply(multiply(*s.U, A), *s.V);
    for (std::size_t i = 0; i < D.size(); ++i)
        for (std::size_t j = 0; j < D[i].size(); ++j) {
            Integer expect = (i == j && i < s.invariant_factors.size()) ? s.invariant_factors[i] : Integer(0);
            if (D[i][j] != expect)
                return false;
        }
    for (std::size_t k = 1; k < s.invariant_factors.size(); ++k)
        if (!mpz_divisible_p(s.invariant_factors[k].get_mpz_t(), s.invariant_factors[k - 1].get_mpz_t()))
            return false;
    auto unimodular = [](const DenseMatrix& M) { return abs(determinant(M)) == 1; };
    return unimodular(*s.U) && unimodular(*s.V);
}

} // namespace operadkit
