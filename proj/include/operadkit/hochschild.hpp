#pragma once

// The Hochschild cochain complex of the Poisson operad with its standard
// multiplication, in the full and normalized versions, and its cohomology
// over Q and Z.
//
// C^{p,q} is the slice of Poiss_n(p) with q/n brackets. The differential
// d = sum_{i=0}^{p+1} (-1)^i d^i maps C^{p,q} to C^{p+1,q}.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "linalg.hpp"
#include "poisson.hpp"
#include "random.hpp"
#include "report.hpp"

namespace operadkit {

inline constexpr std::size_t kMaxHochschildLevel = 7;

enum class Coefficients { rational, integral };

inline std::string to_string(Coefficients c) { return c == Coefficients::rational ? "rational" : "integral"; }

struct CochainComplex {
    int n = 2;
    std::size_t max_p = 0;
    bool normalized = false;
    // basis[p][r]: monomials of arity p with r brackets spanning C^{p, r n}
    std::vector<std::vector<std::vector<Monomial>>> basis;
    // differential[p][r]: C^{p,rn} -> C^{p+1,rn}, rows indexed by basis[p+1][r]
    std::vector<std::vector<SparseMatrix>> differential;

    static std::optional<std::size_t> brackets_for(int n, int q)
    {
        if (q < 0 || q % n != 0)
            return std::nullopt;
        return static_cast<std::size_t>(q / n);
    }

    std::size_t dim(std::size_t p, std::size_t r) const
    {
        if (p >= basis.size() || r >= basis[p].size())
            return 0;
        return basis[p][r].size();
    }

    /// The matrix of d on C^{p, r n}; an empty matrix of the right shape when
    /// the slice is outside the bracket range.
    SparseMatrix d(std::size_t p, std::size_t r) const
    {
        if (p >= differential.size())
            throw std::out_of_range("differential leaves the built range");
        if (r < differential[p].size())
            return differential[p][r];
        return SparseMatrix(dim(p + 1, r), dim(p, r));
    }

    std::size_t max_brackets() const { return max_p == 0 ? 0 : max_p - 1; }
};

namespace detail {

inline bool all_bracketed(const Monomial& m)
{
    for (const auto& w : m)
        if (w.size() == 1)
            return false;
    return true;
}

inline Integer to_integer(const Rational& c)
{
    if (!c.is_integer())
        throw std::logic_error("non-integral coefficient in a differential");
    return c.numerator();
}

/// Stacked codegeneracies s^1..s^p on the slice (p, r) as one matrix.
inline SparseMatrix codegeneracy_stack(const PoissonOperad& op, std::size_t p, std::size_t r)
{
    const PoissonBasis& src = poisson_basis(p);
    const std::size_t below = p == 0 ? 0 : p - 1;
    const PoissonBasis& dst = poisson_basis(below);
    const std::size_t cols = src.slice_size(r), block = dst.slice_size(r);
    SparseMatrix m(block * p, cols);
    for (std::size_t c = 0; c < cols; ++c) {
        const PoissonElement e{p, {{src.monomials[src.slice_begin[r] + c], Rational(1)}}};
        SparseMatrix::Column col;
        for (std::size_t i = 1; i <= p; ++i)
            for (const auto& [mono, k] : op.contract_leaf(e, i).terms)
                col.emplace_back((i - 1) * block + (dst.index.at(mono) - dst.slice_begin[r]), to_integer(k));
        m.set_column(c, std::move(col));
    }
    return m;
}

} // namespace detail

/// Basis of the intersection of the kernels of all codegeneracies on the
/// slice (p, r), found by exact row reduction. Each kernel vector must be a
/// coordinate vector; a violation signals a bug and throws.
inline std::vector<Monomial> normalized_slice(const PoissonOperad& op, std::size_t p, std::size_t r)
{
    const PoissonBasis& b = poisson_basis(p);
    const std::size_t size = b.slice_size(r);
    std::vector<Monomial> out;
    if (size == 0)
        return out;
    if (p == 0) {
        // no codegeneracies at level 0
        for (std::size_t c = 0; c < size; ++c)
            out.push_back(b.monomials[b.slice_begin[r] + c]);
        return out;
    }
    for (const auto& v : kernel_basis(detail::codegeneracy_stack(op, p, r))) {
        std::size_t support = 0, at = 0;
        for (std::size_t c = 0; c < v.size(); ++c)
            if (sgn(v[c]) != 0) {
                ++support;
                at = c;
            }
        if (support != 1)
            throw std::logic_error("kernel of the codegeneracies is not spanned by basis monomials");
        out.push_back(b.monomials[b.slice_begin[r] + at]);
    }
    std::sort(out.begin(), out.end(),
              [&](const Monomial& x, const Monomial& y) { return b.index.at(x) < b.index.at(y); });
    return out;
}

/// Builds C^{p,*} for p = 0..max_p and the differentials d_p for p < max_p.
inline CochainComplex build_complex(int n, std::size_t max_p, bool normalized, unsigned threads = 1)
{
    if (n < 1)
        throw std::invalid_argument("bracket degree must be at least 1");
    if (max_p > kMaxHochschildLevel)
        throw std::length_error("level bound exceeded: max_p must be at most " + std::to_string(kMaxHochschildLevel));
    const PoissonOperad op(n);
    CochainComplex c;
    c.n = n;
    c.max_p = max_p;
    c.normalized = normalized;
    const std::size_t R = max_p == 0 ? 1 : max_p;
    c.basis.assign(max_p + 1, std::vector<std::vector<Monomial>>(R));
    for (std::size_t p = 0; p <= max_p; ++p) {
        const PoissonBasis& b = poisson_basis(p);
        for (std::size_t r = 0; r < R; ++r) {
            if (normalized) {
                c.basis[p][r] = normalized_slice(op, p, r);
            } else {
                const std::size_t size = b.slice_size(r);
                if (size > 0) {
                    auto first = b.monomials.begin() + static_cast<std::ptrdiff_t>(b.slice_begin[r]);
                    c.basis[p][r].assign(first, first + static_cast<std::ptrdiff_t>(size));
                }
            }
        }
    }
    c.differential.assign(max_p, std::vector<SparseMatrix>(R));
    for (std::size_t p = 0; p < max_p; ++p)
        for (std::size_t r = 0; r < R; ++r) {
            const auto& src = c.basis[p][r];
            const auto& dst = c.basis[p + 1][r];
            std::map<Monomial, std::size_t> row_of;
            for (std::size_t k = 0; k < dst.size(); ++k)
                row_of.emplace(dst[k], k);
            SparseMatrix m(dst.size(), src.size());
            std::vector<SparseMatrix::Column> cols(src.size());
            std::vector<std::string> escaped(src.size());
            parallel_for(src.size(), threads, [&](std::size_t k) {
                const PoissonElement e{p, {{src[k], Rational(1)}}};
                Terms sum;
                for (std::size_t i = 0; i <= p + 1; ++i)
                    for (const auto& [mono, coeff] : op.coface(i, e).terms)
                        accumulate(sum, mono, i % 2 ? -coeff : coeff);
                for (const auto& [mono, coeff] : sum) {
                    auto it = row_of.find(mono);
                    if (it == row_of.end()) {
                        escaped[k] = monomial_to_string(mono);
                        return;
                    }
                    cols[k].emplace_back(it->second, detail::to_integer(coeff));
                }
            });
            for (std::size_t k = 0; k < src.size(); ++k) {
                if (!escaped[k].empty())
                    throw std::logic_error("differential of " + monomial_to_string(src[k]) + " leaves the complex via " +
                                           escaped[k]);
                m.set_column(k, std::move(cols[k]));
            }
            c.differential[p][r] = std::move(m);
        }
    return c;
}

/// d_{p+1} d_p = 0 on every slice where both are built.
inline Report check_d_squared(const CochainComplex& c)
{
    Report rep("d-squared");
    for (std::size_t p = 0; p + 1 < c.differential.size(); ++p)
        for (std::size_t r = 0; r < c.differential[p].size(); ++r) {
            const SparseMatrix dd = c.d(p + 1, r).multiply(c.d(p, r));
            rep.expect(dd.is_zero(), "d o d = 0", [&] {
                return nlohmann::json{{"n", c.n}, {"p", p}, {"q", static_cast<int>(r) * c.n}, {"nonzeros", dd.nonzeros()}};
            });
        }
    return rep;
}

/// The normalized basis is closed under d (build_complex already refuses
/// otherwise) and lies on or above the line q = p n / 2.
inline Report check_normalized_subcomplex(int n, std::size_t max_p)
{
    Report rep("normalized-subcomplex");
    const PoissonOperad op(n);
    for (std::size_t p = 0; p <= max_p; ++p)
        for (std::size_t r = 0; r < std::max<std::size_t>(p, 1); ++r) {
            const auto nb = normalized_slice(op, p, r);
            for (std::size_t k = 0; k < nb.size() && p < max_p; ++k) {
                const PoissonElement e{p, {{nb[k], Rational(1)}}};
                Terms sum;
                for (std::size_t i = 0; i <= p + 1; ++i)
                    for (const auto& [mono, coeff] : op.coface(i, e).terms)
                        accumulate(sum, mono, i % 2 ? -coeff : coeff);
                bool inside = true;
                std::string bad;
                for (const auto& [mono, coeff] : sum)
                    if (!detail::all_bracketed(mono)) {
                        inside = false;
                        bad = monomial_to_string(mono);
                        break;
                    }
                rep.expect(inside, "d preserves the normalized complex", [&] {
                    return nlohmann::json{{"p", p}, {"monomial", monomial_to_string(nb[k])}, {"escapes_to", bad}};
                });
            }
        }
    return rep;
}

struct HHEntry {
    std::size_t p = 0;
    int q = 0;
    std::size_t dim = 0;      // dim C^{p,q}
    std::size_t rank = 0;     // free rank of HH^{p,q}
    std::vector<Integer> torsion;
    bool integral = false;
};

namespace detail {

struct SliceRanks {
    std::size_t rank = 0;
    std::vector<Integer> torsion; // invariant factors > 1
};

inline SliceRanks differential_invariants(const SparseMatrix& m, Coefficients coeff)
{
    SliceRanks s;
    if (coeff == Coefficients::rational || m.rows() == 0 || m.cols() == 0) {
        s.rank = rank(m);
        return s;
    }
    const SmithResult snf = smith_normal_form(m.dense());
    s.rank = snf.rank();
    for (const auto& f : snf.invariant_factors)
        if (f != 1)
            s.torsion.push_back(f);
    return s;
}

} // namespace detail

/// HH^{p,q} of a built complex. Needs d_p, so p < max_p.
inline HHEntry cohomology(const CochainComplex& c, std::size_t p, int q, Coefficients coeff)
{
    if (p >= c.max_p)
        throw std::out_of_range("bidegree (" + std::to_string(p) + "," + std::to_string(q) +
                                ") is outside the interior of the built range");
    HHEntry e;
    e.p = p;
    e.q = q;
    e.integral = coeff == Coefficients::integral;
    const auto r = CochainComplex::brackets_for(c.n, q);
    if (!r)
        return e;
    e.dim = c.dim(p, *r);
    const std::size_t out = rank(c.d(p, *r));
    std::size_t in = 0;
    if (p > 0) {
        auto s = detail::differential_invariants(c.d(p - 1, *r), coeff);
        in = s.rank;
        e.torsion = std::move(s.torsion);
    }
    e.rank = e.dim - out - in;
    return e;
}

struct CohomologyTable {
    int n = 2;
    std::size_t max_p = 0;
    bool normalized = false;
    Coefficients coefficients = Coefficients::rational;
    std::vector<HHEntry> entries;
    std::vector<double> seconds_per_p; // filled on request

    const HHEntry* find(std::size_t p, int q) const
    {
        for (const auto& e : entries)
            if (e.p == p && e.q == q)
                return &e;
        return nullptr;
    }

    nlohmann::json to_json(bool timings = false) const
    {
        nlohmann::json es = nlohmann::json::array();
        for (const auto& e : entries) {
            nlohmann::json t = nlohmann::json::array();
            for (const auto& f : e.torsion)
                t.push_back(f.get_str());
            es.push_back({{"p", e.p}, {"q", e.q}, {"dim", e.dim}, {"rank", e.rank}, {"torsion", t}});
        }
        nlohmann::json j{{"n", n},
                         {"max_p", max_p},
                         {"normalized", normalized},
                         {"coefficients", to_string(coefficients)},
                         {"entries", es}};
        if (timings)
            j["seconds_per_p"] = seconds_per_p;
        return j;
    }

    /// Rows q, columns p; a cell is the rank, followed by ";f1,f2" torsion.
    std::string to_csv() const
    {
        std::vector<int> qs;
        for (const auto& e : entries)
            if (std::find(qs.begin(), qs.end(), e.q) == qs.end())
                qs.push_back(e.q);
        std::sort(qs.begin(), qs.end());
        std::ostringstream os;
        os << "q\\p";
        for (std::size_t p = 0; p < max_p; ++p)
            os << ',' << p;
        os << '\n';
        for (int q : qs) {
            os << q;
            for (std::size_t p = 0; p < max_p; ++p) {
                os << ',';
                if (const HHEntry* e = find(p, q)) {
                    os << e->rank;
                    if (!e->torsion.empty()) {
                        os << ';';
                        for (std::size_t k = 0; k < e->torsion.size(); ++k)
                            os << (k ? "," : "") << e->torsion[k].get_str();
                    }
                }
            }
            os << '\n';
        }
        return os.str();
    }
};

/// All interior bidegrees p <= max_p - 1 with q a multiple of n in the
/// bracket range of level p.
inline CohomologyTable hh_table(const CochainComplex& c, Coefficients coeff)
{
    if (c.max_p < 2)
        throw std::invalid_argument("hh_table needs max_p >= 2");
    CohomologyTable t;
    t.n = c.n;
    t.max_p = c.max_p;
    t.normalized = c.normalized;
    t.coefficients = coeff;
    for (std::size_t p = 0; p < c.max_p; ++p) {
        const auto start = std::chrono::steady_clock::now();
        const std::size_t top = p == 0 ? 0 : p - 1;
        for (std::size_t r = 0; r <= top; ++r)
            t.entries.push_back(cohomology(c, p, static_cast<int>(r) * c.n, coeff));
        t.seconds_per_p.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
    return t;
}

inline CohomologyTable hh_table(int n, std::size_t max_p, Coefficients coeff, bool normalized, unsigned threads = 1)
{
    return hh_table(build_complex(n, max_p, normalized, threads), coeff);
}

/// Smith certificates on every differential slice with p <= max_p - 1,
/// plus agreement of the integral and rational ranks.
inline Report check_integral_consistency(const CochainComplex& c)
{
    Report rep("integral-consistency");
    for (std::size_t p = 0; p < c.differential.size(); ++p)
        for (std::size_t r = 0; r < c.differential[p].size(); ++r) {
            const SparseMatrix& m = c.differential[p][r];
            if (m.rows() == 0 || m.cols() == 0)
                continue;
            const DenseMatrix A = m.dense();
            const SmithResult s = smith_normal_form(A, true);
            auto wit = [&] {
                return nlohmann::json{{"n", c.n}, {"p", p}, {"q", static_cast<int>(r) * c.n}, {"rows", m.rows()},
                                      {"cols", m.cols()}};
            };
            rep.expect(verify_smith_certificate(A, s), "U A V = D with unimodular U, V", wit);
            rep.expect(s.rank() == rank(m), "rational rank = number of invariant factors", wit);
        }
    return rep;
}

} // namespace operadkit
