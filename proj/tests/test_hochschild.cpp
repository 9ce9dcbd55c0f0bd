#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "operadkit/hochschild.hpp"

using namespace operadkit;

namespace {

// Plain Gaussian elimination over Q on a dense copy.
std::size_t rank_q(const SparseMatrix& m)
{
    std::vector<std::vector<mpq_class>> a(m.rows(), std::vector<mpq_class>(m.cols()));
    for (std::size_t c = 0; c < m.cols(); ++c)
        for (const auto& [r, v] : m.column(c))
            a[r][c] = v;
    std::size_t rank = 0;
    for (std::size_t c = 0; c < m.cols() && rank < m.rows(); ++c) {
        std::size_t piv = rank;
        while (piv < m.rows() && a[piv][c] == 0)
            ++piv;
        if (piv == m.rows())
            continue;
        std::swap(a[piv], a[rank]);
        for (std::size_t r = rank + 1; r < m.rows(); ++r)
            if (a[r][c] != 0) {
                const mpq_class f = a[r][c] / a[rank][c];
                for (std::size_t k = c; k < m.cols(); ++k)
                    a[r][k] -= f * a[rank][k];
            }
        ++rank;
    }
    return rank;
}

SparseMatrix from_dense(const DenseMatrix& d)
{
    SparseMatrix m(d.size(), d.empty() ? 0 : d[0].size());
    for (std::size_t c = 0; c < m.cols(); ++c) {
        SparseMatrix::Column col;
        for (std::size_t r = 0; r < m.rows(); ++r)
            col.emplace_back(r, d[r][c]);
        m.set_column(c, col);
    }
    return m;
}

bool every_letter_bracketed(const Monomial& m)
{
    for (const auto& w : m)
        if (w.size() < 2)
            return false;
    return true;
}

} // namespace

TEST_CASE("Smith normal form examples", "[hochschild][linalg]")
{
    const DenseMatrix A{{2, 0}, {0, 3}};
    const auto s = smith_normal_form(A, true);
    REQUIRE(s.invariant_factors.size() == 2);
    CHECK(s.invariant_factors[0] == 1);
    CHECK(s.invariant_factors[1] == 6);
    CHECK(verify_smith_certificate(A, s));

    const auto id = smith_normal_form(identity_matrix(4), true);
    CHECK(id.rank() == 4);
    for (const auto& f : id.invariant_factors)
        CHECK(f == 1);
    CHECK(verify_smith_certificate(identity_matrix(4), id));

    const DenseMatrix Z(3, std::vector<Integer>(2, 0));
    const auto z = smith_normal_form(Z, true);
    CHECK(z.rank() == 0);
    CHECK(verify_smith_certificate(Z, z));

    const DenseMatrix B{{2, 4, 4}, {-6, 6, 12}, {10, -4, -16}};
    const auto b = smith_normal_form(B, true);
    CHECK(b.invariant_factors == std::vector<Integer>{2, 6, 12});
    CHECK(verify_smith_certificate(B, b));
    CHECK(abs(determinant(B)) == 144);
    CHECK(rank(from_dense(B)) == 3);
}

TEST_CASE("invariant factors divide each other and match the rational rank", "[hochschild][linalg][property]")
{
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> entry(-3, 3);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t r = 1 + trial % 5, c = 1 + (trial / 5) % 5;
        DenseMatrix A(r, std::vector<Integer>(c));
        for (auto& row : A)
            for (auto& x : row)
                x = trial % 4 == 0 ? entry(rng) * 2 : entry(rng);
        const auto s = smith_normal_form(A, true);
        CHECK(verify_smith_certificate(A, s));
        CHECK(s.rank() == rank_q(from_dense(A)));
        for (std::size_t k = 0; k + 1 < s.invariant_factors.size(); ++k) {
            CHECK(s.invariant_factors[k] > 0);
            CHECK(s.invariant_factors[k + 1] % s.invariant_factors[k] == 0);
        }
    }
}

TEST_CASE("low levels of the complex", "[hochschild]")
{
    for (int n : {2, 3}) {
        const auto full = build_complex(n, 3, false);
        CHECK(full.dim(0, 0) == 1);
        CHECK(full.dim(1, 0) == 1);
        CHECK(full.dim(2, 0) == 1);
        CHECK(full.dim(2, 1) == 1);

        const auto norm = build_complex(n, 3, true);
        CHECK(norm.dim(0, 0) == 1);
        CHECK(norm.dim(1, 0) == 0);
        CHECK(norm.dim(2, 0) == 0);
        REQUIRE(norm.dim(2, 1) == 1);
        CHECK(norm.basis[2][1][0] == (Monomial{LieWord{1, 2}}));

        const auto t = hh_table(full, Coefficients::rational);
        REQUIRE(t.find(0, 0));
        CHECK(t.find(0, 0)->rank == 1);
    }
    CHECK_THROWS_AS(build_complex(2, 8, false), std::length_error);
    CHECK_THROWS(hh_table(2, 1, Coefficients::rational, false));
    const auto c = build_complex(2, 3, false);
    CHECK_THROWS_AS(cohomology(c, 3, 0, Coefficients::rational), std::out_of_range);
    // q off the grid has nothing in it
    CHECK(cohomology(c, 2, 1, Coefficients::rational).dim == 0);
}

TEST_CASE("differential is the alternating coface sum", "[hochschild][oracle]")
{
    const PoissonOperad op(3);
    const auto c = build_complex(3, 4, false);
    for (std::size_t p = 0; p < 4; ++p)
        for (std::size_t r = 0; r < std::max<std::size_t>(p, 1); ++r) {
            const auto d = c.d(p, r).dense();
            for (std::size_t k = 0; k < c.basis[p][r].size(); ++k) {
                PoissonElement e{p, {{c.basis[p][r][k], Rational(1)}}};
                PoissonElement sum{p + 1, {}};
                for (std::size_t i = 0; i <= p + 1; ++i) {
                    auto f = op.coface(i, e);
                    for (const auto& [m, v] : f.terms)
                        accumulate(sum.terms, m, i % 2 ? -v : v);
                }
                for (std::size_t row = 0; row < c.basis[p + 1][r].size(); ++row) {
                    auto it = sum.terms.find(c.basis[p + 1][r][row]);
                    const Integer want = it == sum.terms.end() ? Integer(0) : it->second.numerator();
                    CHECK(d[row][k] == want);
                }
            }
        }
}

TEST_CASE("d squares to zero", "[hochschild][property]")
{
    for (int n : {2, 3}) {
        const auto c = build_complex(n, 6, false);
        const Report r = check_d_squared(c);
        CHECK(r.passed());
        CHECK(r.checked() > 10);
        CHECK(check_d_squared(build_complex(n, 6, true)).passed());
    }
}

TEST_CASE("normalized basis is the all-bracketed monomials", "[hochschild][property]")
{
    const PoissonOperad op(2);
    for (std::size_t p = 0; p <= 7; ++p) {
        const auto& b = poisson_basis(p);
        for (std::size_t r = 0; r < std::max<std::size_t>(p, 1); ++r) {
            std::vector<Monomial> expected;
            for (std::size_t k = 0; k < b.slice_size(r); ++k) {
                const Monomial& m = b.monomials[b.slice_begin[r] + k];
                if (p == 0 || every_letter_bracketed(m))
                    expected.push_back(m);
            }
            const auto got = normalized_slice(op, p, r);
            CHECK(got == expected);
            // every surviving monomial has at most p/2 blocks: q >= p n / 2
            for (const auto& m : got) {
                CHECK(2 * m.size() <= p);
                CHECK(2 * r >= p);
            }
        }
    }
    CHECK(check_normalized_subcomplex(2, 6).passed());
    CHECK(check_normalized_subcomplex(3, 6).passed());
}

TEST_CASE("vanishing below the line q = p n / 2", "[hochschild]")
{
    for (int n : {2, 3, 4}) {
        const auto c = build_complex(n, 6, true);
        const auto t = hh_table(c, Coefficients::rational);
        for (const auto& e : t.entries)
            if (2 * e.q < static_cast<int>(e.p) * n) {
                CHECK(e.dim == 0);
                CHECK(e.rank == 0);
            }
    }
}

TEST_CASE("normalized and full complexes have the same cohomology", "[hochschild]")
{
    for (int n : {2, 3}) {
        const auto full = hh_table(n, 5, Coefficients::rational, false);
        const auto norm = hh_table(n, 5, Coefficients::rational, true);
        REQUIRE(full.entries.size() == norm.entries.size());
        for (const auto& e : full.entries) {
            const HHEntry* f = norm.find(e.p, e.q);
            REQUIRE(f);
            INFO("n = " << n << " p = " << e.p << " q = " << e.q);
            CHECK(f->rank == e.rank);
        }
    }
}

TEST_CASE("ranks agree with an independent elimination", "[hochschild][oracle]")
{
    const auto c = build_complex(2, 5, false);
    for (std::size_t p = 0; p < 5; ++p)
        for (std::size_t r = 0; r < std::max<std::size_t>(p, 1); ++r) {
            const std::size_t out = rank_q(c.d(p, r));
            const std::size_t in = p == 0 ? 0 : rank_q(c.d(p - 1, r));
            const auto e = cohomology(c, p, static_cast<int>(r) * 2, Coefficients::rational);
            CHECK(e.dim == c.dim(p, r));
            CHECK(e.rank == e.dim - out - in);
        }
}

TEST_CASE("a slice with zero differentials has rank equal to its dimension", "[hochschild]")
{
    CochainComplex c;
    c.n = 2;
    c.max_p = 2;
    c.basis.assign(3, std::vector<std::vector<Monomial>>(2));
    c.basis[1][0] = {Monomial{LieWord{1}}};
    c.basis[2][0] = {Monomial{LieWord{1}, LieWord{2}}};
    c.differential.assign(2, std::vector<SparseMatrix>(2));
    c.differential[0][0] = SparseMatrix(1, 0);
    c.differential[1][0] = SparseMatrix(1, 1);
    const auto e = cohomology(c, 1, 0, Coefficients::integral);
    CHECK(e.dim == 1);
    CHECK(e.rank == 1);
    CHECK(e.torsion.empty());
}

TEST_CASE("integral computation", "[hochschild]")
{
    const auto c = build_complex(2, 4, false);
    const Report r = check_integral_consistency(c);
    CHECK(r.passed());
    const auto tq = hh_table(c, Coefficients::rational);
    const auto tz = hh_table(c, Coefficients::integral);
    REQUIRE(tq.entries.size() == tz.entries.size());
    for (std::size_t k = 0; k < tq.entries.size(); ++k) {
        CHECK(tq.entries[k].rank == tz.entries[k].rank);
        const auto& tors = tz.entries[k].torsion;
        for (std::size_t i = 0; i + 1 < tors.size(); ++i)
            CHECK(tors[i + 1] % tors[i] == 0);
    }
}

TEST_CASE("table output shapes", "[hochschild]")
{
    const auto t = hh_table(3, 4, Coefficients::rational, false);
    const auto j = t.to_json();
    CHECK(j["n"] == 3);
    CHECK(j["max_p"] == 4);
    CHECK(j["coefficients"] == "rational");
    CHECK(j["normalized"] == false);
    CHECK_FALSE(j.contains("seconds_per_p"));
    CHECK(t.to_json(true).contains("seconds_per_p"));
    // p = 0..3 with r < max(p, 1): 1 + 1 + 2 + 3 bidegrees
    CHECK(j["entries"].size() == 7);

    const std::string csv = t.to_csv();
    std::istringstream in(csv);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line))
        lines.push_back(line);
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "q\\p,0,1,2,3");
    for (const auto& l : lines)
        CHECK(std::count(l.begin(), l.end(), ',') == 4);
    CHECK(lines[1].rfind("0,1", 0) == 0);
}
