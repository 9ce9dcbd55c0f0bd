#include <catch_amalgamated.hpp>

#include <functional>
#include <numeric>
#include <random>
#include <set>

#include "operadkit/linalg.hpp"
#include "operadkit/operad.hpp"
#include "operadkit/poisson.hpp"

using namespace operadkit;

namespace {

// ---------------------------------------------------------------------------
// Oracle: Lie words live in the tensor algebra as graded commutators for the
// shifted degree (letters * n); a Poisson monomial is a tuple of such blocks
// in the graded commutative algebra, blocks of degree (letters - 1) * n.
// Brackets of products expand by the derivation rule. No normal forms are
// used anywhere; elements are compared after full expansion.

using Word = std::vector<int>;
using Tuple = std::vector<Word>;
using Vec = std::map<Tuple, Rational>;

struct Oracle {
    int n;

    int deg(const Word& w) const { return (static_cast<int>(w.size()) - 1) * n; }
    int deg(const Tuple& t) const
    {
        int d = 0;
        for (const auto& w : t)
            d += deg(w);
        return d;
    }

    static void add(Vec& v, const Tuple& t, const Rational& c)
    {
        if (c.is_zero())
            return;
        auto [it, fresh] = v.emplace(t, c);
        if (!fresh) {
            it->second += c;
            if (it->second.is_zero())
                v.erase(it);
        }
    }

    // blocks sorted by least letter, with the Koszul sign
    void add_sorted(Vec& v, Tuple t, Rational c) const
    {
        auto least = [](const Word& w) { return *std::min_element(w.begin(), w.end()); };
        for (std::size_t a = 1; a < t.size(); ++a)
            for (std::size_t b = a; b > 0 && least(t[b]) < least(t[b - 1]); --b) {
                if (deg(t[b]) * deg(t[b - 1]) % 2)
                    c = -c;
                std::swap(t[b], t[b - 1]);
            }
        add(v, t, c);
    }

    Vec product(const Vec& x, const Vec& y) const
    {
        Vec out;
        for (const auto& [a, ca] : x)
            for (const auto& [b, cb] : y) {
                Tuple t = a;
                t.insert(t.end(), b.begin(), b.end());
                add_sorted(out, t, ca * cb);
            }
        return out;
    }

    Vec single(const Tuple& t) const
    {
        Vec v;
        add_sorted(v, t, Rational(1));
        return v;
    }

    Vec bracket_mono(const Tuple& A, const Tuple& B) const
    {
        if (A.empty() || B.empty())
            return {};
        if (A.size() > 1) {
            // [a X, Y] = a [X,Y] + (-1)^{|X|(|Y|+n)} [a,Y] X
            const Tuple a{A[0]}, X(A.begin() + 1, A.end());
            Vec out = product(single(a), bracket_mono(X, B));
            const bool neg = deg(X) * (deg(B) + n) % 2;
            for (const auto& [t, c] : product(bracket_mono(a, B), single(X)))
                add(out, t, neg ? -c : c);
            return out;
        }
        if (B.size() > 1) {
            // [a, b Y] = [a,b] Y + (-1)^{(|a|+n)|b|} b [a,Y]
            const Tuple b{B[0]}, Y(B.begin() + 1, B.end());
            Vec out = product(bracket_mono(A, b), single(Y));
            const bool neg = (deg(A) + n) * deg(b) % 2;
            for (const auto& [t, c] : product(single(b), bracket_mono(A, Y)))
                add(out, t, neg ? -c : c);
            return out;
        }
        // graded commutator u v - (-1)^{(|u|+n)(|v|+n)} v u in the tensor algebra
        const Word& u = A[0];
        const Word& v = B[0];
        Word uv = u, vu = v;
        uv.insert(uv.end(), v.begin(), v.end());
        vu.insert(vu.end(), u.begin(), u.end());
        Vec out;
        add(out, {uv}, Rational(1));
        add(out, {vu}, (deg(u) + n) * (deg(v) + n) % 2 ? Rational(1) : Rational(-1));
        return out;
    }

    Vec bracket(const Vec& x, const Vec& y) const
    {
        Vec out;
        for (const auto& [a, ca] : x)
            for (const auto& [b, cb] : y)
                for (const auto& [t, c] : bracket_mono(a, b))
                    add(out, t, ca * cb * c);
        return out;
    }
};

// Expressions, kept separate from the library's parser.
struct Expr {
    enum Kind { var, prod, br } kind = var;
    int x = 0;
    std::vector<Expr> args;
    static Expr v(int i) { return {var, i, {}}; }
    static Expr b(Expr a, Expr c) { return {br, 0, {std::move(a), std::move(c)}}; }
    static Expr p(std::vector<Expr> fs) { return {prod, 0, std::move(fs)}; }

    std::string infix() const
    {
        switch (kind) {
        case var: return "x" + std::to_string(x);
        case br: return "[" + args[0].infix() + "," + args[1].infix() + "]";
        case prod: {
            std::string s;
            for (std::size_t k = 0; k < args.size(); ++k)
                s += (k ? " " : "") + (args[k].kind == prod ? "(" + args[k].infix() + ")" : args[k].infix());
            return args.empty() ? "1" : s;
        }
        }
        return "";
    }
};

Vec eval(const Oracle& o, const Expr& e)
{
    switch (e.kind) {
    case Expr::var: return o.single({{e.x}});
    case Expr::br: return o.bracket(eval(o, e.args[0]), eval(o, e.args[1]));
    case Expr::prod: {
        Vec acc = o.single({});
        for (const auto& f : e.args)
            acc = o.product(acc, eval(o, f));
        return acc;
    }
    }
    return {};
}

// A library monomial read as a left-normed expression.
Expr to_expr(const Monomial& m, const std::function<int(int)>& relabel = [](int l) { return l; })
{
    std::vector<Expr> blocks;
    for (const auto& w : m) {
        Expr e = Expr::v(relabel(w[0]));
        for (std::size_t k = 1; k < w.size(); ++k)
            e = Expr::b(e, Expr::v(relabel(w[k])));
        blocks.push_back(e);
    }
    return Expr::p(blocks);
}

Vec expand(const Oracle& o, const PoissonElement& e)
{
    Vec out;
    for (const auto& [m, c] : e.terms)
        for (const auto& [t, k] : eval(o, to_expr(m)))
            Oracle::add(out, t, c * k);
    return out;
}

Expr substitute(const Expr& e, int i, const Expr& b)
{
    if (e.kind == Expr::var)
        return e.x == i ? b : e;
    Expr out = e;
    for (auto& a : out.args)
        a = substitute(a, i, b);
    return out;
}

// a o_i b by substitution into the infix form of a, with the Koszul sign for
// moving b past the bracket commas to the right of x_i.
Vec oracle_compose(const Oracle& o, const PoissonElement& a, std::size_t i, const PoissonElement& b)
{
    Vec out;
    const int I = static_cast<int>(i), kb = static_cast<int>(b.arity);
    for (const auto& [ma, ca] : a.terms)
        for (const auto& [mb, cb] : b.terms) {
            // letters above i move up by |b| - 1, x_i becomes the marker x0
            const Expr ea = to_expr(ma, [&](int l) { return l == I ? 0 : (l > I ? l + kb - 1 : l); });
            const std::string s = ea.infix();
            const std::size_t at = s.find("x0");
            int commas = 0;
            for (std::size_t k = at; k < s.size(); ++k)
                commas += s[k] == ',';
            const int deg_b = static_cast<int>(bracket_count(mb)) * o.n;
            const bool neg = commas * o.n * deg_b % 2;
            const Expr e = substitute(ea, 0, to_expr(mb, [&](int l) { return l + I - 1; }));
            for (const auto& [t, k] : eval(o, e))
                Oracle::add(out, t, neg ? -(ca * cb * k) : ca * cb * k);
        }
    return out;
}

// Random bracket/product expression in the variables of `xs`.
Expr random_expr(std::vector<int> xs, std::mt19937_64& rng)
{
    if (xs.size() == 1)
        return Expr::v(xs[0]);
    std::uniform_int_distribution<std::size_t> cut(1, xs.size() - 1);
    const std::size_t c = cut(rng);
    std::vector<int> left(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(c));
    std::vector<int> right(xs.begin() + static_cast<std::ptrdiff_t>(c), xs.end());
    const Expr a = random_expr(left, rng), b = random_expr(right, rng);
    if (rng() % 3 == 0)
        return Expr::p({a, b});
    return Expr::b(a, b);
}

std::string lib_text(const Expr& e) { return e.kind == Expr::prod && e.args.size() == 1 ? e.args[0].infix() : e.infix(); }

std::size_t factorial(std::size_t k) { return k <= 1 ? 1 : k * factorial(k - 1); }

// unsigned Stirling numbers of the first kind: permutations of k with c cycles
std::size_t stirling1(std::size_t k, std::size_t c)
{
    if (k == 0)
        return c == 0 ? 1 : 0;
    if (c == 0)
        return 0;
    return (k - 1) * stirling1(k - 1, c) + stirling1(k - 1, c - 1);
}

} // namespace

TEST_CASE("small bases", "[poisson]")
{
    for (int n : {1, 2, 3}) {
        const PoissonAlgebra alg(n);
        const auto b2 = basis(n, 2);
        REQUIRE(b2.size() == 2);
        CHECK(b2[0] == normalize(alg, "x1 x2"));
        CHECK(b2[1] == normalize(alg, "[x1,x2]"));

        const auto b3 = basis(n, 3);
        REQUIRE(b3.size() == 6);
        std::set<std::string> got;
        for (const auto& e : b3)
            got.insert(e.to_string());
        CHECK(got.count(normalize(alg, "x1 x2 x3").to_string()));
        CHECK(got.count(normalize(alg, "[x1,x2] x3").to_string()));
        CHECK(got.count(normalize(alg, "[x1,x3] x2").to_string()));
        CHECK(got.count(normalize(alg, "x1 [x2,x3]").to_string()));
        CHECK(b3[0].to_string() == "x1 x2 x3");
    }
    CHECK(basis(2, 0).size() == 1);
    CHECK(basis(2, 1).size() == 1);
    CHECK_THROWS(basis(0, 3));
}

TEST_CASE("dimensions: k! in total, Stirling numbers per degree", "[poisson][property]")
{
    for (std::size_t k = 0; k <= 7; ++k) {
        const auto& b = poisson_basis(k);
        CHECK(b.monomials.size() == factorial(k));
        for (std::size_t r = 0; r < k; ++r)
            CHECK(b.slice_size(r) == stirling1(k, k - r));
        for (int n : {2, 3}) {
            std::size_t total = 0;
            for (std::size_t r = 0; r < std::max<std::size_t>(k, 1); ++r)
                total += b.slice_size(r);
            CHECK(total == factorial(k));
            CHECK(basis(n, k).size() == factorial(k));
        }
    }
}

TEST_CASE("normalize examples", "[poisson]")
{
    for (int n : {1, 2, 3, 4}) {
        const PoissonAlgebra alg(n);
        CHECK(normalize(alg, "[x1, x2 x3]") == normalize(alg, "[x1,x2] x3 + x2 [x1,x3]"));
        CHECK(normalize(alg, "x2 x1") == normalize(alg, "x1 x2"));
        const auto swapped = normalize(alg, "[x2,x1]");
        if (n % 2)
            CHECK(swapped == normalize(alg, "[x1,x2]"));
        else
            CHECK(swapped == normalize(alg, "-[x1,x2]"));
    }
    const PoissonAlgebra alg(2);
    CHECK_THROWS(normalize(alg, "[x1,x1]"));
    CHECK_THROWS(normalize(alg, "[x1,x2"));
    CHECK_THROWS(normalize(alg, "x1 x3"));
}

TEST_CASE("basis expands to independent tensors", "[poisson][oracle]")
{
    for (int n : {2, 3}) {
        const Oracle o{n};
        for (std::size_t k = 1; k <= 5; ++k) {
            std::map<Tuple, std::size_t> row;
            std::vector<Vec> cols;
            for (const auto& e : basis(n, k)) {
                cols.push_back(expand(o, e));
                for (const auto& [t, c] : cols.back())
                    row.emplace(t, row.size());
            }
            SparseMatrix M(row.size(), cols.size());
            for (std::size_t j = 0; j < cols.size(); ++j) {
                SparseMatrix::Column col;
                for (const auto& [t, c] : cols[j]) {
                    REQUIRE(c.is_integer());
                    col.emplace_back(row.at(t), c.numerator());
                }
                M.set_column(j, col);
            }
            CHECK(rank(M) == factorial(k));
        }
    }
}

TEST_CASE("normalize agrees with the tensor oracle", "[poisson][oracle]")
{
    std::mt19937_64 rng(20240611);
    for (int n : {1, 2, 3, 4}) {
        const PoissonAlgebra alg(n);
        const Oracle o{n};
        for (int trial = 0; trial < 150; ++trial) {
            const std::size_t k = 2 + trial % 5;
            std::vector<int> xs(k);
            std::iota(xs.begin(), xs.end(), 1);
            std::shuffle(xs.begin(), xs.end(), rng);
            const Expr e = random_expr(xs, rng);
            const std::string text = lib_text(e);
            INFO("n = " << n << ", " << text);
            CHECK(expand(o, normalize(alg, text)) == eval(o, e));
        }
    }
}

TEST_CASE("composition examples", "[poisson]")
{
    const PoissonOperad op(2);
    const auto& alg = op.algebra();
    const auto mu = normalize(alg, "x1 x2");
    CHECK(op.compose(mu, 2, mu) == normalize(alg, "x1 x2 x3"));
    CHECK(op.compose(normalize(alg, "[x1,x2]"), 2, mu) == normalize(alg, "[x1,x2] x3 + x2 [x1,x3]"));
    for (const auto& a : basis(2, 3))
        for (std::size_t i = 1; i <= 3; ++i)
            CHECK(op.compose(a, i, op.unit()) == a);
    CHECK_THROWS(op.compose(mu, 3, mu));
}

TEST_CASE("composition agrees with substitution in the oracle", "[poisson][oracle]")
{
    for (int n : {2, 3}) {
        const PoissonOperad op(n);
        const Oracle o{n};
        for (std::size_t ka = 1; ka <= 3; ++ka)
            for (std::size_t kb = 0; kb <= 3; ++kb)
                for (const auto& a : basis(n, ka))
                    for (const auto& b : basis(n, kb))
                        for (std::size_t i = 1; i <= ka; ++i) {
                            INFO("n = " << n << ": (" << a.to_string() << ") o_" << i << " (" << b.to_string() << ")");
                            CHECK(expand(o, op.compose(a, i, b)) == oracle_compose(o, a, i, b));
                        }
    }
}

TEST_CASE("codegeneracies and cofaces", "[poisson]")
{
    const PoissonOperad op(2);
    const auto& alg = op.algebra();
    CHECK(op.codegeneracy(1, normalize(alg, "x1 x2")) == normalize(alg, "x1"));
    CHECK(op.codegeneracy(1, normalize(alg, "[x1,x2]")).is_zero());
    CHECK(op.codegeneracy(2, normalize(alg, "[x1,x3] x2")) == normalize(alg, "[x1,x2]"));
    CHECK_THROWS(op.codegeneracy(3, normalize(alg, "x1 x2")));

    CHECK(op.coface(0, normalize(alg, "x1")) == normalize(alg, "x1 x2"));
    CHECK(op.coface(1, normalize(alg, "[x1,x2]")) == normalize(alg, "[x1,x3] x2 + x1 [x2,x3]"));
    const auto e = normalize(alg, "[x1,x3] x2");
    CHECK(op.coface(4, e) == normalize(alg, "[x1,x3] x2 x4"));
    CHECK_THROWS(op.coface(5, e));
}

TEST_CASE("codegeneracy kills exactly the bracketed variables", "[poisson][property]")
{
    const PoissonOperad op(3);
    for (std::size_t k = 1; k <= 6; ++k)
        for (const auto& e : basis(3, k))
            for (std::size_t i = 1; i <= k; ++i) {
                const Monomial& m = e.terms.begin()->first;
                bool free = false;
                for (const auto& w : m)
                    free = free || (w.size() == 1 && w[0] == i);
                const auto s = op.codegeneracy(i, e);
                CHECK(s.is_zero() == !free);
                if (free)
                    CHECK(op.degree(s) == op.degree(e));
            }
}

TEST_CASE("degrees add under composition", "[poisson][property]")
{
    const PoissonOperad op(3);
    for (std::size_t ka = 1; ka <= 3; ++ka)
        for (std::size_t kb = 1; kb <= 3; ++kb)
            for (const auto& a : basis(3, ka))
                for (const auto& b : basis(3, kb))
                    for (std::size_t i = 1; i <= ka; ++i) {
                        const auto c = op.compose(a, i, b);
                        if (!c.is_zero())
                            CHECK(op.degree(c) == op.degree(a) + op.degree(b));
                    }
}

TEST_CASE("operad axioms and cosimplicial identities", "[poisson]")
{
    for (int n : {2, 3}) {
        const PoissonOperad op(n);
        AxiomBounds b;
        b.max_arity = 4;
        b.max_total = 6;
        b.include_nullary = true;
        b.random_triples = 1000;
        b.seed = 5;
        const Report r = check_operad_axioms(op, b);
        INFO("n = " << n << " " << r.to_json().dump());
        CHECK(r.passed());
        const Report c = check_cosimplicial_identities(CosimplicialFromOperad<PoissonOperad>(op), 6);
        CHECK(c.passed());
    }
}

TEST_CASE("the other Leibniz sign breaks the axioms", "[poisson]")
{
    // guard on the convention: with the extra 1 in the exponent the
    // axioms fail once brackets have odd degree
    PoissonConventions conv;
    conv.leibniz_shift = 1;
    const PoissonOperad op(3, conv);
    AxiomBounds b;
    b.max_arity = 3;
    b.max_total = 5;
    b.include_nullary = false;
    CHECK_FALSE(check_operad_axioms(op, b).passed());
}

TEST_CASE("json round trip", "[poisson]")
{
    const PoissonOperad op(3);
    const auto e = normalize(op.algebra(), "2 [x1,x3] x2 - 1/3 x1 [x2,x3]");
    CHECK(PoissonOperad::from_json(op.to_json(e), op.algebra()) == e);
}
