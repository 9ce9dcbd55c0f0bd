#include <catch_amalgamated.hpp>

#include "operadkit/operad.hpp"
#include "operadkit/pair_operad.hpp"
#include "operadkit/poisson.hpp"

using namespace operadkit;

namespace {

// Arity bookkeeping is off by one: the right unit law fails.
struct OffByOneOperad {
    struct element_type {
        std::size_t n;
        friend bool operator==(const element_type&, const element_type&) = default;
    };
    std::size_t arity(const element_type& a) const { return a.n; }
    element_type compose(const element_type& a, std::size_t, const element_type& b) const
    {
        return {a.n + b.n - (b.n == 1 ? 0 : 1)};
    }
    element_type unit() const { return {1}; }
    bool equal(const element_type& a, const element_type& b) const { return a == b; }
    std::vector<element_type> samples(std::size_t k, int) const { return {{k}}; }
    nlohmann::json to_json(const element_type& a) const { return {{"n", a.n}}; }
};

// A sign slip: composition forgets the Koszul sign of the parallel law.
struct UnsignedPoisson : PoissonOperad {
    using PoissonOperad::PoissonOperad;
    PoissonElement negate(PoissonElement a) const { return a; }
};

} // namespace

TEST_CASE("associative operad", "[operad_core]")
{
    const AssociativeOperad op;
    AxiomBounds b;
    b.max_arity = 6;
    CHECK(check_operad_axioms(op, b).passed());
    CHECK(check_cosimplicial_identities(CosimplicialFromOperad<AssociativeOperad>(op), 8).passed());
    CHECK(check_structure_maps(op, 5).passed());
}

TEST_CASE("checkers catch a broken operad", "[operad_core]")
{
    const OffByOneOperad op;
    AxiomBounds b;
    b.max_arity = 3;
    const Report r = check_operad_axioms(op, b);
    CHECK_FALSE(r.passed());
    REQUIRE_FALSE(r.violations().empty());
    CHECK(r.to_json()["violations"][0].contains("witness"));
}

TEST_CASE("structure maps", "[operad_core]")
{
    const PoissonOperad op(2);
    const auto x = normalize(op.algebra(), "[x1,x2] x3");
    SECTION("corolla gives the identity")
    {
        VertexValues<PoissonOperad> vals{{VertexPath{}, x}};
        CHECK(structure_map(op, corolla(3), vals) == x);
    }
    SECTION("a graft is one partial composition")
    {
        const auto y = normalize(op.algebra(), "[x1,x2]");
        const TreeMorphism g = graft(3, 2, 2);
        VertexValues<PoissonOperad> vals{{VertexPath{}, x}, {VertexPath{1}, y}};
        CHECK(structure_map(op, g.source(), vals) == op.compose(x, 2, y));
    }
    SECTION("missing or mismatched decorations are rejected")
    {
        VertexValues<PoissonOperad> vals{{VertexPath{}, x}};
        CHECK_THROWS(structure_map(op, graft(3, 2, 2).source(), vals));
        CHECK_THROWS(structure_map(op, corolla(2), vals));
    }
}

TEST_CASE("contraction order independence for Poisson", "[operad_core][property]")
{
    for (int n : {2, 3}) {
        const PoissonOperad op(n);
        const Report r = check_structure_maps(op, 5, 11);
        INFO("n = " << n << " " << r.to_json().dump());
        CHECK(r.passed());
        CHECK(r.checked() > 100);
    }
}

TEST_CASE("dropping the Koszul sign is detected for odd brackets", "[operad_core]")
{
    const UnsignedPoisson odd(3);
    AxiomBounds b;
    b.max_arity = 2;
    b.include_nullary = false;
    CHECK_FALSE(check_operad_axioms(odd, b).passed());
    // even degree never needs the sign
    const UnsignedPoisson even(2);
    CHECK(check_operad_axioms(even, b).passed());
}

TEST_CASE("cofaces of the cosimplicial object", "[operad_core]")
{
    const PoissonOperad op(2);
    const CosimplicialFromOperad<PoissonOperad> c(op);
    const auto& alg = op.algebra();
    const auto mu = normalize(alg, "x1 x2");
    // d^1 (x1 x2) = (x1 x2) o_1 (x1 x2)
    CHECK(c.coface(1, mu) == normalize(alg, "x1 x2 x3"));
    // d^0 puts a new first variable in front, d^{n+1} a new last one
    const auto b = normalize(alg, "[x1,x2]");
    CHECK(c.coface(0, b) == normalize(alg, "x1 [x2,x3]"));
    CHECK(c.coface(3, b) == normalize(alg, "[x1,x2] x3"));
    CHECK_THROWS(c.coface(4, b));
    CHECK(c.codegeneracy(1, mu) == normalize(alg, "x1"));
    CHECK_THROWS(c.codegeneracy(0, mu));
}

TEST_CASE("coface orientation matches the 2-sphere boundary rules", "[operad_core]")
{
    const ChooseTwoOperad op;
    const CosimplicialFromOperad<ChooseTwoOperad> c(op);
    const auto x = op.samples(3, 0)[0];
    const auto d0 = c.coface(0, x);
    const auto d4 = c.coface(4, x);
    for (std::size_t j = 2; j <= 4; ++j)
        CHECK(d0.at(1, j).is_plus());
    for (std::size_t i = 1; i <= 3; ++i)
        CHECK(d4.at(i, 4).is_plus());
    CHECK(d0.at(2, 4) == x.at(1, 3));
    CHECK(d4.at(1, 3) == x.at(1, 3));
}
