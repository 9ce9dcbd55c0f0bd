#include <catch_amalgamated.hpp>

#include <optional>

#include "operadkit/operad.hpp"
#include "operadkit/pair_operad.hpp"

using namespace operadkit;

namespace {

// S^2 = Delta[2]/boundary: a non-basepoint n-simplex is a monotone surjection
// {0..n} -> {0,1,2}, and faces/degeneracies act by precomposition.
using Surjection = std::vector<int>;

Surjection from_pair(std::size_t n, std::size_t j, std::size_t k)
{
    Surjection f(n + 1);
    for (std::size_t x = 0; x <= n; ++x)
        f[x] = x < j ? 0 : (x < k ? 1 : 2);
    return f;
}

std::optional<std::pair<std::size_t, std::size_t>> to_pair(const Surjection& f)
{
    std::optional<std::size_t> j, k;
    for (std::size_t x = 0; x < f.size(); ++x) {
        if (!j && f[x] >= 1)
            j = x;
        if (!k && f[x] >= 2)
            k = x;
    }
    if (f.empty() || f.front() != 0 || !j || !k || *j == *k)
        return std::nullopt;
    return std::make_pair(*j, *k);
}

S2Element oracle_face(std::size_t n, std::size_t i, const S2Element& e)
{
    if (e.plus)
        return S2Element::basepoint(n - 1);
    const Surjection f = from_pair(n, e.j, e.k);
    Surjection g;
    for (std::size_t x = 0; x <= n; ++x)
        if (x != i)
            g.push_back(f[x]);
    const auto p = to_pair(g);
    return p ? S2Element::pair(n - 1, p->first, p->second) : S2Element::basepoint(n - 1);
}

S2Element oracle_degeneracy(std::size_t n, std::size_t i, const S2Element& e)
{
    if (e.plus)
        return S2Element::basepoint(n + 1);
    const Surjection f = from_pair(n, e.j, e.k);
    Surjection g;
    for (std::size_t x = 0; x <= n + 1; ++x)
        g.push_back(f[x <= i ? x : x - 1]);
    const auto p = to_pair(g);
    REQUIRE(p);
    return S2Element::pair(n + 1, p->first, p->second);
}

} // namespace

TEST_CASE("structure map of B on pairs", "[pair_operad]")
{
    const RpTree g = corolla(4);
    for (auto [i, j] : pairs_of(4))
        CHECK(b_structure_map(g, std::make_pair(i, j)) == PairSetElement::at({}, i, j));
    CHECK(b_structure_map(g, std::nullopt) == PairSetElement::basepoint());

    const RpTree t = graft(2, 2, 2).source();
    REQUIRE(t.to_string() == "(* (* *))");
    CHECK(b_structure_map(t, std::make_pair(1, 2)) == PairSetElement::at({}, 1, 2));
    CHECK(b_structure_map(t, std::make_pair(2, 3)) == PairSetElement::at({1}, 1, 2));
    CHECK(b_structure_map(t, std::make_pair(1, 3)) == PairSetElement::at({}, 1, 2));
    CHECK_THROWS(PairSetElement::at({}, 2, 2));
}

TEST_CASE("B functoriality: join description equals iterated composition", "[pair_operad][property]")
{
    for (std::size_t n = 2; n <= 5; ++n)
        for (const auto& t : enumerate_trees(n))
            for (auto [i, j] : pairs_of(n)) {
                const PairSetElement direct = b_structure_map(t, std::make_pair(i, j));
                CHECK_FALSE(direct.plus);
                CHECK(direct == b_structure_map_via_composition(t, i, j));
            }
    const ChooseTwoOperad op;
    const Report r = check_structure_maps(op, 5);
    CHECK(r.passed());
    CHECK(r.checked() > 0);
}

TEST_CASE("faces of the simplicial 2-sphere", "[pair_operad]")
{
    CHECK(s2_face(3, 2, S2Element::pair(3, 2, 3)) == S2Element::basepoint(2));
    CHECK(s2_face(3, 0, S2Element::pair(3, 1, 3)) == S2Element::basepoint(2));
    CHECK(s2_face(3, 2, S2Element::pair(3, 1, 2)) == S2Element::pair(2, 1, 2));
    CHECK(s2_face(3, 3, S2Element::pair(3, 1, 3)) == S2Element::basepoint(2));
    CHECK(s2_face(3, 0, S2Element::pair(3, 2, 3)) == S2Element::pair(2, 1, 2));
    CHECK_THROWS(s2_face(3, 4, S2Element::pair(3, 1, 2)));
    CHECK_THROWS(s2_face(0, 0, S2Element::basepoint(0)));
}

TEST_CASE("degeneracies of the simplicial 2-sphere", "[pair_operad]")
{
    CHECK(s2_degeneracy(2, 0, S2Element::pair(2, 1, 2)) == S2Element::pair(3, 2, 3));
    CHECK(s2_degeneracy(2, 2, S2Element::pair(2, 1, 2)) == S2Element::pair(3, 1, 2));
    for (std::size_t n = 0; n <= 5; ++n)
        for (std::size_t i = 0; i <= n; ++i)
            CHECK(s2_degeneracy(n, i, S2Element::basepoint(n)) == S2Element::basepoint(n + 1));
    CHECK_THROWS(s2_degeneracy(2, 3, S2Element::pair(2, 1, 2)));
}

TEST_CASE("face and degeneracy agree with the surjection model", "[pair_operad][property]")
{
    for (std::size_t n = 0; n <= 8; ++n)
        for (const auto& e : s2_level(n)) {
            if (n >= 1)
                for (std::size_t i = 0; i <= n; ++i)
                    CHECK(s2_face(n, i, e) == oracle_face(n, i, e));
            for (std::size_t i = 0; i <= n; ++i)
                CHECK(s2_degeneracy(n, i, e) == oracle_degeneracy(n, i, e));
        }
}

TEST_CASE("degeneracies are injective off the basepoint", "[pair_operad][property]")
{
    for (std::size_t n = 2; n <= 6; ++n)
        for (std::size_t i = 0; i <= n; ++i) {
            std::vector<S2Element> images;
            for (const auto& e : s2_level(n))
                if (!e.plus)
                    images.push_back(s2_degeneracy(n, i, e));
            for (std::size_t a = 0; a < images.size(); ++a)
                for (std::size_t b = a + 1; b < images.size(); ++b)
                    CHECK_FALSE(images[a] == images[b]);
        }
}

TEST_CASE("isomorphism with the cosimplicial object of B", "[pair_operad]")
{
    for (std::size_t n = 0; n <= 8; ++n)
        CHECK(s2_level(n).size() == n * (n - (n > 0 ? 1 : 0)) / 2 + 1);
    CHECK(s2_level(0).size() == 1);
    CHECK(s2_level(1).size() == 1);
    CHECK(s2_level(2).size() == 2);

    const Report small = check_s2_iso(2);
    CHECK(small.passed());
    const Report r = check_s2_iso(8);
    INFO(r.to_json().dump());
    CHECK(r.passed());
    CHECK(check_s2_simplicial_identities(8).passed());
    CHECK_THROWS(check_s2_iso(1));

    const ChooseTwoOperad op;
    CHECK(check_cosimplicial_identities(CosimplicialFromOperad<ChooseTwoOperad>(op), 8).passed());
}

TEST_CASE("B satisfies the operad axioms", "[pair_operad]")
{
    const ChooseTwoOperad op;
    AxiomBounds b;
    b.max_arity = 5;
    b.include_nullary = true;
    const Report r = check_operad_axioms(op, b);
    INFO(r.to_json().dump());
    CHECK(r.passed());
}
