#pragma once

// The choose-two operad B, the operads X^B of coordinates indexed by pairs of
// leaves, and the simplicial 2-sphere.
//
// B lives in the opposite of pointed finite sets, so a structure map of B is
// stored as the function of sets pointing the other way. Applying X^(-) turns
// it back into a covariant operad whose arity-n entry is a family of
// coordinates indexed by the pairs 1 <= i < j <= n; composition reads every
// output coordinate off the input it is pulled back from. This is the only
// place where the direction reversal happens.

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "operad.hpp"
#include "report.hpp"
#include "trees.hpp"

namespace operadkit {

/// Index of the pair (i, j), 1 <= i < j <= n, in lexicographic order.
inline std::size_t pair_index(std::size_t i, std::size_t j, std::size_t n)
{
    if (!(1 <= i && i < j && j <= n))
        throw std::out_of_range("pair (" + std::to_string(i) + "," + std::to_string(j) + ") out of range for n=" +
                                std::to_string(n));
    // pairs starting with 1..i-1 come first
    return (i - 1) * (2 * n - i) / 2 + (j - i - 1);
}

inline std::size_t pair_count(std::size_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

/// All pairs (i, j) with i < j in lexicographic order.
inline std::vector<std::pair<std::size_t, std::size_t>> pairs_of(std::size_t n)
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = i + 1; j <= n; ++j)
            out.emplace_back(i, j);
    return out;
}

template <class Coord>
struct PairFamily {
    std::size_t n = 0;
    std::vector<Coord> coords; // indexed by pair_index

    PairFamily() = default;
    explicit PairFamily(std::size_t arity, Coord fill = Coord{}) : n(arity), coords(pair_count(arity), fill) {}

    const Coord& at(std::size_t i, std::size_t j) const { return coords[pair_index(i, j, n)]; }
    Coord& at(std::size_t i, std::size_t j) { return coords[pair_index(i, j, n)]; }
};

/// X^B for a coordinate type. `Traits` supplies base(), equal(a,b), to_json(c)
/// and sample(arity, tag).
template <class Coord, class Traits>
class PairOperad {
public:
    using element_type = PairFamily<Coord>;
    using coord_type = Coord;

    explicit PairOperad(Traits traits = Traits{}) : traits_(std::move(traits)) {}
    const Traits& traits() const { return traits_; }

    std::size_t arity(const element_type& a) const { return a.n; }

    /// a o_i b. A pair of output leaves inside the block of b reads b; any
    /// other pair reads a at the collapsed labels.
    element_type compose(const element_type& a, std::size_t i, const element_type& b) const
    {
        if (i < 1 || i > a.n)
            throw std::out_of_range("composition position " + std::to_string(i) + " out of range for arity " +
                                    std::to_string(a.n));
        const std::size_t m = b.n;
        const std::size_t N = a.n + m - 1;
        element_type out;
        out.n = N;
        out.coords.reserve(pair_count(N));
        const std::size_t hi = i + m; // block is [i, hi)
        auto collapse = [&](std::size_t x) { return x < i ? x : (x < hi ? i : x - m + 1); };
        for (std::size_t p = 1; p <= N; ++p)
            for (std::size_t q = p + 1; q <= N; ++q) {
                if (p >= i && q < hi)
                    out.coords.push_back(b.at(p - i + 1, q - i + 1));
                else
                    out.coords.push_back(a.at(collapse(p), collapse(q)));
            }
        return out;
    }

    element_type unit() const { return element_type(1); }
    element_type nullary() const { return element_type(0); }
    element_type multiplication() const
    {
        element_type mu(2);
        mu.at(1, 2) = traits_.base();
        return mu;
    }

    /// Forgets leaf i; equal to composing with the nullary element at i.
    element_type contract_leaf(const element_type& a, std::size_t i) const
    {
        if (i < 1 || i > a.n)
            throw std::out_of_range("leaf " + std::to_string(i) + " out of range for arity " + std::to_string(a.n));
        element_type out;
        out.n = a.n - 1;
        out.coords.reserve(pair_count(out.n));
        auto up = [&](std::size_t x) { return x < i ? x : x + 1; };
        for (std::size_t p = 1; p <= out.n; ++p)
            for (std::size_t q = p + 1; q <= out.n; ++q)
                out.coords.push_back(a.at(up(p), up(q)));
        return out;
    }

    bool equal(const element_type& a, const element_type& b) const
    {
        if (a.n != b.n)
            return false;
        for (std::size_t k = 0; k < a.coords.size(); ++k)
            if (!traits_.equal(a.coords[k], b.coords[k]))
                return false;
        return true;
    }

    std::vector<element_type> samples(std::size_t k, int tag) const { return traits_.samples(k, tag); }

    nlohmann::json to_json(const element_type& a) const
    {
        nlohmann::json j;
        j["n"] = a.n;
        auto& u = j["u"] = nlohmann::json::object();
        for (auto [p, q] : pairs_of(a.n))
            u[std::to_string(p) + "," + std::to_string(q)] = traits_.to_json(a.at(p, q));
        return j;
    }

private:
    Traits traits_;
};

// ---------------------------------------------------------------------------
// Symbolic coordinates: the universal X^B. A label names the pair of an input
// family it was read from, so equality of labelled families is equality of the
// underlying maps of pointed sets.

struct PairLabel {
    int tag = -1;          // which input family; -1 for the basepoint
    std::size_t a = 0, b = 0;

    static PairLabel plus() { return {}; }
    bool is_plus() const { return tag < 0; }
    friend bool operator==(const PairLabel&, const PairLabel&) = default;
    friend auto operator<=>(const PairLabel&, const PairLabel&) = default;
};

struct PairLabelTraits {
    PairLabel base() const { return PairLabel::plus(); }
    bool equal(const PairLabel& x, const PairLabel& y) const { return x == y; }
    nlohmann::json to_json(const PairLabel& l) const
    {
        if (l.is_plus())
            return "+";
        return {{"tag", l.tag}, {"pair", {l.a, l.b}}};
    }
    std::vector<PairFamily<PairLabel>> samples(std::size_t k, int tag) const
    {
        PairFamily<PairLabel> f(k);
        for (auto [p, q] : pairs_of(k))
            f.at(p, q) = PairLabel{tag, p, q};
        return {f};
    }
};

using ChooseTwoOperad = PairOperad<PairLabel, PairLabelTraits>;

/// Element of the pointed set B(T): the basepoint or a pair at a vertex.
struct PairSetElement {
    bool plus = true;
    VertexPath vertex;
    std::size_t a = 0, b = 0;

    static PairSetElement basepoint() { return {}; }
    static PairSetElement at(VertexPath v, std::size_t a, std::size_t b)
    {
        if (!(a < b))
            throw std::invalid_argument("pair entries must increase");
        return {false, std::move(v), a, b};
    }
    friend bool operator==(const PairSetElement&, const PairSetElement&) = default;

    std::string to_string() const
    {
        if (plus)
            return "+";
        return path_to_string(vertex) + ":(" + std::to_string(a) + "," + std::to_string(b) + ")";
    }
};

/// The function of sets binom(n,2)_+ -> B(t) representing the morphism of B
/// induced by t -> corolla. Argument std::nullopt stands for the basepoint.
inline PairSetElement b_structure_map(const RpTree& t, std::optional<std::pair<std::size_t, std::size_t>> ij)
{
    if (!ij)
        return PairSetElement::basepoint();
    auto j = join_vertex(t, ij->first, ij->second);
    std::size_t a = j.label_i, b = j.label_j;
    if (a > b)
        std::swap(a, b);
    return PairSetElement::at(j.vertex, a, b);
}

/// The same map through X^B: decorate each vertex with its universal family and
/// read the composite. Used to cross-check the join description.
inline PairSetElement b_structure_map_via_composition(const RpTree& t, std::size_t i, std::size_t j)
{
    ChooseTwoOperad op;
    const auto verts = t.vertices();
    VertexValues<ChooseTwoOperad> vals;
    for (std::size_t v = 0; v < verts.size(); ++v)
        vals.emplace(verts[v], op.samples(t.node(verts[v]).arity(), static_cast<int>(v))[0]);
    auto whole = structure_map(op, t, vals);
    const PairLabel& l = whole.at(std::min(i, j), std::max(i, j));
    if (l.is_plus())
        return PairSetElement::basepoint();
    return PairSetElement::at(verts[static_cast<std::size_t>(l.tag)], l.a, l.b);
}

// ---------------------------------------------------------------------------
// Simplicial 2-sphere: level n is the set of pairs j < k in 1..n with a basepoint.

struct S2Element {
    std::size_t level = 0;
    bool plus = true;
    std::size_t j = 0, k = 0;

    static S2Element basepoint(std::size_t n) { return {n, true, 0, 0}; }
    static S2Element pair(std::size_t n, std::size_t j, std::size_t k)
    {
        if (!(1 <= j && j < k && k <= n))
            throw std::out_of_range("pair out of range for the level");
        return {n, false, j, k};
    }
    friend bool operator==(const S2Element&, const S2Element&) = default;
    nlohmann::json to_json() const
    {
        if (plus)
            return {{"level", level}, {"point", "+"}};
        return {{"level", level}, {"point", {j, k}}};
    }
};

inline std::vector<S2Element> s2_level(std::size_t n)
{
    std::vector<S2Element> out{S2Element::basepoint(n)};
    for (auto [j, k] : pairs_of(n))
        out.push_back(S2Element::pair(n, j, k));
    return out;
}

/// d_i : level n -> level n-1, 0 <= i <= n.
inline S2Element s2_face(std::size_t n, std::size_t i, const S2Element& e)
{
    if (n < 1 || i > n)
        throw std::out_of_range("face index out of range");
    if (e.level != n)
        throw std::invalid_argument("element is not at the requested level");
    if (e.plus)
        return S2Element::basepoint(n - 1);
    if (i == 0) {
        if (e.j == 1)
            return S2Element::basepoint(n - 1);
        return S2Element::pair(n - 1, e.j - 1, e.k - 1);
    }
    if (i == n) {
        if (e.k == n)
            return S2Element::basepoint(n - 1);
        return S2Element::pair(n - 1, e.j, e.k);
    }
    auto delta = [i](std::size_t x) { return x <= i ? x : x - 1; };
    const std::size_t a = delta(e.j), b = delta(e.k);
    if (a == b)
        return S2Element::basepoint(n - 1);
    return S2Element::pair(n - 1, a, b);
}

/// s_i : level n -> level n+1, 0 <= i <= n.
inline S2Element s2_degeneracy(std::size_t n, std::size_t i, const S2Element& e)
{
    if (i > n)
        throw std::out_of_range("degeneracy index out of range");
    if (e.level != n)
        throw std::invalid_argument("element is not at the requested level");
    if (e.plus)
        return S2Element::basepoint(n + 1);
    auto sigma = [i](std::size_t x) { return x <= i ? x : x + 1; };
    return S2Element::pair(n + 1, sigma(e.j), sigma(e.k));
}

/// The bijection between level n of the cosimplicial object of B and S^2_n,
/// tested against every face and degeneracy up to max_level.
inline Report check_s2_iso(std::size_t max_level)
{
    if (max_level < 2)
        throw std::invalid_argument("max level must be at least 2");
    Report r("s2-iso");
    ChooseTwoOperad op;
    CosimplicialFromOperad<ChooseTwoOperad> cos(op);

    // Label read at (p,q) of a transformed universal family -> point of S^2.
    auto to_s2 = [](std::size_t level, const PairLabel& l) {
        return l.is_plus() ? S2Element::basepoint(level) : S2Element::pair(level, l.a, l.b);
    };

    for (std::size_t n = 0; n <= max_level; ++n) {
        const auto level = s2_level(n);
        // the cosimplicial level is X^{binom(n,2)_+}; its index set has one
        // element per pair plus the basepoint
        const std::size_t size = 1 + op.samples(n, 0)[0].coords.size();
        r.expect(size == level.size() && size == n * (n == 0 ? 0 : n - 1) / 2 + 1, "cardinality",
                 [&] { return nlohmann::json{{"level", n}, {"size", size}, {"s2_size", level.size()}}; });
    }

    for (std::size_t n = 0; n < max_level; ++n) {
        const auto x = op.samples(n, 0)[0];
        // coface d^i at level n corresponds to the face d_i of level n+1
        for (std::size_t i = 0; i <= n + 1; ++i) {
            const auto y = cos.coface(i, x);
            for (const auto& e : s2_level(n + 1)) {
                S2Element expect = s2_face(n + 1, i, e);
                S2Element got = e.plus ? S2Element::basepoint(n) : to_s2(n, y.at(e.j, e.k));
                r.expect(got == expect, "face", [&] {
                    return nlohmann::json{{"level", n + 1}, {"map", "face"}, {"index", i},
                                          {"witness", {{"input", e.to_json()}, {"expected", expect.to_json()},
                                                       {"got", got.to_json()}}}};
                });
            }
        }
    }
    for (std::size_t n = 1; n <= max_level; ++n) {
        const auto x = op.samples(n, 0)[0];
        // codegeneracy s^i (forget leaf i) corresponds to the degeneracy s_{i-1}
        for (std::size_t i = 1; i <= n; ++i) {
            const auto y = cos.codegeneracy(i, x);
            for (const auto& e : s2_level(n - 1)) {
                S2Element expect = s2_degeneracy(n - 1, i - 1, e);
                S2Element got = e.plus ? S2Element::basepoint(n) : to_s2(n, y.at(e.j, e.k));
                r.expect(got == expect, "degeneracy", [&] {
                    return nlohmann::json{{"level", n - 1}, {"map", "degeneracy"}, {"index", i - 1},
                                          {"witness", {{"input", e.to_json()}, {"expected", expect.to_json()},
                                                       {"got", got.to_json()}}}};
                });
            }
        }
    }
    return r;
}

/// Simplicial identities of S^2 itself, on every element up to max_level.
inline Report check_s2_simplicial_identities(std::size_t max_level)
{
    Report r("s2-simplicial");
    auto d = [](std::size_t n, std::size_t i, const S2Element& e) { return s2_face(n, i, e); };
    auto s = [](std::size_t n, std::size_t i, const S2Element& e) { return s2_degeneracy(n, i, e); };
    for (std::size_t n = 0; n <= max_level; ++n)
        for (const auto& e : s2_level(n)) {
            auto wit = [&](const char* rel, std::size_t i, std::size_t j) {
                return [&, rel, i, j] { return nlohmann::json{{"relation", rel}, {"i", i}, {"j", j}, {"x", e.to_json()}}; };
            };
            if (n >= 2)
                for (std::size_t j = 1; j <= n; ++j)
                    for (std::size_t i = 0; i < j; ++i)
                        r.expect(d(n - 1, i, d(n, j, e)) == d(n - 1, j - 1, d(n, i, e)), "dd", wit("dd", i, j));
            for (std::size_t j = 0; j <= n; ++j)
                for (std::size_t i = 0; i <= j; ++i)
                    r.expect(s(n + 1, i, s(n, j, e)) == s(n + 1, j + 1, s(n, i, e)), "ss", wit("ss", i, j));
            for (std::size_t j = 0; j <= n; ++j)
                for (std::size_t i = 0; i <= n + 1; ++i) {
                    S2Element lhs = d(n + 1, i, s(n, j, e));
                    S2Element rhs;
                    if (i < j)
                        rhs = s(n - 1, j - 1, d(n, i, e));
                    else if (i == j || i == j + 1)
                        rhs = e;
                    else
                        rhs = s(n - 1, j, d(n, i - 1, e));
                    r.expect(lhs == rhs, "ds", wit("ds", i, j));
                }
        }
    return r;
}

} // namespace operadkit
