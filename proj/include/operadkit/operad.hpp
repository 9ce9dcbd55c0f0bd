#pragma once

// Generic non-symmetric operads: structure maps on decorated trees, operads
// with multiplication, their cosimplicial objects, and axiom checkers.

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "random.hpp"
#include "report.hpp"
#include "trees.hpp"

namespace operadkit {

template <class Op>
concept Operad = requires(const Op& op, const typename Op::element_type& a, std::size_t i, int tag) {
    { op.arity(a) } -> std::convertible_to<std::size_t>;
    { op.compose(a, i, a) } -> std::convertible_to<typename Op::element_type>;
    { op.unit() } -> std::convertible_to<typename Op::element_type>;
    { op.equal(a, a) } -> std::convertible_to<bool>;
    { op.samples(i, tag) } -> std::convertible_to<std::vector<typename Op::element_type>>;
    { op.to_json(a) } -> std::convertible_to<nlohmann::json>;
};

/// Operads of graded objects; the parallel composition law picks up a Koszul sign.
template <class Op>
concept GradedOperad = Operad<Op> && requires(const Op& op, const typename Op::element_type& a) {
    { op.degree(a) } -> std::convertible_to<int>;
    { op.negate(a) } -> std::convertible_to<typename Op::element_type>;
};

/// An operad with a chosen image of the associative operad. Leaf contraction is
/// the map induced by forgetting a leaf (composition with the nullary element).
template <class Op>
concept OperadWithMultiplication =
    Operad<Op> && requires(const Op& op, const typename Op::element_type& a, std::size_t i) {
        { op.multiplication() } -> std::convertible_to<typename Op::element_type>;
        { op.contract_leaf(a, i) } -> std::convertible_to<typename Op::element_type>;
    };

// ---------------------------------------------------------------------------
// Decorated trees

template <class E>
struct DecoratedVertex {
    bool leaf = false;
    std::optional<E> value;
    VertexPath origin; // path of this vertex in the original tree
    std::vector<DecoratedVertex> children;
};

enum class ContractionOrder { deepest_rightmost, top_down, left_first, random };

inline const char* to_string(ContractionOrder o)
{
    switch (o) {
    case ContractionOrder::deepest_rightmost: return "deepest-rightmost";
    case ContractionOrder::top_down: return "top-down";
    case ContractionOrder::left_first: return "left-first";
    case ContractionOrder::random: return "random";
    }
    return "?";
}

namespace detail {

template <class Op, class E>
DecoratedVertex<E> decorate(const Op& op, const TreeNode& n, VertexPath& p, const std::map<VertexPath, E>& values)
{
    DecoratedVertex<E> d;
    d.leaf = n.leaf;
    d.origin = p;
    if (!n.leaf) {
        auto it = values.find(p);
        if (it == values.end())
            throw std::invalid_argument("no element assigned to vertex " + path_to_string(p));
        if (op.arity(it->second) != n.arity())
            throw std::invalid_argument("arity mismatch at vertex " + path_to_string(p) + ": vertex has " +
                                        std::to_string(n.arity()) + " edges, element has arity " +
                                        std::to_string(op.arity(it->second)));
        d.value = it->second;
        for (std::size_t c = 0; c < n.children.size(); ++c) {
            p.push_back(c);
            d.children.push_back(decorate(op, n.children[c], p, values));
            p.pop_back();
        }
    }
    return d;
}

template <class Op, class E>
int subtree_degree(const Op& op, const DecoratedVertex<E>& v)
{
    if (v.leaf)
        return 0;
    int d = op.degree(*v.value);
    for (const auto& c : v.children)
        d += subtree_degree(op, c);
    return d;
}

// Contracts the edge from `parent` to its child at index c. Decorations form
// a tensor in pre-order, so for graded operads the child first moves past
// the subtrees of its left siblings, with the Koszul sign. That makes every
// contraction order agree.
template <class Op, class E>
void contract_child(const Op& op, DecoratedVertex<E>& parent, std::size_t c)
{
    DecoratedVertex<E> child = std::move(parent.children[c]);
    parent.value = op.compose(*parent.value, c + 1, *child.value);
    if constexpr (GradedOperad<Op>) {
        int passed = 0;
        for (std::size_t k = 0; k < c; ++k)
            passed += subtree_degree(op, parent.children[k]);
        if ((passed * op.degree(*child.value)) % 2 != 0)
            parent.value = op.negate(*parent.value);
    }
    parent.children.erase(parent.children.begin() + static_cast<std::ptrdiff_t>(c));
    parent.children.insert(parent.children.begin() + static_cast<std::ptrdiff_t>(c),
                           std::make_move_iterator(child.children.begin()),
                           std::make_move_iterator(child.children.end()));
}

template <class E>
struct EdgeSlot {
    DecoratedVertex<E>* parent;
    std::size_t child;
    std::size_t depth;
};

template <class E>
void contractible_edges(DecoratedVertex<E>& v, std::size_t depth, const std::set<EdgeId>* only,
                        std::vector<EdgeSlot<E>>& out)
{
    for (std::size_t c = 0; c < v.children.size(); ++c) {
        auto& ch = v.children[c];
        if (ch.leaf)
            continue;
        if (!only || only->count(ch.origin))
            out.push_back({&v, c, depth + 1});
        contractible_edges(ch, depth + 1, only, out);
    }
}

// Pre-order position list of edges; picks one according to the order policy.
template <class E>
std::optional<EdgeSlot<E>> pick_edge(DecoratedVertex<E>& root, const std::set<EdgeId>* only,
                                     ContractionOrder order, std::mt19937_64& rng)
{
    std::vector<EdgeSlot<E>> es;
    contractible_edges(root, 0, only, es);
    if (es.empty())
        return std::nullopt;
    switch (order) {
    case ContractionOrder::deepest_rightmost: {
        // last among the deepest in pre-order = rightmost deepest
        std::size_t best = 0;
        for (std::size_t k = 1; k < es.size(); ++k)
            if (es[k].depth >= es[best].depth)
                best = k;
        return es[best];
    }
    case ContractionOrder::top_down: {
        std::size_t best = 0;
        for (std::size_t k = 1; k < es.size(); ++k)
            if (es[k].depth < es[best].depth)
                best = k;
        return es[best];
    }
    case ContractionOrder::left_first:
        return es.front();
    case ContractionOrder::random: {
        std::uniform_int_distribution<std::size_t> d(0, es.size() - 1);
        return es[d(rng)];
    }
    }
    return es.front();
}

template <class E>
void collect_values(const DecoratedVertex<E>& v, VertexPath& p, std::map<VertexPath, E>& out)
{
    if (v.leaf)
        return;
    out.emplace(p, *v.value);
    for (std::size_t c = 0; c < v.children.size(); ++c) {
        p.push_back(c);
        collect_values(v.children[c], p, out);
        p.pop_back();
    }
}

} // namespace detail

template <class Op>
using VertexValues = std::map<VertexPath, typename Op::element_type>;

/// Value of the operad on c_E applied to the decorations of t: the decorations
/// of contract(t, E), keyed by target vertex path.
template <Operad Op>
VertexValues<Op> apply_morphism(const Op& op, const TreeMorphism& m, const VertexValues<Op>& values,
                                ContractionOrder order = ContractionOrder::deepest_rightmost,
                                std::uint64_t seed = 0)
{
    using E = typename Op::element_type;
    VertexPath p;
    auto root = detail::decorate<Op, E>(op, m.source().root(), p, values);
    std::mt19937_64 rng(seed);
    while (auto e = detail::pick_edge(root, &m.contracted_edges(), order, rng))
        detail::contract_child(op, *e->parent, e->child);
    VertexValues<Op> out;
    VertexPath q;
    detail::collect_values(root, q, out);
    return out;
}

/// The map induced by the morphism from t to its corolla, by iterated
/// partial compositions in the requested order.
template <Operad Op>
typename Op::element_type structure_map(const Op& op, const RpTree& t, const VertexValues<Op>& values,
                                         ContractionOrder order = ContractionOrder::deepest_rightmost,
                                         std::uint64_t seed = 0)
{
    auto out = apply_morphism(op, TreeMorphism::to_corolla(t), values, order, seed);
    return out.at(VertexPath{});
}

// ---------------------------------------------------------------------------
// Cosimplicial object of an operad with multiplication.
//
// Level n is the arity-n entry. Cofaces d^0..d^{n+1}; codegeneracies s^1..s^n
// where s^i forgets the i-th leaf.

template <OperadWithMultiplication Op>
struct CosimplicialFromOperad {
    using element_type = typename Op::element_type;
    const Op& op;

    explicit CosimplicialFromOperad(const Op& o) : op(o) {}

    element_type coface(std::size_t i, const element_type& x) const
    {
        const std::size_t n = op.arity(x);
        if (i > n + 1)
            throw std::out_of_range("coface index " + std::to_string(i) + " out of range at level " +
                                    std::to_string(n));
        const auto mu = op.multiplication();
        if (i == 0)
            return op.compose(mu, 2, x);
        if (i == n + 1)
            return op.compose(mu, 1, x);
        return op.compose(x, i, mu);
    }
    element_type codegeneracy(std::size_t i, const element_type& x) const
    {
        const std::size_t n = op.arity(x);
        if (i < 1 || i > n)
            throw std::out_of_range("codegeneracy index " + std::to_string(i) + " out of range at level " +
                                    std::to_string(n));
        return op.contract_leaf(x, i);
    }
    std::size_t level(const element_type& x) const { return op.arity(x); }
    std::vector<element_type> samples(std::size_t level) const { return op.samples(level, 0); }
    bool equal(const element_type& a, const element_type& b) const { return op.equal(a, b); }
    nlohmann::json to_json(const element_type& a) const { return op.to_json(a); }
};

template <class C>
concept Cosimplicial = requires(const C& c, const typename C::element_type& x, std::size_t i) {
    { c.coface(i, x) } -> std::convertible_to<typename C::element_type>;
    { c.codegeneracy(i, x) } -> std::convertible_to<typename C::element_type>;
    { c.samples(i) } -> std::convertible_to<std::vector<typename C::element_type>>;
    { c.equal(x, x) } -> std::convertible_to<bool>;
    { c.to_json(x) } -> std::convertible_to<nlohmann::json>;
};

/// Checks every cosimplicial identity on the sample elements of levels
/// 0..max_level. Codegeneracies are tested in leaf-forgetting indexing
/// (s^i = standard s_{i-1}).
template <Cosimplicial C>
Report check_cosimplicial_identities(const C& c, std::size_t max_level, unsigned threads = 1)
{
    using E = typename C::element_type;
    // standard-index codegeneracy
    auto s = [&](std::size_t j, const E& x) { return c.codegeneracy(j + 1, x); };
    auto d = [&](std::size_t i, const E& x) { return c.coface(i, x); };

    struct Item {
        std::size_t level;
        E x;
    };
    std::vector<Item> items;
    for (std::size_t n = 0; n <= max_level; ++n)
        for (auto& x : c.samples(n))
            items.push_back({n, std::move(x)});

    std::vector<Report> parts(items.size(), Report("cosimplicial"));
    parallel_for(items.size(), threads, [&](std::size_t k) {
        const std::size_t n = items[k].level;
        const E& x = items[k].x;
        Report& r = parts[k];
        auto wit = [&](const char* rel, std::size_t i, std::size_t j) {
            return [&, rel, i, j] {
                return nlohmann::json{{"level", n}, {"relation", rel}, {"i", i}, {"j", j}, {"element", c.to_json(x)}};
            };
        };
        // d^j d^i = d^i d^{j-1}, i < j
        for (std::size_t j = 1; j <= n + 2; ++j)
            for (std::size_t i = 0; i < j; ++i)
                r.expect(c.equal(d(j, d(i, x)), d(i, d(j - 1, x))), "coface-coface", wit("dd", i, j));
        // s^j s^i = s^i s^{j+1}, i <= j
        if (n >= 2)
            for (std::size_t j = 0; j + 2 <= n; ++j)
                for (std::size_t i = 0; i <= j; ++i)
                    r.expect(c.equal(s(j, s(i, x)), s(i, s(j + 1, x))), "codegeneracy-codegeneracy", wit("ss", i, j));
        // mixed
        for (std::size_t i = 0; i <= n + 1; ++i)
            for (std::size_t j = 0; j <= n; ++j) {
                E lhs = s(j, d(i, x));
                if (i == j || i == j + 1) {
                    r.expect(c.equal(lhs, x), "codegeneracy-coface", wit("sd=id", i, j));
                } else if (i < j) {
                    r.expect(c.equal(lhs, d(i, s(j - 1, x))), "codegeneracy-coface", wit("sd<", i, j));
                } else {
                    r.expect(c.equal(lhs, d(i - 1, s(j, x))), "codegeneracy-coface", wit("sd>", i, j));
                }
            }
    });
    Report out("cosimplicial");
    for (auto& p : parts)
        out.merge(p);
    return out;
}

// ---------------------------------------------------------------------------
// Axiom checks

struct AxiomBounds {
    std::size_t max_arity = 4;         // bound on each operand's arity
    std::size_t max_total = SIZE_MAX;  // bound on the arity of the composite
    bool include_nullary = true;
    // extra random triples drawn with operand arity <= max_arity and no bound
    // on the composite, for coverage past max_total
    std::size_t random_triples = 0;
    std::uint64_t seed = 0;
};

/// Unit laws plus the sequential and parallel composition laws over all
/// triples of sample elements within the bounds.
template <Operad Op>
Report check_operad_axioms(const Op& op, const AxiomBounds& bounds, unsigned threads = 1)
{
    using E = typename Op::element_type;
    const std::size_t lo = bounds.include_nullary ? 0 : 1;
    std::vector<std::vector<E>> A, B, Cs;
    for (std::size_t k = 0; k <= bounds.max_arity; ++k) {
        A.push_back(op.samples(k, 0));
        B.push_back(op.samples(k, 1));
        Cs.push_back(op.samples(k, 2));
    }
    const E u = op.unit();

    struct Work {
        std::size_t k;
        std::size_t idx;
    };
    std::vector<Work> work;
    for (std::size_t k = lo; k <= bounds.max_arity; ++k)
        for (std::size_t a = 0; a < A[k].size(); ++a)
            work.push_back({k, a});

    std::vector<Report> parts(work.size(), Report("operad-axioms"));
    parallel_for(work.size(), threads, [&](std::size_t w) {
        const std::size_t ka = work[w].k;
        const E& a = A[ka][work[w].idx];
        Report& r = parts[w];
        auto wit = [&](const char* law, std::size_t i, std::size_t j, const E* b, const E* c) {
            return [&op, &a, law, i, j, b, c] {
                nlohmann::json jw{{"law", law}, {"i", i}, {"j", j}, {"a", op.to_json(a)}};
                if (b)
                    jw["b"] = op.to_json(*b);
                if (c)
                    jw["c"] = op.to_json(*c);
                return jw;
            };
        };
        r.expect(op.equal(op.compose(u, 1, a), a), "left unit", wit("unit o_1 a = a", 1, 0, nullptr, nullptr));
        for (std::size_t i = 1; i <= ka; ++i)
            r.expect(op.equal(op.compose(a, i, u), a), "right unit", wit("a o_i unit = a", i, 0, nullptr, nullptr));

        if (ka == 0)
            return;
        for (std::size_t kb = lo; kb <= bounds.max_arity; ++kb)
            for (const E& b : B[kb]) {
                std::vector<E> ab; // ab[i-1] = a o_i b
                for (std::size_t i = 1; i <= ka; ++i)
                    ab.push_back(op.compose(a, i, b));
                for (std::size_t kc = lo; kc <= bounds.max_arity; ++kc) {
                    if (ka + kb + kc < 2 || ka + kb + kc - 2 > bounds.max_total)
                        continue;
                    for (const E& c : Cs[kc]) {
                        std::vector<E> bc, ac;
                        for (std::size_t j = 1; j <= kb; ++j)
                            bc.push_back(op.compose(b, j, c));
                        for (std::size_t k = 1; k <= ka; ++k)
                            ac.push_back(op.compose(a, k, c));
                        // sequential: (a o_i b) o_{i+j-1} c = a o_i (b o_j c)
                        for (std::size_t i = 1; i <= ka; ++i)
                            for (std::size_t j = 1; j <= kb; ++j)
                                r.expect(op.equal(op.compose(ab[i - 1], i + j - 1, c), op.compose(a, i, bc[j - 1])),
                                         "sequential", wit("(a o_i b) o_{i+j-1} c = a o_i (b o_j c)", i, j, &b, &c));
                        // parallel: (a o_k c) o_i b = +-(a o_i b) o_{k+m-1} c, i < k
                        for (std::size_t k = 2; k <= ka; ++k)
                            for (std::size_t i = 1; i < k; ++i) {
                                E lhs = op.compose(ac[k - 1], i, b);
                                E rhs = op.compose(ab[i - 1], k + kb - 1, c);
                                if constexpr (GradedOperad<Op>) {
                                    if ((op.degree(b) * op.degree(c)) % 2 != 0)
                                        rhs = op.negate(rhs);
                                }
                                r.expect(op.equal(lhs, rhs), "parallel",
                                         wit("(a o_k c) o_i b = (a o_i b) o_{k+m-1} c", i, k, &b, &c));
                            }
                    }
                }
            }
    });
    Report out("operad-axioms");
    for (auto& p : parts)
        out.merge(p);
    if (bounds.random_triples == 0)
        return out;

    std::vector<Report> rparts(bounds.random_triples, Report("operad-axioms"));
    const std::size_t first = std::max<std::size_t>(lo, 1);
    parallel_for(bounds.random_triples, threads, [&](std::size_t t) {
        auto rng = task_stream(bounds.seed, t, 0xa81);
        auto pick = [&](const std::vector<std::vector<E>>& pool, std::size_t from) -> const E& {
            std::size_t k;
            do
                k = std::uniform_int_distribution<std::size_t>(from, bounds.max_arity)(rng);
            while (pool[k].empty());
            return pool[k][std::uniform_int_distribution<std::size_t>(0, pool[k].size() - 1)(rng)];
        };
        const E& a = pick(A, first);
        const E& b = pick(B, lo);
        const E& c = pick(Cs, lo);
        const std::size_t ka = op.arity(a), kb = op.arity(b);
        Report& r = rparts[t];
        auto wit = [&](const char* law, std::size_t i, std::size_t j) {
            return [&op, &a, &b, &c, law, i, j] {
                return nlohmann::json{{"law", law}, {"i", i}, {"j", j}, {"a", op.to_json(a)}, {"b", op.to_json(b)},
                                      {"c", op.to_json(c)}};
            };
        };
        const std::size_t i = std::uniform_int_distribution<std::size_t>(1, ka)(rng);
        const E ab = op.compose(a, i, b);
        for (std::size_t j = 1; j <= kb; ++j)
            r.expect(op.equal(op.compose(ab, i + j - 1, c), op.compose(a, i, op.compose(b, j, c))), "sequential",
                     wit("(a o_i b) o_{i+j-1} c = a o_i (b o_j c)", i, j));
        for (std::size_t k = i + 1; k <= ka; ++k) {
            E lhs = op.compose(op.compose(a, k, c), i, b);
            E rhs = op.compose(ab, k + kb - 1, c);
            if constexpr (GradedOperad<Op>) {
                if ((op.degree(b) * op.degree(c)) % 2 != 0)
                    rhs = op.negate(rhs);
            }
            r.expect(op.equal(lhs, rhs), "parallel", wit("(a o_k c) o_i b = (a o_i b) o_{k+m-1} c", i, k));
        }
    });
    for (auto& p : rparts)
        out.merge(p);
    return out;
}

/// Structure maps on every reduced tree with up to max_leaves leaves are
/// independent of contraction order, and agree with stepwise application of
/// a factorization through an intermediate tree. Decorations range over all
/// sample combinations, capped at `max_assignments` per tree.
template <Operad Op>
Report check_structure_maps(const Op& op, std::size_t max_leaves, std::uint64_t seed = 0,
                            std::size_t max_assignments = 64, unsigned threads = 1)
{
    using E = typename Op::element_type;
    std::vector<RpTree> trees;
    for (std::size_t n = 2; n <= max_leaves; ++n)
        for (auto& t : enumerate_trees(n))
            if (!t.internal_edges().empty())
                trees.push_back(std::move(t));

    std::vector<Report> parts(trees.size(), Report("structure-maps"));
    parallel_for(trees.size(), threads, [&](std::size_t ti) {
        const RpTree& t = trees[ti];
        Report& r = parts[ti];
        const auto verts = t.vertices();
        std::vector<std::vector<E>> choices;
        for (std::size_t v = 0; v < verts.size(); ++v)
            choices.push_back(op.samples(t.node(verts[v]).arity(), static_cast<int>(v)));
        std::size_t total = 1;
        for (auto& ch : choices)
            total = std::min<std::size_t>(total * std::max<std::size_t>(ch.size(), 1), SIZE_MAX / 1024);
        auto rng = task_stream(seed, ti);
        const bool exhaustive = total <= max_assignments;
        const std::size_t rounds = exhaustive ? total : max_assignments;
        const auto internal = t.internal_edges();
        for (std::size_t round = 0; round < rounds; ++round) {
            VertexValues<Op> vals;
            std::size_t code = round;
            bool empty = false;
            for (std::size_t v = 0; v < verts.size(); ++v) {
                if (choices[v].empty()) {
                    empty = true;
                    break;
                }
                std::size_t pick;
                if (exhaustive) {
                    pick = code % choices[v].size();
                    code /= choices[v].size();
                } else {
                    pick = std::uniform_int_distribution<std::size_t>(0, choices[v].size() - 1)(rng);
                }
                vals.emplace(verts[v], choices[v][pick]);
            }
            if (empty)
                break;
            const E ref = structure_map(op, t, vals);
            auto wit = [&](const std::string& what) {
                return [&, what] {
                    nlohmann::json jv = nlohmann::json::object();
                    for (auto& [p, e] : vals)
                        jv[path_to_string(p)] = op.to_json(e);
                    return nlohmann::json{{"tree", t.to_string()}, {"variant", what}, {"values", jv}};
                };
            };
            for (auto o : {ContractionOrder::top_down, ContractionOrder::left_first, ContractionOrder::random})
                r.expect(op.equal(structure_map(op, t, vals, o, seed + round), ref), "order independence",
                         wit(to_string(o)));
            // factor T -> T' -> corolla through a random proper subset of edges
            std::set<EdgeId> first;
            for (const auto& e : internal)
                if (rng() & 1)
                    first.insert(e);
            TreeMorphism f(t, first);
            auto mid = apply_morphism(op, f, vals);
            r.expect(op.equal(structure_map(op, f.target(), mid), ref), "factorization",
                     wit("via " + f.target().to_string()));
        }
    });
    Report out("structure-maps");
    for (auto& p : parts)
        out.merge(p);
    return out;
}

// ---------------------------------------------------------------------------
// The associative operad: one point in every arity.

struct AssociativeOperad {
    struct element_type {
        std::size_t n = 0;
        friend bool operator==(const element_type&, const element_type&) = default;
    };
    std::size_t arity(const element_type& a) const { return a.n; }
    element_type compose(const element_type& a, std::size_t i, const element_type& b) const
    {
        if (i < 1 || i > a.n)
            throw std::out_of_range("composition position out of range");
        return {a.n + b.n - 1};
    }
    element_type unit() const { return {1}; }
    element_type multiplication() const { return {2}; }
    element_type contract_leaf(const element_type& a, std::size_t i) const
    {
        if (i < 1 || i > a.n)
            throw std::out_of_range("leaf out of range");
        return {a.n - 1};
    }
    bool equal(const element_type& a, const element_type& b) const { return a == b; }
    std::vector<element_type> samples(std::size_t k, int) const { return {{k}}; }
    nlohmann::json to_json(const element_type& a) const { return {{"arity", a.n}}; }
};

} // namespace operadkit
