#pragma once

// Rooted planar trees and the edge-contraction category built on them.

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace operadkit {

/// Address of a vertex as the sequence of child indices (0-based) walked from
/// the root. The root is the empty path. The same path also names the edge
/// whose initial vertex is the addressed vertex.
using VertexPath = std::vector<std::size_t>;
using EdgeId = VertexPath;

inline std::string path_to_string(const VertexPath& p)
{
    std::string out = "[";
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (k)
            out += ",";
        out += std::to_string(p[k]);
    }
    return out + "]";
}

struct TreeNode {
    bool leaf = false;
    std::vector<TreeNode> children;

    std::size_t arity() const { return children.size(); }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
    friend auto operator<=>(const TreeNode& a, const TreeNode& b)
    {
        if (a.leaf != b.leaf)
            return a.leaf <=> b.leaf;
        return std::lexicographical_compare_three_way(a.children.begin(), a.children.end(),
                                                      b.children.begin(), b.children.end());
    }
};

/// Immutable rooted planar tree. Planar order is child order; leaves are
/// labelled 1..n left to right.
class RpTree {
public:
    RpTree() = default;
    explicit RpTree(TreeNode root) : root_(std::move(root))
    {
        if (root_.leaf)
            throw std::invalid_argument("root of an rp-tree cannot be a leaf");
        count_leaves();
    }

    const TreeNode& root() const { return root_; }
    std::size_t leaf_count() const { return leaf_count_; }

    const TreeNode& node(const VertexPath& p) const
    {
        const TreeNode* cur = &root_;
        for (std::size_t c : p) {
            if (c >= cur->children.size())
                throw std::out_of_range("no vertex at path " + path_to_string(p));
            cur = &cur->children[c];
        }
        return *cur;
    }
    bool has_node(const VertexPath& p) const
    {
        const TreeNode* cur = &root_;
        for (std::size_t c : p) {
            if (c >= cur->children.size())
                return false;
            cur = &cur->children[c];
        }
        return true;
    }

    /// Non-leaf vertices in pre-order (root first).
    std::vector<VertexPath> vertices() const
    {
        std::vector<VertexPath> out;
        VertexPath p;
        collect_vertices(root_, p, out);
        return out;
    }

    /// Edges whose initial vertex is not a leaf, in pre-order.
    std::vector<EdgeId> internal_edges() const
    {
        auto vs = vertices();
        vs.erase(vs.begin());
        return vs;
    }

    /// Paths of the leaves, in planar order (index k holds leaf k+1).
    std::vector<VertexPath> leaf_paths() const
    {
        std::vector<VertexPath> out;
        VertexPath p;
        collect_leaves(root_, p, out);
        return out;
    }

    std::string to_string() const
    {
        std::string out;
        print(root_, out);
        return out;
    }

    static RpTree parse(std::string_view text);

    nlohmann::json to_json() const { return node_json(root_); }
    static RpTree from_json(const nlohmann::json& j) { return RpTree(node_from_json(j, true)); }

    friend bool operator==(const RpTree& a, const RpTree& b) { return a.root_ == b.root_; }
    friend auto operator<=>(const RpTree& a, const RpTree& b) { return a.root_ <=> b.root_; }

private:
    TreeNode root_{};
    std::size_t leaf_count_ = 0;

    void count_leaves() { leaf_count_ = leaf_paths().size(); }

    static void collect_vertices(const TreeNode& n, VertexPath& p, std::vector<VertexPath>& out)
    {
        if (n.leaf)
            return;
        out.push_back(p);
        for (std::size_t c = 0; c < n.children.size(); ++c) {
            p.push_back(c);
            collect_vertices(n.children[c], p, out);
            p.pop_back();
        }
    }
    static void collect_leaves(const TreeNode& n, VertexPath& p, std::vector<VertexPath>& out)
    {
        if (n.leaf) {
            out.push_back(p);
            return;
        }
        for (std::size_t c = 0; c < n.children.size(); ++c) {
            p.push_back(c);
            collect_leaves(n.children[c], p, out);
            p.pop_back();
        }
    }
    static void print(const TreeNode& n, std::string& out)
    {
        if (n.leaf) {
            out += '*';
            return;
        }
        out += '(';
        for (std::size_t c = 0; c < n.children.size(); ++c) {
            if (c)
                out += ' ';
            print(n.children[c], out);
        }
        out += ')';
    }
    static nlohmann::json node_json(const TreeNode& n)
    {
        if (n.leaf)
            return "leaf";
        nlohmann::json kids = nlohmann::json::array();
        for (const auto& c : n.children)
            kids.push_back(node_json(c));
        return {{"children", kids}};
    }
    static TreeNode node_from_json(const nlohmann::json& j, bool is_root)
    {
        if (j.is_string()) {
            if (j.get<std::string>() != "leaf" || is_root)
                throw std::invalid_argument("bad tree json: unexpected string");
            return TreeNode{true, {}};
        }
        if (!j.is_object() || !j.contains("children") || !j["children"].is_array())
            throw std::invalid_argument("bad tree json: expected {\"children\":[...]}");
        TreeNode n;
        for (const auto& c : j["children"])
            n.children.push_back(node_from_json(c, false));
        return n;
    }
};

namespace detail {

class TreeParser {
public:
    explicit TreeParser(std::string_view s) : s_(s) {}

    TreeNode parse_root()
    {
        skip();
        TreeNode n = parse_node();
        skip();
        if (pos_ != s_.size())
            fail("trailing characters");
        if (n.leaf)
            fail("a bare leaf is not a tree");
        return n;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& why) const
    {
        throw std::invalid_argument("tree parse error at offset " + std::to_string(pos_) + ": " + why);
    }
    void skip()
    {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n'))
            ++pos_;
    }
    TreeNode parse_node()
    {
        if (pos_ >= s_.size())
            fail("unexpected end of input");
        if (s_[pos_] == '*') {
            ++pos_;
            return TreeNode{true, {}};
        }
        if (s_[pos_] != '(')
            fail(std::string("unexpected character '") + s_[pos_] + "'");
        ++pos_;
        TreeNode n;
        skip();
        while (pos_ < s_.size() && s_[pos_] != ')') {
            n.children.push_back(parse_node());
            skip();
        }
        if (pos_ >= s_.size())
            fail("missing ')'");
        ++pos_;
        return n;
    }
};

inline void contract_into(const TreeNode& src, VertexPath& p, const std::set<EdgeId>& edges,
                          TreeNode& dst, std::size_t& used)
{
    for (std::size_t c = 0; c < src.children.size(); ++c) {
        const TreeNode& child = src.children[c];
        p.push_back(c);
        if (child.leaf) {
            dst.children.push_back(child);
        } else if (edges.count(p)) {
            ++used;
            contract_into(child, p, edges, dst, used);
        } else {
            TreeNode kept;
            contract_into(child, p, edges, kept, used);
            dst.children.push_back(std::move(kept));
        }
        p.pop_back();
    }
}

// Records, for every vertex of the source, the path of the vertex it lands on.
inline void map_vertices(const TreeNode& src, VertexPath& sp, VertexPath& tp,
                         const std::set<EdgeId>& edges, std::size_t& next_slot,
                         std::map<VertexPath, VertexPath>& out)
{
    out[sp] = tp;
    for (std::size_t c = 0; c < src.children.size(); ++c) {
        const TreeNode& child = src.children[c];
        sp.push_back(c);
        if (child.leaf) {
            ++next_slot;
        } else if (edges.count(sp)) {
            map_vertices(child, sp, tp, edges, next_slot, out);
        } else {
            tp.push_back(next_slot++);
            std::size_t inner = 0;
            map_vertices(child, sp, tp, edges, inner, out);
            tp.pop_back();
        }
        sp.pop_back();
    }
}

} // namespace detail

inline RpTree RpTree::parse(std::string_view text)
{
    return RpTree(detail::TreeParser(text).parse_root());
}

/// The one-vertex tree with n leaves.
inline RpTree corolla(std::size_t n)
{
    TreeNode root;
    root.children.assign(n, TreeNode{true, {}});
    return RpTree(std::move(root));
}

inline void validate_contractible(const RpTree& t, const std::set<EdgeId>& edges)
{
    for (const auto& e : edges) {
        if (e.empty())
            throw std::invalid_argument("the root has no incoming edge");
        if (!t.has_node(e))
            throw std::invalid_argument("unknown edge " + path_to_string(e));
        if (t.node(e).leaf)
            throw std::invalid_argument("cannot contract leaf edge " + path_to_string(e));
    }
}

/// Contracts every listed internal edge. Planar order of the surviving edges
/// is preserved.
inline RpTree contract(const RpTree& t, const std::set<EdgeId>& edges)
{
    validate_contractible(t, edges);
    TreeNode out;
    VertexPath p;
    std::size_t used = 0;
    detail::contract_into(t.root(), p, edges, out, used);
    return RpTree(std::move(out));
}

/// For each vertex of t, the vertex of contract(t, edges) it is merged into.
inline std::map<VertexPath, VertexPath> vertex_image(const RpTree& t, const std::set<EdgeId>& edges)
{
    validate_contractible(t, edges);
    std::map<VertexPath, VertexPath> out;
    VertexPath sp, tp;
    std::size_t slot = 0;
    detail::map_vertices(t.root(), sp, tp, edges, slot, out);
    return out;
}

/// The morphism c_E : source -> contract(source, E) of the tree category.
class TreeMorphism {
public:
    TreeMorphism(RpTree source, std::set<EdgeId> edges)
        : source_(std::move(source)), edges_(std::move(edges)), target_(contract(source_, edges_))
    {
    }

    const RpTree& source() const { return source_; }
    const RpTree& target() const { return target_; }
    const std::set<EdgeId>& contracted_edges() const { return edges_; }

    /// Composite with a morphism out of this one's target.
    TreeMorphism then(const TreeMorphism& next) const
    {
        if (!(next.source() == target_))
            throw std::invalid_argument("morphisms are not composable");
        auto image = vertex_image(source_, edges_);
        std::set<EdgeId> all = edges_;
        for (const auto& e : source_.internal_edges()) {
            if (edges_.count(e))
                continue;
            if (next.contracted_edges().count(image.at(e)))
                all.insert(e);
        }
        return TreeMorphism(source_, std::move(all));
    }

    static TreeMorphism to_corolla(const RpTree& t)
    {
        auto es = t.internal_edges();
        return TreeMorphism(t, std::set<EdgeId>(es.begin(), es.end()));
    }

private:
    RpTree source_;
    std::set<EdgeId> edges_;
    RpTree target_;
};

struct JoinResult {
    VertexPath vertex;
    std::size_t label_i = 0; // J_v(i), 1-based
    std::size_t label_j = 0; // J_v(j), 1-based
    friend bool operator==(const JoinResult&, const JoinResult&) = default;
};

/// The vertex farthest from the root on both root paths of leaves i and j,
/// with the planar labels of the edges of that vertex over which they lie.
inline JoinResult join_vertex(const RpTree& t, std::size_t i, std::size_t j)
{
    const std::size_t n = t.leaf_count();
    if (i == j)
        throw std::invalid_argument("join needs two distinct leaves");
    if (i < 1 || j < 1 || i > n || j > n)
        throw std::out_of_range("leaf label out of range");
    auto leaves = t.leaf_paths();
    const auto& a = leaves[i - 1];
    const auto& b = leaves[j - 1];
    std::size_t k = 0;
    while (k < a.size() && k < b.size() && a[k] == b[k])
        ++k;
    return JoinResult{VertexPath(a.begin(), a.begin() + k), a[k] + 1, b[k] + 1};
}

/// Root of arity n whose i-th edge carries an arity-m vertex, with the
/// contraction of that edge: the shape of the i-th partial composition.
inline TreeMorphism graft(std::size_t n, std::size_t i, std::size_t m)
{
    if (i < 1 || i > n)
        throw std::out_of_range("graft position out of range");
    TreeNode root;
    root.children.assign(n, TreeNode{true, {}});
    root.children[i - 1] = corolla(m).root();
    return TreeMorphism(RpTree(std::move(root)), {EdgeId{i - 1}});
}

inline constexpr std::size_t kDefaultEnumerationBound = 6;

namespace detail {

inline std::vector<TreeNode> reduced_subtrees(std::size_t n, std::map<std::size_t, std::vector<TreeNode>>& memo);

// All sequences of at least `min_parts` reduced subtrees with n leaves in total.
inline void child_sequences(std::size_t n, std::size_t min_parts, std::vector<TreeNode>& prefix,
                            std::vector<std::vector<TreeNode>>& out,
                            std::map<std::size_t, std::vector<TreeNode>>& memo)
{
    if (n == 0) {
        if (prefix.size() >= min_parts)
            out.push_back(prefix);
        return;
    }
    for (std::size_t first = 1; first <= n; ++first) {
        if (prefix.empty() && first == n && min_parts > 1)
            continue;
        for (const auto& sub : reduced_subtrees(first, memo)) {
            prefix.push_back(sub);
            child_sequences(n - first, min_parts, prefix, out, memo);
            prefix.pop_back();
        }
    }
}

// Reduced subtrees hanging on a non-root edge: a leaf, or a vertex of arity >= 2.
inline std::vector<TreeNode> reduced_subtrees(std::size_t n, std::map<std::size_t, std::vector<TreeNode>>& memo)
{
    if (auto it = memo.find(n); it != memo.end())
        return it->second;
    std::vector<TreeNode> out;
    if (n == 1)
        out.push_back(TreeNode{true, {}});
    std::vector<TreeNode> prefix;
    std::vector<std::vector<TreeNode>> seqs;
    child_sequences(n, 2, prefix, seqs, memo);
    for (auto& s : seqs)
        out.push_back(TreeNode{false, std::move(s)});
    memo[n] = out;
    return out;
}

} // namespace detail

/// All reduced trees (every vertex of arity >= 2, apart from gamma_0 and
/// gamma_1) with n leaves, each once, in a deterministic order.
inline std::vector<RpTree> enumerate_trees(std::size_t n, bool reduced = true,
                                           std::size_t bound = kDefaultEnumerationBound)
{
    if (!reduced)
        throw std::invalid_argument("non-reduced trees with a given leaf count are unbounded in number");
    if (n > bound)
        throw std::length_error("enumeration bound exceeded: " + std::to_string(n) + " > " +
                                std::to_string(bound));
    if (n <= 1)
        return {corolla(n)};
    std::map<std::size_t, std::vector<TreeNode>> memo;
    std::vector<RpTree> out;
    for (auto& node : detail::reduced_subtrees(n, memo))
        if (!node.leaf)
            out.emplace_back(std::move(node));
    return out;
}

} // namespace operadkit
