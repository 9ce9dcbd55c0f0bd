#pragma once

// Floating-point side: the Kontsevich operad on sphere coordinates, membership
// tests for compactified configuration spaces, little disks, and the
// endpoint-stretching projection from long-knot configurations.
//
// Two direction conventions meet here. Gauss maps of Euclidean configurations
// use u_ij = u(x_i - x_j). Knot-model configurations in the cube use
// u_ij = u(x_j - x_i), so that a curve running from *+ down to *- has
// u_ij -> u(f'(t)) along the diagonal and points hitting *+ give *_S. The
// cosimplicial maps only ever insert *_S, so a global sign between the two
// never enters an equality check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "operad.hpp"
#include "pair_operad.hpp"
#include "random.hpp"
#include "report.hpp"
#include "trees.hpp"

namespace operadkit {

inline constexpr int kMaxAmbient = 8;

// Inline storage up to kMaxAmbient keeps the hot loops allocation free.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxAmbient, 1>;

inline void check_ambient(std::size_t m)
{
    if (m < 1 || m > static_cast<std::size_t>(kMaxAmbient))
        throw std::invalid_argument("ambient dimension must be in 1.." + std::to_string(kMaxAmbient));
}

inline Vec basis_vector(std::size_t m, std::size_t k, double s = 1.0)
{
    check_ambient(m);
    Vec v = Vec::Zero(static_cast<Eigen::Index>(m));
    v(static_cast<Eigen::Index>(k)) = s;
    return v;
}

/// South pole (0,...,0,-1), the basepoint of the sphere.
inline Vec south_pole(std::size_t m) { return basis_vector(m, m - 1, -1.0); }
/// Endpoints of the long-knot cube.
inline Vec star_plus(std::size_t m) { return basis_vector(m, m - 1, 1.0); }
inline Vec star_minus(std::size_t m) { return basis_vector(m, m - 1, -1.0); }

inline Vec unit_vector(const Vec& v)
{
    const double r = v.norm();
    if (!(r > 0) || !std::isfinite(r))
        throw std::domain_error("direction of a zero or non-finite vector");
    return v / r;
}

inline Vec random_unit(std::size_t m, std::mt19937_64& rng)
{
    std::normal_distribution<double> g(0.0, 1.0);
    Vec v(static_cast<Eigen::Index>(m));
    do {
        for (Eigen::Index k = 0; k < v.size(); ++k)
            v(k) = g(rng);
    } while (v.norm() < 1e-6);
    return v / v.norm();
}

inline nlohmann::json vec_to_json(const Vec& v)
{
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k)
        a.push_back(v(k));
    return a;
}

inline Vec vec_from_json(const nlohmann::json& a, std::size_t m)
{
    if (!a.is_array() || a.size() != m)
        throw std::invalid_argument("vector of length " + std::to_string(m) + " expected");
    Vec v(static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < m; ++k)
        v(static_cast<Eigen::Index>(k)) = a[k].get<double>();
    return v;
}

// ---------------------------------------------------------------------------
// Sphere configurations and the Kontsevich operad

struct SphereConfiguration {
    std::size_t m = 3;
    PairFamily<Vec> u;

    SphereConfiguration() = default;
    SphereConfiguration(std::size_t dim, std::size_t n) : m(dim), u(n, south_pole(dim)) {}
    SphereConfiguration(std::size_t dim, PairFamily<Vec> fam) : m(dim), u(std::move(fam)) {}

    std::size_t n() const { return u.n; }

    /// u_ij for i != j, with u_ji = -u_ij.
    Vec get(std::size_t i, std::size_t j) const
    {
        if (i == j)
            throw std::invalid_argument("u_ii is undefined");
        return i < j ? u.at(i, j) : Vec(-u.at(j, i));
    }

    nlohmann::json to_json() const
    {
        nlohmann::json us = nlohmann::json::object();
        for (auto [i, j] : pairs_of(n()))
            us[std::to_string(i) + "," + std::to_string(j)] = vec_to_json(u.at(i, j));
        return {{"m", m}, {"n", n()}, {"u", us}};
    }

    /// Reads `{m, n, u:{"i,j":[...]}}`; every pair i<j must be present and of
    /// unit length within `tol`.
    static SphereConfiguration from_json(const nlohmann::json& j, double tol = 1e-9)
    {
        const std::size_t m = j.at("m").get<std::size_t>(), n = j.at("n").get<std::size_t>();
        check_ambient(m);
        SphereConfiguration s(m, n);
        const auto& us = j.at("u");
        for (auto [a, b] : pairs_of(n)) {
            const std::string key = std::to_string(a) + "," + std::to_string(b);
            if (!us.contains(key))
                throw std::invalid_argument("missing coordinate u_" + key);
            Vec v = vec_from_json(us.at(key), m);
            if (std::abs(v.norm() - 1.0) > tol)
                throw std::invalid_argument("u_" + key + " is not a unit vector");
            s.u.at(a, b) = v;
        }
        return s;
    }
};

/// Gauss map u_ij = u(x_i - x_j).
inline SphereConfiguration gauss_map(const std::vector<Vec>& x)
{
    if (x.empty())
        return SphereConfiguration(3, 0);
    const std::size_t m = static_cast<std::size_t>(x[0].size());
    check_ambient(m);
    SphereConfiguration s(m, x.size());
    for (auto [i, j] : pairs_of(x.size())) {
        const Vec d = x[i - 1] - x[j - 1];
        if (d.norm() == 0.0)
            throw std::domain_error("points " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
        s.u.at(i, j) = d / d.norm();
    }
    return s;
}

inline std::vector<Vec> random_points(std::size_t m, std::size_t n, std::mt19937_64& rng, double box = 1.0)
{
    std::uniform_real_distribution<double> U(-box, box);
    std::vector<Vec> x;
    while (x.size() < n) {
        Vec p(static_cast<Eigen::Index>(m));
        for (Eigen::Index k = 0; k < p.size(); ++k)
            p(k) = U(rng);
        bool ok = true;
        for (const auto& q : x)
            ok = ok && (p - q).norm() > 1e-3;
        if (ok)
            x.push_back(p);
    }
    return x;
}

struct KontsevichTraits {
    std::size_t m = 3;
    std::uint64_t seed = 0;

    Vec base() const { return south_pole(m); }
    bool equal(const Vec& a, const Vec& b) const { return a.size() == b.size() && a == b; }
    nlohmann::json to_json(const Vec& v) const { return vec_to_json(v); }

    /// Gauss maps of random configurations; the arity 0 and 1 entries are
    /// single points.
    std::vector<PairFamily<Vec>> samples(std::size_t k, int tag) const
    {
        auto rng = task_stream(seed, k, 0x6b00 + static_cast<std::uint64_t>(tag));
        std::vector<PairFamily<Vec>> out;
        const std::size_t count = k < 2 ? 1 : 3;
        for (std::size_t c = 0; c < count; ++c)
            out.push_back(k < 2 ? PairFamily<Vec>(k, base()) : gauss_map(random_points(m, k, rng)).u);
        return out;
    }
};

using KontsevichOperad = PairOperad<Vec, KontsevichTraits>;

inline KontsevichOperad kontsevich_operad(std::size_t m, std::uint64_t seed = 0)
{
    check_ambient(m);
    return KontsevichOperad(KontsevichTraits{m, seed});
}

/// Structure map of a tree to its corolla by join vertices:
/// w_ij = u^v_{J_v(i), J_v(j)} with v the join of leaves i and j.
inline SphereConfiguration kontsevich_compose(const RpTree& t, const std::vector<SphereConfiguration>& inputs)
{
    const auto verts = t.vertices();
    if (inputs.size() != verts.size())
        throw std::invalid_argument("one input per vertex expected: " + std::to_string(verts.size()) + " vertices, " +
                                    std::to_string(inputs.size()) + " inputs");
    const std::size_t m = inputs.empty() ? 3 : inputs[0].m;
    std::map<VertexPath, std::size_t> slot;
    for (std::size_t v = 0; v < verts.size(); ++v) {
        if (inputs[v].m != m)
            throw std::invalid_argument("inputs disagree on the ambient dimension");
        if (inputs[v].n() != t.node(verts[v]).arity())
            throw std::invalid_argument("input at vertex " + path_to_string(verts[v]) + " has arity " +
                                        std::to_string(inputs[v].n()) + ", vertex has " +
                                        std::to_string(t.node(verts[v]).arity()));
        slot.emplace(verts[v], v);
    }
    const std::size_t n = t.leaf_count();
    SphereConfiguration w(m, n);
    for (auto [i, j] : pairs_of(n)) {
        const JoinResult jv = join_vertex(t, i, j);
        w.u.at(i, j) = inputs[slot.at(jv.vertex)].u.at(jv.label_i, jv.label_j);
    }
    return w;
}

inline SphereConfiguration kontsevich_coface(const SphereConfiguration& s, std::size_t i)
{
    const KontsevichOperad op = kontsevich_operad(s.m);
    return {s.m, CosimplicialFromOperad<KontsevichOperad>(op).coface(i, s.u)};
}

inline SphereConfiguration kontsevich_codegeneracy(const SphereConfiguration& s, std::size_t i)
{
    const KontsevichOperad op = kontsevich_operad(s.m);
    return {s.m, CosimplicialFromOperad<KontsevichOperad>(op).codegeneracy(i, s.u)};
}

// ---------------------------------------------------------------------------
// Membership tests

namespace detail {

// Distance from the origin to the triangle conv{a, b, c}, by deciding which
// face of the triangle carries the closest point.
inline double origin_to_triangle(const Vec& a, const Vec& b, const Vec& c)
{
    const Vec ab = b - a, ac = c - a;
    const double gram = ab.squaredNorm() * ac.squaredNorm() - std::pow(ab.dot(ac), 2);
    if (!(gram > 1e-24 * (1 + ab.squaredNorm() * ac.squaredNorm()))) {
        // collinear or repeated vertices: the hull is a segment
        auto seg = [](const Vec& p, const Vec& q) {
            const Vec d = q - p;
            const double L = d.squaredNorm();
            const double s = L > 0 ? std::clamp(-p.dot(d) / L, 0.0, 1.0) : 0.0;
            return (p + s * d).norm();
        };
        return std::min({seg(a, b), seg(b, c), seg(a, c)});
    }
    const Vec ap = -a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0 && d2 <= 0)
        return a.norm();
    const Vec bp = -b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0 && d4 <= d3)
        return b.norm();
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) {
        const double v = d1 / (d1 - d3);
        return (a + v * ab).norm();
    }
    const Vec cp = -c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0 && d5 <= d6)
        return c.norm();
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) {
        const double w = d2 / (d2 - d6);
        return (a + w * ac).norm();
    }
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + w * (c - b)).norm();
    }
    const double denom = va + vb + vc;
    const double v = vb / denom, w = vc / denom;
    return (a + ab * v + ac * w).norm();
}

} // namespace detail

/// Three-dependence: for each 3-loop ij, jk, ki some nontrivial non-negative
/// combination of the three vectors vanishes. Since the vectors are unit,
/// that holds iff the origin lies in their convex hull; the residual is the
/// distance from the origin to the hull.
inline Report check_three_dependent(const SphereConfiguration& s, double tol = 1e-9)
{
    Report rep("three-dependence");
    const std::size_t n = s.n();
    for (std::size_t i = 1; i <= n; ++i)
        for (std::size_t j = i + 1; j <= n; ++j)
            for (std::size_t k = j + 1; k <= n; ++k) {
                const double r = detail::origin_to_triangle(s.get(i, j), s.get(j, k), s.get(k, i));
                rep.residual(r);
                rep.expect(r <= tol, "three-dependent", [&] {
                    return nlohmann::json{{"loop", {i, j, k}}, {"residual", r}};
                });
            }
    return rep;
}

/// A straight 3-chain on four ordered indices, its permutation parity, and
/// the complementary chain.
struct FourChain {
    std::array<std::size_t, 4> path; // positions 0..3 within the subset
    int sign;                        // (-1)^{parity of the permutation}
    std::array<std::pair<std::size_t, std::size_t>, 3> edges;
    std::array<std::pair<std::size_t, std::size_t>, 3> complement;
};

inline int permutation_sign(const std::array<std::size_t, 4>& p)
{
    int inv = 0;
    for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = a + 1; b < 4; ++b)
            inv += p[a] > p[b];
    return inv % 2 ? -1 : 1;
}

/// The 12 Hamiltonian paths of K4 modulo reversal; the representative starts
/// at the smaller endpoint. Edges are unordered pairs (lo, hi).
inline const std::vector<FourChain>& four_chains()
{
    static const std::vector<FourChain> chains = [] {
        std::vector<FourChain> out;
        std::array<std::size_t, 4> p{0, 1, 2, 3};
        do {
            if (p[0] > p[3])
                continue;
            FourChain c{};
            c.path = p;
            c.sign = permutation_sign(p);
            std::array<std::array<bool, 4>, 4> used{};
            for (std::size_t k = 0; k < 3; ++k) {
                const std::size_t a = std::min(p[k], p[k + 1]), b = std::max(p[k], p[k + 1]);
                c.edges[k] = {a, b};
                used[a][b] = true;
            }
            std::size_t e = 0;
            for (std::size_t a = 0; a < 4; ++a)
                for (std::size_t b = a + 1; b < 4; ++b)
                    if (!used[a][b])
                        c.complement[e++] = {a, b};
            out.push_back(c);
        } while (std::next_permutation(p.begin(), p.end()));
        return out;
    }();
    return chains;
}

/// Four-consistency on every 4-subset, probed at all coordinate pairs (v, w)
/// and `probes` random pairs. Edges enter with the lower index first; the
/// residual is the largest |sum| seen.
inline Report check_four_consistent(const SphereConfiguration& s, double tol = 1e-9, std::size_t probes = 20,
                                    std::uint64_t seed = 0)
{
    Report rep("four-consistency");
    const std::size_t n = s.n(), m = s.m;
    std::vector<std::pair<Vec, Vec>> vw;
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b)
            vw.emplace_back(basis_vector(m, a), basis_vector(m, b));
    auto rng = task_stream(seed, n, 0x4c0);
    for (std::size_t k = 0; k < probes; ++k) {
        Vec v = random_unit(m, rng);
        Vec w = random_unit(m, rng);
        vw.emplace_back(v, w);
    }
    const auto& chains = four_chains();
    std::array<std::size_t, 4> S{};
    for (S[0] = 1; S[0] <= n; ++S[0])
        for (S[1] = S[0] + 1; S[1] <= n; ++S[1])
            for (S[2] = S[1] + 1; S[2] <= n; ++S[2])
                for (S[3] = S[2] + 1; S[3] <= n; ++S[3]) {
                    const Vec* u[4][4] = {};
                    for (std::size_t a = 0; a < 4; ++a)
                        for (std::size_t b = a + 1; b < 4; ++b)
                            u[a][b] = &s.u.at(S[a], S[b]);
                    double worst = 0;
                    for (const auto& [v, w] : vw) {
                        double dv[4][4], dw[4][4];
                        for (std::size_t a = 0; a < 4; ++a)
                            for (std::size_t b = a + 1; b < 4; ++b) {
                                dv[a][b] = u[a][b]->dot(v);
                                dw[a][b] = u[a][b]->dot(w);
                            }
                        double sum = 0;
                        for (const auto& c : chains) {
                            double pv = 1, pw = 1;
                            for (std::size_t e = 0; e < 3; ++e) {
                                pv *= dv[c.edges[e].first][c.edges[e].second];
                                pw *= dw[c.complement[e].first][c.complement[e].second];
                            }
                            sum += c.sign * pv * pw;
                        }
                        worst = std::max(worst, std::abs(sum));
                    }
                    rep.residual(worst);
                    rep.expect(worst <= tol, "four-consistent", [&] {
                        return nlohmann::json{{"subset", S}, {"residual", worst}};
                    });
                }
    return rep;
}

/// Both membership tests, merged.
inline Report check_membership(const SphereConfiguration& s, double tol = 1e-9, std::size_t probes = 20,
                               std::uint64_t seed = 0)
{
    Report r("membership");
    r.merge(check_three_dependent(s, tol));
    r.merge(check_four_consistent(s, tol, probes, seed));
    return r;
}

// ---------------------------------------------------------------------------
// Little disks

struct DiskConfiguration {
    std::vector<Vec> centers;
    std::vector<double> radii;

    std::size_t size() const { return centers.size(); }

    /// Balls inside the unit disk with disjoint interiors, within `tol`.
    Report validate(double tol = 1e-12) const
    {
        Report r("disks");
        for (std::size_t i = 0; i < size(); ++i) {
            r.expect(radii[i] > 0 && radii[i] <= 1, "radius in (0,1]", [&] { return nlohmann::json{{"disk", i + 1}}; });
            const double out = centers[i].norm() + radii[i] - 1.0;
            r.residual(std::max(out, 0.0));
            r.expect(out <= tol, "contained in the unit disk", [&] { return nlohmann::json{{"disk", i + 1}}; });
            for (std::size_t j = i + 1; j < size(); ++j) {
                const double overlap = radii[i] + radii[j] - (centers[i] - centers[j]).norm();
                r.residual(std::max(overlap, 0.0));
                r.expect(overlap <= tol, "disjoint interiors",
                         [&] { return nlohmann::json{{"disks", {i + 1, j + 1}}}; });
            }
        }
        return r;
    }

    nlohmann::json to_json() const
    {
        nlohmann::json c = nlohmann::json::array();
        for (const auto& x : centers)
            c.push_back(vec_to_json(x));
        return {{"m", centers.empty() ? 0 : centers[0].size()}, {"n", size()}, {"centers", c}, {"radii", radii}};
    }

    static DiskConfiguration identity(std::size_t m) { return {{Vec::Zero(static_cast<Eigen::Index>(m))}, {1.0}}; }
};

inline DiskConfiguration random_disks(std::size_t m, std::size_t n, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (std::size_t attempt = 0; attempt < 10000; ++attempt) {
        DiskConfiguration d;
        const double rmax = n <= 1 ? 0.9 : 0.8 / static_cast<double>(n);
        std::uniform_real_distribution<double> R(0.3 * rmax, rmax);
        std::size_t tries = 0;
        while (d.size() < n && tries++ < 2000) {
            const double r = R(rng);
            Vec x(static_cast<Eigen::Index>(m));
            for (Eigen::Index k = 0; k < x.size(); ++k)
                x(k) = U(rng) * (1.0 - r);
            if (x.norm() + r > 1.0)
                continue;
            bool ok = true;
            for (std::size_t j = 0; j < d.size(); ++j)
                ok = ok && (x - d.centers[j]).norm() >= r + d.radii[j];
            if (ok) {
                d.centers.push_back(x);
                d.radii.push_back(r);
            }
        }
        if (d.size() == n)
            return d;
    }
    throw std::runtime_error("could not place random disks");
}

namespace detail {

// Leaf data for a root-plus-one-level tree: root edge e(j), vertex
// index v(j) among the inputs (or none for a bare leaf at the root), and the
// position o(j) at that vertex.
struct TwoLevelLeaf {
    std::size_t e;
    std::optional<std::size_t> v;
    std::size_t o;
};

inline std::vector<TwoLevelLeaf> two_level_leaves(const RpTree& t)
{
    std::vector<TwoLevelLeaf> out;
    const TreeNode& root = t.root();
    std::size_t vertex = 1; // inputs[0] is the root
    for (std::size_t e = 0; e < root.children.size(); ++e) {
        const TreeNode& c = root.children[e];
        if (c.leaf) {
            out.push_back({e + 1, std::nullopt, 1});
            continue;
        }
        for (std::size_t o = 0; o < c.children.size(); ++o) {
            if (!c.children[o].leaf)
                throw std::invalid_argument("tree must have depth at most two");
            out.push_back({e + 1, vertex, o + 1});
        }
        ++vertex;
    }
    return out;
}

template <class F>
std::vector<Vec> two_level_points(const RpTree& t, const std::vector<DiskConfiguration>& in, F&& scale)
{
    const auto leaves = two_level_leaves(t);
    const auto verts = t.vertices();
    if (in.size() != verts.size())
        throw std::invalid_argument("one disk configuration per vertex expected");
    for (std::size_t v = 0; v < verts.size(); ++v)
        if (in[v].size() != t.node(verts[v]).arity())
            throw std::invalid_argument("disk configuration at vertex " + path_to_string(verts[v]) +
                                        " has the wrong number of disks");
    std::vector<Vec> y;
    for (const auto& l : leaves) {
        const Vec& x0 = in[0].centers[l.e - 1];
        const double r0 = in[0].radii[l.e - 1];
        if (!l.v)
            y.push_back(x0);
        else
            y.push_back(x0 + scale(r0) * in[*l.v].centers[l.o - 1]);
    }
    return y;
}

} // namespace detail

/// May's structure map for a root with one level of vertices above it.
/// A bare leaf at the root keeps its disk.
inline DiskConfiguration disks_compose(const RpTree& t, const std::vector<DiskConfiguration>& in, double tol = 1e-12)
{
    DiskConfiguration out;
    out.centers = detail::two_level_points(t, in, [](double r) { return r; });
    for (const auto& l : detail::two_level_leaves(t))
        out.radii.push_back(in[0].radii[l.e - 1] * (l.v ? in[*l.v].radii[l.o - 1] : 1.0));
    const Report r = out.validate(tol);
    if (!r.passed())
        throw std::domain_error("composed disks violate containment or disjointness");
    return out;
}

/// Gauss map of y_j(t) = x^{v0}_{e(j)} + t r^{v0}_{e(j)} x^{v(j)}_{o(j)}.
inline SphereConfiguration disks_homotopy(const RpTree& t, const std::vector<DiskConfiguration>& in, double time)
{
    if (!(time > 0 && time <= 1))
        throw std::invalid_argument("time must lie in (0,1]");
    return gauss_map(detail::two_level_points(t, in, [time](double r) { return time * r; }));
}

/// The t -> 0 end: Kontsevich composite of the vertex-wise Gauss maps.
inline SphereConfiguration disks_limit(const RpTree& t, const std::vector<DiskConfiguration>& in)
{
    std::vector<SphereConfiguration> proj;
    for (const auto& d : in)
        proj.push_back(gauss_map(d.centers));
    if (!in.empty() && !in[0].centers.empty())
        for (auto& p : proj)
            p.m = static_cast<std::size_t>(in[0].centers[0].size());
    return kontsevich_compose(t, proj);
}

inline double max_distance(const SphereConfiguration& a, const SphereConfiguration& b)
{
    if (a.n() != b.n() || a.m != b.m)
        throw std::invalid_argument("configurations of different shape");
    double d = 0;
    for (std::size_t k = 0; k < a.u.coords.size(); ++k)
        d = std::max(d, (a.u.coords[k] - b.u.coords[k]).lpNorm<Eigen::Infinity>());
    return d;
}

// ---------------------------------------------------------------------------
// Long-knot configurations and the projection to sphere coordinates

inline constexpr double kDefaultEpsilon = 1.0 / 8.0;

inline void check_epsilon(double eps)
{
    if (!(eps > 0 && eps <= 1.0 / 6.0))
        throw std::invalid_argument("epsilon must lie in (0, 1/6]");
}

namespace detail {

inline void stretch_at(const Vec& star, const Vec& a, double eps, Vec& b, Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAmbient, kMaxAmbient>* J)
{
    const Eigen::Index m = a.size();
    const double d = (a - star).norm();
    b = a;
    if (J)
        J->setIdentity(m, m);
    if (d >= eps)
        return;
    if (d == 0.0)
        throw std::domain_error("the stretching map is undefined at an endpoint");
    b(m - 1) = eps * a(m - 1) / d;
    if (J) {
        // d b_m / d a_k = eps (delta_km / d - a_m (a_k - star_k) / d^3)
        for (Eigen::Index k = 0; k < m; ++k)
            (*J)(m - 1, k) = -eps * a(m - 1) * (a(k) - star(k)) / (d * d * d);
        (*J)(m - 1, m - 1) += eps / d;
    }
}

} // namespace detail

using SmallMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAmbient, kMaxAmbient>;

/// lambda = lambda_+ o lambda_-: stretch the last coordinate near *- and *+.
inline Vec lambda_map(const Vec& x, double eps = kDefaultEpsilon)
{
    check_epsilon(eps);
    const std::size_t m = static_cast<std::size_t>(x.size());
    Vec a, b;
    detail::stretch_at(star_minus(m), x, eps, a, nullptr);
    detail::stretch_at(star_plus(m), a, eps, b, nullptr);
    return b;
}

inline SmallMatrix lambda_jacobian(const Vec& x, double eps = kDefaultEpsilon)
{
    check_epsilon(eps);
    const std::size_t m = static_cast<std::size_t>(x.size());
    Vec a, b;
    SmallMatrix Jm, Jp;
    detail::stretch_at(star_minus(m), x, eps, a, &Jm);
    detail::stretch_at(star_plus(m), a, eps, b, &Jp);
    return Jp * Jm;
}

/// A point of the long-knot configuration space: points in the cube, unit
/// tangents, and u_ij = u(x_j - x_i) for distinct points (free data for
/// coincident ones).
struct PointConfiguration {
    std::size_t m = 3;
    std::vector<Vec> points;
    std::vector<Vec> tangents; // empty or one per point
    PairFamily<Vec> u;

    std::size_t n() const { return points.size(); }

    nlohmann::json to_json() const
    {
        nlohmann::json ps = nlohmann::json::array(), ts = nlohmann::json::array(), us = nlohmann::json::object();
        for (const auto& p : points)
            ps.push_back(vec_to_json(p));
        for (const auto& t : tangents)
            ts.push_back(vec_to_json(t));
        for (auto [i, j] : pairs_of(n()))
            us[std::to_string(i) + "," + std::to_string(j)] = vec_to_json(u.at(i, j));
        return {{"m", m}, {"n", n()}, {"points", ps}, {"tangents", ts}, {"u", us}};
    }

    /// Reads `{m, n, points, tangents?, u?}`. Coordinates of distinct points
    /// are recomputed; coincident pairs need an entry in u.
    static PointConfiguration from_json(const nlohmann::json& j)
    {
        PointConfiguration c;
        c.m = j.at("m").get<std::size_t>();
        check_ambient(c.m);
        const std::size_t n = j.at("n").get<std::size_t>();
        const auto& ps = j.at("points");
        if (ps.size() != n)
            throw std::invalid_argument("point count does not match n");
        for (const auto& p : ps)
            c.points.push_back(vec_from_json(p, c.m));
        if (j.contains("tangents"))
            for (const auto& t : j.at("tangents"))
                c.tangents.push_back(unit_vector(vec_from_json(t, c.m)));
        if (!c.tangents.empty() && c.tangents.size() != n)
            throw std::invalid_argument("tangent count does not match n");
        c.u = PairFamily<Vec>(n, south_pole(c.m));
        for (auto [a, b] : pairs_of(n)) {
            const Vec d = c.points[b - 1] - c.points[a - 1];
            if (d.norm() > 0) {
                c.u.at(a, b) = d / d.norm();
                continue;
            }
            const std::string key = std::to_string(a) + "," + std::to_string(b);
            if (!j.contains("u") || !j.at("u").contains(key))
                throw std::invalid_argument("coincident points " + key + " need a coordinate u_" + key);
            c.u.at(a, b) = unit_vector(vec_from_json(j.at("u").at(key), c.m));
        }
        return c;
    }
};

/// Checks the collar conditions near the endpoints: points within eps of *+
/// (or *-) sit on the vertical axis in index order from the top, and
/// coincident pairs there carry u_ij = *_S. A failure names the first
/// offending pair.
inline std::optional<std::string> boundary_violation(const PointConfiguration& c, double eps)
{
    const std::size_t m = c.m;
    const Vec top = star_plus(m), bottom = star_minus(m), S = south_pole(m);
    for (const auto& p : c.points)
        if (p.lpNorm<Eigen::Infinity>() > 1.0)
            return "point outside the cube";
    for (auto [i, j] : pairs_of(c.n())) {
        const Vec& xi = c.points[i - 1];
        const Vec& xj = c.points[j - 1];
        for (const Vec* star : {&top, &bottom}) {
            if ((xi - *star).norm() < eps && (xj - *star).norm() < eps) {
                const bool axis = xi.head(static_cast<Eigen::Index>(m - 1)) == xj.head(static_cast<Eigen::Index>(m - 1)) &&
                                  xi.head(static_cast<Eigen::Index>(m - 1)).isZero(0.0);
                if (!axis || xi(static_cast<Eigen::Index>(m - 1)) < xj(static_cast<Eigen::Index>(m - 1)))
                    return "points " + std::to_string(i) + "," + std::to_string(j) +
                           " near an endpoint are not ordered down the axis";
                if (xi == xj && c.u.at(i, j) != S)
                    return "coincident points " + std::to_string(i) + "," + std::to_string(j) +
                           " near an endpoint need u = *_S";
            }
        }
        if (xj == top && xi != top)
            return "point " + std::to_string(j) + " sits at *+ below a distinct point";
        if (xi == bottom && xj != bottom)
            return "point " + std::to_string(i) + " sits at *- above a distinct point";
        if (xi != xj) {
            const Vec d = xj - xi;
            if (c.u.at(i, j) != d / d.norm())
                return "u_" + std::to_string(i) + "," + std::to_string(j) + " disagrees with the points";
        }
    }
    return std::nullopt;
}

/// pi_k: sends a collared knot configuration to sphere coordinates.
///   x_i != x_j, neither an endpoint:  u(lambda(x_j) - lambda(x_i))
///   x_i == x_j:                       u(J_lambda u_ij), or *_S at an endpoint
///   x_i == *+ or x_j == *-:           *_S
inline SphereConfiguration project_pi_k(const PointConfiguration& c, double eps = kDefaultEpsilon)
{
    check_epsilon(eps);
    if (auto bad = boundary_violation(c, eps))
        throw std::invalid_argument("configuration outside the collared space: " + *bad);
    const std::size_t m = c.m;
    const Vec top = star_plus(m), bottom = star_minus(m), S = south_pole(m);
    auto endpoint = [&](const Vec& x) { return x == top || x == bottom; };
    std::vector<Vec> lam(c.n());
    for (std::size_t k = 0; k < c.n(); ++k)
        if (!endpoint(c.points[k]))
            lam[k] = lambda_map(c.points[k], eps);
    SphereConfiguration v(m, c.n());
    for (auto [i, j] : pairs_of(c.n())) {
        const Vec& xi = c.points[i - 1];
        const Vec& xj = c.points[j - 1];
        if (xi == xj)
            v.u.at(i, j) = endpoint(xi) ? S : unit_vector(lambda_jacobian(xi, eps) * c.u.at(i, j));
        else if (xi == top || xj == bottom)
            v.u.at(i, j) = S;
        else
            v.u.at(i, j) = unit_vector(lam[j - 1] - lam[i - 1]);
    }
    return v;
}

/// e^i: 1 <= i <= n doubles point i with u_{i,i+1} = *_S; i = 0 adds a
/// first point at *+; i = n+1 adds a last point at *-.
inline PointConfiguration insertion_e(const PointConfiguration& c, std::size_t i)
{
    const std::size_t n = c.n(), m = c.m;
    if (i > n + 1)
        throw std::out_of_range("insertion index " + std::to_string(i) + " out of range for " + std::to_string(n) +
                                " points");
    const Vec S = south_pole(m);
    PointConfiguration out;
    out.m = m;
    // position of each new point in the old configuration; nullopt = new endpoint
    std::vector<std::optional<std::size_t>> src;
    for (std::size_t k = 1; k <= n + 1; ++k) {
        if (i == 0)
            src.push_back(k == 1 ? std::nullopt : std::optional<std::size_t>(k - 1));
        else if (i == n + 1)
            src.push_back(k == n + 1 ? std::nullopt : std::optional<std::size_t>(k));
        else
            src.push_back(k <= i ? k : k - 1);
    }
    for (std::size_t k = 0; k <= n; ++k) {
        out.points.push_back(src[k] ? c.points[*src[k] - 1] : (i == 0 ? star_plus(m) : star_minus(m)));
        if (!c.tangents.empty())
            out.tangents.push_back(src[k] ? c.tangents[*src[k] - 1] : S);
    }
    out.u = PairFamily<Vec>(n + 1, S);
    for (auto [a, b] : pairs_of(n + 1)) {
        if (src[a - 1] && src[b - 1]) {
            out.u.at(a, b) = src[a - 1] == src[b - 1] ? S : c.u.at(*src[a - 1], *src[b - 1]);
            continue;
        }
        const Vec d = out.points[b - 1] - out.points[a - 1];
        out.u.at(a, b) = d.norm() > 0 ? Vec(d / d.norm()) : S;
    }
    return out;
}

/// Drops point i; inverse to insertion_e on the doubled point.
inline PointConfiguration forget_point(const PointConfiguration& c, std::size_t i)
{
    if (i < 1 || i > c.n())
        throw std::out_of_range("point index out of range");
    PointConfiguration out;
    out.m = c.m;
    auto up = [i](std::size_t x) { return x < i ? x : x + 1; };
    for (std::size_t k = 1; k < c.n(); ++k) {
        out.points.push_back(c.points[up(k) - 1]);
        if (!c.tangents.empty())
            out.tangents.push_back(c.tangents[up(k) - 1]);
    }
    out.u = PairFamily<Vec>(c.n() - 1, south_pole(c.m));
    for (auto [a, b] : pairs_of(c.n() - 1))
        out.u.at(a, b) = c.u.at(up(a), up(b));
    return out;
}

/// Random collared configuration, in index order: a block at *+, points on
/// the axis just below *+, interior points, points on the axis just above
/// *-, a block at *-, and then some interior points doubled.
inline PointConfiguration random_collared_configuration(std::size_t m, std::size_t n, double eps,
                                                        std::mt19937_64& rng)
{
    check_ambient(m);
    std::uniform_int_distribution<std::size_t> coin(0, 3);
    std::uniform_real_distribution<double> U(-1.0 + 2 * eps, 1.0 - 2 * eps);
    std::uniform_real_distribution<double> near(0.1 * eps, 0.9 * eps);
    std::vector<std::size_t> counts(5, 0);
    std::size_t left = n;
    for (std::size_t k = 0; k < 5 && left > 0; ++k) {
        const std::size_t c = k == 2 ? left : std::min(left, coin(rng) % 2);
        counts[k] = c;
        left -= c;
    }
    counts[2] += left;
    const Eigen::Index mm = static_cast<Eigen::Index>(m);
    std::vector<Vec> pts;
    for (std::size_t k = 0; k < counts[0]; ++k)
        pts.push_back(star_plus(m));
    {
        std::vector<double> h;
        for (std::size_t k = 0; k < counts[1]; ++k)
            h.push_back(1.0 - near(rng));
        std::sort(h.rbegin(), h.rend());
        for (double z : h)
            pts.push_back(basis_vector(m, m - 1, z));
    }
    for (std::size_t k = 0; k < counts[2]; ++k) {
        Vec p(mm);
        for (Eigen::Index a = 0; a < mm; ++a)
            p(a) = U(rng);
        pts.push_back(p);
    }
    {
        std::vector<double> h;
        for (std::size_t k = 0; k < counts[3]; ++k)
            h.push_back(-1.0 + near(rng));
        std::sort(h.rbegin(), h.rend());
        for (double z : h)
            pts.push_back(basis_vector(m, m - 1, z));
    }
    for (std::size_t k = 0; k < counts[4]; ++k)
        pts.push_back(star_minus(m));

    PointConfiguration c;
    c.m = m;
    c.points = pts;
    c.u = PairFamily<Vec>(pts.size(), south_pole(m));
    for (auto [a, b] : pairs_of(pts.size())) {
        const Vec d = pts[b - 1] - pts[a - 1];
        c.u.at(a, b) = d.norm() > 0 ? Vec(d / d.norm()) : south_pole(m);
    }
    for (std::size_t k = 0; k < pts.size(); ++k)
        c.tangents.push_back(random_unit(m, rng));
    // double a few points; interior doubles get a random direction
    std::uniform_int_distribution<std::size_t> dup(0, 2);
    for (std::size_t k = dup(rng); k > 0 && c.n() > 0; --k) {
        std::uniform_int_distribution<std::size_t> which(1, c.n());
        const std::size_t i = which(rng);
        PointConfiguration d = insertion_e(c, i);
        const Vec& x = d.points[i - 1];
        if ((x - star_plus(m)).norm() >= eps && (x - star_minus(m)).norm() >= eps)
            d.u.at(i, i + 1) = random_unit(m, rng);
        c = std::move(d);
    }
    return c;
}

// ---------------------------------------------------------------------------
// Long curves and evaluation maps

/// A C^1 long curve f: [-1,1] -> cube with f(-1) = *+, f(1) = *- and
/// f'(+-1) pointing along *_S.
struct LongCurve {
    std::string name;
    std::size_t m = 3;
    std::function<Vec(double)> f;
    std::function<Vec(double)> df;
};

inline LongCurve straight_unknot(std::size_t m)
{
    check_ambient(m);
    return {"unknot", m, [m](double t) { return basis_vector(m, m - 1, -t); },
            [m](double) { return south_pole(m); }};
}

/// Shastri's polynomial trefoil (s^3-3s, s^4-4s^2, s^5-10s) on s = 2t,
/// shrunk into the cube and blended into the vertical axis near the ends
/// by a C^1 cutoff. Extra dimensions stay at zero.
inline LongCurve long_trefoil(std::size_t m = 3)
{
    check_ambient(m);
    if (m < 3)
        throw std::invalid_argument("the trefoil needs at least three dimensions");
    auto knot = [](double s) {
        return std::array<double, 3>{0.25 * (s * s * s - 3 * s), 0.2 * (s * s * s * s - 4 * s * s),
                                     -(s * s * s * s * s - 10 * s) / 12.0};
    };
    auto dknot = [](double s) {
        return std::array<double, 3>{0.25 * (3 * s * s - 3), 0.2 * (4 * s * s * s - 8 * s),
                                     -(5 * s * s * s * s - 10) / 12.0};
    };
    // phi = 1 on |t| <= 0.8, 0 on |t| >= 0.9, smoothstep between; the
    // curve is the straight axis inside both collars
    auto phi = [](double t) {
        const double a = std::abs(t);
        if (a <= 0.8)
            return 1.0;
        if (a >= 0.9)
            return 0.0;
        const double r = (0.9 - a) / 0.1;
        return r * r * (3 - 2 * r);
    };
    auto dphi = [](double t) {
        const double a = std::abs(t);
        if (a <= 0.8 || a >= 0.9)
            return 0.0;
        const double r = (0.9 - a) / 0.1;
        const double d = -6 * r * (1 - r) / 0.1;
        return t < 0 ? -d : d;
    };
    auto f = [=](double t) {
        const auto k = knot(2 * t);
        const double p = phi(t);
        Vec v = Vec::Zero(static_cast<Eigen::Index>(m));
        v(0) = p * k[0];
        v(1) = p * k[1];
        v(static_cast<Eigen::Index>(m - 1)) = p * k[2] + (1 - p) * (-t);
        return v;
    };
    auto df = [=](double t) {
        const auto k = knot(2 * t);
        const auto dk = dknot(2 * t);
        const double p = phi(t), dp = dphi(t);
        Vec v = Vec::Zero(static_cast<Eigen::Index>(m));
        v(0) = dp * k[0] + p * 2 * dk[0];
        v(1) = dp * k[1] + p * 2 * dk[1];
        v(static_cast<Eigen::Index>(m - 1)) = dp * (k[2] + t) + p * 2 * dk[2] - (1 - p);
        return v;
    };
    return {"trefoil", m, f, df};
}

inline LongCurve curve_by_name(const std::string& name, std::size_t m)
{
    if (name == "unknot")
        return straight_unknot(m);
    if (name == "trefoil")
        return long_trefoil(m);
    throw std::invalid_argument("unknown curve '" + name + "' (expected unknot or trefoil)");
}

/// ev_n(f): points f(t_i), tangents u(f'(t_i)), and u_ij = u(f(t_j) - f(t_i))
/// for distinct times or u(f'(t_i)) for repeated ones.
inline PointConfiguration knot_eval(const LongCurve& curve, const std::vector<double>& times)
{
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!(times[k] >= -1.0 && times[k] <= 1.0))
            throw std::invalid_argument("times must lie in [-1,1]");
        if (k > 0 && times[k] < times[k - 1])
            throw std::invalid_argument("times must be weakly increasing");
    }
    PointConfiguration c;
    c.m = curve.m;
    for (double t : times) {
        c.points.push_back(curve.f(t));
        const Vec d = curve.df(t);
        if (d.norm() == 0.0)
            throw std::domain_error("curve has zero derivative at t = " + std::to_string(t));
        c.tangents.push_back(d / d.norm());
    }
    c.u = PairFamily<Vec>(times.size(), south_pole(c.m));
    for (auto [i, j] : pairs_of(times.size())) {
        if (times[i - 1] == times[j - 1]) {
            c.u.at(i, j) = c.tangents[i - 1];
            continue;
        }
        const Vec d = c.points[j - 1] - c.points[i - 1];
        if (d.norm() == 0.0)
            throw std::domain_error("curve is not injective on the sampled times");
        c.u.at(i, j) = d / d.norm();
    }
    return c;
}

// ---------------------------------------------------------------------------
// Batched checks

struct GeometryBounds {
    std::size_t trials = 1000;
    double tol = 1e-9;
    double limit_tol = 1e-4;
    double limit_time = 1e-6;
    std::size_t probes = 20;
    std::uint64_t seed = 42;
    unsigned threads = 1;
};

/// Gauss maps of random configurations, m in {3,4,5} and 3 <= n <= 6.
inline Report check_gauss_membership(const GeometryBounds& b)
{
    std::vector<Report> parts(b.trials, Report("gauss-membership"));
    parallel_for(b.trials, b.threads, [&](std::size_t k) {
        auto rng = task_stream(b.seed, k, 0x9a55);
        const std::size_t m = 3 + k % 3, n = 3 + (k / 3) % 4;
        const auto s = gauss_map(random_points(m, n, rng));
        parts[k].merge(check_membership(s, b.tol, b.probes, b.seed + k));
    });
    Report out("gauss-membership");
    for (auto& p : parts)
        out.merge(p);
    return out;
}

/// Reduced trees with up to `max_leaves` leaves, at least one internal edge
/// and at most `max_vertices` non-leaf vertices.
inline std::vector<RpTree> composite_shapes(std::size_t max_leaves = 6, std::size_t max_vertices = 3)
{
    std::vector<RpTree> out;
    for (std::size_t n = 2; n <= max_leaves; ++n)
        for (auto& t : enumerate_trees(n))
            if (t.vertices().size() >= 2 && t.vertices().size() <= max_vertices)
                out.push_back(std::move(t));
    return out;
}

/// Kontsevich composites of random Gauss-map inputs stay in the space,
/// `trials` per tree shape, m cycling through {3,4,5}.
inline Report check_composite_membership(const GeometryBounds& b, std::size_t max_leaves = 6,
                                         std::size_t max_vertices = 3)
{
    const auto shapes = composite_shapes(max_leaves, max_vertices);
    std::vector<Report> parts(shapes.size(), Report("composite-membership"));
    parallel_for(shapes.size(), b.threads, [&](std::size_t si) {
        const RpTree& t = shapes[si];
        const auto verts = t.vertices();
        for (std::size_t k = 0; k < b.trials; ++k) {
            auto rng = task_stream(b.seed, si * b.trials + k, 0xc0);
            const std::size_t m = 3 + k % 3;
            std::vector<SphereConfiguration> in;
            for (const auto& v : verts) {
                const std::size_t a = t.node(v).arity();
                in.push_back(a < 2 ? SphereConfiguration(m, a) : gauss_map(random_points(m, a, rng)));
            }
            const auto w = kontsevich_compose(t, in).u;
            Report r = check_membership({m, w}, b.tol, b.probes, b.seed + k);
            if (!r.passed())
                parts[si].fail("composite leaves the space", {{"tree", t.to_string()}, {"trial", k}, {"report", r.to_json()}});
            parts[si].count(r.checked());
            parts[si].residual(r.max_residual());
        }
    });
    Report out("composite-membership");
    for (auto& p : parts)
        out.merge(p);
    return out;
}

/// pi_k o e^i = d^i o pi_k exactly, 0 <= i <= n+1, on random collared inputs
/// with 1 <= n <= max_n points.
inline Report check_naturality(const GeometryBounds& b, std::size_t inputs = 100, std::size_t max_n = 6,
                               double eps = kDefaultEpsilon)
{
    Report rep("naturality");
    for (std::size_t k = 0; k < inputs; ++k) {
        auto rng = task_stream(b.seed, k, 0x7a7);
        const std::size_t m = 3 + k % 3;
        const std::size_t n = 1 + k % max_n;
        PointConfiguration c = random_collared_configuration(m, n, eps, rng);
        while (c.n() > max_n)
            c = forget_point(c, c.n() / 2 + 1);
        const SphereConfiguration base = project_pi_k(c, eps);
        for (std::size_t i = 0; i <= c.n() + 1; ++i) {
            const SphereConfiguration lhs = project_pi_k(insertion_e(c, i), eps);
            const SphereConfiguration rhs = kontsevich_coface(base, i);
            const KontsevichOperad op = kontsevich_operad(m);
            rep.expect(op.equal(lhs.u, rhs.u), "pi o e^i = d^i o pi", [&] {
                return nlohmann::json{{"input", c.to_json()}, {"i", i}, {"distance", max_distance(lhs, rhs)}};
            });
        }
    }
    return rep;
}

/// Two-level trees (a root with one level of vertices) with at most
/// `max_leaves` leaves and at least one vertex above the root.
inline std::vector<RpTree> two_level_shapes(std::size_t max_leaves = 4)
{
    std::vector<RpTree> out;
    for (std::size_t n = 2; n <= max_leaves; ++n)
        for (auto& t : enumerate_trees(n)) {
            if (t.vertices().size() < 2)
                continue;
            bool shallow = true;
            for (const auto& c : t.root().children)
                if (!c.leaf)
                    for (const auto& g : c.children)
                        shallow = shallow && g.leaf;
            if (shallow)
                out.push_back(std::move(t));
        }
    return out;
}

/// Endpoints of the disks homotopy: at t = 1 it is the Gauss map of the
/// composed disks, and at small t it approaches the Kontsevich composite.
inline Report check_disks_comparison(const GeometryBounds& b, std::size_t inputs = 100, std::size_t max_leaves = 4)
{
    Report rep("disks-comparison");
    const auto shapes = two_level_shapes(max_leaves);
    for (std::size_t si = 0; si < shapes.size(); ++si) {
        const RpTree& t = shapes[si];
        const auto verts = t.vertices();
        for (std::size_t k = 0; k < inputs; ++k) {
            auto rng = task_stream(b.seed, si * inputs + k, 0xd15c);
            const std::size_t m = 2 + k % 3;
            std::vector<DiskConfiguration> in;
            for (const auto& v : verts)
                in.push_back(random_disks(m, t.node(v).arity(), rng));
            const double at_one = max_distance(disks_homotopy(t, in, 1.0), gauss_map(disks_compose(t, in).centers));
            const double at_zero = max_distance(disks_homotopy(t, in, b.limit_time), disks_limit(t, in));
            rep.residual(at_zero);
            rep.expect(at_one <= 1e-12, "H(1) = gauss o compose",
                       [&] { return nlohmann::json{{"tree", t.to_string()}, {"trial", k}, {"distance", at_one}}; });
            rep.expect(at_zero <= b.limit_tol, "H(t) -> Kontsevich composite", [&] {
                return nlohmann::json{{"tree", t.to_string()}, {"trial", k}, {"distance", at_zero}};
            });
        }
    }
    return rep;
}

} // namespace operadkit
