#pragma once

// The Poisson operad with bracket of degree n over exact rationals.
//
// A Lie word is stored as its letters in left-normed order, so {1,3,2} is
// [[x1,x3],x2]; in normal form the first letter is the smallest. A monomial
// is a product of Lie words sorted by their smallest letter. Products are
// graded commutative for the degree (len-1)*n of each word.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <gmpxx.h>
#include <json.hpp>

#include "rational.hpp"

namespace operadkit {

using Letter = std::uint8_t;
// basic_string keeps short words inline, which avoids a heap block per word
using LieWord = std::basic_string<Letter>;
using Monomial = std::vector<LieWord>;
using Terms = std::map<Monomial, Rational>;
using LieTerms = std::map<LieWord, Rational>;

inline void accumulate(Terms& t, const Monomial& m, const Rational& c)
{
    if (c.is_zero())
        return;
    auto [it, fresh] = t.emplace(m, c);
    if (!fresh) {
        it->second += c;
        if (it->second.is_zero())
            t.erase(it);
    }
}

inline void accumulate(LieTerms& t, const LieWord& w, const Rational& c)
{
    if (c.is_zero())
        return;
    auto [it, fresh] = t.emplace(w, c);
    if (!fresh) {
        it->second += c;
        if (it->second.is_zero())
            t.erase(it);
    }
}

inline std::size_t bracket_count(const Monomial& m)
{
    std::size_t r = 0;
    for (const auto& w : m)
        r += w.size() - 1;
    return r;
}

inline std::size_t letter_count(const Monomial& m)
{
    std::size_t k = 0;
    for (const auto& w : m)
        k += w.size();
    return k;
}

inline std::string word_to_string(const LieWord& w)
{
    std::string s = "x" + std::to_string(w[0]);
    for (std::size_t k = 1; k < w.size(); ++k)
        s = "[" + s + ",x" + std::to_string(w[k]) + "]";
    return s;
}

inline std::string monomial_to_string(const Monomial& m)
{
    if (m.empty())
        return "1";
    std::string s;
    for (std::size_t k = 0; k < m.size(); ++k) {
        if (k)
            s += ' ';
        s += word_to_string(m[k]);
    }
    return s;
}

inline std::string terms_to_string(const Terms& t)
{
    if (t.empty())
        return "0";
    std::string s;
    bool first = true;
    for (const auto& [m, c] : t) {
        Rational a = abs(c);
        if (first)
            s += c.sign() < 0 ? "-" : "";
        else
            s += c.sign() < 0 ? " - " : " + ";
        if (a != 1)
            s += a.str() + " * ";
        s += monomial_to_string(m);
        first = false;
    }
    return s;
}

/// Sign conventions that the defining rules leave open. The defaults are the
/// ones under which the operad axioms hold for both parities of n.
struct PoissonConventions {
    /// Extra 1 in the exponent of the Leibniz sign (-1)^{(|a|+n+shift)|b|}.
    int leibniz_shift = 0;
    /// Koszul sign for carrying the inserted element past the brackets that
    /// stand to the right of x_i when a monomial is written in infix form.
    bool koszul_circ = true;
};

/// Bracket, product and rewriting rules for a fixed bracket degree n.
class PoissonAlgebra {
public:
    explicit PoissonAlgebra(int n, PoissonConventions conv = {}) : n_(n), conv_(conv)
    {
        if (n < 1)
            throw std::invalid_argument("bracket degree must be at least 1");
    }

    int n() const { return n_; }
    const PoissonConventions& conventions() const { return conv_; }

    int word_degree(const LieWord& w) const { return static_cast<int>(w.size() - 1) * n_; }
    int degree(const Monomial& m) const { return static_cast<int>(bracket_count(m)) * n_; }

    /// Sorts blocks by smallest letter, returning the Koszul sign.
    int sort_blocks(Monomial& m) const
    {
        int sign = 1;
        for (std::size_t a = 1; a < m.size(); ++a)
            for (std::size_t b = a; b > 0 && m[b][0] < m[b - 1][0]; --b) {
                if ((word_degree(m[b]) * word_degree(m[b - 1])) % 2)
                    sign = -sign;
                std::swap(m[b], m[b - 1]);
            }
        return sign;
    }

    Terms product(const Terms& x, const Terms& y) const
    {
        Terms out;
        for (const auto& [mx, cx] : x)
            for (const auto& [my, cy] : y) {
                Monomial m = mx;
                m.insert(m.end(), my.begin(), my.end());
                const int s = sort_blocks(m);
                accumulate(out, m, s > 0 ? Rational(cx * cy) : Rational(-cx * cy));
            }
        return out;
    }

    /// [w1, w2] of two normal-form Lie words on disjoint letters.
    LieTerms lie_bracket(const LieWord& w1, const LieWord& w2) const
    {
        if (w2[0] < w1[0]) {
            // [a,b] = -(-1)^{(|a|+n)(|b|+n)} [b,a]
            const int e = (word_degree(w1) + n_) * (word_degree(w2) + n_);
            LieTerms t = lie_bracket(w2, w1);
            if (e % 2 == 0)
                negate(t);
            return t;
        }
        LieTerms u{{w1, Rational(1)}};
        return bracket_left_normed(u, w2, w2.size());
    }

    /// [u, [..[c1,c2],..,cs]] for u a combination of words whose first letter
    /// is below every c. Jacobi peels off the last letter of the right side.
    LieTerms bracket_left_normed(const LieTerms& u, const LieWord& c, std::size_t s) const
    {
        if (s == 1)
            return append(u, c[0]);
        LieTerms out = append(bracket_left_normed(u, c, s - 1), c[s - 1]);
        LieTerms other = bracket_left_normed(append(u, c[s - 1]), c, s - 1);
        const bool plus = ((s - 1) * static_cast<std::size_t>(n_)) % 2 == 1;
        for (const auto& [w, k] : other)
            accumulate(out, w, plus ? k : Rational(-k));
        return out;
    }

    /// Rewrites a left-normed word, in any letter order, to normal form.
    LieTerms min_first(const LieWord& w) const
    {
        auto it = std::min_element(w.begin(), w.end());
        if (it == w.begin())
            return {{w, Rational(1)}};
        const std::size_t p = static_cast<std::size_t>(it - w.begin());
        LieWord prefix(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(p));
        // the prefix is itself a word that may need rewriting
        LieTerms pre = min_first_checked(prefix);
        // [P, x_m] = -(-1)^{(|P|+n)n} [x_m, P]
        LieTerms out;
        const int e = ((static_cast<int>(p) - 1) * n_ + n_) * n_;
        for (const auto& [pw, pc] : pre) {
            LieTerms t = bracket_left_normed({{LieWord{*it}, Rational(1)}}, pw, pw.size());
            for (const auto& [tw, tc] : t)
                accumulate(out, tw, e % 2 ? Rational(pc * tc) : Rational(-pc * tc));
        }
        for (std::size_t k = p + 1; k < w.size(); ++k)
            out = append(out, w[k]);
        return out;
    }

    /// Bracket of two elements of the symmetric algebra on Lie words.
    Terms bracket(const Terms& x, const Terms& y) const
    {
        Terms out;
        for (const auto& [mx, cx] : x)
            for (const auto& [my, cy] : y) {
                Terms t = bracket(mx, my);
                const Rational c = cx * cy;
                for (const auto& [m, k] : t)
                    accumulate(out, m, c * k);
            }
        return out;
    }

    Terms bracket(const Monomial& x, const Monomial& y) const
    {
        if (x.empty() || y.empty())
            return {};
        if (y.size() >= 2) {
            // [X, bY'] = [X,b]Y' + (-1)^{(|X|+n+shift)|b|} b[X,Y']
            const Monomial b{y[0]};
            const Monomial rest(y.begin() + 1, y.end());
            Terms out = product(bracket(x, b), Terms{{rest, Rational(1)}});
            Terms second = product(Terms{{b, Rational(1)}}, bracket(x, rest));
            const int e = (degree(x) + n_ + conv_.leibniz_shift) * word_degree(y[0]);
            for (const auto& [m, k] : second)
                accumulate(out, m, e % 2 ? Rational(-k) : k);
            return out;
        }
        if (x.size() >= 2) {
            const int e = (degree(x) + n_) * (degree(y) + n_);
            Terms t = bracket(y, x);
            if (e % 2 == 0)
                negate(t);
            return t;
        }
        Terms out;
        for (const auto& [w, k] : lie_bracket(x[0], y[0]))
            accumulate(out, Monomial{w}, k);
        return out;
    }

    template <class T>
    static void negate(T& t)
    {
        for (auto& kv : t)
            kv.second = -kv.second;
    }

private:
    int n_;
    PoissonConventions conv_;

    static LieTerms append(const LieTerms& u, Letter c)
    {
        LieTerms out;
        for (const auto& [w, k] : u) {
            LieWord v = w;
            v.push_back(c);
            out.emplace_hint(out.end(), std::move(v), k);
        }
        return out;
    }

    LieTerms min_first_checked(const LieWord& w) const
    {
        if (w.size() == 1)
            return {{w, Rational(1)}};
        return min_first(w);
    }
};

// ---------------------------------------------------------------------------
// Expressions

/// Bracket/product expression in named variables, as typed by a user.
/// Linear combinations with rational coefficients are allowed at any level.
struct PoissonExpr {
    enum class Kind { one, var, bracket, product, sum };
    Kind kind = Kind::one;
    Letter var = 0;
    std::vector<PoissonExpr> args;
    std::vector<Rational> coeffs; // one per summand when kind == sum

    static PoissonExpr x(unsigned i) { return {Kind::var, static_cast<Letter>(i), {}, {}}; }
    static PoissonExpr br(PoissonExpr a, PoissonExpr b)
    {
        PoissonExpr e{Kind::bracket, 0, {}, {}};
        e.args.push_back(std::move(a));
        e.args.push_back(std::move(b));
        return e;
    }
    static PoissonExpr prod(std::vector<PoissonExpr> fs) { return {Kind::product, 0, std::move(fs), {}}; }

    /// Variables of the expression; every summand of a sum must use the same ones.
    void letters(std::vector<Letter>& out) const
    {
        if (kind == Kind::var)
            out.push_back(var);
        if (kind == Kind::sum) {
            std::vector<Letter> first;
            for (std::size_t k = 0; k < args.size(); ++k) {
                std::vector<Letter> ls;
                args[k].letters(ls);
                std::sort(ls.begin(), ls.end());
                if (k == 0)
                    first = ls;
                else if (ls != first)
                    throw std::invalid_argument("summands use different variables");
            }
            out.insert(out.end(), first.begin(), first.end());
            return;
        }
        for (const auto& a : args)
            a.letters(out);
    }

    static PoissonExpr parse(std::string_view s);
};

namespace detail {

class ExprParser {
public:
    explicit ExprParser(std::string_view s) : s_(s) {}

    PoissonExpr parse_all()
    {
        PoissonExpr e = sum();
        skip();
        if (pos_ != s_.size())
            fail("trailing characters");
        return e;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& why) const
    {
        throw std::invalid_argument("malformed expression at offset " + std::to_string(pos_) + ": " + why);
    }
    void skip()
    {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
            ++pos_;
    }
    bool at_factor()
    {
        skip();
        return pos_ < s_.size() && (s_[pos_] == 'x' || s_[pos_] == '[' || s_[pos_] == '(' || s_[pos_] == '1');
    }
    PoissonExpr sum()
    {
        PoissonExpr out{PoissonExpr::Kind::sum, 0, {}, {}};
        skip();
        bool first = true;
        while (true) {
            skip();
            bool neg = false;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) {
                neg = s_[pos_] == '-';
                ++pos_;
                skip();
            } else if (!first) {
                break;
            }
            Rational c(1);
            if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
                c = number();
            out.coeffs.push_back(neg ? -c : c);
            out.args.push_back(at_factor() ? product() : PoissonExpr{});
            first = false;
        }
        if (out.args.size() == 1 && out.coeffs[0] == Rational(1))
            return std::move(out.args[0]);
        return out;
    }
    Rational number()
    {
        auto digits = [&] {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
                ++pos_;
            if (start == pos_)
                fail("expected digits");
            return mpz_class(std::string(s_.substr(start, pos_ - start)));
        };
        const mpz_class num = digits();
        mpz_class den = 1;
        if (pos_ < s_.size() && s_[pos_] == '/') {
            ++pos_;
            den = digits();
            if (den == 0)
                fail("zero denominator");
        }
        mpq_class q(num, den);
        q.canonicalize();
        return Rational(q);
    }
    PoissonExpr product()
    {
        std::vector<PoissonExpr> fs;
        while (at_factor())
            fs.push_back(factor());
        if (fs.empty())
            fail("expected a factor");
        if (fs.size() == 1)
            return std::move(fs[0]);
        return PoissonExpr::prod(std::move(fs));
    }
    PoissonExpr factor()
    {
        skip();
        char c = s_[pos_];
        if (c == '1') {
            ++pos_;
            return PoissonExpr{};
        }
        if (c == 'x') {
            ++pos_;
            std::size_t start = pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
                ++pos_;
            if (start == pos_)
                fail("variable without index");
            unsigned long v = std::stoul(std::string(s_.substr(start, pos_ - start)));
            if (v < 1 || v > 250)
                fail("variable index out of range");
            return PoissonExpr::x(static_cast<unsigned>(v));
        }
        if (c == '(') {
            ++pos_;
            PoissonExpr e = sum();
            skip();
            if (pos_ >= s_.size() || s_[pos_] != ')')
                fail("expected ')'");
            ++pos_;
            return e;
        }
        ++pos_; // '['
        PoissonExpr a = sum();
        skip();
        if (pos_ >= s_.size() || s_[pos_] != ',')
            fail("expected ','");
        ++pos_;
        PoissonExpr b = sum();
        skip();
        if (pos_ >= s_.size() || s_[pos_] != ']')
            fail("expected ']'");
        ++pos_;
        return PoissonExpr::br(std::move(a), std::move(b));
    }
};

} // namespace detail

inline PoissonExpr PoissonExpr::parse(std::string_view s) { return detail::ExprParser(s).parse_all(); }

inline Terms evaluate(const PoissonAlgebra& alg, const PoissonExpr& e)
{
    switch (e.kind) {
    case PoissonExpr::Kind::one:
        return {{Monomial{}, Rational(1)}};
    case PoissonExpr::Kind::var:
        return {{Monomial{LieWord{e.var}}, Rational(1)}};
    case PoissonExpr::Kind::bracket:
        return alg.bracket(evaluate(alg, e.args[0]), evaluate(alg, e.args[1]));
    case PoissonExpr::Kind::product: {
        Terms t{{Monomial{}, Rational(1)}};
        for (const auto& f : e.args)
            t = alg.product(t, evaluate(alg, f));
        return t;
    }
    case PoissonExpr::Kind::sum: {
        Terms t;
        for (std::size_t k = 0; k < e.args.size(); ++k)
            for (const auto& [m, c] : evaluate(alg, e.args[k]))
                accumulate(t, m, c * e.coeffs[k]);
        return t;
    }
    }
    return {};
}

// ---------------------------------------------------------------------------
// Elements and the basis

struct PoissonElement {
    std::size_t arity = 0;
    Terms terms;

    bool is_zero() const { return terms.empty(); }
    friend bool operator==(const PoissonElement&, const PoissonElement&) = default;
    std::string to_string() const { return terms_to_string(terms); }
};

/// Normal form of an expression; its variables must be exactly x1..xk.
inline PoissonElement normalize(const PoissonAlgebra& alg, const PoissonExpr& e)
{
    std::vector<Letter> ls;
    e.letters(ls);
    std::vector<Letter> sorted = ls;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument("repeated variable in expression");
    for (std::size_t k = 0; k < sorted.size(); ++k)
        if (sorted[k] != k + 1)
            throw std::invalid_argument("variables must be exactly x1..xk");
    return {ls.size(), evaluate(alg, e)};
}

inline PoissonElement normalize(const PoissonAlgebra& alg, std::string_view text)
{
    return normalize(alg, PoissonExpr::parse(text));
}

namespace detail {

// Restricted growth strings enumerate set partitions of {1..k}.
inline void set_partitions(std::size_t k, std::vector<std::vector<Letter>>& cur, std::size_t next,
                           std::vector<std::vector<std::vector<Letter>>>& out)
{
    if (next > k) {
        out.push_back(cur);
        return;
    }
    for (std::size_t b = 0; b < cur.size(); ++b) {
        cur[b].push_back(static_cast<Letter>(next));
        set_partitions(k, cur, next + 1, out);
        cur[b].pop_back();
    }
    cur.push_back({static_cast<Letter>(next)});
    set_partitions(k, cur, next + 1, out);
    cur.pop_back();
}

inline std::vector<LieWord> block_words(const std::vector<Letter>& block)
{
    std::vector<LieWord> out;
    std::vector<Letter> rest(block.begin() + 1, block.end());
    do {
        LieWord w{block[0]};
        w.insert(w.end(), rest.begin(), rest.end());
        out.push_back(std::move(w));
    } while (std::next_permutation(rest.begin(), rest.end()));
    return out;
}

inline std::vector<Monomial> build_basis(std::size_t k)
{
    std::vector<std::vector<std::vector<Letter>>> parts;
    std::vector<std::vector<Letter>> cur;
    if (k == 0)
        parts.push_back({});
    else
        set_partitions(k, cur, 1, parts);
    std::vector<Monomial> out;
    for (const auto& p : parts) {
        std::vector<std::vector<LieWord>> choices;
        for (const auto& blk : p)
            choices.push_back(block_words(blk));
        std::vector<std::size_t> idx(choices.size(), 0);
        while (true) {
            Monomial m;
            for (std::size_t b = 0; b < choices.size(); ++b)
                m.push_back(choices[b][idx[b]]);
            out.push_back(std::move(m));
            std::size_t b = 0;
            while (b < idx.size() && ++idx[b] == choices[b].size())
                idx[b++] = 0;
            if (b == idx.size())
                break;
        }
    }
    std::sort(out.begin(), out.end(), [](const Monomial& a, const Monomial& b) {
        auto ra = bracket_count(a), rb = bracket_count(b);
        return ra != rb ? ra < rb : a < b;
    });
    return out;
}

} // namespace detail

/// Basis monomials of arity k, ordered by bracket count then lexicographically.
/// Independent of n; memoized and shared.
struct PoissonBasis {
    std::vector<Monomial> monomials;
    std::map<Monomial, std::size_t> index;
    std::vector<std::size_t> slice_begin; // slice_begin[r] = first with r brackets; size = k+1 (or 1)

    std::size_t slice_size(std::size_t r) const
    {
        if (r + 1 >= slice_begin.size())
            return 0;
        return slice_begin[r + 1] - slice_begin[r];
    }
};

inline constexpr std::size_t kMaxPoissonArity = 9;

inline const PoissonBasis& poisson_basis(std::size_t k)
{
    if (k > kMaxPoissonArity)
        throw std::length_error("Poisson basis arity bound exceeded");
    static std::mutex lock;
    static std::map<std::size_t, std::shared_ptr<const PoissonBasis>> cache;
    std::lock_guard<std::mutex> g(lock);
    auto& slot = cache[k];
    if (!slot) {
        auto b = std::make_shared<PoissonBasis>();
        b->monomials = detail::build_basis(k);
        const std::size_t top = k == 0 ? 0 : k - 1;
        b->slice_begin.assign(top + 2, b->monomials.size());
        for (std::size_t i = b->monomials.size(); i-- > 0;)
            b->slice_begin[bracket_count(b->monomials[i])] = i;
        for (std::size_t r = top + 1; r-- > 0;)
            b->slice_begin[r] = std::min(b->slice_begin[r], b->slice_begin[r + 1]);
        for (std::size_t i = 0; i < b->monomials.size(); ++i)
            b->index.emplace(b->monomials[i], i);
        slot = std::move(b);
    }
    return *slot;
}

/// Basis of Poiss_n(k); n only fixes the grading q = n * (bracket count).
inline std::vector<PoissonElement> basis(int n, std::size_t k)
{
    if (n < 1)
        throw std::invalid_argument("bracket degree must be at least 1");
    std::vector<PoissonElement> out;
    for (const auto& m : poisson_basis(k).monomials)
        out.push_back({k, {{m, Rational(1)}}});
    return out;
}

// ---------------------------------------------------------------------------
// The operad

class PoissonOperad {
public:
    using element_type = PoissonElement;

    explicit PoissonOperad(int n, PoissonConventions conv = {}) : alg_(n, conv) {}

    const PoissonAlgebra& algebra() const { return alg_; }
    int n() const { return alg_.n(); }

    std::size_t arity(const PoissonElement& a) const { return a.arity; }

    /// Degree of a homogeneous element; zero has degree 0.
    int degree(const PoissonElement& a) const
    {
        if (a.terms.empty())
            return 0;
        const int q = alg_.degree(a.terms.begin()->first);
        for (const auto& [m, c] : a.terms)
            if (alg_.degree(m) != q)
                throw std::invalid_argument("element is not homogeneous");
        return q;
    }

    PoissonElement negate(PoissonElement a) const
    {
        PoissonAlgebra::negate(a.terms);
        return a;
    }

    PoissonElement compose(const PoissonElement& a, std::size_t i, const PoissonElement& b) const
    {
        if (i < 1 || i > a.arity)
            throw std::out_of_range("composition position " + std::to_string(i) + " out of range for arity " +
                                    std::to_string(a.arity));
        PoissonElement out{a.arity + b.arity - 1, {}};
        for (const auto& [ma, ca] : a.terms)
            for (const auto& [mb, cb] : b.terms) {
                const Rational c = ca * cb;
                for (const auto& [m, k] : compose_monomials(ma, i, mb, b.arity))
                    accumulate(out.terms, m, c * k);
            }
        return out;
    }

    PoissonElement unit() const { return {1, {{Monomial{LieWord{1}}, Rational(1)}}}; }
    PoissonElement nullary() const { return {0, {{Monomial{}, Rational(1)}}}; }
    PoissonElement multiplication() const { return {2, {{Monomial{LieWord{1}, LieWord{2}}, Rational(1)}}}; }

    /// Forgets x_i: zero on monomials where x_i sits in a bracket, otherwise
    /// drops the free x_i and relabels.
    PoissonElement contract_leaf(const PoissonElement& a, std::size_t i) const
    {
        if (i < 1 || i > a.arity)
            throw std::out_of_range("codegeneracy index " + std::to_string(i) + " out of range for arity " +
                                    std::to_string(a.arity));
        PoissonElement out{a.arity - 1, {}};
        const Letter x = static_cast<Letter>(i);
        for (const auto& [m, c] : a.terms) {
            Monomial r;
            bool killed = false;
            for (const auto& w : m) {
                if (w.size() == 1 && w[0] == x)
                    continue;
                if (std::find(w.begin(), w.end(), x) != w.end()) {
                    killed = true;
                    break;
                }
                LieWord v = w;
                for (auto& l : v)
                    if (l > x)
                        --l;
                r.push_back(std::move(v));
            }
            if (!killed)
                accumulate(out.terms, r, c);
        }
        return out;
    }

    bool equal(const PoissonElement& a, const PoissonElement& b) const { return a == b; }

    std::vector<PoissonElement> samples(std::size_t k, int) const { return basis(n(), k); }

    nlohmann::json to_json(const PoissonElement& a) const
    {
        nlohmann::json terms = nlohmann::json::array();
        for (const auto& [m, c] : a.terms)
            terms.push_back({{"monomial", monomial_to_string(m)},
                             {"num", c.numerator().get_str()},
                             {"den", c.denominator().get_str()}});
        return {{"arity", a.arity}, {"text", a.to_string()}, {"terms", terms}};
    }

    static PoissonElement from_json(const nlohmann::json& j, const PoissonAlgebra& alg)
    {
        PoissonElement e{j.at("arity").get<std::size_t>(), {}};
        for (const auto& t : j.at("terms")) {
            mpq_class q(mpz_class(t.at("num").get<std::string>()), mpz_class(t.at("den").get<std::string>()));
            q.canonicalize();
            const Rational c(q);
            for (const auto& [m, k] : evaluate(alg, PoissonExpr::parse(t.at("monomial").get<std::string>())))
                accumulate(e.terms, m, c * k);
        }
        return e;
    }

    // Cofaces and codegeneracies of the cosimplicial object with mu = x1 x2.
    PoissonElement coface(std::size_t i, const PoissonElement& e) const
    {
        if (i > e.arity + 1)
            throw std::out_of_range("coface index out of range");
        if (i == 0)
            return compose(multiplication(), 2, e);
        if (i == e.arity + 1)
            return compose(multiplication(), 1, e);
        return compose(e, i, multiplication());
    }
    PoissonElement codegeneracy(std::size_t i, const PoissonElement& e) const { return contract_leaf(e, i); }

private:
    PoissonAlgebra alg_;

    Terms compose_monomials(const Monomial& ma, std::size_t i, const Monomial& mb, std::size_t kb) const
    {
        const Letter xi = static_cast<Letter>(i);
        // relabel the inserted monomial into the block [i, i+kb)
        Monomial nb = mb;
        for (auto& w : nb)
            for (auto& l : w)
                l = static_cast<Letter>(l + i - 1);
        // locate x_i, shifting the letters above it
        Monomial na = ma;
        std::size_t blk = SIZE_MAX, pos = 0;
        for (std::size_t b = 0; b < na.size(); ++b)
            for (std::size_t p = 0; p < na[b].size(); ++p) {
                Letter& l = na[b][p];
                if (l == xi) {
                    blk = b;
                    pos = p;
                } else if (l > xi) {
                    l = static_cast<Letter>(l + kb - 1);
                }
            }
        int sign = 1;
        if (alg_.conventions().koszul_circ) {
            // brackets to the right of x_i in infix order: those closing the
            // rest of its own word, then every bracket of the later blocks
            int later = static_cast<int>(na[blk].size() - pos - 1) * alg_.n();
            for (std::size_t b = blk + 1; b < na.size(); ++b)
                later += alg_.word_degree(na[b]);
            if ((later * alg_.degree(nb)) % 2)
                sign = -1;
        }
        const LieWord w = na[blk];
        Monomial before(na.begin(), na.begin() + static_cast<std::ptrdiff_t>(blk));
        Monomial after(na.begin() + static_cast<std::ptrdiff_t>(blk) + 1, na.end());

        Terms replaced;
        if (w.size() == 1) {
            replaced = {{nb, Rational(1)}};
        } else if (nb.size() == 1) {
            // a single word goes into a word: stay inside the free Lie algebra
            LieTerms acc;
            if (pos == 0) {
                acc = {{nb[0], Rational(1)}};
            } else {
                acc = alg_.min_first(LieWord(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(pos)));
                LieTerms next;
                for (const auto& [u, c] : acc)
                    for (const auto& [v, k] : alg_.lie_bracket(u, nb[0]))
                        accumulate(next, v, c * k);
                acc = std::move(next);
            }
            for (std::size_t p = pos + 1; p < w.size(); ++p) {
                LieTerms next;
                for (const auto& [u, c] : acc)
                    for (const auto& [v, k] : alg_.lie_bracket(u, LieWord{w[p]}))
                        accumulate(next, v, c * k);
                acc = std::move(next);
            }
            for (const auto& [v, c] : acc)
                accumulate(replaced, Monomial{v}, c);
        } else {
            Terms acc = pos == 0 ? Terms{{nb, Rational(1)}} : Terms{{Monomial{LieWord{w[0]}}, Rational(1)}};
            for (std::size_t p = 1; p < w.size(); ++p) {
                Terms rhs = p == pos ? Terms{{nb, Rational(1)}} : Terms{{Monomial{LieWord{w[p]}}, Rational(1)}};
                acc = alg_.bracket(acc, rhs);
            }
            replaced = std::move(acc);
        }
        Terms out = alg_.product(alg_.product(Terms{{before, Rational(1)}}, replaced), Terms{{after, Rational(1)}});
        if (sign < 0)
            PoissonAlgebra::negate(out);
        return out;
    }
};

} // namespace operadkit
