// operadkit command line: HH tables, verification suites, geometric sampling.
//
// Exit codes: 0 pass, 1 a check failed, 2 bad usage or input, 3 resource
// bound exceeded.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "operadkit/geometry.hpp"
#include "operadkit/hochschild.hpp"
#include "operadkit/operad.hpp"
#include "operadkit/pair_operad.hpp"
#include "operadkit/poisson.hpp"

#ifndef OPERADKIT_VERSION
#define OPERADKIT_VERSION "dev"
#endif

using namespace operadkit;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Global {
    unsigned threads = default_threads();
    bool timings = false;
    std::uint64_t seed = 42;
    std::string output;
    std::string format = "json";
};

json header(const std::string& command, const json& params, const Global& g)
{
    return {{"tool", "operadkit"}, {"version", OPERADKIT_VERSION}, {"command", command}, {"params", params},
            {"seed", g.seed}};
}

// Writes to --output, else to $OPERADKIT_OUTPUT_DIR/<name>, and always to stdout.
void emit(const std::string& name, const std::string& body, const Global& g)
{
    std::cout << body;
    std::string path = g.output;
    if (path.empty())
        if (const char* dir = std::getenv("OPERADKIT_OUTPUT_DIR"); dir && *dir)
            path = (std::filesystem::path(dir) / name).string();
    if (path.empty())
        return;
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw UsageError("cannot write " + path);
    out << body;
}

void emit_json(const std::string& name, const json& j, const Global& g) { emit(name + ".json", j.dump(2) + "\n", g); }

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int verdict(const Report& r) { return r.passed() ? 0 : 1; }

// ----------------------------------------------------------------------------
// hh

struct HhArgs {
    int degree = 2;
    std::size_t max_p = 5;
    std::string coeff = "rational";
    bool normalized = false;
    std::string format = "json";
};

int cmd_hh(const HhArgs& a, const Global& g)
{
    if (a.degree < 2)
        throw UsageError("--degree must be at least 2");
    if (a.max_p < 2)
        throw UsageError("--max-p must be at least 2");
    if (a.max_p > kMaxHochschildLevel)
        throw ResourceError("--max-p above " + std::to_string(kMaxHochschildLevel) + " exceeds the arity bound");
    if (a.coeff != "rational" && a.coeff != "integral")
        throw UsageError("--coeff must be rational or integral");
    if (a.format != "json" && a.format != "csv")
        throw UsageError("--format must be json or csv for hh");
    const Coefficients coeff = a.coeff == "rational" ? Coefficients::rational : Coefficients::integral;
    const auto t0 = std::chrono::steady_clock::now();
    const CochainComplex c = build_complex(a.degree, a.max_p, a.normalized, g.threads);
    const double build = seconds_since(t0);
    const CohomologyTable t = hh_table(c, coeff);
    const json params{{"degree", a.degree}, {"max_p", a.max_p}, {"coeff", a.coeff}, {"normalized", a.normalized}};
    const std::string stem = "hh-n" + std::to_string(a.degree) + "-p" + std::to_string(a.max_p) + "-" + a.coeff +
                             (a.normalized ? "-normalized" : "-full");
    if (a.format == "csv") {
        std::ostringstream os;
        os << "# operadkit " << OPERADKIT_VERSION << " hh degree=" << a.degree << " max_p=" << a.max_p
           << " coeff=" << a.coeff << " normalized=" << (a.normalized ? "true" : "false") << " seed=" << g.seed
           << "\n"
           << t.to_csv();
        emit(stem + ".csv", os.str(), g);
    } else {
        json j = header("hh", params, g);
        j["table"] = t.to_json(g.timings);
        if (g.timings)
            j["build_seconds"] = build;
        emit_json(stem, j, g);
    }
    return 0;
}

// ----------------------------------------------------------------------------
// verify

struct VerifyArgs {
    std::string suite;
    std::string operad = "poisson";
    int degree = 2;
    std::size_t max_arity = 4;
    std::size_t max_total = 6;
    std::size_t random_triples = 5000;
    std::size_t max_level = 0; // 0 = suite default
    std::size_t m = 3;
    std::size_t trials = 1000;
    double tol = 1e-9;
    double limit_tol = 1e-4;
    double t_min = 1e-6;
    std::size_t probes = 20;
};

template <class Op>
Report axioms_with_structure(const Op& op, const VerifyArgs& a, const Global& g)
{
    AxiomBounds b;
    b.max_arity = a.max_arity;
    b.max_total = a.max_total;
    b.random_triples = a.random_triples;
    b.seed = g.seed;
    Report r = check_operad_axioms(op, b, g.threads);
    r.merge(check_structure_maps(op, std::min<std::size_t>(a.max_arity + 1, 5), g.seed, 64, g.threads));
    return r;
}

Report run_suite(const VerifyArgs& a, const Global& g)
{
    if (a.suite == "s2-iso") {
        const std::size_t L = a.max_level ? a.max_level : 8;
        Report r = check_s2_iso(L);
        r.merge(check_s2_simplicial_identities(L));
        return r;
    }
    if (a.suite == "operad-axioms" || a.suite == "cosimplicial") {
        const bool axioms = a.suite == "operad-axioms";
        if (a.operad == "poisson") {
            if (a.degree < 1)
                throw UsageError("--degree must be positive");
            if (a.max_arity > 5)
                throw ResourceError("--max-arity above 5 is outside the desk-scale envelope for Poisson");
            const PoissonOperad op(a.degree);
            if (axioms)
                return axioms_with_structure(op, a, g);
            const std::size_t L = a.max_level ? a.max_level : 6;
            if (L > kMaxPoissonArity - 2)
                throw ResourceError("--max-level too large for the Poisson basis cache");
            return check_cosimplicial_identities(CosimplicialFromOperad<PoissonOperad>(op), L, g.threads);
        }
        if (a.operad == "choose-two") {
            const ChooseTwoOperad op;
            if (axioms)
                return axioms_with_structure(op, a, g);
            return check_cosimplicial_identities(CosimplicialFromOperad<ChooseTwoOperad>(op), a.max_level ? a.max_level : 8,
                                                 g.threads);
        }
        if (a.operad == "associative") {
            const AssociativeOperad op;
            if (axioms)
                return axioms_with_structure(op, a, g);
            return check_cosimplicial_identities(CosimplicialFromOperad<AssociativeOperad>(op),
                                                 a.max_level ? a.max_level : 8, g.threads);
        }
        if (a.operad == "kontsevich") {
            check_ambient(a.m);
            const KontsevichOperad op = kontsevich_operad(a.m, g.seed);
            if (axioms)
                return axioms_with_structure(op, a, g);
            return check_cosimplicial_identities(CosimplicialFromOperad<KontsevichOperad>(op),
                                                 a.max_level ? a.max_level : 6, g.threads);
        }
        throw UsageError("unknown operad '" + a.operad + "'");
    }
    if (a.suite == "geometry") {
        GeometryBounds b;
        b.trials = a.trials;
        b.tol = a.tol;
        b.limit_tol = a.limit_tol;
        b.limit_time = a.t_min;
        b.probes = a.probes;
        b.seed = g.seed;
        b.threads = g.threads;
        Report r("geometry");
        r.merge(check_gauss_membership(b));
        r.merge(check_composite_membership(b));
        r.merge(check_naturality(b, 100));
        r.merge(check_disks_comparison(b, 100));
        return r;
    }
    throw UsageError("unknown suite '" + a.suite + "'");
}

int cmd_verify(const VerifyArgs& a, const Global& g)
{
    if (!(a.tol > 0) || !(a.limit_tol > 0) || !(a.t_min > 0 && a.t_min <= 1))
        throw UsageError("tolerances must be positive and --t-min in (0,1]");
    const auto t0 = std::chrono::steady_clock::now();
    const Report r = run_suite(a, g);
    json params{{"suite", a.suite}};
    if (a.suite == "operad-axioms" || a.suite == "cosimplicial")
        params.update({{"operad", a.operad}, {"degree", a.degree}, {"m", a.m}});
    if (a.suite == "operad-axioms")
        params.update({{"max_arity", a.max_arity}, {"max_total", a.max_total}, {"random_triples", a.random_triples}});
    else if (a.suite != "geometry")
        params["max_level"] = a.max_level;
    if (a.suite == "geometry")
        params.update({{"trials", a.trials}, {"tol", a.tol}, {"limit_tol", a.limit_tol}, {"t_min", a.t_min},
                       {"probes", a.probes}});
    json j = header("verify", params, g);
    j["report"] = r.to_json();
    if (g.timings)
        j["seconds"] = seconds_since(t0);
    if (g.format == "text") {
        std::ostringstream os;
        os << a.suite << ": " << (r.passed() ? "pass" : "FAIL") << " checked=" << r.checked()
           << " failures=" << r.failures() << " max_residual=" << r.max_residual() << "\n";
        emit("verify-" + a.suite + ".txt", os.str(), g);
    } else {
        emit_json("verify-" + a.suite, j, g);
    }
    return verdict(r);
}

// ----------------------------------------------------------------------------
// geom

struct GeomArgs {
    std::string sub;
    std::string input;
    std::string tree = "(* (* *))";
    std::string curve = "trefoil";
    std::size_t times = 4;
    std::vector<double> at;
    std::size_t m = 3;
    double tol = 1e-9;
    double limit_tol = 1e-4;
    double t_min = 1e-6;
    std::size_t probes = 20;
    double eps = kDefaultEpsilon;
};

json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw UsageError("cannot read " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw UsageError(path + ": " + e.what());
    }
}

// A sphere configuration, or the Gauss map of a point configuration.
SphereConfiguration read_sphere_or_points(const json& j, double tol)
{
    if (j.contains("u") && !j.contains("points"))
        return SphereConfiguration::from_json(j, std::max(tol, 1e-12));
    if (!j.contains("points"))
        throw UsageError("configuration needs either u or points");
    const std::size_t m = j.at("m").get<std::size_t>();
    check_ambient(m);
    std::vector<Vec> x;
    for (const auto& p : j.at("points"))
        x.push_back(vec_from_json(p, m));
    if (x.size() != j.at("n").get<std::size_t>())
        throw UsageError("point count does not match n");
    return gauss_map(x);
}

int cmd_geom(const GeomArgs& a, const Global& g)
{
    if (!(a.tol > 0) || !(a.limit_tol > 0))
        throw UsageError("tolerances must be positive");
    json params{{"sub", a.sub}};
    json out;
    int code = 0;

    if (a.sub == "check") {
        if (a.input.empty())
            throw UsageError("geom check needs --input");
        params.update({{"input", std::filesystem::path(a.input).filename().string()}, {"tol", a.tol},
                       {"probes", a.probes}});
        const SphereConfiguration s = read_sphere_or_points(read_json_file(a.input), a.tol);
        const Report r = check_membership(s, a.tol, a.probes, g.seed);
        out = header("geom check", params, g);
        out["configuration"] = s.to_json();
        out["report"] = r.to_json();
        code = verdict(r);
    } else if (a.sub == "compose") {
        const RpTree t = RpTree::parse(a.tree);
        params.update({{"tree", t.to_string()}, {"m", a.m}, {"tol", a.tol}, {"probes", a.probes}});
        const auto verts = t.vertices();
        std::vector<SphereConfiguration> in;
        if (!a.input.empty()) {
            params["input"] = std::filesystem::path(a.input).filename().string();
            const json j = read_json_file(a.input);
            if (!j.is_array())
                throw UsageError("compose input must be an array of configurations, one per vertex");
            for (const auto& c : j)
                in.push_back(read_sphere_or_points(c, a.tol));
        } else {
            check_ambient(a.m);
            auto rng = task_stream(g.seed, 0, 0xc0);
            for (const auto& v : verts) {
                const std::size_t k = t.node(v).arity();
                in.push_back(k < 2 ? SphereConfiguration(a.m, k) : gauss_map(random_points(a.m, k, rng)));
            }
        }
        const SphereConfiguration w = kontsevich_compose(t, in);
        const Report r = check_membership(w, a.tol, a.probes, g.seed);
        out = header("geom compose", params, g);
        json ins = json::array();
        for (const auto& c : in)
            ins.push_back(c.to_json());
        out["inputs"] = ins;
        out["composite"] = w.to_json();
        out["report"] = r.to_json();
        code = verdict(r);
    } else if (a.sub == "knot-eval") {
        const LongCurve curve = curve_by_name(a.curve, a.m);
        std::vector<double> ts = a.at;
        if (ts.empty()) {
            auto rng = task_stream(g.seed, a.times, 0x7e);
            std::uniform_real_distribution<double> U(-0.95, 0.95);
            for (std::size_t k = 0; k < a.times; ++k)
                ts.push_back(U(rng));
            std::sort(ts.begin(), ts.end());
        }
        params.update({{"curve", a.curve}, {"m", a.m}, {"times", ts}, {"tol", a.tol}, {"eps", a.eps}});
        const PointConfiguration c = knot_eval(curve, ts);
        out = header("geom knot-eval", params, g);
        out["configuration"] = c.to_json();
        bool distinct = true;
        for (std::size_t k = 1; k < ts.size(); ++k)
            distinct = distinct && ts[k] != ts[k - 1];
        if (distinct && ts.size() >= 2) {
            const SphereConfiguration s = gauss_map(c.points);
            const Report r = check_membership(s, a.tol, a.probes, g.seed);
            out["gauss_map"] = s.to_json();
            out["report"] = r.to_json();
            code = verdict(r);
        }
        if (auto bad = boundary_violation(c, a.eps))
            out["projection"] = {{"skipped", *bad}};
        else
            out["projection"] = project_pi_k(c, a.eps).to_json();
    } else if (a.sub == "disks-compare") {
        const RpTree t = RpTree::parse(a.tree);
        if (!(a.t_min > 0 && a.t_min <= 1))
            throw UsageError("--t-min must lie in (0,1]");
        params.update({{"tree", t.to_string()}, {"m", a.m}, {"t_min", a.t_min}, {"limit_tol", a.limit_tol}});
        check_ambient(a.m);
        auto rng = task_stream(g.seed, 0, 0xd15c);
        std::vector<DiskConfiguration> in;
        for (const auto& v : t.vertices())
            in.push_back(random_disks(a.m, t.node(v).arity(), rng));
        const double at_one = max_distance(disks_homotopy(t, in, 1.0), gauss_map(disks_compose(t, in).centers));
        const double at_min = max_distance(disks_homotopy(t, in, a.t_min), disks_limit(t, in));
        // geometric sweep from t_min to 1
        double jump = 0;
        SphereConfiguration prev = disks_homotopy(t, in, a.t_min);
        const int steps = 64;
        for (int k = 1; k <= steps; ++k) {
            const double time = a.t_min * std::pow(1.0 / a.t_min, static_cast<double>(k) / steps);
            SphereConfiguration cur = disks_homotopy(t, in, std::min(time, 1.0));
            jump = std::max(jump, max_distance(prev, cur));
            prev = std::move(cur);
        }
        Report r("disks-compare");
        r.residual(at_min);
        r.expect(at_one <= 1e-12, "H(1) = gauss o compose", [&] { return json{{"distance", at_one}}; });
        r.expect(at_min <= a.limit_tol, "H(t_min) near the Kontsevich composite",
                 [&] { return json{{"distance", at_min}}; });
        out = header("geom disks-compare", params, g);
        json ins = json::array();
        for (const auto& d : in)
            ins.push_back(d.to_json());
        out["inputs"] = ins;
        out["distance_at_one"] = at_one;
        out["distance_at_t_min"] = at_min;
        out["max_sweep_step"] = jump;
        out["report"] = r.to_json();
        code = verdict(r);
    } else {
        throw UsageError("unknown geom subcommand '" + a.sub + "'");
    }
    emit_json("geom-" + a.sub, out, g);
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"operadkit: operads, Hochschild cohomology and configuration-space checks"};
    app.set_version_flag("--version", OPERADKIT_VERSION);
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand
    Global g;
    app.add_option("--threads", g.threads, "worker cap (default: available parallelism)")->check(CLI::Range(1u, 1024u));
    app.add_flag("--timings", g.timings, "include runtimes in artifacts (breaks byte identity)");
    app.add_option("--seed", g.seed, "RNG seed, recorded in every artifact");
    app.add_option("-o,--output", g.output, "artifact path (default: $OPERADKIT_OUTPUT_DIR/<name>)");

    HhArgs hh;
    auto* hh_cmd = app.add_subcommand("hh", "HH^{p,q} table of the Poisson operad");
    hh_cmd->add_option("--degree,-n", hh.degree, "bracket degree n")->required();
    hh_cmd->add_option("--max-p", hh.max_p, "build levels 0..max_p; interior columns p < max_p");
    hh_cmd->add_option("--coeff", hh.coeff, "rational or integral");
    hh_cmd->add_flag("--normalized", hh.normalized, "use the normalized complex");
    hh_cmd->add_option("--format", hh.format, "json or csv");

    VerifyArgs va;
    auto* ver = app.add_subcommand("verify", "run a verification suite");
    ver->add_option("suite", va.suite, "operad-axioms | cosimplicial | s2-iso | geometry")->required();
    ver->add_option("--operad", va.operad, "poisson | choose-two | associative | kontsevich");
    ver->add_option("--degree,-n", va.degree, "Poisson bracket degree");
    ver->add_option("--max-arity", va.max_arity, "operand arity bound for axiom checks");
    ver->add_option("--max-total", va.max_total, "composite arity bound for exhaustive axiom checks");
    ver->add_option("--random-triples", va.random_triples, "extra random axiom triples");
    ver->add_option("--max-level", va.max_level, "level bound for cosimplicial and s2-iso");
    ver->add_option("--m", va.m, "ambient dimension for the Kontsevich operad");
    ver->add_option("--trials", va.trials, "Monte Carlo trials per shape");
    ver->add_option("--tol", va.tol, "membership tolerance");
    ver->add_option("--limit-tol", va.limit_tol, "tolerance for the t -> 0 comparison");
    ver->add_option("--t-min", va.t_min, "small time for the disks homotopy");
    ver->add_option("--probes", va.probes, "random (v,w) probes for four-consistency");
    ver->add_option("--format", g.format, "json or text");

    GeomArgs ga;
    auto* geo = app.add_subcommand("geom", "geometric computations on configurations");
    geo->add_option("sub", ga.sub, "check | compose | knot-eval | disks-compare")->required();
    geo->add_option("--input,-i", ga.input, "configuration JSON");
    geo->add_option("--tree", ga.tree, "tree in bracket notation");
    geo->add_option("--curve", ga.curve, "unknot or trefoil");
    geo->add_option("--times", ga.times, "number of random sample times");
    geo->add_option("--at", ga.at, "explicit sample times")->delimiter(',');
    geo->add_option("--m", ga.m, "ambient dimension");
    geo->add_option("--tol", ga.tol, "membership tolerance");
    geo->add_option("--limit-tol", ga.limit_tol, "tolerance for the t -> 0 comparison");
    geo->add_option("--t-min", ga.t_min, "small time for the disks homotopy");
    geo->add_option("--probes", ga.probes, "random (v,w) probes for four-consistency");
    geo->add_option("--eps", ga.eps, "collar width, at most 1/6");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*hh_cmd)
            return cmd_hh(hh, g);
        if (*ver)
            return cmd_verify(va, g);
        if (*geo)
            return cmd_geom(ga, g);
    } catch (const ResourceError& e) {
        std::cerr << "operadkit: " << e.what() << "\n";
        return 3;
    } catch (const std::bad_alloc&) {
        std::cerr << "operadkit: out of memory\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "operadkit: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
