// bicomb: command-line front end. Every command prints one JSON report on
// stdout. Exit status: 0 success, 2 the input fails the mathematical check,
// 1 usage or I/O error.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "bicomb/bicombing.hpp"
#include "bicomb/boundary.hpp"
#include "bicomb/comb_dim.hpp"
#include "bicomb/gallery.hpp"
#include "bicomb/space_io.hpp"
#include "bicomb/tight_span.hpp"

using namespace bicomb;

namespace {

constexpr const char* schema = "bicomb-report/1";
constexpr const char* version = "0.1.0";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when the input is not a metric; carries the violation list.
struct InvalidSpace : std::runtime_error {
    json violations;
    explicit InvalidSpace(json v) : std::runtime_error("not a metric"), violations(std::move(v)) {}
};

std::string sha256_hex(const std::string& bytes)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr))
        throw std::runtime_error("sha256 failed");
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i)
        out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return out.str();
}

json violations_json(const std::vector<MetricViolation>& vs)
{
    json out = json::array();
    for (const auto& v : vs)
        out.push_back({{"kind", std::string(to_string(v.kind))},
                       {"i", v.i},
                       {"j", v.j},
                       {"k", v.k},
                       {"defect", scalar_to_json(v.defect)}});
    return out;
}

json point_json(const Point& p) { return json(p.to_vector()); }

json report_json(const DefectReport& r)
{
    json pts = json::array();
    for (const auto& p : r.witness.points)
        pts.push_back(point_json(p));
    return {{"max_defect", r.max_defect},
            {"samples", r.samples},
            {"witness", {{"points", pts}, {"params", r.witness.params}}}};
}

json edges_json(const std::vector<Edge>& es)
{
    json out = json::array();
    for (const auto& e : es)
        out.push_back({e.a, e.b});
    return out;
}

Point parse_point(const std::string& text)
{
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            v.push_back(std::stod(item, &used));
            if (used != item.size())
                throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("bad coordinate '" + item + "' in '" + text + "'");
        }
    }
    if (v.empty())
        throw UsageError("empty point '" + text + "'");
    return Point(v);
}

ClosurePoint parse_closure_point(const std::string& text)
{
    if (text.rfind("dir:", 0) == 0)
        return ClosurePoint::boundary(parse_point(text.substr(4)));
    return ClosurePoint::interior(parse_point(text));
}

std::vector<std::size_t> parse_indices(const std::string& text)
{
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoul(item, &used));
            if (used != item.size())
                throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("bad index '" + item + "'");
        }
    }
    return out;
}

// "0-3,1-2" -> pairs
std::vector<std::pair<std::size_t, std::size_t>> parse_pairs(const std::string& text)
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto dash = item.find('-');
        if (dash == std::string::npos)
            throw UsageError("pairs look like 0-3,1-2");
        auto a = parse_indices(item.substr(0, dash)), b = parse_indices(item.substr(dash + 1));
        if (a.size() != 1 || b.size() != 1)
            throw UsageError("bad pair '" + item + "'");
        out.emplace_back(a[0], b[0]);
    }
    return out;
}

struct Input {
    std::string bytes;
    FiniteMetricSpace space;
};

Input load_space(const std::string& path)
{
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw UsageError("malformed JSON in '" + path + "' at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    SpaceDocument doc;
    try {
        doc = space_document_from_json(j);
    } catch (const std::exception& e) {
        throw UsageError(std::string("bad space document: ") + e.what());
    }
    ValidationResult v;
    try {
        v = validate_metric(doc.dist, doc.labels);
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("bad distance matrix: ") + e.what());
    }
    if (!v.ok())
        throw InvalidSpace(violations_json(v.violations));
    return {text, std::move(*v.space)};
}

struct Options {
    std::uint64_t seed = 1;
    double tol = 1e-9;
    std::size_t samples = 200;
    std::size_t cap = default_face_cap;
    int levels = 1;
    std::string output;
    bool wall_time = false;
};

// Everything a command produces: its results, exit status and the bytes the
// input digest is computed over.
struct Outcome {
    json results;
    int status = 0;
    std::string digest_input;
};

// ---------------------------------------------------------------------------
// commands

Outcome cmd_validate(const std::string& path)
{
    auto in = load_space(path);
    Outcome o;
    o.digest_input = in.bytes;
    o.results = {{"valid", true},
                 {"size", in.space.size()},
                 {"labels", in.space.labels()},
                 {"diameter", scalar_to_json(in.space.diameter())},
                 {"four_point_defect", scalar_to_json(in.space.size() >= 4 ? max_four_point_defect(in.space).first
                                                                           : Scalar(0))}};
    return o;
}

Outcome cmd_tight_span(const std::string& path, bool faces, const Options& opt)
{
    auto in = load_space(path);
    auto lattice = enumerate_faces(in.space, opt.cap);
    Outcome o;
    o.digest_input = in.bytes;
    o.results["dim"] = lattice.dimension();
    o.results["face_count"] = lattice.faces.size();
    o.results["vertex_count"] = lattice.vertices.size();
    if (faces) {
        json fs = json::array();
        for (const auto& f : lattice.faces)
            fs.push_back({{"edges", edges_json(f.graph.edges())},
                          {"rank", f.rank},
                          {"rep", form_to_json(f.representative)},
                          {"vertices", f.vertices}});
        o.results["faces"] = std::move(fs);
        json vs = json::array();
        for (const auto& v : lattice.vertices)
            vs.push_back(form_to_json(v));
        o.results["vertices"] = std::move(vs);
    }
    return o;
}

json witness_json(const DressWitness& w, const std::vector<std::size_t>& Z)
{
    auto map_back = [&](const std::vector<std::size_t>& img) {
        json out = json::array();
        for (std::size_t k = 0; k < img.size(); ++k)
            out.push_back({Z[k], Z[img[k]]});
        return out;
    };
    return std::visit(
        [&](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, StrictBijection>) {
                json flow = json::array();
                for (std::size_t k = 0; k < v.flow.pairs.size(); ++k)
                    if (v.flow.w[k] != 0)
                        flow.push_back({{"pair", {Z[v.flow.pairs[k].a], Z[v.flow.pairs[k].b]}},
                                        {"w", scalar_to_json(v.flow.w[k])}});
                return {{"variant", "strict_bijection"},
                        {"j", map_back(v.j)},
                        {"i_sum", scalar_to_json(v.i_sum)},
                        {"j_sum", scalar_to_json(v.j_sum)},
                        {"flow", flow}};
            } else if constexpr (std::is_same_v<T, EqualityCertificate>) {
                return {{"variant", "equality"},
                        {"f", form_to_json(v.f)},
                        {"nu", form_to_json(v.nu)},
                        {"j", map_back(v.j.image())},
                        {"sum", scalar_to_json(v.sum)}};
            } else {
                return {{"variant", "violation"},
                        {"f", form_to_json(v.f)},
                        {"nu", form_to_json(v.nu)},
                        {"i_sum", scalar_to_json(v.i_sum)}};
            }
        },
        w);
}

Outcome cmd_dress_witness(const std::string& path, const std::string& z_text, const std::string& pairs_text)
{
    auto in = load_space(path);
    auto Z = parse_indices(z_text);
    for (std::size_t z : Z)
        if (z >= in.space.size())
            throw UsageError("point " + std::to_string(z) + " out of range");
    std::vector<Edge> pos_pairs;
    for (auto [a, b] : parse_pairs(pairs_text)) {
        auto pa = std::find(Z.begin(), Z.end(), a), pb = std::find(Z.begin(), Z.end(), b);
        if (pa == Z.end() || pb == Z.end())
            throw UsageError("pair endpoints must lie in Z");
        pos_pairs.emplace_back(static_cast<std::size_t>(pa - Z.begin()), static_cast<std::size_t>(pb - Z.begin()));
    }
    Involution i;
    try {
        i = Involution::from_pairs(Z.size(), pos_pairs);
    } catch (const std::exception& e) {
        throw UsageError(std::string("pairs do not form a fixed-point-free involution of Z: ") + e.what());
    }
    auto w = dress_witness(subspace(in.space, Z), i);
    Outcome o;
    o.digest_input = in.bytes;
    o.results = {{"Z", Z}, {"witness", witness_json(w, Z)}};
    o.status = std::holds_alternative<DressViolation>(w) ? 2 : 0;
    return o;
}

Outcome cmd_comb_dim(const std::string& path, std::optional<std::size_t> n, bool exhaustive, const Options& opt)
{
    auto in = load_space(path);
    Outcome o;
    o.digest_input = in.bytes;
    if (!n && !exhaustive)
        exhaustive = true;
    if (n) {
        auto r = dress_check(in.space, *n);
        json res = {{"n", *n}, {"holds", r.holds}, {"subsets_checked", r.subsets_checked}};
        if (!r.holds) {
            json pairs = json::array();
            for (const auto& e : r.i->pairs())
                pairs.push_back({r.Z[e.a], r.Z[e.b]});
            res["Z"] = r.Z;
            res["i"] = pairs;
            o.status = 2;
        }
        o.results["dress_check"] = std::move(res);
    }
    if (exhaustive) {
        const int d = comb_dim_exhaustive(in.space, opt.cap);
        o.results["comb_dim"] = d;
        if (n && d > static_cast<int>(*n))
            o.status = 2;
    }
    return o;
}

struct SpaceChoice {
    std::shared_ptr<const RetractSpace> space;
    bool is_linf = false;
    std::string digest;
};

SpaceChoice pick_space(const std::string& spec)
{
    if (spec.rfind("l-inf:", 0) == 0) {
        auto d = parse_indices(spec.substr(6));
        if (d.size() != 1 || d[0] < 1 || d[0] > Point::capacity)
            throw UsageError("l-inf:d needs 1 <= d <= " + std::to_string(Point::capacity));
        return {linf_space(d[0]), true, spec};
    }
    auto entries = gallery_entries();
    if (std::any_of(entries.begin(), entries.end(), [&](const auto& e) { return e.id == spec; })) {
        auto g = gallery_make(spec);
        if (!g.is_finite())
            return {std::get<std::shared_ptr<const RetractSpace>>(g.realized), false, spec};
        if (g.finite().size() > Point::capacity)
            throw UsageError("tight span of '" + spec + "' exceeds the supported dimension");
        return {tight_span_space(g.finite()), false, spec};
    }
    auto in = load_space(spec);
    if (in.space.size() > Point::capacity)
        throw UsageError("tight span of a " + std::to_string(in.space.size()) + "-point space exceeds the supported dimension");
    return {tight_span_space(in.space), false, in.bytes};
}

Bicombing seed_bicombing(const SpaceChoice& s, const std::string& kind)
{
    if (kind == "linear") {
        if (!s.is_linf)
            throw UsageError("the linear seed needs an l-inf:d space; use --seed-bicombing retract");
        return linear_bicombing(s.space->ambient_dim);
    }
    if (kind == "retract")
        return retract_bicombing(s.space, linear_bicombing(s.space->ambient_dim));
    throw UsageError("unknown seed bicombing '" + kind + "'");
}

json stats_json(const Bicombing& s)
{
    json out = json::array();
    int level = 2;
    for (const auto& st : s.contraction_stats())
        out.push_back({{"level", level++},
                       {"fixed_points", st.fixed_points},
                       {"checks", st.checks},
                       {"violations", st.violations},
                       {"max_excess", st.max_excess},
                       {"max_iterations", st.max_iterations}});
    return out;
}

Outcome cmd_bicombing_build(const std::string& space, const std::string& seed, const Options& opt)
{
    auto s = pick_space(space);
    SampleSpec spec{opt.samples, opt.seed, 8, {}};
    auto r = convexify(seed_bicombing(s, seed), opt.levels, {}, spec);
    Outcome o;
    o.digest_input = s.digest;
    json levels = json::array();
    for (const auto& L : r.levels) {
        json l = {{"level", L.level},
                  {"n", L.n},
                  {"conical", report_json(L.conical)},
                  {"discrete", report_json(L.discrete)},
                  {"convexity", report_json(L.convexity)}};
        if (L.distance_to_previous)
            l["distance_to_previous"] = *L.distance_to_previous;
        levels.push_back(std::move(l));
    }
    o.results = {{"space", s.space->id},
                 {"provenance", r.sigma.provenance()},
                 {"levels", levels},
                 {"contraction", stats_json(r.sigma)},
                 {"warnings", r.sigma.warnings()}};
    const auto& last = r.levels.back();
    bool ok = last.conical.max_defect <= opt.tol && last.discrete.max_defect <= opt.tol && r.sigma.warnings().empty();
    for (const auto& st : r.sigma.contraction_stats())
        ok = ok && st.violations == 0;
    o.status = ok ? 0 : 2;
    return o;
}

Outcome cmd_bicombing_check(const std::string& space, const std::string& seed, const std::string& axiom,
                            const Options& opt)
{
    auto s = pick_space(space);
    auto sigma = convexify(seed_bicombing(s, seed), opt.levels).sigma;
    SampleSpec spec{opt.samples, opt.seed, 8, {}};
    DefectReport r;
    if (axiom == "conical")
        r = conical_defect(sigma, spec);
    else if (axiom == "convex")
        r = convexity_defect(sigma, spec);
    else if (axiom.rfind("discrete:", 0) == 0) {
        auto n = parse_indices(axiom.substr(9));
        if (n.size() != 1 || n[0] < 2)
            throw UsageError("discrete:n needs n >= 2");
        r = discrete_convexity_defect(sigma, n[0], spec);
    } else if (axiom == "consistent")
        r = consistency_defect(sigma, spec);
    else if (axiom == "reversible")
        r = reversibility_defect(sigma, spec);
    else if (axiom == "geodesic")
        r = geodesic_defect(sigma, spec);
    else
        throw UsageError("unknown axiom '" + axiom + "'");
    Outcome o;
    o.digest_input = s.digest;
    o.results = {{"space", s.space->id},
                 {"axiom", axiom},
                 {"provenance", sigma.provenance()},
                 {"tol", opt.tol},
                 {"report", report_json(r)},
                 {"warnings", sigma.warnings()}};
    o.status = r.max_defect <= opt.tol ? 0 : 2;
    return o;
}

Outcome cmd_boundary_dist(const std::string& space, const std::string& o_text, const std::string& x_text,
                          const std::string& y_text)
{
    if (space.rfind("l-inf:", 0) != 0)
        throw UsageError("boundary dist works on l-inf:d");
    const auto d = pick_space(space).space->ambient_dim;
    const Point o = parse_point(o_text);
    const auto x = parse_closure_point(x_text), y = parse_closure_point(y_text);
    if (o.size() != d || x.point().size() != d || y.point().size() != d)
        throw UsageError("points must have " + std::to_string(d) + " coordinates");
    auto prof = distance_profile(ray_from_basepoint(o, x), ray_from_basepoint(o, y));
    json pieces = json::array();
    for (const auto& p : prof.pieces)
        pieces.push_back({{"start", p.start},
                          {"end", p.end == infinity ? json("inf") : json(p.end)},
                          {"slope", p.slope},
                          {"intercept", p.intercept}});
    Outcome out;
    out.digest_input = space + "|" + o_text + "|" + x_text + "|" + y_text;
    out.results = {{"D_o", prof.integrate_exp()}, {"profile", pieces}};
    return out;
}

Outcome cmd_boundary_check(const std::string& lemma, const Options& opt)
{
    auto which = boundary_check_from_string(lemma);
    if (!which)
        throw UsageError("unknown check '" + lemma + "'");
    auto r = run_boundary_check(*which, opt.samples, opt.seed, opt.tol);
    json w = json::array();
    for (const auto& p : r.witness)
        w.push_back(point_json(p));
    Outcome o;
    o.digest_input = lemma;
    o.results = {{"check", r.name},
                 {"samples", r.samples},
                 {"violations", r.violations},
                 {"max_excess", r.max_excess},
                 {"witness", {{"points", w}, {"params", r.witness_params}}}};
    o.status = r.violations == 0 ? 0 : 2;
    return o;
}

Outcome cmd_gallery_list()
{
    json list = json::array();
    for (const auto& e : gallery_entries())
        list.push_back({{"id", e.id}, {"defaults", e.defaults}, {"description", e.description}});
    Outcome o;
    o.results = {{"spaces", list}};
    o.digest_input = "gallery-list";
    return o;
}

json parse_params(const std::vector<std::string>& kvs)
{
    json p = json::object();
    for (const auto& kv : kvs) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw UsageError("parameters look like key=value");
        const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
        try {
            p[key] = json::parse(value);
        } catch (const json::parse_error&) {
            p[key] = value;
        }
    }
    return p;
}

Outcome cmd_gallery_emit(const std::string& id, const std::vector<std::string>& kvs, const Options& opt)
{
    auto g = [&] {
        try {
            return gallery_make(id, parse_params(kvs));
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }();
    json doc;
    if (g.is_finite())
        doc = space_to_json(g.finite());
    else
        doc = {{"id", g.id}, {"kind", "retract"}, {"ambient_dim", std::get<1>(g.realized)->ambient_dim}};
    doc["gallery"] = {{"id", g.id}, {"params", g.params}, {"description", g.description}};
    if (!opt.output.empty()) {
        std::ofstream out(opt.output, std::ios::binary);
        if (!out)
            throw UsageError("cannot write '" + opt.output + "'");
        out << doc.dump(2) << '\n';
    }
    Outcome o;
    o.digest_input = id + "|" + g.params.dump();
    o.results = {{"space", doc}};
    return o;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Tight spans, combinatorial dimension, geodesic bicombings and boundaries at infinity"};
    app.require_subcommand(1);
    Options opt;
    app.add_option("--rng-seed", opt.seed, "seed for all sampling")->capture_default_str();
    app.add_option("--tol", opt.tol, "tolerance for floating-point checks")->capture_default_str();
    app.add_flag("--wall-time", opt.wall_time, "include wall time in the report (breaks byte reproducibility)");

    std::string path, z_text, pairs_text, space = "butterfly", seed = "retract", axiom = "conical", lemma;
    std::string o_text, x_text, y_text, gallery_id;
    std::vector<std::string> params;
    bool faces = false, exhaustive = false;
    std::optional<std::size_t> n;

    auto add_common = [&](CLI::App* c, bool output = true) {
        c->add_option("--rng-seed", opt.seed, "seed for all sampling");
        c->add_option("--tol", opt.tol, "tolerance for floating-point checks");
        if (output)
            c->add_option("-o,--output", opt.output, "also write the report (or emitted space) to this file");
        c->add_flag("--wall-time", opt.wall_time, "include wall time in the report");
    };

    auto* validate = app.add_subcommand("validate", "check the metric axioms of a space file");
    validate->add_option("space", path, "space JSON")->required();
    add_common(validate);

    auto* ts = app.add_subcommand("tight-span", "faces and dimension of E(X)");
    ts->add_option("space", path, "space JSON")->required();
    ts->add_flag("--faces", faces, "list every cell");
    ts->add_flag("--dim", "report the dimension (always included)");
    ts->add_option("--cap", opt.cap, "largest |X| accepted");
    add_common(ts);

    auto* cd = app.add_subcommand("comb-dim", "combinatorial dimension and the Dress criterion");
    cd->add_option("space", path, "space JSON")->required();
    cd->add_option("--n", n, "check the criterion for dimension n");
    cd->add_flag("--exhaustive", exhaustive, "compute the dimension over all subsets");
    cd->add_option("--witness", z_text, "Z as comma-separated indices, followed by i as pairs")->expected(0, 1);
    cd->add_option("--pairs", pairs_text, "the involution i on Z, e.g. 0-3,1-2");
    cd->add_option("--cap", opt.cap, "largest subset size enumerated");
    add_common(cd);

    auto* dw = app.add_subcommand("dress-witness", "certificate for a pairing of an even subset");
    dw->add_option("space", path, "space JSON")->required();
    dw->add_option("--z", z_text, "Z as comma-separated indices")->required();
    dw->add_option("--pairs", pairs_text, "the involution i on Z, e.g. 0-3,1-2")->required();
    add_common(dw);

    auto* bc = app.add_subcommand("bicombing", "build and check bicombings");
    bc->require_subcommand(1);
    auto* bbuild = bc->add_subcommand("build", "run the cat's-cradle cascade and report every level");
    auto* bcheck = bc->add_subcommand("check", "measure one axiom on a seeded sample");
    for (auto* c : {bbuild, bcheck}) {
        c->add_option("--space", space, "gallery id, l-inf:d, or a space JSON (its tight span)");
        c->add_option("--seed-bicombing", seed, "linear or retract");
        c->add_option("--levels", opt.levels, "cascade levels (1 = the seed itself)");
        c->add_option("--samples", opt.samples, "random tuples per report");
        add_common(c);
    }
    bcheck->add_option("--axiom", axiom, "conical, convex, discrete:n, consistent, reversible or geodesic");

    auto* bd = app.add_subcommand("boundary", "rays and the metric D_o in l-inf^d");
    bd->require_subcommand(1);
    auto* bdist = bd->add_subcommand("dist", "D_o between two closure points");
    bdist->add_option("--space", space, "l-inf:d")->required();
    bdist->add_option("--o", o_text, "basepoint, e.g. 0,0")->required();
    bdist->add_option("--x", x_text, "point or dir:v")->required();
    bdist->add_option("--y", y_text, "point or dir:v")->required();
    add_common(bdist, false); // --o is the basepoint here
    auto* bchk = bd->add_subcommand("check", "sample one of the boundary inequalities");
    bchk->add_option("--lemma", lemma, "d-o-formula, phi-r, rho-r-t, psi, sandwich, t-T, cone or d-o-metric")
        ->required();
    bchk->add_option("--samples", opt.samples, "configurations");
    add_common(bchk);

    auto* gal = app.add_subcommand("gallery", "example spaces");
    gal->require_subcommand(1);
    auto* glist = gal->add_subcommand("list", "list the available spaces");
    add_common(glist);
    auto* gemit = gal->add_subcommand("emit", "emit a space as JSON");
    gemit->add_option("id", gallery_id, "gallery id")->required();
    gemit->add_option("params", params, "key=value parameters");
    add_common(gemit);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
        if (*validate)
            out = cmd_validate(path);
        else if (*ts)
            out = cmd_tight_span(path, faces, opt);
        else if (*cd)
            out = !z_text.empty() ? cmd_dress_witness(path, z_text, pairs_text) : cmd_comb_dim(path, n, exhaustive, opt);
        else if (*dw)
            out = cmd_dress_witness(path, z_text, pairs_text);
        else if (*bbuild)
            out = cmd_bicombing_build(space, seed, opt);
        else if (*bcheck)
            out = cmd_bicombing_check(space, seed, axiom, opt);
        else if (*bdist)
            out = cmd_boundary_dist(space, o_text, x_text, y_text);
        else if (*bchk)
            out = cmd_boundary_check(lemma, opt);
        else if (*glist)
            out = cmd_gallery_list();
        else if (*gemit)
            out = cmd_gallery_emit(gallery_id, params, opt);
    } catch (const InvalidSpace& e) {
        out.status = 2;
        out.results = {{"valid", false}, {"violations", e.violations}};
        out.digest_input = read_text_file(path);
    } catch (const UsageError& e) {
        std::cerr << "bicomb: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "bicomb: " << e.what() << '\n';
        return 1;
    } catch (const std::length_error& e) {
        std::cerr << "bicomb: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "bicomb: internal error: " << e.what() << '\n';
        return 1;
    }

    std::vector<std::string> command(argv + 1, argv + argc);
    json report = {{"schema", schema},
                   {"version", version},
                   {"command", command},
                   {"input_digest", "sha256:" + sha256_hex(out.digest_input)},
                   {"rng_seed", opt.seed},
                   {"status", out.status == 0 ? "pass" : "fail"},
                   {"results", out.results}};
    if (opt.wall_time)
        report["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::string text = report.dump(2) + "\n";
    std::cout << text;
    if (!opt.output.empty() && !*gemit) {
        std::ofstream f(opt.output, std::ios::binary);
        if (!f) {
            std::cerr << "bicomb: cannot write '" << opt.output << "'\n";
            return 1;
        }
        f << text;
    }
    return out.status;
}
