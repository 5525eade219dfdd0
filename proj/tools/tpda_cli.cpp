// tpda: command-line front end over the library.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tpda/constraint.hpp"
#include "tpda/definable.hpp"
#include "tpda/dtpda.hpp"
#include "tpda/intsets.hpp"
#include "tpda/io.hpp"
#include "tpda/orbit.hpp"
#include "tpda/reachability.hpp"
#include "tpda/search.hpp"
#include "tpda/trpda.hpp"

namespace tpda::cli {

using nlohmann::ordered_json;

constexpr const char* kSchema = "tpda-report/1";

// ── Report ──

/// one run of one subcommand; printed as text or as a single json document
struct RunReport {
    std::vector<std::string> command;
    std::string verdict;  // empty when the command only transforms
    bool decided = true;
    ordered_json result = ordered_json::object();
    ordered_json stats = ordered_json::object();
    std::string text;  // human rendering of the result
    double seconds = 0;
};

struct Options {
    bool json = false;
    bool timing = false;
    std::uint64_t seed = 1;
};

int emit(const RunReport& r, const Options& opt) {
    if (opt.json) {
        ordered_json j;
        j["schema"] = kSchema;
        j["command"] = r.command;
        j["verdict"] = r.verdict.empty() ? ordered_json(nullptr) : ordered_json(r.verdict);
        j["decided"] = r.decided;
        j["result"] = r.result;
        j["stats"] = r.stats;
        if (opt.timing) j["seconds"] = r.seconds;
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << r.text;
        if (!r.text.empty() && r.text.back() != '\n') std::cout << "\n";
        if (!r.verdict.empty()) std::cout << "verdict: " << r.verdict << "\n";
        for (auto& [k, v] : r.stats.items()) std::cout << "# " << k << ": " << v.dump() << "\n";
        if (opt.timing) std::cout << "# seconds: " << r.seconds << "\n";
    }
    return r.decided ? 0 : 2;
}

std::string ext_of(const std::string& path) {
    auto dot = path.rfind('.');
    return dot == std::string::npos ? "" : path.substr(dot + 1);
}

ordered_json witness_json(const TrPDA& a, const OracleResult& o) {
    ordered_json w;
    w["word"] = print_word(o.word);
    ordered_json run = ordered_json::array();
    for (auto i : o.run) run.push_back(a.rules[i].name.empty() ? "#" + std::to_string(i) : a.rules[i].name);
    w["run"] = run;
    return w;
}

std::string emptiness_verdict(Emptiness e) {
    return e == Emptiness::Empty ? "Empty" : e == Emptiness::Nonempty ? "Nonempty" : "Unknown";
}

std::vector<std::string> names_for(std::size_t dim) {
    std::vector<std::string> n;
    for (std::size_t i = 0; i < dim; ++i) n.push_back("x" + std::to_string(i + 1));
    return n;
}

// ── Subcommands ──

void cmd_orbits(RunReport& r, const std::string& file) {
    SetFile f = parse_set_file(read_file(file));
    std::ostringstream os;
    for (auto& [name, X] : f.sets) {
        std::string cert;
        auto bound = is_orbit_finite(X, &cert);
        if (!bound) throw std::invalid_argument("set " + name + " is not orbit-finite: " + cert);
        auto os_ = orbits(X);
        ordered_json arr = ordered_json::array();
        os << name << ": " << os_.size() << " orbits, span bound " << *bound << "\n";
        for (auto& o : os_) {
            os << "  " << o.str() << "\n";
            arr.push_back(o.str());
        }
        r.result[name] = {{"span_bound", *bound}, {"orbits", arr}};
    }
    r.text = os.str();
}

void print_components(RunReport& r, const std::vector<NFComponent>& comps, std::size_t dim) {
    std::ostringstream os;
    ordered_json arr = ordered_json::array();
    auto names = names_for(dim);
    std::size_t ext = 0;
    for (auto& c : comps) {
        std::string s = (c.is_extension() ? "ext  " : "orbit ") + c.str(names);
        os << s << "\n";
        arr.push_back({{"extension", c.is_extension()}, {"constraint", c.str(names)}});
        ext += c.is_extension();
    }
    r.result["components"] = arr;
    r.stats["components"] = comps.size();
    r.stats["extensions"] = ext;
    r.text = os.str();
}

void cmd_normal_form(RunReport& r, const std::string& c, std::size_t dim, std::optional<Int> K) {
    ZoneDNF z = parse_constraint(c, dim);
    auto comps = normal_form(z, K);
    r.stats["K"] = K ? *K : nf_constant(z);
    print_components(r, comps, dim);
}

void cmd_project(RunReport& r, const std::string& c, std::size_t dim, const std::vector<std::size_t>& keep1) {
    ZoneDNF z = parse_constraint(c, dim);
    std::vector<std::size_t> keep;
    for (auto k : keep1) {
        if (k == 0 || k > dim) throw std::invalid_argument("--keep index out of range: " + std::to_string(k));
        keep.push_back(k - 1);
    }
    auto comps = project(dim, normal_form(z), keep);
    print_components(r, comps, keep.size());
}

struct CheckArgs {
    std::string route = "equations";
    std::size_t max_steps = 12;
    std::size_t budget = 10000;
};

void cmd_check(RunReport& r, const std::string& file, const CheckArgs& ca) {
    const std::string ext = ext_of(file);
    TrPDA a;
    if (ext == "dtpda") {
        // wrapper, then stack untiming when needed, then registers
        DtPDA d = uninitialized_wrapper(parse_dtpda(read_file(file)));
        if (!d.timeless_stack()) d = untime_stack(simplify(d));
        a = dtpda_to_trpda(d);
    } else {
        a = ext == "mm" ? encode_minsky(parse_minsky(read_file(file))) : parse_trpda(read_file(file));
    }
    r.result["route"] = ca.route;
    if (ca.route == "oracle") {
        auto o = bounded_empty_oracle(a, ca.max_steps);
        r.stats["nodes"] = o.nodes;
        r.stats["max_steps"] = ca.max_steps;
        if (o.nonempty) {
            r.verdict = "Nonempty";
            r.result["witness"] = witness_json(a, o);
            r.text = "witness: " + print_word(o.word) + "\n";
        } else {
            r.verdict = "NoRunUpToBound";
            r.decided = false;
        }
        return;
    }
    auto rep = validate(a);
    if (!rep.orbit_finite_class) throw std::invalid_argument("not in the orbit-finite class:\n" + rep.str());
    if (ca.route == "orbit-pda") {
        if (!rep.timeless_stack) throw std::invalid_argument("route orbit-pda needs a timeless stack");
        std::size_t explored = 0;
        r.verdict = emptiness_verdict(decide_emptiness_orbit(a, &explored));
        r.stats["explored_orbits"] = explored;
        return;
    }
    if (ca.route != "equations") throw std::invalid_argument("unknown route: " + ca.route);
    auto e = decide_emptiness(a, ca.budget);
    r.verdict = emptiness_verdict(e.verdict);
    r.decided = e.verdict != Emptiness::Unknown;
    r.stats["variables"] = e.variables;
    r.stats["inclusions"] = e.inclusions;
    r.stats["intersection_free"] = e.intersection_free;
}

void cmd_check_cfg(RunReport& r, const std::string& file, const CheckArgs& ca) {
    TrCFG g = parse_trcfg(read_file(file));
    r.result["route"] = ca.route;
    if (ca.route == "orbit-pda") {
        auto e = decide_emptiness_trcfg(g);
        r.verdict = emptiness_verdict(e);
        r.decided = e != Emptiness::Unknown;
        return;
    }
    TrPDA a = trcfg_to_trpda(g);
    if (ca.route == "oracle") {
        auto o = bounded_empty_oracle(a, ca.max_steps);
        r.stats["nodes"] = o.nodes;
        r.verdict = o.nonempty ? "Nonempty" : "NoRunUpToBound";
        r.decided = o.nonempty;
        if (o.nonempty) r.result["witness"] = witness_json(a, o);
        return;
    }
    auto e = decide_emptiness(a, ca.budget);
    r.verdict = emptiness_verdict(e.verdict);
    r.decided = e.verdict != Emptiness::Unknown;
    r.stats["variables"] = e.variables;
    r.stats["inclusions"] = e.inclusions;
}

void cmd_transform(RunReport& r, const std::string& what, const std::string& file, bool wrap) {
    if (what == "untime-stack") {
        DtPDA a = parse_dtpda(read_file(file));
        r.text = print_dtpda(untime_stack(is_simplified(a) ? a : simplify(a)));
    } else if (what == "to-trpda") {
        DtPDA a = parse_dtpda(read_file(file));
        if (wrap) a = uninitialized_wrapper(a);
        r.text = print_trpda(dtpda_to_trpda(a));
    } else if (what == "short-form") {
        r.text = print_trpda(to_short_form(parse_trpda(read_file(file))));
    } else if (what == "encode-minsky") {
        r.text = print_trpda(encode_minsky(parse_minsky(read_file(file))));
    }
    r.result["model"] = r.text;
}

void cmd_untiming_cfg(RunReport& r, const std::string& file) {
    UntimedCFG u = trcfg_untiming(parse_trcfg(read_file(file)));
    r.text = u.str();
    r.result["grammar"] = r.text;
    r.stats["nonterminals"] = u.nonterminals.size();
    r.stats["productions"] = u.prods.size();
    r.verdict = u.nonempty() ? "Nonempty" : "Empty";
}

void cmd_to_equations(RunReport& r, const std::string& file) {
    TrPDA a = parse_trpda(read_file(file));
    auto rep = validate(a);
    if (!rep.orbit_finite_class) throw std::invalid_argument("not in the orbit-finite class:\n" + rep.str());
    auto eb = build_equations(preprocess(a, false));
    r.text = eb.header() + eb.system.str();
    r.result["equations"] = r.text;
    ordered_json init = ordered_json::array();
    for (int v : eb.initial_final) init.push_back(eb.system.names[v]);
    r.result["initial_final"] = init;
    r.stats["variables"] = eb.system.names.size();
    r.stats["inclusions"] = eb.system.incs.size();
    r.stats["intersection_free"] = eb.system.intersection_free();
}

int var_of(const EqSystem& s, const std::string& name) {
    auto x = s.find(name);
    if (!x) throw std::invalid_argument("unknown variable: " + name);
    return *x;
}

Backend backend_of(const std::string& b) {
    if (b == "accel") return Backend::Accel;
    if (b == "bounded") return Backend::Bounded;
    throw std::invalid_argument("unknown backend: " + b);
}

void cmd_solve(RunReport& r, const std::string& file, const std::string& var, const std::string& backend,
               std::size_t budget, std::size_t depth) {
    EqSystem s = parse_eq(read_file(file));
    int x = var_of(s, var);
    if (backend_of(backend) == Backend::Bounded) {
        auto d = derivation_oracle(s, x, depth);
        ordered_json el = d.elements;
        r.result["elements"] = el;
        r.result["truncated"] = d.truncated;
        std::ostringstream os;
        os << var << " contains {";
        bool first = true;
        for (Int k : d.elements) os << (first ? "" : ", ") << k, first = false;
        os << "} (derivations up to depth " << depth << ")";
        r.text = os.str();
        r.verdict = d.nonempty ? "nonempty" : "Unknown";
        r.decided = d.nonempty;
        return;
    }
    auto k = kleene_solve(s, budget);
    r.result["value"] = k.values[x].str();
    r.result["exact"] = k.exact;
    r.stats["steps"] = k.steps;
    r.text = var + " = " + k.values[x].str() + (k.exact ? "" : " (under-approximation)");
    NonemptyStats ns;
    Verdict v = nonempty(s, x, budget, &ns);
    r.verdict = v == Verdict::True ? "nonempty" : v == Verdict::False ? "empty" : "Unknown";
    r.decided = v != Verdict::Unknown;
    r.stats["seeded"] = ns.seeded;
}

void cmd_member(RunReport& r, const std::string& file, const std::string& var, Int value, const std::string& backend,
                std::size_t budget, std::size_t depth) {
    EqSystem s = parse_eq(read_file(file));
    int x = var_of(s, var);
    Verdict v = membership(s, x, value, backend_of(backend), budget, depth);
    r.verdict = v == Verdict::True ? "true" : v == Verdict::False ? "false" : "Unknown";
    r.decided = v != Verdict::Unknown;
    r.result["value"] = value;
}

void cmd_simulate(RunReport& r, const std::string& file, const std::string& wordfile, std::size_t max_silent) {
    TimedWord w = parse_word(read_file(wordfile));
    Tri t;
    AcceptStats st;
    if (ext_of(file) == "dtpda") {
        t = dt_accepts(parse_dtpda(read_file(file)), w, max_silent, &st);
    } else {
        TrPDA a = parse_trpda(read_file(file));
        t = accepts(a, w, max_silent ? max_silent : default_max_silent(w), &st);
    }
    r.verdict = t == Tri::True ? "accepted" : t == Tri::False ? "rejected" : "Unknown";
    r.decided = t != Tri::Unknown;
    r.result["word"] = print_word(w);
}

void cmd_sample(RunReport& r, const std::string& file, std::size_t count, std::size_t max_steps, std::uint64_t seed) {
    ordered_json arr = ordered_json::array();
    std::ostringstream os;
    if (ext_of(file) == "dtpda") {
        for (auto& w : dt_sample_words(parse_dtpda(read_file(file)), count, 6, seed, max_steps)) {
            arr.push_back(print_word(w));
            os << print_word(w) << "\n";
        }
    } else {
        TrPDA a = parse_trpda(read_file(file));
        for (auto& s : sample_accepted(a, max_steps, 6, count, seed)) {
            arr.push_back(print_word(s.word));
            os << print_word(s.word) << "\n";
        }
    }
    r.result["words"] = arr;
    r.result["seed"] = seed;
    r.text = os.str();
}

} // namespace tpda::cli

int main(int argc, char** argv) {
    using namespace tpda::cli;
    CLI::App app{"timed-register and dense-timed pushdown automata"};
    app.require_subcommand(1);
    Options opt;
    app.add_flag("--json", opt.json, "print one json report");
    app.add_flag("--timing", opt.timing, "include wall-clock time in the report");
    app.add_option("--seed", opt.seed, "seed for sampling subcommands");

    RunReport rep;
    for (int i = 1; i < argc; ++i) rep.command.push_back(argv[i]);

    std::string file, file2, constraint, var, backend = "accel";
    std::size_t dim = 0, budget = 10000, depth = 12, max_silent = 0, count = 10, max_steps = 12;
    std::optional<tpda::Int> K;
    tpda::Int value = 0;
    std::vector<std::size_t> keep;
    CheckArgs ca;
    bool wrap = false;

    auto* orbits = app.add_subcommand("orbits", "list the orbits of each set in a .set file");
    orbits->add_option("file", file)->required()->check(CLI::ExistingFile);

    auto* nf = app.add_subcommand("normal-form", "normal form of a constraint");
    nf->add_option("constraint", constraint)->required();
    nf->add_option("--dim", dim)->required();
    nf->add_option("--K", K, "extension constant");

    auto* proj = app.add_subcommand("project", "project a constraint onto some variables");
    proj->add_option("constraint", constraint)->required();
    proj->add_option("--dim", dim)->required();
    proj->add_option("--keep", keep, "1-based variables to keep")->required()->delimiter(',');

    auto* check = app.add_subcommand("check", "decide emptiness");
    check->add_option("file", file)->required()->check(CLI::ExistingFile);
    check->add_option("--route", ca.route)->check(CLI::IsMember({"equations", "orbit-pda", "oracle"}));
    check->add_option("--max-steps", ca.max_steps);
    check->add_option("--budget", ca.budget);

    std::vector<std::pair<std::string, CLI::App*>> transforms;
    for (auto [name, desc] : std::vector<std::pair<const char*, const char*>>{
             {"untime-stack", "dtPDA with a timeless stack"},
             {"to-trpda", "dtPDA with timeless stack to trPDA"},
             {"short-form", "trPDA in short form"},
             {"encode-minsky", "Minsky machine as a trPDA"}}) {
        auto* sc = app.add_subcommand(name, desc);
        sc->add_option("file", file)->required()->check(CLI::ExistingFile);
        if (std::string(name) == "to-trpda")
            sc->add_flag("--wrap", wrap, "start from uninitialized clocks first");
        transforms.push_back({name, sc});
    }

    auto* ucfg = app.add_subcommand("untiming-cfg", "untimed grammar of a trCFG");
    ucfg->add_option("file", file)->required()->check(CLI::ExistingFile);

    auto* toeq = app.add_subcommand("to-equations", "equation system of a trPDA");
    toeq->add_option("file", file)->required()->check(CLI::ExistingFile);

    auto* solve = app.add_subcommand("solve", "least solution of one variable");
    solve->add_option("file", file)->required()->check(CLI::ExistingFile);
    solve->add_option("--var", var)->required();
    solve->add_option("--backend", backend)->check(CLI::IsMember({"accel", "bounded"}));
    solve->add_option("--budget", budget);
    solve->add_option("--depth", depth);

    auto* member = app.add_subcommand("member", "membership of one integer");
    member->add_option("file", file)->required()->check(CLI::ExistingFile);
    member->add_option("--var", var)->required();
    member->add_option("--value", value)->required()->allow_extra_args(false);
    member->add_option("--backend", backend)->check(CLI::IsMember({"accel", "bounded"}));
    member->add_option("--budget", budget);
    member->add_option("--depth", depth);

    auto* sim = app.add_subcommand("simulate", "run a word through a trPDA or dtPDA");
    sim->add_option("file", file)->required()->check(CLI::ExistingFile);
    sim->add_option("word", file2)->required()->check(CLI::ExistingFile);
    sim->add_option("--max-silent", max_silent);

    auto* sample = app.add_subcommand("sample", "sample accepted words");
    sample->add_option("file", file)->required()->check(CLI::ExistingFile);
    sample->add_option("--count", count);
    sample->add_option("--max-steps", max_steps);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    auto t0 = std::chrono::steady_clock::now();
    try {
        if (*orbits) cmd_orbits(rep, file);
        else if (*nf) cmd_normal_form(rep, constraint, dim, K);
        else if (*proj) cmd_project(rep, constraint, dim, keep);
        else if (*check) {
            if (ext_of(file) == "trcfg") cmd_check_cfg(rep, file, ca);
            else cmd_check(rep, file, ca);
        } else if (*ucfg) cmd_untiming_cfg(rep, file);
        else if (*toeq) cmd_to_equations(rep, file);
        else if (*solve) cmd_solve(rep, file, var, backend, budget, depth);
        else if (*member) cmd_member(rep, file, var, value, backend, budget, depth);
        else if (*sim) cmd_simulate(rep, file, file2, max_silent);
        else if (*sample) cmd_sample(rep, file, count, max_steps, opt.seed);
        else
            for (auto& [name, sc] : transforms)
                if (*sc) cmd_transform(rep, name, file, wrap);
    } catch (const std::exception& e) {
        if (opt.json) {
            ordered_json j;
            j["schema"] = kSchema;
            j["command"] = rep.command;
            j["error"] = e.what();
            std::cout << j.dump(2) << "\n";
        } else {
            std::cerr << "error: " << e.what() << "\n";
        }
        return 1;
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return emit(rep, opt);
}
