#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tpda/definable.hpp"
#include "tpda/dtpda.hpp"
#include "tpda/intsets.hpp"
#include "tpda/io.hpp"
#include "tpda/orbit.hpp"
#include "tpda/reachability.hpp"
#include "tpda/search.hpp"
#include "tpda/trpda.hpp"

namespace py = pybind11;
using namespace tpda;

namespace {

// ── Helpers ──

/// None for unknown, else a bool
py::object tri_obj(Tri t) {
    if (t == Tri::Unknown) return py::none();
    return py::bool_(t == Tri::True);
}

py::object verdict_obj(Verdict v) {
    if (v == Verdict::Unknown) return py::none();
    return py::bool_(v == Verdict::True);
}

int eq_var(const EqSystem& s, const std::string& name) {
    auto x = s.find(name);
    if (!x) throw py::key_error("unknown variable " + name);
    return *x;
}

std::string check_trpda(const TrPDA& a, const std::string& route, std::size_t budget, std::size_t max_steps) {
    if (route == "equations") return emptiness_str(decide_emptiness(a, budget).verdict);
    if (route == "orbit-pda") return emptiness_str(decide_emptiness_orbit(a));
    if (route == "oracle") return bounded_empty_oracle(a, max_steps).nonempty ? "Nonempty" : "NoRunUpToBound";
    throw py::value_error("unknown route " + route);
}

} // namespace

PYBIND11_MODULE(_tpda, m) {
    m.doc() = "timed register pushdown automata: emptiness, untiming, integer set equations";

    // ── Constraints and sets ──
    m.def("normal_form", [](const std::string& c, std::size_t dim) {
        std::vector<std::string> out;
        for (auto& comp : normal_form(parse_constraint(c, dim))) out.push_back(comp.str());
        return out;
    }, py::arg("constraint"), py::arg("dim"));

    m.def("orbits", [](const std::string& text) {
        std::vector<std::pair<std::string, std::vector<std::string>>> res;
        for (auto& [name, set] : parse_set_file(text).sets) {
            std::vector<std::string> os;
            for (auto& o : orbits(set)) os.push_back(o.str());
            res.emplace_back(name, std::move(os));
        }
        return res;
    }, py::arg("text"), "orbits of every set in a set file, by set name");

    // ── Register automata ──
    py::class_<TrPDA>(m, "TrPDA")
        .def_static("parse", &parse_trpda)
        .def("__str__", &print_trpda)
        .def("short_form", &to_short_form)
        .def("timeless_stack", [](const TrPDA& a) { return validate(a).timeless_stack; })
        .def("accepts", [](const TrPDA& a, const std::string& word) {
            TimedWord w = parse_word(word);
            return tri_obj(accepts(a, w, default_max_silent(w)));
        }, py::arg("word"))
        .def("check", &check_trpda, py::arg("route") = "equations", py::arg("budget") = 10000,
             py::arg("max_steps") = 12);

    m.def("encode_minsky", [](const std::string& text) { return encode_minsky(parse_minsky(text)); });

    // ── Timed automata ──
    py::class_<DtPDA>(m, "DtPDA")
        .def_static("parse", &parse_dtpda)
        .def("__str__", &print_dtpda)
        .def("timeless_stack", &DtPDA::timeless_stack)
        .def("simplify", &simplify)
        .def("untime_stack", &untime_stack)
        .def("wrap", &uninitialized_wrapper)
        .def("to_trpda", &dtpda_to_trpda)
        .def("accepts", [](const DtPDA& a, const std::string& word) {
            return tri_obj(dt_accepts(a, parse_word(word)));
        }, py::arg("word"))
        .def("sample", [](const DtPDA& a, std::size_t count, std::size_t max_len, std::uint64_t seed) {
            std::vector<std::string> ws;
            for (auto& w : dt_sample_words(a, count, max_len, seed)) ws.push_back(print_word(w));
            return ws;
        }, py::arg("count") = 5, py::arg("max_len") = 6, py::arg("seed") = 0);

    // ── Integer set equations ──
    py::class_<EqSystem>(m, "EqSystem")
        .def_static("parse", &parse_eq)
        .def("__str__", &EqSystem::str)
        .def_property_readonly("names", [](const EqSystem& s) { return s.names; })
        .def("intersection_free", &EqSystem::intersection_free)
        .def("nonempty", [](const EqSystem& s, const std::string& x, std::size_t budget) {
            return verdict_obj(nonempty(s, eq_var(s, x), budget));
        }, py::arg("var"), py::arg("budget") = 10000)
        .def("member", [](const EqSystem& s, const std::string& x, Int k) {
            return verdict_obj(membership(s, eq_var(s, x), k));
        }, py::arg("var"), py::arg("value"))
        .def("solve", [](const EqSystem& s, std::size_t budget) {
            KleeneResult r = kleene_solve(s, budget);
            std::map<std::string, std::string> out;
            if (!r.exact) return py::object(py::none());
            for (std::size_t i = 0; i < s.names.size(); ++i) out[s.names[i]] = r.values[i].str();
            return py::object(py::cast(out));
        }, py::arg("budget") = 10000, "least solution by name, or None when iteration did not stabilize");

    m.def("to_equations", [](const TrPDA& a) {
        EquationBuild b = build_equations(preprocess(a));
        std::vector<std::string> init;
        for (int x : b.initial_final) init.push_back(b.system.names[x]);
        return py::make_tuple(b.system, init);
    }, py::arg("trpda"), "equation system and its initial-final variables");
}
