#include "hyperbuild/analysis.hpp"
#include "hyperbuild/errors.hpp"
#include "hyperbuild/experiments.hpp"
#include "hyperbuild/modulus.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace hyperbuild;

namespace {

py::dict report_dict(const CheckReport& r) {
    py::dict d;
    d["check"] = r.check;
    d["status"] = std::string(to_string(r.status));
    d["values_json"] = r.values.dump();
    d["columns"] = r.table.columns;
    d["rows"] = r.table.rows;
    d["notes"] = r.notes;
    return d;
}

RunConfig config_from(const std::string& json_text) { return parse_config(json_text.empty() ? "{}" : json_text); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Boundary models of right-angled Fuchsian buildings";
    m.attr("__version__") = std::string(kVersion);

    static py::exception<Error> error(m, "Error");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetString(error.ptr(), (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
        }
    });

    py::class_<ModelConstants>(m, "ModelConstants")
        .def_readonly("p", &ModelConstants::p)
        .def_readonly("q", &ModelConstants::q)
        .def_readonly("Q", &ModelConstants::Q)
        .def_readonly("a", &ModelConstants::a)
        .def("__repr__", [](const ModelConstants& c) {
            return "ModelConstants(p=" + std::to_string(c.p) + ", q=" + std::to_string(c.q) + ", Q=" + format_number(c.Q) +
                   ", a=" + format_number(c.a) + ")";
        });
    m.def("compute_constants", &compute_constants, py::arg("p"), py::arg("q"));

    m.def(
        "polygon_side_length", [](int p) { return build_right_angled_polygon(p).side_length(); }, py::arg("p"));

    m.def(
        "lemma5_ratio",
        [](std::vector<double> breakpoints, std::vector<double> values, double Q) {
            const auto f = StepFunction::from(std::move(breakpoints), std::move(values));
            const auto r = lemma5_check(f, f.length(), Q);
            return py::make_tuple(r.lhs, r.s_left, r.s_right, r.ratio);
        },
        py::arg("breakpoints"), py::arg("values"), py::arg("Q"),
        "Returns (lhs, s_left, s_right, ratio) for a nonnegative step function.");

    m.def(
        "path_modulus",
        [](int n, std::vector<std::pair<int, int>> edges, std::vector<int> E, std::vector<int> F, double Q,
           std::vector<double> length, std::vector<double> measure, double tol) {
            ModulusProblem prob{Graph(n), Q, std::move(E), std::move(F)};
            for (const auto& [a, b] : edges) prob.graph.add_edge(a, b);
            if (!length.empty()) prob.graph.length = std::move(length);
            if (!measure.empty()) prob.graph.measure = std::move(measure);
            const auto s = discrete_modulus(prob, tol);
            return py::make_tuple(s.value, s.lower);
        },
        py::arg("n"), py::arg("edges"), py::arg("E"), py::arg("F"), py::arg("Q"),
        py::arg("length") = std::vector<double>{}, py::arg("measure") = std::vector<double>{}, py::arg("tol") = 1e-6,
        "Discrete modulus of the node-weighted paths from E to F; returns (value, lower).");

    m.def("check_names", &check_names);
    m.def(
        "run_check", [](const std::string& name, const std::string& config_json) {
            const auto c = config_from(config_json);
            CheckReport r;
            {
                py::gil_scoped_release release;
                r = run_check(name, c);
            }
            return report_dict(r);
        },
        py::arg("name"), py::arg("config_json") = "");
    m.def(
        "report_csv", [](const std::string& name, const std::string& config_json) {
            const auto c = config_from(config_json);
            return to_csv(run_check(name, c), c);
        },
        py::arg("name"), py::arg("config_json") = "");
    m.def("format_number", &format_number);
}
