#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ptip/basins.hpp"
#include "ptip/cli.hpp"
#include "ptip/climate.hpp"
#include "ptip/config.hpp"
#include "ptip/cycles.hpp"
#include "ptip/errors.hpp"
#include "ptip/models.hpp"
#include "ptip/scan.hpp"
#include "ptip/tipping.hpp"

namespace py = pybind11;
using namespace ptip;

namespace {

py::dict equilibrium_dict(const Equilibrium& e) {
    py::dict d;
    d["label"] = e.label;
    d["x"] = e.x;
    d["stability"] = to_string(e.stability.cls);
    d["eigenvalues"] = std::vector<std::complex<double>>(e.stability.eigenvalues.begin(), e.stability.eigenvalues.end());
    d["ecological"] = e.ecological;
    return d;
}

py::dict record_dict(const TippingRecord& r) {
    py::dict d;
    d["run"] = r.run;
    d["t1"] = r.t1;
    d["r_pre"] = r.r_pre;
    d["r_post"] = r.r_post;
    d["x_b"] = r.x_b;
    d["phi_b"] = r.phi_xb;
    d["kind"] = to_string(r.kind);
    d["rescues"] = r.rescues;
    d["converged_pre"] = r.converged_pre;
    return d;
}

py::tuple bifurcation_tuple(const BifurcationPoint& b) { return py::make_tuple(b.value, b.lo, b.hi); }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Phase-tipping experiments on forced predator-prey models.";

    static py::exception<Error> base_error(m, "PtipError", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", base_error.ptr());
    py::register_exception<NoCycleError>(m, "NoCycleError", base_error.ptr());
    py::register_exception<NotBistable>(m, "NotBistable", base_error.ptr());
    py::register_exception<BracketError>(m, "BracketError", base_error.ptr());

    py::class_<State>(m, "State")
        .def(py::init<double, double>(), py::arg("N"), py::arg("P"))
        .def(py::init([](py::tuple t) {
            if (t.size() != 2) throw py::value_error("State needs (N, P)");
            return State{t[0].cast<double>(), t[1].cast<double>()};
        }))
        .def_readwrite("N", &State::N)
        .def_readwrite("P", &State::P)
        .def("__iter__", [](const State& s) { return py::iter(py::make_tuple(s.N, s.P)); })
        .def("__repr__", [](const State& s) {
            return "State(" + std::to_string(s.N) + ", " + std::to_string(s.P) + ")";
        });
    py::implicitly_convertible<py::tuple, State>();

    py::class_<RmaParams>(m, "RmaParams")
        .def(py::init<>())
        .def_readwrite("r", &RmaParams::r)
        .def_readwrite("c", &RmaParams::c)
        .def_readwrite("alpha", &RmaParams::alpha)
        .def_readwrite("beta", &RmaParams::beta)
        .def_readwrite("chi", &RmaParams::chi)
        .def_readwrite("delta", &RmaParams::delta)
        .def_readwrite("mu", &RmaParams::mu)
        .def_readwrite("nu", &RmaParams::nu);

    py::class_<MayParams>(m, "MayParams")
        .def(py::init<>())
        .def_readwrite("r", &MayParams::r)
        .def_readwrite("c", &MayParams::c)
        .def_readwrite("alpha", &MayParams::alpha)
        .def_readwrite("beta", &MayParams::beta)
        .def_readwrite("s", &MayParams::s)
        .def_readwrite("q", &MayParams::q)
        .def_readwrite("mu", &MayParams::mu)
        .def_readwrite("nu", &MayParams::nu)
        .def_readwrite("epsilon", &MayParams::epsilon);

    m.def("preset_model", &preset_model, py::arg("name"));
    m.def("with_r", &with_r, py::arg("model"), py::arg("r"));
    m.def("vector_field", py::overload_cast<const Model&, const State&>(&vector_field), py::arg("model"), py::arg("x"));
    m.def("equilibria", [](const Model& model) {
        py::list out;
        for (const auto& e : all_equilibria(model)) out.append(equilibrium_dict(e));
        return out;
    }, py::arg("model"));

    py::class_<LimitCycle>(m, "LimitCycle")
        .def_property_readonly("r", &LimitCycle::r)
        .def_readonly("period", &LimitCycle::period)
        .def_readonly("anchor", &LimitCycle::anchor)
        .def_readonly("samples", &LimitCycle::samples)
        .def_readonly("closure_error", &LimitCycle::closure_error);
    m.def("find_limit_cycle", [](const Model& model) { return find_limit_cycle(model); }, py::arg("model"));
    m.def("phase_of", &phase_of, py::arg("point"), py::arg("anchor"));

    py::class_<InvariantMeasure>(m, "InvariantMeasure")
        .def_readonly("endpoint_phases", &InvariantMeasure::endpoint_phases)
        .def("histogram", &InvariantMeasure::histogram, py::arg("bins"))
        .def("curve", &InvariantMeasure::curve, py::arg("n"))
        .def("mass_at", &InvariantMeasure::mass_at, py::arg("phi"));
    m.def("invariant_measure", [](const LimitCycle& c, std::size_t J, double T, double eps) {
        py::gil_scoped_release release;
        return invariant_measure(c, J, T, eps);
    }, py::arg("cycle"), py::arg("J") = 10000, py::arg("T") = 100.0, py::arg("eps") = 0.1);

    m.def("allee_threshold", [](const Model& model) { return allee_threshold(model).polyline(); }, py::arg("model"));
    m.def("classify_basin", [](const LimitCycle& cycle, const Model& m2) {
        const BasinBoundary theta = threshold_covering(m2, cycle);
        const BasinClassification bc = classify_basin_instability(cycle, theta);
        const PhaseInterval iv = unstable_phase_interval(cycle, theta);
        py::dict d;
        d["class"] = to_string(bc.cls);
        d["d_min"] = bc.d_min;
        d["outside_fraction"] = bc.outside_fraction;
        d["interval"] = iv.empty ? py::object(py::none()) : py::object(py::make_tuple(iv.lo, iv.hi()));
        return d;
    }, py::arg("cycle"), py::arg("model_r2"));
    m.def("marginal_r2", [](const LimitCycle& cycle, double lo, double hi) { return marginal_r2(cycle, lo, hi); },
          py::arg("cycle"), py::arg("lo"), py::arg("hi"));

    m.def("detect_hopf", [](const Model& model, double lo, double hi) {
        return bifurcation_tuple(detect_hopf(model, lo, hi));
    }, py::arg("model"), py::arg("lo"), py::arg("hi"));
    m.def("detect_cycle_disappearance", [](const Model& model, double lo, double hi) {
        return bifurcation_tuple(detect_cycle_disappearance(model, lo, hi));
    }, py::arg("model"), py::arg("lo"), py::arg("hi"));
    m.def("census_label", [](const Model& model) {
        return std::string(to_string(attractor_census(model, census_probes(model)).label));
    }, py::arg("model"));

    m.def("sample_signal", [](double r_low, double r_high, double rho, std::uint64_t seed, double horizon,
                              std::uint64_t stream) {
        ClimateConfig cfg;
        cfg.r_low = r_low;
        cfg.r_high = r_high;
        cfg.rho = rho;
        cfg.seed = seed;
        cfg.horizon = horizon;
        cfg.validate();
        std::vector<std::tuple<double, int, double>> out;
        for (const auto& e : sample_signal(cfg, stream).epochs) out.emplace_back(e.start, e.duration, e.r);
        return out;
    }, py::arg("r_low"), py::arg("r_high"), py::arg("rho") = 0.2, py::arg("seed") = 1,
       py::arg("horizon") = 5000.0, py::arg("stream") = 0);

    m.def("run_monte_carlo", [](const Model& model, double r_low, double r_high, double rho, std::uint64_t seed,
                                std::size_t n_runs, double horizon, State x0) {
        ExperimentConfig cfg;
        cfg.model = model;
        cfg.climate.r_low = r_low;
        cfg.climate.r_high = r_high;
        cfg.climate.rho = rho;
        cfg.climate.seed = seed;
        cfg.climate.horizon = horizon;
        cfg.n_runs = n_runs;
        cfg.x0 = x0;
        cfg.validate();
        MonteCarloResult mc;
        {
            py::gil_scoped_release release;
            mc = run_monte_carlo(cfg);
        }
        py::dict d;
        d["r_h"] = mc.r_h ? py::object(py::float_(*mc.r_h)) : py::object(py::none());
        py::list records;
        for (const auto& r : mc.records) records.append(record_dict(r));
        d["records"] = records;
        d["tipped"] = mc.count(RunOutcome::Tipped);
        d["no_tip"] = mc.count(RunOutcome::NoTip);
        d["failed"] = mc.count(RunOutcome::Failed);
        return d;
    }, py::arg("model"), py::arg("r_low"), py::arg("r_high"), py::arg("rho") = 0.2, py::arg("seed") = 1,
       py::arg("n_runs") = 1000, py::arg("horizon") = 5000.0, py::arg("x0") = State{3.0, 0.002});

    m.def("resolved_config", [](std::optional<std::string> preset, std::vector<std::string> overrides) {
        return load_config(std::nullopt, preset, overrides).snapshot.dump();
    }, py::arg("preset") = std::nullopt, py::arg("overrides") = std::vector<std::string>{});
    m.def("preset_names", &preset_names);
    m.def("run_command", [](const std::vector<std::string>& args) {
        py::gil_scoped_release release;
        return run_command(args);
    }, py::arg("args"));
}
