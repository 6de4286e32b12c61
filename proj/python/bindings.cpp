#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "censet/errors.hpp"
#include "censet/identified_set.hpp"
#include "censet/minimax.hpp"
#include "censet/normalized.hpp"
#include "censet/observation.hpp"
#include "censet/reference.hpp"
#include "censet/simulate.hpp"

namespace py = pybind11;
using namespace censet;

namespace {

AccessMode mode_of(const std::string& s) { return parse_access_mode(s); }

LogitLaw law_of(const std::string& name, const py::dict& params) {
  auto get = [&](const char* key, double fallback) {
    return params.contains(key) ? params[key].cast<double>() : fallback;
  };
  if (name == "gaussian") return GaussianIid{get("mean", 0.0), get("sd", 1.0)};
  if (name == "dirichlet") return DirichletSoftmax{get("concentration", 1.0)};
  if (name == "peaked") {
    return PeakedHead{static_cast<std::size_t>(get("head_size", 1.0)), get("gap", 10.0)};
  }
  throw Error(ErrorCode::Usage, "law must be gaussian, dirichlet or peaked");
}

}  // namespace

PYBIND11_MODULE(_censet, m) {
  m.doc() = "Identified-set geometry and certified bounds for top-K censored logits";

  py::register_exception<Error>(m, "Error", PyExc_ValueError);

  py::class_<TopKObservation>(m, "Observation")
      .def_readonly("vocab_size", &TopKObservation::vocab_size)
      .def_readonly("position_id", &TopKObservation::position_id)
      .def_property_readonly("k", &TopKObservation::k)
      .def_property_readonly("tau", &TopKObservation::tau)
      .def_property_readonly("mode", [](const TopKObservation& o) { return std::string(to_string(o.mode)); })
      .def_property_readonly("revealed", [](const TopKObservation& o) {
        std::vector<std::pair<TokenId, double>> out;
        for (const auto& r : o.revealed) out.emplace_back(r.token, r.score);
        return out;
      })
      .def("to_json", &serialize_observation);

  m.def(
      "make_observation",
      [](std::size_t v, const std::vector<std::pair<TokenId, double>>& topk, const std::string& mode,
         std::string position_id) {
        std::vector<RevealedToken> rev;
        for (const auto& [t, s] : topk) rev.push_back({t, s});
        return make_observation(v, std::move(rev), mode_of(mode), std::move(position_id));
      },
      py::arg("vocab_size"), py::arg("topk"), py::arg("mode") = "logits", py::arg("position_id") = "");
  m.def("parse_observation", [](const std::string& line) { return parse_observation_line(line, 1); });
  m.def("parse_observations", [](const std::string& text) {
    std::istringstream in(text);
    return parse_observations(in);
  });
  m.def("hidden_tail_mass", [](const TopKObservation& o) { return hidden_tail_mass(o).value; });

  py::class_<SetGeometry>(m, "SetGeometry")
      .def_readonly("uk", &SetGeometry::uk)
      .def_readonly("log_odds", &SetGeometry::log_odds)
      .def_property_readonly("m", &SetGeometry::m)
      .def_property_readonly("one_minus_uk", &SetGeometry::one_minus_uk)
      .def_property_readonly("log_za", [](const SetGeometry& g) { return g.summary.log_za; })
      .def_property_readonly("tau", [](const SetGeometry& g) { return g.summary.tau; });
  m.def("geometry", py::overload_cast<const TopKObservation&>(&geometry));
  m.def("per_token_cap", &per_token_cap, py::arg("geom"), py::arg("t"));
  m.def(
      "brute_diameter_oracle",
      [](const SetGeometry& g, std::size_t res) { return brute_diameter_oracle(g, res).diameter; },
      py::arg("geom"), py::arg("resolution") = 50);
  m.def("extremal_pair_tv", [](const SetGeometry& g) {
    const auto [a, b] = extremal_pair(g);
    return tv(to_distribution(g, a), to_distribution(g, b));
  });

  py::class_<BinaryReserve>(m, "BinaryReserve")
      .def_readonly("s_star", &BinaryReserve::s_star)
      .def_readonly("r_bin", &BinaryReserve::r_bin)
      .def_readonly("limit", &BinaryReserve::limit);
  m.def("binary_reserve", &binary_reserve, py::arg("u"));
  m.def(
      "balancing_oracle",
      [](double u, std::size_t grid) {
        const auto r = balancing_oracle(u, grid);
        return py::make_tuple(r.s, r.risk);
      },
      py::arg("u"), py::arg("grid") = 1000);
  m.def("g_envelope", &g_envelope, py::arg("u"), py::arg("t"), py::arg("s"));
  m.def(
      "g_max",
      [](double u) {
        const auto r = g_max(u);
        return py::make_tuple(r.g_max, r.t_argmax);
      },
      py::arg("u"));
  m.def(
      "symmetric_worst_case_risk",
      [](const SetGeometry& g, std::optional<double> reserve, std::size_t grid) {
        const auto r = worst_case_risk(g, symmetric_estimator(g, reserve), grid);
        return py::make_tuple(r.sup_kl, r.t_argmax);
      },
      py::arg("geom"), py::arg("reserve") = py::none(), py::arg("t_grid") = 1000);
  m.def(
      "critical_verdict",
      [](double uk, double delta) {
        const auto v = critical_verdict(0, uk, delta);
        return py::make_tuple(std::string(to_string(v.verdict)), v.r_bin, v.first_order_ok);
      },
      py::arg("uk"), py::arg("delta"));

  py::class_<ReferenceBound>(m, "ReferenceBound")
      .def_readonly("rho", &ReferenceBound::rho)
      .def_readonly("ur", &ReferenceBound::ur)
      .def_readonly("log_cr", &ReferenceBound::log_cr)
      .def_readonly("tokens", &ReferenceBound::tokens)
      .def_readonly("log_b", &ReferenceBound::log_b)
      .def("beta", &ReferenceBound::beta);
  m.def(
      "reference_geometry",
      [](const SetGeometry& g, std::vector<double> dense, double rho) {
        ReferenceLogits ref;
        ref.dense = std::move(dense);
        return reference_geometry(g, ref, rho);
      },
      py::arg("geom"), py::arg("reference_logits"), py::arg("rho"));

  py::class_<NormalizedGeometry>(m, "NormalizedGeometry")
      .def_readonly("t_star", &NormalizedGeometry::t_star)
      .def_readonly("cap", &NormalizedGeometry::cap)
      .def_readonly("m", &NormalizedGeometry::m)
      .def_readonly("diameter", &NormalizedGeometry::diameter)
      .def_readonly("bracket_lower", &NormalizedGeometry::bracket_lower)
      .def_readonly("bracket_upper", &NormalizedGeometry::bracket_upper)
      .def_property_readonly("condition",
                             [](const NormalizedGeometry& g) { return std::string(to_string(g.condition)); });
  m.def("normalized_geometry", &normalized_geometry, py::arg("obs"), py::arg("oracle_grid") = 64);

  m.def(
      "generate_teacher",
      [](std::size_t v, std::size_t n, const std::string& law, const py::dict& params, double temperature,
         std::uint64_t seed) {
        return generate_teacher({v, law_of(law, params), temperature, seed}, n);
      },
      py::arg("vocab_size"), py::arg("n_positions"), py::arg("law") = "gaussian",
      py::arg("params") = py::dict(), py::arg("temperature") = 1.0, py::arg("seed") = 0);
  m.def(
      "censor",
      [](const std::vector<double>& logits, std::size_t k, const std::string& mode) {
        return censor(logits, k, mode_of(mode));
      },
      py::arg("logits"), py::arg("k"), py::arg("mode") = "logits");

  py::class_<SweepRow>(m, "SweepRow")
      .def_readonly("k", &SweepRow::k)
      .def_readonly("uk_mean", &SweepRow::uk_mean)
      .def_readonly("uk_sd", &SweepRow::uk_sd)
      .def_readonly("rbin_mean", &SweepRow::rbin_mean)
      .def_readonly("tail_mass_mean", &SweepRow::tail_mass_mean)
      .def_readonly("n", &SweepRow::n)
      .def_readonly("skipped", &SweepRow::skipped);
  m.def("ksweep", [](const std::vector<std::vector<double>>& positions, const std::vector<std::size_t>& ks) {
    return ksweep(positions, ks);
  });
}
