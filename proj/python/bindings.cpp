#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sega/corpus.hpp"
#include "sega/extraction.hpp"
#include "sega/mechanism.hpp"
#include "sega/metrics.hpp"
#include "sega/stats.hpp"

namespace py = pybind11;

namespace {

py::dict welch_dict(const sega::stats::WelchResult& r) {
  py::dict d;
  d["t"] = r.t_statistic;
  d["dof"] = r.dof;
  d["p_two_sided"] = r.p_two_sided;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "core operations: quality metrics, marker scanning, statistics, "
            "and the gated-linear recurrence apparatus";

  // ---- metrics ----
  m.def("normalize", &sega::metrics::normalize, py::arg("percentage"),
        "Map a percentage in [0,100] to [-1,+1] via (p - 50) / 50.");
  m.def(
      "classify",
      [](double pres_v, double corr_v, std::optional<double> det_v) {
        const auto point = sega::metrics::classify(det_v, pres_v, corr_v);
        py::dict d;
        d["pres_v"] = point.pres_v;
        d["corr_v"] = point.corr_v;
        d["det_v"] = point.det_v;
        d["quadrant"] = sega::metrics::to_string(point.quadrant);
        if (point.octant) {
          d["octant"] = std::string(1, (*point.octant)[0]) + "," +
                        std::string(1, (*point.octant)[1]) + "," +
                        std::string(1, (*point.octant)[2]);
        } else {
          d["octant"] = py::none();
        }
        return d;
      },
      py::arg("pres_v"), py::arg("corr_v"), py::arg("det_v") = py::none());
  m.def(
      "determinism",
      [](const std::vector<std::string>& outputs) {
        const auto r = sega::metrics::determinism(outputs);
        py::dict d;
        d["n_runs"] = r.n_runs;
        d["distinct_outputs"] = r.distinct_outputs;
        d["modal_multiplicity"] = r.modal_multiplicity;
        d["determinism_pct"] = r.determinism_pct;
        d["convention_pct"] = r.convention_pct;
        d["note"] = r.note;
        return d;
      },
      py::arg("outputs"));

  // ---- extraction ----
  m.def(
      "extract_code_blocks",
      [](const std::string& response) {
        py::list blocks;
        for (const auto& b : sega::extraction::extract_code_blocks(response)) {
          py::dict d;
          d["ordinal"] = b.ordinal;
          d["body"] = b.body;
          d["tag"] = b.fence_language_tag ? py::cast(*b.fence_language_tag)
                                          : py::none();
          d["unterminated"] = b.unterminated;
          blocks.append(d);
        }
        return blocks;
      },
      py::arg("response"));
  m.def(
      "scan_markers",
      [](const std::string& text, const std::string& language,
         const std::string& marker_kind) {
        const auto spec = sega::corpus::marker_spec_for(
            sega::corpus::language_from_string(language),
            sega::corpus::marker_kind_from_string(marker_kind));
        const auto scan = sega::extraction::scan_markers(text, spec);
        py::dict d;
        d["count"] = scan.count;
        d["line_numbers"] = scan.line_numbers;
        return d;
      },
      py::arg("text"), py::arg("language"), py::arg("marker_kind"));

  // ---- stats ----
  m.def(
      "welch_t",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        return welch_dict(sega::stats::welch_t({a, "a"}, {b, "b"}));
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "kl_divergence",
      [](const std::vector<double>& p, const std::vector<double>& q,
         const std::string& mode, double epsilon) {
        const auto policy = mode == "smoothed"
                                ? sega::stats::KlZeroPolicy::smoothed
                                : sega::stats::KlZeroPolicy::exact;
        const auto r =
            sega::stats::kl_divergence(sega::stats::make_distribution(p),
                                       sega::stats::make_distribution(q),
                                       policy, epsilon);
        py::dict d;
        d["nats"] = r.nats;
        d["infinite"] = r.infinite;
        d["epsilon_used"] = r.epsilon_used;
        return d;
      },
      py::arg("p"), py::arg("q"), py::arg("mode") = "exact",
      py::arg("epsilon") = 1e-10);
  m.def(
      "attention_contrast",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const auto r = sega::stats::attention_contrast({a, "a"}, {b, "b"});
        py::dict d;
        d["ratio"] = r.ratio;
        d["welch"] = welch_dict(r.welch);
        return d;
      },
      py::arg("python_means"), py::arg("rust_means"));

  // ---- mechanism ----
  py::class_<sega::mechanism::WkvParams>(m, "WkvParams")
      .def_readonly("seq_len", &sega::mechanism::WkvParams::seq_len)
      .def_readonly("n_heads", &sega::mechanism::WkvParams::n_heads)
      .def_readonly("head_dim", &sega::mechanism::WkvParams::head_dim)
      .def_readwrite("r", &sega::mechanism::WkvParams::r)
      .def_readwrite("k", &sega::mechanism::WkvParams::k)
      .def_readwrite("v", &sega::mechanism::WkvParams::v)
      .def_readwrite("w", &sega::mechanism::WkvParams::w);
  m.def("random_wkv", &sega::mechanism::random_wkv, py::arg("seed"),
        py::arg("seq_len"), py::arg("n_heads"), py::arg("head_dim"));
  m.def(
      "wkv_forward",
      [](const sega::mechanism::WkvParams& params,
         const std::vector<std::size_t>& positions, double scale) {
        std::optional<sega::mechanism::InterventionSpec> spec;
        if (!positions.empty() || scale != 1.0) {
          spec = sega::mechanism::InterventionSpec{
              positions, scale, sega::mechanism::InterventionTarget::state_write, {}};
        }
        const auto out = sega::mechanism::wkv_forward(params, spec);
        py::dict d;
        d["seq_len"] = out.seq_len;
        d["n_heads"] = out.n_heads;
        d["head_dim"] = out.head_dim;
        d["o"] = out.o;
        return d;
      },
      py::arg("params"), py::arg("positions") = std::vector<std::size_t>{},
      py::arg("scale") = 1.0);
  m.def(
      "effective_attention",
      [](const sega::mechanism::WkvParams& params) {
        const auto attn = sega::mechanism::effective_attention(params);
        py::dict d;
        d["seq_len"] = attn.seq_len;
        d["n_heads"] = attn.n_heads;
        d["raw"] = attn.raw;
        d["rectified"] = attn.rectified;
        d["normalized"] = attn.normalized;
        return d;
      },
      py::arg("params"));
  m.def(
      "dose_response",
      [](const sega::mechanism::WkvParams& params,
         const std::vector<std::size_t>& positions,
         const std::vector<double>& scales, std::uint64_t probe_seed,
         std::size_t probe_outputs) {
        const auto probe = sega::mechanism::ReadoutProbe::seeded(
            probe_seed, probe_outputs, params.n_heads * params.head_dim);
        py::list curve;
        for (const auto& point :
             sega::mechanism::dose_response(params, positions, scales, probe)) {
          py::dict d;
          d["scale"] = point.scale;
          d["kl_nats"] = point.kl_nats;
          curve.append(d);
        }
        return curve;
      },
      py::arg("params"), py::arg("positions"), py::arg("scales"),
      py::arg("probe_seed") = 17, py::arg("probe_outputs") = 16);

#ifdef VERSION_INFO
  m.attr("__version__") = VERSION_INFO;
#else
  m.attr("__version__") = "dev";
#endif
}
