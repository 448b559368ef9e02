/*
 * Copyright 2026 The AutoFT Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Python bindings for the core library.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "autoft/autoft_policy.hpp"
#include "autoft/checkpoint.hpp"
#include "autoft/cli.hpp"
#include "autoft/error.hpp"
#include "autoft/evaluation.hpp"
#include "autoft/feature_pipeline.hpp"
#include "autoft/numerics.hpp"
#include "autoft/synth.hpp"

namespace py = pybind11;
using namespace autoft;

namespace {

// Share of Gumbel-max draws that pick the pre-trained branch.
double GumbelMaxFrequency(double logit_pre, double logit_fine, std::size_t draws,
                          std::uint64_t seed) {
  PolicyNetwork net;
  net.w1 = DenseMatrix(1, 1);
  net.b1 = {0.0};
  net.w2 = DenseMatrix(2, 1);
  net.b2 = {logit_pre, logit_fine};
  net.decision_count = 1;
  SeededRng rng(seed);
  const Vector input = {0.0};
  std::size_t pre = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    pre += PolicyForward(net, input, 1.0, rng, RouteMode::kTrain).hard[0];
  }
  return draws == 0 ? 0.0 : static_cast<double>(pre) / draws;
}

py::dict ArchDict(const ArchConfig& arch) {
  py::dict d;
  d["backbone"] = BackboneName(arch.backbone);
  d["embedding_dim"] = arch.embedding_dim;
  d["cross_layers"] = arch.cross_layers;
  d["deep_layers"] = arch.deep_layers;
  d["field_sizes"] = arch.field_sizes;
  return d;
}

EncodedInstance ToInstance(const std::vector<std::vector<std::uint32_t>>& fields) {
  EncodedInstance inst;
  inst.fields = fields;
  return inst;
}

py::dict Fractions(const std::vector<UnitFraction>& units) {
  py::dict d;
  d["pretrained"] = py::list();
  d["finetuned"] = py::list();
  for (const auto& u : units) {
    d["pretrained"].cast<py::list>().append(u.pretrained);
    d["finetuned"].cast<py::list>().append(u.finetuned);
  }
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Routed fine-tuning for cross-domain CTR models";

  static py::exception<Error> error(m, "AutoftError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), (std::string(ErrorKindName(e.kind())) + ": " + e.what()).c_str());
    }
  });

  m.def("auc", [](const std::vector<int>& labels, const std::vector<double>& scores) {
    return Auc(labels, scores);
  }, py::arg("labels"), py::arg("scores"), "ROC AUC with tied scores counted as half.");
  m.def("logloss", [](const std::vector<int>& labels, const std::vector<double>& scores) {
    return LogLoss(labels, scores);
  }, py::arg("labels"), py::arg("scores"));
  m.def("sigmoid", &Sigmoid, py::arg("x"));
  m.def("softmax", [](const std::vector<double>& logits, double tau) {
    return Softmax(logits, tau);
  }, py::arg("logits"), py::arg("tau") = 1.0);
  m.def("relaxed_pretrained_weight", &RelaxedPretrainedWeight, py::arg("logit_pre"),
        py::arg("logit_fine"), py::arg("gumbel_pre"), py::arg("gumbel_fine"), py::arg("tau"));
  m.def("gumbel_max_frequency", &GumbelMaxFrequency, py::arg("logit_pre"),
        py::arg("logit_fine"), py::arg("draws") = 100000, py::arg("seed") = 0);

  m.def("generate_synth", [](const std::string& out_dir, std::uint64_t seed, double delta,
                             double item_overlap, double user_overlap, std::size_t source_count,
                             std::size_t target_count) {
    SynthSpec spec;
    spec.seed = seed;
    spec.delta = delta;
    spec.item_overlap = item_overlap;
    spec.user_overlap = user_overlap;
    spec.source_count = source_count;
    spec.target_count = target_count;
    const SynthBenchmark bench = GenerateSynth(spec);
    WriteSynth(bench, out_dir);
    return bench.manifest_json;
  }, py::arg("out_dir"), py::arg("seed") = 42, py::arg("delta") = 0.5,
     py::arg("item_overlap") = 0.6, py::arg("user_overlap") = 0.0,
     py::arg("source_count") = 50000, py::arg("target_count") = 5000,
     "Writes the synthetic benchmark and returns its manifest JSON.");

  m.def("main", [](const std::vector<std::string>& args) {
    py::gil_scoped_release release;
    return cli::Main(args);
  }, py::arg("args"), "Runs the command-line tool in-process; returns its exit code.");

  py::class_<DcnCheckpoint>(m, "DcnCheckpoint")
      .def_static("load", &LoadDcnCheckpoint, py::arg("path"))
      .def_property_readonly("arch", [](const DcnCheckpoint& c) { return ArchDict(c.params.arch); })
      .def_property_readonly("vocab_hash", [](const DcnCheckpoint& c) { return c.vocab_hash; })
      .def_property_readonly("bank_hash", [](const DcnCheckpoint& c) { return BankHash(c.params); })
      .def("predict", [](const DcnCheckpoint& c,
                         const std::vector<std::vector<std::uint32_t>>& fields) {
        return Forward(ToInstance(fields), c.params);
      }, py::arg("fields"), "Click probability for per-field index lists.");

  py::class_<AutoftModel>(m, "AutoftCheckpoint")
      .def_static("load", [](const std::string& path) {
        std::uint64_t vocab_hash = 0;
        return DeserializeAutoftCheckpoint(ReadFileBytes(path), &vocab_hash, path);
      }, py::arg("path"))
      .def_property_readonly("arch", [](const AutoftModel& a) { return ArchDict(a.target.arch); })
      .def_property_readonly("source_bank_hash", [](const AutoftModel& a) {
        return BankHash(a.source);
      })
      .def_property_readonly("target_bank_hash", [](const AutoftModel& a) {
        return BankHash(a.target);
      })
      .def("predict", [](const AutoftModel& a,
                         const std::vector<std::vector<std::uint32_t>>& fields) {
        AutoftTape tape;
        const double yhat = AutoftForward(ToInstance(fields), a, AutoftOptions{}, GumbelNoise{}, tape);
        py::dict route;
        route["embed"] = tape.route.embed.hard;
        route["cross"] = tape.route.cross.hard;
        route["deep"] = tape.route.deep.hard;
        return py::make_tuple(yhat, route);
      }, py::arg("fields"), "Inference-mode prediction and its routes (1 = pre-trained).");

  m.def("routing_fractions", [](const std::string& routes_csv) {
    const RoutingReport r = RoutingFractions(ReadRouteDump(routes_csv));
    py::dict d;
    d["instances"] = r.instances;
    d["embed"] = Fractions(r.embed);
    d["cross"] = Fractions(r.cross);
    d["deep"] = Fractions(r.deep);
    d["cross_finetune_by_depth"] = r.CrossFinetuneByDepth();
    d["deep_finetune_by_depth"] = r.DeepFinetuneByDepth();
    return d;
  }, py::arg("routes_csv"));

  m.def("results_table", [](const std::vector<std::string>& run_dirs) {
    const MetricReport report = ResultsTableFromDirs(run_dirs);
    py::list rows;
    for (const auto& row : report.rows) {
      py::dict d;
      d["method"] = row.method;
      d["auc_mean"] = row.auc_mean;
      d["auc_std"] = row.auc_std;
      d["logloss_mean"] = row.logloss_mean;
      d["logloss_std"] = row.logloss_std;
      d["seeds"] = row.seeds;
      d["best_auc"] = row.best_auc;
      rows.append(d);
    }
    return rows;
  }, py::arg("run_dirs"));
}
