#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <memory>

#include "bagtag/active.h"
#include "bagtag/config.h"
#include "bagtag/corpus.h"
#include "bagtag/errors.h"
#include "bagtag/experiment.h"
#include "bagtag/features.h"
#include "bagtag/model_io.h"
#include "bagtag/pipeline.h"
#include "bagtag/service.h"
#include "bagtag/session.h"

namespace py = pybind11;
using namespace bagtag;

namespace {

const LabelSet& base_for(const RunConfig& config, const Corpus* like, LabelSet& storage) {
  if (like) return like->labels;
  storage = config.data.base_labels();
  return storage;
}

py::dict prf_dict(const Prf& p) {
  py::dict d;
  d["gold"] = p.gold;
  d["predicted"] = p.predicted;
  d["correct"] = p.correct;
  d["precision"] = p.precision();
  d["recall"] = p.recall();
  d["f1"] = p.f1();
  return d;
}

std::vector<std::vector<std::string>> label_names(const LabelSet& labels,
                                                  const std::vector<std::vector<LabelId>>& seqs) {
  std::vector<std::vector<std::string>> out;
  out.reserve(seqs.size());
  for (const auto& seq : seqs) {
    auto& names = out.emplace_back();
    for (auto l : seq) names.push_back(labels.name(l));
  }
  return out;
}

// `test` must have been read on top of `pool`; the pool then adopts its labels.
void adopt_labels(Corpus& pool, const Corpus& test) {
  const auto& a = pool.labels.names();
  const auto& b = test.labels.names();
  if (b.size() < a.size() || !std::equal(a.begin(), a.end(), b.begin())) {
    throw ConfigError("test corpus must be read with like=pool");
  }
  pool.labels = test.labels;
}

struct PySession {
  std::unique_ptr<AnnotationSession> session;
  std::unique_ptr<AnnotationService> service;
};

const char* status_name(SubmitStatus s) {
  switch (s) {
    case SubmitStatus::kAccepted: return "accepted";
    case SubmitStatus::kDuplicate: return "duplicate";
    case SubmitStatus::kConflict: return "conflict";
    case SubmitStatus::kInvalid: return "invalid";
  }
  return "invalid";
}

}  // namespace

PYBIND11_MODULE(_bagtag, m) {
  m.doc() = "Bagged featurized-HMM sequence labeling with active learning";
  py::register_exception<Error>(m, "BagtagError", PyExc_RuntimeError);

  py::class_<RunConfig>(m, "Config")
      .def(py::init([](std::optional<std::string> path, std::vector<std::string> overrides) {
             RunConfig c = path ? load_config(*path) : RunConfig{};
             apply_overrides(c, overrides);
             return c;
           }),
           py::arg("path") = py::none(), py::arg("overrides") = std::vector<std::string>{})
      .def_static("parse", [](const std::string& text) { return parse_config(text); })
      .def("set", [](RunConfig& c, const std::string& key, const std::string& value) {
        c.set(key, value);
        c.validate();
      })
      .def("validate", &RunConfig::validate);

  py::class_<Corpus>(m, "Corpus")
      .def_static(
          "read",
          [](const std::string& path, const RunConfig& config, const Corpus* like) {
            LabelSet storage;
            return read_conll_file(path, config.data.column_map(), base_for(config, like, storage));
          },
          py::arg("path"), py::arg("config"), py::arg("like") = nullptr)
      .def_static(
          "parse",
          [](const std::string& text, const RunConfig& config, const Corpus* like) {
            LabelSet storage;
            return parse_conll(text, config.data.column_map(), base_for(config, like, storage));
          },
          py::arg("text"), py::arg("config"), py::arg("like") = nullptr)
      .def("__len__", &Corpus::size)
      .def_property_readonly("labels", [](const Corpus& c) { return c.labels.names(); })
      .def_property_readonly("ids", [](const Corpus& c) {
        std::vector<std::string> ids;
        for (const auto& s : c.sentences) ids.push_back(s.id);
        return ids;
      })
      .def_property_readonly("num_tokens", &Corpus::num_tokens);

  py::class_<Tagger>(m, "Tagger")
      .def_static(
          "train",
          [](const Corpus& corpus, const RunConfig& config) {
            py::gil_scoped_release release;
            validate_features(config.features, corpus);
            const auto spec = ModelSpec::from(config);
            if (config.pipeline.enabled) return train_pipeline(corpus, spec, config.pipeline.drop);
            Tagger t;
            t.stage2 = train_ensemble(corpus, spec).ensemble;
            return t;
          },
          py::arg("corpus"), py::arg("config"))
      .def_static("load", &load_tagger)
      .def("save", [](const Tagger& t, const std::string& path) { save_tagger(t, path); })
      .def_property_readonly("labels", [](const Tagger& t) { return t.labels().names(); })
      .def_property_readonly("members", [](const Tagger& t) { return t.stage2.size(); })
      .def_property_readonly("pipeline", [](const Tagger& t) { return t.stage1.has_value(); })
      .def("tag", [](const Tagger& t, const Corpus& corpus) {
        return label_names(t.labels(), t.tag(corpus));
      })
      .def("evaluate", [](const Tagger& t, const Corpus& gold) {
        const auto report = evaluate(gold, t.tag(gold));
        py::dict per_type;
        for (const auto& [name, prf] : report.per_type) per_type[py::str(name)] = prf_dict(prf);
        py::dict d;
        d["micro"] = prf_dict(report.micro);
        d["per_type"] = per_type;
        return d;
      });

  m.def(
      "al_simulate",
      [](const Corpus& pool, std::optional<Corpus> test, const RunConfig& config) {
        Corpus p = pool;
        Corpus t;
        if (test) {
          adopt_labels(p, *test);
          t = std::move(*test);
        } else {
          auto [train, held] = split(p, config.data.test_fraction, config.data.split_seed);
          p = std::move(train);
          t = std::move(held);
        }
        validate_features(config.features, p);
        const ALConfig base = config.al_config(0);
        const auto configs = config.active.grid ? grid_configs(base) : std::vector<ALConfig>{base};
        std::vector<GridRun> runs;
        {
          py::gil_scoped_release release;
          runs = run_grid(p, t, configs, config.active.seeds);
        }
        py::list out;
        for (const auto& run : runs) {
          py::dict d;
          d["seed"] = run.config.seed;
          d["flags"] = run.config.flags();
          d["csv"] = run.curve.to_csv(config.active.timing);
          out.append(d);
        }
        return out;
      },
      py::arg("pool"), py::arg("test") = py::none(), py::arg("config"),
      "Runs the configured active-learning simulation; one curve per (seed, flags).");

  py::class_<PySession>(m, "Session")
      .def(py::init([](const Corpus& pool, std::optional<Corpus> test, const RunConfig& config,
                       const std::string& state, const std::string& audit) {
             Corpus p = pool;
             Corpus t;
             if (test) {
               adopt_labels(p, *test);
               t = std::move(*test);
             }
             validate_features(config.features, p);
             auto s = std::make_unique<PySession>();
             {
               py::gil_scoped_release release;
               s->session = std::make_unique<AnnotationSession>(
                   std::move(p), config.al_config(config.active.seeds.front()), std::move(t),
                   state, audit);
             }
             s->service = std::make_unique<AnnotationService>(*s->session);
             return s;
           }),
           py::arg("pool"), py::arg("test") = py::none(), py::arg("config"),
           py::arg("state") = "", py::arg("audit") = "")
      .def("status", [](const PySession& s) {
        const auto st = s.session->status();
        py::dict d;
        d["round"] = st.round;
        d["labeled"] = st.labeled;
        d["unlabeled"] = st.unlabeled;
        d["pending"] = st.pending;
        d["done"] = st.done;
        d["last_f1"] = st.last_f1 ? py::cast(*st.last_f1) : py::none();
        return d;
      })
      .def("next", [](const PySession& s) -> py::object {
        const auto q = s.session->next();
        if (!q) return py::none();
        py::list tokens;
        for (const auto& t : q->tokens) {
          py::dict d;
          d["surface"] = t.surface;
          d["suggestion"] = t.suggestion;
          d["marginals"] = t.marginals;
          tokens.append(d);
        }
        py::dict d;
        d["sentence_id"] = q->sentence_id;
        d["tokens"] = tokens;
        d["utility"] = q->utility;
        return d;
      })
      .def_property_readonly("labels", [](const PySession& s) { return s.session->label_names(); })
      .def("submit",
           [](PySession& s, const std::string& id, const std::vector<std::string>& labels) {
             SubmitResult r;
             {
               py::gil_scoped_release release;
               r = s.session->submit(id, labels);
             }
             py::dict d;
             d["outcome"] = status_name(r.status);
             d["message"] = r.message;
             d["round"] = r.round;
             return d;
           })
      .def("retrain",
           [](PySession& s) {
             py::gil_scoped_release release;
             return s.session->retrain();
           })
      .def("state_json", [](const PySession& s) { return s.session->state_json(); })
      .def(
          "handle",
          [](const PySession& s, const std::string& method, const std::string& path,
             const std::string& body) {
            HttpResponse r;
            {
              py::gil_scoped_release release;
              r = s.service->handle(method, path, body);
            }
            return py::make_tuple(r.status, r.body);
          },
          py::arg("method"), py::arg("path"), py::arg("body") = "",
          "Routes one protocol request without a socket; returns (status, json_body).");
}
