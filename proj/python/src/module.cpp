// Python bindings. Structured results cross the boundary as JSON-shaped dicts and
// lists; labels, perturbation kinds and prompt variants as their canonical strings.

#include <memory>
#include <string>
#include <vector>

#include "dualq/bootstrap.hpp"
#include "dualq/classify.hpp"
#include "dualq/corpus.hpp"
#include "dualq/errors.hpp"
#include "dualq/eval.hpp"
#include "dualq/llm.hpp"
#include "dualq/robustness.hpp"
#include "dualq/synthetic.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace dualq;
using nlohmann::json;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::handle& o) {
    return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

std::vector<Label> labels_from(const std::vector<std::string>& names) {
    std::vector<Label> out;
    out.reserve(names.size());
    for (const auto& n : names) out.push_back(label_from_string(n));
    return out;
}

// Lets Python classes act as embedding backends (e.g. a sentence-transformers model).
// embed() must return a (len(texts), dim()) float array.
class PyEmbeddingBackend : public EmbeddingBackend {
public:
    EmbeddingMatrix embed(std::span<const std::string> texts) const override {
        py::gil_scoped_acquire gil;
        py::function fn = py::get_override(static_cast<const EmbeddingBackend*>(this), "embed");
        if (!fn) throw ArgumentError("EmbeddingBackend subclasses must implement embed()");
        auto m = fn(std::vector<std::string>(texts.begin(), texts.end())).cast<EmbeddingMatrix>();
        if (static_cast<std::size_t>(m.rows()) != texts.size() || static_cast<std::size_t>(m.cols()) != dim()) {
            throw BackendError("embed() returned a " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                               " array, expected " + std::to_string(texts.size()) + "x" + std::to_string(dim()));
        }
        return m;
    }

    std::size_t dim() const override { PYBIND11_OVERRIDE_PURE(std::size_t, EmbeddingBackend, dim, ); }

    json descriptor() const override {
        py::gil_scoped_acquire gil;
        if (py::function fn = py::get_override(static_cast<const EmbeddingBackend*>(this), "descriptor")) {
            return from_py(fn());
        }
        return {{"kind", "python"}, {"dim", dim()}};
    }
};

PerturbationKind kind_from(const std::string& s) { return perturbation_from_string(s); }

} // namespace

PYBIND11_MODULE(_dualq, m) {
    m.doc() = "Dual-quality review detection: corpus, metrics, robustness, prompts, few-shot probes";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ArgumentError>(m, "ArgumentError", base.ptr());
    py::register_exception<StateError>(m, "StateError", base.ptr());
    py::register_exception<IntegrityError>(m, "IntegrityError", base.ptr());
    auto parse = py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<LabelParseError>(m, "LabelParseError", parse.ptr());
    py::register_exception<NumericalError>(m, "NumericalError", base.ptr());
    py::register_exception<BackendError>(m, "BackendError", base.ptr());
    py::register_exception<TransportError>(m, "TransportError", base.ptr());

    m.def("labels", [] {
        std::vector<std::string> out;
        for (auto l : kAllLabels) out.emplace_back(to_string(l));
        return out;
    });
    m.def("perturbation_kinds", [] {
        std::vector<std::string> out;
        for (auto k : kAllPerturbations) out.emplace_back(to_string(k));
        return out;
    });

    // corpus
    m.def(
        "parse_reviews",
        [](const std::string& jsonl) {
            json out = json::array();
            for (const auto& r : parse_dataset(jsonl).reviews) out.push_back(to_json(r));
            return to_py(out);
        },
        py::arg("jsonl"), "Validated reviews of JSONL text as a list of dicts.");
    m.def(
        "load_reviews",
        [](const std::string& path) {
            json out = json::array();
            for (const auto& r : load_dataset(path).reviews) out.push_back(to_json(r));
            return to_py(out);
        },
        py::arg("path"), "Reviews of a JSONL dataset as a list of dicts.");
    m.def(
        "dataset_stats", [](const std::string& path) { return to_py(to_json(compute_stats(load_dataset(path)))); },
        py::arg("path"));
    m.def(
        "generate_fixture", [](uint64_t seed) {
            synthetic::FixtureSpec spec;
            spec.seed = seed;
            return serialize_dataset(synthetic::generate_fixture(spec));
        },
        py::arg("seed") = synthetic::FixtureSpec{}.seed, "The synthetic stand-in corpus as JSONL text.");

    // metrics
    m.def(
        "evaluate",
        [](const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
            return to_py(to_json(evaluate(labels_from(gold), labels_from(pred))));
        },
        py::arg("gold"), py::arg("pred"));

    // robustness
    m.def(
        "perturb",
        [](const std::string& text, const std::string& kind, bool strict_period) {
            return perturb(text, kind_from(kind), PerturbOptions{strict_period});
        },
        py::arg("text"), py::arg("kind"), py::arg("strict_period") = false);
    m.def(
        "disagreement",
        [](const std::function<std::string(const std::string&, uint64_t)>& predict, const std::vector<std::string>& texts,
           const std::string& kind, std::size_t runs, const std::vector<uint64_t>& seeds, bool strict_period) {
            const PredictFn fn = [&](const std::string& t, uint64_t seed) { return label_from_string(predict(t, seed)); };
            return to_py(to_json(disagreement(fn, texts, kind_from(kind), runs, seeds, PerturbOptions{strict_period})));
        },
        py::arg("predict"), py::arg("texts"), py::arg("kind"), py::arg("runs") = 5,
        py::arg("seeds") = std::vector<uint64_t>{}, py::arg("strict_period") = false,
        "Percentage of texts whose label changes under the perturbation. predict(text, seed) returns a label name.");

    // prompts
    m.def(
        "builtin_prompt",
        [](const std::string& variant, const std::string& language) {
            return std::string(builtin_prompt_body(prompt_variant_from_string(variant), prompt_language_from_string(language)));
        },
        py::arg("variant"), py::arg("language") = "pl");
    m.def(
        "build_prompt",
        [](const std::string& variant, const std::string& language, const std::string& review) {
            return build_prompt(builtin_template(prompt_variant_from_string(variant), prompt_language_from_string(language)),
                                review);
        },
        py::arg("variant"), py::arg("language"), py::arg("review"));
    m.def("parse_label", [](const std::string& raw) { return std::string(to_string(parse_label(raw))); },
          py::arg("raw"));

    // embeddings and classifiers
    py::class_<EmbeddingBackend, PyEmbeddingBackend, std::shared_ptr<EmbeddingBackend>>(m, "EmbeddingBackend")
        .def(py::init<>())
        .def("embed", [](const EmbeddingBackend& b, const std::vector<std::string>& texts) { return b.embed(texts); })
        .def("dim", &EmbeddingBackend::dim)
        .def("descriptor", [](const EmbeddingBackend& b) { return to_py(b.descriptor()); });

    py::class_<HashingEmbedding, EmbeddingBackend, std::shared_ptr<HashingEmbedding>>(m, "HashingEmbedding")
        .def(py::init<std::size_t, uint64_t, bool>(), py::arg("dim") = 512, py::arg("seed") = 0,
             py::arg("bigrams") = true);

    py::class_<Classifier, std::shared_ptr<Classifier>>(m, "Classifier")
        .def("predict",
             [](const Classifier& c, const std::vector<std::string>& texts) {
                 json out = json::array();
                 for (const auto& p : c.predict(texts)) out.push_back(to_json(p));
                 return to_py(out);
             })
        .def_property_readonly("model_id", &Classifier::model_id)
        .def("snapshot", [](const Classifier& c) { return to_py(c.snapshot()); });

    m.def(
        "train_probe",
        [](const std::vector<std::string>& texts, const std::vector<std::string>& labels,
           std::shared_ptr<EmbeddingBackend> backend, std::size_t contrastive_iterations, double learning_rate,
           std::size_t epochs, std::size_t batch_size, double l2, uint64_t seed,
           const std::string& model_id) -> std::shared_ptr<Classifier> {
            if (texts.size() != labels.size()) throw ArgumentError("texts and labels differ in length");
            std::vector<Review> train;
            for (std::size_t i = 0; i < texts.size(); ++i) {
                Review r;
                r.id = "py-" + std::to_string(i);
                r.text = texts[i];
                r.label = label_from_string(labels[i]);
                train.push_back(std::move(r));
            }
            FewShotConfig cfg;
            cfg.contrastive_iterations = contrastive_iterations;
            cfg.finetune.seed = seed;
            cfg.head.learning_rate = learning_rate;
            cfg.head.epochs = epochs;
            cfg.head.batch_size = batch_size;
            cfg.head.l2 = l2;
            cfg.head.seed = seed;
            return train_few_shot(train, std::move(backend), cfg, model_id);
        },
        py::arg("texts"), py::arg("labels"), py::arg("backend"), py::arg("contrastive_iterations") = 1,
        py::arg("learning_rate") = 0.5, py::arg("epochs") = 30, py::arg("batch_size") = 8, py::arg("l2") = 1e-4,
        py::arg("seed") = 0, py::arg("model_id") = "probe",
        // the classifier holds the backend; keep a Python subclass instance alive with it
        py::keep_alive<0, 3>());
    m.def(
        "load_classifier", [](const py::object& snapshot) -> std::shared_ptr<Classifier> {
            return load_classifier(from_py(snapshot));
        },
        py::arg("snapshot"));

    // bootstrap
    m.def(
        "simulate",
        [](std::size_t pool_size, double positive_rate, std::size_t k, std::size_t iterations,
           std::size_t min_new_positives, uint64_t seed) {
            SimulationConfig c;
            c.pool.size = pool_size;
            c.pool.positive_rate = positive_rate;
            c.pool.seed += seed;
            c.seed_set.seed += seed;
            c.bootstrap.k = k;
            c.bootstrap.max_iterations = iterations;
            c.bootstrap.min_new_positives = min_new_positives;
            c.bootstrap.seed = seed;
            SimulationReport report;
            {
                py::gil_scoped_release release;
                report = simulate(c);
            }
            return to_py(to_json(report));
        },
        py::arg("pool_size") = 5000, py::arg("positive_rate") = 0.03, py::arg("k") = 200, py::arg("iterations") = 7,
        py::arg("min_new_positives") = 0, py::arg("seed") = 0,
        "Bootstrap loop on a synthetic pool with planted positives and a perfect annotator.");
}
