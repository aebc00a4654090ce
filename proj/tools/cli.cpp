#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "dualq/baseline.hpp"
#include "dualq/bootstrap.hpp"
#include "dualq/classify.hpp"
#include "dualq/corpus.hpp"
#include "dualq/errors.hpp"
#include "dualq/eval.hpp"
#include "dualq/llm.hpp"
#include "dualq/robustness.hpp"
#include "dualq/service.hpp"
#include "dualq/synthetic.hpp"
#include "manifest.hpp"

#include <CLI11.hpp>

namespace dualq::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr const char* kCanonicalTimestamp = "1970-01-01T00:00:00Z";
constexpr const char* kRunConfigFile = "bootstrap.ini";

/// Bad flags or configuration discovered after parsing (exit 2).
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "io_error"; }
};

/// Library validation failures of user-supplied settings are usage errors, not runtime ones.
template <typename F>
decltype(auto) as_usage(F&& f) {
    try {
        return f();
    } catch (const ArgumentError& e) {
        throw UsageError(e.what());
    } catch (const ParseError& e) {
        throw UsageError(e.what());
    }
}

std::string error_line(std::string_view kind, std::string_view message) {
    return json{{"error", {{"kind", kind}, {"message", message}}}}.dump();
}

// ---- per-invocation context --------------------------------------------------------

struct Globals {
    std::string manifest;
    bool canonical = false;
    bool quiet = false;
};

class Run {
public:
    Run(std::ostream& out, std::ostream& err, const Globals& g) : out_(out), err_(err), quiet_(g.quiet) {
        if (!g.manifest.empty()) manifest_path_ = g.manifest;
    }

    RunManifest manifest;

    void write(const fs::path& p, std::string_view content) {
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        std::ofstream f(p, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot write " + p.string());
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!f) throw IoError("write failed: " + p.string());
        record(p);
    }
    void write_json(const fs::path& p, const json& j) { write(p, j.dump(2) + "\n"); }

    /// To the file when a path is given, otherwise to stdout.
    void emit(const std::string& path, const json& j) {
        if (path.empty()) {
            out_ << j.dump(2) << '\n';
        } else {
            write_json(path, j);
        }
    }

    void note(const std::string& line) {
        if (!quiet_) err_ << line << '\n';
    }

    void record(const fs::path& p) {
        if (std::find(files_.begin(), files_.end(), p) == files_.end()) files_.push_back(p);
    }
    /// Every file under dir (except manifests/) is checksummed when the run ends.
    void record_dir(const fs::path& dir) { dirs_.push_back(dir); }

    void default_manifest(const fs::path& p) {
        if (!manifest_path_) manifest_path_ = p;
    }
    /// Next free manifests/NNN-<name>.json inside a directory that accumulates runs.
    void manifest_in(const fs::path& dir, const std::string& name) {
        if (manifest_path_) return;
        std::size_t n = 1;
        if (fs::is_directory(dir / "manifests")) {
            for (const auto& e : fs::directory_iterator(dir / "manifests")) n += e.is_regular_file();
        }
        std::ostringstream os;
        os << std::setw(3) << std::setfill('0') << n << '-' << name << ".json";
        manifest_path_ = dir / "manifests" / os.str();
    }

    void use_seeds(std::vector<uint64_t> seeds) { manifest.seeds = std::move(seeds); }

    /// Writes the manifest; returns its path.
    fs::path finish() {
        const fs::path path = manifest_path_.value_or(fs::path("dualq-" + slug(manifest.command) + ".manifest.json"));
        std::vector<fs::path> all;
        for (const auto& f : files_) {
            if (fs::is_regular_file(f)) all.push_back(f);
        }
        for (const auto& d : dirs_) {
            if (!fs::is_directory(d)) continue;
            std::vector<fs::path> found;
            for (const auto& e : fs::recursive_directory_iterator(d)) {
                if (!e.is_regular_file()) continue;
                const auto rel = fs::relative(e.path(), d);
                if (!rel.empty() && *rel.begin() == "manifests") continue;
                found.push_back(e.path());
            }
            std::sort(found.begin(), found.end());
            for (auto& f : found) {
                if (std::find(all.begin(), all.end(), f) == all.end()) all.push_back(std::move(f));
            }
        }
        manifest.outputs.clear();
        for (const auto& f : all) {
            if (fs::weakly_canonical(f) == fs::weakly_canonical(path)) continue;
            manifest.outputs.push_back(checksum(f));
        }
        manifest.finished_at = utc_timestamp();
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        f << to_json(manifest).dump(2) << '\n';
        if (!f) throw IoError("cannot write manifest " + path.string());
        return path;
    }

    std::ostream& out() { return out_; }

private:
    static std::string slug(std::string s) {
        std::replace(s.begin(), s.end(), ' ', '-');
        return s;
    }

    std::ostream& out_;
    std::ostream& err_;
    bool quiet_;
    std::optional<fs::path> manifest_path_;
    std::vector<fs::path> files_;
    std::vector<fs::path> dirs_;
};

/// Restores the wall clock when an invocation ends (the tool may run in-process).
struct ClockGuard {
    explicit ClockGuard(bool canonical) {
        if (canonical) set_fixed_timestamp(std::string(kCanonicalTimestamp));
    }
    ~ClockGuard() { set_fixed_timestamp(std::nullopt); }
};

// ---- shared option groups ------------------------------------------------------------

struct SeedFlag {
    std::vector<uint64_t> values{0};
    CLI::Option* opt = nullptr;

    void add(CLI::App* app) {
        opt = app->add_option("--seed", values, "Seed; a comma-separated list where several runs are made")
                  ->delimiter(',')
                  ->capture_default_str();
    }
    bool given() const { return opt && opt->count() > 0; }

    uint64_t single(Run& run) const {
        if (values.size() != 1) throw UsageError("--seed takes a single value for this command");
        run.use_seeds(values);
        return values.front();
    }

    /// One seed per run: an explicit list sets the run count; a single seed s expands to s..s+runs-1.
    std::vector<uint64_t> per_run(std::size_t& runs, const CLI::Option* runs_opt, Run& run) const {
        std::vector<uint64_t> out;
        if (values.size() > 1) {
            if (runs_opt && runs_opt->count() > 0 && runs != values.size()) {
                throw UsageError("--runs " + std::to_string(runs) + " disagrees with " +
                                 std::to_string(values.size()) + " seeds");
            }
            runs = values.size();
            out = values;
        } else {
            if (runs == 0) throw UsageError("--runs must be at least 1");
            for (std::size_t i = 0; i < runs; ++i) out.push_back(values.front() + i);
        }
        run.use_seeds(out);
        return out;
    }
};

struct BackendFlags {
    std::string kind = "hashing";
    std::size_t dim = 512;
    uint64_t seed = 0;
    bool bigrams = true;
    std::string url;
    std::string model;
    std::string key_env = "EMBEDDINGS_API_KEY";

    void add(CLI::App* app) {
        app->add_option("--backend", kind, "Embedding backend")
            ->check(CLI::IsMember({"hashing", "remote"}))
            ->capture_default_str();
        app->add_option("--dim", dim, "Embedding dimension")->capture_default_str();
        app->add_option("--backend-seed", seed, "Hashing-projection seed")->capture_default_str();
        app->add_option("--bigrams", bigrams, "Hash word bigrams as well as unigrams")->capture_default_str();
        app->add_option("--embeddings-url", url, "Base URL of an OpenAI-compatible embeddings API");
        app->add_option("--embeddings-model", model, "Remote embedding model name");
        app->add_option("--embeddings-key-env", key_env, "Environment variable with the embeddings API key")
            ->capture_default_str();
    }

    json descriptor() const {
        if (kind == "hashing") return {{"kind", "hashing"}, {"dim", dim}, {"seed", seed}, {"bigrams", bigrams}};
        if (url.empty()) throw UsageError("--backend remote needs --embeddings-url");
        return {{"kind", "remote"}, {"base_url", url}, {"model", model}, {"dim", dim}, {"api_key_env", key_env}};
    }

    void write_ini(std::ostream& os) const {
        os << "backend = " << kind << '\n' << "dim = " << dim << '\n';
        if (kind == "hashing") {
            os << "backend-seed = " << seed << '\n' << "bigrams = " << (bigrams ? "true" : "false") << '\n';
        } else {
            os << "embeddings-url = " << url << '\n'
               << "embeddings-model = " << model << '\n'
               << "embeddings-key-env = " << key_env << '\n';
        }
    }
};

struct HeadFlags {
    FewShotConfig defaults = BootstrapConfig::loop_few_shot_defaults();
    std::size_t contrastive = defaults.contrastive_iterations;
    double lr = defaults.head.learning_rate;
    std::size_t epochs = defaults.head.epochs;
    std::size_t batch = defaults.head.batch_size;
    double l2 = defaults.head.l2;

    void add(CLI::App* app) {
        app->add_option("--contrastive-iterations", contrastive, "Pair-generation rounds; 0 skips fine-tuning")
            ->capture_default_str();
        app->add_option("--head-lr", lr, "Logistic-head learning rate")->capture_default_str();
        app->add_option("--head-epochs", epochs, "Logistic-head epochs")->capture_default_str();
        app->add_option("--head-batch-size", batch, "Logistic-head mini-batch size")->capture_default_str();
        app->add_option("--head-l2", l2, "L2 penalty on the head weights")->capture_default_str();
    }

    FewShotConfig few_shot(uint64_t seed) const {
        FewShotConfig c = defaults;
        c.contrastive_iterations = contrastive;
        c.head.learning_rate = lr;
        c.head.epochs = epochs;
        c.head.batch_size = batch;
        c.head.l2 = l2;
        c.head.seed = seed;
        c.finetune.seed = seed;
        if (!(lr > 0.0) || epochs == 0 || batch == 0 || l2 < 0.0) {
            throw UsageError("head settings need lr > 0, epochs >= 1, batch size >= 1 and l2 >= 0");
        }
        return c;
    }

    void write_ini(std::ostream& os) const {
        os << "contrastive-iterations = " << contrastive << '\n'
           << "head-lr = " << json(lr).dump() << '\n'
           << "head-epochs = " << epochs << '\n'
           << "head-batch-size = " << batch << '\n'
           << "head-l2 = " << json(l2).dump() << '\n';
    }
};

/// Loop settings shared by `bootstrap init`, `bootstrap iterate` and `serve`.
struct LoopFlags {
    std::size_t k = 200;
    std::string mode = "binary";
    std::size_t max_iterations = 7;
    std::size_t min_new_positives = 5;
    SeedFlag seed;
    BackendFlags backend;
    HeadFlags head;

    void add(CLI::App* app) {
        app->add_option("--k", k, "Annotation batch size per iteration")->capture_default_str();
        app->add_option("--mode", mode, "Training mode")
            ->check(CLI::IsMember({"binary", "ternary"}))
            ->capture_default_str();
        app->add_option("--max-iterations", max_iterations, "Iteration budget")->capture_default_str();
        app->add_option("--min-new-positives", min_new_positives,
                        "Stop when an iteration yields fewer new dual-quality labels")
            ->capture_default_str();
        seed.add(app);
        backend.add(app);
        head.add(app);
    }

    BootstrapConfig config(Run& run) const {
        BootstrapConfig c;
        c.k = k;
        c.mode = training_mode_from_string(mode);
        c.max_iterations = max_iterations;
        c.min_new_positives = min_new_positives;
        c.seed = seed.single(run);
        c.backend = backend.descriptor();
        c.few_shot = head.few_shot(c.seed);
        as_usage([&] { c.validate(); });
        return c;
    }

    std::string ini(Run& run) const {
        std::ostringstream os;
        os << "# Bootstrap run configuration. Flags given to `dualq bootstrap iterate` override these values.\n"
           << "k = " << k << '\n'
           << "mode = " << mode << '\n'
           << "max-iterations = " << max_iterations << '\n'
           << "min-new-positives = " << min_new_positives << '\n'
           << "seed = " << seed.single(run) << '\n';
        backend.write_ini(os);
        head.write_ini(os);
        return os.str();
    }
};

/// Fills options that were not given on the command line from an INI file, using the
/// options' own parsers (so the file's keys are exactly the flag names).
void apply_ini_defaults(CLI::App* app, const fs::path& file) {
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigINI().from_file(file.string());
    } catch (const CLI::Error& e) {
        throw UsageError(file.string() + ": " + e.what());
    }
    for (const auto& item : items) {
        if (item.name == "++" || item.name == "--" || item.name.empty()) continue;
        auto* opt = app->get_option_no_throw("--" + item.name);
        if (!opt) throw UsageError(file.string() + ": unknown key \"" + item.name + "\"");
        if (opt->count() > 0) continue;
        try {
            opt->add_result(item.inputs);
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw UsageError(file.string() + ": " + item.name + ": " + e.what());
        }
    }
}

// ---- data helpers --------------------------------------------------------------------

Dataset select_split(Dataset d, const std::string& split) {
    if (split.empty() || split == "all") return d;
    const auto s = split_from_string(split);
    std::erase_if(d.reviews, [&](const Review& r) { return r.split != s; });
    if (d.empty()) throw ArgumentError("no reviews in split \"" + split + "\"");
    return d;
}

std::vector<std::string> texts_of(const Dataset& d) {
    std::vector<std::string> t;
    t.reserve(d.size());
    for (const auto& r : d.reviews) t.push_back(r.text);
    return t;
}

std::vector<Label> gold_of(const Dataset& d) {
    std::vector<Label> g;
    g.reserve(d.size());
    for (const auto& r : d.reviews) {
        if (!r.label) throw StateError("review " + r.id + " has no gold label");
        g.push_back(*r.label);
    }
    return g;
}

std::string prediction_lines(const Dataset& d, std::span<const Prediction> preds) {
    std::string out;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        json j = to_json(preds[i]);
        j["id"] = d.reviews[i].id;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::unordered_map<std::string, Prediction> read_predictions(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::unordered_map<std::string, Prediction> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(e.what(), n);
        }
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) throw ParseError("record has no id", n);
        auto id = j["id"].get<std::string>();
        Prediction p;
        try {
            p = prediction_from_json(j);
        } catch (const ParseError& e) {
            throw ParseError(e.what(), n);
        }
        if (!out.emplace(id, std::move(p)).second) throw IntegrityError("duplicate prediction for " + id);
    }
    return out;
}

std::vector<AnnotationDecision> read_decisions(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::vector<AnnotationDecision> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(annotation_decision_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw ParseError(e.what(), n);
        } catch (const ParseError& e) {
            throw ParseError(e.what(), n);
        }
    }
    return out;
}

std::string fmt(double x, int digits = 3) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << x;
    return os.str();
}

std::string stats_summary(const DatasetStats& s) {
    std::ostringstream os;
    os << s.total << " reviews:";
    for (auto l : kAllLabels) os << ' ' << to_string(l) << '=' << s.label_totals[index_of(l)];
    if (s.unlabeled) os << " unlabeled=" << s.unlabeled;
    os << "; splits";
    for (auto sp : kAllSplits) os << ' ' << to_string(sp) << '=' << s.split_totals[static_cast<std::size_t>(sp)];
    if (s.split_totals[3]) os << " none=" << s.split_totals[3];
    os << "; mean " << fmt(s.mean_chars, 1) << " chars, " << fmt(s.mean_words, 1) << " words";
    return os.str();
}

std::string manifest_beside(const std::string& out) { return out + ".manifest.json"; }

// ---- commands --------------------------------------------------------------------------

struct StatsOpts {
    std::string in, out;
};

void cmd_dataset_stats(Run& run, const StatsOpts& o) {
    if (!o.out.empty()) run.default_manifest(manifest_beside(o.out));
    const auto d = load_dataset(o.in);
    const auto s = compute_stats(d);
    json j = to_json(s);
    j["dataset"] = d.meta.name;
    run.emit(o.out, j);
    run.note(stats_summary(s));
}

struct SplitOpts {
    std::string in, out;
    std::size_t train = 1200, test = 500, valid = 257;
    SeedFlag seed;
};

void cmd_split(Run& run, const SplitOpts& o) {
    run.default_manifest(manifest_beside(o.out));
    const auto seed = o.seed.single(run);
    const auto d = load_dataset(o.in);
    const auto split = stratified_split(d, {o.train, o.test, o.valid}, seed);
    run.write(o.out, serialize_dataset(split));
    run.note(stats_summary(compute_stats(split)));
}

struct BaselineOpts {
    std::string in, out, lexicon, lemmas, split = "all", model_out;
};

void cmd_baseline(Run& run, const BaselineOpts& o) {
    run.default_manifest(manifest_beside(o.out));
    Lexicon lex = o.lexicon.empty() ? Lexicon::builtin() : Lexicon::from_file(o.lexicon);
    std::shared_ptr<const Lemmatizer> lem = std::make_shared<NullLemmatizer>();
    if (!o.lemmas.empty()) lem = std::make_shared<DictionaryLemmatizer>(DictionaryLemmatizer::from_file(o.lemmas));
    const BaselineClassifier clf(std::move(lex), lem);
    const auto d = select_split(load_dataset(o.in), o.split);
    const auto texts = texts_of(d);
    const auto preds = clf.predict(texts);
    run.write(o.out, prediction_lines(d, preds));
    if (!o.model_out.empty()) run.write_json(o.model_out, clf.snapshot());
    std::size_t dq = 0;
    for (const auto& p : preds) dq += p.label == Label::DualQuality;
    run.note("baseline (" + std::to_string(clf.lexicon().size()) + " phrases): " + std::to_string(dq) + " of " +
             std::to_string(preds.size()) + " reviews flagged dual quality");
}

struct TrainOpts {
    std::string in, out, split = "train", mode = "ternary", model_id = "probe";
    SeedFlag seed;
    BackendFlags backend;
    HeadFlags head;
};

void cmd_train(Run& run, const TrainOpts& o) {
    run.default_manifest(manifest_beside(o.out));
    const auto seed = o.seed.single(run);
    const auto fs_cfg = o.head.few_shot(seed);
    auto d = select_split(load_dataset(o.in), o.split);
    if (o.mode == "binary") d = binary_collapse(d);
    const ProbeTrainer trainer(make_embedding_backend(o.backend.descriptor()), fs_cfg);
    const auto model = trainer.train(d, seed, o.model_id);
    run.write_json(o.out, model->snapshot());
    const auto texts = texts_of(d);
    std::vector<Label> pred;
    for (const auto& p : model->predict(texts)) pred.push_back(p.label);
    const auto rep = evaluate(gold_of(d), pred);
    run.note("trained " + o.model_id + " on " + std::to_string(d.size()) + " reviews; training accuracy " +
             fmt(rep.accuracy));
}

struct PredictOpts {
    std::string model, in, out, split = "all";
};

void cmd_predict(Run& run, const PredictOpts& o) {
    run.default_manifest(manifest_beside(o.out));
    const auto clf = load_classifier_file(o.model);
    const auto d = select_split(load_dataset(o.in), o.split);
    const auto texts = texts_of(d);
    const auto preds = clf->predict(texts);
    run.write(o.out, prediction_lines(d, preds));
    run.note(clf->model_id() + ": " + std::to_string(preds.size()) + " predictions");
}

struct EvaluateOpts {
    std::string gold, pred, in, out, csv, split = "all";
    std::string model = "probe", mode = "ternary", train_split = "train", eval_split = "test";
    std::size_t runs = 5;
    CLI::Option* runs_opt = nullptr;
    SeedFlag seed;
    BackendFlags backend;
    HeadFlags head;
};

void cmd_evaluate(Run& run, EvaluateOpts o) {
    if (!o.out.empty()) run.default_manifest(manifest_beside(o.out));
    if (!o.gold.empty() || !o.pred.empty()) {
        if (o.gold.empty() || o.pred.empty()) throw UsageError("--gold and --pred go together");
        const auto gold = select_split(load_dataset(o.gold), o.split);
        const auto preds = read_predictions(o.pred);
        std::vector<Label> g, p;
        for (const auto& r : gold.reviews) {
            if (!r.label) throw StateError("gold review " + r.id + " has no label");
            const auto it = preds.find(r.id);
            if (it == preds.end()) throw ArgumentError("no prediction for gold review " + r.id);
            g.push_back(*r.label);
            p.push_back(it->second.label);
        }
        const auto rep = evaluate(g, p);
        json j = to_json(rep);
        j["n"] = g.size();
        run.emit(o.out, j);
        if (!o.csv.empty()) run.write(o.csv, to_csv(rep.cm));
        run.note("accuracy " + fmt(rep.accuracy) + ", macro F1 " + fmt(rep.macro_f1) + " over " +
                 std::to_string(g.size()) + " reviews");
        return;
    }

    const auto seeds = o.seed.per_run(o.runs, o.runs_opt, run);
    const Dataset all = o.in.empty() ? synthetic::generate_fixture() : load_dataset(o.in);
    auto train = select_split(all, o.train_split);
    auto test = select_split(all, o.eval_split);
    if (o.mode == "binary") {
        train = binary_collapse(train);
        test = binary_collapse(test);
    }
    const auto texts = texts_of(test);
    const auto gold = gold_of(test);
    std::unique_ptr<ProbeTrainer> trainer;
    if (o.model == "probe") {
        trainer = std::make_unique<ProbeTrainer>(make_embedding_backend(o.backend.descriptor()), o.head.few_shot(0));
    }

    std::vector<EvaluationReport> reports;
    json per_run = json::array();
    for (const auto s : seeds) {
        std::unique_ptr<Classifier> clf;
        if (trainer) {
            clf = trainer->train(train, s, "probe-seed-" + std::to_string(s));
        } else {
            clf = std::make_unique<BaselineClassifier>();
        }
        std::vector<Label> pred;
        for (const auto& p : clf->predict(texts)) pred.push_back(p.label);
        reports.push_back(evaluate(gold, pred));
        per_run.push_back({{"seed", s}, {"report", to_json(reports.back())}});
    }
    const auto agg = aggregate_runs(reports);
    json j = {{"model", o.model},
              {"mode", o.mode},
              {"train_split", o.train_split},
              {"eval_split", o.eval_split},
              {"n_train", train.size()},
              {"n_eval", test.size()},
              {"seeds", seeds},
              {"runs", per_run},
              {"aggregate", to_json(agg)}};
    run.emit(o.out, j);
    if (!o.csv.empty()) run.write(o.csv, to_csv(agg.summed));
    const auto& acc = agg.at("accuracy");
    const auto& f1 = agg.at("macro_f1");
    run.note(o.model + " over " + std::to_string(seeds.size()) + " runs: accuracy " + fmt(acc.mean) + " ± " +
             fmt(acc.std) + ", macro F1 " + fmt(f1.mean) + " ± " + fmt(f1.std));
}

struct LlmOpts {
    std::string in, out, pred_out, split = "all", variant = "zero_shot_inst", lang = "pl", prompt_file;
    std::size_t runs = 1;
    LLMClientConfig client;
};

void cmd_llm_classify(Run& run, const LlmOpts& o) {
    run.default_manifest(manifest_beside(o.out));
    as_usage([&] { o.client.validate(); });
    if (o.runs == 0) throw UsageError("--runs must be at least 1");
    const auto variant = prompt_variant_from_string(o.variant);
    const auto lang = prompt_language_from_string(o.lang);
    PromptTemplate tmpl = builtin_template(variant, lang);
    if (!o.prompt_file.empty()) {
        std::ifstream in(o.prompt_file, std::ios::binary);
        std::stringstream body;
        body << in.rdbuf();
        tmpl = as_usage([&] { return make_template(variant, lang, body.str()); });
    }
    const auto d = select_split(load_dataset(o.in), o.split);
    const auto texts = texts_of(d);
    HttpChatClient client(o.client);
    const auto runs = classify_with_llm(texts, tmpl, client, o.client, o.runs);

    std::vector<std::string> ids;
    for (const auto& r : d.reviews) ids.push_back(r.id);
    json jr = json::array();
    for (const auto& r : runs) jr.push_back(to_json(r));
    run.write_json(o.out, {{"variant", o.variant},
                           {"language", o.lang},
                           {"model", o.client.model},
                           {"temperature", o.client.temperature},
                           {"ids", ids},
                           {"runs", jr}});
    if (!o.pred_out.empty()) {
        std::string lines;
        for (std::size_t i = 0; i < d.size(); ++i) {
            const auto& item = runs.front().items[i];
            if (!item.ok()) continue;
            json j = to_json(*item.prediction);
            j["id"] = d.reviews[i].id;
            lines += j.dump() + '\n';
        }
        run.write(o.pred_out, lines);
    }
    for (const auto& r : runs) {
        run.note("run " + std::to_string(r.run) + ": " + std::to_string(r.items.size() - r.failures()) + " of " +
                 std::to_string(r.items.size()) + " answered, " + std::to_string(r.retries.size()) + " retries");
    }
    for (const auto& r : runs) {
        if (!r.items.empty() && r.failures() == r.items.size()) {
            const auto& first = r.items.front();
            throw BackendError("run " + std::to_string(r.run) + ": every request failed (" + first.error_kind +
                               ": " + first.error + ")");
        }
    }
}

// bootstrap ------------------------------------------------------------------------------

struct BootInitOpts {
    std::string run_dir, seed_set, pool;
    bool force = false;
    LoopFlags loop;
};

void cmd_bootstrap_init(Run& run, const BootInitOpts& o) {
    const fs::path dir = o.run_dir;
    run.manifest_in(dir, "init");
    run.record_dir(dir);
    const auto cfg = o.loop.config(run);
    if (fs::exists(dir / "labeled.jsonl") && !o.force) {
        throw StateError(dir.string() + " already holds a bootstrap run (use --force to overwrite)");
    }
    const auto seeds = load_dataset(o.seed_set);
    Dataset positives, negatives;
    for (const auto& r : seeds.reviews) {
        (r.label == Label::DualQuality ? positives : negatives).reviews.push_back(r);
    }
    auto state = make_state(seed_base_dataset(positives, negatives), load_dataset(o.pool));
    save_state(state, dir);
    run.write(dir / kRunConfigFile, o.loop.ini(run));
    run.out() << json{{"run_dir", dir.generic_string()},
                      {"labeled", state.labeled.size()},
                      {"pool", state.pool.size()},
                      {"config", to_json(cfg)}}
                     .dump(2)
              << '\n';
    run.note("initialised " + dir.string() + ": " + std::to_string(state.labeled.size()) + " labeled, " +
             std::to_string(state.pool.size()) + " in the pool");
}

struct BootIterateOpts {
    std::string run_dir;
    bool force = false;
    LoopFlags loop;
    CLI::App* app = nullptr;
};

void cmd_bootstrap_iterate(Run& run, BootIterateOpts& o) {
    const fs::path dir = o.run_dir;
    run.manifest_in(dir, "iterate");
    run.record_dir(dir);
    if (fs::exists(dir / kRunConfigFile)) apply_ini_defaults(o.app, dir / kRunConfigFile);
    const auto cfg = o.loop.config(run);
    auto state = load_state(dir);
    if (!o.force) {
        if (state.open_batch && !state.open_batch->items.empty()) {
            throw StateError("iteration " + std::to_string(state.open_batch->iteration) + " still has " +
                             std::to_string(state.open_batch->items.size()) +
                             " undecided items; ingest decisions first or pass --force");
        }
        if (state.iterations.size() >= cfg.max_iterations) {
            throw StateError("iteration budget of " + std::to_string(cfg.max_iterations) +
                             " reached; pass --force to continue");
        }
        if (!state.iterations.empty()) {
            const int last = state.iterations.back().iteration;
            const auto positives = std::count_if(state.labeled.reviews.begin(), state.labeled.reviews.end(),
                                                 [&](const Review& r) {
                                                     return r.iteration == last && r.label == Label::DualQuality;
                                                 });
            if (static_cast<std::size_t>(positives) < cfg.min_new_positives) {
                throw StateError("stopping rule: iteration " + std::to_string(last) + " added " +
                                 std::to_string(positives) + " dual-quality labels (< " +
                                 std::to_string(cfg.min_new_positives) + "); pass --force to continue");
            }
        }
    }
    const ProbeTrainer trainer(make_embedding_backend(cfg.backend), cfg.few_shot);
    const auto rec = run_iteration(state, trainer, cfg.k, cfg.mode, cfg.seed);
    save_state(state, dir);
    char batch_name[32];
    std::snprintf(batch_name, sizeof batch_name, "iteration-%03d.jsonl", rec.iteration);
    run.out() << json{{"iteration", rec.iteration},
                      {"model_id", rec.model_id},
                      {"pool_scored", rec.pool_scored},
                      {"batch_size", rec.batch.items.size()},
                      {"batch_file", (dir / "batches" / batch_name).generic_string()}}
                     .dump(2)
              << '\n';
    std::string top = rec.batch.items.empty() ? "-" : fmt(rec.batch.items.front().dq_probability);
    run.note("iteration " + std::to_string(rec.iteration) + ": scored " + std::to_string(rec.pool_scored) +
             ", queued " + std::to_string(rec.batch.items.size()) + " (top p=" + top + ")");
}

struct BootIngestOpts {
    std::string run_dir, decisions;
};

void cmd_bootstrap_ingest(Run& run, const BootIngestOpts& o) {
    const fs::path dir = o.run_dir;
    run.manifest_in(dir, "ingest");
    run.record_dir(dir);
    auto state = load_state(dir);
    const auto decisions = read_decisions(o.decisions);
    const auto res = ingest_annotations(state, decisions);
    save_state(state, dir);
    const auto counts = state.label_counts();
    json jc = json::object();
    for (auto l : kAllLabels) jc[std::string(to_string(l))] = counts[index_of(l)];
    run.out() << json{{"added", res.added},
                      {"relabeled", res.relabeled},
                      {"labeled_size", state.labeled.size()},
                      {"label_counts", jc},
                      {"open_batch_remaining", state.open_batch ? state.open_batch->items.size() : 0}}
                     .dump(2)
              << '\n';
    run.note("ingested " + std::to_string(decisions.size()) + " decisions: " + std::to_string(res.added) +
             " added, " + std::to_string(res.relabeled) + " relabeled");
}

struct BootStatusOpts {
    std::string run_dir, out;
};

void cmd_bootstrap_status(Run& run, const BootStatusOpts& o) {
    const fs::path dir = o.run_dir;
    run.manifest_in(dir, "status");
    const auto state = load_state(dir);
    const auto counts = state.label_counts();
    json jc = json::object();
    for (auto l : kAllLabels) jc[std::string(to_string(l))] = counts[index_of(l)];
    json its = json::array();
    for (const auto& r : state.iterations) {
        its.push_back({{"iteration", r.iteration},
                       {"model_id", r.model_id},
                       {"pool_scored", r.pool_scored},
                       {"batch_size", r.batch.items.size()},
                       {"decisions_ingested", r.decisions_ingested},
                       {"labeled_size", r.labeled_size}});
    }
    run.emit(o.out, {{"iterations", its},
                     {"labeled_size", state.labeled.size()},
                     {"label_counts", jc},
                     {"pool_size", state.pool.size()},
                     {"open_batch_remaining", state.open_batch ? state.open_batch->items.size() : 0}});
    run.note(std::to_string(state.iterations.size()) + " iterations, " + std::to_string(state.labeled.size()) +
             " labeled, " + std::to_string(state.pool.size()) + " in the pool");
}

struct AuditOpts {
    std::string in, out, mode = "ternary";
    std::size_t folds = 5, top = 0;
    SeedFlag seed;
    BackendFlags backend;
    HeadFlags head;
};

void cmd_audit(Run& run, const AuditOpts& o) {
    if (!o.out.empty()) run.default_manifest(manifest_beside(o.out));
    const auto seed = o.seed.single(run);
    auto d = load_dataset(o.in);
    if (o.mode == "binary") d = binary_collapse(d);
    const ProbeTrainer trainer(make_embedding_backend(o.backend.descriptor()), o.head.few_shot(seed));
    const auto entries = audit_labels(d, trainer, o.folds, seed);
    const auto wrong = std::count_if(entries.begin(), entries.end(), [](const AuditEntry& e) { return e.misclassified(); });
    json je = json::array();
    for (std::size_t i = 0; i < entries.size() && (o.top == 0 || i < o.top); ++i) je.push_back(to_json(entries[i]));
    run.emit(o.out, {{"folds", o.folds}, {"seed", seed}, {"n", entries.size()}, {"misclassified", wrong}, {"entries", je}});
    run.note(std::to_string(wrong) + " of " + std::to_string(entries.size()) +
             " labels disagree with cross-validated predictions");
}

struct RobustnessOpts {
    std::string in, model, out, kind = "all", split = "all";
    std::size_t runs = 5;
    CLI::Option* runs_opt = nullptr;
    bool strict_period = false;
    SeedFlag seed;
};

void cmd_robustness(Run& run, RobustnessOpts o) {
    if (!o.out.empty()) run.default_manifest(manifest_beside(o.out));
    const auto seeds = o.seed.per_run(o.runs, o.runs_opt, run);
    const auto clf = load_classifier_file(o.model);
    const auto d = select_split(load_dataset(o.in), o.split);
    const auto texts = texts_of(d);
    std::vector<PerturbationKind> kinds;
    if (o.kind == "all") {
        kinds.assign(kAllPerturbations.begin(), kAllPerturbations.end());
    } else {
        kinds.push_back(perturbation_from_string(o.kind));
    }
    const auto fn = predict_fn(*clf);
    const PerturbOptions popts{o.strict_period};
    json reports = json::array();
    for (const auto k : kinds) {
        const auto rep = disagreement(fn, texts, k, o.runs, seeds, popts);
        reports.push_back(to_json(rep));
        run.note(std::string(to_string(k)) + ": " + fmt(rep.mean, 2) + "% ± " + fmt(rep.std, 2) + "% disagreement");
    }
    run.emit(o.out, {{"model_id", clf->model_id()}, {"n", texts.size()}, {"reports", reports}});
}

struct ServeOpts {
    ServiceConfig service;
    std::string model, data_dir = "service-data", port_file;
    LoopFlags loop;
};

std::atomic<bool> g_stop_requested{false};

extern "C" void on_stop_signal(int) { g_stop_requested.store(true); }

void cmd_serve(Run& run, ServeOpts& o) {
    ServiceConfig cfg = o.service;
    cfg.model_path = o.model;
    cfg.data_dir = o.data_dir;
    cfg.bootstrap = o.loop.config(run);
    as_usage([&] { cfg.validate(); });
    run.manifest_in(cfg.data_dir, "serve");
    run.record_dir(cfg.data_dir);

    auto service = make_service(cfg);
    HttpServer http(*service);
    const int port = http.bind(cfg.host, cfg.port);

    // Handlers go in before the port is announced, so whoever reads it may signal us.
    g_stop_requested = false;
    const auto prev_int = std::signal(SIGINT, on_stop_signal);
    const auto prev_term = std::signal(SIGTERM, on_stop_signal);
    if (!o.port_file.empty()) run.write(o.port_file, std::to_string(port) + "\n");
    run.note("serving on http://" + cfg.host + ":" + std::to_string(port) +
             (service->auth_enabled() ? " (bearer auth on)" : " (auth off)"));
    std::atomic<bool> done{false};
    std::thread watcher([&] {
        while (!done.load()) {
            if (g_stop_requested.load()) http.stop();
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
        }
    });
    try {
        http.listen();
    } catch (...) {
        done = true;
        watcher.join();
        std::signal(SIGINT, prev_int);
        std::signal(SIGTERM, prev_term);
        throw;
    }
    done = true;
    watcher.join();
    std::signal(SIGINT, prev_int);
    std::signal(SIGTERM, prev_term);
    service->write_snapshot();
    run.note("stopped; snapshot written to " + (cfg.data_dir / "snapshot.json").string());
}

struct SimulateOpts {
    std::string out_dir, mode = "binary";
    std::size_t pool = 5000, k = 200, iterations = 7, min_new_positives = 0;
    double positive_rate = 0.03;
    SeedFlag seed;
    BackendFlags backend;
    HeadFlags head;
};

void cmd_simulate(Run& run, const SimulateOpts& o) {
    const fs::path dir = o.out_dir;
    run.default_manifest(dir / "manifest.json");
    const auto& seeds = o.seed.values;
    run.use_seeds(seeds);
    if (!(o.positive_rate > 0.0 && o.positive_rate < 1.0)) throw UsageError("--positive-rate must be in (0, 1)");

    json runs = json::array();
    std::vector<double> enrichment;
    BootstrapConfig last_cfg;
    for (const auto s : seeds) {
        SimulationConfig sc;
        sc.pool.size = o.pool;
        sc.pool.positive_rate = o.positive_rate;
        // Offsets keep seed 0 on the generators' documented default streams.
        sc.pool.seed = synthetic::PoolSpec{}.seed + s;
        sc.seed_set.seed = synthetic::SeedSpec{}.seed + s;
        sc.bootstrap.k = o.k;
        sc.bootstrap.mode = training_mode_from_string(o.mode);
        sc.bootstrap.max_iterations = o.iterations;
        sc.bootstrap.min_new_positives = o.min_new_positives;
        sc.bootstrap.seed = s;
        sc.bootstrap.backend = o.backend.descriptor();
        sc.bootstrap.few_shot = o.head.few_shot(s);
        as_usage([&] { sc.bootstrap.validate(); });
        last_cfg = sc.bootstrap;

        const auto rep = simulate(sc);
        std::string lines;
        for (const auto& r : rep.state.iterations) lines += to_json(r).dump() + '\n';
        const fs::path its = seeds.size() == 1 ? dir / "iterations.jsonl"
                                               : dir / ("seed-" + std::to_string(s)) / "iterations.jsonl";
        run.write(its, lines);
        json j = to_json(rep);
        j["seed"] = s;
        j["iterations_file"] = its.generic_string();
        runs.push_back(std::move(j));
        enrichment.push_back(rep.enrichment);
        run.note("seed " + std::to_string(s) + ": " + std::to_string(rep.verified_positives) + " of " +
                 std::to_string(rep.planted_positives) + " planted positives in " + std::to_string(rep.annotations) +
                 " annotations; random expectation " + fmt(rep.random_expected, 1) + ", enrichment " +
                 fmt(rep.enrichment, 2) + "x");
    }
    double mean = 0.0;
    for (double e : enrichment) mean += e;
    mean /= static_cast<double>(enrichment.size());
    json cfg = to_json(last_cfg);
    cfg.erase("seed");
    run.write_json(dir / "report.json", {{"pool", o.pool},
                                         {"positive_rate", o.positive_rate},
                                         {"config", cfg},
                                         {"runs", runs},
                                         {"enrichment", {{"mean", mean}, {"std", sample_std(enrichment)}}}});
}

struct FixtureOpts {
    std::string out, kind = "fixture";
    std::size_t size = 5000, positives = 30, negatives = 100;
    double positive_rate = 0.03;
    SeedFlag seed;
};

void cmd_generate_fixture(Run& run, const FixtureOpts& o) {
    run.default_manifest(manifest_beside(o.out));
    Dataset d;
    if (o.kind == "fixture") {
        synthetic::FixtureSpec spec;
        if (o.seed.given()) spec.seed = o.seed.single(run);
        run.use_seeds({spec.seed});
        d = synthetic::generate_fixture(spec);
    } else if (o.kind == "pool") {
        synthetic::PoolSpec spec;
        spec.size = o.size;
        spec.positive_rate = o.positive_rate;
        if (o.seed.given()) spec.seed = o.seed.single(run);
        run.use_seeds({spec.seed});
        d = synthetic::generate_pool(spec);
    } else {
        synthetic::SeedSpec spec;
        spec.positives = o.positives;
        spec.negatives = o.negatives;
        if (o.seed.given()) spec.seed = o.seed.single(run);
        run.use_seeds({spec.seed});
        d = synthetic::generate_seed_set(spec);
    }
    run.write(o.out, serialize_dataset(d));
    run.note("wrote " + std::to_string(d.size()) + " reviews (" + o.kind + ") to " + o.out);
}

std::string command_path(const CLI::App* app) {
    for (const auto* sub : app->get_subcommands()) {
        const auto rest = command_path(sub);
        return rest.empty() ? sub->get_name() : sub->get_name() + " " + rest;
    }
    return {};
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dual-quality review classification toolkit", "dualq"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "INI file; [section] names are subcommands, keys are flag names");
    app.allow_config_extras(CLI::config_extras_mode::error);
    Globals g;
    app.add_option("--manifest", g.manifest, "Where to write the run manifest");
    app.add_flag("--canonical", g.canonical, "Pin every timestamp so outputs are byte-identical across runs");
    app.add_flag("-q,--quiet", g.quiet, "No human-readable summary on stderr");

    std::vector<std::pair<CLI::App*, std::function<void(Run&)>>> actions;
    const auto existing = CLI::ExistingFile;

    StatsOpts stats;
    auto* c_stats = app.add_subcommand("dataset-stats", "Label, split and length statistics of a dataset");
    c_stats->add_option("--in", stats.in, "Dataset (JSONL)")->required()->check(existing);
    c_stats->add_option("--out", stats.out, "Output JSON (default: stdout)");
    actions.emplace_back(c_stats, [&](Run& r) { cmd_dataset_stats(r, stats); });

    SplitOpts split;
    auto* c_split = app.add_subcommand("split", "Stratified train/test/valid split");
    c_split->add_option("--in", split.in, "Dataset (JSONL)")->required()->check(existing);
    c_split->add_option("--out", split.out, "Output dataset (JSONL)")->required();
    c_split->add_option("--train", split.train, "Train size")->capture_default_str();
    c_split->add_option("--test", split.test, "Test size")->capture_default_str();
    c_split->add_option("--valid", split.valid, "Validation size")->capture_default_str();
    split.seed.add(c_split);
    actions.emplace_back(c_split, [&](Run& r) { cmd_split(r, split); });

    const auto split_names = CLI::IsMember({"all", "train", "test", "valid"});

    BaselineOpts base;
    auto* c_base = app.add_subcommand("baseline", "Country-lexicon baseline predictions");
    c_base->add_option("--in", base.in, "Dataset (JSONL)")->required()->check(existing);
    c_base->add_option("--out", base.out, "Predictions (JSONL)")->required();
    c_base->add_option("--lexicon", base.lexicon, "Phrase list (default: built-in)")->check(existing);
    c_base->add_option("--lemmas", base.lemmas, "form<TAB>lemma table")->check(existing);
    c_base->add_option("--split", base.split, "Only this split")->check(split_names)->capture_default_str();
    c_base->add_option("--model-out", base.model_out, "Also write the model snapshot");
    actions.emplace_back(c_base, [&](Run& r) { cmd_baseline(r, base); });

    TrainOpts train;
    auto* c_train = app.add_subcommand("train", "Few-shot probe: embeddings plus a logistic head");
    c_train->add_option("--in", train.in, "Labeled dataset (JSONL)")->required()->check(existing);
    c_train->add_option("--out", train.out, "Model snapshot (JSON)")->required();
    c_train->add_option("--split", train.split, "Training split")->check(split_names)->capture_default_str();
    c_train->add_option("--mode", train.mode, "Label set")
        ->check(CLI::IsMember({"binary", "ternary"}))
        ->capture_default_str();
    c_train->add_option("--model-id", train.model_id, "Identifier stored in predictions")->capture_default_str();
    train.seed.add(c_train);
    train.backend.add(c_train);
    train.head.add(c_train);
    actions.emplace_back(c_train, [&](Run& r) { cmd_train(r, train); });

    PredictOpts pred;
    auto* c_pred = app.add_subcommand("predict", "Predictions from a model snapshot");
    c_pred->add_option("--model", pred.model, "Model snapshot (JSON)")->required()->check(existing);
    c_pred->add_option("--in", pred.in, "Dataset (JSONL)")->required()->check(existing);
    c_pred->add_option("--out", pred.out, "Predictions (JSONL)")->required();
    c_pred->add_option("--split", pred.split, "Only this split")->check(split_names)->capture_default_str();
    actions.emplace_back(c_pred, [&](Run& r) { cmd_predict(r, pred); });

    EvaluateOpts ev;
    auto* c_ev = app.add_subcommand(
        "evaluate", "Score predictions against gold labels, or train and score over seeded runs");
    c_ev->add_option("--gold", ev.gold, "Gold dataset (JSONL)")->check(existing);
    c_ev->add_option("--pred", ev.pred, "Predictions (JSONL)")->check(existing);
    c_ev->add_option("--split", ev.split, "Gold split to score (with --gold)")->check(split_names)->capture_default_str();
    c_ev->add_option("--in", ev.in, "Dataset for seeded runs (default: the synthetic fixture)")->check(existing);
    c_ev->add_option("--model", ev.model, "Model for seeded runs")
        ->check(CLI::IsMember({"probe", "baseline"}))
        ->capture_default_str();
    c_ev->add_option("--mode", ev.mode, "Label set")->check(CLI::IsMember({"binary", "ternary"}))->capture_default_str();
    c_ev->add_option("--train-split", ev.train_split, "Split to train on")->check(split_names)->capture_default_str();
    c_ev->add_option("--eval-split", ev.eval_split, "Split to score")->check(split_names)->capture_default_str();
    ev.runs_opt = c_ev->add_option("--runs", ev.runs, "Number of seeded runs")->capture_default_str();
    c_ev->add_option("--out", ev.out, "Report JSON (default: stdout)");
    c_ev->add_option("--csv", ev.csv, "Confusion matrix CSV (summed over runs)");
    ev.seed.add(c_ev);
    ev.backend.add(c_ev);
    ev.head.add(c_ev);
    actions.emplace_back(c_ev, [&](Run& r) { cmd_evaluate(r, ev); });

    LlmOpts llm;
    auto* c_llm = app.add_subcommand("llm-classify", "Prompted classification through a chat-completions API");
    c_llm->add_option("--in", llm.in, "Dataset (JSONL)")->required()->check(existing);
    c_llm->add_option("--out", llm.out, "Per-run results (JSON)")->required();
    c_llm->add_option("--pred-out", llm.pred_out, "First run's predictions (JSONL)");
    c_llm->add_option("--split", llm.split, "Only this split")->check(split_names)->capture_default_str();
    c_llm->add_option("--variant", llm.variant, "Prompt variant")
        ->check(CLI::IsMember({"zero_shot", "few_shot", "zero_shot_inst", "few_shot_inst"}))
        ->capture_default_str();
    c_llm->add_option("--lang", llm.lang, "Prompt language")->check(CLI::IsMember({"pl", "en"}))->capture_default_str();
    c_llm->add_option("--prompt-file", llm.prompt_file, "Custom prompt with one <review> placeholder")->check(existing);
    c_llm->add_option("--runs", llm.runs, "Repetitions")->capture_default_str();
    c_llm->add_option("--base-url", llm.client.base_url, "OpenAI-compatible API base")->capture_default_str();
    c_llm->add_option("--llm-model", llm.client.model, "Model name")->capture_default_str();
    c_llm->add_option("--temperature", llm.client.temperature, "Sampling temperature")->capture_default_str();
    c_llm->add_option("--max-retries", llm.client.max_retries, "Retries per request")->capture_default_str();
    c_llm->add_option("--backoff", llm.client.backoff_seconds, "Backoff schedule in seconds")
        ->delimiter(',')
        ->capture_default_str();
    c_llm->add_option("--timeout", llm.client.timeout_seconds, "Per-request timeout in seconds")->capture_default_str();
    c_llm->add_option("--concurrency", llm.client.max_concurrency, "Requests in flight")->capture_default_str();
    c_llm->add_option("--api-key-env", llm.client.api_key_env, "Environment variable with the API key")
        ->capture_default_str();
    actions.emplace_back(c_llm, [&](Run& r) { cmd_llm_classify(r, llm); });

    auto* c_boot = app.add_subcommand("bootstrap", "Human-in-the-loop dataset bootstrapping");
    c_boot->require_subcommand(1);

    BootInitOpts binit;
    auto* c_binit = c_boot->add_subcommand("init", "Create a run directory from a seed set and a pool");
    c_binit->add_option("--run-dir", binit.run_dir, "Run directory")->required();
    c_binit->add_option("--seed-set", binit.seed_set, "Verified seeds (JSONL)")->required()->check(existing);
    c_binit->add_option("--pool", binit.pool, "Unlabeled pool (JSONL)")->required()->check(existing);
    c_binit->add_flag("--force", binit.force, "Overwrite an existing run");
    binit.loop.add(c_binit);
    actions.emplace_back(c_binit, [&](Run& r) { cmd_bootstrap_init(r, binit); });

    BootIterateOpts biter;
    auto* c_biter = c_boot->add_subcommand("iterate", "Train, score the pool and queue the next batch");
    c_biter->add_option("--run-dir", biter.run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
    c_biter->add_flag("--force", biter.force, "Ignore the open batch, the budget and the stopping rule");
    biter.loop.add(c_biter);
    biter.app = c_biter;
    actions.emplace_back(c_biter, [&](Run& r) { cmd_bootstrap_iterate(r, biter); });

    BootIngestOpts bing;
    auto* c_bing = c_boot->add_subcommand("ingest", "Apply annotator decisions (JSONL)");
    c_bing->add_option("--run-dir", bing.run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
    c_bing->add_option("--decisions", bing.decisions, "Decisions (JSONL)")->required()->check(existing);
    actions.emplace_back(c_bing, [&](Run& r) { cmd_bootstrap_ingest(r, bing); });

    BootStatusOpts bstat;
    auto* c_bstat = c_boot->add_subcommand("status", "Summary of a run directory");
    c_bstat->add_option("--run-dir", bstat.run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
    c_bstat->add_option("--out", bstat.out, "Output JSON (default: stdout)");
    actions.emplace_back(c_bstat, [&](Run& r) { cmd_bootstrap_status(r, bstat); });

    AuditOpts aud;
    auto* c_aud = app.add_subcommand("audit", "Cross-validated search for likely label errors");
    c_aud->add_option("--in", aud.in, "Labeled dataset (JSONL)")->required()->check(existing);
    c_aud->add_option("--out", aud.out, "Output JSON (default: stdout)");
    c_aud->add_option("--folds", aud.folds, "Cross-validation folds")->capture_default_str();
    c_aud->add_option("--top", aud.top, "Keep only the first N entries (0 = all)")->capture_default_str();
    c_aud->add_option("--mode", aud.mode, "Label set")->check(CLI::IsMember({"binary", "ternary"}))->capture_default_str();
    aud.seed.add(c_aud);
    aud.backend.add(c_aud);
    aud.head.add(c_aud);
    actions.emplace_back(c_aud, [&](Run& r) { cmd_audit(r, aud); });

    RobustnessOpts rob;
    auto* c_rob = app.add_subcommand("robustness", "Decision disagreement under meaning-preserving edits");
    c_rob->add_option("--in", rob.in, "Test set (JSONL)")->required()->check(existing);
    c_rob->add_option("--model", rob.model, "Model snapshot (JSON)")->required()->check(existing);
    c_rob->add_option("--kind", rob.kind, "Perturbation")
        ->check(CLI::IsMember({"all", "period", "first_letter", "lower", "pl_chars", "pl_chars_once"}))
        ->capture_default_str();
    rob.runs_opt = c_rob->add_option("--runs", rob.runs, "Number of runs")->capture_default_str();
    c_rob->add_option("--split", rob.split, "Only this split")->check(split_names)->capture_default_str();
    c_rob->add_flag("--strict-period", rob.strict_period, "Toggle the final period even after other punctuation");
    c_rob->add_option("--out", rob.out, "Output JSON (default: stdout)");
    rob.seed.add(c_rob);
    actions.emplace_back(c_rob, [&](Run& r) { cmd_robustness(r, rob); });

    ServeOpts srv;
    auto* c_srv = app.add_subcommand("serve", "Run the analyst HTTP service until SIGINT/SIGTERM");
    c_srv->add_option("--host", srv.service.host, "Bind address")->capture_default_str();
    c_srv->add_option("--port", srv.service.port, "Port (0 picks a free one)")->capture_default_str();
    c_srv->add_option("--port-file", srv.port_file, "Write the bound port here");
    c_srv->add_option("--model", srv.model, "Active model snapshot (JSON)")->check(existing);
    c_srv->add_option("--data-dir", srv.data_dir, "Event log and snapshot directory")->capture_default_str();
    c_srv->add_option("--auth-token-env", srv.service.auth_token_env, "Environment variable with the bearer token")
        ->capture_default_str();
    c_srv->add_option("--flag-threshold", srv.service.flag_threshold, "Flag reviews with p(dual quality) >= this")
        ->capture_default_str();
    c_srv->add_option("--rollup-threshold", srv.service.rollup_threshold, "Flagged reviews that escalate a product")
        ->capture_default_str();
    c_srv->add_option("--snapshot-every", srv.service.snapshot_every, "Events between snapshots")
        ->capture_default_str();
    c_srv->add_option("--threads", srv.service.threads, "HTTP worker threads")->capture_default_str();
    srv.loop.add(c_srv);
    actions.emplace_back(c_srv, [&](Run& r) { cmd_serve(r, srv); });

    SimulateOpts sim;
    auto* c_sim = app.add_subcommand("simulate", "Bootstrap loop on a synthetic pool with a perfect annotator");
    c_sim->add_option("--out-dir", sim.out_dir, "Output directory")->required();
    c_sim->add_option("--pool", sim.pool, "Pool size")->capture_default_str();
    c_sim->add_option("--positive-rate", sim.positive_rate, "Planted dual-quality rate")->capture_default_str();
    c_sim->add_option("--k", sim.k, "Batch size")->capture_default_str();
    c_sim->add_option("--iterations", sim.iterations, "Iterations")->capture_default_str();
    c_sim->add_option("--min-new-positives", sim.min_new_positives, "Stopping rule (0 = run every iteration)")
        ->capture_default_str();
    c_sim->add_option("--mode", sim.mode, "Training mode")
        ->check(CLI::IsMember({"binary", "ternary"}))
        ->capture_default_str();
    sim.seed.add(c_sim);
    sim.backend.add(c_sim);
    sim.head.add(c_sim);
    actions.emplace_back(c_sim, [&](Run& r) { cmd_simulate(r, sim); });

    FixtureOpts fix;
    auto* c_fix = app.add_subcommand("generate-fixture", "Write a synthetic dataset, pool or seed set");
    c_fix->add_option("--out", fix.out, "Output dataset (JSONL)")->required();
    c_fix->add_option("--kind", fix.kind, "What to generate")
        ->check(CLI::IsMember({"fixture", "pool", "seed-set"}))
        ->capture_default_str();
    c_fix->add_option("--size", fix.size, "Pool size")->capture_default_str();
    c_fix->add_option("--positive-rate", fix.positive_rate, "Pool dual-quality rate")->capture_default_str();
    c_fix->add_option("--positives", fix.positives, "Seed-set positives")->capture_default_str();
    c_fix->add_option("--negatives", fix.negatives, "Seed-set negatives")->capture_default_str();
    fix.seed.add(c_fix);
    actions.emplace_back(c_fix, [&](Run& r) { cmd_generate_fixture(r, fix); });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) return app.exit(e, out, err);
        err << error_line("usage_error", e.what()) << '\n';
        err << "Run with --help for more information.\n";
        return kExitUsage;
    }

    ClockGuard clock(g.canonical);
    Run run(out, err, g);
    run.manifest.command = command_path(&app);
    run.manifest.argv = args;
    run.manifest.canonical = g.canonical;
    if (const auto* cfg = app.get_config_ptr(); cfg && cfg->count() > 0) {
        run.manifest.config_path = cfg->as<std::string>();
    }
    run.manifest.started_at = utc_timestamp();

    const auto it = std::find_if(actions.begin(), actions.end(), [](const auto& a) { return a.first->parsed(); });
    if (it == actions.end()) {
        err << error_line("usage_error", "no command given") << '\n';
        return kExitUsage;
    }

    int code = kExitOk;
    try {
        it->second(run);
    } catch (const UsageError& e) {
        err << error_line("usage_error", e.what()) << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        run.manifest.error = json{{"kind", e.kind()}, {"message", e.what()}};
        code = kExitRuntime;
    } catch (const fs::filesystem_error& e) {
        run.manifest.error = json{{"kind", "io_error"}, {"message", e.what()}};
        code = kExitRuntime;
    } catch (const std::exception& e) {
        run.manifest.error = json{{"kind", "internal_error"}, {"message", e.what()}};
        code = kExitRuntime;
    }
    if (code != kExitOk) {
        run.manifest.status = "error";
        run.manifest.exit_code = code;
        err << json{{"error", *run.manifest.error}}.dump() << '\n';
    }
    try {
        const auto path = run.finish();
        run.note("manifest: " + path.generic_string());
    } catch (const std::exception& e) {
        err << error_line("io_error", std::string("manifest: ") + e.what()) << '\n';
        return kExitRuntime;
    }
    return code;
}

} // namespace dualq::cli
