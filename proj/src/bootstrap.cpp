#include "dualq/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <tuple>

#include "dualq/errors.hpp"
#include "dualq/rng.hpp"

namespace dualq {

using nlohmann::json;

namespace {

constexpr std::size_t kScoreChunk = 512;

json counts_json(const std::array<std::size_t, kNumLabels>& c) {
    json j = json::object();
    for (auto l : kAllLabels) j[std::string(to_string(l))] = c[index_of(l)];
    return j;
}

std::array<std::size_t, kNumLabels> counts_from_json(const json& j) {
    std::array<std::size_t, kNumLabels> c{};
    for (auto l : kAllLabels) c[index_of(l)] = j.value(std::string(to_string(l)), std::size_t{0});
    return c;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ArgumentError("cannot open " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& p, const std::string& content) {
    const auto tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ArgumentError("cannot write " + tmp);
        out << content;
        if (!out) throw ArgumentError("write failed for " + tmp);
    }
    std::filesystem::rename(tmp, p);
}

std::string batch_file_name(int iteration) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "iteration-%03d.jsonl", iteration);
    return buf;
}

uint64_t mix(uint64_t a, uint64_t b) {
    uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace

void validate(const AnnotationDecision& d) {
    if (d.review_id.empty()) throw ArgumentError("decision without a review id");
    if (d.subtype && d.label != Label::OtherProblems) {
        throw ArgumentError("decision for " + d.review_id + ": a subtype is only allowed with other problems");
    }
}

json to_json(const ScoredItem& s) { return {{"id", s.id}, {"dq_probability", s.dq_probability}, {"text", s.text}}; }

json to_json(const AnnotationBatch& b) {
    json items = json::array();
    for (const auto& it : b.items) items.push_back(to_json(it));
    return {{"iteration", b.iteration}, {"created_at", b.created_at}, {"items", std::move(items)}};
}

AnnotationBatch annotation_batch_from_json(const json& j) {
    try {
        AnnotationBatch b;
        b.iteration = j.at("iteration").get<int>();
        b.created_at = j.value("created_at", std::string{});
        for (const auto& it : j.at("items")) {
            b.items.push_back({it.at("id").get<std::string>(), it.at("dq_probability").get<double>(),
                               it.value("text", std::string{})});
        }
        return b;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed annotation batch: ") + e.what());
    }
}

json to_json(const AnnotationDecision& d) {
    json j = {{"review_id", d.review_id},
              {"label", to_string(d.label)},
              {"annotator", d.annotator},
              {"timestamp", d.timestamp}};
    j["subtype"] = d.subtype ? json(to_string(*d.subtype)) : json(nullptr);
    return j;
}

AnnotationDecision annotation_decision_from_json(const json& j) {
    AnnotationDecision d;
    try {
        d.review_id = j.at("review_id").get<std::string>();
        d.label = label_from_string(j.at("label").get<std::string>());
        if (auto it = j.find("subtype"); it != j.end() && !it->is_null()) {
            d.subtype = subtype_from_string(it->get<std::string>());
        }
        d.annotator = j.value("annotator", std::string{});
        d.timestamp = j.value("timestamp", std::string{});
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed annotation decision: ") + e.what());
    }
    validate(d);
    return d;
}

json to_json(const IterationRecord& r) {
    return {{"iteration", r.iteration},
            {"model_id", r.model_id},
            {"pool_scored", r.pool_scored},
            {"batch", to_json(r.batch)},
            {"decisions_ingested", r.decisions_ingested},
            {"labeled_size", r.labeled_size},
            {"label_counts", counts_json(r.label_counts)}};
}

IterationRecord iteration_record_from_json(const json& j) {
    try {
        IterationRecord r;
        r.iteration = j.at("iteration").get<int>();
        r.model_id = j.at("model_id").get<std::string>();
        r.pool_scored = j.at("pool_scored").get<std::size_t>();
        r.batch = annotation_batch_from_json(j.at("batch"));
        r.decisions_ingested = j.at("decisions_ingested").get<std::size_t>();
        r.labeled_size = j.at("labeled_size").get<std::size_t>();
        r.label_counts = counts_from_json(j.at("label_counts"));
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed iteration record: ") + e.what());
    }
}

std::string_view to_string(TrainingMode m) { return m == TrainingMode::Binary ? "binary" : "ternary"; }

TrainingMode training_mode_from_string(std::string_view s) {
    if (s == "binary") return TrainingMode::Binary;
    if (s == "ternary") return TrainingMode::Ternary;
    throw ParseError("unknown training mode \"" + std::string(s) + "\"");
}

Dataset seed_base_dataset(const Dataset& positives, const Dataset& negatives) {
    if (positives.empty()) throw ArgumentError("the base dataset needs at least one dual-quality review");
    Dataset out;
    out.meta = {"base", utc_timestamp(), kSchemaVersion};
    std::unordered_set<std::string> seen;
    const auto now = out.meta.created_at;
    auto add = [&](const Review& r, Label expected, const char* role) {
        if (r.label != expected) {
            throw ArgumentError("review " + r.id + " in the " + role + " set must be labeled " +
                                std::string(to_string(expected)));
        }
        if (!seen.insert(r.id).second) throw IntegrityError("duplicate review id " + r.id);
        Review copy = r;
        copy.provenance.push_back({"system", now, "seed", std::nullopt, expected,
                                   std::string(role) + ":" + std::string(to_string(r.source))});
        copy.iteration = 0;
        out.reviews.push_back(std::move(copy));
    };
    for (const auto& r : positives.reviews) add(r, Label::DualQuality, "positive");
    for (const auto& r : negatives.reviews) add(r, Label::Standard, "negative");
    return out;
}

AnnotationBatch select_candidates(std::span<const ScoredItem> scored_pool,
                                  const std::unordered_set<std::string>& labeled_ids, std::size_t k,
                                  int iteration) {
    if (k == 0) throw ArgumentError("k must be at least 1");
    std::vector<const ScoredItem*> eligible;
    eligible.reserve(scored_pool.size());
    std::unordered_set<std::string> taken;
    for (const auto& s : scored_pool) {
        if (!(s.dq_probability >= 0.0 && s.dq_probability <= 1.0)) {
            throw ArgumentError("probability for " + s.id + " is outside [0, 1]");
        }
        if (labeled_ids.count(s.id) || !taken.insert(s.id).second) continue;
        eligible.push_back(&s);
    }
    const auto n = std::min(k, eligible.size());
    auto before = [](const ScoredItem* a, const ScoredItem* b) {
        if (a->dq_probability != b->dq_probability) return a->dq_probability > b->dq_probability;
        return a->id < b->id;
    };
    std::partial_sort(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(n), eligible.end(), before);
    AnnotationBatch batch;
    batch.iteration = iteration;
    batch.created_at = utc_timestamp();
    batch.items.reserve(n);
    for (std::size_t i = 0; i < n; ++i) batch.items.push_back(*eligible[i]);
    return batch;
}

ProbeTrainer::ProbeTrainer(std::shared_ptr<const EmbeddingBackend> backend, FewShotConfig config)
    : backend_(std::move(backend)), config_(config) {
    if (!backend_) throw ArgumentError("probe trainer needs an embedding backend");
}

std::unique_ptr<Classifier> ProbeTrainer::train(const Dataset& labeled, uint64_t seed,
                                                const std::string& model_id) const {
    auto cfg = config_;
    cfg.head.seed = mix(cfg.head.seed, seed);
    cfg.finetune.seed = mix(cfg.finetune.seed, seed);
    return train_few_shot(labeled.reviews, backend_, cfg, model_id);
}

json ProbeTrainer::descriptor() const {
    return {{"kind", "probe"},
            {"backend", backend_->descriptor()},
            {"contrastive_iterations", config_.contrastive_iterations},
            {"head", to_json(config_.head)}};
}

void BootstrapConfig::validate() const {
    if (k == 0) throw ArgumentError("k must be at least 1");
    if (max_iterations == 0) throw ArgumentError("max_iterations must be at least 1");
    if (!backend.is_object() || !backend.contains("kind")) {
        throw ArgumentError("backend descriptor must be an object with a \"kind\"");
    }
}

json to_json(const BootstrapConfig& c) {
    return {{"k", c.k},
            {"mode", to_string(c.mode)},
            {"max_iterations", c.max_iterations},
            {"min_new_positives", c.min_new_positives},
            {"seed", c.seed},
            {"backend", c.backend},
            {"contrastive_iterations", c.few_shot.contrastive_iterations},
            {"head", to_json(c.few_shot.head)}};
}

BootstrapConfig bootstrap_config_from_json(const json& j) {
    BootstrapConfig c;
    try {
        c.k = j.value("k", c.k);
        if (j.contains("mode")) c.mode = training_mode_from_string(j.at("mode").get<std::string>());
        c.max_iterations = j.value("max_iterations", c.max_iterations);
        c.min_new_positives = j.value("min_new_positives", c.min_new_positives);
        c.seed = j.value("seed", c.seed);
        if (j.contains("backend")) c.backend = j.at("backend");
        c.few_shot.contrastive_iterations = j.value("contrastive_iterations", c.few_shot.contrastive_iterations);
        if (j.contains("head")) c.few_shot.head = head_config_from_json(j.at("head"));
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed bootstrap config: ") + e.what());
    }
    c.validate();
    return c;
}

std::unordered_set<std::string> BootstrapState::labeled_ids() const {
    std::unordered_set<std::string> ids;
    ids.reserve(labeled.size());
    for (const auto& r : labeled.reviews) ids.insert(r.id);
    return ids;
}

std::array<std::size_t, kNumLabels> BootstrapState::label_counts() const {
    std::array<std::size_t, kNumLabels> c{};
    for (const auto& r : labeled.reviews) {
        if (r.label) ++c[index_of(*r.label)];
    }
    return c;
}

BootstrapState make_state(Dataset labeled, Dataset pool) {
    BootstrapState s;
    s.labeled = std::move(labeled);
    for (const auto& r : s.labeled.reviews) {
        if (!r.label) throw ArgumentError("review " + r.id + " in the labeled set has no label");
    }
    const auto ids = s.labeled_ids();
    s.pool.meta = pool.meta;
    std::unordered_set<std::string> seen;
    for (auto& r : pool.reviews) {
        if (ids.count(r.id)) continue;
        if (!seen.insert(r.id).second) throw IntegrityError("duplicate review id " + r.id + " in the pool");
        r.label.reset();
        r.subtype.reset();
        s.pool.reviews.push_back(std::move(r));
    }
    return s;
}

IterationRecord run_iteration(BootstrapState& state, const Trainer& trainer, std::size_t k, TrainingMode mode,
                              uint64_t seed) {
    if (k == 0) throw ArgumentError("k must be at least 1");
    const int index = static_cast<int>(state.iterations.size()) + 1;
    const Dataset train = mode == TrainingMode::Binary ? binary_collapse(state.labeled) : state.labeled;
    std::unordered_set<Label> classes;
    for (const auto& r : train.reviews) {
        if (r.label) classes.insert(*r.label);
    }
    if (classes.size() < 2) {
        throw StateError("iteration " + std::to_string(index) + ": the labeled set needs at least two classes");
    }

    const std::string model_id = "bootstrap-" + std::to_string(index);
    std::unique_ptr<Classifier> model;
    try {
        model = trainer.train(train, mix(seed, static_cast<uint64_t>(index)), model_id);
    } catch (const std::exception& e) {
        throw BackendError("iteration " + std::to_string(index) + ": training failed: " + e.what());
    }
    if (!model) throw BackendError("iteration " + std::to_string(index) + ": trainer returned no model");

    std::vector<ScoredItem> scored;
    scored.reserve(state.pool.size());
    std::vector<std::string> chunk;
    for (std::size_t start = 0; start < state.pool.size(); start += kScoreChunk) {
        const auto end = std::min(state.pool.size(), start + kScoreChunk);
        chunk.clear();
        for (auto i = start; i < end; ++i) chunk.push_back(state.pool.reviews[i].text);
        std::vector<Prediction> preds;
        try {
            preds = model->predict(chunk);
        } catch (const std::exception& e) {
            throw BackendError("iteration " + std::to_string(index) + ": scoring failed: " + e.what());
        }
        for (auto i = start; i < end; ++i) {
            const auto& r = state.pool.reviews[i];
            scored.push_back({r.id, std::clamp(preds[i - start].prob(Label::DualQuality), 0.0, 1.0), r.text});
        }
    }

    IterationRecord rec;
    rec.iteration = index;
    rec.model_id = model->model_id();
    rec.pool_scored = scored.size();
    rec.batch = select_candidates(scored, state.labeled_ids(), k, index);
    rec.labeled_size = state.labeled.size();
    rec.label_counts = state.label_counts();
    state.iterations.push_back(rec);
    state.open_batch = rec.batch;
    return rec;
}

IngestResult ingest_annotations(BootstrapState& state, std::span<const AnnotationDecision> decisions) {
    IngestResult result;
    if (decisions.empty()) return result;

    std::unordered_map<std::string, std::size_t> labeled_at, pool_at;
    for (std::size_t i = 0; i < state.labeled.size(); ++i) labeled_at.emplace(state.labeled.reviews[i].id, i);
    for (std::size_t i = 0; i < state.pool.size(); ++i) pool_at.emplace(state.pool.reviews[i].id, i);
    for (const auto& d : decisions) {
        validate(d);
        if (!labeled_at.count(d.review_id) && !pool_at.count(d.review_id)) {
            throw ArgumentError("unknown review id " + d.review_id);
        }
    }

    const int iteration = state.iterations.empty() ? 0 : state.iterations.back().iteration;
    std::vector<bool> moved(state.pool.size(), false);
    for (const auto& d : decisions) {
        const auto subtype_note = d.subtype ? to_string(*d.subtype) : std::string{};
        if (auto it = labeled_at.find(d.review_id); it != labeled_at.end()) {
            auto& r = state.labeled.reviews[it->second];
            r.provenance.push_back({d.annotator, d.timestamp, "relabel", r.label, d.label, subtype_note});
            r.label = d.label;
            r.subtype = d.subtype;
            ++result.relabeled;
            continue;
        }
        const auto p = pool_at.at(d.review_id);
        Review r = state.pool.reviews[p];
        r.label = d.label;
        r.subtype = d.subtype;
        r.iteration = iteration;
        r.provenance.push_back({d.annotator, d.timestamp, "annotate", std::nullopt, d.label, subtype_note});
        labeled_at.emplace(r.id, state.labeled.size());
        state.labeled.reviews.push_back(std::move(r));
        moved[p] = true;
        ++result.added;
    }

    if (result.added > 0) {
        std::vector<Review> rest;
        rest.reserve(state.pool.size() - result.added);
        for (std::size_t i = 0; i < state.pool.size(); ++i) {
            if (!moved[i]) rest.push_back(std::move(state.pool.reviews[i]));
        }
        state.pool.reviews = std::move(rest);
    }
    if (state.open_batch) {
        auto& items = state.open_batch->items;
        items.erase(std::remove_if(items.begin(), items.end(),
                                   [&](const ScoredItem& s) { return labeled_at.count(s.id) > 0; }),
                    items.end());
    }
    if (!state.iterations.empty()) {
        auto& rec = state.iterations.back();
        rec.decisions_ingested += decisions.size();
        rec.labeled_size = state.labeled.size();
        rec.label_counts = state.label_counts();
    }
    return result;
}

std::vector<std::size_t> stratified_folds(const Dataset& d, std::size_t folds, uint64_t seed) {
    if (folds == 0) throw ArgumentError("folds must be at least 1");
    std::array<std::vector<std::size_t>, kNumLabels> groups;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto& r = d.reviews[i];
        if (!r.label) throw ArgumentError("review " + r.id + " has no label");
        groups[index_of(*r.label)].push_back(i);
    }
    Rng rng(seed);
    std::vector<std::size_t> fold_of(d.size());
    std::size_t pos = 0;
    for (auto& g : groups) {
        rng.shuffle(g);
        for (auto i : g) fold_of[i] = pos++ % folds;
    }
    return fold_of;
}

std::vector<AuditEntry> audit_labels(const Dataset& d, const Trainer& trainer, std::size_t folds, uint64_t seed) {
    if (folds < 2) throw ArgumentError("audit needs at least two folds");
    if (folds > d.size()) throw ArgumentError("more folds than reviews");
    std::array<std::size_t, kNumLabels> counts{};
    for (const auto& r : d.reviews) {
        if (!r.label) throw ArgumentError("review " + r.id + " has no label");
        ++counts[index_of(*r.label)];
    }
    const bool leave_one_out = folds == d.size();
    const std::size_t need = leave_one_out ? 2 : folds;
    for (auto l : kAllLabels) {
        const auto n = counts[index_of(l)];
        if (n > 0 && n < need) {
            throw ArgumentError("class " + std::string(to_string(l)) + " has " + std::to_string(n) +
                                " reviews, fewer than " + std::to_string(need));
        }
    }

    const auto fold_of = stratified_folds(d, folds, seed);
    std::vector<AuditEntry> out;
    out.reserve(d.size());
    for (std::size_t f = 0; f < folds; ++f) {
        Dataset train;
        train.meta = d.meta;
        std::vector<std::size_t> held;
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (fold_of[i] == f) {
                held.push_back(i);
            } else {
                train.reviews.push_back(d.reviews[i]);
            }
        }
        if (held.empty()) continue;
        std::unique_ptr<Classifier> model;
        try {
            model = trainer.train(train, mix(seed, f), "audit-fold-" + std::to_string(f));
        } catch (const std::exception& e) {
            throw BackendError("audit fold " + std::to_string(f) + ": training failed: " + e.what());
        }
        std::vector<std::string> texts;
        for (auto i : held) texts.push_back(d.reviews[i].text);
        const auto preds = model->predict(texts);
        for (std::size_t j = 0; j < held.size(); ++j) {
            const auto& r = d.reviews[held[j]];
            out.push_back({r.id, *r.label, preds[j].label, 1.0 - preds[j].prob(*r.label), f});
        }
    }
    std::sort(out.begin(), out.end(), [](const AuditEntry& a, const AuditEntry& b) {
        if (a.misclassified() != b.misclassified()) return a.misclassified();
        if (a.disagreement != b.disagreement) return a.disagreement > b.disagreement;
        return a.id < b.id;
    });
    return out;
}

json to_json(const AuditEntry& e) {
    return {{"id", e.id},
            {"gold", to_string(e.gold)},
            {"predicted", to_string(e.predicted)},
            {"disagreement", e.disagreement},
            {"misclassified", e.misclassified()},
            {"fold", e.fold}};
}

void run_loop(BootstrapState& state, const Trainer& trainer, const BootstrapConfig& config,
              const Annotator& annotator, const std::function<void(const BootstrapState&)>& on_iteration) {
    config.validate();
    for (std::size_t i = 0; i < config.max_iterations; ++i) {
        const auto rec = run_iteration(state, trainer, config.k, config.mode, config.seed);
        const auto decisions = annotator(rec.batch);
        ingest_annotations(state, decisions);
        if (on_iteration) on_iteration(state);
        const auto positives = static_cast<std::size_t>(std::count_if(
            decisions.begin(), decisions.end(), [](const AnnotationDecision& d) { return d.label == Label::DualQuality; }));
        if (rec.batch.items.empty() || positives < config.min_new_positives) break;
    }
}

void save_state(const BootstrapState& state, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "batches");
    save_dataset(state.labeled, dir / "labeled.jsonl");
    save_dataset(state.pool, dir / "pool.jsonl");
    std::string lines;
    for (const auto& r : state.iterations) {
        lines += to_json(r).dump();
        lines += '\n';
        std::string items;
        for (const auto& it : r.batch.items) {
            json j = to_json(it);
            j["iteration"] = r.iteration;
            items += j.dump();
            items += '\n';
        }
        write_file(dir / "batches" / batch_file_name(r.iteration), items);
    }
    write_file(dir / "iterations.jsonl", lines);
    write_file(dir / "open_batch.json", state.open_batch ? to_json(*state.open_batch).dump(2) + "\n" : "null\n");
}

BootstrapState load_state(const std::filesystem::path& dir) {
    BootstrapState s;
    s.labeled = load_dataset(dir / "labeled.jsonl");
    s.pool = load_dataset(dir / "pool.jsonl");
    const auto text = read_file(dir / "iterations.jsonl");
    std::size_t line_no = 0, start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        ++line_no;
        const auto line = text.substr(start, end - start);
        start = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            s.iterations.push_back(iteration_record_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    for (std::size_t i = 0; i < s.iterations.size(); ++i) {
        if (s.iterations[i].iteration != static_cast<int>(i) + 1) {
            throw IntegrityError("iteration records are not consecutive from 1");
        }
    }
    if (std::filesystem::exists(dir / "open_batch.json")) {
        const auto j = json::parse(read_file(dir / "open_batch.json"));
        if (!j.is_null()) s.open_batch = annotation_batch_from_json(j);
    }
    return s;
}

SimulationReport simulate(const SimulationConfig& config) {
    config.bootstrap.validate();
    const auto pool = synthetic::generate_pool(config.pool);
    std::unordered_map<std::string, Label> gold;
    std::size_t planted = 0;
    for (const auto& r : pool.reviews) {
        gold.emplace(r.id, *r.label);
        planted += r.label == Label::DualQuality;
    }
    const auto seed_set = synthetic::generate_seed_set(config.seed_set);
    Dataset positives, negatives;
    for (const auto& r : seed_set.reviews) {
        (r.label == Label::DualQuality ? positives : negatives).reviews.push_back(r);
    }

    SimulationReport rep;
    rep.pool_size = pool.size();
    rep.planted_positives = planted;
    rep.state = make_state(seed_base_dataset(positives, negatives), pool);

    const ProbeTrainer trainer(make_embedding_backend(config.bootstrap.backend), config.bootstrap.few_shot);
    const Annotator oracle = [&](const AnnotationBatch& batch) {
        std::vector<AnnotationDecision> out;
        for (const auto& it : batch.items) {
            out.push_back({it.id, gold.at(it.id), std::nullopt, "oracle", batch.created_at});
        }
        return out;
    };
    run_loop(rep.state, trainer, config.bootstrap, oracle, [&](const BootstrapState& s) {
        const auto& rec = s.iterations.back();
        SimulationIteration it;
        it.iteration = rec.iteration;
        it.batch_size = rec.batch.items.size();
        for (const auto& item : rec.batch.items) it.new_positives += gold.at(item.id) == Label::DualQuality;
        it.cumulative_annotations = (rep.iterations.empty() ? 0 : rep.iterations.back().cumulative_annotations) +
                                    it.batch_size;
        it.cumulative_positives =
            (rep.iterations.empty() ? 0 : rep.iterations.back().cumulative_positives) + it.new_positives;
        rep.iterations.push_back(it);
    });
    if (!rep.iterations.empty()) {
        rep.annotations = rep.iterations.back().cumulative_annotations;
        rep.verified_positives = rep.iterations.back().cumulative_positives;
    }
    rep.random_expected = rep.pool_size == 0 ? 0.0
                                             : static_cast<double>(rep.annotations) * static_cast<double>(planted) /
                                                   static_cast<double>(rep.pool_size);
    rep.enrichment = rep.random_expected > 0.0 ? static_cast<double>(rep.verified_positives) / rep.random_expected : 0.0;
    return rep;
}

json to_json(const SimulationReport& r) {
    json its = json::array();
    for (const auto& it : r.iterations) {
        its.push_back({{"iteration", it.iteration},
                       {"batch_size", it.batch_size},
                       {"new_positives", it.new_positives},
                       {"cumulative_annotations", it.cumulative_annotations},
                       {"cumulative_positives", it.cumulative_positives}});
    }
    return {{"pool_size", r.pool_size},
            {"planted_positives", r.planted_positives},
            {"annotations", r.annotations},
            {"verified_positives", r.verified_positives},
            {"random_expected", r.random_expected},
            {"enrichment", r.enrichment},
            {"iterations", its}};
}

} // namespace dualq
