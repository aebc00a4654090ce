#include "dualq/service.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <thread>

#include "dualq/classify.hpp"
#include "dualq/errors.hpp"
#include "dualq/http.hpp"

// after Eigen: httplib drags in <resolv.h>, whose _res macro collides with Eigen internals
#include <httplib.h>

namespace dualq {

namespace resources {
extern const std::string_view kOpenApiDocument;
}

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kStatusNames = {"unscored", "scored", "queued", "labeled"};

ApiResponse error_response(int status, std::string_view kind, const std::string& message) {
    return {status, {{"error", {{"kind", kind}, {"message", message}}}}};
}

std::optional<std::string> opt_string(const json& j, const char* key) {
    if (auto it = j.find(key); it != j.end() && it->is_string()) return it->get<std::string>();
    return std::nullopt;
}

// One review from an ingest body; the product key may be spelled either way.
StoredReview parse_incoming(const json& j) {
    StoredReview s;
    s.review = review_from_json(j);
    s.product = opt_string(j, "product");
    if (!s.product) s.product = opt_string(j, "product_key");
    return s;
}

json stored_meta_json(const StoredReview& s) {
    json j = {{"flagged", s.flagged}};
    j["dq_probability"] = s.dq_probability ? json(*s.dq_probability) : json(nullptr);
    j["predicted"] = s.predicted ? json(to_string(*s.predicted)) : json(nullptr);
    j["product"] = s.product ? json(*s.product) : json(nullptr);
    return j;
}

void read_stored_meta(const json& j, StoredReview& s) {
    s.flagged = j.value("flagged", false);
    if (auto it = j.find("dq_probability"); it != j.end() && !it->is_null()) s.dq_probability = it->get<double>();
    if (auto p = opt_string(j, "predicted")) s.predicted = label_from_string(*p);
    s.product = opt_string(j, "product");
}

std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

std::string_view to_string(ReviewStatus s) { return kStatusNames[static_cast<std::size_t>(s)]; }

json to_json(const StoredReview& s) {
    json j = to_json(s.review);
    j["status"] = to_string(s.status);
    const auto meta = stored_meta_json(s);
    for (const auto& [k, v] : meta.items()) j[k] = v;
    return j;
}

json to_json(const ProductRollup& p) {
    return {{"product", p.product},
            {"reviews", p.reviews},
            {"flagged", p.flagged},
            {"verified_dual_quality", p.verified_dual_quality},
            {"escalate", p.escalate}};
}

void ServiceConfig::validate() const {
    if (port < 0 || port > 65535) throw ArgumentError("port must be in [0, 65535]");
    if (!(flag_threshold >= 0.0 && flag_threshold <= 1.0)) throw ArgumentError("flag_threshold must be in [0, 1]");
    if (rollup_threshold == 0) throw ArgumentError("rollup_threshold must be at least 1");
    if (threads == 0) throw ArgumentError("threads must be at least 1");
    if (snapshot_every == 0) throw ArgumentError("snapshot_every must be at least 1");
    bootstrap.validate();
}

// ---- record stores ---------------------------------------------------------------

void MemoryRecordStore::append(const json& event) {
    std::lock_guard lock(mutex_);
    events_.push_back(event);
}

void MemoryRecordStore::write_snapshot(const json& state) {
    std::lock_guard lock(mutex_);
    snapshot_ = state;
    events_.clear();
}

std::optional<json> MemoryRecordStore::snapshot() const {
    std::lock_guard lock(mutex_);
    return snapshot_;
}

std::vector<json> MemoryRecordStore::events() const {
    std::lock_guard lock(mutex_);
    return events_;
}

JsonlRecordStore::JsonlRecordStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

void JsonlRecordStore::append(const json& event) {
    std::lock_guard lock(mutex_);
    std::ofstream out(dir_ / "events.jsonl", std::ios::binary | std::ios::app);
    out << event.dump() << '\n';
    out.flush();
    if (!out) throw Error("cannot append to " + (dir_ / "events.jsonl").string());
}

void JsonlRecordStore::write_snapshot(const json& state) {
    std::lock_guard lock(mutex_);
    const auto tmp = dir_ / "snapshot.json.tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << state.dump() << '\n';
        if (!out) throw Error("cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, dir_ / "snapshot.json");
    // a crash before this truncation is harmless: replay skips events up to the snapshot's seq
    std::ofstream(dir_ / "events.jsonl", std::ios::binary | std::ios::trunc);
}

std::optional<json> JsonlRecordStore::snapshot() const {
    std::lock_guard lock(mutex_);
    const auto p = dir_ / "snapshot.json";
    if (!std::filesystem::exists(p)) return std::nullopt;
    try {
        return json::parse(read_text(p));
    } catch (const json::exception& e) {
        throw ParseError("corrupt snapshot " + p.string() + ": " + e.what());
    }
}

std::vector<json> JsonlRecordStore::events() const {
    std::lock_guard lock(mutex_);
    std::vector<json> out;
    std::ifstream in(dir_ / "events.jsonl", std::ios::binary);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception&) {
            // a torn final line from a crash mid-append is dropped; anything earlier is corruption
            if (in.peek() == std::char_traits<char>::eof()) break;
            throw ParseError("corrupt event log", n);
        }
    }
    return out;
}

// ---- service ---------------------------------------------------------------------

Service::Service(ServiceConfig config, std::unique_ptr<RecordStore> store, std::shared_ptr<const Classifier> model,
                 std::shared_ptr<const Trainer> trainer)
    : config_(std::move(config)),
      store_(std::move(store)),
      model_(std::move(model)),
      trainer_(std::move(trainer)),
      token_(http::env_or_empty(config_.auth_token_env)) {
    config_.validate();
    if (!store_) throw ArgumentError("service needs a record store");
    if (auto snap = store_->snapshot()) load_state_json(*snap);
    for (const auto& e : store_->events()) {
        if (e.value("seq", uint64_t{0}) <= seq_) continue;
        apply(e);
        seq_ = e.at("seq").get<uint64_t>();
    }
}

bool Service::authorized(const std::string& header) const {
    if (token_.empty()) return true;
    const std::string expected = "Bearer " + token_;
    if (header.size() != expected.size()) return false;
    unsigned char diff = 0;
    for (std::size_t i = 0; i < header.size(); ++i) diff |= static_cast<unsigned char>(header[i] ^ expected[i]);
    return diff == 0;
}

json Service::state_json() const {
    json meta = json::object();
    for (const auto& [id, s] : reviews_) meta[id] = stored_meta_json(s);
    json labeled = json::array(), pool = json::array(), iterations = json::array();
    for (const auto& r : state_.labeled.reviews) labeled.push_back(to_json(r));
    for (const auto& r : state_.pool.reviews) pool.push_back(to_json(r));
    for (const auto& r : state_.iterations) iterations.push_back(to_json(r));
    return {{"seq", seq_},
            {"order", order_},
            {"meta", meta},
            {"labeled", labeled},
            {"pool", pool},
            {"iterations", iterations},
            {"open_batch", state_.open_batch ? to_json(*state_.open_batch) : json(nullptr)},
            {"decisions_total", decisions_total_}};
}

void Service::load_state_json(const json& j) {
    try {
        seq_ = j.at("seq").get<uint64_t>();
        order_ = j.at("order").get<std::vector<std::string>>();
        for (const auto& r : j.at("labeled")) state_.labeled.reviews.push_back(review_from_json(r));
        for (const auto& r : j.at("pool")) state_.pool.reviews.push_back(review_from_json(r));
        for (const auto& r : j.at("iterations")) state_.iterations.push_back(iteration_record_from_json(r));
        if (!j.at("open_batch").is_null()) state_.open_batch = annotation_batch_from_json(j.at("open_batch"));
        decisions_total_ = j.at("decisions_total").get<std::size_t>();
        for (const auto* part : {&state_.labeled, &state_.pool}) {
            for (const auto& r : part->reviews) reviews_[r.id].review = r;
        }
        for (const auto& [id, m] : j.at("meta").items()) read_stored_meta(m, reviews_.at(id));
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed service snapshot: ") + e.what());
    }
    for (const auto& id : order_) refresh_status(id);
}

void Service::refresh_status(const std::string& id) {
    auto& s = reviews_.at(id);
    if (s.review.label) {
        s.status = ReviewStatus::Labeled;
        return;
    }
    if (state_.open_batch) {
        for (const auto& it : state_.open_batch->items) {
            if (it.id == id) {
                s.status = ReviewStatus::Queued;
                return;
            }
        }
    }
    s.status = s.dq_probability ? ReviewStatus::Scored : ReviewStatus::Unscored;
}

void Service::apply(const json& e) {
    const auto type = e.at("type").get<std::string>();
    if (type == "ingest") {
        for (const auto& j : e.at("reviews")) {
            StoredReview s;
            s.review = review_from_json(j.at("review"));
            read_stored_meta(j.at("meta"), s);
            const auto id = s.review.id;
            if (reviews_.count(id)) continue;
            (s.review.label ? state_.labeled : state_.pool).reviews.push_back(s.review);
            order_.push_back(id);
            reviews_.emplace(id, std::move(s));
            refresh_status(id);
        }
    } else if (type == "iteration") {
        const auto previous = state_.open_batch;
        auto rec = iteration_record_from_json(e.at("record"));
        auto batch = rec.batch;
        auto& items = batch.items;
        items.erase(std::remove_if(items.begin(), items.end(),
                                   [&](const ScoredItem& it) {
                                       const auto found = reviews_.find(it.id);
                                       return found == reviews_.end() || found->second.review.label.has_value();
                                   }),
                    items.end());
        state_.iterations.push_back(std::move(rec));
        state_.open_batch = std::move(batch);
        if (previous) {
            for (const auto& it : previous->items) refresh_status(it.id);
        }
        for (const auto& it : state_.open_batch->items) refresh_status(it.id);
    } else if (type == "decision") {
        const auto d = annotation_decision_from_json(e.at("decision"));
        const std::array<AnnotationDecision, 1> one = {d};
        ingest_annotations(state_, one);
        ++decisions_total_;
        for (auto it = state_.labeled.reviews.rbegin(); it != state_.labeled.reviews.rend(); ++it) {
            if (it->id == d.review_id) {
                reviews_.at(d.review_id).review = *it;
                break;
            }
        }
        refresh_status(d.review_id);
    } else {
        throw ParseError("unknown event type \"" + type + "\"");
    }
}

void Service::commit(const json& event) {
    json e = event;
    e["seq"] = seq_ + 1;
    e["at"] = utc_timestamp();
    store_->append(e);
    apply(e);
    ++seq_;
    if (++events_since_snapshot_ >= config_.snapshot_every) write_snapshot_locked();
}

void Service::write_snapshot_locked() {
    store_->write_snapshot(state_json());
    events_since_snapshot_ = 0;
}

void Service::write_snapshot() {
    std::unique_lock lock(mutex_);
    write_snapshot_locked();
}

ApiResponse Service::classify(const json& body) const {
    const json* texts = &body;
    if (body.is_object() && body.contains("texts")) texts = &body["texts"];
    if (!texts->is_array()) return error_response(400, "argument_error", "expected a list of review texts");
    if (texts->empty()) return error_response(400, "argument_error", "no texts to classify");
    std::vector<std::string> in;
    in.reserve(texts->size());
    for (std::size_t i = 0; i < texts->size(); ++i) {
        const auto& t = (*texts)[i];
        if (!t.is_string() || t.get<std::string>().empty()) {
            return error_response(400, "argument_error", "text " + std::to_string(i) + " is not a non-empty string");
        }
        in.push_back(t.get<std::string>());
    }
    if (!model_) return error_response(409, "state_error", "no active model configured");
    const auto preds = model_->predict(in);
    json out = json::array();
    for (const auto& p : preds) {
        json j = to_json(p);
        j["dq_probability"] = p.prob(Label::DualQuality);
        j["flagged"] = p.prob(Label::DualQuality) >= config_.flag_threshold;
        out.push_back(std::move(j));
    }
    return {200, out};
}

ApiResponse Service::ingest(const json& body) {
    const json* list = &body;
    if (body.is_object() && body.contains("reviews")) list = &body["reviews"];
    if (!list->is_array()) return error_response(400, "argument_error", "expected {\"reviews\": [...]}");
    std::vector<StoredReview> incoming;
    incoming.reserve(list->size());
    for (std::size_t i = 0; i < list->size(); ++i) {
        try {
            incoming.push_back(parse_incoming((*list)[i]));
        } catch (const Error& e) {
            return error_response(400, e.kind(), "review " + std::to_string(i) + ": " + e.what());
        }
    }

    // score outside the lock; duplicates are scored needlessly but never stored twice
    if (model_ && !incoming.empty()) {
        std::vector<std::string> texts;
        for (const auto& s : incoming) texts.push_back(s.review.text);
        const auto preds = model_->predict(texts);
        for (std::size_t i = 0; i < incoming.size(); ++i) {
            const double p = preds[i].prob(Label::DualQuality);
            incoming[i].dq_probability = p;
            incoming[i].predicted = preds[i].label;
            incoming[i].flagged = p >= config_.flag_threshold;
        }
    }

    std::unique_lock lock(mutex_);
    json records = json::array();
    std::set<std::string> batch_ids;
    json new_ids = json::array();
    const auto now = utc_timestamp();
    for (auto& s : incoming) {
        if (reviews_.count(s.review.id) || !batch_ids.insert(s.review.id).second) continue;
        if (s.review.label) {
            s.review.provenance.push_back({"service", now, "ingest", std::nullopt, s.review.label, "labeled on ingest"});
        }
        records.push_back({{"review", to_json(s.review)}, {"meta", stored_meta_json(s)}});
        new_ids.push_back(s.review.id);
    }
    if (!records.empty()) commit({{"type", "ingest"}, {"reviews", records}});
    return {200,
            {{"received", incoming.size()},
             {"new", records.size()},
             {"duplicates", incoming.size() - records.size()},
             {"ids", new_ids}}};
}

ApiResponse Service::queue(std::optional<std::size_t> limit) const {
    std::shared_lock lock(mutex_);
    json items = json::array();
    int iteration = 0;
    if (state_.open_batch) {
        iteration = state_.open_batch->iteration;
        const auto& batch = state_.open_batch->items;
        const auto n = std::min(batch.size(), limit.value_or(batch.size()));
        for (std::size_t i = 0; i < n; ++i) {
            const auto& it = batch[i];
            const auto& s = reviews_.at(it.id);
            items.push_back({{"id", it.id},
                             {"text", it.text},
                             {"dq_probability", it.dq_probability},
                             {"source", to_string(s.review.source)},
                             {"product", s.product ? json(*s.product) : json(nullptr)},
                             {"position", i}});
        }
    }
    return {200, {{"iteration", iteration}, {"items", items}}};
}

ApiResponse Service::label(const std::string& id, const json& body) {
    AnnotationDecision d;
    try {
        if (!body.is_object()) throw ParseError("expected a JSON object");
        d.review_id = id;
        d.label = label_from_string(body.at("label").get<std::string>());
        if (auto it = body.find("subtype"); it != body.end() && !it->is_null()) {
            d.subtype = subtype_from_string(it->get<std::string>());
        }
        d.annotator = body.value("annotator", std::string("anonymous"));
        validate(d);
    } catch (const Error& e) {
        return error_response(400, e.kind(), e.what());
    } catch (const json::exception& e) {
        return error_response(400, "parse_error", e.what());
    }

    std::unique_lock lock(mutex_);
    const auto found = reviews_.find(id);
    if (found == reviews_.end()) return error_response(404, "not_found", "unknown review id " + id);
    if (found->second.status != ReviewStatus::Queued) {
        return error_response(409, "conflict",
                              "review " + id + " is " + std::string(to_string(found->second.status)) +
                                  ", not queued");
    }
    d.timestamp = utc_timestamp();
    commit({{"type", "decision"}, {"decision", to_json(d)}});
    return {200, {{"decision", to_json(d)}, {"review", to_json(reviews_.at(id))}}};
}

ApiResponse Service::iterate(const json& body) {
    if (!trainer_) return error_response(409, "state_error", "no trainer configured");
    if (iterating_.exchange(true)) return error_response(409, "busy", "an iteration is already running");
    struct Reset {
        std::atomic<bool>& flag;
        ~Reset() { flag = false; }
    } reset{iterating_};

    auto k = config_.bootstrap.k;
    auto mode = config_.bootstrap.mode;
    try {
        if (body.is_object()) {
            k = body.value("k", k);
            if (auto m = opt_string(body, "mode")) mode = training_mode_from_string(*m);
        }
        if (k == 0) throw ArgumentError("k must be at least 1");
    } catch (const Error& e) {
        return error_response(400, e.kind(), e.what());
    } catch (const json::exception& e) {
        return error_response(400, "parse_error", e.what());
    }

    BootstrapState copy;
    {
        std::shared_lock lock(mutex_);
        copy = state_;
    }
    IterationRecord rec;
    try {
        rec = run_iteration(copy, *trainer_, k, mode, config_.bootstrap.seed);
    } catch (const StateError& e) {
        return error_response(409, e.kind(), e.what());
    } catch (const Error& e) {
        return error_response(500, e.kind(), e.what());
    }

    std::unique_lock lock(mutex_);
    commit({{"type", "iteration"}, {"record", to_json(rec)}});
    json out = to_json(state_.iterations.back());
    out["queued"] = state_.open_batch ? state_.open_batch->items.size() : 0;
    return {200, out};
}

ApiResponse Service::iterations() const {
    std::shared_lock lock(mutex_);
    json its = json::array();
    for (const auto& r : state_.iterations) {
        json j = to_json(r);
        j["batch_size"] = r.batch.items.size();
        j["created_at"] = r.batch.created_at;
        j.erase("batch");
        its.push_back(std::move(j));
    }
    const auto counts = state_.label_counts();
    json labels = json::object();
    for (auto l : kAllLabels) labels[std::string(to_string(l))] = counts[index_of(l)];
    return {200,
            {{"iterations", its},
             {"decisions_total", decisions_total_},
             {"labeled_size", state_.labeled.size()},
             {"label_counts", labels},
             {"queue_remaining", state_.open_batch ? state_.open_batch->items.size() : 0}}};
}

ApiResponse Service::rollup() const {
    std::shared_lock lock(mutex_);
    std::map<std::string, ProductRollup> by_product;
    for (const auto& id : order_) {
        const auto& s = reviews_.at(id);
        if (!s.product) continue;
        auto& p = by_product[*s.product];
        p.product = *s.product;
        ++p.reviews;
        p.flagged += s.flagged;
        p.verified_dual_quality += s.review.label == Label::DualQuality;
    }
    std::vector<ProductRollup> rows;
    for (auto& [_, p] : by_product) {
        p.escalate = p.flagged >= config_.rollup_threshold;
        rows.push_back(p);
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ProductRollup& a, const ProductRollup& b) { return a.flagged > b.flagged; });
    json out = json::array();
    for (const auto& r : rows) out.push_back(to_json(r));
    return {200, {{"threshold", config_.rollup_threshold}, {"products", out}}};
}

ApiResponse Service::metrics() const {
    std::shared_lock lock(mutex_);
    std::vector<Label> gold, pred;
    std::array<std::size_t, 4> by_status{};
    std::size_t flagged = 0;
    for (const auto& id : order_) {
        const auto& s = reviews_.at(id);
        ++by_status[static_cast<std::size_t>(s.status)];
        flagged += s.flagged;
        if (s.review.label && s.predicted) {
            gold.push_back(*s.review.label);
            pred.push_back(*s.predicted);
        }
    }
    json status = json::object();
    for (std::size_t i = 0; i < by_status.size(); ++i) status[std::string(kStatusNames[i])] = by_status[i];
    json out = {{"reviews", order_.size()},
                {"status", status},
                {"flagged", flagged},
                {"flag_threshold", config_.flag_threshold},
                {"decisions_total", decisions_total_},
                {"iterations", state_.iterations.size()},
                {"model_id", model_ ? json(model_->model_id()) : json(nullptr)},
                {"evaluated", gold.size()}};
    out["report"] = gold.empty() ? json(nullptr) : to_json(evaluate(gold, pred));
    return {200, out};
}

ApiResponse Service::review(const std::string& id) const {
    std::shared_lock lock(mutex_);
    const auto found = reviews_.find(id);
    if (found == reviews_.end()) return error_response(404, "not_found", "unknown review id " + id);
    return {200, to_json(found->second)};
}

ApiResponse Service::ui_config() const {
    json labels = json::array(), shortcuts = json::object();
    for (std::size_t i = 0; i < kAllLabels.size(); ++i) {
        labels.push_back(to_string(kAllLabels[i]));
        shortcuts[std::to_string(i + 1)] = to_string(kAllLabels[i]);
    }
    return {200,
            {{"api_base", ""},
             {"labels", labels},
             {"shortcuts", shortcuts},
             {"subtypes", subtype_names()},
             {"subtype_requires", to_string(Label::OtherProblems)},
             {"flag_threshold", config_.flag_threshold},
             {"k", config_.bootstrap.k},
             {"rollup_threshold", config_.rollup_threshold},
             {"auth_required", auth_enabled()},
             {"endpoints",
              {{"queue", "/annotation/queue"},
               {"label", "/annotation/{id}/label"},
               {"iterations", "/iterations"},
               {"rollup", "/products/rollup"},
               {"iterate", "/bootstrap/iterate"}}}}};
}

std::string_view openapi_document() { return resources::kOpenApiDocument; }

// ---- HTTP binding ----------------------------------------------------------------

struct HttpServer::Impl {
    Service& service;
    httplib::Server server;
    int port = -1;

    explicit Impl(Service& s) : service(s) {}
};

namespace {

void send(httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
}

// Parses the request body; an empty body is an empty object.
std::optional<json> body_json(const httplib::Request& req, httplib::Response& res) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::exception& e) {
        send(res, error_response(400, "parse_error", std::string("request body is not JSON: ") + e.what()));
        return std::nullopt;
    }
}

template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const Error& e) {
            send(res, error_response(500, e.kind(), e.what()));
        } catch (const std::exception& e) {
            send(res, error_response(500, "error", e.what()));
        }
    };
}

} // namespace

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
    auto& svr = impl_->server;
    auto& s = service;
    const auto threads = s.config().threads;
    svr.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };

    svr.set_pre_routing_handler([&s](const httplib::Request& req, httplib::Response& res) {
        static const std::set<std::string> open = {"/health", "/openapi.json", "/ui-config"};
        if (open.count(req.path) || s.authorized(req.get_header_value("Authorization"))) {
            return httplib::Server::HandlerResponse::Unhandled;
        }
        res.set_header("WWW-Authenticate", "Bearer");
        send(res, error_response(401, "unauthorized", "missing or invalid bearer token"));
        return httplib::Server::HandlerResponse::Handled;
    });

    svr.Get("/health", guarded([](const httplib::Request&, httplib::Response& res) {
        send(res, {200, {{"status", "ok"}}});
    }));
    svr.Get("/openapi.json", guarded([](const httplib::Request&, httplib::Response& res) {
        res.set_content(std::string(openapi_document()), "application/json");
    }));
    svr.Get("/ui-config", guarded([&s](const httplib::Request&, httplib::Response& res) { send(res, s.ui_config()); }));
    svr.Post("/classify", guarded([&s](const httplib::Request& req, httplib::Response& res) {
        if (auto b = body_json(req, res)) send(res, s.classify(*b));
    }));
    svr.Post("/reviews:batch", guarded([&s](const httplib::Request& req, httplib::Response& res) {
        if (auto b = body_json(req, res)) send(res, s.ingest(*b));
    }));
    svr.Get(R"(/reviews/([^/]+))", guarded([&s](const httplib::Request& req, httplib::Response& res) {
        send(res, s.review(req.matches[1]));
    }));
    svr.Get("/annotation/queue", guarded([&s](const httplib::Request& req, httplib::Response& res) {
        std::optional<std::size_t> limit;
        if (req.has_param("limit")) {
            try {
                limit = std::stoul(req.get_param_value("limit"));
            } catch (const std::exception&) {
                send(res, error_response(400, "argument_error", "limit must be a non-negative integer"));
                return;
            }
        }
        send(res, s.queue(limit));
    }));
    svr.Post(R"(/annotation/([^/]+)/label)", guarded([&s](const httplib::Request& req, httplib::Response& res) {
        if (auto b = body_json(req, res)) send(res, s.label(req.matches[1], *b));
    }));
    svr.Post("/bootstrap/iterate", guarded([&s](const httplib::Request& req, httplib::Response& res) {
        if (auto b = body_json(req, res)) send(res, s.iterate(*b));
    }));
    svr.Get("/iterations", guarded([&s](const httplib::Request&, httplib::Response& res) { send(res, s.iterations()); }));
    svr.Get("/products/rollup",
            guarded([&s](const httplib::Request&, httplib::Response& res) { send(res, s.rollup()); }));
    svr.Get("/metrics", guarded([&s](const httplib::Request&, httplib::Response& res) { send(res, s.metrics()); }));
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    auto& svr = impl_->server;
    impl_->port = port == 0 ? svr.bind_to_any_port(host) : (svr.bind_to_port(host, port) ? port : -1);
    if (impl_->port < 0) throw TransportError("cannot bind " + host + ":" + std::to_string(port));
    return impl_->port;
}

void HttpServer::listen() {
    if (impl_->port < 0) throw StateError("bind() must succeed before listen()");
    impl_->server.listen_after_bind();
}

void HttpServer::stop() {
    if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

std::unique_ptr<Service> make_service(const ServiceConfig& config) {
    config.validate();
    std::shared_ptr<const Classifier> model;
    if (!config.model_path.empty()) model = load_classifier_file(config.model_path);
    auto trainer =
        std::make_shared<ProbeTrainer>(make_embedding_backend(config.bootstrap.backend), config.bootstrap.few_shot);
    return std::make_unique<Service>(config, std::make_unique<JsonlRecordStore>(config.data_dir), std::move(model),
                                     std::move(trainer));
}

} // namespace dualq
