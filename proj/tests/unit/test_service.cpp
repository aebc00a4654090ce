#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <set>
#include <thread>

#include "dualq/errors.hpp"
#include "dualq/rng.hpp"
#include "dualq/service.hpp"

// after the Eigen-based headers, see stub_http.hpp
#include <httplib.h>

using namespace dualq;
using nlohmann::json;

namespace {

// Reads the dual-quality probability from a "p=0.xx" prefix; anything else scores 0.1.
class PrefixModel final : public Classifier {
public:
    std::vector<Prediction> predict(std::span<const std::string> texts) const override {
        std::vector<Prediction> out;
        for (const auto& t : texts) {
            double p = 0.1;
            if (t.rfind("p=", 0) == 0) p = std::stod(t.substr(2, t.find(' ') - 2));
            out.push_back(make_prediction({p, 0.0, 1.0 - p}, "prefix"));
        }
        return out;
    }
    std::string model_id() const override { return "prefix"; }
    json snapshot() const override { return {{"kind", "prefix"}}; }
};

class PrefixTrainer final : public Trainer {
public:
    std::unique_ptr<Classifier> train(const Dataset&, uint64_t, const std::string&) const override {
        return std::make_unique<PrefixModel>();
    }
    json descriptor() const override { return {{"kind", "prefix"}}; }
};

// Holds training until released, so a second iterate request can race the first.
class GateTrainer final : public Trainer {
public:
    std::unique_ptr<Classifier> train(const Dataset&, uint64_t, const std::string&) const override {
        std::unique_lock lock(m);
        entered = true;
        cv.notify_all();
        cv.wait(lock, [&] { return open; });
        return std::make_unique<PrefixModel>();
    }
    json descriptor() const override { return {{"kind", "gate"}}; }
    void wait_entered() const {
        std::unique_lock lock(m);
        cv.wait(lock, [&] { return entered; });
    }
    void release() const {
        std::lock_guard lock(m);
        open = true;
        cv.notify_all();
    }
    mutable std::mutex m;
    mutable std::condition_variable cv;
    mutable bool entered = false;
    mutable bool open = false;
};

ServiceConfig test_config() {
    ServiceConfig c;
    c.auth_token_env = "DUALQ_TEST_UNSET_TOKEN_VARIABLE";
    c.threads = 8;
    return c;
}

std::unique_ptr<Service> make_test_service(ServiceConfig c = test_config(), bool with_model = true,
                                           std::shared_ptr<const Trainer> trainer = std::make_shared<PrefixTrainer>()) {
    return std::make_unique<Service>(c, std::make_unique<MemoryRecordStore>(),
                                     with_model ? std::make_shared<PrefixModel>() : nullptr, std::move(trainer));
}

json review_json(const std::string& id, double p, std::optional<std::string> product = std::nullopt,
                 std::optional<std::string> label = std::nullopt) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "p=%.4f", p);
    json j = {{"id", id}, {"text", std::string(buf) + " opinia " + id}};
    if (product) j["product"] = *product;
    if (label) j["label"] = *label;
    return j;
}

// Two labeled seeds and n pool reviews with distinct-ish scores (some ties on purpose).
json seeded_batch(std::size_t n) {
    json reviews = json::array();
    reviews.push_back(review_json("seed-dq", 0.9, std::nullopt, "dual quality"));
    reviews.push_back(review_json("seed-st", 0.1, std::nullopt, "standard"));
    Rng rng(12);
    for (std::size_t i = 0; i < n; ++i) {
        reviews.push_back(review_json("r" + std::to_string(i), static_cast<double>(rng.below(100)) / 100.0));
    }
    return {{"reviews", reviews}};
}

struct Running {
    std::unique_ptr<Service> service;
    HttpServer server;
    std::thread thread;
    int port;

    explicit Running(std::unique_ptr<Service> s)
        : service(std::move(s)), server(*service), port(server.bind("127.0.0.1", 0)) {
        thread = std::thread([this] { server.listen(); });
        httplib::Client probe("127.0.0.1", port);
        for (int i = 0; i < 200; ++i) {
            if (auto r = probe.Get("/health"); r && r->status == 200) break;
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
    }
    ~Running() {
        server.stop();
        thread.join();
    }
    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(30, 0);
        return c;
    }
};

json post(const httplib::Client& cc, const std::string& path, const json& body, int* status = nullptr) {
    auto& c = const_cast<httplib::Client&>(cc);
    auto r = c.Post(path, body.dump(), "application/json");
    REQUIRE(r);
    if (status) *status = r->status;
    return json::parse(r->body);
}

json get(const httplib::Client& cc, const std::string& path, int* status = nullptr) {
    auto& c = const_cast<httplib::Client&>(cc);
    auto r = c.Get(path);
    REQUIRE(r);
    if (status) *status = r->status;
    return json::parse(r->body);
}

} // namespace

TEST_SUITE("service") {

TEST_CASE("classify contract") {
    auto s = make_test_service();
    auto one = s->classify(json::array({"p=0.7 opinia"}));
    CHECK(one.status == 200);
    REQUIRE(one.body.size() == 1);
    CHECK(one.body[0]["flagged"] == true);
    CHECK(one.body[0]["dq_probability"] == doctest::Approx(0.7));

    CHECK(s->classify(json::array()).status == 400);
    CHECK(s->classify(json{{"texts", json::array()}}).status == 400);
    CHECK(s->classify(json::array({1, 2})).status == 400);
    CHECK(s->classify(json::object()).status == 400);

    json many = json::array();
    for (int i = 0; i < 1000; ++i) many.push_back("p=" + std::to_string((i % 100) / 100.0) + " t");
    const auto res = s->classify(json{{"texts", many}});
    REQUIRE(res.body.size() == 1000);
    for (int i = 0; i < 1000; ++i) {
        CHECK(res.body[i]["dq_probability"].get<double>() == doctest::Approx((i % 100) / 100.0));
    }

    auto no_model = make_test_service(test_config(), false);
    CHECK(no_model->classify(json::array({"x"})).status == 409);
}

TEST_CASE("idempotent ingest") {
    auto s = make_test_service();
    const auto batch = seeded_batch(20);
    const auto first = s->ingest(batch);
    CHECK(first.status == 200);
    CHECK(first.body["new"] == 22);
    const auto second = s->ingest(batch);
    CHECK(second.body["new"] == 0);
    CHECK(second.body["duplicates"] == 22);
    CHECK(s->metrics().body["reviews"] == 22);

    // duplicate inside one body counts once
    const json dup = {{"reviews", json::array({review_json("z", 0.2), review_json("z", 0.3)})}};
    CHECK(s->ingest(dup).body["new"] == 1);

    CHECK(s->ingest(json{{"reviews", json::array({{{"id", "no-text"}}})}}).status == 400);
    CHECK(s->ingest(json{{"reviews", json::array({{{"id", "bad"}, {"text", "x"}, {"label", "meh"}}})}}).status ==
          400);
    CHECK(s->ingest(json("nope")).status == 400);

    const auto stored = s->review("r3").body;
    CHECK(stored["status"] == "scored");
    CHECK(s->review("seed-dq").body["status"] == "labeled");
    CHECK(s->review("missing").status == 404);

    auto unscored = make_test_service(test_config(), false);
    unscored->ingest(batch);
    CHECK(unscored->review("r3").body["status"] == "unscored");
    CHECK(unscored->review("r3").body["flagged"] == false);
}

TEST_CASE("queue after an iteration is sorted and bounded by k") {
    auto s = make_test_service();
    s->ingest(seeded_batch(1000));
    const auto it = s->iterate(json{{"k", 200}});
    REQUIRE(it.status == 200);
    CHECK(it.body["iteration"] == 1);
    CHECK(it.body["pool_scored"] == 1000);
    const auto q = s->queue(std::nullopt).body;
    const auto& items = q["items"];
    REQUIRE(items.size() == 200);
    for (std::size_t i = 1; i < items.size(); ++i) {
        const double a = items[i - 1]["dq_probability"], b = items[i]["dq_probability"];
        CHECK(a >= b);
        if (a == b) CHECK(items[i - 1]["id"].get<std::string>() < items[i]["id"].get<std::string>());
        CHECK(items[i]["position"] == i);
    }
    CHECK(s->queue(5).body["items"].size() == 5);
    CHECK(s->review(items[0]["id"]).body["status"] == "queued");
}

TEST_CASE("label endpoint: 404, 409 and forwarding to ingestion") {
    auto s = make_test_service();
    s->ingest(seeded_batch(30));
    CHECK(s->label("r1", {{"label", "standard"}}).status == 409);  // not queued yet
    s->iterate(json{{"k", 10}});
    const auto head = s->queue(std::nullopt).body["items"][0]["id"].get<std::string>();

    CHECK(s->label("ghost", {{"label", "standard"}}).status == 404);
    CHECK(s->label(head, {{"label", "meh"}}).status == 400);
    CHECK(s->label(head, {{"label", "standard"}, {"subtype", "counterfeit"}}).status == 400);
    CHECK(s->label(head, json::array()).status == 400);

    const auto ok = s->label(head, {{"label", "other problems"}, {"subtype", "counterfeit"}, {"annotator", "ann1"}});
    REQUIRE(ok.status == 200);
    CHECK(ok.body["review"]["status"] == "labeled");
    CHECK(ok.body["review"]["subtype"] == "counterfeit");
    CHECK(s->label(head, {{"label", "standard"}}).status == 409);
    CHECK(s->label("seed-dq", {{"label", "standard"}}).status == 409);

    const auto its = s->iterations().body;
    CHECK(its["decisions_total"] == 1);
    CHECK(its["iterations"][0]["decisions_ingested"] == 1);
    CHECK(its["queue_remaining"] == 9);
    CHECK(s->queue(std::nullopt).body["items"].size() == 9);
}

TEST_CASE("iterate preconditions and mutual exclusion") {
    auto lonely = make_test_service();
    lonely->ingest(json{{"reviews", json::array({review_json("a", 0.9, std::nullopt, "dual quality"),
                                                 review_json("b", 0.2)})}});
    CHECK(lonely->iterate(json::object()).status == 409);
    CHECK(lonely->iterate(json{{"k", 0}}).status == 400);
    CHECK(lonely->iterate(json{{"mode", "quaternary"}}).status == 400);

    auto gate = std::make_shared<GateTrainer>();
    auto s = make_test_service(test_config(), true, gate);
    s->ingest(seeded_batch(10));
    auto first = std::async(std::launch::async, [&] { return s->iterate(json::object()); });
    gate->wait_entered();
    const auto second = s->iterate(json::object());
    CHECK(second.status == 409);
    CHECK(second.body["error"]["kind"] == "busy");
    gate->release();
    CHECK(first.get().status == 200);
    CHECK(s->iterate(json::object()).status == 200);
    CHECK(s->iterations().body["iterations"].size() == 2);
}

TEST_CASE("product rollup escalation threshold") {
    auto s = make_test_service();
    json reviews = json::array();
    for (int i = 0; i < 3; ++i) reviews.push_back(review_json("a" + std::to_string(i), 0.8, "prod-a"));
    for (int i = 0; i < 2; ++i) reviews.push_back(review_json("b" + std::to_string(i), 0.8, "prod-b"));
    reviews.push_back(review_json("b-low", 0.2, "prod-b"));
    reviews.push_back(review_json("no-product", 0.9));
    s->ingest(json{{"reviews", reviews}});
    const auto r = s->rollup().body;
    CHECK(r["threshold"] == 3);
    REQUIRE(r["products"].size() == 2);
    CHECK(r["products"][0]["product"] == "prod-a");
    CHECK(r["products"][0]["flagged"] == 3);
    CHECK(r["products"][0]["escalate"] == true);
    CHECK(r["products"][1]["flagged"] == 2);
    CHECK(r["products"][1]["reviews"] == 3);
    CHECK(r["products"][1]["escalate"] == false);

    // a stricter flag threshold removes the flags altogether
    auto strict_cfg = test_config();
    strict_cfg.flag_threshold = 0.85;
    auto strict = make_test_service(strict_cfg);
    strict->ingest(json{{"reviews", reviews}});
    CHECK(strict->rollup().body["products"][0]["escalate"] == false);
}

TEST_CASE("metrics report the active model against human labels") {
    auto s = make_test_service();
    CHECK(s->metrics().body["report"].is_null());
    s->ingest(seeded_batch(10));
    const auto m = s->metrics().body;
    CHECK(m["evaluated"] == 2);
    CHECK(m["report"]["accuracy"] == doctest::Approx(1.0));
    CHECK(m["model_id"] == "prefix");
    CHECK(m["status"]["labeled"] == 2);
    CHECK(m["status"]["scored"] == 10);
}

TEST_CASE("ui-config and openapi document") {
    auto s = make_test_service();
    const auto ui = s->ui_config().body;
    CHECK(ui["labels"] == json::array({"dual quality", "other problems", "standard"}));
    CHECK(ui["shortcuts"]["1"] == "dual quality");
    CHECK(ui["shortcuts"]["3"] == "standard");
    CHECK(ui["subtypes"].size() == subtype_names().size());
    CHECK(ui["auth_required"] == false);
    const auto doc = json::parse(openapi_document());
    for (const char* path : {"/classify", "/reviews:batch", "/annotation/queue", "/annotation/{id}/label",
                             "/bootstrap/iterate", "/iterations", "/products/rollup", "/metrics", "/ui-config"}) {
        CHECK_MESSAGE(doc["paths"].contains(path), path);
    }
}

TEST_CASE("event log and snapshot recovery") {
    const auto dir = std::filesystem::temp_directory_path() / "dualq-test-service-store";
    std::filesystem::remove_all(dir);
    auto cfg = test_config();
    cfg.snapshot_every = 3;
    auto open = [&] {
        return std::make_unique<Service>(cfg, std::make_unique<JsonlRecordStore>(dir), std::make_shared<PrefixModel>(),
                                         std::make_shared<PrefixTrainer>());
    };
    json queue_before, iterations_before;
    {
        auto s = open();
        s->ingest(seeded_batch(40));
        s->iterate(json{{"k", 8}});
        const auto q = s->queue(std::nullopt).body["items"];
        s->label(q[0]["id"], {{"label", "dual quality"}});
        s->label(q[1]["id"], {{"label", "standard"}});
        s->label(q[2]["id"], {{"label", "other problems"}, {"subtype", "other:zapach"}});
        s->ingest(json{{"reviews", json::array({review_json("late", 0.5)})}});
        queue_before = s->queue(std::nullopt).body;
        iterations_before = s->iterations().body;
    }
    CHECK(std::filesystem::exists(dir / "snapshot.json"));
    {
        auto s = open();
        CHECK(s->queue(std::nullopt).body == queue_before);
        CHECK(s->iterations().body == iterations_before);
        CHECK(s->review("late").body["status"] == "scored");
        CHECK(s->review(queue_before["items"][0]["id"]).body["status"] == "queued");
    }
    // a torn trailing line (crash mid-append) is ignored
    {
        std::ofstream out(dir / "events.jsonl", std::ios::app);
        out << "{\"type\": \"decis";
    }
    CHECK(open()->iterations().body == iterations_before);
    std::filesystem::remove_all(dir);
}

TEST_CASE("HTTP contract against the running service") {
    Running run(make_test_service());
    auto c = run.client();
    int st = 0;

    CHECK(get(c, "/health", &st)["status"] == "ok");
    CHECK(json::parse(c.Get("/openapi.json")->body)["openapi"] == "3.0.3");
    CHECK(get(c, "/ui-config", &st)["labels"].size() == 3);

    CHECK(post(c, "/reviews:batch", seeded_batch(300), &st)["new"] == 302);
    CHECK(post(c, "/reviews:batch", seeded_batch(300), &st)["new"] == 0);
    post(c, "/classify", json::array(), &st);
    CHECK(st == 400);
    auto bad = c.Post("/classify", "{not json", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);

    const auto rec = post(c, "/bootstrap/iterate", {{"k", 25}}, &st);
    CHECK(st == 200);
    CHECK(rec["queued"] == 25);
    const auto q = get(c, "/annotation/queue", &st)["items"];
    REQUIRE(q.size() == 25);
    const auto id = q[0]["id"].get<std::string>();
    post(c, "/annotation/" + id + "/label", {{"label", "dual quality"}}, &st);
    CHECK(st == 200);
    post(c, "/annotation/" + id + "/label", {{"label", "dual quality"}}, &st);
    CHECK(st == 409);
    post(c, "/annotation/nope/label", {{"label", "dual quality"}}, &st);
    CHECK(st == 404);
    CHECK(get(c, "/iterations", &st)["decisions_total"] == 1);
    CHECK(get(c, "/reviews/" + id, &st)["label"] == "dual quality");
    get(c, "/metrics", &st);
    CHECK(st == 200);
    get(c, "/products/rollup", &st);
    CHECK(st == 200);
    get(c, "/annotation/queue?limit=x", &st);
    CHECK(st == 400);
}

TEST_CASE("bearer token auth") {
    const char* var = "DUALQ_TEST_SERVICE_TOKEN";
    setenv(var, "s3cret", 1);
    auto cfg = test_config();
    cfg.auth_token_env = var;
    Running run(make_test_service(cfg));
    unsetenv(var);
    auto c = run.client();
    int st = 0;
    get(c, "/metrics", &st);
    CHECK(st == 401);
    get(c, "/ui-config", &st);
    CHECK(st == 200);
    c.set_bearer_token_auth("wrong");
    get(c, "/metrics", &st);
    CHECK(st == 401);
    c.set_bearer_token_auth("s3cret");
    get(c, "/metrics", &st);
    CHECK(st == 200);
}

TEST_CASE("concurrent label hammer: no lost decisions, duplicates rejected") {
    Running run(make_test_service());
    auto c = run.client();
    post(c, "/reviews:batch", seeded_batch(200));
    post(c, "/bootstrap/iterate", {{"k", 60}});
    const auto q = get(c, "/annotation/queue")["items"];
    REQUIRE(q.size() == 60);

    // 16 writers, 20 posts each, drawn from 60 ids: many collide on purpose
    constexpr int kWriters = 16, kPosts = 20;
    std::atomic<int> ok{0}, conflict{0}, other{0};
    std::vector<std::thread> writers;
    for (int w = 0; w < kWriters; ++w) {
        writers.emplace_back([&, w] {
            auto cl = run.client();
            Rng rng(static_cast<uint64_t>(w) + 100);
            for (int p = 0; p < kPosts; ++p) {
                const auto id = q[rng.below(q.size())]["id"].get<std::string>();
                const json body = {{"label", to_string(kAllLabels[rng.below(3)])}, {"annotator", "w" + std::to_string(w)}};
                auto r = cl.Post("/annotation/" + id + "/label", body.dump(), "application/json");
                if (r && r->status == 200) {
                    ++ok;
                } else if (r && r->status == 409) {
                    ++conflict;
                } else {
                    ++other;
                    MESSAGE("unexpected outcome: ", r ? std::to_string(r->status) : httplib::to_string(r.error()));
                }
            }
        });
    }
    for (auto& t : writers) t.join();
    CHECK(other == 0);
    CHECK(ok + conflict == kWriters * kPosts);
    const auto its = get(c, "/iterations");
    CHECK(its["decisions_total"] == ok.load());
    CHECK(its["queue_remaining"] == 60 - ok.load());
    CHECK(its["labeled_size"] == 2 + ok.load());
    // every acknowledged id is labeled exactly once
    std::set<std::string> labeled;
    for (const auto& item : q) {
        if (get(c, "/reviews/" + item["id"].get<std::string>())["status"] == "labeled") labeled.insert(item["id"]);
    }
    CHECK(labeled.size() == static_cast<std::size_t>(ok.load()));
}

}
