#include <doctest.h>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "cli.hpp"
#include "dualq/corpus.hpp"
#include "dualq/synthetic.hpp"
#include "manifest.hpp"
#include "support/stub_http.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = dualq::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("dualq-cli-" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

std::vector<json> read_lines(const fs::path& p) {
    std::vector<json> out;
    std::ifstream in(p);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) out.push_back(json::parse(line));
    }
    return out;
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream f(p, std::ios::binary);
    f << s;
}

/// The last JSON line written to stderr, which is where structured errors go.
json last_error(const Result& r) {
    std::istringstream in(r.err);
    std::string line, last;
    while (std::getline(in, line)) {
        if (!line.empty() && line.front() == '{') last = line;
    }
    REQUIRE_FALSE(last.empty());
    return json::parse(last);
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("sha-256 matches the published test vectors") {
    CHECK(dualq::cli::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(dualq::cli::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(dualq::cli::sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("usage errors exit with 2 and a structured error") {
    TempDir tmp;
    const std::vector<std::vector<std::string>> bad = {
        {},
        {"no-such-command"},
        {"dataset-stats"},
        {"dataset-stats", "--in", tmp / "missing.jsonl"},
        {"split", "--in", tmp / "missing.jsonl", "--out", tmp / "x.jsonl"},
        {"generate-fixture", "--out", tmp / "f.jsonl", "--seed", "1,x"},
        {"generate-fixture", "--out", tmp / "f.jsonl", "--kind", "nonsense"},
        {"generate-fixture", "--out", tmp / "f.jsonl", "--bogus"},
        {"simulate", "--out-dir", tmp / "sim", "--k", "0"},
        {"--config", tmp / "missing.ini", "dataset-stats", "--in", tmp / "missing.jsonl"},
    };
    for (const auto& args : bad) {
        const auto r = cli(args);
        CAPTURE(r.err);
        CHECK(r.code == dualq::cli::kExitUsage);
        CHECK(last_error(r)["error"]["kind"] == "usage_error");
    }
    CHECK_FALSE(fs::exists(tmp / "f.jsonl"));
}

TEST_CASE("help exits with 0") {
    const auto r = cli({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("bootstrap") != std::string::npos);
}

TEST_CASE("runtime failures exit with 1, report the error kind and still write a manifest") {
    TempDir tmp;
    write_text(tmp / "bad.jsonl", "{\"id\":\"a\",\"text\":\"ok\"}\nnot json\n");
    const auto r = cli({"dataset-stats", "--in", tmp / "bad.jsonl", "--out", tmp / "stats.json"});
    CHECK(r.code == dualq::cli::kExitRuntime);
    const auto e = last_error(r);
    CHECK(e["error"]["kind"] == "parse_error");
    CHECK(e["error"]["message"].get<std::string>().find("line 2") != std::string::npos);
    const auto m = read_json(tmp / "stats.json.manifest.json");
    CHECK(m["status"] == "error");
    CHECK(m["exit_code"] == 1);
    CHECK(m["error"]["kind"] == "parse_error");
}

TEST_CASE("generate-fixture writes the generator's dataset and a checksummed manifest") {
    TempDir tmp;
    const auto out = tmp / "fixture.jsonl";
    const auto r = cli({"generate-fixture", "--out", out});
    REQUIRE(r.code == 0);
    const auto expected = dualq::serialize_dataset(dualq::synthetic::generate_fixture());
    CHECK(slurp(out) == expected);

    const auto m = read_json(out + ".manifest.json");
    CHECK(m["command"] == "generate-fixture");
    CHECK(m["seeds"] == json::array({2023}));
    REQUIRE(m["outputs"].size() == 1);
    CHECK(m["outputs"][0]["path"] == fs::path(out).generic_string());
    CHECK(m["outputs"][0]["bytes"] == expected.size());
    CHECK(m["outputs"][0]["sha256"] == dualq::cli::sha256_hex(expected));
}

TEST_CASE("dataset-stats reproduces the fixture's shape") {
    TempDir tmp;
    REQUIRE(cli({"generate-fixture", "--out", tmp / "f.jsonl", "-q"}).code == 0);
    const auto r = cli({"dataset-stats", "--in", tmp / "f.jsonl", "-q"});
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["total"] == 1957);
    CHECK(j["labels"]["dual quality"]["all"] == 540);
    CHECK(j["labels"]["other problems"]["all"] == 281);
    CHECK(j["labels"]["standard"]["all"] == 1136);
}

TEST_CASE("config file values apply and flags win") {
    TempDir tmp;
    write_text(tmp / "run.ini", "[generate-fixture]\nkind = pool\nsize = 300\n");
    auto r = cli({"--config", tmp / "run.ini", "generate-fixture", "--out", tmp / "a.jsonl", "-q"});
    REQUIRE(r.code == 0);
    CHECK(dualq::load_dataset(tmp / "a.jsonl").size() == 300);

    r = cli({"generate-fixture", "--config", tmp / "run.ini", "--size", "120", "--out", tmp / "b.jsonl", "-q"});
    REQUIRE(r.code == 0);
    CHECK(dualq::load_dataset(tmp / "b.jsonl").size() == 120);
    CHECK(read_json(tmp / "b.jsonl.manifest.json")["config"] == tmp / "run.ini");

    write_text(tmp / "bad.ini", "[generate-fixture]\nsize = 10\nno-such-key = 1\n");
    r = cli({"--config", tmp / "bad.ini", "generate-fixture", "--out", tmp / "c.jsonl"});
    CHECK(r.code == dualq::cli::kExitUsage);
}

TEST_CASE("evaluate --gold --pred matches a hand count") {
    TempDir tmp;
    // gold: dq dq other std std ; pred: dq std other std dq -> 3 of 5 correct
    const std::vector<std::pair<std::string, std::string>> rows = {
        {"dual quality", "dual quality"}, {"dual quality", "standard"}, {"other problems", "other problems"},
        {"standard", "standard"},         {"standard", "dual quality"}};
    std::string gold, pred;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto id = "r" + std::to_string(i);
        gold += json{{"id", id}, {"text", "text " + id}, {"label", rows[i].first}}.dump() + "\n";
        pred += json{{"id", id}, {"label", rows[i].second}}.dump() + "\n";
    }
    write_text(tmp / "g.jsonl", gold);
    write_text(tmp / "p.jsonl", pred);
    const auto r = cli({"evaluate", "--gold", tmp / "g.jsonl", "--pred", tmp / "p.jsonl", "--out", tmp / "r.json",
                        "--csv", tmp / "cm.csv", "-q"});
    REQUIRE(r.code == 0);
    const auto j = read_json(tmp / "r.json");
    CHECK(j["accuracy"].get<double>() == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(j["n"] == 5);
    CHECK(j["per_class"]["dual quality"]["precision"].get<double>() == doctest::Approx(0.5));
    CHECK(j["per_class"]["dual quality"]["recall"].get<double>() == doctest::Approx(0.5));
    CHECK(slurp(tmp / "cm.csv") ==
          "gold\\predicted,dual quality,other problems,standard\n"
          "dual quality,1,0,1\n"
          "other problems,0,1,0\n"
          "standard,1,0,1\n");

    // a gold review without a prediction is a runtime failure
    write_text(tmp / "p2.jsonl", json{{"id", "r0"}, {"label", "standard"}}.dump() + "\n");
    const auto r2 = cli({"evaluate", "--gold", tmp / "g.jsonl", "--pred", tmp / "p2.jsonl", "-q"});
    CHECK(r2.code == 1);
    CHECK(cli({"evaluate", "--gold", tmp / "g.jsonl", "-q"}).code == dualq::cli::kExitUsage);
}

TEST_CASE("evaluate --runs 5 --seed 0 aggregates mean and std over five seeded runs") {
    TempDir tmp;
    const auto r = cli({"evaluate", "--runs", "5", "--seed", "0", "--out", tmp / "agg.json", "-q"});
    REQUIRE(r.code == 0);
    const auto j = read_json(tmp / "agg.json");
    CHECK(j["seeds"] == json::array({0, 1, 2, 3, 4}));
    REQUIRE(j["runs"].size() == 5);
    const auto& m = j["aggregate"]["metrics"];
    CHECK(j["aggregate"]["n"] == 5);
    for (const auto* key : {"accuracy", "macro_f1", "dual quality.precision"}) {
        CAPTURE(key);
        REQUIRE(m.contains(key));
        CHECK(m[key].contains("mean"));
        CHECK(m[key].contains("std"));
    }
    double sum = 0.0;
    for (const auto& run : j["runs"]) sum += run["report"]["accuracy"].get<double>();
    CHECK(m["accuracy"]["mean"].get<double>() == doctest::Approx(sum / 5.0).epsilon(1e-12));
    long total = 0;
    for (const auto& row : j["aggregate"]["summed_confusion"]["counts"]) {
        for (const auto& c : row) total += c.get<long>();
    }
    CHECK(total == 5 * 500);

    // the lexicon baseline is deterministic: zero spread
    const auto b = cli({"evaluate", "--model", "baseline", "--seed", "3,9", "-q"});
    REQUIRE(b.code == 0);
    const auto jb = json::parse(b.out);
    CHECK(jb["seeds"] == json::array({3, 9}));
    CHECK(jb["aggregate"]["metrics"]["accuracy"]["std"] == 0.0);

    CHECK(cli({"evaluate", "--runs", "3", "--seed", "1,2", "-q"}).code == dualq::cli::kExitUsage);
}

TEST_CASE("simulate --pool 5000 --k 200 --iterations 7 writes seven iteration records") {
    TempDir tmp;
    const auto r = cli({"simulate", "--pool", "5000", "--k", "200", "--iterations", "7", "--out-dir", tmp / "sim", "-q"});
    REQUIRE(r.code == 0);
    const auto its = read_lines(tmp.path / "sim" / "iterations.jsonl");
    REQUIRE(its.size() == 7);
    for (std::size_t i = 0; i < its.size(); ++i) {
        CHECK(its[i]["iteration"] == i + 1);
        CHECK(its[i]["batch"]["items"].size() == 200);
    }
    const auto rep = read_json(tmp.path / "sim" / "report.json");
    CHECK(rep["runs"][0]["annotations"] == 1400);
    CHECK(rep["runs"][0]["random_expected"].get<double>() ==
          doctest::Approx(1400.0 * rep["runs"][0]["planted_positives"].get<double>() / 5000.0));
    CHECK(fs::exists(tmp.path / "sim" / "manifest.json"));
}

TEST_CASE("canonical mode makes outputs byte-identical across runs") {
    TempDir tmp;
    auto run_once = [&](const std::string& tag) {
        const auto dir = tmp / tag;
        std::map<std::string, std::string> files;
        REQUIRE(cli({"--canonical", "simulate", "--pool", "600", "--k", "40", "--iterations", "3", "--seed", "5",
                     "--out-dir", tmp / "sim", "-q"})
                    .code == 0);
        REQUIRE(cli({"--canonical", "generate-fixture", "--kind", "pool", "--size", "400", "--out", tmp / "pool.jsonl",
                     "-q"})
                    .code == 0);
        REQUIRE(cli({"--canonical", "generate-fixture", "--kind", "seed-set", "--out", tmp / "seeds.jsonl", "-q"})
                    .code == 0);
        fs::remove_all(tmp.path / "run");
        REQUIRE(cli({"--canonical", "bootstrap", "init", "--run-dir", tmp / "run", "--seed-set", tmp / "seeds.jsonl",
                     "--pool", tmp / "pool.jsonl", "--k", "25", "-q"})
                    .code == 0);
        REQUIRE(cli({"--canonical", "bootstrap", "iterate", "--run-dir", tmp / "run", "-q"}).code == 0);
        REQUIRE(cli({"--canonical", "train", "--in", tmp / "seeds.jsonl", "--split", "all", "--mode", "binary",
                     "--out", tmp / "model.json", "-q"})
                    .code == 0);
        for (const auto& e : fs::recursive_directory_iterator(tmp.path)) {
            if (!e.is_regular_file()) continue;
            const auto rel = fs::relative(e.path(), tmp.path).generic_string();
            if (rel.rfind("snap-", 0) == 0) continue;
            files[rel] = slurp(e.path());
        }
        fs::create_directories(dir);
        return files;
    };
    const auto a = run_once("snap-a");
    const auto b = run_once("snap-b");
    REQUIRE(a.size() == b.size());
    CHECK(a.count("sim/manifest.json") == 1);
    CHECK(a.count("run/batches/iteration-001.jsonl") == 1);
    CHECK(a.count("run/manifests/002-iterate.json") == 1);
    for (const auto& [name, content] : a) {
        CAPTURE(name);
        REQUIRE(b.count(name) == 1);
        CHECK(b.at(name) == content);
    }
}

TEST_CASE("bootstrap workflow: init, iterate, ingest, status") {
    TempDir tmp;
    REQUIRE(cli({"generate-fixture", "--kind", "pool", "--size", "500", "--out", tmp / "pool.jsonl", "-q"}).code == 0);
    REQUIRE(cli({"generate-fixture", "--kind", "seed-set", "--out", tmp / "seeds.jsonl", "-q"}).code == 0);
    const auto run_dir = tmp / "run";
    REQUIRE(cli({"bootstrap", "init", "--run-dir", run_dir, "--seed-set", tmp / "seeds.jsonl", "--pool",
                 tmp / "pool.jsonl", "--k", "30", "-q"})
                .code == 0);
    CHECK(slurp(fs::path(run_dir) / "bootstrap.ini").find("k = 30\n") != std::string::npos);
    CHECK(cli({"bootstrap", "init", "--run-dir", run_dir, "--seed-set", tmp / "seeds.jsonl", "--pool",
               tmp / "pool.jsonl", "-q"})
              .code == 1);

    auto r = cli({"bootstrap", "iterate", "--run-dir", run_dir, "-q"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["batch_size"] == 30); // from bootstrap.ini

    // an undecided batch blocks the next iteration
    r = cli({"bootstrap", "iterate", "--run-dir", run_dir, "-q"});
    CHECK(r.code == 1);
    CHECK(last_error(r)["error"]["kind"] == "state_error");

    std::map<std::string, std::string> gold;
    for (const auto& rv : dualq::load_dataset(tmp / "pool.jsonl").reviews) gold[rv.id] = std::string(dualq::to_string(*rv.label));
    std::string decisions;
    for (const auto& item : read_lines(fs::path(run_dir) / "batches" / "iteration-001.jsonl")) {
        const auto id = item["id"].get<std::string>();
        decisions += json{{"review_id", id}, {"label", gold.at(id)}, {"annotator", "t"}, {"timestamp", "x"}}.dump() + "\n";
    }
    write_text(tmp / "dec.jsonl", decisions);
    r = cli({"bootstrap", "ingest", "--run-dir", run_dir, "--decisions", tmp / "dec.jsonl", "-q"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["added"] == 30);
    CHECK(json::parse(r.out)["labeled_size"] == 130 + 30);

    // a flag overrides the stored configuration for this run
    r = cli({"bootstrap", "iterate", "--run-dir", run_dir, "--k", "7", "--force", "-q"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["batch_size"] == 7);

    r = cli({"bootstrap", "status", "--run-dir", run_dir, "-q"});
    REQUIRE(r.code == 0);
    const auto st = json::parse(r.out);
    CHECK(st["iterations"].size() == 2);
    CHECK(st["iterations"][0]["decisions_ingested"] == 30);
    CHECK(st["pool_size"] == 500 - 30);
    CHECK(st["open_batch_remaining"] == 7);

    std::size_t manifests = 0;
    for (const auto& e : fs::directory_iterator(fs::path(run_dir) / "manifests")) manifests += e.is_regular_file();
    CHECK(manifests == 7); // one per invocation, failures included
}

TEST_CASE("baseline, train, predict and robustness chain") {
    TempDir tmp;
    REQUIRE(cli({"generate-fixture", "--out", tmp / "f.jsonl", "-q"}).code == 0);
    REQUIRE(cli({"baseline", "--in", tmp / "f.jsonl", "--split", "test", "--out", tmp / "bp.jsonl", "--model-out",
                 tmp / "baseline.json", "-q"})
                .code == 0);
    CHECK(read_lines(tmp / "bp.jsonl").size() == 500);

    REQUIRE(cli({"train", "--in", tmp / "f.jsonl", "--out", tmp / "probe.json", "--head-epochs", "10", "-q"}).code == 0);
    REQUIRE(cli({"predict", "--model", tmp / "probe.json", "--in", tmp / "f.jsonl", "--split", "test", "--out",
                 tmp / "pp.jsonl", "-q"})
                .code == 0);
    const auto lines = read_lines(tmp / "pp.jsonl");
    REQUIRE(lines.size() == 500);
    CHECK(lines[0].contains("id"));
    CHECK(lines[0]["model_id"] == "probe");
    const auto ev = cli({"evaluate", "--gold", tmp / "f.jsonl", "--split", "test", "--pred", tmp / "pp.jsonl", "-q"});
    REQUIRE(ev.code == 0);
    CHECK(json::parse(ev.out)["accuracy"].get<double>() > 0.5);

    const auto r = cli({"robustness", "--kind", "lower", "--in", tmp / "f.jsonl", "--split", "test", "--model",
                        tmp / "baseline.json", "--runs", "5", "--out", tmp / "rob.json", "-q"});
    REQUIRE(r.code == 0);
    const auto j = read_json(tmp / "rob.json");
    REQUIRE(j["reports"].size() == 1);
    CHECK(j["reports"][0]["per_run"].size() == 5);
    CHECK(j["reports"][0]["std"] == 0.0);
    CHECK(read_json(tmp / "rob.json.manifest.json")["seeds"] == json::array({0, 1, 2, 3, 4}));

    const auto all = cli({"robustness", "--in", tmp / "f.jsonl", "--split", "test", "--model", tmp / "probe.json",
                          "--runs", "2", "-q"});
    REQUIRE(all.code == 0);
    CHECK(json::parse(all.out)["reports"].size() == 5);
}

TEST_CASE("audit ranks a planted label error") {
    TempDir tmp;
    std::string data;
    for (int i = 0; i < 12; ++i) {
        data += json{{"id", "p" + std::to_string(i)},
                     {"text", "produkt z niemiec jest lepszy niż polski wariant " + std::to_string(i)},
                     {"label", "dual quality"}}
                    .dump() +
                "\n";
        data += json{{"id", "n" + std::to_string(i)},
                     {"text", "szybka dostawa dobra cena polecam sklep " + std::to_string(i)},
                     {"label", i == 0 ? "dual quality" : "standard"}}
                    .dump() +
                "\n";
    }
    write_text(tmp / "d.jsonl", data);
    const auto r = cli({"audit", "--in", tmp / "d.jsonl", "--folds", "3", "--contrastive-iterations", "0", "--top",
                        "3", "-q"});
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["n"] == 24);
    REQUIRE(j["entries"].size() == 3);
    CHECK(j["entries"][0]["id"] == "n0");
}

TEST_CASE("llm-classify against a local chat-completions stub") {
    TempDir tmp;
    std::string data;
    for (int i = 0; i < 6; ++i) {
        data += json{{"id", "r" + std::to_string(i)}, {"text", i % 2 ? "inny skład w niemczech" : "wszystko ok"}}.dump() +
                "\n";
    }
    write_text(tmp / "d.jsonl", data);
    dualq::testing::StubHttpServer stub([](const httplib::Request& req, httplib::Response& res) {
        const auto body = json::parse(req.body);
        const auto prompt = body["messages"][0]["content"].get<std::string>();
        const std::string answer = prompt.find("niemczech") != std::string::npos ? "dual quality" : "standard";
        res.set_content(json{{"choices", {{{"message", {{"role", "assistant"}, {"content", answer}}}}}}}.dump(),
                        "application/json");
    });
    auto r = cli({"llm-classify", "--in", tmp / "d.jsonl", "--out", tmp / "runs.json", "--pred-out", tmp / "p.jsonl",
                  "--base-url", stub.base_url(), "--runs", "2", "-q"});
    REQUIRE(r.code == 0);
    const auto j = read_json(tmp / "runs.json");
    CHECK(j["runs"].size() == 2);
    const auto preds = read_lines(tmp / "p.jsonl");
    REQUIRE(preds.size() == 6);
    CHECK(preds[1]["label"] == "dual quality");
    CHECK(preds[0]["label"] == "standard");

    dualq::testing::StubHttpServer down([](const httplib::Request&, httplib::Response& res) {
        res.status = 400;
        res.set_content("{\"error\":\"bad request\"}", "application/json");
    });
    r = cli({"llm-classify", "--in", tmp / "d.jsonl", "--out", tmp / "runs2.json", "--base-url", down.base_url(), "-q"});
    CHECK(r.code == 1);
    CHECK(last_error(r)["error"]["kind"] == "backend_error");
    CHECK(fs::exists(tmp / "runs2.json")); // per-item failures are kept, not dropped
}

TEST_CASE("serve runs until SIGTERM and leaves a snapshot") {
    TempDir tmp;
    const auto port_file = tmp / "port";
    std::atomic<int> code{-1};
    std::thread server([&] {
        code = cli({"serve", "--port", "0", "--port-file", port_file, "--data-dir", tmp / "data", "--auth-token-env",
                    "DUALQ_CLI_TEST_TOKEN_UNSET", "-q"})
                   .code;
    });
    int port = 0;
    for (int i = 0; i < 500 && port == 0; ++i) {
        if (fs::exists(port_file)) {
            std::ifstream(port_file) >> port;
        }
        if (port == 0) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    REQUIRE(port > 0);
    httplib::Client c("127.0.0.1", port);
    auto health = c.Get("/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    auto ingest = c.Post("/reviews:batch",
                         json{{"reviews", {{{"id", "a"}, {"text", "pierwsza recenzja"}}}}}.dump(), "application/json");
    REQUIRE(ingest);
    CHECK(ingest->status == 200);

    std::raise(SIGTERM);
    server.join();
    CHECK(code == 0);
    REQUIRE(fs::exists(tmp.path / "data" / "snapshot.json"));
    CHECK(slurp(tmp.path / "data" / "snapshot.json").find("pierwsza recenzja") != std::string::npos);
    CHECK(fs::exists(tmp.path / "data" / "manifests" / "001-serve.json"));
}

}
