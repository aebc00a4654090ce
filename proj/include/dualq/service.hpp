#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "dualq/bootstrap.hpp"
#include "dualq/eval.hpp"
#include "dualq/prediction.hpp"

namespace dualq {

enum class ReviewStatus : uint8_t { Unscored, Scored, Queued, Labeled };
std::string_view to_string(ReviewStatus s);

/// Service-side view of a review. flagged implies a score; Labeled implies a label.
struct StoredReview {
    Review review;
    ReviewStatus status = ReviewStatus::Unscored;
    std::optional<double> dq_probability;
    /// Active model's label at ingest time; used for the live metrics.
    std::optional<Label> predicted;
    bool flagged = false;
    std::optional<std::string> product;
};

nlohmann::json to_json(const StoredReview& s);

struct ProductRollup {
    std::string product;
    std::size_t reviews = 0;
    std::size_t flagged = 0;
    std::size_t verified_dual_quality = 0;
    bool escalate = false;
};

nlohmann::json to_json(const ProductRollup& p);

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    /// Environment variable holding the shared bearer token; unset or empty disables auth.
    std::string auth_token_env = "DUALQ_SERVICE_TOKEN";
    std::filesystem::path model_path;
    std::filesystem::path data_dir = "service-data";
    /// Reviews with dq_probability >= this are flagged. Raise it for fewer false positives.
    double flag_threshold = 0.5;
    std::size_t rollup_threshold = 3;
    std::size_t snapshot_every = 200;
    std::size_t threads = 8;
    BootstrapConfig bootstrap;

    void validate() const;
};

/// Append-only event log plus an occasional full snapshot.
class RecordStore {
public:
    virtual ~RecordStore() = default;
    virtual void append(const nlohmann::json& event) = 0;
    /// Replaces the snapshot and drops the events it already contains.
    virtual void write_snapshot(const nlohmann::json& state) = 0;
    virtual std::optional<nlohmann::json> snapshot() const = 0;
    virtual std::vector<nlohmann::json> events() const = 0;
};

class MemoryRecordStore final : public RecordStore {
public:
    void append(const nlohmann::json& event) override;
    void write_snapshot(const nlohmann::json& state) override;
    std::optional<nlohmann::json> snapshot() const override;
    std::vector<nlohmann::json> events() const override;

private:
    mutable std::mutex mutex_;
    std::optional<nlohmann::json> snapshot_;
    std::vector<nlohmann::json> events_;
};

/// events.jsonl + snapshot.json in one directory. Appends are flushed per event.
class JsonlRecordStore final : public RecordStore {
public:
    explicit JsonlRecordStore(std::filesystem::path dir);
    void append(const nlohmann::json& event) override;
    void write_snapshot(const nlohmann::json& state) override;
    std::optional<nlohmann::json> snapshot() const override;
    std::vector<nlohmann::json> events() const override;

private:
    std::filesystem::path dir_;
    mutable std::mutex mutex_;
};

/// HTTP-independent outcome of one request.
struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

/// The analyst service's state and operations. Reads share a lock; every write goes
/// through one commit path that logs the event before applying it.
class Service {
public:
    Service(ServiceConfig config, std::unique_ptr<RecordStore> store, std::shared_ptr<const Classifier> model,
            std::shared_ptr<const Trainer> trainer);

    ApiResponse classify(const nlohmann::json& body) const;
    ApiResponse ingest(const nlohmann::json& body);
    ApiResponse queue(std::optional<std::size_t> limit) const;
    ApiResponse label(const std::string& id, const nlohmann::json& body);
    ApiResponse iterate(const nlohmann::json& body);
    ApiResponse iterations() const;
    ApiResponse rollup() const;
    ApiResponse metrics() const;
    ApiResponse review(const std::string& id) const;
    ApiResponse ui_config() const;

    /// True when the request may proceed (auth disabled or matching bearer token).
    bool authorized(const std::string& authorization_header) const;
    bool auth_enabled() const { return !token_.empty(); }

    void write_snapshot();
    const ServiceConfig& config() const { return config_; }

private:
    nlohmann::json state_json() const;
    void write_snapshot_locked();
    void load_state_json(const nlohmann::json& j);
    void apply(const nlohmann::json& event);
    void commit(const nlohmann::json& event);
    void refresh_status(const std::string& id);

    ServiceConfig config_;
    std::unique_ptr<RecordStore> store_;
    std::shared_ptr<const Classifier> model_;
    std::shared_ptr<const Trainer> trainer_;
    std::string token_;

    mutable std::shared_mutex mutex_;
    BootstrapState state_;
    std::unordered_map<std::string, StoredReview> reviews_;
    std::vector<std::string> order_;
    std::size_t decisions_total_ = 0;
    /// Sequence number of the last committed event; snapshots record it so replay can
    /// skip events the snapshot already contains.
    uint64_t seq_ = 0;
    std::size_t events_since_snapshot_ = 0;
    std::atomic<bool> iterating_{false};
};

/// Binds the service's routes to an HTTP server.
class HttpServer {
public:
    explicit HttpServer(Service& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds host:port (port 0 picks a free one) and returns the bound port.
    int bind(const std::string& host, int port);
    /// Blocks serving requests until stop().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Wires a Service from its configuration: JSONL store under data_dir, model snapshot
/// (optional) and a probe trainer on the configured backend.
std::unique_ptr<Service> make_service(const ServiceConfig& config);

std::string_view openapi_document();

} // namespace dualq
