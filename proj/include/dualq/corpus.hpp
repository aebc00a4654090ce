#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace dualq {

enum class Label : uint8_t { DualQuality = 0, OtherProblems = 1, Standard = 2 };

inline constexpr std::size_t kNumLabels = 3;
/// Fixed order used for tie-breaking, matrix rows and serialized arrays.
inline constexpr std::array<Label, kNumLabels> kAllLabels = {Label::DualQuality, Label::OtherProblems,
                                                            Label::Standard};

constexpr std::size_t index_of(Label l) { return static_cast<std::size_t>(l); }

/// "dual quality", "other problems", "standard".
std::string_view to_string(Label l);
/// Strict inverse of to_string; anything else is a ParseError.
Label label_from_string(std::string_view s);

/// Problem type recorded by annotators for "other problems" reviews.
struct ProblemSubtype {
    enum class Kind : uint8_t {
        Counterfeit,
        PlaceOfPurchaseSameMarket,
        DeteriorationOverTime,
        MismatchWithOrder,
        MisleadingInformation,
        SuspectedFraud,
        PackagingBatchSize,
        Other,
    };
    Kind kind = Kind::Other;
    /// Free text, only meaningful for Kind::Other.
    std::string detail;

    friend bool operator==(const ProblemSubtype&, const ProblemSubtype&) = default;
};

/// Known kinds serialize to their snake_case name; Other serializes as "other" or "other:<detail>".
std::string to_string(const ProblemSubtype& s);
ProblemSubtype subtype_from_string(std::string_view s);
std::vector<std::string_view> subtype_names();

enum class Source : uint8_t { Internet, CeneoWizaz, DemoSystem, Amazon, Synthetic };
std::string_view to_string(Source s);
Source source_from_string(std::string_view s);

enum class Split : uint8_t { Train = 0, Test = 1, Valid = 2 };
inline constexpr std::array<Split, 3> kAllSplits = {Split::Train, Split::Test, Split::Valid};
std::string_view to_string(Split s);
Split split_from_string(std::string_view s);

/// One audit-trail entry: who changed what, when.
struct ProvenanceEvent {
    std::string actor;
    std::string timestamp;
    std::string action;
    std::optional<Label> from_label;
    std::optional<Label> to_label;
    std::string note;

    friend bool operator==(const ProvenanceEvent&, const ProvenanceEvent&) = default;
};

struct Review {
    std::string id;
    std::string text;
    std::string lang = "pl";
    Source source = Source::Synthetic;
    std::optional<std::string> category;
    std::optional<Label> label;
    std::optional<ProblemSubtype> subtype;
    std::optional<Split> split;
    std::vector<ProvenanceEvent> provenance;
    std::optional<int> iteration;

    friend bool operator==(const Review&, const Review&) = default;
};

/// Checks the per-record invariants (id, non-blank text, subtype implies other problems).
void validate(const Review& r);

struct DatasetMeta {
    std::string name;
    std::string created_at;
    int schema_version = 1;

    friend bool operator==(const DatasetMeta&, const DatasetMeta&) = default;
};

struct Dataset {
    DatasetMeta meta;
    std::vector<Review> reviews;

    std::size_t size() const { return reviews.size(); }
    bool empty() const { return reviews.empty(); }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

inline constexpr int kSchemaVersion = 1;

nlohmann::json to_json(const Review& r);
Review review_from_json(const nlohmann::json& j);

/// Reads JSON Lines. An optional first line {"dataset_meta": {...}} carries metadata.
/// Throws ParseError (with line number) or IntegrityError on duplicate ids.
Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset(std::string_view jsonl, std::string name = {});
void save_dataset(const Dataset& d, const std::filesystem::path& path);
std::string serialize_dataset(const Dataset& d);

struct SplitSizes {
    std::size_t train = 0;
    std::size_t test = 0;
    std::size_t valid = 0;

    std::size_t operator[](Split s) const {
        return s == Split::Train ? train : s == Split::Test ? test : valid;
    }
    std::size_t total() const { return train + test + valid; }
};

/// Per-class, per-split target counts for a stratified split. Each cell is the floor or
/// ceiling of the proportional ideal; rows sum to class sizes and columns to split sizes.
std::array<std::array<std::size_t, 3>, kNumLabels> stratified_allocation(
    const std::array<std::size_t, kNumLabels>& class_sizes, const SplitSizes& sizes);

/// Returns a copy of d with every review assigned a split. Deterministic for a fixed seed.
Dataset stratified_split(const Dataset& d, const SplitSizes& sizes, uint64_t seed);

struct DatasetStats {
    /// counts[label][split]; column 3 collects reviews without a split.
    std::array<std::array<std::size_t, 4>, kNumLabels> counts{};
    std::array<std::size_t, kNumLabels> label_totals{};
    std::array<std::size_t, 4> split_totals{};
    std::size_t unlabeled = 0;
    std::size_t total = 0;
    double mean_chars = 0.0;
    double mean_words = 0.0;
    std::array<std::map<std::string, std::size_t>, kNumLabels> categories;
};

DatasetStats compute_stats(const Dataset& d);
nlohmann::json to_json(const DatasetStats& s);

/// Counts Unicode code points.
std::size_t char_count(std::string_view text);
/// Counts maximal runs of non-whitespace (Unicode White_Space) characters.
std::size_t word_count(std::string_view text);

std::string utc_timestamp();
/// Pins utc_timestamp() to a constant (reproducible outputs); nullopt restores the clock.
void set_fixed_timestamp(std::optional<std::string> ts);

} // namespace dualq
