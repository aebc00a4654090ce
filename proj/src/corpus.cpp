#include "dualq/corpus.hpp"

#include <algorithm>
#include <chrono>
#include <mutex>
#include <ctime>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "dualq/errors.hpp"
#include "dualq/rng.hpp"
#include "dualq/unicode.hpp"

namespace dualq {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kNumLabels> kLabelNames = {"dual quality", "other problems", "standard"};

constexpr std::array<std::string_view, 8> kSubtypeNames = {
    "counterfeit",         "place_of_purchase_same_market", "deterioration_over_time", "mismatch_with_order",
    "misleading_information", "suspected_fraud",           "packaging_batch_size",    "other",
};

constexpr std::array<std::string_view, 5> kSourceNames = {"internet", "ceneo_wizaz", "demo_system", "amazon",
                                                          "synthetic"};

constexpr std::array<std::string_view, 3> kSplitNames = {"train", "test", "valid"};

template <typename E, std::size_t N>
E enum_from(std::string_view s, const std::array<std::string_view, N>& names, const char* what) {
    for (std::size_t i = 0; i < N; ++i) {
        if (names[i] == s) return static_cast<E>(i);
    }
    throw ParseError("unknown " + std::string(what) + " \"" + std::string(s) + "\"");
}

template <typename T>
std::optional<T> opt_field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<T>();
}

json provenance_to_json(const ProvenanceEvent& e) {
    json j = {{"actor", e.actor}, {"timestamp", e.timestamp}, {"action", e.action}};
    j["from"] = e.from_label ? json(to_string(*e.from_label)) : json(nullptr);
    j["to"] = e.to_label ? json(to_string(*e.to_label)) : json(nullptr);
    if (!e.note.empty()) j["note"] = e.note;
    return j;
}

ProvenanceEvent provenance_from_json(const json& j) {
    ProvenanceEvent e;
    e.actor = j.value("actor", "");
    e.timestamp = j.value("timestamp", "");
    e.action = j.value("action", "");
    if (auto s = opt_field<std::string>(j, "from")) e.from_label = label_from_string(*s);
    if (auto s = opt_field<std::string>(j, "to")) e.to_label = label_from_string(*s);
    e.note = j.value("note", "");
    return e;
}

} // namespace

std::string_view to_string(Label l) { return kLabelNames[index_of(l)]; }

Label label_from_string(std::string_view s) { return enum_from<Label>(s, kLabelNames, "label"); }

std::string to_string(const ProblemSubtype& s) {
    if (s.kind == ProblemSubtype::Kind::Other && !s.detail.empty()) return "other:" + s.detail;
    return std::string(kSubtypeNames[static_cast<std::size_t>(s.kind)]);
}

ProblemSubtype subtype_from_string(std::string_view s) {
    if (s.starts_with("other:")) return {ProblemSubtype::Kind::Other, std::string(s.substr(6))};
    return {enum_from<ProblemSubtype::Kind>(s, kSubtypeNames, "subtype"), {}};
}

std::vector<std::string_view> subtype_names() { return {kSubtypeNames.begin(), kSubtypeNames.end()}; }

std::string_view to_string(Source s) { return kSourceNames[static_cast<std::size_t>(s)]; }
Source source_from_string(std::string_view s) { return enum_from<Source>(s, kSourceNames, "source"); }

std::string_view to_string(Split s) { return kSplitNames[static_cast<std::size_t>(s)]; }
Split split_from_string(std::string_view s) { return enum_from<Split>(s, kSplitNames, "split"); }

void validate(const Review& r) {
    if (r.id.empty()) throw ParseError("review id is empty");
    if (unicode::trim(r.text).empty()) throw ParseError("review " + r.id + ": text is blank");
    if (r.subtype && r.label != Label::OtherProblems) {
        throw ParseError("review " + r.id + ": subtype is only allowed with label \"other problems\"");
    }
    if (r.iteration && *r.iteration < 0) throw ParseError("review " + r.id + ": negative iteration");
}

json to_json(const Review& r) {
    json j;
    j["id"] = r.id;
    j["text"] = r.text;
    j["lang"] = r.lang;
    j["source"] = to_string(r.source);
    j["category"] = r.category ? json(*r.category) : json(nullptr);
    j["label"] = r.label ? json(to_string(*r.label)) : json(nullptr);
    j["subtype"] = r.subtype ? json(to_string(*r.subtype)) : json(nullptr);
    j["split"] = r.split ? json(to_string(*r.split)) : json(nullptr);
    j["provenance"] = json::array();
    for (const auto& e : r.provenance) j["provenance"].push_back(provenance_to_json(e));
    j["iteration"] = r.iteration ? json(*r.iteration) : json(nullptr);
    return j;
}

Review review_from_json(const json& j) {
    if (!j.is_object()) throw ParseError("expected a JSON object");
    for (const char* key : {"id", "text"}) {
        if (!j.contains(key) || !j[key].is_string()) {
            throw ParseError(std::string("missing or non-string field \"") + key + "\"");
        }
    }
    Review r;
    try {
        r.id = j["id"].get<std::string>();
        r.text = j["text"].get<std::string>();
        r.lang = j.value("lang", "pl");
        if (auto s = opt_field<std::string>(j, "source")) r.source = source_from_string(*s);
        r.category = opt_field<std::string>(j, "category");
        if (auto s = opt_field<std::string>(j, "label")) r.label = label_from_string(*s);
        if (auto s = opt_field<std::string>(j, "subtype")) r.subtype = subtype_from_string(*s);
        if (auto s = opt_field<std::string>(j, "split")) r.split = split_from_string(*s);
        if (auto it = j.find("provenance"); it != j.end() && !it->is_null()) {
            for (const auto& e : *it) r.provenance.push_back(provenance_from_json(e));
        }
        r.iteration = opt_field<int>(j, "iteration");
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad field type: ") + e.what());
    }
    validate(r);
    return r;
}

Dataset parse_dataset(std::string_view jsonl, std::string name) {
    Dataset d;
    d.meta.name = std::move(name);
    d.meta.schema_version = kSchemaVersion;
    std::unordered_set<std::string> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < jsonl.size()) {
        auto nl = jsonl.find('\n', pos);
        if (nl == std::string_view::npos) nl = jsonl.size();
        std::string_view line = jsonl.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (unicode::trim(line).empty()) continue;
        if (!unicode::is_valid_utf8(line)) throw ParseError("invalid UTF-8", line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
        }
        if (j.is_object() && j.contains("dataset_meta")) {
            if (!d.reviews.empty()) throw ParseError("dataset_meta must be the first record", line_no);
            const auto& m = j["dataset_meta"];
            d.meta.name = m.value("name", d.meta.name);
            d.meta.created_at = m.value("created_at", "");
            d.meta.schema_version = m.value("schema_version", kSchemaVersion);
            if (d.meta.schema_version > kSchemaVersion) {
                throw ParseError("unsupported schema_version " + std::to_string(d.meta.schema_version), line_no);
            }
            continue;
        }
        Review r;
        try {
            r = review_from_json(j);
        } catch (const ParseError& e) {
            throw ParseError(e.what(), line_no);
        }
        if (!seen.insert(r.id).second) {
            throw IntegrityError("line " + std::to_string(line_no) + ": duplicate review id \"" + r.id + "\"");
        }
        d.reviews.push_back(std::move(r));
    }
    return d;
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArgumentError("cannot open dataset file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_dataset(buf.str(), path.stem().string());
}

std::string serialize_dataset(const Dataset& d) {
    std::string out;
    json meta = {{"dataset_meta",
                  {{"name", d.meta.name}, {"created_at", d.meta.created_at}, {"schema_version", kSchemaVersion}}}};
    out += meta.dump();
    out += '\n';
    for (const auto& r : d.reviews) {
        out += to_json(r).dump();
        out += '\n';
    }
    return out;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ArgumentError("cannot write dataset file " + path.string());
    out << serialize_dataset(d);
}

std::array<std::array<std::size_t, 3>, kNumLabels> stratified_allocation(
    const std::array<std::size_t, kNumLabels>& class_sizes, const SplitSizes& sizes) {
    const std::size_t n = sizes.total();
    std::array<std::array<std::size_t, 3>, kNumLabels> alloc{};
    std::size_t class_total = 0;
    for (auto c : class_sizes) class_total += c;
    if (class_total != n) throw ArgumentError("split sizes do not sum to the dataset size");
    if (n == 0) return alloc;

    // Start from floors; the leftover units go to cells with a fractional ideal. With
    // 3x3 cells there are only 512 candidate 0/1 top-up patterns, so pick the feasible
    // one that maximizes the total fractional part (exact integer remainders).
    std::array<std::array<std::size_t, 3>, kNumLabels> rem{};
    std::array<std::size_t, kNumLabels> row_need{};
    std::array<std::size_t, 3> col_need{};
    for (std::size_t c = 0; c < kNumLabels; ++c) {
        for (std::size_t s = 0; s < 3; ++s) {
            const std::size_t prod = class_sizes[c] * sizes[kAllSplits[s]];
            alloc[c][s] = prod / n;
            rem[c][s] = prod % n;
        }
    }
    for (std::size_t c = 0; c < kNumLabels; ++c) {
        row_need[c] = class_sizes[c];
        for (std::size_t s = 0; s < 3; ++s) row_need[c] -= alloc[c][s];
    }
    for (std::size_t s = 0; s < 3; ++s) {
        col_need[s] = sizes[kAllSplits[s]];
        for (std::size_t c = 0; c < kNumLabels; ++c) col_need[s] -= alloc[c][s];
    }

    int best_mask = -1;
    std::size_t best_score = 0;
    for (int mask = 0; mask < (1 << 9); ++mask) {
        std::array<std::size_t, kNumLabels> rows{};
        std::array<std::size_t, 3> cols{};
        std::size_t score = 0;
        bool ok = true;
        for (int bit = 0; bit < 9 && ok; ++bit) {
            if (!(mask & (1 << bit))) continue;
            const auto c = static_cast<std::size_t>(bit / 3);
            const auto s = static_cast<std::size_t>(bit % 3);
            if (rem[c][s] == 0) ok = false;
            ++rows[c];
            ++cols[s];
            score += rem[c][s];
        }
        if (!ok || rows != row_need || cols != col_need) continue;
        if (best_mask < 0 || score > best_score) {
            best_mask = mask;
            best_score = score;
        }
    }
    if (best_mask < 0) throw StateError("no feasible stratified allocation");  // unreachable by matrix rounding
    for (int bit = 0; bit < 9; ++bit) {
        if (best_mask & (1 << bit)) ++alloc[static_cast<std::size_t>(bit / 3)][static_cast<std::size_t>(bit % 3)];
    }
    return alloc;
}

Dataset stratified_split(const Dataset& d, const SplitSizes& sizes, uint64_t seed) {
    if (sizes.total() != d.size()) {
        throw ArgumentError("split sizes sum to " + std::to_string(sizes.total()) + " but dataset has " +
                            std::to_string(d.size()) + " reviews");
    }
    std::array<std::vector<std::size_t>, kNumLabels> members;
    for (std::size_t i = 0; i < d.reviews.size(); ++i) {
        const auto& r = d.reviews[i];
        if (!r.label) throw StateError("review " + r.id + " is unlabeled; cannot stratify");
        members[index_of(*r.label)].push_back(i);
    }
    std::array<std::size_t, kNumLabels> class_sizes{};
    for (std::size_t c = 0; c < kNumLabels; ++c) class_sizes[c] = members[c].size();
    const auto alloc = stratified_allocation(class_sizes, sizes);

    Dataset out = d;
    Rng rng(seed);
    for (std::size_t c = 0; c < kNumLabels; ++c) {
        auto& idx = members[c];
        rng.shuffle(idx);
        std::size_t pos = 0;
        for (std::size_t s = 0; s < 3; ++s) {
            for (std::size_t k = 0; k < alloc[c][s]; ++k) out.reviews[idx[pos++]].split = kAllSplits[s];
        }
    }
    return out;
}

std::size_t char_count(std::string_view text) { return unicode::length(text); }

std::size_t word_count(std::string_view text) { return unicode::split_whitespace(text).size(); }

DatasetStats compute_stats(const Dataset& d) {
    DatasetStats s;
    s.total = d.size();
    double chars = 0.0;
    double words = 0.0;
    for (const auto& r : d.reviews) {
        chars += static_cast<double>(char_count(r.text));
        words += static_cast<double>(word_count(r.text));
        const std::size_t col = r.split ? static_cast<std::size_t>(*r.split) : 3;
        ++s.split_totals[col];
        if (!r.label) {
            ++s.unlabeled;
            continue;
        }
        const auto li = index_of(*r.label);
        ++s.counts[li][col];
        ++s.label_totals[li];
        ++s.categories[li][r.category.value_or("unknown")];
    }
    if (s.total > 0) {
        s.mean_chars = chars / static_cast<double>(s.total);
        s.mean_words = words / static_cast<double>(s.total);
    }
    return s;
}

json to_json(const DatasetStats& s) {
    json j;
    j["total"] = s.total;
    j["unlabeled"] = s.unlabeled;
    j["mean_chars"] = s.mean_chars;
    j["mean_words"] = s.mean_words;
    json labels = json::object();
    for (auto l : kAllLabels) {
        const auto li = index_of(l);
        json row = {{"all", s.label_totals[li]}};
        for (auto sp : kAllSplits) row[std::string(to_string(sp))] = s.counts[li][static_cast<std::size_t>(sp)];
        row["unsplit"] = s.counts[li][3];
        row["categories"] = s.categories[li];
        labels[std::string(to_string(l))] = std::move(row);
    }
    j["labels"] = std::move(labels);
    json splits = json::object();
    for (auto sp : kAllSplits) splits[std::string(to_string(sp))] = s.split_totals[static_cast<std::size_t>(sp)];
    splits["unsplit"] = s.split_totals[3];
    j["splits"] = std::move(splits);
    return j;
}

namespace {
std::mutex g_clock_mutex;
std::optional<std::string> g_fixed_timestamp;
} // namespace

void set_fixed_timestamp(std::optional<std::string> ts) {
    std::lock_guard lock(g_clock_mutex);
    g_fixed_timestamp = std::move(ts);
}

std::string utc_timestamp() {
    {
        std::lock_guard lock(g_clock_mutex);
        if (g_fixed_timestamp) return *g_fixed_timestamp;
    }
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace dualq
