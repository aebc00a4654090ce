#include "dualq/baseline.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "dualq/errors.hpp"
#include "dualq/unicode.hpp"

namespace dualq {

namespace resources {
extern const std::string_view kDefaultLexicon;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArgumentError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

template <typename F>
void for_each_line(std::string_view text, F&& f) {
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = unicode::trim(line);
        if (!line.empty()) f(line, line_no);
        if (nl == text.size()) break;
        pos = nl + 1;
    }
}

// Splits lowercase text into word tokens without lemmatization.
std::vector<std::string> raw_tokens(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char32_t c : unicode::decode(text)) {
        if (unicode::is_word_char(c)) {
            unicode::append(cur, unicode::to_lower(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

} // namespace

DictionaryLemmatizer::DictionaryLemmatizer(std::unordered_map<std::string, std::string> table, std::string name)
    : table_(std::move(table)), name_(std::move(name)) {}

DictionaryLemmatizer DictionaryLemmatizer::from_string(std::string_view tsv, std::string name) {
    std::unordered_map<std::string, std::string> table;
    for_each_line(tsv, [&](std::string_view line, std::size_t line_no) {
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos) throw ParseError("expected form<TAB>lemma", line_no);
        auto form = unicode::to_lower(unicode::trim(line.substr(0, tab)));
        auto lemma = unicode::to_lower(unicode::trim(line.substr(tab + 1)));
        if (form.empty() || lemma.empty()) throw ParseError("empty form or lemma", line_no);
        table.emplace(std::move(form), std::move(lemma));
    });
    return DictionaryLemmatizer(std::move(table), std::move(name));
}

DictionaryLemmatizer DictionaryLemmatizer::from_file(const std::filesystem::path& path) {
    return from_string(read_file(path), "dictionary:" + path.filename().string());
}

std::string DictionaryLemmatizer::lemma(std::string_view token) const {
    auto it = table_.find(std::string(token));
    return it == table_.end() ? std::string(token) : it->second;
}

std::vector<std::string> normalize_text(std::string_view text, const Lemmatizer& lemmatizer) {
    auto tokens = raw_tokens(text);
    for (auto& t : tokens) {
        try {
            t = lemmatizer.lemma(t);
        } catch (const std::exception& e) {
            throw BackendError("lemmatizer '" + lemmatizer.name() + "' failed on token \"" + t + "\": " + e.what());
        }
    }
    return tokens;
}

Lexicon::Lexicon(const std::vector<std::string>& phrases) {
    std::unordered_set<std::string> seen;
    for (const auto& p : phrases) {
        auto toks = raw_tokens(p);
        if (toks.empty()) continue;
        std::string canonical;
        for (const auto& t : toks) {
            if (!canonical.empty()) canonical += ' ';
            canonical += t;
        }
        if (!seen.insert(canonical).second) continue;
        by_first_[toks.front()].push_back(phrases_.size());
        phrases_.push_back(std::move(canonical));
        tokenized_.push_back(std::move(toks));
    }
}

Lexicon Lexicon::parse(std::string_view text) {
    std::vector<std::string> phrases;
    for_each_line(text, [&](std::string_view line, std::size_t) { phrases.emplace_back(line); });
    return Lexicon(phrases);
}

Lexicon Lexicon::from_file(const std::filesystem::path& path) { return parse(read_file(path)); }

const Lexicon& Lexicon::builtin() {
    static const Lexicon lex = parse(resources::kDefaultLexicon);
    return lex;
}

bool Lexicon::contains(std::string_view phrase) const {
    for (const auto& p : phrases_) {
        if (p == phrase) return true;
    }
    return false;
}

std::optional<std::string> Lexicon::find_in(std::span<const std::string> tokens) const {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        auto it = by_first_.find(tokens[i]);
        if (it == by_first_.end()) continue;
        for (auto idx : it->second) {
            const auto& phrase = tokenized_[idx];
            if (i + phrase.size() > tokens.size()) continue;
            bool match = true;
            for (std::size_t k = 1; k < phrase.size() && match; ++k) match = tokens[i + k] == phrase[k];
            if (match) return phrases_[idx];
        }
    }
    return std::nullopt;
}

std::vector<std::string> builtin_base_phrases() {
    return {
        "anglia",     "angielski",  "szkocja",     "szkocki",     "irlandia",    "irlandzki",   "walia",
        "walijski",   "dania",      "duński",      "finlandia",   "fiński",      "norwegia",    "norweski",
        "szwecja",    "szwedzki",   "szwajcaria",  "szwajcarski", "estonia",     "estoński",    "łotwa",
        "łotewski",   "litwa",      "litewski",    "austria",     "austryjacki", "belgia",      "belgijski",
        "francja",    "francuski",  "niemcy",      "niemiecki",   "włochy",      "włoski",      "holandia",
        "niderlandzki", "holenderski", "usa",      "kanada",      "kanadyjski",  "meksyk",      "meksykański",
        "ukraina",    "ukraiński",  "rosja",       "rosyjski",    "białoruś",    "białoruski",  "polska",
        "polski",     "czechy",     "czeski",      "słowacja",    "słowacki",    "węgry",       "węgierski",
        "rumunia",    "rumuński",   "bułgaria",    "bułgarski",   "grecja",      "grecki",      "hiszpania",
        "hiszpański", "brazylia",   "brazylijski", "portugalia",  "portugalski", "australia",   "australijski",
        "nowa zelandia", "maoryjski", "gruzja",    "gruziński",   "izrael",      "hebrajski",   "egipt",
        "arabski",    "turcja",     "turecki",     "chiny",       "chiński",     "korea",       "koreański",
        "japonia",    "japoński",   "indie",       "hinduski",
    };
}

Prediction classify_baseline(std::string_view text, const Lexicon& lex, const Lemmatizer& lemmatizer) {
    const auto tokens = normalize_text(text, lemmatizer);
    const Label l = lex.find_in(tokens) ? Label::DualQuality : Label::Standard;
    return degenerate_prediction(l, "baseline-lexicon");
}

Prediction classify_baseline(const Review& r, const Lexicon& lex, const Lemmatizer& lemmatizer) {
    return classify_baseline(r.text, lex, lemmatizer);
}

BaselineClassifier::BaselineClassifier(Lexicon lex, std::shared_ptr<const Lemmatizer> lemmatizer)
    : lex_(std::move(lex)), lemmatizer_(std::move(lemmatizer)) {
    if (!lemmatizer_) lemmatizer_ = std::make_shared<NullLemmatizer>();
}

std::vector<Prediction> BaselineClassifier::predict(std::span<const std::string> texts) const {
    std::vector<Prediction> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(classify_baseline(t, lex_, *lemmatizer_));
    return out;
}

nlohmann::json BaselineClassifier::snapshot() const {
    nlohmann::json j = {{"kind", "baseline"}, {"model_id", model_id()}};
    if (const auto* dict = dynamic_cast<const DictionaryLemmatizer*>(lemmatizer_.get())) {
        nlohmann::json table = nlohmann::json::object();
        for (const auto& [form, lemma] : dict->table()) table[form] = lemma;
        j["lemmatizer"] = {{"name", dict->name()}, {"table", table}};
    } else {
        j["lemmatizer"] = lemmatizer_->name();
    }
    if (lex_.phrases() == Lexicon::builtin().phrases()) {
        j["lexicon"] = "builtin";
    } else {
        j["lexicon"] = lex_.phrases();
    }
    return j;
}

std::unique_ptr<BaselineClassifier> BaselineClassifier::from_snapshot(const nlohmann::json& j) {
    try {
        const auto& lex_json = j.at("lexicon");
        Lexicon lex = lex_json.is_string() && lex_json.get<std::string>() == "builtin"
                          ? Lexicon::builtin()
                          : Lexicon(lex_json.get<std::vector<std::string>>());
        std::shared_ptr<const Lemmatizer> lem = std::make_shared<NullLemmatizer>();
        if (auto it = j.find("lemmatizer"); it != j.end() && it->is_object()) {
            lem = std::make_shared<DictionaryLemmatizer>(
                it->at("table").get<std::unordered_map<std::string, std::string>>(), it->value("name", "dictionary"));
        } else if (it != j.end() && it->get<std::string>() != "null") {
            throw ArgumentError("unknown lemmatizer in snapshot: " + it->get<std::string>());
        }
        return std::make_unique<BaselineClassifier>(std::move(lex), std::move(lem));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad baseline snapshot: ") + e.what());
    }
}

} // namespace dualq
