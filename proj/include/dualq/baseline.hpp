#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dualq/prediction.hpp"

namespace dualq {

/// Maps one lowercase token to its lemma. Implementations may throw; callers wrap
/// failures in BackendError together with the offending token.
class Lemmatizer {
public:
    virtual ~Lemmatizer() = default;
    virtual std::string lemma(std::string_view token) const = 0;
    virtual std::string name() const = 0;
};

/// Identity: tokens are returned as they are (already lowercased).
class NullLemmatizer final : public Lemmatizer {
public:
    std::string lemma(std::string_view token) const override { return std::string(token); }
    std::string name() const override { return "null"; }
};

/// Form-to-lemma table read from a TSV file ("form<TAB>lemma" per line, '#' comments).
/// Unknown forms map to themselves.
class DictionaryLemmatizer final : public Lemmatizer {
public:
    explicit DictionaryLemmatizer(std::unordered_map<std::string, std::string> table, std::string name = "dictionary");
    static DictionaryLemmatizer from_file(const std::filesystem::path& path);
    static DictionaryLemmatizer from_string(std::string_view tsv, std::string name = "dictionary");

    std::string lemma(std::string_view token) const override;
    std::string name() const override { return name_; }
    std::size_t size() const { return table_.size(); }
    const std::unordered_map<std::string, std::string>& table() const { return table_; }

private:
    std::unordered_map<std::string, std::string> table_;
    std::string name_;
};

/// Lowercases, splits on anything that is not a letter, digit or combining mark, then
/// lemmatizes each token.
std::vector<std::string> normalize_text(std::string_view text, const Lemmatizer& lemmatizer);

/// Ordered set of lowercase phrases; multi-word phrases are stored as token sequences.
class Lexicon {
public:
    Lexicon() = default;
    /// Phrases are lowercased and tokenized; duplicates keep their first position.
    explicit Lexicon(const std::vector<std::string>& phrases);

    /// One phrase per line, '#' starts a comment.
    static Lexicon parse(std::string_view text);
    static Lexicon from_file(const std::filesystem::path& path);
    /// The shipped country/nationality list (base forms plus inflected variants).
    static const Lexicon& builtin();

    const std::vector<std::string>& phrases() const { return phrases_; }
    std::size_t size() const { return phrases_.size(); }
    bool contains(std::string_view phrase) const;

    /// First phrase found in the token sequence, if any.
    std::optional<std::string> find_in(std::span<const std::string> tokens) const;

private:
    std::vector<std::string> phrases_;
    std::vector<std::vector<std::string>> tokenized_;
    /// First token -> indices of phrases starting with it.
    std::unordered_map<std::string, std::vector<std::size_t>> by_first_;
};

/// Base forms transcribed from the published baseline description (88 phrases).
std::vector<std::string> builtin_base_phrases();

/// dual quality iff some lexicon phrase occurs in the normalized tokens, else standard.
Prediction classify_baseline(const Review& r, const Lexicon& lex, const Lemmatizer& lemmatizer);
Prediction classify_baseline(std::string_view text, const Lexicon& lex, const Lemmatizer& lemmatizer);

class BaselineClassifier final : public Classifier {
public:
    explicit BaselineClassifier(Lexicon lex = Lexicon::builtin(),
                                std::shared_ptr<const Lemmatizer> lemmatizer = std::make_shared<NullLemmatizer>());

    std::vector<Prediction> predict(std::span<const std::string> texts) const override;
    std::string model_id() const override { return "baseline-lexicon"; }
    nlohmann::json snapshot() const override;
    const Lexicon& lexicon() const { return lex_; }
    /// Inverse of snapshot(); dictionary lemmatizers are stored with their full table.
    static std::unique_ptr<BaselineClassifier> from_snapshot(const nlohmann::json& j);

private:
    Lexicon lex_;
    std::shared_ptr<const Lemmatizer> lemmatizer_;
};

} // namespace dualq
