#include <doctest.h>

#include <set>

#include "dualq/baseline.hpp"
#include "dualq/errors.hpp"
#include "dualq/rng.hpp"
#include "dualq/unicode.hpp"

using namespace dualq;

namespace {

const std::vector<std::string> kFillers = {"produkt", "świetny", "polecam", "krem", "Zapach", "ŁADNY", "cena",
                                           "jakość", "kawa", "smaczna", "mleko", "dzieci", "ok", "123", "żółć",
                                           "opakowanie", "szybka", "dostawa", "wow", "x"};
const std::vector<std::string> kSeparators = {" ", "  ", ", ", ". ", "! ", "\n", " - ", " (", ") "};

std::string random_filler_text(Rng& rng, std::size_t words) {
    std::string s;
    for (std::size_t i = 0; i < words; ++i) {
        if (i) s += kSeparators[rng.below(kSeparators.size())];
        s += kFillers[rng.below(kFillers.size())];
    }
    return s;
}

class ThrowingLemmatizer final : public Lemmatizer {
public:
    std::string lemma(std::string_view token) const override {
        if (token == "bomba") throw std::runtime_error("boom");
        return std::string(token);
    }
    std::string name() const override { return "throwing"; }
};

} // namespace

TEST_SUITE("baseline") {

TEST_CASE("normalize_text with the null lemmatizer") {
    NullLemmatizer null;
    CHECK(normalize_text("Kupiłem w Niemczech.", null) == std::vector<std::string>{"kupiłem", "w", "niemczech"});
    CHECK(normalize_text("", null).empty());
    CHECK(normalize_text("  ...!!  ", null).empty());
    CHECK(normalize_text("ŻÓŁĆ,gęślą-jaźń", null) == std::vector<std::string>{"żółć", "gęślą", "jaźń"});
}

TEST_CASE("dictionary lemmatizer: 20-word checklist") {
    const auto lem = DictionaryLemmatizer::from_file(std::string(DUALQ_SOURCE_DIR) + "/data/lemmas_pl.tsv");
    CHECK(normalize_text("Niemcy", lem) == std::vector<std::string>{"niemcy"});
    const std::vector<std::pair<std::string, std::string>> checklist = {
        {"Niemczech", "niemcy"},   {"Niemiec", "niemcy"},     {"niemiecka", "niemiecki"}, {"niemieckiej", "niemiecki"},
        {"Polsce", "polska"},      {"polską", "polski"},      {"Włoszech", "włochy"},     {"włoskie", "włoski"},
        {"Francji", "francja"},    {"francuskiego", "francuski"}, {"Czechach", "czechy"}, {"czeska", "czeski"},
        {"Austrii", "austria"},    {"Węgrzech", "węgry"},     {"Hiszpanii", "hiszpania"}, {"Chinach", "chiny"},
        {"chińskie", "chiński"},   {"USA", "usa"},            {"kupiłam", "kupić"},       {"produkt", "produkt"},
    };
    REQUIRE(checklist.size() == 20);
    for (const auto& [form, lemma] : checklist) {
        CAPTURE(form);
        CHECK(normalize_text(form, lem) == std::vector<std::string>{lemma});
    }
}

TEST_CASE("lemmatizer failures surface as backend errors naming the token") {
    ThrowingLemmatizer bad;
    try {
        normalize_text("to jest bomba", bad);
        FAIL("expected BackendError");
    } catch (const BackendError& e) {
        CHECK(std::string(e.what()).find("\"bomba\"") != std::string::npos);
    }
}

TEST_CASE("builtin lexicon starts with the published base forms") {
    const auto base = builtin_base_phrases();
    CHECK(base.size() == 88);
    const auto& lex = Lexicon::builtin();
    REQUIRE(lex.size() > base.size());
    for (std::size_t i = 0; i < base.size(); ++i) CHECK(lex.phrases()[i] == base[i]);
    std::set<std::string> uniq(lex.phrases().begin(), lex.phrases().end());
    CHECK(uniq.size() == lex.size());
    for (const auto& p : lex.phrases()) CHECK(unicode::to_lower(p) == p);
    CHECK(lex.contains("nowa zelandia"));
    CHECK(lex.contains("niemczech"));
}

TEST_CASE("lexicon file parsing") {
    const auto lex = Lexicon::parse("# comment\nAnglia\n\n  nowa   zelandia  # trailing\nanglia\n");
    CHECK(lex.phrases() == std::vector<std::string>{"anglia", "nowa zelandia"});
}

TEST_CASE("classify_baseline decisions") {
    NullLemmatizer null;
    const auto& lex = Lexicon::builtin();
    CHECK(classify_baseline("Ten krem to niemiecki produkt", lex, null).label == Label::DualQuality);
    CHECK(classify_baseline("Świetny produkt, polecam", lex, null).label == Label::Standard);
    CHECK(classify_baseline("Kupiony w nowa zelandia.", lex, null).label == Label::DualQuality);
    CHECK(classify_baseline("Kupiony w Nowej Zelandii.", lex, null).label == Label::DualQuality);
    CHECK(classify_baseline("nowa, zelandia", lex, null).label == Label::DualQuality);
    CHECK(classify_baseline("zelandia nowa", lex, null).label == Label::Standard);
    CHECK(classify_baseline("Kupiłem w Niemczech.", lex, null).label == Label::DualQuality);
    // token-boundary matching only
    CHECK(classify_baseline("polskam", lex, null).label == Label::Standard);
    CHECK(classify_baseline("usability", lex, null).label == Label::Standard);

    const auto p = classify_baseline("Francja", lex, null);
    CHECK(p.prob(Label::DualQuality) == 1.0);
    CHECK(p.prob(Label::Standard) == 0.0);
    CHECK(p.prob(Label::OtherProblems) == 0.0);

    const auto lem = DictionaryLemmatizer::from_file(std::string(DUALQ_SOURCE_DIR) + "/data/lemmas_pl.tsv");
    const Lexicon base(builtin_base_phrases());
    CHECK(classify_baseline("Kupiłem w Niemczech.", base, lem).label == Label::DualQuality);
    CHECK(classify_baseline("Kupiłem w Niemczech.", base, null).label == Label::Standard);
}

TEST_CASE("property: lexicon phrases flip, fillers never do") {
    NullLemmatizer null;
    const auto& lex = Lexicon::builtin();
    Rng rng(5);
    for (int t = 0; t < 2000; ++t) {
        const auto text = random_filler_text(rng, rng.below(15));
        REQUIRE(classify_baseline(text, lex, null).label == Label::Standard);
        const auto& phrase = lex.phrases()[rng.below(lex.size())];
        CHECK(classify_baseline(text + " " + phrase, lex, null).label == Label::DualQuality);
        CHECK(classify_baseline(text + " " + random_filler_text(rng, 3), lex, null).label == Label::Standard);
        const auto flagged = text + " " + phrase;
        CHECK(classify_baseline(flagged + " " + random_filler_text(rng, 3), lex, null).label == Label::DualQuality);
    }
}

TEST_CASE("property: case invariance and never other problems (10,000 texts)") {
    NullLemmatizer null;
    const auto& lex = Lexicon::builtin();
    Rng rng(6);
    for (int t = 0; t < 10000; ++t) {
        auto text = random_filler_text(rng, rng.below(12));
        if (rng.chance(0.3)) text += " " + lex.phrases()[rng.below(lex.size())];
        const auto a = classify_baseline(text, lex, null);
        const auto b = classify_baseline(unicode::to_upper(text), lex, null);
        CHECK(a.label == b.label);
        CHECK(a.label != Label::OtherProblems);
    }
}

TEST_CASE("BaselineClassifier keeps input order") {
    BaselineClassifier clf;
    const std::vector<std::string> texts = {"z Niemiec", "dobre", "włoska kawa", "ok"};
    const auto preds = clf.predict(texts);
    REQUIRE(preds.size() == 4);
    CHECK(preds[0].label == Label::DualQuality);
    CHECK(preds[1].label == Label::Standard);
    CHECK(preds[2].label == Label::DualQuality);
    CHECK(preds[3].label == Label::Standard);
    CHECK(clf.snapshot()["lexicon"] == "builtin");
}

}
