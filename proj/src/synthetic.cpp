#include "dualq/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "dualq/rng.hpp"
#include "dualq/unicode.hpp"

namespace dualq::synthetic {

namespace {

constexpr std::string_view kNeutral[] = {
    "w",          "i",           "z",           "na",          "do",          "to",         "jest",
    "się",        "nie",         "bardzo",      "dobry",       "produkt",     "zapach",     "krem",
    "skóra",      "cena",        "jakość",      "polecam",     "świetny",     "opakowanie", "używam",
    "codziennie", "kupiłam",     "kupiłem",     "smak",        "kawa",        "herbata",    "szampon",
    "włosy",      "balsam",      "delikatny",   "przyjemny",   "konsystencja", "wydajność",  "wydajny",
    "trwały",     "szybko",      "dzieci",      "rodzina",     "łagodny",     "naturalny",  "skład",
    "efekt",      "tydzień",     "miesiąc",     "stosowania",  "rano",        "wieczorem",  "działa",
    "nawilża",    "odżywia",     "pachnie",     "intensywnie", "lekki",       "tłusty",     "suchy",
    "wrażliwej",  "cerze",       "opinia",      "ogólnie",     "zadowolona",  "zadowolony", "niestety",
    "również",    "naprawdę",    "wystarczająco", "proszek",   "pranie",      "kolor",      "ubrania",
    "czekolada",  "słodki",      "soczewki",    "maseczka",    "tabletki",    "witaminy",   "zdrowie",
    "kuchnia",    "naczynia",    "płyn",        "zmywania",    "mieszkanie",  "zabawka",    "pieluszki",
    "mleko",      "przesyłka",   "sklep",       "ponownie",    "zdecydowanie", "rewelacyjny", "przeciętny",
    "wygodny",    "praktyczny",  "porządny",    "estetyczny",  "ok",          "a",          "u",
    "jak",        "ale",         "bez",         "po",          "ten",         "tak",        "już",
};

constexpr std::string_view kDualQuality[] = {
    "za granicą",      "w niemczech",    "niemiecka wersja", "na polski rynek",   "inny skład",
    "w austrii",       "w naszym kraju", "z niemiec",        "czeska wersja",     "lepsza jakość",
    "kupiony we francji", "wersja zagraniczna", "niż u nas",  "w czechach",        "zachodnia wersja",
};

constexpr std::string_view kOtherProblems[] = {
    "podróbka",        "podrobiony",        "gorsza partia",   "pogorszenie jakości", "inny niż zamówiony",
    "brak daty ważności", "oszustwo",       "wprowadza w błąd", "w innym sklepie",   "stara partia",
    "mniejsza gramatura", "brak instrukcji",
};

constexpr std::string_view kDecoy[] = {"włoski", "hiszpański", "francuski", "niemiecki", "szwajcarski"};

constexpr std::array<std::string_view, 7> kCategories = {
    "Beauty", "Delicacies", "Health", "Home & Interior", "For children", "Household chemicals", "Other",
};

// Category weights per label (dual quality leans to home and children, other problems to beauty).
constexpr std::array<std::array<int, 7>, kNumLabels> kCategoryWeights = {{
    {20, 15, 12, 25, 15, 10, 3},
    {47, 12, 12, 10, 7, 8, 4},
    {30, 18, 17, 11, 6, 10, 8},
}};

std::size_t cp_len(std::string_view s) { return unicode::length(s); }

template <std::size_t N>
std::string_view pick(Rng& rng, const std::string_view (&xs)[N]) {
    return xs[rng.below(N)];
}

std::string capitalize(std::string_view w) {
    auto cps = unicode::decode(w);
    if (!cps.empty()) cps[0] = unicode::to_upper(cps[0]);
    return unicode::encode(cps);
}

std::string pick_category(Rng& rng, Label l) {
    const auto& w = kCategoryWeights[index_of(l)];
    int total = 0;
    for (int x : w) total += x;
    auto r = static_cast<int>(rng.below(static_cast<uint64_t>(total)));
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (r < w[i]) return std::string(kCategories[i]);
        r -= w[i];
    }
    return std::string(kCategories.back());
}

std::string build_text(Rng& rng, Label label, std::size_t words, double chars_per_word, bool decoy) {
    // Signal phrases first, as word groups that must stay adjacent.
    std::vector<std::vector<std::string>> groups;
    auto add_phrase = [&](std::string_view p) {
        auto ws = unicode::split_whitespace(p);
        groups.push_back(std::move(ws));
    };
    if (label == Label::DualQuality) {
        const auto n = 1 + rng.below(3);
        for (uint64_t i = 0; i < n; ++i) add_phrase(pick(rng, kDualQuality));
    } else if (label == Label::OtherProblems) {
        const auto n = 1 + rng.below(2);
        for (uint64_t i = 0; i < n; ++i) add_phrase(pick(rng, kOtherProblems));
    }
    if (decoy) add_phrase(pick(rng, kDecoy));

    std::size_t fixed_words = 0;
    std::size_t fixed_letters = 0;
    for (const auto& g : groups) {
        fixed_words += g.size();
        for (const auto& w : g) fixed_letters += cp_len(w);
    }
    words = std::max(words, fixed_words + 1);
    const std::size_t free_words = words - fixed_words;

    // Sentence breaks: roughly every 7 words, plus the final one.
    const auto sentences = std::max<std::size_t>(1, (words + 6) / 7);
    const auto target_chars = static_cast<long>(std::lround(chars_per_word * static_cast<double>(words)));
    long letter_budget = target_chars - static_cast<long>(words - 1) - static_cast<long>(sentences) -
                         static_cast<long>(fixed_letters);

    std::vector<std::string> free;
    free.reserve(free_words);
    for (std::size_t i = 0; i < free_words; ++i) {
        const double desired = static_cast<double>(letter_budget) / static_cast<double>(free_words - i);
        // Candidates whose length is within 1 of the desired per-word length; widen if none.
        std::vector<std::string_view> cands;
        for (double slack = 1.0; cands.empty(); slack += 1.0) {
            for (auto w : kNeutral) {
                if (std::fabs(static_cast<double>(cp_len(w)) - desired) <= slack) cands.push_back(w);
            }
        }
        const auto w = cands[rng.below(cands.size())];
        letter_budget -= static_cast<long>(cp_len(w));
        free.emplace_back(w);
    }

    // Interleave phrase groups at random positions among free words.
    std::vector<std::string> seq = std::move(free);
    for (auto& g : groups) {
        const auto pos = static_cast<std::ptrdiff_t>(rng.below(seq.size() + 1));
        seq.insert(seq.begin() + pos, g.begin(), g.end());
    }

    // Choose sentence-final positions: evenly spaced, last word always final.
    std::vector<bool> ends(seq.size(), false);
    for (std::size_t s = 1; s <= sentences; ++s) ends[(s * seq.size()) / sentences - 1] = true;

    std::string out;
    bool start = true;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i > 0) out += ' ';
        out += start ? capitalize(seq[i]) : seq[i];
        start = ends[i];
        if (ends[i]) out += (rng.chance(0.1) ? '!' : '.');
    }
    return out;
}

std::size_t draw_words(Rng& rng, double mean) {
    // Uniform on [mean - 23, mean + 23]; symmetric so the sample mean tracks `mean`.
    const auto m = static_cast<int64_t>(std::lround(mean));
    return static_cast<std::size_t>(rng.between(std::max<int64_t>(4, m - 23), m + 23));
}

std::string padded_id(std::string_view prefix, std::size_t n, int width) {
    auto s = std::to_string(n);
    if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
    return std::string(prefix) + s;
}

} // namespace

std::string make_text(Label label, std::size_t words, double chars_per_word, uint64_t seed, bool decoy) {
    Rng rng(seed);
    return build_text(rng, label, words, chars_per_word, decoy);
}

Dataset generate_fixture(const FixtureSpec& spec) {
    Rng rng(spec.seed);
    const double cpw = spec.target_mean_chars / spec.target_mean_words;

    std::vector<Review> reviews;
    auto emit = [&](Label l, Source src) {
        Review r;
        r.text = build_text(rng, l, draw_words(rng, spec.target_mean_words), cpw, l == Label::Standard && rng.chance(0.05));
        r.lang = "pl";
        r.source = src;
        r.category = pick_category(rng, l);
        r.label = l;
        if (l == Label::OtherProblems) {
            r.subtype = ProblemSubtype{static_cast<ProblemSubtype::Kind>(rng.below(8)), {}};
        }
        reviews.push_back(std::move(r));
    };
    const std::array<Source, 3> dq_src = {Source::Internet, Source::CeneoWizaz, Source::DemoSystem};
    for (std::size_t s = 0; s < 3; ++s) {
        for (std::size_t i = 0; i < spec.dq_sources[s]; ++i) emit(Label::DualQuality, dq_src[s]);
    }
    for (std::size_t i = spec.dq_sources[0] + spec.dq_sources[1] + spec.dq_sources[2]; i < spec.dual_quality; ++i) {
        emit(Label::DualQuality, Source::Synthetic);
    }
    for (std::size_t i = 0; i < spec.other_problems; ++i) {
        emit(Label::OtherProblems, rng.chance(0.7) ? Source::CeneoWizaz : Source::DemoSystem);
    }
    for (std::size_t i = 0; i < spec.standard; ++i) {
        emit(Label::Standard, rng.chance(0.8) ? Source::CeneoWizaz : Source::DemoSystem);
    }

    rng.shuffle(reviews);
    for (std::size_t i = 0; i < reviews.size(); ++i) reviews[i].id = padded_id("dq-", i + 1, 4);

    Dataset d;
    d.meta = {"dq-synthetic", "2023-01-01T00:00:00Z", kSchemaVersion};
    d.reviews = std::move(reviews);
    if (spec.splits.total() == d.size()) d = stratified_split(d, spec.splits, spec.seed);
    return d;
}

Dataset generate_pool(const PoolSpec& spec) {
    Rng rng(spec.seed);
    const double cpw = 261.0 / 41.0;
    const auto positives = static_cast<std::size_t>(std::lround(spec.positive_rate * static_cast<double>(spec.size)));
    const auto others = static_cast<std::size_t>(std::lround(spec.other_problems_rate * static_cast<double>(spec.size)));

    std::vector<Label> labels(spec.size, Label::Standard);
    for (std::size_t i = 0; i < positives && i < spec.size; ++i) labels[i] = Label::DualQuality;
    for (std::size_t i = positives; i < positives + others && i < spec.size; ++i) labels[i] = Label::OtherProblems;
    rng.shuffle(labels);

    Dataset d;
    d.meta = {"pool", "2023-01-01T00:00:00Z", kSchemaVersion};
    d.reviews.reserve(spec.size);
    for (std::size_t i = 0; i < spec.size; ++i) {
        Review r;
        r.id = padded_id(spec.id_prefix, i + 1, 5);
        const bool decoy = labels[i] == Label::Standard && rng.chance(spec.decoy_rate);
        r.text = build_text(rng, labels[i], draw_words(rng, spec.target_mean_words), cpw, decoy);
        r.source = Source::CeneoWizaz;
        r.category = pick_category(rng, labels[i]);
        r.label = labels[i];
        d.reviews.push_back(std::move(r));
    }
    return d;
}

Dataset generate_seed_set(const SeedSpec& spec) {
    Rng rng(spec.seed);
    const double cpw = 261.0 / 41.0;
    Dataset d;
    d.meta = {"seed", "2023-01-01T00:00:00Z", kSchemaVersion};
    for (std::size_t i = 0; i < spec.positives + spec.negatives; ++i) {
        Review r;
        const bool pos = i < spec.positives;
        const Label l = pos ? Label::DualQuality : Label::Standard;
        r.id = padded_id(spec.id_prefix, i + 1, 4);
        r.text = build_text(rng, l, draw_words(rng, 41.0), cpw, false);
        r.source = pos ? Source::Internet : Source::CeneoWizaz;
        r.label = l;
        d.reviews.push_back(std::move(r));
    }
    return d;
}

} // namespace dualq::synthetic
