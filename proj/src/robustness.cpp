#include "dualq/robustness.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "dualq/errors.hpp"
#include "dualq/eval.hpp"
#include "dualq/unicode.hpp"

namespace dualq {

namespace {

constexpr std::array<std::string_view, 5> kPerturbationNames = {"period", "first_letter", "lower", "pl_chars",
                                                                "pl_chars_once"};

bool is_ws(char32_t c) { return unicode::is_whitespace(c); }

std::u32string toggle_period(std::u32string s, bool strict) {
    std::size_t end = s.size();
    while (end > 0 && is_ws(s[end - 1])) --end;
    if (end == 0) {
        s.insert(s.begin(), U'.');
        return s;
    }
    const char32_t last = s[end - 1];
    if (strict) {
        if (last == U'.') {
            s.erase(end - 1, 1);
        } else {
            s.insert(end, 1, U'.');
        }
        return s;
    }
    if (last == U'.') {
        // only a lone period after a word character is ours to remove; removing it
        // after whitespace or punctuation could not be undone by appending
        const bool lone = end == 1 || (!unicode::is_punct(s[end - 2]) && !is_ws(s[end - 2]));
        if (lone) s.erase(end - 1, 1);
        return s;
    }
    if (!unicode::is_punct(last)) s.insert(end, 1, U'.');
    return s;
}

std::u32string flip_first_letter(std::u32string s) {
    for (auto& c : s) {
        if (!unicode::is_alpha(c)) continue;
        const char32_t lower = unicode::to_lower(c);
        const char32_t flipped = lower != c ? lower : unicode::to_upper(c);
        // characters without a round-tripping case pair are left alone
        if (flipped != c) {
            const char32_t back = lower != c ? unicode::to_upper(flipped) : unicode::to_lower(flipped);
            if (back == c) c = flipped;
        }
        break;
    }
    return s;
}

} // namespace

std::string_view to_string(PerturbationKind k) { return kPerturbationNames[static_cast<std::size_t>(k)]; }

PerturbationKind perturbation_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kPerturbationNames.size(); ++i) {
        if (kPerturbationNames[i] == s) return kAllPerturbations[i];
    }
    throw ParseError("unknown perturbation kind \"" + std::string(s) + "\"");
}

char32_t strip_polish_diacritic(char32_t c) {
    switch (c) {
    case U'ą': return U'a';
    case U'ę': return U'e';
    case U'ć': return U'c';
    case U'ł': return U'l';
    case U'ń': return U'n';
    case U'ó': return U'o';
    case U'ż': return U'z';
    case U'ź': return U'z';
    case U'Ą': return U'A';
    case U'Ę': return U'E';
    case U'Ć': return U'C';
    case U'Ł': return U'L';
    case U'Ń': return U'N';
    case U'Ó': return U'O';
    case U'Ż': return U'Z';
    case U'Ź': return U'Z';
    default: return c;
    }
}

std::string perturb(std::string_view text, PerturbationKind kind, const PerturbOptions& opts) {
    auto cps = unicode::decode(text);
    switch (kind) {
    case PerturbationKind::Period:
        cps = toggle_period(std::move(cps), opts.strict_period);
        break;
    case PerturbationKind::FirstLetter:
        cps = flip_first_letter(std::move(cps));
        break;
    case PerturbationKind::Lower:
        for (auto& c : cps) c = unicode::to_lower(c);
        break;
    case PerturbationKind::PlChars:
        for (auto& c : cps) c = strip_polish_diacritic(c);
        break;
    case PerturbationKind::PlCharsOnce: {
        std::unordered_set<char32_t> done;
        for (auto& c : cps) {
            const char32_t base = strip_polish_diacritic(c);
            if (base != c && done.insert(c).second) c = base;
        }
        break;
    }
    }
    return unicode::encode(cps);
}

PredictFn predict_fn(const Classifier& c) {
    return [&c](const std::string& text, uint64_t) {
        const std::vector<std::string> one = {text};
        return c.predict(one).at(0).label;
    };
}

DisagreementReport disagreement(const PredictFn& predict, std::span<const std::string> texts, PerturbationKind kind,
                                std::size_t runs, std::span<const uint64_t> seeds, const PerturbOptions& opts) {
    if (runs == 0) throw ArgumentError("runs must be at least 1");
    if (texts.empty()) throw ArgumentError("disagreement needs at least one text");
    if (!seeds.empty() && seeds.size() != runs) {
        throw ArgumentError("got " + std::to_string(seeds.size()) + " seeds for " + std::to_string(runs) + " runs");
    }
    DisagreementReport rep;
    rep.kind = kind;
    rep.n = texts.size();
    for (std::size_t r = 0; r < runs; ++r) rep.seeds.push_back(seeds.empty() ? r : seeds[r]);

    std::vector<std::string> perturbed;
    perturbed.reserve(texts.size());
    for (const auto& t : texts) perturbed.push_back(perturb(t, kind, opts));

    auto call = [&](const std::string& text, std::size_t item, std::size_t run, const char* which) {
        try {
            return predict(text, rep.seeds[run]);
        } catch (const std::exception& e) {
            throw BackendError("prediction failed on item " + std::to_string(item) + " (" + which + ", run " +
                               std::to_string(run + 1) + "): " + e.what());
        }
    };
    for (std::size_t r = 0; r < runs; ++r) {
        std::size_t changed = 0;
        for (std::size_t i = 0; i < texts.size(); ++i) {
            const Label a = call(texts[i], i, r, "original");
            const Label b = call(perturbed[i], i, r, "perturbed");
            changed += a != b;
        }
        rep.changed.push_back(changed);
        rep.per_run.push_back(100.0 * static_cast<double>(changed) / static_cast<double>(texts.size()));
    }
    const bool constant =
        std::all_of(rep.per_run.begin(), rep.per_run.end(), [&](double x) { return x == rep.per_run.front(); });
    if (constant) {
        rep.mean = rep.per_run.front();
        rep.std = 0.0;
    } else {
        rep.mean = std::accumulate(rep.per_run.begin(), rep.per_run.end(), 0.0) / static_cast<double>(runs);
        rep.std = sample_std(rep.per_run);
    }
    return rep;
}

nlohmann::json to_json(const DisagreementReport& r) {
    return {{"kind", to_string(r.kind)}, {"n", r.n},       {"seeds", r.seeds}, {"per_run", r.per_run},
            {"changed", r.changed},      {"mean", r.mean}, {"std", r.std}};
}

} // namespace dualq
