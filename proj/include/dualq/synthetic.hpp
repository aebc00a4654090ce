#pragma once

#include <cstdint>

#include "dualq/corpus.hpp"

namespace dualq::synthetic {

/// Shape targets for the bundled stand-in corpus (the real review corpus is not public).
struct FixtureSpec {
    std::size_t dual_quality = 540;
    std::size_t other_problems = 281;
    std::size_t standard = 1136;
    SplitSizes splits{1200, 500, 257};
    double target_mean_chars = 261.0;
    double target_mean_words = 41.0;
    /// Sources of the dual-quality reviews: internet, ceneo/wizaz, demo system.
    std::array<std::size_t, 3> dq_sources{107, 265, 168};
    uint64_t seed = 2023;
};

Dataset generate_fixture(const FixtureSpec& spec = {});

/// Unlabeled pool for bootstrap simulations. Gold labels are kept in `label` so a
/// simulated annotator can look them up; callers strip them before scoring.
struct PoolSpec {
    std::size_t size = 5000;
    double positive_rate = 0.03;
    double other_problems_rate = 0.02;
    /// Probability that a negative mentions a country without any comparison.
    double decoy_rate = 0.05;
    double target_mean_words = 41.0;
    std::string id_prefix = "pool-";
    uint64_t seed = 7;
};

Dataset generate_pool(const PoolSpec& spec);

/// Small labeled base set: verified positives plus verified standard reviews.
struct SeedSpec {
    std::size_t positives = 30;
    std::size_t negatives = 100;
    std::string id_prefix = "seed-";
    uint64_t seed = 11;
};

Dataset generate_seed_set(const SeedSpec& spec);

/// One review text for the given class; word count is exactly `words`.
std::string make_text(Label label, std::size_t words, double chars_per_word, uint64_t seed, bool decoy = false);

} // namespace dualq::synthetic
