#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "vipar/eval.hpp"

using namespace vipar;

namespace {

Date d(int y, unsigned m, unsigned day) { return *Date::from_ymd(y, m, day); }

std::vector<PersonKey> people(const std::string& prefix, int n) {
    std::vector<PersonKey> out;
    for (int i = 0; i < n; ++i) out.push_back({prefix + std::to_string(i), d(1990, 1, 1).plus_days(i)});
    return out;
}

// List of `size` keys of which the first `hits` are outcomes.
std::vector<PersonKey> list_with_hits(const std::vector<PersonKey>& outcomes, std::size_t offset, int hits, int size,
                                      const std::string& filler) {
    std::vector<PersonKey> list(outcomes.begin() + static_cast<std::ptrdiff_t>(offset),
                                outcomes.begin() + static_cast<std::ptrdiff_t>(offset + static_cast<std::size_t>(hits)));
    for (const auto& k : people(filler, size - hits)) list.push_back(k);
    return list;
}

} // namespace

TEST(TemporalSplit, BoundaryIsInclusiveOnTrainingSide) {
    const PersonKey a{"A", d(1990, 1, 1)};
    std::vector<EventRecord> events = {
        {d(2014, 12, 31), EventType::shooting, "S1", kShootingImpliedFlags, {{a, Role::victim}}},
        {d(2015, 1, 2), EventType::shooting, "S2", kShootingImpliedFlags, {{a, Role::victim}}},
    };
    const auto s = temporal_split(events, d(2014, 12, 31));
    EXPECT_EQ(s.training.size(), 1u);
    EXPECT_EQ(s.holdout.shooting_events, 1u);
    EXPECT_EQ(s.holdout.victims, (std::vector<PersonKey>{a}));
    EXPECT_TRUE(s.warnings.empty());
}

TEST(TemporalSplit, NoShootingsAfterCutoffWarns) {
    std::vector<EventRecord> events = {
        {d(2015, 3, 1), EventType::arrest, "A1", {}, {{{"A", d(1990, 1, 1)}, Role::arrestee}}},
    };
    const auto s = temporal_split(events, d(2014, 12, 31));
    EXPECT_TRUE(s.holdout.empty());
    EXPECT_EQ(s.warnings.size(), 1u);
}

TEST(TemporalSplit, EqualsLinearDateFilter) {
    std::mt19937_64 rng(101);
    oracle::CorpusOptions opt;
    opt.first = d(2010, 1, 1);
    opt.last = d(2015, 12, 31);
    opt.events = 2000;
    const auto events = oracle::random_events(opt, rng);
    const Date cutoff = d(2014, 12, 31);
    const auto s = temporal_split(events, cutoff);
    std::size_t train = 0, shootings = 0, victims = 0, suspects = 0;
    for (const auto& ev : events) {
        if (ev.date <= cutoff) {
            ++train;
        } else if (ev.type == EventType::shooting) {
            ++shootings;
            for (const auto& p : ev.participants) {
                victims += p.role == Role::victim;
                suspects += p.role == Role::suspect || p.role == Role::arrestee;
            }
        }
    }
    EXPECT_EQ(s.training.size(), train);
    EXPECT_EQ(s.holdout.shooting_events, shootings);
    EXPECT_EQ(s.holdout.victims.size(), victims);
    EXPECT_EQ(s.holdout.suspects.size(), suspects);
}

TEST(MatchAndRate, SuspectTierRates) {
    const auto suspects = people("S", 149);
    // 1,379 active entries with 34 hits, then 1,836 with 14 more.
    auto active = list_with_hits(suspects, 0, 34, 1379, "ACTIVE");
    const auto rest = list_with_hits(suspects, 34, 14, 1836, "REST");
    std::vector<PersonKey> ranked = active;
    ranked.insert(ranked.end(), rest.begin(), rest.end());
    const auto r = evaluate_tiers("vipar", ranked, 1379, suspects);
    ASSERT_EQ(r.size(), 3u);
    EXPECT_EQ(r[0].n_hits, 34u);
    EXPECT_EQ(r[0].hit_rate_percent(), 22.8);
    EXPECT_EQ(r[1].n_hits, 14u);
    EXPECT_EQ(r[1].hit_rate_percent(), 9.4);
    EXPECT_EQ(r[2].n_hits, 48u);
    EXPECT_EQ(r[2].hit_rate_percent(), 32.2);
    EXPECT_EQ(r[2].n_list, 3215u);
}

TEST(MatchAndRate, VictimRate) {
    const auto victims = people("V", 477);
    const auto r = match_and_rate("vipar", Tier::combined, list_with_hits(victims, 0, 123, 3215, "L"), victims);
    EXPECT_EQ(r.n_hits, 123u);
    EXPECT_EQ(r.hit_rate_percent(), 25.8);
    EXPECT_EQ(r.hit_rate_tenths(), 258);
}

TEST(MatchAndRate, EmptyList) {
    const auto victims = people("V", 10);
    const auto r = match_and_rate("empty", Tier::combined, {}, victims);
    EXPECT_EQ(r.n_hits, 0u);
    EXPECT_EQ(r.hit_rate_percent(), 0.0);
}

TEST(MatchAndRate, RoundsHalfUp) {
    EvaluationReport r;
    r.n_outcomes = 8;
    r.n_hits = 1; // 12.5
    EXPECT_EQ(r.hit_rate_tenths(), 125);
    r.n_outcomes = 16;
    r.n_hits = 1; // 6.25
    EXPECT_EQ(r.hit_rate_tenths(), 63);
    r.n_outcomes = 0;
    EXPECT_EQ(r.hit_rate_tenths(), 0);
}

TEST(MatchAndRate, DuplicatesAndUnkeyableOutcomes) {
    auto outcomes = people("V", 20);
    const auto list = list_with_hits(outcomes, 0, 5, 50, "L");
    const auto base = match_and_rate("l", Tier::combined, list, outcomes);
    auto dup = outcomes;
    dup.insert(dup.end(), outcomes.begin(), outcomes.begin() + 10);
    dup.push_back({"NO DOB", std::nullopt});
    dup.push_back({"NO DOB", std::nullopt});
    const auto r = match_and_rate("l", Tier::combined, list, dup);
    EXPECT_EQ(r.n_hits, base.n_hits);
    EXPECT_EQ(r.n_outcomes, base.n_outcomes);
    EXPECT_EQ(r.n_excluded, 1u);
    EXPECT_EQ(r.outcome_digest, base.outcome_digest);
}

TEST(MatchAndRate, PermutationSymmetricAndMonotoneInListSize) {
    std::mt19937_64 rng(103);
    auto outcomes = people("V", 200);
    auto pool = people("V", 400); // the first 200 are outcomes
    std::shuffle(pool.begin(), pool.end(), rng);
    const auto base = match_and_rate("l", Tier::combined, pool, outcomes);
    std::shuffle(outcomes.begin(), outcomes.end(), rng);
    EXPECT_EQ(match_and_rate("l", Tier::combined, pool, outcomes).n_hits, base.n_hits);
    std::size_t prev = 0;
    for (std::size_t n = 0; n <= pool.size(); n += 10) {
        const auto r = match_and_rate("l", Tier::combined, std::span(pool).first(n), outcomes);
        EXPECT_GE(r.n_hits, prev);
        EXPECT_LE(r.n_hits, std::min(r.n_list, r.n_outcomes));
        prev = r.n_hits;
    }
}

TEST(CompareLists, VictimRateRatio) {
    const auto victims = people("V", 477);
    const auto vipar = match_and_rate("vipar", Tier::combined, list_with_hits(victims, 0, 123, 3215, "A"), victims);
    const auto cirv = match_and_rate("cirv", Tier::combined, list_with_hits(victims, 0, 62, 3215, "B"), victims);
    EXPECT_EQ(cirv.hit_rate_percent(), 13.0);
    const auto c = compare_lists(vipar, cirv);
    ASSERT_TRUE(c.rate_ratio);
    EXPECT_NEAR(*c.rate_ratio, 1.98, 0.005);
}

TEST(CompareLists, IdenticalListsRatioOne) {
    const auto victims = people("V", 50);
    const auto r = match_and_rate("x", Tier::combined, list_with_hits(victims, 0, 7, 100, "A"), victims);
    EXPECT_EQ(compare_lists(r, r).rate_ratio, 1.0);
}

TEST(CompareLists, DisjointListsMatchRecount) {
    std::mt19937_64 rng(107);
    auto pool = people("P", 1000);
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::vector<PersonKey> outcomes(pool.begin(), pool.begin() + 150);
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::span<const PersonKey> a(pool.data(), 300), b(pool.data() + 300, 300);
    auto recount = [&](std::span<const PersonKey> list) {
        std::size_t h = 0;
        for (const auto& k : list) h += std::count(outcomes.begin(), outcomes.end(), k) > 0;
        return h;
    };
    const auto c = compare_lists(match_and_rate("a", Tier::combined, a, outcomes),
                                 match_and_rate("b", Tier::combined, b, outcomes));
    ASSERT_TRUE(c.rate_ratio);
    EXPECT_DOUBLE_EQ(*c.rate_ratio, static_cast<double>(recount(a)) / static_cast<double>(recount(b)));
}

TEST(CompareLists, MismatchedOutcomesRejected) {
    const auto v1 = people("V", 10), v2 = people("W", 10);
    const auto a = match_and_rate("a", Tier::combined, v1, v1);
    const auto b = match_and_rate("b", Tier::combined, v1, v2);
    EXPECT_THROW(compare_lists(a, b), EvalError);
}

TEST(Reports, CsvAndJson) {
    const auto victims = people("V", 477);
    const auto r = match_and_rate("vipar", Tier::combined, list_with_hits(victims, 0, 123, 3215, "L"), victims);
    std::ostringstream out;
    write_reports_csv(out, std::span(&r, 1));
    EXPECT_EQ(out.str(), "list,tier,n_list,n_outcomes,n_excluded,n_hits,hit_rate_percent\n"
                         "vipar,combined,3215,477,0,123,25.8\n");
    EXPECT_EQ(to_json(r)["hit_rate_percent"], "25.8");
}
