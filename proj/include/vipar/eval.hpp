#pragma once

// Temporal hold-out evaluation of ranked prediction lists.

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vipar/error.hpp"
#include "vipar/format.hpp"
#include "vipar/ingest.hpp"

namespace vipar {

struct HoldoutOutcomes {
    std::vector<PersonKey> victims;
    std::vector<PersonKey> suspects;
    std::size_t shooting_events = 0;

    bool empty() const noexcept { return victims.empty() && suspects.empty(); }
};

struct TemporalSplit {
    std::vector<EventRecord> training; // dated on or before the cutoff
    HoldoutOutcomes holdout;           // shooting events after the cutoff
    std::vector<std::string> warnings;
};

inline TemporalSplit temporal_split(std::span<const EventRecord> events, Date cutoff) {
    TemporalSplit split;
    for (const auto& ev : events) {
        if (ev.date <= cutoff) {
            split.training.push_back(ev);
            continue;
        }
        if (ev.type != EventType::shooting) continue;
        ++split.holdout.shooting_events;
        for (const auto& p : ev.participants) {
            if (p.role == Role::victim)
                split.holdout.victims.push_back(p.key);
            else if (is_offender_role(p.role))
                split.holdout.suspects.push_back(p.key);
        }
    }
    if (split.holdout.empty())
        split.warnings.push_back("no shooting outcomes after cutoff " + cutoff.to_string());
    return split;
}

enum class Tier : std::uint8_t { active, non_active, combined };

inline std::string_view to_string(Tier t) {
    switch (t) {
    case Tier::active: return "active";
    case Tier::non_active: return "non_active";
    case Tier::combined: return "combined";
    }
    return "?";
}

struct EvaluationReport {
    std::string list_name;
    Tier tier = Tier::combined;
    std::size_t n_list = 0;
    std::size_t n_outcomes = 0; // distinct keyable outcome persons
    std::size_t n_excluded = 0; // distinct outcome persons without a dob
    std::size_t n_hits = 0;
    std::uint64_t outcome_digest = 0;

    // round(100 * hits / outcomes, 1) in tenths of a percent, half up.
    std::int64_t hit_rate_tenths() const noexcept {
        if (n_outcomes == 0) return 0;
        const auto h = static_cast<std::int64_t>(n_hits), n = static_cast<std::int64_t>(n_outcomes);
        return (2000 * h + n) / (2 * n);
    }
    double hit_rate_percent() const noexcept { return static_cast<double>(hit_rate_tenths()) / 10.0; }
};

namespace detail {

struct KeyableOutcomes {
    std::set<PersonKey> keys;
    std::size_t excluded = 0;
    std::uint64_t digest = 0;
};

inline KeyableOutcomes keyable_outcomes(std::span<const PersonKey> outcomes) {
    KeyableOutcomes k;
    std::set<PersonKey> unkeyed;
    for (const auto& key : outcomes) {
        if (key.dob)
            k.keys.insert(key);
        else
            unkeyed.insert(key);
    }
    k.excluded = unkeyed.size();
    // FNV-1a over the sorted keys.
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& key : k.keys) {
        mix(key.full_name);
        mix("|");
        mix(key.dob_string());
        mix("\n");
    }
    k.digest = h;
    return k;
}

} // namespace detail

// A hit is an outcome person whose exact (name, dob) key is on the list.
// Outcomes are deduplicated; outcomes without a dob cannot be matched and
// are left out of the denominator.
inline EvaluationReport match_and_rate(std::string list_name, Tier tier, std::span<const PersonKey> predicted,
                                       std::span<const PersonKey> outcomes) {
    const auto k = detail::keyable_outcomes(outcomes);
    EvaluationReport r;
    r.list_name = std::move(list_name);
    r.tier = tier;
    r.n_list = predicted.size();
    r.n_outcomes = k.keys.size();
    r.n_excluded = k.excluded;
    r.outcome_digest = k.digest;
    std::set<PersonKey> listed(predicted.begin(), predicted.end());
    for (const auto& key : k.keys) r.n_hits += listed.count(key);
    return r;
}

// Active tier = first `active_size` entries, non-active = the rest.
inline std::vector<EvaluationReport> evaluate_tiers(const std::string& list_name, std::span<const PersonKey> ranked,
                                                    std::size_t active_size, std::span<const PersonKey> outcomes) {
    active_size = std::min(active_size, ranked.size());
    return {match_and_rate(list_name, Tier::active, ranked.first(active_size), outcomes),
            match_and_rate(list_name, Tier::non_active, ranked.subspan(active_size), outcomes),
            match_and_rate(list_name, Tier::combined, ranked, outcomes)};
}

struct ListComparison {
    EvaluationReport a, b;
    std::optional<double> rate_ratio; // hits_a / hits_b; empty when b has no hits
};

inline ListComparison compare_lists(const EvaluationReport& a, const EvaluationReport& b) {
    if (a.outcome_digest != b.outcome_digest || a.n_outcomes != b.n_outcomes)
        throw EvalError("cannot compare '" + a.list_name + "' and '" + b.list_name +
                        "': reports cover different outcome sets");
    ListComparison c{a, b, std::nullopt};
    if (b.n_hits > 0) c.rate_ratio = static_cast<double>(a.n_hits) / static_cast<double>(b.n_hits);
    return c;
}

// ---------------------------------------------------------------------------
// Output

inline void write_reports_csv(std::ostream& out, std::span<const EvaluationReport> reports) {
    out << "list,tier,n_list,n_outcomes,n_excluded,n_hits,hit_rate_percent\n";
    for (const auto& r : reports)
        out << r.list_name << ',' << to_string(r.tier) << ',' << r.n_list << ',' << r.n_outcomes << ','
            << r.n_excluded << ',' << r.n_hits << ',' << format_fixed(r.hit_rate_percent(), 1) << '\n';
}

inline void print_reports_table(std::ostream& out, const std::string& title, std::span<const EvaluationReport> reports) {
    out << title << '\n';
    out << std::left << std::setw(10) << "list" << std::setw(12) << "tier" << std::right << std::setw(8)
        << "listed" << std::setw(10) << "outcomes" << std::setw(7) << "hits" << std::setw(9) << "rate%" << '\n';
    for (const auto& r : reports)
        out << std::left << std::setw(10) << r.list_name << std::setw(12) << to_string(r.tier) << std::right
            << std::setw(8) << r.n_list << std::setw(10) << r.n_outcomes << std::setw(7) << r.n_hits
            << std::setw(9) << format_fixed(r.hit_rate_percent(), 1) << '\n';
}

inline nlohmann::ordered_json to_json(const EvaluationReport& r) {
    nlohmann::ordered_json j;
    j["list"] = r.list_name;
    j["tier"] = std::string(to_string(r.tier));
    j["n_list"] = r.n_list;
    j["n_outcomes"] = r.n_outcomes;
    j["n_excluded"] = r.n_excluded;
    j["n_hits"] = r.n_hits;
    j["hit_rate_percent"] = format_fixed(r.hit_rate_percent(), 1);
    return j;
}

inline nlohmann::ordered_json to_json(const ListComparison& c) {
    nlohmann::ordered_json j;
    j["a"] = c.a.list_name + "/" + std::string(to_string(c.a.tier));
    j["b"] = c.b.list_name + "/" + std::string(to_string(c.b.tier));
    j["rate_a"] = format_fixed(c.a.hit_rate_percent(), 1);
    j["rate_b"] = format_fixed(c.b.hit_rate_percent(), 1);
    j["rate_ratio"] = c.rate_ratio ? nlohmann::ordered_json(format_fixed(*c.rate_ratio, 3)) : nlohmann::ordered_json();
    return j;
}

} // namespace vipar
