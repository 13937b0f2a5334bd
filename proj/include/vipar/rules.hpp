#pragma once

// Rule-based scoring engine.
//
// A RuleSet is a list of declarative rules, each reading one named input
// feature of a person and contributing points to one of three components
// (personal, positional, structural). Scores are kept in integer hundredths
// of a point so component sums and totals are exact.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "vipar/error.hpp"
#include "vipar/ingest.hpp"
#include "vipar/measures.hpp"
#include "vipar/network.hpp"

namespace vipar {

// Score amount in hundredths of a point.
class Points {
public:
    constexpr Points() = default;
    static constexpr Points hundredths(std::int64_t h) {
        Points p;
        p.h_ = h;
        return p;
    }
    // Throws unless `v` is a multiple of 0.01.
    static Points from_double(double v) {
        const double scaled = v * 100.0;
        const double r = std::round(scaled);
        if (!std::isfinite(v) || std::abs(scaled - r) > 1e-6)
            throw RulesError("weight " + format_exact(v) + " is not a multiple of 0.01");
        return hundredths(static_cast<std::int64_t>(r));
    }

    constexpr std::int64_t hundredths() const noexcept { return h_; }
    constexpr double value() const noexcept { return static_cast<double>(h_) / 100.0; }

    // Exact decimal rendering, e.g. 1350 -> "13.50".
    std::string to_string() const {
        const std::int64_t a = h_ < 0 ? -h_ : h_;
        std::string frac = std::to_string(a % 100);
        if (frac.size() < 2) frac.insert(0, "0");
        return (h_ < 0 ? "-" : "") + std::to_string(a / 100) + "." + frac;
    }

    constexpr Points& operator+=(Points o) noexcept {
        h_ += o.h_;
        return *this;
    }
    friend constexpr Points operator+(Points a, Points b) noexcept { return hundredths(a.h_ + b.h_); }
    friend constexpr Points operator-(Points a, Points b) noexcept { return hundredths(a.h_ - b.h_); }
    friend constexpr Points operator*(Points a, std::int64_t k) noexcept { return hundredths(a.h_ * k); }
    friend constexpr auto operator<=>(Points, Points) = default;

private:
    std::int64_t h_ = 0;
};

enum class Category : std::uint8_t { personal, positional, structural };

inline std::string_view to_string(Category c) {
    switch (c) {
    case Category::personal: return "personal";
    case Category::positional: return "positional";
    case Category::structural: return "structural";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Rule inputs

enum class Feature : std::uint8_t {
    age,                           // tenths of a year
    cirv_member,                   // bool
    recent_violent_victimizations, // counts below are distinct events
    recent_violent_crimes,
    firearm_incidents,
    recent_firearm_incidents,
    misdemeanors_committed,
    recent_misdemeanors_committed,
    misdemeanor_victimizations,
    pagerank, // simplified PageRank in twentieths
    high_pr_friend_d1,
    cirv_friend_d1,
    cirv_friend_d2,
    cirv_friend_d3,
    shooting_friend_d1,
    shooting_friend_d2,
    group_members,
    group_violent_crimes,
    group_violent_victimizations,
    group_recent_violent_victimizations,
    group_shootings,
    group_recent_shootings,
};

inline constexpr std::size_t kFeatureCount = 22;

struct FeatureInfo {
    Feature feature;
    std::string_view name;
    bool boolean;
    // Hundredths of a point per raw unit, for own-value weights.
    std::int64_t points_per_unit;
};

inline constexpr std::array<FeatureInfo, kFeatureCount> kFeatures = {{
    {Feature::age, "age", false, 10},
    {Feature::cirv_member, "cirv_member", true, 100},
    {Feature::recent_violent_victimizations, "recent_violent_victimizations", false, 100},
    {Feature::recent_violent_crimes, "recent_violent_crimes", false, 100},
    {Feature::firearm_incidents, "firearm_incidents", false, 100},
    {Feature::recent_firearm_incidents, "recent_firearm_incidents", false, 100},
    {Feature::misdemeanors_committed, "misdemeanors_committed", false, 100},
    {Feature::recent_misdemeanors_committed, "recent_misdemeanors_committed", false, 100},
    {Feature::misdemeanor_victimizations, "misdemeanor_victimizations", false, 100},
    {Feature::pagerank, "pagerank", false, 5},
    {Feature::high_pr_friend_d1, "high_pr_friend_d1", true, 100},
    {Feature::cirv_friend_d1, "cirv_friend_d1", true, 100},
    {Feature::cirv_friend_d2, "cirv_friend_d2", true, 100},
    {Feature::cirv_friend_d3, "cirv_friend_d3", true, 100},
    {Feature::shooting_friend_d1, "shooting_friend_d1", true, 100},
    {Feature::shooting_friend_d2, "shooting_friend_d2", true, 100},
    {Feature::group_members, "group_members", false, 100},
    {Feature::group_violent_crimes, "group_violent_crimes", false, 100},
    {Feature::group_violent_victimizations, "group_violent_victimizations", false, 100},
    {Feature::group_recent_violent_victimizations, "group_recent_violent_victimizations", false, 100},
    {Feature::group_shootings, "group_shootings", false, 100},
    {Feature::group_recent_shootings, "group_recent_shootings", false, 100},
}};

constexpr const FeatureInfo& info(Feature f) { return kFeatures[static_cast<std::size_t>(f)]; }

inline std::optional<Feature> parse_feature(std::string_view name) {
    for (const auto& fi : kFeatures)
        if (fi.name == name) return fi.feature;
    return std::nullopt;
}

// Feature values for one person. An absent value (unknown age) never
// satisfies a predicate.
class RuleInputs {
public:
    std::optional<std::int64_t> get(Feature f) const { return values_[static_cast<std::size_t>(f)]; }
    void set(Feature f, std::optional<std::int64_t> v) { values_[static_cast<std::size_t>(f)] = v; }
    void set(Feature f, bool v) { set(f, std::optional<std::int64_t>(v ? 1 : 0)); }

    friend bool operator==(const RuleInputs&, const RuleInputs&) = default;

private:
    std::array<std::optional<std::int64_t>, kFeatureCount> values_{};
};

inline RuleInputs make_rule_inputs(const Person& person, const PersonHistory& h, const PersonMeasures& m,
                                   const GroupMeasures& g) {
    RuleInputs in;
    in.set(Feature::age, person.age ? std::optional<std::int64_t>(person.age->tenths()) : std::nullopt);
    in.set(Feature::cirv_member, person.cirv_status != CirvStatus::none);
    auto count = [&](Feature f, std::uint64_t v) { in.set(f, std::optional<std::int64_t>(static_cast<std::int64_t>(v))); };
    count(Feature::recent_violent_victimizations, h.recent_violent_victimizations);
    count(Feature::recent_violent_crimes, h.recent_violent_crimes);
    count(Feature::firearm_incidents, h.firearm_incidents);
    count(Feature::recent_firearm_incidents, h.recent_firearm_incidents);
    count(Feature::misdemeanors_committed, h.misdemeanors_committed);
    count(Feature::recent_misdemeanors_committed, h.recent_misdemeanors_committed);
    count(Feature::misdemeanor_victimizations, h.misdemeanor_victimizations);
    count(Feature::pagerank, simplified_pagerank_twentieths(m.degree_centrality, m.event_count));
    in.set(Feature::high_pr_friend_d1, m.flags.high_pr_friend_d1);
    in.set(Feature::cirv_friend_d1, m.flags.cirv_friend_d1);
    in.set(Feature::cirv_friend_d2, m.flags.cirv_friend_d2);
    in.set(Feature::cirv_friend_d3, m.flags.cirv_friend_d3);
    in.set(Feature::shooting_friend_d1, m.flags.shooting_friend_d1);
    in.set(Feature::shooting_friend_d2, m.flags.shooting_friend_d2);
    count(Feature::group_members, g.member_count);
    count(Feature::group_violent_crimes, g.violent_crime_count);
    count(Feature::group_violent_victimizations, g.violent_victimization_count);
    count(Feature::group_recent_violent_victimizations, g.recent_violent_victimization_count);
    count(Feature::group_shootings, g.shooting_count);
    count(Feature::group_recent_shootings, g.recent_shooting_count);
    return in;
}

// ---------------------------------------------------------------------------
// Rules

enum class Comparison : std::uint8_t { is_true, gt, ge, eq, lt, le };

inline constexpr std::array<std::pair<Comparison, std::string_view>, 6> kComparisons = {{
    {Comparison::is_true, "true"},
    {Comparison::gt, ">"},
    {Comparison::ge, ">="},
    {Comparison::eq, "=="},
    {Comparison::lt, "<"},
    {Comparison::le, "<="},
}};

struct Condition {
    Comparison op = Comparison::is_true;
    std::int64_t threshold = 0;

    constexpr bool holds(std::int64_t v) const noexcept {
        switch (op) {
        case Comparison::is_true: return v != 0;
        case Comparison::gt: return v > threshold;
        case Comparison::ge: return v >= threshold;
        case Comparison::eq: return v == threshold;
        case Comparison::lt: return v < threshold;
        case Comparison::le: return v <= threshold;
        }
        return false;
    }
    friend bool operator==(const Condition&, const Condition&) = default;
};

struct Bucket {
    std::int64_t min = 0;
    std::optional<std::int64_t> max; // inclusive
    Points weight;
    friend bool operator==(const Bucket&, const Bucket&) = default;
};

struct FixedWeight {
    Points points;
    friend bool operator==(const FixedWeight&, const FixedWeight&) = default;
};
// max(0, 7 - age/10), age in tenths of a year.
struct AgeFormula {
    friend bool operator==(const AgeFormula&, const AgeFormula&) = default;
};
// Contributes the input's own value.
struct OwnValue {
    friend bool operator==(const OwnValue&, const OwnValue&) = default;
};
// Highest bucket containing the value; buckets are mutually exclusive.
struct BucketWeight {
    std::vector<Bucket> buckets;
    friend bool operator==(const BucketWeight&, const BucketWeight&) = default;
};

using WeightSpec = std::variant<FixedWeight, AgeFormula, OwnValue, BucketWeight>;

struct Rule {
    std::string id;
    Category category = Category::personal;
    Feature input = Feature::age;
    Condition condition; // used by FixedWeight only
    WeightSpec weight;

    friend bool operator==(const Rule&, const Rule&) = default;
};

inline Points age_weight_points(Age age) {
    if (age.tenths() < 0) throw RulesError("age must be non-negative");
    return Points::hundredths(std::clamp<std::int64_t>(700 - age.tenths(), 0, 700));
}

// Age given in years; rounded to one decimal first.
inline double age_weight(double years) {
    if (!(years >= 0.0)) throw RulesError("age must be non-negative");
    return age_weight_points(Age::from_tenths(static_cast<int>(std::llround(years * 10.0)))).value();
}

// Contribution of one rule, or nullopt when it does not fire.
inline std::optional<Points> evaluate(const Rule& rule, const RuleInputs& in) {
    const auto value = in.get(rule.input);
    if (!value) return std::nullopt;
    return std::visit(
        [&](const auto& w) -> std::optional<Points> {
            using W = std::decay_t<decltype(w)>;
            if constexpr (std::is_same_v<W, FixedWeight>) {
                if (!rule.condition.holds(*value)) return std::nullopt;
                return w.points;
            } else if constexpr (std::is_same_v<W, AgeFormula>) {
                return age_weight_points(Age::from_tenths(static_cast<int>(*value)));
            } else if constexpr (std::is_same_v<W, OwnValue>) {
                return Points::hundredths(*value * info(rule.input).points_per_unit);
            } else {
                const Bucket* best = nullptr;
                for (const auto& b : w.buckets) {
                    const bool in_range = *value >= b.min && (!b.max || *value <= *b.max);
                    if (in_range && (!best || b.min > best->min)) best = &b;
                }
                if (!best) return std::nullopt;
                return best->weight;
            }
        },
        rule.weight);
}

struct RuleSet {
    std::vector<Rule> rules;
    int recency_days = 365;
    double pr_threshold = 1.0;

    // Throws on duplicate ids or negative weights.
    void validate() const {
        std::set<std::string> ids;
        for (const auto& r : rules) {
            if (r.id.empty()) throw RulesError("rule with empty id");
            if (!ids.insert(r.id).second) throw RulesError("duplicate rule id '" + r.id + "'");
            if (const auto* f = std::get_if<FixedWeight>(&r.weight); f && f->points < Points{})
                throw RulesError("rule '" + r.id + "' has a negative weight");
            if (const auto* b = std::get_if<BucketWeight>(&r.weight))
                for (const auto& bucket : b->buckets)
                    if (bucket.weight < Points{} || (bucket.max && *bucket.max < bucket.min))
                        throw RulesError("rule '" + r.id + "' has an invalid bucket");
        }
        if (recency_days <= 0) throw RulesError("recency window must be positive");
    }

    const Rule* find(std::string_view id) const {
        for (const auto& r : rules)
            if (r.id == id) return &r;
        return nullptr;
    }

    friend bool operator==(const RuleSet&, const RuleSet&) = default;
};

// The 21-rule default: 9 personal, 4 positional, 8 structural.
inline RuleSet default_ruleset() {
    auto fixed = [](std::string id, Category c, Feature f, Comparison op, std::int64_t t, std::int64_t h) {
        return Rule{std::move(id), c, f, Condition{op, t}, FixedWeight{Points::hundredths(h)}};
    };
    auto flag = [&](std::string id, Category c, Feature f, std::int64_t h) {
        return fixed(std::move(id), c, f, Comparison::is_true, 0, h);
    };
    const BucketWeight violence_buckets{{{2, 4, Points::hundredths(100)},
                                         {5, 9, Points::hundredths(200)},
                                         {10, std::nullopt, Points::hundredths(300)}}};
    using C = Category;
    using F = Feature;
    using O = Comparison;
    RuleSet rs;
    rs.rules = {
        Rule{"age", C::personal, F::age, {}, AgeFormula{}},
        flag("cirv_member", C::personal, F::cirv_member, 100),
        fixed("recent_violent_victimization", C::personal, F::recent_violent_victimizations, O::ge, 1, 100),
        fixed("recent_violent_crime", C::personal, F::recent_violent_crimes, O::ge, 1, 100),
        fixed("any_firearm_crime", C::personal, F::firearm_incidents, O::ge, 1, 100),
        fixed("recent_firearm_crime", C::personal, F::recent_firearm_incidents, O::ge, 1, 150),
        fixed("misdemeanors_committed_gt3", C::personal, F::misdemeanors_committed, O::gt, 3, 100),
        fixed("recent_misdemeanors_ge2", C::personal, F::recent_misdemeanors_committed, O::ge, 2, 100),
        fixed("misdemeanor_victimizations_ge3", C::personal, F::misdemeanor_victimizations, O::ge, 3, 100),

        Rule{"pagerank", C::positional, F::pagerank, {}, OwnValue{}},
        flag("high_pr_friend_d1", C::positional, F::high_pr_friend_d1, 100),
        flag("cirv_friend_d1", C::positional, F::cirv_friend_d1, 50),
        flag("shooting_friend_d1", C::positional, F::shooting_friend_d1, 100),

        Rule{"group_violent_crimes", C::structural, F::group_violent_crimes, {}, violence_buckets},
        Rule{"group_violent_victimizations", C::structural, F::group_violent_victimizations, {}, violence_buckets},
        fixed("group_recent_violent_victimizations_ge7", C::structural, F::group_recent_violent_victimizations,
              O::ge, 7, 200),
        fixed("group_recent_shootings_ge1", C::structural, F::group_recent_shootings, O::ge, 1, 200),
        fixed("group_shootings_ge3", C::structural, F::group_shootings, O::ge, 3, 100),
        fixed("group_members_gt20", C::structural, F::group_members, O::gt, 20, 100),
        fixed("group_shootings_gt10", C::structural, F::group_shootings, O::gt, 10, 100),
        fixed("group_recent_shootings_gt5", C::structural, F::group_recent_shootings, O::gt, 5, 100),
    };
    return rs;
}

// ---------------------------------------------------------------------------
// JSON config

namespace detail {

inline std::string_view comparison_name(Comparison c) {
    for (const auto& [op, name] : kComparisons)
        if (op == c) return name;
    return "?";
}

inline Category parse_category(const std::string& s) {
    for (auto c : {Category::personal, Category::positional, Category::structural})
        if (to_string(c) == s) return c;
    throw RulesError("unknown rule category '" + s + "'");
}

inline Rule rule_from_json(const nlohmann::json& j) {
    Rule r;
    r.id = j.at("id").get<std::string>();
    r.category = parse_category(j.at("category").get<std::string>());
    const auto input = j.at("input").get<std::string>();
    const auto feature = parse_feature(input);
    if (!feature) throw RulesError("rule '" + r.id + "': unknown input '" + input + "'");
    r.input = *feature;

    if (j.contains("buckets")) {
        BucketWeight bw;
        for (const auto& b : j.at("buckets")) {
            Bucket bucket;
            bucket.min = b.at("min").get<std::int64_t>();
            if (b.contains("max")) bucket.max = b.at("max").get<std::int64_t>();
            bucket.weight = Points::from_double(b.at("weight").get<double>());
            bw.buckets.push_back(bucket);
        }
        r.weight = std::move(bw);
        return r;
    }
    const auto& w = j.at("weight");
    if (w.is_string()) {
        const auto tag = w.get<std::string>();
        if (tag == "age_formula")
            r.weight = AgeFormula{};
        else if (tag == "own_value")
            r.weight = OwnValue{};
        else
            throw RulesError("rule '" + r.id + "': unknown weight formula '" + tag + "'");
        return r;
    }
    r.weight = FixedWeight{Points::from_double(w.get<double>())};
    const auto when = j.value("when", std::string(info(r.input).boolean ? "true" : ""));
    if (when.empty()) throw RulesError("rule '" + r.id + "': numeric input needs a 'when' comparison");
    bool found = false;
    for (const auto& [op, name] : kComparisons)
        if (name == when) {
            r.condition.op = op;
            found = true;
        }
    if (!found) throw RulesError("rule '" + r.id + "': unknown comparison '" + when + "'");
    if (r.condition.op != Comparison::is_true) r.condition.threshold = j.at("threshold").get<std::int64_t>();
    return r;
}

inline nlohmann::ordered_json rule_to_json(const Rule& r) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["category"] = std::string(to_string(r.category));
    j["input"] = std::string(info(r.input).name);
    std::visit(
        [&](const auto& w) {
            using W = std::decay_t<decltype(w)>;
            if constexpr (std::is_same_v<W, FixedWeight>) {
                if (r.condition.op != Comparison::is_true || !info(r.input).boolean) {
                    j["when"] = std::string(comparison_name(r.condition.op));
                    if (r.condition.op != Comparison::is_true) j["threshold"] = r.condition.threshold;
                }
                j["weight"] = w.points.value();
            } else if constexpr (std::is_same_v<W, AgeFormula>) {
                j["weight"] = "age_formula";
            } else if constexpr (std::is_same_v<W, OwnValue>) {
                j["weight"] = "own_value";
            } else {
                auto arr = nlohmann::ordered_json::array();
                for (const auto& b : w.buckets) {
                    nlohmann::ordered_json jb;
                    jb["min"] = b.min;
                    if (b.max) jb["max"] = *b.max;
                    jb["weight"] = b.weight.value();
                    arr.push_back(jb);
                }
                j["buckets"] = arr;
            }
        },
        r.weight);
    return j;
}

} // namespace detail

inline RuleSet ruleset_from_json(const nlohmann::json& j) {
    try {
        RuleSet rs;
        rs.recency_days = j.value("recency_days", 365);
        rs.pr_threshold = j.value("pr_threshold", 1.0);
        for (const auto& jr : j.at("rules")) rs.rules.push_back(detail::rule_from_json(jr));
        rs.validate();
        return rs;
    } catch (const nlohmann::json::exception& e) {
        throw RulesError(std::string("invalid ruleset: ") + e.what());
    }
}

inline nlohmann::ordered_json ruleset_to_json(const RuleSet& rs) {
    nlohmann::ordered_json j;
    j["recency_days"] = rs.recency_days;
    j["pr_threshold"] = rs.pr_threshold;
    auto rules = nlohmann::ordered_json::array();
    for (const auto& r : rs.rules) rules.push_back(detail::rule_to_json(r));
    j["rules"] = rules;
    return j;
}

inline RuleSet load_ruleset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw RulesError("cannot open ruleset " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw RulesError(path.string() + ": " + e.what());
    }
    return ruleset_from_json(j);
}

// ---------------------------------------------------------------------------
// Scoring

struct FiredRule {
    std::string rule_id;
    Category category;
    Points contribution;
    friend bool operator==(const FiredRule&, const FiredRule&) = default;
};

struct ViparScore {
    PersonId person_id = 0;
    Points personal, positional, structural;
    std::vector<FiredRule> fired_rules; // RuleSet order; zero contributions omitted

    Points total() const noexcept { return personal + positional + structural; }
    Points component(Category c) const noexcept {
        switch (c) {
        case Category::personal: return personal;
        case Category::positional: return positional;
        case Category::structural: return structural;
        }
        return {};
    }
};

inline ViparScore score_inputs(PersonId id, const RuleInputs& in, const RuleSet& rs) {
    ViparScore s;
    s.person_id = id;
    for (const auto& rule : rs.rules) {
        const auto c = evaluate(rule, in);
        if (!c || *c == Points{}) continue;
        switch (rule.category) {
        case Category::personal: s.personal += *c; break;
        case Category::positional: s.positional += *c; break;
        case Category::structural: s.structural += *c; break;
        }
        s.fired_rules.push_back({rule.id, rule.category, *c});
    }
    return s;
}

inline ViparScore score_person(const Person& person, const PersonHistory& history, const PersonMeasures& measures,
                               const GroupMeasures& group, const RuleSet& rs) {
    return score_inputs(person.id, make_rule_inputs(person, history, measures, group), rs);
}

// Descending total, ties by ascending person id; exactly n entries.
inline std::vector<PersonId> rank(std::span<const ViparScore> scores, std::ptrdiff_t n) {
    if (n <= 0) throw RulesError("list size must be positive, got " + std::to_string(n));
    if (static_cast<std::size_t>(n) > scores.size())
        throw RulesError("list size " + std::to_string(n) + " exceeds the " + std::to_string(scores.size()) +
                         " scored persons");
    std::vector<std::pair<Points, PersonId>> order;
    order.reserve(scores.size());
    for (const auto& s : scores) order.emplace_back(s.total(), s.person_id);
    auto better = [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; };
    std::partial_sort(order.begin(), order.begin() + n, order.end(), better);
    std::vector<PersonId> out;
    out.reserve(static_cast<std::size_t>(n));
    for (std::ptrdiff_t i = 0; i < n; ++i) out.push_back(order[static_cast<std::size_t>(i)].second);
    return out;
}

inline void write_scores_csv(std::ostream& out, std::span<const ViparScore> scores, const PersonStore& store) {
    out << "person_id,name,dob,personal,positional,structural,total,fired_rules\n";
    for (const auto& s : scores) {
        const auto& key = store.persons[s.person_id].key;
        std::string fired;
        for (const auto& f : s.fired_rules) {
            if (!fired.empty()) fired.push_back('|');
            fired += f.rule_id;
        }
        csv::write_row(out, {std::to_string(s.person_id), key.full_name, key.dob_string(), s.personal.to_string(),
                             s.positional.to_string(), s.structural.to_string(), s.total().to_string(), fired});
    }
}

} // namespace vipar
