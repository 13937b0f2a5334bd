#pragma once

// Seeded synthetic corpus with planted group structure and shooting risk.
//
// Persons belong to co-offending groups (or stay solo), have a criminal
// career interval, a personal violence propensity derived from their
// group's, and an age. Each person's planted risk is a linear index
//
//   risk = youth_weight * (35 - age) / 10 + violence_weight * violence
//          + group_weight * group_violence
//
// and the yearly chance of being shot while active is
// sigmoid(shooting_intercept + shooting_slope * risk), zero when the
// person's violence propensity is zero. Routine events (arrests, stops,
// offenses, victimizations) occur at a Poisson rate during the career and
// pull in fellow group members, with occasional cross-group bridges.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "vipar/date.hpp"
#include "vipar/error.hpp"
#include "vipar/format.hpp"
#include "vipar/ingest.hpp"

namespace vipar::synth {

struct SynthConfig {
    std::uint64_t seed = 1;
    std::size_t n_persons = 10000;

    // Group sizes follow a discrete Pareto law: floor(min * U^(-1/alpha)), capped.
    double solo_fraction = 0.25;
    int group_size_min = 2;
    double group_size_alpha = 1.3;
    int group_size_max = 60;

    double event_rate = 0.9; // routine events per active person-year
    double co_offend_prob = 0.6;
    int max_companions = 3;
    double bridge_prob = 0.02;

    // Group propensity = violence_scale * U^violence_skew; a member's
    // propensity is the group's times U(0.5, 1.5), clipped to 1.
    double violence_scale = 1.0;
    double violence_skew = 3.0;

    double age_mean = 34.0;
    double age_sd = 13.0;
    double age_min = 13.0;
    double age_max = 80.0;

    double career_mean_years = 6.0;
    double missing_dob_fraction = 0.01;

    Date start = *Date::from_ymd(2010, 1, 1);
    Date cutoff = *Date::from_ymd(2014, 12, 31);
    Date end = *Date::from_ymd(2015, 12, 31);

    double cirv_fraction = 0.058;
    double cirv_active_share = 1379.0 / 3215.0;
    int cirv_intel_lag_years = 2; // roster compiled this long before the cutoff

    double youth_weight = 1.0;
    double violence_weight = 3.0;
    double group_weight = 2.0;
    double shooting_intercept = -8.5;
    double shooting_slope = 1.8;
    double suspect_known_prob = 0.35;
    double co_victim_prob = 0.15;

    void validate() const {
        auto fail = [](const std::string& m) { throw SynthError("infeasible config: " + m); };
        if (n_persons == 0) fail("n_persons must be positive");
        if (!(start < cutoff && cutoff < end)) fail("window must satisfy start < cutoff < end");
        if (group_size_min < 1 || group_size_max < group_size_min) fail("invalid group size bounds");
        if (static_cast<std::size_t>(group_size_min) > n_persons) fail("group sizes exceed the population");
        if (group_size_alpha <= 0) fail("group_size_alpha must be positive");
        if (event_rate < 0 || career_mean_years <= 0 || max_companions < 0 || age_sd < 0) fail("rates must be >= 0");
        if (age_min < 0 || age_max < age_min) fail("invalid age bounds");
        for (double p : {solo_fraction, co_offend_prob, bridge_prob, violence_scale, missing_dob_fraction,
                         cirv_fraction, cirv_active_share, suspect_known_prob, co_victim_prob})
            if (!(p >= 0.0 && p <= 1.0)) fail("probabilities and fractions must lie in [0, 1]");
    }
};

struct GroundTruth {
    PersonKey key;
    double planted_risk = 0.0;
    std::uint32_t group = 0;
    double violence = 0.0;
};

struct Corpus {
    std::map<EventType, std::vector<EventRecord>> events;
    std::vector<CirvEntry> cirv;
    std::vector<GroundTruth> truth; // sorted by key; index = ground-truth person id
};

inline constexpr std::array<std::pair<EventType, const char*>, 5> kDatasetFiles = {{
    {EventType::arrest, "arrests.csv"},
    {EventType::field_interview, "field_interviews.csv"},
    {EventType::offense, "offenses.csv"},
    {EventType::victimization, "victimizations.csv"},
    {EventType::shooting, "shootings.csv"},
}};
inline constexpr const char* kCirvFile = "cirv.csv";
inline constexpr const char* kGroundTruthFile = "ground_truth.csv";

namespace detail {

struct Agent {
    PersonKey key;
    double age_at_cutoff = 0.0;
    std::uint32_t group = 0;
    double violence = 0.0;
    double activity = 1.0;
    Date onset, desist;
    double risk = 0.0;
};

inline constexpr std::array<const char*, 24> kSyllables = {"BA", "KO", "RI", "TA", "MEN", "SHA", "LO", "VI",
                                                           "DRE", "NA", "JO", "KEL", "MAR", "TY", "ON", "EL",
                                                           "QUA", "RO", "SI", "DU", "WIN", "FOR", "LA", "ZE"};

class Generator {
public:
    explicit Generator(const SynthConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {}

    Corpus run() {
        make_agents();
        Corpus c;
        make_routine_events(c);
        make_shootings(c);
        make_cirv(c);
        for (auto& [type, evs] : c.events) std::sort(evs.begin(), evs.end());
        for (const auto& a : agents_) c.truth.push_back({a.key, a.risk, a.group, a.violence});
        return c;
    }

private:
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
    bool chance(double p) { return uniform() < p; }
    std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
    Date date_between(Date a, Date b) {
        return a.plus_days(std::uniform_int_distribution<int>(0, std::max(0, b - a))(rng_));
    }

    std::string syllable_word(int lo, int hi) {
        const int n = std::uniform_int_distribution<int>(lo, hi)(rng_);
        std::string w;
        for (int i = 0; i < n; ++i) w += kSyllables[pick(kSyllables.size())];
        return w;
    }

    double age_at(const Agent& a, Date d) const { return a.age_at_cutoff + (d - cfg_.cutoff) / 365.2425; }

    double risk_at(const Agent& a, Date d) const {
        return cfg_.youth_weight * (35.0 - age_at(a, d)) / 10.0 + cfg_.violence_weight * a.violence +
               cfg_.group_weight * group_violence_[a.group];
    }

    bool active(const Agent& a, Date d) const { return a.onset <= d && d <= a.desist; }

    void make_agents() {
        const std::size_t n = cfg_.n_persons;
        agents_.resize(n);
        std::set<PersonKey> used;
        std::normal_distribution<double> age_dist(cfg_.age_mean, cfg_.age_sd);
        std::exponential_distribution<double> career(1.0 / cfg_.career_mean_years);
        std::lognormal_distribution<double> activity(0.0, 0.5);
        for (auto& a : agents_) {
            for (;;) {
                double age = age_dist(rng_);
                while (age < cfg_.age_min || age > cfg_.age_max) age = age_dist(rng_);
                a.age_at_cutoff = age;
                const auto dob = cfg_.cutoff.plus_days(-static_cast<int>(std::lround(age * 365.2425)));
                const bool has_dob = !chance(cfg_.missing_dob_fraction);
                a.key = PersonKey{syllable_word(2, 3) + " " + syllable_word(1, 3),
                                  has_dob ? std::optional<Date>(dob) : std::nullopt};
                if (used.insert(a.key).second) break;
            }
            const Date earliest = cfg_.start.plus_years(-4);
            const auto dob_est = cfg_.cutoff.plus_days(-static_cast<int>(std::lround(a.age_at_cutoff * 365.2425)));
            a.onset = std::max(date_between(earliest, cfg_.end), dob_est.plus_years(12));
            a.desist = a.onset.plus_days(static_cast<int>(std::lround((0.5 + career(rng_)) * 365.2425)));
            a.activity = activity(rng_);
        }
        std::sort(agents_.begin(), agents_.end(), [](const Agent& x, const Agent& y) { return x.key < y.key; });

        // Groups over a shuffled order.
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng_);
        members_.clear();
        const auto solo = static_cast<std::size_t>(std::llround(cfg_.solo_fraction * static_cast<double>(n)));
        std::size_t pos = 0;
        for (; pos < solo && pos < n; ++pos) members_.push_back({order[pos]});
        while (pos < n) {
            const double u = std::max(uniform(), 1e-12);
            auto size = static_cast<std::size_t>(
                std::min<double>(cfg_.group_size_max, std::floor(cfg_.group_size_min * std::pow(u, -1.0 / cfg_.group_size_alpha))));
            size = std::min(std::max<std::size_t>(size, 1), n - pos);
            members_.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                  order.begin() + static_cast<std::ptrdiff_t>(pos + size));
            pos += size;
        }
        group_violence_.resize(members_.size());
        for (std::size_t g = 0; g < members_.size(); ++g) {
            group_violence_[g] = cfg_.violence_scale * std::pow(uniform(), cfg_.violence_skew);
            for (auto i : members_[g]) {
                auto& a = agents_[i];
                a.group = static_cast<std::uint32_t>(g);
                a.violence = std::min(1.0, group_violence_[g] * (0.5 + uniform()));
            }
        }
        for (auto& a : agents_) a.risk = risk_at(a, cfg_.cutoff);
    }

    // Up to three tries for an active companion; group members unless
    // bridging. Solo persons only ever bridge.
    std::optional<std::size_t> companion(std::size_t self, Date d) {
        const auto& group = members_[agents_[self].group];
        for (int attempt = 0; attempt < 3; ++attempt) {
            std::size_t c;
            if (chance(cfg_.bridge_prob))
                c = pick(agents_.size());
            else if (group.size() > 1)
                c = group[pick(group.size())];
            else
                return std::nullopt;
            if (c != self && active(agents_[c], d)) return c;
        }
        return std::nullopt;
    }

    std::string next_id(EventType t) {
        static constexpr std::array<char, 5> prefix = {'A', 'F', 'O', 'V', 'S'};
        char buf[32];
        std::snprintf(buf, sizeof buf, "%c%07u", prefix[static_cast<std::size_t>(t)], ++counter_[static_cast<std::size_t>(t)]);
        return buf;
    }

    void make_routine_events(Corpus& c) {
        static constexpr std::array<EventType, 4> types = {EventType::arrest, EventType::field_interview,
                                                           EventType::offense, EventType::victimization};
        std::discrete_distribution<int> type_dist({0.25, 0.30, 0.25, 0.20});
        for (std::size_t i = 0; i < agents_.size(); ++i) {
            const auto& a = agents_[i];
            const Date from = std::max(a.onset, cfg_.start), to = std::min(a.desist, cfg_.end);
            if (to < from) continue;
            const double years = (to - from + 1) / 365.2425;
            const double rate = cfg_.event_rate * a.activity * (0.6 + 0.8 * a.violence) * years;
            const int count = std::poisson_distribution<int>(rate)(rng_);
            for (int k = 0; k < count; ++k) {
                EventRecord ev;
                ev.type = types[static_cast<std::size_t>(type_dist(rng_))];
                ev.date = date_between(from, to);
                ev.event_id = next_id(ev.type);
                if (ev.type == EventType::field_interview) {
                    if (chance(0.02 + 0.1 * a.violence)) ev.flags.insert(CrimeFlag::firearm);
                } else if (chance(0.05 + 0.6 * a.violence)) {
                    ev.flags.insert(CrimeFlag::violent);
                    if (chance(0.4)) ev.flags.insert(CrimeFlag::firearm);
                } else if (chance(0.4)) {
                    ev.flags.insert(CrimeFlag::misdemeanor);
                }
                auto primary_role = [&] {
                    switch (ev.type) {
                    case EventType::arrest: return Role::arrestee;
                    case EventType::field_interview: return Role::stopped;
                    case EventType::offense: return Role::suspect;
                    default: return Role::victim;
                    }
                };
                ev.participants.push_back({a.key, primary_role()});
                if (cfg_.max_companions > 0 && chance(cfg_.co_offend_prob)) {
                    const int extra = std::uniform_int_distribution<int>(1, cfg_.max_companions)(rng_);
                    for (int e = 0; e < extra; ++e) {
                        const auto other = companion(i, ev.date);
                        if (!other) continue;
                        Role role = primary_role();
                        if (ev.type == EventType::offense && chance(0.4)) role = Role::victim;
                        if (ev.type == EventType::victimization && chance(0.5)) role = Role::suspect;
                        ev.participants.push_back({agents_[*other].key, role});
                    }
                }
                c.events[ev.type].push_back(std::move(ev));
            }
        }
    }

    void make_shootings(Corpus& c) {
        // Violent pool for suspect draws.
        std::vector<std::size_t> pool;
        for (std::size_t i = 0; i < agents_.size(); ++i)
            if (agents_[i].violence > 0.3) pool.push_back(i);
        auto sigmoid = [](double t) { return 1.0 / (1.0 + std::exp(-t)); };
        for (int year = cfg_.start.year(); year <= cfg_.end.year(); ++year) {
            const Date ys = std::max(*Date::from_ymd(year, 1, 1), cfg_.start);
            const Date ye = std::min(*Date::from_ymd(year, 12, 31), cfg_.end);
            const Date mid = ys.plus_days((ye - ys) / 2);
            for (std::size_t i = 0; i < agents_.size(); ++i) {
                const auto& a = agents_[i];
                if (a.violence <= 0.0) continue;
                const Date from = std::max(a.onset, ys), to = std::min(a.desist, ye);
                if (to < from) continue;
                const double frac = (to - from + 1) / 365.2425;
                const double p = frac * sigmoid(cfg_.shooting_intercept + cfg_.shooting_slope * risk_at(a, mid));
                if (!chance(p)) continue;
                EventRecord ev;
                ev.type = EventType::shooting;
                ev.date = date_between(from, to);
                ev.event_id = next_id(ev.type);
                ev.flags = kShootingImpliedFlags;
                ev.participants.push_back({a.key, Role::victim});
                if (chance(cfg_.co_victim_prob))
                    if (auto other = companion(i, ev.date)) ev.participants.push_back({agents_[*other].key, Role::victim});
                if (!pool.empty() && chance(cfg_.suspect_known_prob)) {
                    for (int attempt = 0; attempt < 20; ++attempt) {
                        const auto s = pool[pick(pool.size())];
                        if (s != i && active(agents_[s], ev.date)) {
                            ev.participants.push_back({agents_[s].key, Role::suspect});
                            break;
                        }
                    }
                }
                c.events[EventType::shooting].push_back(std::move(ev));
            }
        }
    }

    // Intelligence list compiled before the cutoff: noisy ranking of
    // violence among persons active at compilation time.
    void make_cirv(Corpus& c) {
        const Date intel = cfg_.cutoff.plus_years(-cfg_.cirv_intel_lag_years);
        std::normal_distribution<double> noise(0.0, 0.3);
        std::vector<std::pair<double, std::size_t>> ranked;
        for (std::size_t i = 0; i < agents_.size(); ++i) {
            const auto& a = agents_[i];
            const double known = active(a, intel) || (a.onset <= intel && intel.plus_years(-1) <= a.desist) ? 1.0 : 0.2;
            ranked.emplace_back(known * a.violence + noise(rng_), i);
        }
        std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
            return x.first != y.first ? x.first > y.first : x.second < y.second;
        });
        const auto size = std::min(ranked.size(), static_cast<std::size_t>(std::llround(cfg_.cirv_fraction * static_cast<double>(agents_.size()))));
        const auto active_n = static_cast<std::size_t>(std::llround(cfg_.cirv_active_share * static_cast<double>(size)));
        for (std::size_t r = 0; r < size; ++r) c.cirv.push_back({agents_[ranked[r].second].key, r < active_n});
    }

    const SynthConfig& cfg_;
    std::mt19937_64 rng_;
    std::vector<Agent> agents_;
    std::vector<std::vector<std::size_t>> members_;
    std::vector<double> group_violence_;
    std::array<unsigned, 5> counter_{};
};

} // namespace detail

inline Corpus generate_corpus(const SynthConfig& cfg) {
    cfg.validate();
    return detail::Generator(cfg).run();
}

inline void write_corpus(const Corpus& c, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw SynthError("cannot write " + (dir / name).string());
        return out;
    };
    for (const auto& [type, file] : kDatasetFiles) {
        auto out = open(file);
        const auto it = c.events.find(type);
        write_events(out, it == c.events.end() ? std::span<const EventRecord>{} : std::span<const EventRecord>(it->second));
    }
    {
        auto out = open(kCirvFile);
        write_cirv(out, c.cirv);
    }
    auto out = open(kGroundTruthFile);
    out << "person_id,name,dob,planted_risk\n";
    for (std::size_t i = 0; i < c.truth.size(); ++i)
        csv::write_row(out, {std::to_string(i), c.truth[i].key.full_name, c.truth[i].key.dob_string(),
                             format_fixed(c.truth[i].planted_risk, 6)});
}

// Writes the five event datasets, the CIRV roster and ground_truth.csv.
inline Corpus generate(const SynthConfig& cfg, const std::filesystem::path& dir) {
    auto c = generate_corpus(cfg);
    write_corpus(c, dir);
    return c;
}

} // namespace vipar::synth
