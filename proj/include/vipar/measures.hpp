#pragma once

// Per-person network measures, personal history counts and per-group
// structural aggregates.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "vipar/error.hpp"
#include "vipar/format.hpp"
#include "vipar/ingest.hpp"
#include "vipar/network.hpp"

namespace vipar {

// (snapshot - days, snapshot]
struct RecencyWindow {
    Date snapshot;
    int days = 365;

    constexpr bool contains(Date d) const noexcept {
        return d <= snapshot && snapshot - d < days;
    }
};

// ---------------------------------------------------------------------------
// PageRank

// Popularity surrogate: (degree / 2 + events) / 10. Returned in twentieths
// so callers can stay in integer arithmetic: value = twentieths / 20.
constexpr std::uint64_t simplified_pagerank_twentieths(std::uint64_t degree, std::uint64_t events) noexcept {
    return degree + 2 * events;
}

inline double simplified_pagerank(double degree, double events) {
    if (degree < 0 || events < 0) throw MeasuresError("simplified PageRank inputs must be non-negative");
    return (degree / 2.0 + events) / 10.0;
}

struct PageRankOptions {
    double damping = 0.85;
    double tolerance = 1e-8;
    int max_iterations = 200;
};

// Power iteration with each undirected edge as two arcs; isolated nodes
// spread their mass uniformly. Values are scaled to mean 1 and the
// tolerance applies on that scale.
inline std::vector<double> reference_pagerank(const CoOffendingGraph& g, const PageRankOptions& opt = {}) {
    const std::size_t n = g.node_count();
    if (n == 0) throw MeasuresError("reference PageRank needs a non-empty graph");
    if (!(opt.damping > 0.0 && opt.damping < 1.0)) throw MeasuresError("damping must be in (0, 1)");
    const double d = opt.damping;
    std::vector<double> x(n, 1.0), next(n);
    double residual = 0.0;
    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        double dangling = 0.0;
        for (PersonId v = 0; v < n; ++v)
            if (g.degree(v) == 0) dangling += x[v];
        const double base = (1.0 - d) + d * dangling / static_cast<double>(n);
        residual = 0.0;
        for (PersonId v = 0; v < n; ++v) {
            double in = 0.0;
            for (auto u : g.neighbors(v)) in += x[u] / static_cast<double>(g.degree(u));
            next[v] = base + d * in;
            residual = std::max(residual, std::abs(next[v] - x[v]));
        }
        x.swap(next);
        if (residual < opt.tolerance) {
            double sum = 0.0;
            for (double v : x) sum += v;
            const double scale = static_cast<double>(n) / sum;
            for (double& v : x) v *= scale;
            return x;
        }
    }
    throw MeasuresError("reference PageRank did not converge after " + std::to_string(opt.max_iterations) +
                        " iterations (residual " + format_exact(residual) + ")");
}

// ---------------------------------------------------------------------------
// Positional flags

struct PositionalFlags {
    bool high_pr_friend_d1 = false;
    bool cirv_friend_d1 = false;
    bool cirv_friend_d2 = false;
    bool cirv_friend_d3 = false;
    bool shooting_friend_d1 = false;
    bool shooting_friend_d2 = false;

    friend bool operator==(const PositionalFlags&, const PositionalFlags&) = default;
};

struct PersonMeasures {
    std::uint32_t degree_centrality = 0;
    std::uint32_t event_count = 0;
    double simplified_pagerank = 0.0;
    double reference_pagerank = 0.0;
    PositionalFlags flags;
};

// Roster membership per person id.
using Roster = std::vector<bool>;

// `simplified_pr` holds every person's simplified PageRank.
inline PositionalFlags positional_flags(const CoOffendingGraph& g, PersonId person, const Roster& cirv,
                                        const Roster& shooting, std::span<const double> simplified_pr,
                                        double pr_threshold, NeighborhoodScanner& scanner) {
    PositionalFlags f;
    for (auto v : g.neighbors(person))
        if (simplified_pr[v] > pr_threshold) f.high_pr_friend_d1 = true;

    bool cirv_found = false, shooting_found = false;
    scanner.scan(person, kMaxNeighborhoodDepth, [&](PersonId v, int depth) {
        if (!cirv_found && cirv[v]) {
            cirv_found = true;
            f.cirv_friend_d1 = depth <= 1;
            f.cirv_friend_d2 = depth <= 2;
            f.cirv_friend_d3 = true;
        }
        if (!shooting_found && depth <= 2 && shooting[v]) {
            shooting_found = true;
            f.shooting_friend_d1 = depth <= 1;
            f.shooting_friend_d2 = true;
        }
        return !(cirv_found && (shooting_found || depth > 2));
    });
    return f;
}

inline PositionalFlags positional_flags(const CoOffendingGraph& g, PersonId person, const Roster& cirv,
                                        const Roster& shooting, std::span<const double> simplified_pr,
                                        double pr_threshold = 1.0) {
    if (!g.contains(person)) throw MeasuresError("unknown person id " + std::to_string(person));
    NeighborhoodScanner scanner(g);
    return positional_flags(g, person, cirv, shooting, simplified_pr, pr_threshold, scanner);
}

inline Roster cirv_roster(const PersonStore& store) {
    Roster r(store.persons.size(), false);
    for (const auto& p : store.persons) r[p.id] = p.cirv_status != CirvStatus::none;
    return r;
}

// Persons appearing in any shooting-flagged event, in either role.
inline Roster shooting_roster(const PersonStore& store) {
    Roster r(store.persons.size(), false);
    for (std::size_t e = 0; e < store.events.size(); ++e)
        if (store.events[e].flags.has(CrimeFlag::shooting))
            for (const auto& [id, role] : store.event_participants[e]) r[id] = true;
    return r;
}

struct MeasureOptions {
    double pr_threshold = 1.0;
    PageRankOptions pagerank;
};

inline std::vector<PersonMeasures> compute_person_measures(const CoOffendingGraph& g, const PersonStore& store,
                                                           const MeasureOptions& opt = {}) {
    const std::size_t n = g.node_count();
    std::vector<PersonMeasures> out(n);
    std::vector<double> spr(n);
    for (PersonId v = 0; v < n; ++v) {
        out[v].degree_centrality = static_cast<std::uint32_t>(g.degree(v));
        out[v].event_count = g.event_count(v);
        spr[v] = simplified_pagerank(out[v].degree_centrality, out[v].event_count);
        out[v].simplified_pagerank = spr[v];
    }
    if (n > 0) {
        const auto ref = reference_pagerank(g, opt.pagerank);
        for (PersonId v = 0; v < n; ++v) out[v].reference_pagerank = ref[v];
    }
    const auto cirv = cirv_roster(store);
    const auto shooting = shooting_roster(store);
    NeighborhoodScanner scanner(g);
    for (PersonId v = 0; v < n; ++v)
        out[v].flags = positional_flags(g, v, cirv, shooting, spr, opt.pr_threshold, scanner);
    return out;
}

// ---------------------------------------------------------------------------
// Personal history

// Distinct-event counts over one person's participations.
struct PersonHistory {
    std::uint32_t violent_crimes = 0;
    std::uint32_t recent_violent_crimes = 0;
    std::uint32_t violent_victimizations = 0;
    std::uint32_t recent_violent_victimizations = 0;
    std::uint32_t firearm_incidents = 0;
    std::uint32_t recent_firearm_incidents = 0;
    std::uint32_t misdemeanors_committed = 0;
    std::uint32_t recent_misdemeanors_committed = 0;
    std::uint32_t misdemeanor_victimizations = 0;

    friend bool operator==(const PersonHistory&, const PersonHistory&) = default;
};

inline PersonHistory person_history(const Person& person, const PersonStore& store, const RecencyWindow& window) {
    PersonHistory h;
    const auto& parts = person.participations;
    for (std::size_t i = 0; i < parts.size();) {
        const std::size_t e = parts[i].event_index;
        bool offender = false, victim = false;
        for (; i < parts.size() && parts[i].event_index == e; ++i) {
            offender = offender || is_offender_role(parts[i].role);
            victim = victim || parts[i].role == Role::victim;
        }
        const auto& ev = store.events[e];
        if (ev.date > window.snapshot) continue;
        const bool recent = window.contains(ev.date);
        const bool violent = ev.flags.has(CrimeFlag::violent);
        const bool misdemeanor = ev.flags.has(CrimeFlag::misdemeanor);
        if (violent && offender) {
            ++h.violent_crimes;
            h.recent_violent_crimes += recent;
        }
        if (violent && victim) {
            ++h.violent_victimizations;
            h.recent_violent_victimizations += recent;
        }
        if (ev.flags.has(CrimeFlag::firearm)) {
            ++h.firearm_incidents;
            h.recent_firearm_incidents += recent;
        }
        if (misdemeanor && offender) {
            ++h.misdemeanors_committed;
            h.recent_misdemeanors_committed += recent;
        }
        if (misdemeanor && victim) ++h.misdemeanor_victimizations;
    }
    return h;
}

// ---------------------------------------------------------------------------
// Group aggregates

struct GroupMeasures {
    std::uint32_t member_count = 0;
    std::uint32_t violent_crime_count = 0;
    std::uint32_t violent_victimization_count = 0;
    std::uint32_t recent_violent_victimization_count = 0;
    std::uint32_t shooting_count = 0;
    std::uint32_t recent_shooting_count = 0;

    friend bool operator==(const GroupMeasures&, const GroupMeasures&) = default;
};

// Indexed like partition.groups. Each event counts once for its group; all
// of an event's participants are adjacent, so they share one group. Events
// after the window's snapshot are ignored.
inline std::vector<GroupMeasures> group_aggregates(const Partition& part, const PersonStore& store,
                                                   const RecencyWindow& window) {
    std::vector<GroupMeasures> out(part.groups.size());
    for (std::size_t gi = 0; gi < part.groups.size(); ++gi)
        out[gi].member_count = static_cast<std::uint32_t>(part.groups[gi].members.size());
    for (std::size_t e = 0; e < store.events.size(); ++e) {
        const auto& ev = store.events[e];
        const auto& parts = store.event_participants[e];
        if (parts.empty() || ev.date > window.snapshot) continue;
        auto& gm = out[part.group_of[parts.front().first]];
        bool offender = false, victim = false;
        for (const auto& p : ev.participants) {
            offender = offender || is_offender_role(p.role);
            victim = victim || p.role == Role::victim;
        }
        const bool recent = window.contains(ev.date);
        if (ev.flags.has(CrimeFlag::violent)) {
            gm.violent_crime_count += offender;
            gm.violent_victimization_count += victim;
            gm.recent_violent_victimization_count += victim && recent;
        }
        if (ev.flags.has(CrimeFlag::shooting)) {
            ++gm.shooting_count;
            gm.recent_shooting_count += recent;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Export

inline void write_measures_csv(std::ostream& out, std::span<const PersonMeasures> m) {
    out << "person_id,degree_centrality,event_count,simplified_pagerank,reference_pagerank,high_pr_friend_d1,"
           "cirv_friend_d1,cirv_friend_d2,cirv_friend_d3,shooting_friend_d1,shooting_friend_d2\n";
    for (std::size_t v = 0; v < m.size(); ++v) {
        const auto& x = m[v];
        out << v << ',' << x.degree_centrality << ',' << x.event_count << ','
            << format_fixed(x.simplified_pagerank, 2) << ',' << format_fixed(x.reference_pagerank, 6) << ','
            << x.flags.high_pr_friend_d1 << ',' << x.flags.cirv_friend_d1 << ',' << x.flags.cirv_friend_d2 << ','
            << x.flags.cirv_friend_d3 << ',' << x.flags.shooting_friend_d1 << ',' << x.flags.shooting_friend_d2
            << '\n';
    }
}

inline void write_groups_csv(std::ostream& out, const Partition& part, std::span<const GroupMeasures> gm) {
    out << "group_id,member_count,violent_crime_count,violent_victimization_count,"
           "recent_violent_victimization_count,shooting_count,recent_shooting_count\n";
    for (std::size_t gi = 0; gi < gm.size(); ++gi) {
        const auto& g = gm[gi];
        out << part.groups[gi].group_id << ',' << g.member_count << ',' << g.violent_crime_count << ','
            << g.violent_victimization_count << ',' << g.recent_violent_victimization_count << ','
            << g.shooting_count << ',' << g.recent_shooting_count << '\n';
    }
}

} // namespace vipar
