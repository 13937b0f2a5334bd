#pragma once

// End-to-end orchestration shared by the command-line tool and the
// acceptance suite: load datasets, split at the cutoff, build the network,
// compute measures, score, validate and evaluate. Every command is a pure
// function of its input files and RunConfig.

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "vipar/eval.hpp"
#include "vipar/ingest.hpp"
#include "vipar/measures.hpp"
#include "vipar/network.hpp"
#include "vipar/rules.hpp"
#include "vipar/stats.hpp"
#include "vipar/synth.hpp"

namespace vipar {

namespace fs = std::filesystem;

struct RunConfig {
    fs::path events_dir;
    std::optional<fs::path> cirv;      // default: <events_dir>/cirv.csv when present
    std::optional<fs::path> shootings; // default: <events_dir>/shootings.csv
    std::optional<fs::path> ruleset;   // default: built-in rules
    Date cutoff = *Date::from_ymd(2014, 12, 31);
    std::optional<Date> snapshot; // default: cutoff
    std::optional<int> recency_days;
    std::optional<double> pr_threshold;
    std::optional<std::size_t> top_n; // default: CIRV roster size
    double ridge = 0.0;
    fs::path out_dir = "out";

    Date effective_snapshot() const { return snapshot.value_or(cutoff); }
};

struct Dataset {
    std::vector<EventRecord> events;
    std::vector<CirvEntry> cirv;
    std::vector<RowError> errors;
    std::size_t rows_by_type[kAllEventTypes.size()] = {};
};

// Event files are parsed concurrently; results merge in a fixed order.
inline Dataset load_dataset(const RunConfig& cfg) {
    if (!fs::is_directory(cfg.events_dir)) throw IngestError("events directory not found: " + cfg.events_dir.string());
    std::vector<std::pair<EventType, fs::path>> files;
    for (const auto& [type, name] : synth::kDatasetFiles) {
        fs::path p = cfg.events_dir / name;
        if (type == EventType::shooting && cfg.shootings) p = *cfg.shootings;
        if (!fs::exists(p)) throw IngestError("missing dataset file " + p.string());
        files.emplace_back(type, p);
    }
    std::vector<std::future<ParseResult<EventRecord>>> jobs;
    for (const auto& [type, path] : files)
        jobs.push_back(std::async(std::launch::async, [type = type, path = path] { return parse_events(path, type); }));

    Dataset ds;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        auto r = jobs[i].get();
        ds.rows_by_type[static_cast<std::size_t>(files[i].first)] = r.records.size();
        ds.events.insert(ds.events.end(), std::make_move_iterator(r.records.begin()),
                         std::make_move_iterator(r.records.end()));
        ds.errors.insert(ds.errors.end(), r.errors.begin(), r.errors.end());
    }
    const fs::path cirv_path = cfg.cirv.value_or(cfg.events_dir / synth::kCirvFile);
    if (cfg.cirv || fs::exists(cirv_path)) {
        auto r = load_cirv(cirv_path);
        ds.cirv = std::move(r.records);
        ds.errors.insert(ds.errors.end(), r.errors.begin(), r.errors.end());
    }
    return ds;
}

inline RuleSet effective_ruleset(const RunConfig& cfg) {
    RuleSet rs = cfg.ruleset ? load_ruleset(*cfg.ruleset) : default_ruleset();
    if (cfg.recency_days) rs.recency_days = *cfg.recency_days;
    if (cfg.pr_threshold) rs.pr_threshold = *cfg.pr_threshold;
    rs.validate();
    return rs;
}

struct ScoringRun {
    RuleSet ruleset;
    RecencyWindow window;
    TemporalSplit split;
    PersonStore store;
    CoOffendingGraph graph;
    Partition partition;
    std::vector<PersonMeasures> measures;
    std::vector<PersonHistory> history;
    std::vector<GroupMeasures> groups;
    std::vector<ViparScore> scores;
};

// Scores everyone seen in events dated on or before the snapshot; hold-out
// outcomes are the shootings after the cutoff.
inline ScoringRun run_scoring(const Dataset& ds, const RunConfig& cfg) {
    const Date snapshot = cfg.effective_snapshot();
    if (snapshot > cfg.cutoff) throw EvalError("snapshot must not be after the cutoff");
    ScoringRun run;
    run.ruleset = effective_ruleset(cfg);
    run.window = RecencyWindow{snapshot, run.ruleset.recency_days};
    run.split = temporal_split(ds.events, cfg.cutoff);

    std::vector<EventRecord> training;
    for (const auto& ev : run.split.training)
        if (ev.date <= snapshot) training.push_back(ev);
    run.store = resolve_persons(std::move(training), snapshot);
    apply_cirv(run.store, ds.cirv);

    run.graph = build_graph(run.store);
    run.partition = components(run.graph);
    MeasureOptions mopt;
    mopt.pr_threshold = run.ruleset.pr_threshold;
    run.measures = compute_person_measures(run.graph, run.store, mopt);
    run.groups = group_aggregates(run.partition, run.store, run.window);
    run.history.reserve(run.store.persons.size());
    run.scores.reserve(run.store.persons.size());
    for (const auto& p : run.store.persons) {
        run.history.push_back(person_history(p, run.store, run.window));
        run.scores.push_back(score_person(p, run.history.back(), run.measures[p.id],
                                          run.groups[run.partition.group_of[p.id]], run.ruleset));
    }
    return run;
}

struct ListSizes {
    std::size_t total = 0;
    std::size_t active = 0;
};

// Sized to the CIRV roster unless top_n overrides; the active tier keeps
// the roster's active count (or its share, for an overridden size).
inline ListSizes list_sizes(const RunConfig& cfg, const Dataset& ds, std::size_t scored) {
    const auto counts = cirv_counts(ds.cirv);
    const std::size_t roster = counts.active + counts.non_active;
    ListSizes s;
    s.total = cfg.top_n.value_or(roster > 0 ? roster : 3215);
    s.total = std::min(s.total, scored);
    const double share = roster > 0 ? static_cast<double>(counts.active) / static_cast<double>(roster)
                                    : 1379.0 / 3215.0;
    s.active = cfg.top_n || roster == 0 ? static_cast<std::size_t>(std::llround(share * static_cast<double>(s.total)))
                                        : counts.active;
    s.active = std::min(s.active, s.total);
    return s;
}

inline std::vector<PersonKey> ranked_keys(const ScoringRun& run, std::size_t n) {
    std::vector<PersonKey> keys;
    if (n == 0) return keys;
    for (auto id : rank(run.scores, static_cast<std::ptrdiff_t>(n))) keys.push_back(run.store.persons[id].key);
    return keys;
}

// ---------------------------------------------------------------------------
// Output helpers

inline std::ofstream open_output(const fs::path& dir, const std::string& name) {
    fs::create_directories(dir);
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw IngestError("cannot write " + (dir / name).string());
    return out;
}

inline nlohmann::ordered_json to_json(const RunConfig& cfg, const RuleSet& rs) {
    nlohmann::ordered_json j;
    j["events_dir"] = cfg.events_dir.generic_string();
    j["cirv"] = cfg.cirv ? cfg.cirv->generic_string() : "";
    j["shootings"] = cfg.shootings ? cfg.shootings->generic_string() : "";
    j["ruleset"] = cfg.ruleset ? cfg.ruleset->generic_string() : "<built-in>";
    j["cutoff"] = cfg.cutoff.to_string();
    j["snapshot"] = cfg.effective_snapshot().to_string();
    j["recency_days"] = rs.recency_days;
    j["pr_threshold"] = rs.pr_threshold;
    j["top_n"] = cfg.top_n ? nlohmann::ordered_json(*cfg.top_n) : nlohmann::ordered_json();
    j["ridge"] = cfg.ridge;
    return j;
}

inline void write_run_config(const RunConfig& cfg, const RuleSet& rs, const std::string& command) {
    auto out = open_output(cfg.out_dir, "run_config_" + command + ".json");
    out << to_json(cfg, rs).dump(2) << '\n';
}

inline void report_row_errors(const Dataset& ds, std::ostream& log) {
    for (const auto& e : ds.errors) log << "warning: " << e.to_string() << '\n';
}

// ---------------------------------------------------------------------------
// Commands

inline void write_persons_csv(std::ostream& out, const PersonStore& store) {
    out << "person_id,name,dob,age,cirv_status,participations\n";
    for (const auto& p : store.persons) {
        const char* status = p.cirv_status == CirvStatus::active       ? "active"
                             : p.cirv_status == CirvStatus::non_active ? "non_active"
                                                                       : "none";
        csv::write_row(out, {std::to_string(p.id), p.key.full_name, p.key.dob_string(),
                             p.age ? format_fixed(p.age->years(), 1) : std::string{}, status,
                             std::to_string(p.participations.size())});
    }
}

inline int cmd_ingest(const RunConfig& cfg, std::ostream& log) {
    const auto ds = load_dataset(cfg);
    report_row_errors(ds, log);
    const auto store = resolve_persons(ds.events, cfg.effective_snapshot());
    auto persons = open_output(cfg.out_dir, "persons.csv");
    write_persons_csv(persons, store);
    auto errs = open_output(cfg.out_dir, "row_errors.csv");
    errs << "source,line,message\n";
    for (const auto& e : ds.errors) csv::write_row(errs, {e.source, std::to_string(e.line), e.message});

    nlohmann::ordered_json j;
    for (auto t : kAllEventTypes) j["rows"][std::string(to_string(t))] = ds.rows_by_type[static_cast<std::size_t>(t)];
    j["row_errors"] = ds.errors.size();
    j["participation_slots"] = store.participation_count();
    j["unique_persons"] = store.persons.size();
    const auto counts = cirv_counts(ds.cirv);
    j["cirv_active"] = counts.active;
    j["cirv_non_active"] = counts.non_active;
    auto summary = open_output(cfg.out_dir, "ingest_summary.json");
    summary << j.dump(2) << '\n';
    log << "ingested " << ds.events.size() << " events, " << store.persons.size() << " persons\n";
    return 0;
}

inline int cmd_score(const RunConfig& cfg, std::ostream& log) {
    const auto ds = load_dataset(cfg);
    report_row_errors(ds, log);
    const auto run = run_scoring(ds, cfg);
    write_run_config(cfg, run.ruleset, "score");
    {
        auto out = open_output(cfg.out_dir, "scores.csv");
        write_scores_csv(out, run.scores, run.store);
    }
    {
        auto out = open_output(cfg.out_dir, "measures.csv");
        write_measures_csv(out, run.measures);
    }
    {
        auto out = open_output(cfg.out_dir, "groups.csv");
        write_groups_csv(out, run.partition, run.groups);
    }
    {
        auto out = open_output(cfg.out_dir, "edges.csv");
        write_edges_csv(out, run.graph);
    }
    {
        auto out = open_output(cfg.out_dir, "components.csv");
        write_components_csv(out, run.partition);
    }
    {
        const auto sizes = list_sizes(cfg, ds, run.scores.size());
        auto out = open_output(cfg.out_dir, "ranked.csv");
        out << "rank,person_id,name,dob,total,tier\n";
        if (sizes.total > 0) {
            const auto ids = rank(run.scores, static_cast<std::ptrdiff_t>(sizes.total));
            for (std::size_t r = 0; r < ids.size(); ++r) {
                const auto& p = run.store.persons[ids[r]];
                csv::write_row(out, {std::to_string(r + 1), std::to_string(p.id), p.key.full_name, p.key.dob_string(),
                                     run.scores[p.id].total().to_string(), r < sizes.active ? "active" : "non_active"});
            }
        }
    }
    log << "scored " << run.scores.size() << " persons (" << run.partition.groups.size() << " groups, "
        << run.graph.edge_count() << " edges)\n";
    return 0;
}

struct ValidationTable {
    std::string name;
    std::vector<std::string> predictors;
    std::vector<std::string> screened_only; // screened for collinearity, not fitted
};

inline std::vector<ValidationTable> validation_tables() {
    return {
        {"personal",
         {"age", "cirv_member", "recent_misdemeanors_ge2", "misdemeanors_ge3", "recent_firearm_incident"},
         {"recent_violent_victimization"}},
        {"positional",
         {"pagerank", "high_pr_friend_d1", "cirv_friend_d1", "cirv_friend_d2", "cirv_friend_d3",
          "shooting_friend_d1", "shooting_friend_d2"},
         {}},
        {"structural",
         {"group_violent_crimes_gt3", "group_violent_victimizations_gt3", "group_shootings_gt3", "group_members_gt20"},
         {}},
    };
}

inline double predictor_value(const std::string& name, const ScoringRun& run, PersonId id) {
    const auto& p = run.store.persons[id];
    const auto& h = run.history[id];
    const auto& m = run.measures[id];
    const auto& g = run.groups[run.partition.group_of[id]];
    if (name == "age") return p.age ? p.age->years() : 0.0;
    if (name == "cirv_member") return p.cirv_status != CirvStatus::none;
    if (name == "recent_misdemeanors_ge2") return h.recent_misdemeanors_committed >= 2;
    if (name == "misdemeanors_ge3") return h.misdemeanors_committed >= 3;
    if (name == "recent_firearm_incident") return h.recent_firearm_incidents >= 1;
    if (name == "recent_violent_victimization") return h.recent_violent_victimizations >= 1;
    if (name == "pagerank") return m.simplified_pagerank;
    if (name == "high_pr_friend_d1") return m.flags.high_pr_friend_d1;
    if (name == "cirv_friend_d1") return m.flags.cirv_friend_d1;
    if (name == "cirv_friend_d2") return m.flags.cirv_friend_d2;
    if (name == "cirv_friend_d3") return m.flags.cirv_friend_d3;
    if (name == "shooting_friend_d1") return m.flags.shooting_friend_d1;
    if (name == "shooting_friend_d2") return m.flags.shooting_friend_d2;
    if (name == "group_violent_crimes_gt3") return g.violent_crime_count > 3;
    if (name == "group_violent_victimizations_gt3") return g.violent_victimization_count > 3;
    if (name == "group_shootings_gt3") return g.shooting_count > 3;
    if (name == "group_members_gt20") return g.member_count > 20;
    throw StatsError("unknown predictor " + name);
}

struct ValidationResult {
    std::string table;
    stats::LogitFit fit;
    std::vector<stats::CollinearityPair> collinearity;
    std::vector<std::string> dropped; // constant columns
};

// Regression of "shot after the cutoff" on each predictor family over the
// matchable persons (known dob and age).
inline std::vector<ValidationResult> run_validation(const ScoringRun& run, double ridge) {
    std::set<PersonKey> victims;
    for (const auto& k : run.split.holdout.victims) victims.insert(k);
    std::vector<PersonId> rows;
    for (const auto& p : run.store.persons)
        if (p.matchable() && p.age) rows.push_back(p.id);
    std::vector<double> y;
    for (auto id : rows) y.push_back(victims.count(run.store.persons[id].key) ? 1.0 : 0.0);

    std::vector<ValidationResult> out;
    for (const auto& table : validation_tables()) {
        ValidationResult vr;
        vr.table = table.name;
        std::vector<std::string> screen = table.predictors;
        screen.insert(screen.end(), table.screened_only.begin(), table.screened_only.end());
        Eigen::MatrixXd all(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(screen.size()));
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < screen.size(); ++c)
                all(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = predictor_value(screen[c], run, rows[r]);
        vr.collinearity = stats::screen_collinearity(all, screen);

        std::vector<std::string> kept;
        std::vector<Eigen::Index> cols;
        for (std::size_t c = 0; c < table.predictors.size(); ++c) {
            const auto col = all.col(static_cast<Eigen::Index>(c));
            if (col.size() > 0 && (col.array() != col[0]).any()) {
                kept.push_back(table.predictors[c]);
                cols.push_back(static_cast<Eigen::Index>(c));
            } else {
                vr.dropped.push_back(table.predictors[c]);
            }
        }
        Eigen::MatrixXd design(all.rows(), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t c = 0; c < cols.size(); ++c) design.col(static_cast<Eigen::Index>(c)) = all.col(cols[c]);
        stats::LogitOptions opt;
        opt.ridge = ridge;
        vr.fit = stats::logit_fit(design, y, kept, opt);
        out.push_back(std::move(vr));
    }
    return out;
}

inline int cmd_validate(const RunConfig& cfg, std::ostream& log) {
    const auto ds = load_dataset(cfg);
    report_row_errors(ds, log);
    const auto run = run_scoring(ds, cfg);
    write_run_config(cfg, run.ruleset, "validate");
    for (const auto& w : run.split.warnings) log << "warning: " << w << '\n';
    const auto results = run_validation(run, cfg.ridge);
    for (const auto& vr : results) {
        {
            auto out = open_output(cfg.out_dir, "validation_" + vr.table + ".csv");
            stats::write_logit_report(out, vr.fit);
        }
        auto out = open_output(cfg.out_dir, "collinearity_" + vr.table + ".csv");
        stats::write_collinearity_report(out, vr.collinearity);
        for (const auto& d : vr.dropped) log << "warning: " << vr.table << ": dropped constant predictor " << d << '\n';
        for (const auto& c : vr.collinearity)
            if (c.level != stats::CollinearityLevel::ok)
                log << (c.level == stats::CollinearityLevel::flag ? "flag: " : "warning: ") << vr.table << ": " << c.a
                    << " and " << c.b << " correlated (r=" << format_fixed(c.r, 3) << ")\n";
    }
    log << "validated " << results.size() << " predictor families\n";
    return 0;
}

struct EvaluationRun {
    std::vector<EvaluationReport> suspects;
    std::vector<EvaluationReport> victims;
    std::vector<ListComparison> comparisons;
};

inline EvaluationRun run_evaluation(const ScoringRun& run, const Dataset& ds, const RunConfig& cfg) {
    const auto sizes = list_sizes(cfg, ds, run.scores.size());
    const auto vipar = ranked_keys(run, sizes.total);
    EvaluationRun ev;
    ev.suspects = evaluate_tiers("vipar", vipar, sizes.active, run.split.holdout.suspects);
    ev.victims = evaluate_tiers("vipar", vipar, sizes.active, run.split.holdout.victims);
    if (!ds.cirv.empty()) {
        std::vector<PersonKey> baseline;
        for (const auto& e : ds.cirv)
            if (e.active) baseline.push_back(e.key);
        const auto active_n = baseline.size();
        for (const auto& e : ds.cirv)
            if (!e.active) baseline.push_back(e.key);
        auto s = evaluate_tiers("cirv", baseline, active_n, run.split.holdout.suspects);
        auto v = evaluate_tiers("cirv", baseline, active_n, run.split.holdout.victims);
        ev.comparisons.push_back(compare_lists(ev.suspects.back(), s.back()));
        ev.comparisons.push_back(compare_lists(ev.victims.back(), v.back()));
        ev.suspects.insert(ev.suspects.end(), s.begin(), s.end());
        ev.victims.insert(ev.victims.end(), v.begin(), v.end());
    }
    return ev;
}

inline int cmd_evaluate(const RunConfig& cfg, std::ostream& log, std::ostream& table_out) {
    const auto ds = load_dataset(cfg);
    report_row_errors(ds, log);
    const auto run = run_scoring(ds, cfg);
    write_run_config(cfg, run.ruleset, "evaluate");
    for (const auto& w : run.split.warnings) log << "warning: " << w << '\n';
    const auto ev = run_evaluation(run, ds, cfg);
    {
        auto out = open_output(cfg.out_dir, "evaluation_suspects.csv");
        write_reports_csv(out, ev.suspects);
    }
    {
        auto out = open_output(cfg.out_dir, "evaluation_victims.csv");
        write_reports_csv(out, ev.victims);
    }
    {
        auto out = open_output(cfg.out_dir, "comparison.csv");
        out << "outcome,list_a,list_b,rate_a,rate_b,rate_ratio\n";
        const char* names[] = {"suspects", "victims"};
        for (std::size_t i = 0; i < ev.comparisons.size(); ++i) {
            const auto& c = ev.comparisons[i];
            out << names[i] << ',' << c.a.list_name << ',' << c.b.list_name << ','
                << format_fixed(c.a.hit_rate_percent(), 1) << ',' << format_fixed(c.b.hit_rate_percent(), 1) << ','
                << (c.rate_ratio ? format_fixed(*c.rate_ratio, 3) : std::string{}) << '\n';
        }
    }
    nlohmann::ordered_json summary;
    summary["holdout_shooting_events"] = run.split.holdout.shooting_events;
    summary["scored_persons"] = run.scores.size();
    summary["suspects"] = nlohmann::ordered_json::array();
    for (const auto& r : ev.suspects) summary["suspects"].push_back(to_json(r));
    summary["victims"] = nlohmann::ordered_json::array();
    for (const auto& r : ev.victims) summary["victims"].push_back(to_json(r));
    summary["comparisons"] = nlohmann::ordered_json::array();
    for (const auto& c : ev.comparisons) summary["comparisons"].push_back(to_json(c));
    {
        auto out = open_output(cfg.out_dir, "evaluation_summary.json");
        out << summary.dump(2) << '\n';
    }
    print_reports_table(table_out, "Future shooting suspects", ev.suspects);
    table_out << '\n';
    print_reports_table(table_out, "Future shooting victims", ev.victims);
    return 0;
}

} // namespace vipar
