// vipar: synthetic data generation, ingestion, scoring, validation and
// hold-out evaluation of co-offending risk scores.
//
// Exit codes: 0 success, 1 data error, 2 usage error.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "vipar/pipeline.hpp"

namespace {

using vipar::Date;

Date parse_date_flag(const std::string& flag, const std::string& value) {
    const auto d = Date::parse(value);
    if (!d) throw CLI::ValidationError(flag, "expected YYYY-MM-DD, got '" + value + "'");
    return *d;
}

struct RawFlags {
    std::string events_dir, cirv, shootings, ruleset, snapshot, cutoff = "2014-12-31", out = "out";
    std::optional<int> recency_days;
    std::optional<double> pr_threshold;
    std::optional<std::size_t> top_n;
    double ridge = 0.0;
};

void add_data_flags(CLI::App* cmd, RawFlags& f, bool scoring) {
    cmd->add_option("--events-dir", f.events_dir, "Directory holding the event datasets")
        ->required()
        ->check(CLI::ExistingDirectory);
    cmd->add_option("--cirv", f.cirv, "CIRV roster CSV (default: <events-dir>/cirv.csv if present)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--shootings", f.shootings, "Shootings CSV (default: <events-dir>/shootings.csv)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--snapshot", f.snapshot, "Date at which ages and recency are measured (default: cutoff)");
    cmd->add_option("--cutoff", f.cutoff, "Last day of the training window")->capture_default_str();
    cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
    if (!scoring) return;
    cmd->add_option("--ruleset", f.ruleset, "Ruleset JSON (default: built-in rules)")->check(CLI::ExistingFile);
    cmd->add_option("--recency-days", f.recency_days, "Look-back window for 'recent' events")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--pr-threshold", f.pr_threshold, "Simplified PageRank above which a friend counts as high-PR");
    cmd->add_option("--top-n", f.top_n, "Prediction list length (default: CIRV roster size)")
        ->check(CLI::PositiveNumber);
}

vipar::RunConfig to_config(const RawFlags& f) {
    vipar::RunConfig cfg;
    cfg.events_dir = f.events_dir;
    if (!f.cirv.empty()) cfg.cirv = f.cirv;
    if (!f.shootings.empty()) cfg.shootings = f.shootings;
    if (!f.ruleset.empty()) cfg.ruleset = f.ruleset;
    cfg.cutoff = parse_date_flag("--cutoff", f.cutoff);
    if (!f.snapshot.empty()) cfg.snapshot = parse_date_flag("--snapshot", f.snapshot);
    cfg.recency_days = f.recency_days;
    cfg.pr_threshold = f.pr_threshold;
    cfg.top_n = f.top_n;
    cfg.ridge = f.ridge;
    cfg.out_dir = f.out;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Co-offending network risk scoring (VIPAR)"};
    app.set_config("--config", "", "TOML/INI file with flag values; command-line flags override it");
    app.require_subcommand(1);

    vipar::synth::SynthConfig synth_cfg;
    std::string synth_out = "data";
    std::string synth_cutoff = "2014-12-31";
    auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic corpus");
    synth->add_option("--out", synth_out, "Output directory")->capture_default_str();
    synth->add_option("--seed", synth_cfg.seed, "Random seed")->capture_default_str();
    synth->add_option("--persons", synth_cfg.n_persons, "Population size")->capture_default_str();
    synth->add_option("--cutoff", synth_cutoff, "Training cutoff; one year of outcomes follows")->capture_default_str();
    synth->add_option("--violence-scale", synth_cfg.violence_scale, "Scale of group violence propensity (0..1)")
        ->capture_default_str();

    RawFlags flags;
    auto* ingest = app.add_subcommand("ingest", "Parse datasets and report persons and row errors");
    add_data_flags(ingest, flags, false);
    auto* score = app.add_subcommand("score", "Build the network, compute measures and scores");
    add_data_flags(score, flags, true);
    auto* validate = app.add_subcommand("validate", "Logistic regression reports per predictor family");
    add_data_flags(validate, flags, true);
    validate->add_option("--ridge", flags.ridge, "Ridge penalty for the regressions")->capture_default_str();
    auto* evaluate = app.add_subcommand("evaluate", "Hit rates of the ranked list against hold-out shootings");
    add_data_flags(evaluate, flags, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (synth->parsed()) {
            synth_cfg.cutoff = parse_date_flag("--cutoff", synth_cutoff);
            synth_cfg.start = synth_cfg.cutoff.plus_years(-5).plus_days(1);
            synth_cfg.end = synth_cfg.cutoff.plus_years(1);
            const auto corpus = vipar::synth::generate(synth_cfg, synth_out);
            std::size_t events = 0;
            for (const auto& [t, evs] : corpus.events) events += evs.size();
            std::cerr << "wrote " << events << " events for " << corpus.truth.size() << " persons to " << synth_out
                      << '\n';
            return 0;
        }
        const auto cfg = to_config(flags);
        if (ingest->parsed()) return vipar::cmd_ingest(cfg, std::cerr);
        if (score->parsed()) return vipar::cmd_score(cfg, std::cerr);
        if (validate->parsed()) return vipar::cmd_validate(cfg, std::cerr);
        if (evaluate->parsed()) return vipar::cmd_evaluate(cfg, std::cerr, std::cout);
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const vipar::Error& e) {
        std::cerr << e.module() << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
