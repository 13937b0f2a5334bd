// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Each criterion also has a wall-clock budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "support.hpp"
#include "vipar/pipeline.hpp"

using namespace vipar;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;

    void check(bool cond, const std::string& what) {
        if (!cond && ok) detail = what;
        ok = ok && cond;
    }
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

// 1. Age weights per age band.
Outcome age_table() {
    struct Band {
        int lo, hi;
        double wmin, wmax;
    };
    const Band bands[] = {{13, 17, 5.3, 5.7}, {18, 24, 4.6, 5.2}, {25, 30, 4.0, 4.5}, {31, 40, 3.0, 3.9},
                          {41, 50, 2.0, 2.9}, {51, 60, 1.0, 1.9}, {61, 100, 0.0, 0.9}};
    Outcome o;
    for (const auto& b : bands) {
        double mn = 1e9, mx = -1e9;
        for (int age = b.lo; age <= b.hi; ++age) {
            const double w = age_weight(age);
            mn = std::min(mn, w);
            mx = std::max(mx, w);
        }
        o.check(mn == b.wmin && mx == b.wmax,
                fmt("band %.0f: got [%.2f, ", b.lo, mn) + fmt("%.2f]", mx));
    }
    o.check(age_weight(18.0) == 5.2, "18 -> " + format_exact(age_weight(18.0)));
    o.check(age_weight(70.0) == 0.0, "70 -> " + format_exact(age_weight(70.0)));
    if (o.ok) o.detail = "7 bands, 18->5.2, 70->0.0";
    return o;
}

// 2. Simplified PageRank closed form against independent integer arithmetic.
Outcome simplified_pr() {
    Outcome o;
    o.check(simplified_pagerank(1, 1) == 0.15, "pr(1,1) = " + format_exact(simplified_pagerank(1, 1)));
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<std::uint32_t> deg(0, 5000), ev(0, 2000);
    for (int i = 0; i < 10000; ++i) {
        const auto d = deg(rng), e = ev(rng);
        // (d/2 + e)/10 = (d + 2e)/20, one correctly rounded division.
        const double want = static_cast<double>(d + 2 * e) / 20.0;
        const double got = simplified_pagerank(d, e);
        o.check(got == want, fmt("pr(%.0f,%.0f) mismatch", d, e));
        o.check(static_cast<double>(simplified_pagerank_twentieths(d, e)) / 20.0 == got, "twentieths mismatch");
    }
    if (o.ok) o.detail = "pr(1,1)=0.15, 10000 random cases exact";
    return o;
}

// 3. Hit-rate and odds-ratio arithmetic.
Outcome rate_arithmetic() {
    Outcome o;
    auto keys = [](const std::string& p, int n) {
        std::vector<PersonKey> out;
        for (int i = 0; i < n; ++i) out.push_back({p + std::to_string(i), Date::from_days(i)});
        return out;
    };
    auto rate = [&](int hits, int outcomes) {
        const auto out = keys("O", outcomes);
        auto list = std::vector<PersonKey>(out.begin(), out.begin() + hits);
        for (const auto& k : keys("L", 100)) list.push_back(k);
        return match_and_rate("l", Tier::combined, list, out).hit_rate_percent();
    };
    const struct {
        int h, n;
        double pct;
    } rates[] = {{34, 149, 22.8}, {14, 149, 9.4}, {48, 149, 32.2}, {123, 477, 25.8}};
    for (const auto& r : rates)
        o.check(rate(r.h, r.n) == r.pct, fmt("%.0f/%.0f -> %.1f", r.h, r.n, rate(r.h, r.n)));
    const std::pair<double, double> exp_b[] = {
        {-0.043, 0.957}, {1.374, 3.951}, {0.649, 1.913}, {1.465, 4.327}, {0.597, 1.817}, // personal
        {0.779, 2.179},  {0.752, 2.121}, {0.403, 1.496}, {0.135, 1.144}, {0.339, 1.403}, // positional
        {0.609, 1.839},  {0.098, 1.103},                                                 //
        {0.567, 1.762},  {0.333, 1.395}, {0.792, 2.207}, {0.886, 2.426},                 // structural
    };
    for (const auto& [b, e] : exp_b)
        o.check(std::abs(stats::odds_ratio(b) - e) <= 0.001 + 1e-12, fmt("exp(%.3f) = %.4f vs %.3f", b, stats::odds_ratio(b), e));
    if (o.ok) o.detail = "4 rates, 16 Exp(B) rows";
    return o;
}

// 4. Graph construction, neighborhoods and components against oracles.
Outcome graph_oracles() {
    Outcome o;
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<std::size_t> persons(50, 1000);
    std::size_t nodes = 0;
    for (int rep = 0; rep < 100 && o.ok; ++rep) {
        oracle::CorpusOptions opt;
        opt.persons = persons(rng);
        opt.events = opt.persons;
        const auto store = resolve_persons(oracle::random_events(opt, rng), *Date::from_ymd(2014, 12, 31));
        const auto g = build_graph(store);
        std::vector<Edge> want;
        for (const auto& [p, c] : oracle::brute_force_edges(store)) want.push_back({p.first, p.second, c});
        o.check(g.edges() == want, "edge set differs in corpus " + std::to_string(rep));

        const auto adj = oracle::adjacency(g);
        for (PersonId v = 0; v < g.node_count() && o.ok; ++v) {
            const auto dist = oracle::bfs_distances(adj, v);
            for (int k = 1; k <= 3; ++k) {
                std::vector<PersonId> bfs;
                for (PersonId u = 0; u < g.node_count(); ++u)
                    if (dist[u] >= 1 && dist[u] <= k) bfs.push_back(u);
                o.check(k_neighborhood(g, v, k) == bfs, "neighborhood differs in corpus " + std::to_string(rep));
            }
        }
        const auto labels = oracle::component_labels(adj);
        const auto part = components(g);
        for (PersonId v = 0; v < g.node_count(); ++v)
            o.check(part.group_for(v).group_id == labels[v], "component differs in corpus " + std::to_string(rep));
        nodes += g.node_count();
    }
    if (o.ok) o.detail = "100 corpora, " + std::to_string(nodes) + " nodes";
    return o;
}

// 5. Logit gradient, coefficient recovery and reference PageRank.
Outcome logit_and_pagerank() {
    Outcome o;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z(0.0, 1.0);
    double worst = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::Index n = 200, p = 4;
        Eigen::MatrixXd X(n, p);
        Eigen::VectorXd y(n), beta(p);
        for (Eigen::Index i = 0; i < n; ++i) {
            X(i, 0) = 1.0;
            for (Eigen::Index j = 1; j < p; ++j) X(i, j) = z(rng);
            y[i] = z(rng) > 0.3 ? 1.0 : 0.0;
        }
        for (Eigen::Index j = 0; j < p; ++j) beta[j] = 0.5 * z(rng);
        const auto g = stats::gradient(X, y, beta);
        for (Eigen::Index j = 0; j < p; ++j) {
            const double h = 1e-5;
            Eigen::VectorXd up = beta, dn = beta;
            up[j] += h;
            dn[j] -= h;
            const double fd = (stats::log_likelihood(X, y, up) - stats::log_likelihood(X, y, dn)) / (2 * h);
            worst = std::max(worst, std::abs(fd - g[j]) / std::max(std::abs(fd), 1e-8));
        }
    }
    o.check(worst < 1e-4, fmt("gradient relative error %.2e", worst));

    const std::size_t n = 20000;
    Eigen::MatrixXd X(static_cast<Eigen::Index>(n), 1);
    std::vector<double> y(n);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = z(rng);
        X(static_cast<Eigen::Index>(i), 0) = x;
        y[i] = u(rng) < stats::sigmoid(-2.0 + 0.8 * x) ? 1.0 : 0.0;
    }
    const auto fit = stats::logit_fit(X, y, {"x"});
    o.check(std::abs(fit.coefficients[1] - 0.8) <= 0.1, fmt("beta1 = %.4f", fit.coefficients[1]));

    double pr_err = 0.0;
    for (int rep = 0; rep < 40; ++rep) {
        std::uniform_int_distribution<std::size_t> size(2, 50);
        const std::size_t nodes = size(rng);
        std::uniform_int_distribution<PersonId> who(0, static_cast<PersonId>(nodes - 1));
        GraphBuilder b(nodes);
        for (std::size_t e = 0; e < nodes; ++e) {
            const std::vector<PersonId> ev = {who(rng), who(rng)};
            b.add_event(ev);
        }
        const auto g = b.freeze();
        const auto got = reference_pagerank(g);
        const auto want = oracle::dense_pagerank(oracle::adjacency(g));
        for (std::size_t v = 0; v < nodes; ++v) pr_err = std::max(pr_err, std::abs(got[v] - want[v]));
    }
    o.check(pr_err < 1e-6, fmt("PageRank max error %.2e", pr_err));
    if (o.ok)
        o.detail = fmt("grad rel err %.1e, beta1 %.3f, PR err %.1e", worst, fit.coefficients[1], pr_err);
    return o;
}

// Shared default corpus for criteria 6 and 7.
struct DefaultCorpus {
    support::TempDir dir{"acceptance"};
    synth::Corpus corpus;
    RunConfig cfg;
    Dataset ds;

    DefaultCorpus() {
        corpus = synth::generate(synth::SynthConfig{}, dir / "data");
        cfg.events_dir = dir / "data";
        ds = load_dataset(cfg);
    }
};

// 6. Top-1,379 victim hit rate against a random list and a stale list.
Outcome predictive_lift(DefaultCorpus& dc) {
    Outcome o;
    constexpr std::size_t kList = 1379;
    const auto run = run_scoring(dc.ds, dc.cfg);
    const auto top = ranked_keys(run, kList);
    const auto vipar = match_and_rate("vipar", Tier::active, top, run.split.holdout.victims);

    // A uniform random list of kList scored persons hits each scored outcome
    // with probability kList / N.
    std::size_t scored_outcomes = 0;
    std::set<PersonKey> seen;
    for (const auto& k : run.split.holdout.victims)
        if (k.dob && seen.insert(k).second && run.store.find(k)) ++scored_outcomes;
    const double random_rate = 100.0 * static_cast<double>(scored_outcomes) * static_cast<double>(kList) /
                               static_cast<double>(run.scores.size()) / static_cast<double>(vipar.n_outcomes);

    auto stale_cfg = dc.cfg;
    stale_cfg.snapshot = dc.cfg.cutoff.plus_years(-2);
    const auto stale_run = run_scoring(dc.ds, stale_cfg);
    const auto stale_top = ranked_keys(stale_run, std::min(kList, stale_run.scores.size()));
    const auto stale = match_and_rate("stale", Tier::active, stale_top, run.split.holdout.victims);

    const double rate = 100.0 * static_cast<double>(vipar.n_hits) / static_cast<double>(vipar.n_outcomes);
    const double stale_rate = 100.0 * static_cast<double>(stale.n_hits) / static_cast<double>(stale.n_outcomes);
    o.check(vipar.n_outcomes > 0, "no hold-out victims");
    o.check(rate >= 3.0 * random_rate, fmt("vipar %.1f%% < 3 x random %.1f%%", rate, random_rate));
    o.check(rate > stale_rate, fmt("vipar %.1f%% <= stale %.1f%%", rate, stale_rate));
    o.detail = fmt("vipar %.1f%%, random %.1f%% (x%.2f), ", rate, random_rate, rate / random_rate) +
               fmt("stale %.1f%%, %0.f victims", stale_rate, static_cast<double>(vipar.n_outcomes));
    return o;
}

// 7. Byte-identical reruns of score, validate and evaluate.
Outcome determinism(DefaultCorpus& dc) {
    Outcome o;
    std::ostringstream sink;
    std::map<std::string, std::uint64_t> digests[2];
    for (int pass = 0; pass < 2; ++pass) {
        auto cfg = dc.cfg;
        cfg.out_dir = dc.dir / ("run" + std::to_string(pass));
        o.check(cmd_score(cfg, sink) == 0, "score failed");
        o.check(cmd_validate(cfg, sink) == 0, "validate failed");
        o.check(cmd_evaluate(cfg, sink, sink) == 0, "evaluate failed");
        digests[pass] = support::digest_dir(cfg.out_dir);
    }
    o.check(!digests[0].empty() && digests[0] == digests[1], "output digests differ");
    for (auto f : {"scores.csv", "validation_personal.csv", "evaluation_victims.csv"})
        o.check(digests[0].count(f) == 1, std::string("missing ") + f);
    if (o.ok) o.detail = std::to_string(digests[0].size()) + " files identical";
    return o;
}

// 8. Monotonicity of the total in boolean inputs and age.
Outcome monotonicity() {
    Outcome o;
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> age(0, 900), small(0, 6), big(0, 30), coin(0, 1), status(0, 2);
    const auto rs = default_ruleset();
    std::size_t flips = 0;
    for (int i = 0; i < 1000; ++i) {
        Person p;
        p.id = static_cast<PersonId>(i);
        p.age = Age::from_tenths(age(rng));
        p.cirv_status = static_cast<CirvStatus>(status(rng));
        PersonHistory h;
        for (auto* c : {&h.violent_crimes, &h.recent_violent_crimes, &h.violent_victimizations,
                        &h.recent_violent_victimizations, &h.firearm_incidents, &h.recent_firearm_incidents,
                        &h.misdemeanors_committed, &h.recent_misdemeanors_committed, &h.misdemeanor_victimizations})
            *c = static_cast<std::uint32_t>(small(rng));
        PersonMeasures m;
        m.degree_centrality = static_cast<std::uint32_t>(big(rng));
        m.event_count = static_cast<std::uint32_t>(big(rng));
        for (bool* f : {&m.flags.high_pr_friend_d1, &m.flags.cirv_friend_d1, &m.flags.cirv_friend_d2,
                        &m.flags.cirv_friend_d3, &m.flags.shooting_friend_d1, &m.flags.shooting_friend_d2})
            *f = coin(rng);
        GroupMeasures g;
        for (auto* c : {&g.member_count, &g.violent_crime_count, &g.violent_victimization_count,
                        &g.recent_violent_victimization_count, &g.shooting_count, &g.recent_shooting_count})
            *c = static_cast<std::uint32_t>(big(rng));

        const auto in = make_rule_inputs(p, h, m, g);
        const auto base = score_inputs(p.id, in, rs).total();
        for (const auto& fi : kFeatures) {
            if (!fi.boolean) continue;
            auto flipped = in;
            flipped.set(fi.feature, true);
            ++flips;
            o.check(score_inputs(p.id, flipped, rs).total() >= base, "flipping " + std::string(fi.name) + " lowered total");
        }
        for (int younger = 1; younger <= p.age->tenths(); younger += 37) {
            auto q = p;
            q.age = Age::from_tenths(p.age->tenths() - younger);
            o.check(score_person(q, h, m, g, rs).total() >= base, "younger person scored lower");
        }
    }
    if (o.ok) o.detail = "1000 persons, " + std::to_string(flips) + " flips";
    return o;
}

} // namespace

int main() {
    int failures = 0;
    auto criterion = [&](int id, const char* name, double budget_s, const std::function<Outcome()>& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs >= budget_s) o.check(false, fmt("took %.1f s, budget %.0f s", secs, budget_s));
        failures += !o.ok;
        std::printf("%s [%d] %s (%.2f s): %s\n", o.ok ? "PASS" : "FAIL", id, name, secs, o.detail.c_str());
        std::fflush(stdout);
    };

    criterion(1, "age-weight table", 1.0, age_table);
    criterion(2, "simplified PageRank arithmetic", 1.0, simplified_pr);
    criterion(3, "hit-rate and odds-ratio arithmetic", 1.0, rate_arithmetic);
    criterion(4, "graph oracles", 30.0, graph_oracles);
    criterion(5, "logit and PageRank correctness", 60.0, logit_and_pagerank);
    std::unique_ptr<DefaultCorpus> dc;
    criterion(6, "predictive lift", 300.0, [&] {
        dc = std::make_unique<DefaultCorpus>();
        return predictive_lift(*dc);
    });
    criterion(7, "determinism", 300.0, [&] {
        if (!dc) dc = std::make_unique<DefaultCorpus>();
        return determinism(*dc);
    });
    criterion(8, "scoring monotonicity", 10.0, monotonicity);
    std::printf("%d of 8 criteria passed\n", 8 - failures);
    return failures == 0 ? 0 : 1;
}
