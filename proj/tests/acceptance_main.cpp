// Acceptance checklist for the lending-simulation engine. Each criterion
// prints one [PASS]/[FAIL] line; the process exits nonzero if any selected
// criterion fails. Run a single criterion with --criterion N.
#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fairlend/config.hpp>
#include <fairlend/datagen.hpp>
#include <fairlend/errors.hpp>
#include <fairlend/experiments.hpp>
#include <fairlend/longterm.hpp>
#include <fairlend/metrics.hpp>
#include <fairlend/model.hpp>
#include <fairlend/policy.hpp>
#include <fairlend/rng.hpp>
#include <fairlend/serialize.hpp>

using namespace fairlend;
namespace fs = std::filesystem;

namespace {

constexpr std::array<std::uint64_t, 5> kSeeds = {1, 2, 3, 4, 5};

struct SeedData {
    Population train;
    Population test;
    PolicySuite suite;
    TrainHyperparams hp;
};

const SeedData& seed_data(std::uint64_t seed) {
    static std::map<std::uint64_t, SeedData> cache;
    auto it = cache.find(seed);
    if (it == cache.end()) {
        RunConfig cfg;
        apply_base_seed(cfg, seed);
        Population pop = generate_population(cfg.gen);
        auto [train, test] = split_population(pop, cfg.split_fraction, split_seed(cfg));
        PolicySuite suite = build_policy_suite(train, test, cfg.hp);
        it = cache.emplace(seed, SeedData{std::move(train), std::move(test), std::move(suite),
                                          cfg.hp})
                 .first;
    }
    return it->second;
}

// ---------------------------------------------------------------------------

bool criterion_profit_oracle(std::ostream& log) {
    std::mt19937_64 rng(1001);
    std::uniform_int_distribution<std::size_t> size_dist(1, 20);
    std::uniform_real_distribution<double> r_dist(0.01, 0.5);
    std::uniform_real_distribution<double> d_dist(0.05, 1.0);
    std::uniform_real_distribution<double> l_dist(100.0, 50000.0);
    std::bernoulli_distribution coin(0.5);

    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = size_dist(rng);
        DecisionSet ds;
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            ds.decisions.push_back({i, 0.5, coin(rng)});
            labels[i] = coin(rng) ? 1 : 0;
        }
        EconomicParams econ;
        econ.interest_rate = r_dist(rng);
        econ.default_loss_rate = d_dist(rng);
        econ.loan_amount = l_dist(rng);

        double brute = 0.0;
        std::size_t approved = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!ds.decisions[i].approved) continue;
            ++approved;
            brute += labels[i] != 0 ? econ.interest_rate * econ.loan_amount
                                    : -econ.default_loss_rate * econ.loan_amount;
        }
        const ProfitReport rep = compute_profit(ds, labels, econ);
        worst = std::max(worst, std::abs(rep.net_profit - brute));
        if (approved > 0) {
            const double roi = brute / (static_cast<double>(approved) * econ.loan_amount);
            worst = std::max(worst, std::abs(rep.roi - roi));
        }
    }
    log << "max deviation " << worst;
    return worst <= 1e-9;
}

bool criterion_gradient_check(std::ostream& log) {
    std::mt19937_64 rng(2002);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> income(20000.0, 80000.0);
    std::uniform_real_distribution<double> credit(300.0, 850.0);
    std::uniform_real_distribution<double> age(18.0, 75.0);
    std::uniform_real_distribution<double> edu(8.0, 20.0);
    std::uniform_real_distribution<double> emp(0.0, 30.0);
    std::uniform_int_distribution<std::size_t> zip(0, 9);
    std::uniform_real_distribution<double> l2_dist(0.0, 0.5);
    std::bernoulli_distribution coin(0.5);

    const FeatureSchema schema = FeatureSchema::full();
    const double h = 1e-5;
    double worst = 0.0;

    for (int trial = 0; trial < 50; ++trial) {
        Population pop;
        pop.role = PopulationRole::Train;
        pop.records.resize(20);
        for (std::size_t i = 0; i < 20; ++i) {
            ApplicantRecord& rec = pop.records[i];
            rec.id = i;
            rec.gender = coin(rng) ? Gender::Female : Gender::Male;
            rec.race = coin(rng) ? Race::GroupB : Race::GroupA;
            rec.age = age(rng);
            rec.income = income(rng);
            rec.education_years = edu(rng);
            rec.credit_score = credit(rng);
            rec.employment_years = emp(rng);
            rec.zipcode = zip(rng);
            rec.true_repaid = coin(rng) ? 1 : 0;
            rec.observed_repaid = coin(rng) ? 1 : 0;
        }
        std::vector<double> w(schema.size());
        for (double& v : w) v = unit(rng);
        const double b = unit(rng);
        const double l2 = l2_dist(rng);

        const LossGrad at = loss_and_gradient(w, b, pop, schema, LabelSource::Observed, l2);
        const auto rel = [](double analytic, double numeric) {
            return std::abs(analytic - numeric) /
                   std::max({std::abs(analytic), std::abs(numeric), 1e-5});
        };
        for (std::size_t k = 0; k < w.size(); ++k) {
            std::vector<double> lo = w, hi = w;
            lo[k] -= h;
            hi[k] += h;
            const double numeric =
                (loss_and_gradient(hi, b, pop, schema, LabelSource::Observed, l2).loss -
                 loss_and_gradient(lo, b, pop, schema, LabelSource::Observed, l2).loss) /
                (2.0 * h);
            worst = std::max(worst, rel(at.weight_grad[k], numeric));
        }
        const double numeric_b =
            (loss_and_gradient(w, b + h, pop, schema, LabelSource::Observed, l2).loss -
             loss_and_gradient(w, b - h, pop, schema, LabelSource::Observed, l2).loss) /
            (2.0 * h);
        worst = std::max(worst, rel(at.intercept_grad, numeric_b));
    }
    log << "max relative error " << worst;
    return worst <= 1e-4;
}

bool criterion_dp_calibration(std::ostream& log) {
    double worst = 0.0;
    for (std::uint64_t seed : kSeeds) {
        const SeedData& data = seed_data(seed);
        for (const auto& [name, attr] :
             std::vector<std::pair<const char*, const char*>>{{kSuiteDpGender, "gender"},
                                                              {kSuiteDpRace, "race"}}) {
            const auto& entry = suite_entry(data.suite, name);
            const DecisionSet ds = decide(entry.policy, entry.model, data.train);
            const double gap = demographic_parity_diff(ds, group_values(data.train, attr));
            worst = std::max(worst, gap);
        }
    }
    log << "max training-split gap " << worst << " over " << kSeeds.size() << " seeds";
    return worst <= 0.01 + 1e-12;
}

bool criterion_eo_calibration(std::ostream& log) {
    double worst = 0.0;
    for (std::uint64_t seed : kSeeds) {
        const SeedData& data = seed_data(seed);
        const std::vector<int> labels = label_vector(data.train, LabelSource::Observed);
        for (const auto& [name, attr] :
             std::vector<std::pair<const char*, const char*>>{{kSuiteEoGender, "gender"},
                                                              {kSuiteEoRace, "race"}}) {
            const auto& entry = suite_entry(data.suite, name);
            const DecisionSet ds = decide(entry.policy, entry.model, data.train);
            const double gap =
                equal_opportunity_diff(ds, group_values(data.train, attr), labels);
            worst = std::max(worst, gap);
        }
    }
    log << "max training-split TPR gap " << worst << " over " << kSeeds.size() << " seeds";
    return worst <= 0.02 + 1e-12;
}

bool criterion_default_economy(std::ostream& log) {
    EconomicParams econ;
    econ.interest_rate = 0.10;
    econ.default_loss_rate = 0.70;
    econ.loan_amount = 10000.0;
    std::size_t seeds_ok = 0;
    for (std::uint64_t seed : kSeeds) {
        const SeedData& data = seed_data(seed);
        const std::vector<MetricsReport> rows =
            run_model_suite(data.suite, data.test, econ, LabelSource::True);
        const bool all_negative = std::all_of(rows.begin(), rows.end(), [](const auto& r) {
            return r.profit.net_profit < 0.0;
        });
        seeds_ok += all_negative ? 1 : 0;
    }
    log << seeds_ok << "/" << kSeeds.size() << " seeds with all seven models unprofitable";
    return seeds_ok >= 4;
}

bool criterion_favorable_economy(std::ostream& log) {
    EconomicParams econ;
    econ.interest_rate = 0.20;
    econ.default_loss_rate = 0.50;
    econ.loan_amount = 10000.0;
    std::size_t seeds_ok = 0;
    for (std::uint64_t seed : kSeeds) {
        const SeedData& data = seed_data(seed);
        const auto& entry = suite_entry(data.suite, kSuiteUnawareness);
        const MetricsReport rep = evaluate_policy(entry.name, entry.model, entry.policy,
                                                  data.test, LabelSource::True, econ);
        seeds_ok += rep.profit.roi > 0.0 ? 1 : 0;
    }
    log << seeds_ok << "/" << kSeeds.size() << " seeds with positive unawareness ROI";
    return seeds_ok >= 4;
}

bool criterion_four_fifths(std::ostream& log) {
    const std::vector<std::pair<double, bool>> cases = {
        {0.939, true}, {0.274, false}, {1.044, true},
        {0.068, false}, {0.805, true}, {0.256, false}};
    bool ok = true;
    for (const auto& [ratio, expected] : cases) {
        if (check_four_fifths(ratio) != expected) {
            ok = false;
            log << "ratio " << ratio << " misclassified; ";
        }
    }
    if (ok) log << "all six reference ratios classified correctly";
    return ok;
}

bool criterion_grid_monotonicity(std::ostream& log) {
    std::mt19937_64 rng(8008);
    std::uniform_int_distribution<std::size_t> size_dist(1, 50);
    std::bernoulli_distribution coin(0.5);
    ScenarioGrid grid;

    bool ok = true;
    for (int trial = 0; trial < 100 && ok; ++trial) {
        const std::size_t n = size_dist(rng);
        DecisionSet ds;
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            ds.decisions.push_back({i, 0.5, coin(rng)});
            labels[i] = coin(rng) ? 1 : 0;
        }
        std::vector<std::vector<double>> profit(grid.interest_rates.size());
        for (std::size_t ri = 0; ri < grid.interest_rates.size(); ++ri) {
            for (std::size_t di = 0; di < grid.default_loss_rates.size(); ++di) {
                profit[ri].push_back(compute_profit(ds, labels, grid.cell(ri, di)).net_profit);
            }
        }
        for (std::size_t ri = 1; ri < profit.size() && ok; ++ri) {
            for (std::size_t di = 0; di < profit[ri].size(); ++di) {
                if (profit[ri][di] < profit[ri - 1][di]) ok = false;  // increasing r helps
            }
        }
        for (std::size_t ri = 0; ri < profit.size() && ok; ++ri) {
            for (std::size_t di = 1; di < profit[ri].size(); ++di) {
                if (profit[ri][di] > profit[ri][di - 1]) ok = false;  // increasing d hurts
            }
        }
    }
    log << (ok ? "100 random decision sets monotone across the grid"
               : "monotonicity violated");
    return ok;
}

bool criterion_consistency(std::ostream& log) {
    bool ok = true;
    for (std::uint64_t seed : {std::uint64_t{1}, std::uint64_t{2}, std::uint64_t{3}}) {
        const SeedData& data = seed_data(seed);
        const auto& unaware = suite_entry(data.suite, kSuiteUnawareness);
        const double c = individual_consistency(unaware.model, data.test);
        if (c != 1.0) {
            ok = false;
            log << "unawareness consistency " << c << " at seed " << seed << "; ";
        }
    }
    TrainedModel biased;
    biased.schema = FeatureSchema::full();
    biased.standardizer.means.assign(biased.schema.size(), 0.0);
    biased.standardizer.stds.assign(biased.schema.size(), 1.0);
    biased.weights.assign(biased.schema.size(), 0.0);
    const auto& names = biased.schema.feature_names;
    const auto gender_pos = std::find(names.begin(), names.end(), "gender");
    biased.weights[static_cast<std::size_t>(gender_pos - names.begin())] = 0.5;
    const double c = individual_consistency(biased, seed_data(1).test);
    if (!(c < 1.0)) {
        ok = false;
        log << "injected protected weight still scored " << c << "; ";
    }
    if (ok) log << "exactly 1.0 without protected inputs, below 1.0 with them";
    return ok;
}

bool criterion_longterm(std::ostream& log) {
    bool credit_ok = true;
    std::size_t gap_seeds_ok = 0;
    for (std::uint64_t seed : kSeeds) {
        RunConfig cfg;
        apply_base_seed(cfg, seed);
        const Population pop = generate_population(cfg.gen);
        ModelRecipe model;
        model.hp = cfg.hp;
        PolicyRecipe baseline;
        PolicyRecipe dp_race;
        dp_race.provenance = "demographic_parity";
        dp_race.attribute = "race";

        const SimulationResult base = run_simulation(pop, model, baseline, cfg.sim);
        const SimulationResult fair = run_simulation(pop, model, dp_race, cfg.sim);

        const double delta = cfg.sim.credit_improvement;
        const double full_boost = delta * static_cast<double>(cfg.sim.n_cycles);
        for (std::size_t i = 0; i < pop.size(); ++i) {
            std::size_t approvals = 0;
            for (std::size_t c = 0; c < cfg.sim.n_cycles; ++c) {
                approvals += base.approvals[c][i] != 0 ? 1 : 0;
            }
            const double got = base.final_population.records[i].credit_score;
            if (approvals == cfg.sim.n_cycles) {
                const double want =
                    std::min(kMaxCreditScore, pop.records[i].credit_score + full_boost);
                if (std::abs(got - want) > 1e-9) credit_ok = false;
            } else if (approvals == 0) {
                if (got != pop.records[i].credit_score) credit_ok = false;
            }
        }

        bool gap_ok = true;
        for (std::size_t c = 0; c < cfg.sim.n_cycles; ++c) {
            if (fair.trace.cycles[c].race_approval_gap >
                base.trace.cycles[c].race_approval_gap) {
                gap_ok = false;
            }
        }
        gap_seeds_ok += gap_ok ? 1 : 0;
    }
    log << "credit arithmetic " << (credit_ok ? "exact" : "BROKEN") << ", race gap contained on "
        << gap_seeds_ok << "/" << kSeeds.size() << " seeds";
    return credit_ok && gap_seeds_ok >= 4;
}

std::string file_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) return "<missing " + path.string() + ">";
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool criterion_determinism(std::ostream& log) {
    const fs::path root = fs::temp_directory_path() / "fairlend_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path config_path = root / "config.json";
    {
        RunConfig cfg;
        apply_base_seed(cfg, cfg.base_seed);
        std::ofstream out(config_path);
        out << run_config_to_json(cfg).dump(2) << '\n';
    }
    const fs::path out_dir = root / "out";
    const auto invoke = [&](const std::string& args) {
        const std::string cmd = std::string(FAIRLEND_CLI_PATH) + " " + args + " --config " +
                                config_path.string() + " --out " + out_dir.string() +
                                " >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) && WEXITSTATUS(status) == 0;
    };

    if (!invoke("suite") ) {
        log << "suite run failed";
        return false;
    }
    const std::string suite_csv = file_text(out_dir / "suite.csv");
    const std::string suite_summary = file_text(out_dir / "suite.summary.json");
    if (!invoke("suite")) {
        log << "suite rerun failed";
        return false;
    }
    const bool suite_same = file_text(out_dir / "suite.csv") == suite_csv &&
                            file_text(out_dir / "suite.summary.json") == suite_summary;

    if (!invoke("sweep --jobs 1")) {
        log << "sweep run failed";
        return false;
    }
    const std::string sweep_csv = file_text(out_dir / "sweep.csv");
    const std::string sweep_summary = file_text(out_dir / "sweep.summary.json");
    if (!invoke("sweep --jobs 1")) {
        log << "sweep rerun failed";
        return false;
    }
    const bool sweep_same = file_text(out_dir / "sweep.csv") == sweep_csv &&
                            file_text(out_dir / "sweep.summary.json") == sweep_summary;

    if (!invoke("sweep --jobs 4")) {
        log << "parallel sweep failed";
        return false;
    }
    const bool jobs_same = file_text(out_dir / "sweep.csv") == sweep_csv &&
                           file_text(out_dir / "sweep.summary.json") == sweep_summary;

    fs::remove_all(root);
    log << "suite rerun " << (suite_same ? "identical" : "DIFFERS") << ", sweep rerun "
        << (sweep_same ? "identical" : "DIFFERS") << ", jobs 1 vs 4 "
        << (jobs_same ? "identical" : "DIFFERS");
    return suite_same && sweep_same && jobs_same;
}

bool criterion_threshold_sanity(std::ostream& log) {
    bool ok = true;
    EconomicParams econ;
    for (std::uint64_t seed : {std::uint64_t{1}, std::uint64_t{2}, std::uint64_t{3}}) {
        const SeedData& data = seed_data(seed);
        const TrainedModel& model = suite_entry(data.suite, kSuiteBaseline).model;
        for (double step : {0.01, 0.05}) {
            const ThresholdCurve curve =
                threshold_sweep(model, data.test, econ, step, LabelSource::True);
            const ThresholdPoint& last = curve.points.back();
            if (last.threshold != 1.0 || last.approval_rate != 0.0 ||
                last.net_profit != 0.0) {
                ok = false;
                log << "threshold-1.0 endpoint wrong at seed " << seed << "; ";
            }

            // exhaustive re-scan with the documented normalization
            NormalizationContext ctx;
            const auto gap_of = [](const ThresholdPoint& p) {
                return 0.5 * (p.dp_gender + p.dp_race);
            };
            ctx.min_profit = ctx.max_profit = curve.points.front().net_profit;
            ctx.min_gap = ctx.max_gap = gap_of(curve.points.front());
            for (const auto& p : curve.points) {
                ctx.min_profit = std::min(ctx.min_profit, p.net_profit);
                ctx.max_profit = std::max(ctx.max_profit, p.net_profit);
                ctx.min_gap = std::min(ctx.min_gap, gap_of(p));
                ctx.max_gap = std::max(ctx.max_gap, gap_of(p));
            }
            for (const WeightSpec& w : default_weight_specs()) {
                const OptimalThreshold got = find_optimal_threshold(curve, w);
                double best_score = -1.0;
                double best_threshold = 0.0;
                for (const auto& p : curve.points) {
                    const double s = efficiency_score(p.net_profit, gap_of(p), ctx, w);
                    if (s > best_score) {
                        best_score = s;
                        best_threshold = p.threshold;
                    }
                }
                if (got.threshold != best_threshold || std::abs(got.score - best_score) > 1e-12) {
                    ok = false;
                    log << "optimum mismatch at seed " << seed << " weight " << w.profit_weight
                        << "; ";
                }
            }
        }
    }
    if (ok) log << "endpoints exact and optimum matches exhaustive re-scan on all curves";
    return ok;
}

struct Criterion {
    int number;
    const char* description;
    std::function<bool(std::ostream&)> run;
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> all = {
        {1, "profit matches per-loan accounting on 1000 random instances",
         criterion_profit_oracle},
        {2, "training gradient matches central finite differences", criterion_gradient_check},
        {3, "parity calibration holds the training gap within 0.01", criterion_dp_calibration},
        {4, "opportunity calibration holds the training TPR gap within 0.02",
         criterion_eo_calibration},
        {5, "all seven models lose money in the default economy", criterion_default_economy},
        {6, "the unawareness model turns a profit in the favorable economy",
         criterion_favorable_economy},
        {7, "four-fifths rule classifies the reference impact ratios",
         criterion_four_fifths},
        {8, "profit moves monotonically across the economic grid",
         criterion_grid_monotonicity},
        {9, "consistency is exactly 1 without protected inputs and below 1 with them",
         criterion_consistency},
        {10, "credit feedback arithmetic is exact and parity contains the race gap",
         criterion_longterm},
        {11, "reruns are byte-identical and worker count changes nothing",
         criterion_determinism},
        {12, "threshold curve endpoints and optimum selection are exact",
         criterion_threshold_sanity},
    };
    return all;
}

}  // namespace

int main(int argc, char** argv) {
    int selected = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--criterion" && i + 1 < argc) {
            selected = std::atoi(argv[++i]);
        } else if (arg == "--help") {
            std::cout << "usage: acceptance [--criterion N]\n";
            return 0;
        } else {
            std::cerr << "unknown argument: " << arg << '\n';
            return 2;
        }
    }
    if (selected < 0 || selected > 12) {
        std::cerr << "criterion must be between 1 and 12\n";
        return 2;
    }

    int failures = 0;
    for (const Criterion& c : criteria()) {
        if (selected != 0 && c.number != selected) continue;
        std::ostringstream detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail << "exception: " << e.what();
        }
        std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << c.number << ": "
                  << c.description << " (" << detail.str() << ")\n";
        failures += ok ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
