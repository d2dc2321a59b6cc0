#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <fairlend/config.hpp>
#include <fairlend/datagen.hpp>
#include <fairlend/errors.hpp>
#include <fairlend/metrics.hpp>
#include <fairlend/model.hpp>
#include <fairlend/policy.hpp>

using namespace fairlend;

namespace {

DecisionSet decisions_from(const std::vector<double>& scores, const std::vector<bool>& approved) {
    DecisionSet ds;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        ds.decisions.push_back(Decision{i, scores[i], approved[i]});
    }
    return ds;
}

DecisionSet approve_mask(const std::vector<bool>& approved) {
    std::vector<double> scores(approved.size(), 0.5);
    return decisions_from(scores, approved);
}

}  // namespace

TEST_SUITE("economic params") {
    TEST_CASE("defaults match the default economy") {
        EconomicParams econ;
        CHECK(econ.interest_rate == 0.10);
        CHECK(econ.default_loss_rate == 0.70);
        CHECK(econ.loan_amount == 10000.0);
        CHECK_NOTHROW(econ.validate());
    }

    TEST_CASE("bounds are enforced") {
        EconomicParams econ;
        econ.interest_rate = -0.01;
        CHECK_THROWS_AS(econ.validate(), ConfigError);
        econ = EconomicParams{};
        econ.default_loss_rate = 1.2;
        CHECK_THROWS_AS(econ.validate(), ConfigError);
        econ = EconomicParams{};
        econ.loan_amount = 0.0;
        CHECK_THROWS_AS(econ.validate(), ConfigError);
    }
}

TEST_SUITE("compute_profit") {
    TEST_CASE("zero approvals give an all-zero report") {
        DecisionSet ds = approve_mask({false, false, false});
        std::vector<int> labels = {1, 0, 1};
        ProfitReport rep = compute_profit(ds, labels, EconomicParams{});
        CHECK(rep.net_profit == 0.0);
        CHECK(rep.roi == 0.0);
        CHECK(rep.default_rate == 0.0);
        CHECK(rep.approved_count == 0);
        CHECK(rep.approval_rate == 0.0);
    }

    TEST_CASE("three approvals with one default reproduce the hand-computed report") {
        DecisionSet ds = approve_mask({true, true, true});
        std::vector<int> labels = {1, 1, 0};
        ProfitReport rep = compute_profit(ds, labels, EconomicParams{});
        CHECK(rep.net_profit == doctest::Approx(-5000.0).epsilon(1e-12));
        CHECK(rep.roi == doctest::Approx(-5000.0 / 30000.0).epsilon(1e-12));
        CHECK(rep.default_rate == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        CHECK(rep.approved_count == 3);
        CHECK(rep.approval_rate == 1.0);
    }

    TEST_CASE("profit matches a per-loan brute-force sum on random instances") {
        std::mt19937_64 eng(123);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t n = 1 + static_cast<std::size_t>(unit(eng) * 19);
            std::vector<bool> approved(n);
            std::vector<int> labels(n);
            for (std::size_t i = 0; i < n; ++i) {
                approved[i] = unit(eng) < 0.6;
                labels[i] = unit(eng) < 0.7 ? 1 : 0;
            }
            EconomicParams econ;
            econ.interest_rate = unit(eng) * 0.4;
            econ.default_loss_rate = unit(eng);
            econ.loan_amount = 100.0 + unit(eng) * 50000.0;
            DecisionSet ds = approve_mask(approved);
            ProfitReport rep = compute_profit(ds, labels, econ);
            double brute = 0.0;
            std::size_t approved_n = 0;
            std::size_t defaults = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (!approved[i]) continue;
                ++approved_n;
                if (labels[i] == 1) {
                    brute += econ.interest_rate * econ.loan_amount;
                } else {
                    brute -= econ.default_loss_rate * econ.loan_amount;
                    ++defaults;
                }
            }
            CHECK(rep.net_profit == doctest::Approx(brute).epsilon(1e-9));
            if (approved_n > 0) {
                CHECK(rep.roi ==
                      doctest::Approx(brute / (static_cast<double>(approved_n) * econ.loan_amount))
                          .epsilon(1e-9));
                CHECK(rep.default_rate ==
                      doctest::Approx(static_cast<double>(defaults) /
                                      static_cast<double>(approved_n)));
            }
        }
    }

    TEST_CASE("profit is additive over disjoint decision sets") {
        std::vector<int> labels_a = {1, 0, 1};
        std::vector<int> labels_b = {0, 1};
        DecisionSet a = approve_mask({true, true, false});
        DecisionSet b = approve_mask({true, true});
        DecisionSet joint = approve_mask({true, true, false, true, true});
        std::vector<int> labels_joint = {1, 0, 1, 0, 1};
        EconomicParams econ;
        const double sum = compute_profit(a, labels_a, econ).net_profit +
                           compute_profit(b, labels_b, econ).net_profit;
        CHECK(compute_profit(joint, labels_joint, econ).net_profit ==
              doctest::Approx(sum).epsilon(1e-12));
    }

    TEST_CASE("profit is monotone in the economy for fixed decisions") {
        DecisionSet ds = approve_mask({true, true, true, false});
        std::vector<int> labels = {1, 1, 0, 0};
        EconomicParams lo;
        EconomicParams hi_r;
        hi_r.interest_rate = lo.interest_rate + 0.05;
        CHECK(compute_profit(ds, labels, hi_r).net_profit >
              compute_profit(ds, labels, lo).net_profit);
        EconomicParams hi_d;
        hi_d.default_loss_rate = lo.default_loss_rate + 0.1;
        CHECK(compute_profit(ds, labels, hi_d).net_profit <
              compute_profit(ds, labels, lo).net_profit);
    }

    TEST_CASE("labels must cover the decision set") {
        DecisionSet ds = approve_mask({true, true});
        std::vector<int> labels = {1};
        CHECK_THROWS_AS(compute_profit(ds, labels, EconomicParams{}), DataError);
    }
}

TEST_SUITE("demographic_parity_diff") {
    TEST_CASE("equal rates give zero") {
        DecisionSet ds = approve_mask({true, false, true, false});
        std::vector<int> groups = {0, 0, 1, 1};
        CHECK(demographic_parity_diff(ds, groups) == 0.0);
    }

    TEST_CASE("30 of 100 versus 18 of 100 gives 0.12") {
        std::vector<bool> approved(200, false);
        std::vector<int> groups(200);
        for (std::size_t i = 0; i < 200; ++i) groups[i] = i < 100 ? 0 : 1;
        for (std::size_t i = 0; i < 30; ++i) approved[i] = true;
        for (std::size_t i = 100; i < 118; ++i) approved[i] = true;
        DecisionSet ds = approve_mask(approved);
        CHECK(demographic_parity_diff(ds, groups) == doctest::Approx(0.12).epsilon(1e-12));
    }

    TEST_CASE("swapping group labels leaves the diff unchanged") {
        std::mt19937_64 eng(5);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        for (int trial = 0; trial < 30; ++trial) {
            const std::size_t n = 2 + static_cast<std::size_t>(unit(eng) * 30);
            std::vector<bool> approved(n);
            std::vector<int> groups(n);
            for (std::size_t i = 0; i < n; ++i) {
                approved[i] = unit(eng) < 0.5;
                groups[i] = i < 2 ? static_cast<int>(i) : (unit(eng) < 0.5 ? 0 : 1);
            }
            std::vector<int> swapped(n);
            for (std::size_t i = 0; i < n; ++i) swapped[i] = 1 - groups[i];
            DecisionSet ds = approve_mask(approved);
            CHECK(demographic_parity_diff(ds, groups) ==
                  doctest::Approx(demographic_parity_diff(ds, swapped)).epsilon(1e-12));
        }
    }

    TEST_CASE("an empty group is rejected") {
        DecisionSet ds = approve_mask({true, false});
        std::vector<int> groups = {0, 0};
        CHECK_THROWS_AS(demographic_parity_diff(ds, groups), DataError);
    }

    TEST_CASE("default-config baseline gender gap lands in the expected band") {
        RunConfig cfg;
        apply_base_seed(cfg, cfg.base_seed);
        Population pop = generate_population(cfg.gen);
        auto [train, test] = split_population(pop, cfg.split_fraction, split_seed(cfg));
        TrainedModel baseline =
            train_logistic(train, FeatureSchema::full(), LabelSource::Observed, cfg.hp);
        DecisionSet ds = decide(DecisionPolicy::uniform(0.5, "baseline"), baseline, test);
        const double dp = demographic_parity_diff(ds, group_values(test, "gender"));
        CHECK(dp >= 0.02);
        CHECK(dp <= 0.15);
    }
}

TEST_SUITE("equal_opportunity_diff") {
    TEST_CASE("identical per-group TPRs give zero") {
        DecisionSet ds = approve_mask({true, false, true, false});
        std::vector<int> groups = {0, 0, 1, 1};
        std::vector<int> labels = {1, 1, 1, 1};
        CHECK(equal_opportunity_diff(ds, groups, labels) == 0.0);
    }

    TEST_CASE("four of five versus two of five approved positives gives 0.4") {
        std::vector<bool> approved = {true, true, true, true, false,
                                      true, true, false, false, false};
        std::vector<int> groups = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
        std::vector<int> labels(10, 1);
        DecisionSet ds = approve_mask(approved);
        CHECK(equal_opportunity_diff(ds, groups, labels) == doctest::Approx(0.4).epsilon(1e-12));
    }

    TEST_CASE("only positive-label members count") {
        // Group 0: positives {approved, denied} -> TPR 1/2. Group 1: positive
        // {approved} -> TPR 1. Negatives' approvals must not matter.
        std::vector<bool> approved = {true, false, false, true, true};
        std::vector<int> groups = {0, 0, 0, 1, 1};
        std::vector<int> labels = {1, 1, 0, 1, 0};
        DecisionSet ds = approve_mask(approved);
        CHECK(equal_opportunity_diff(ds, groups, labels) == doctest::Approx(0.5).epsilon(1e-12));
    }

    TEST_CASE("a group without positives is rejected") {
        DecisionSet ds = approve_mask({true, true});
        std::vector<int> groups = {0, 1};
        std::vector<int> labels = {1, 0};
        CHECK_THROWS_AS(equal_opportunity_diff(ds, groups, labels), DataError);
    }
}

TEST_SUITE("disparate_impact_ratio") {
    TEST_CASE("equal nonzero rates give 1.0") {
        DecisionSet ds = approve_mask({true, true});
        std::vector<int> groups = {0, 1};
        CHECK(disparate_impact_ratio(ds, groups, 1) == 1.0);
    }

    TEST_CASE("rates 0.12 versus 0.40 give 0.30") {
        std::vector<bool> approved(50, false);
        std::vector<int> groups(50);
        // Group 1 (disadvantaged): 3 of 25 approved = 0.12. Group 0: 10 of 25 = 0.40.
        for (std::size_t i = 0; i < 50; ++i) groups[i] = i < 25 ? 0 : 1;
        for (std::size_t i = 0; i < 10; ++i) approved[i] = true;
        for (std::size_t i = 25; i < 28; ++i) approved[i] = true;
        DecisionSet ds = approve_mask(approved);
        CHECK(disparate_impact_ratio(ds, groups, 1) == doctest::Approx(0.30).epsilon(1e-12));
    }

    TEST_CASE("swapping the disadvantaged side inverts the ratio") {
        std::vector<bool> approved = {true, true, false, true, false, false};
        std::vector<int> groups = {0, 0, 0, 1, 1, 1};
        DecisionSet ds = approve_mask(approved);
        const double di = disparate_impact_ratio(ds, groups, 1);
        const double inverse = disparate_impact_ratio(ds, groups, 0);
        CHECK(di * inverse == doctest::Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("zero rates on both sides give 1; advantaged-only zero gives infinity") {
        DecisionSet none = approve_mask({false, false});
        std::vector<int> groups = {0, 1};
        CHECK(disparate_impact_ratio(none, groups, 1) == 1.0);
        DecisionSet dis_only = approve_mask({false, true});
        CHECK(std::isinf(disparate_impact_ratio(dis_only, groups, 1)));
    }

    TEST_CASE("default-config baseline gender ratio shows a sub-parity direction") {
        RunConfig cfg;
        apply_base_seed(cfg, cfg.base_seed);
        Population pop = generate_population(cfg.gen);
        auto [train, test] = split_population(pop, cfg.split_fraction, split_seed(cfg));
        TrainedModel baseline =
            train_logistic(train, FeatureSchema::full(), LabelSource::Observed, cfg.hp);
        DecisionSet ds = decide(DecisionPolicy::uniform(0.5, "baseline"), baseline, test);
        const double di = disparate_impact_ratio(ds, group_values(test, "gender"), 1);
        CHECK(di < 1.0);
        CHECK(di >= 0.75);
        CHECK(di <= 0.95);
        const double di_race = disparate_impact_ratio(ds, group_values(test, "race"), 1);
        CHECK(di_race < 0.8);  // race fails the four-fifths rule at baseline
    }
}

TEST_SUITE("check_four_fifths") {
    TEST_CASE("reference decision values classify as expected") {
        CHECK(check_four_fifths(0.939));
        CHECK_FALSE(check_four_fifths(0.274));
        CHECK(check_four_fifths(1.044));
        CHECK_FALSE(check_four_fifths(0.068));
        CHECK(check_four_fifths(0.805));
        CHECK_FALSE(check_four_fifths(0.256));
    }

    TEST_CASE("the 0.8 boundary is inclusive and ratios above 1 pass") {
        CHECK(check_four_fifths(0.8));
        CHECK_FALSE(check_four_fifths(0.7999999));
        CHECK(check_four_fifths(2.5));
        CHECK(check_four_fifths(std::numeric_limits<double>::infinity()));
    }
}

TEST_SUITE("individual_consistency") {
    TEST_CASE("a model without protected features is exactly 1.0") {
        GenConfig gen;
        gen.n_applicants = 500;
        Population pop = generate_population(gen);
        pop.role = PopulationRole::Train;
        TrainHyperparams hp;
        hp.max_iterations = 300;
        TrainedModel m = train_logistic(pop, FeatureSchema::unaware(), LabelSource::Observed, hp);
        CHECK(individual_consistency(m, pop) == 1.0);
    }

    TEST_CASE("an all-zero-weight model is exactly 1.0") {
        GenConfig gen;
        gen.n_applicants = 100;
        Population pop = generate_population(gen);
        TrainedModel m;
        m.schema = FeatureSchema::full();
        m.standardizer.means.assign(8, 0.0);
        m.standardizer.stds.assign(8, 1.0);
        m.weights.assign(8, 0.0);
        CHECK(individual_consistency(m, pop) == 1.0);
    }

    TEST_CASE("a hand-set gender weight reproduces the hand-computed flip difference") {
        std::vector<ApplicantRecord> recs(3);
        for (std::size_t i = 0; i < 3; ++i) {
            recs[i].id = i;
            recs[i].gender = i == 1 ? Gender::Female : Gender::Male;
            recs[i].race = Race::GroupA;
            recs[i].income = 1000.0;
        }
        Population pop;
        pop.records = recs;
        TrainedModel m;
        m.schema.feature_names = {"gender"};
        m.standardizer.means = {0.5};
        m.standardizer.stds = {1.0};
        m.weights = {0.8};
        m.intercept = 0.0;
        auto sigmoid = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
        const double male_score = sigmoid(0.8 * (0.0 - 0.5));
        const double female_score = sigmoid(0.8 * (1.0 - 0.5));
        const double expected = 1.0 - std::abs(male_score - female_score);
        CHECK(individual_consistency(m, pop) == doctest::Approx(expected).epsilon(1e-12));
        CHECK(individual_consistency(m, pop) < 1.0);
    }

    TEST_CASE("consistency flips both attributes at once") {
        // Weights on gender and race cancel exactly when both flip together
        // (Male,GroupA) <-> (Female,GroupB) under opposite-sign equal weights.
        std::vector<ApplicantRecord> recs(2);
        recs[0].id = 0;
        recs[0].gender = Gender::Male;
        recs[0].race = Race::GroupA;
        recs[1].id = 1;
        recs[1].gender = Gender::Female;
        recs[1].race = Race::GroupB;
        Population pop;
        pop.records = recs;
        TrainedModel m;
        m.schema.feature_names = {"gender", "race"};
        m.standardizer.means = {0.0, 0.0};
        m.standardizer.stds = {1.0, 1.0};
        m.weights = {0.7, -0.7};
        m.intercept = 0.3;
        CHECK(individual_consistency(m, pop) == doctest::Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("consistency stays within the unit interval on trained models") {
        RunConfig cfg;
        apply_base_seed(cfg, cfg.base_seed);
        GenConfig gen = cfg.gen;
        gen.n_applicants = 2000;
        Population pop = generate_population(gen);
        pop.role = PopulationRole::Train;
        TrainHyperparams hp;
        hp.max_iterations = 500;
        TrainedModel m = train_logistic(pop, FeatureSchema::full(), LabelSource::Observed, hp);
        const double c = individual_consistency(m, pop);
        CHECK(c > 0.0);
        CHECK(c < 1.0);
    }
}

TEST_SUITE("efficiency_score") {
    TEST_CASE("suite extremes score one and zero") {
        NormalizationContext ctx{-200.0, -100.0, 0.05, 0.10};
        WeightSpec w;
        for (double pw : {0.0, 0.3, 0.5, 0.9, 1.0}) {
            w.profit_weight = pw;
            CHECK(efficiency_score(-100.0, 0.05, ctx, w) == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(efficiency_score(-200.0, 0.10, ctx, w) == doctest::Approx(0.0).epsilon(1e-12));
        }
    }

    TEST_CASE("two-model example normalizes to one and zero at weight one half") {
        NormalizationContext ctx{-200.0, -100.0, 0.05, 0.10};
        WeightSpec w;
        w.profit_weight = 0.5;
        CHECK(efficiency_score(-100.0, 0.05, ctx, w) == 1.0);
        CHECK(efficiency_score(-200.0, 0.10, ctx, w) == 0.0);
        CHECK(efficiency_score(-150.0, 0.075, ctx, w) == doctest::Approx(0.5).epsilon(1e-12));
    }

    TEST_CASE("a degenerate axis contributes its full weight") {
        NormalizationContext flat_profit{-100.0, -100.0, 0.05, 0.10};
        WeightSpec w;
        w.profit_weight = 0.7;
        CHECK(efficiency_score(-100.0, 0.10, flat_profit, w) ==
              doctest::Approx(0.7).epsilon(1e-12));
        NormalizationContext flat_gap{-200.0, -100.0, 0.08, 0.08};
        CHECK(efficiency_score(-200.0, 0.08, flat_gap, w) ==
              doctest::Approx(0.3).epsilon(1e-12));
        NormalizationContext flat_both{-100.0, -100.0, 0.08, 0.08};
        CHECK(efficiency_score(-100.0, 0.08, flat_both, w) == doctest::Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("scores stay in the unit interval and respect weight bounds") {
        NormalizationContext ctx{-500.0, 700.0, 0.0, 0.4};
        WeightSpec w;
        w.profit_weight = 0.3;
        CHECK_NOTHROW(w.validate());
        for (double profit : {-500.0, -20.0, 700.0}) {
            for (double gap : {0.0, 0.17, 0.4}) {
                const double s = efficiency_score(profit, gap, ctx, w);
                CHECK(s >= 0.0);
                CHECK(s <= 1.0);
            }
        }
        w.profit_weight = 1.2;
        CHECK_THROWS_AS(w.validate(), ConfigError);
    }

    TEST_CASE("positive affine rescaling of profits preserves scores") {
        NormalizationContext ctx{-900.0, 400.0, 0.02, 0.3};
        NormalizationContext scaled{-900.0 * 3.5 + 100.0, 400.0 * 3.5 + 100.0, 0.02, 0.3};
        WeightSpec w;
        w.profit_weight = 0.6;
        for (double profit : {-900.0, -250.0, 0.0, 400.0}) {
            CHECK(efficiency_score(profit, 0.1, ctx, w) ==
                  doctest::Approx(efficiency_score(profit * 3.5 + 100.0, 0.1, scaled, w))
                      .epsilon(1e-12));
        }
    }
}

TEST_SUITE("evaluate_policy") {
    TEST_CASE("report fields agree with the individual metric calls") {
        RunConfig cfg;
        apply_base_seed(cfg, cfg.base_seed);
        GenConfig gen = cfg.gen;
        gen.n_applicants = 3000;
        Population pop = generate_population(gen);
        auto [train, test] = split_population(pop, 0.7, 5);
        TrainHyperparams hp;
        hp.max_iterations = 400;
        TrainedModel m = train_logistic(train, FeatureSchema::full(), LabelSource::Observed, hp);
        DecisionPolicy policy = DecisionPolicy::uniform(0.5, "baseline");
        EconomicParams econ;
        MetricsReport rep = evaluate_policy("Baseline", m, policy, test, LabelSource::True, econ);

        DecisionSet ds = decide(policy, m, test);
        std::vector<int> labels = label_vector(test, LabelSource::True);
        ProfitReport profit = compute_profit(ds, labels, econ);
        CHECK(rep.profit.net_profit == profit.net_profit);
        CHECK(rep.profit.roi == profit.roi);
        CHECK(rep.gender.dp_diff == demographic_parity_diff(ds, group_values(test, "gender")));
        CHECK(rep.race.dp_diff == demographic_parity_diff(ds, group_values(test, "race")));
        CHECK(rep.gender.eo_diff ==
              equal_opportunity_diff(ds, group_values(test, "gender"), labels));
        CHECK(rep.race.di_ratio == disparate_impact_ratio(ds, group_values(test, "race"), 1));
        CHECK(rep.gender.four_fifths_pass == check_four_fifths(rep.gender.di_ratio));
        CHECK(rep.consistency == individual_consistency(m, test));
        CHECK(rep.model == "Baseline");
        CHECK(rep.labels == LabelSource::True);
    }

    TEST_CASE("mean_dp_gap averages the two attribute gaps") {
        MetricsReport rep;
        rep.gender.dp_diff = 0.06;
        rep.race.dp_diff = 0.20;
        CHECK(mean_dp_gap(rep) == doctest::Approx(0.13).epsilon(1e-12));
    }

    TEST_CASE("normalization_context spans the suite extremes") {
        std::vector<MetricsReport> reports(3);
        reports[0].profit.net_profit = -100.0;
        reports[0].gender.dp_diff = 0.02;
        reports[0].race.dp_diff = 0.04;
        reports[1].profit.net_profit = 300.0;
        reports[1].gender.dp_diff = 0.10;
        reports[1].race.dp_diff = 0.30;
        reports[2].profit.net_profit = 50.0;
        reports[2].gender.dp_diff = 0.01;
        reports[2].race.dp_diff = 0.01;
        NormalizationContext ctx = normalization_context(reports);
        CHECK(ctx.min_profit == -100.0);
        CHECK(ctx.max_profit == 300.0);
        CHECK(ctx.min_gap == doctest::Approx(0.01).epsilon(1e-12));
        CHECK(ctx.max_gap == doctest::Approx(0.20).epsilon(1e-12));
    }

    TEST_CASE("label_vector selects the requested label column") {
        GenConfig gen;
        gen.n_applicants = 200;
        Population pop = generate_population(gen);
        std::vector<int> t = label_vector(pop, LabelSource::True);
        std::vector<int> o = label_vector(pop, LabelSource::Observed);
        for (std::size_t i = 0; i < pop.size(); ++i) {
            CHECK(t[i] == pop.records[i].true_repaid);
            CHECK(o[i] == pop.records[i].observed_repaid);
        }
    }
}
