#include <gtest/gtest.h>

#include <cmath>

#include "arcnca/evaluator.hpp"
#include "test_support.hpp"

using namespace arcnca;

namespace {

// delta = relu(1 - 2x) - relu(2x - 1) = 1 - 2x on channel 0: x flips
// between x0 and 1 - x0 forever.
CellularModel oscillator() {
    UpdateRuleSpec r;
    r.name = "osc";
    r.sensed = {0, 1};
    r.write = {0, 1};
    r.hidden = 2;
    CellularModel m(8, {r}, {1.0, false, Boundary::toroidal, 0.1});
    m.initialize(0);
    auto& p = m.parameters();
    p[p.index_of("osc.w1")].values = {-2.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0};
    p[p.index_of("osc.b1")].values = {1.0, -1.0};
    p[p.index_of("osc.w2")].values = {1.0, -1.0};
    return m;
}

Lattice with_uniform_error(const Grid& target, double error) {
    Lattice l = encode_grid(target, Palette(10));
    for (int n = 0; n < l.cells(); ++n) {
        for (int ch = 0; ch < kVisibleChannels; ++ch) {
            l.cell(n)[static_cast<std::size_t>(ch)] += error;
        }
    }
    return l;
}

TaskResult result(const std::string& task, const std::string& variant, double log_loss, double wall = 1.0) {
    TaskResult r;
    r.task_id = task;
    r.variant = variant;
    r.log_loss = log_loss;
    r.solved_strict = log_loss <= -7.0;
    r.solved_loose = log_loss <= -6.0;
    r.wall_time_seconds = wall;
    return r;
}

TrainedModel untrained(const std::string& name) {
    TrainedModel t{build_variant(name, 1), 1, 0, {}, 0.0, 2.5};
    return t;
}

}  // namespace

TEST(ScoreState, ExactTarget) {
    const Grid g = Grid::from_rows({{1, 2}, {0, 3}});
    const auto s = score_state(encode_grid(g, Palette(10)), g, Palette(10), EvalConfig{});
    EXPECT_EQ(s.log_loss, -30.0);
    EXPECT_TRUE(s.exact_match);
    EXPECT_EQ(s.max_pixel_sq_error, 0.0);
}

TEST(ScoreState, UniformErrorFourHundredths) {
    const Grid g = Grid::from_rows({{1, 2, 3}, {4, 5, 6}});
    const auto s = score_state(with_uniform_error(g, 0.04), g, Palette(10), EvalConfig{});
    EXPECT_NEAR(s.mse, 1.6e-3, 1e-15);
    EXPECT_NEAR(s.log_loss, std::log(1.6e-3), 1e-12);
    EXPECT_NEAR(s.log_loss, -6.44, 0.005);
    EXPECT_GT(s.log_loss, -7.0);
    EXPECT_LE(s.log_loss, -6.0);
    EXPECT_NEAR(s.max_pixel_sq_error, 1.6e-3, 1e-15);
}

TEST(ScoreState, ThresholdBoundaryIsInclusive) {
    EXPECT_NEAR(std::exp(-7.0), 9.119e-4, 5e-8);
    const std::vector<TaskResult> at_boundary = {result("t", "NCA", -7.0)};
    EXPECT_EQ(union_solve({{"NCA", at_boundary}}, {"NCA"}, -7.0), 1.0);
    const std::vector<TaskResult> above = {result("t", "NCA", std::nextafter(-7.0, 0.0))};
    EXPECT_EQ(union_solve({{"NCA", above}}, {"NCA"}, -7.0), 0.0);
}

TEST(RolloutToStable, ZeroInitStopsAfterOneWindow) {
    const auto v = build_variant("v3", 3);
    const Lattice start = encode_grid(Grid::from_rows({{1, 2}, {3, 4}}), Palette(10));
    Rng rng(0);
    const auto run = rollout_to_stable(v.model, start, EvalConfig{}, rng);
    EXPECT_TRUE(run.stable);
    EXPECT_EQ(run.steps, 10);
    EXPECT_EQ(run.state, start);
}

TEST(RolloutToStable, OscillatorHitsCap) {
    const auto m = oscillator();
    Lattice start(3, 3, 8, 0.0);
    for (int n = 0; n < 9; ++n) {
        start.cell(n)[0] = 0.2;
    }
    Rng rng(0);
    const auto one = m.step(start, rng);
    EXPECT_NEAR(one.at(1, 1, 0), 0.8, 1e-12);
    const auto run = rollout_to_stable(m, start, EvalConfig{}, rng);
    EXPECT_FALSE(run.stable);
    EXPECT_EQ(run.steps, 150);
}

TEST(RolloutToStable, RecordsStepLossWhenTargetGiven) {
    const auto m = oscillator();
    Lattice start(2, 2, 8, 0.0);
    for (int n = 0; n < 4; ++n) {
        start.cell(n)[0] = 0.2;
    }
    Lattice target = start;
    EvalConfig cfg;
    cfg.max_eval_steps = 6;
    Rng rng(0);
    const auto run = rollout_to_stable(m, start, cfg, rng, &target);
    ASSERT_EQ(run.step_log_loss.size(), 6u);
    EXPECT_NEAR(run.step_log_loss[0], std::log(0.36 / 8.0), 1e-12);
    EXPECT_EQ(run.step_log_loss[1], -30.0);
}

TEST(ScoreTask, UntrainedIdentityOnIdentityTask) {
    TaskRecord t;
    t.task_id = "id";
    t.train_pairs.push_back({Grid::from_rows({{1}}), Grid::from_rows({{1}})});
    t.test_pairs.push_back({Grid::from_rows({{1, 0}, {5, 9}}), Grid::from_rows({{1, 0}, {5, 9}})});
    t.test_pairs.push_back({Grid::from_rows({{2, 2, 2}}), Grid::from_rows({{2, 2, 2}})});
    Rng rng(0);
    const auto r = score_task(untrained("NCA"), t, EvalConfig{}, rng);
    EXPECT_TRUE(r.ok());
    EXPECT_EQ(r.log_loss, -30.0);
    EXPECT_TRUE(r.exact_match && r.solved_strict && r.solved_loose);
    EXPECT_EQ(r.steps_to_stable, 10);
    EXPECT_EQ(r.variant, "NCA");
    EXPECT_EQ(r.wall_time_seconds, 2.5);
}

TEST(ScoreTask, MeanMseOverTestPairsAndExactNeedsAll) {
    TaskRecord t;
    t.task_id = "mix";
    t.train_pairs.push_back({Grid::from_rows({{1}}), Grid::from_rows({{1}})});
    t.test_pairs.push_back({Grid::from_rows({{1, 1}}), Grid::from_rows({{1, 1}})});
    t.test_pairs.push_back({Grid::from_rows({{1, 1}}), Grid::from_rows({{1, 2}})});
    Rng rng(0);
    const auto r = score_task(untrained("v1"), t, EvalConfig{}, rng);

    const Palette p(10);
    const double second = pixelwise_mse(encode_grid(Grid::from_rows({{1, 1}}), p),
                                        encode_grid(Grid::from_rows({{1, 2}}), p), {0, 8});
    EXPECT_NEAR(r.log_loss, std::log(second / 2.0), 1e-12);
    EXPECT_FALSE(r.exact_match);
}

TEST(ScoreTask, SolvedStrictImpliesLoose) {
    std::mt19937_64 g(4);
    std::uniform_real_distribution<double> err(0.0, 0.08);
    for (int i = 0; i < 100; ++i) {
        const Grid grid = testing_support::random_grid(g, 3, 3, 10);
        const auto s = score_state(with_uniform_error(grid, err(g)), grid, Palette(10), EvalConfig{});
        if (s.log_loss <= -7.0) {
            EXPECT_LE(s.log_loss, -6.0);
        }
    }
}

TEST(ResultJson, RoundTrip) {
    TaskResult r = result("abc", "v3", -6.5, 12.25);
    r.steps_to_stable = 44;
    r.exact_match = true;
    r.max_pixel_sq_error = 0.01;
    r.best_step_log_loss = -8.0;
    r.train_log_loss = -9.0;
    const auto back = task_result_from_json(to_json(r));
    EXPECT_EQ(to_json(back), to_json(r));
    EXPECT_EQ(to_json(r).at("schema"), kResultSchemaVersion);

    TaskResult failed;
    failed.task_id = "x";
    failed.variant = "NCA";
    failed.status = "error";
    failed.error = "boom";
    const auto f = task_result_from_json(to_json(failed));
    EXPECT_FALSE(f.ok());
    EXPECT_EQ(f.error, "boom");

    auto bad = to_json(r);
    bad["schema"] = 99;
    EXPECT_THROW((void)task_result_from_json(bad), std::runtime_error);
}

TEST(Union, IdempotentAndDisjoint) {
    ResultsByVariant by;
    for (int i = 0; i < 10; ++i) {
        const std::string id = "t" + std::to_string(i);
        by["A"].push_back(result(id, "A", i < 3 ? -8.0 : -2.0));
        by["B"].push_back(result(id, "B", i >= 3 && i < 5 ? -8.0 : -2.0));
    }
    EXPECT_DOUBLE_EQ(union_solve(by, {"A", "A"}, -7.0), union_solve(by, {"A"}, -7.0));
    EXPECT_DOUBLE_EQ(union_solve(by, {"A", "B"}, -7.0), 0.5);
}

TEST(Union, MismatchedTaskSets) {
    ResultsByVariant by;
    by["A"] = {result("t1", "A", -8.0)};
    by["B"] = {result("t2", "B", -8.0)};
    EXPECT_THROW((void)union_solve(by, {"A", "B"}, -7.0), std::invalid_argument);
    EXPECT_THROW((void)union_solve(by, {"C"}, -7.0), std::invalid_argument);
}

TEST(Union, LawsOnRandomResultSets) {
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> loss(-10.0, -3.0);
    const std::vector<std::string> names = {"NCA", "v1", "v3", "v4"};
    for (int trial = 0; trial < 100; ++trial) {
        ResultsByVariant by;
        const int tasks = 1 + static_cast<int>(g() % 40);
        for (const auto& n : names) {
            for (int t = 0; t < tasks; ++t) {
                by[n].push_back(result("t" + std::to_string(t), n, loss(g)));
            }
        }
        for (const auto& n : names) {
            EXPECT_GE(union_solve(by, {n}, -6.0), union_solve(by, {n}, -7.0));
        }
        const double all = union_solve(by, names, -7.0);
        for (std::size_t a = 0; a < names.size(); ++a) {
            for (std::size_t b = a + 1; b < names.size(); ++b) {
                const double pair = union_solve(by, {names[a], names[b]}, -7.0);
                EXPECT_GE(pair, std::max(union_solve(by, {names[a]}, -7.0), union_solve(by, {names[b]}, -7.0)));
                EXPECT_GE(all, pair);
            }
        }
    }
}

TEST(Summarize, MeansAndRates) {
    const auto report = summarize({result("a", "NCA", -4.0), result("b", "NCA", -6.0)}, {-7.0}, EvalConfig{});
    ASSERT_EQ(report.blocks.size(), 1u);
    ASSERT_EQ(report.blocks[0].rows.size(), 1u);
    EXPECT_DOUBLE_EQ(report.blocks[0].rows[0].mean_log_loss, -5.0);
    EXPECT_FALSE(report.blocks[0].rows[0].is_union);

    std::vector<TaskResult> many;
    for (int i = 0; i < 262; ++i) {
        many.push_back(result("t" + std::to_string(i), "v1", i == 0 ? -9.0 : -3.0));
    }
    const auto big = summarize(many, {-7.0}, EvalConfig{});
    EXPECT_NEAR(big.blocks[0].rows[0].solve_rate * 100.0, 0.38, 0.005);
}

TEST(Summarize, UnionRowsAndBlocks) {
    std::vector<TaskResult> two;
    for (const char* v : {"v3", "NCA"}) {
        two.push_back(result("a", v, -8.0));
        two.push_back(result("b", v, -3.0));
    }
    const auto report = summarize(two, {-7.0, -6.0}, EvalConfig{});
    ASSERT_EQ(report.blocks.size(), 2u);
    for (const auto& block : report.blocks) {
        ASSERT_EQ(block.rows.size(), 3u);
        EXPECT_EQ(block.rows[0].label, "NCA");
        EXPECT_EQ(block.rows[1].label, "v3");
        EXPECT_TRUE(block.rows[2].is_union);
        EXPECT_EQ(block.rows[2].members, (std::vector<std::string>{"NCA", "v3"}));
    }
    EXPECT_EQ(report.blocks[0].threshold, -7.0);
    EXPECT_EQ(report.blocks[1].threshold, -6.0);
}

TEST(Summarize, FourWayUnionWithFiveVariants) {
    std::vector<TaskResult> all;
    for (const char* v : {"NCA", "v1", "v2", "v3", "v4"}) {
        all.push_back(result("a", v, -8.0));
    }
    const auto report = summarize(all, {-7.0}, EvalConfig{});
    const auto& rows = report.blocks[0].rows;
    // 5 singles, 10 pairs, the four-way union and the five-way union.
    ASSERT_EQ(rows.size(), 17u);
    EXPECT_EQ(rows[15].members, (std::vector<std::string>{"NCA", "v1", "v3", "v4"}));
    EXPECT_EQ(rows[16].members.size(), 5u);
}

TEST(Summarize, FailedTasksCountAsUnsolved) {
    TaskResult bad = result("b", "NCA", 0.0);
    bad.status = "error";
    bad.log_loss = -20.0;
    const auto report = summarize({result("a", "NCA", -8.0), bad}, {-7.0}, EvalConfig{});
    EXPECT_EQ(report.failed_tasks, 1u);
    EXPECT_DOUBLE_EQ(report.blocks[0].rows[0].solve_rate, 0.5);
    EXPECT_DOUBLE_EQ(report.blocks[0].rows[0].mean_log_loss, -8.0);
}

TEST(Summarize, EmptyThrows) {
    EXPECT_THROW((void)summarize({}, {-7.0}, EvalConfig{}), std::invalid_argument);
}

TEST(Cost, Formula) {
    EXPECT_NEAR(cost_per_task(60.0, 200.0, 0.37), 60.0 / 3600.0 * 0.2 * 0.37, 1e-15);
    EXPECT_NEAR(cost_per_task(60.0, 200.0, 0.37), 1.2333e-3, 1e-7);
    EXPECT_DOUBLE_EQ(cost_per_task(42.0, 400.0, 0.2), 2.0 * cost_per_task(42.0, 200.0, 0.2));
    EvalConfig cfg;
    const auto report = summarize({result("a", "NCA", -8.0, 30.0), result("b", "NCA", -8.0, 90.0)}, {-7.0}, cfg);
    ASSERT_EQ(report.costs.size(), 1u);
    EXPECT_DOUBLE_EQ(report.costs[0].mean_wall_seconds, 60.0);
    EXPECT_NEAR(report.costs[0].cost_per_task, 1.2333e-3, 1e-7);
}

TEST(Render, MarkdownAndCsv) {
    std::vector<TaskResult> rs = {result("a", "NCA", -8.0), result("a", "v1", -3.0)};
    const auto report = summarize(rs, {-7.0, -6.0}, EvalConfig{});
    const auto md = render_markdown(report);
    EXPECT_NE(md.find("| Model | Tasks | Mean log(loss) | Solve rate | Exact match |"), std::string::npos);
    EXPECT_NE(md.find("NCA ∪ v1"), std::string::npos);
    EXPECT_NE(md.find("log(loss) <= -6.0"), std::string::npos);
    EXPECT_NE(md.find("natural log"), std::string::npos);

    const auto csv = render_csv(report);
    EXPECT_EQ(csv.rfind("block,threshold,model,is_union,tasks,mean_log_loss,solve_rate,exact_match_rate", 0), 0u);
    EXPECT_NE(csv.find("solve,-7.00,NCA+v1,1,1,"), std::string::npos);
    EXPECT_NE(csv.find("cost,,NCA,0,"), std::string::npos);
}

TEST(EvalConfig, Validation) {
    EvalConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.threshold_loose = -8.0;
    EXPECT_THROW(cfg.validate(), std::invalid_argument);
}
