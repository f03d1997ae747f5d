#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "bcnn/error.hpp"
#include "bcnn/experiment.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace bcnn;
using namespace bcnn::test;

namespace {

// experiment config small enough for unit tests: tiny architecture,
// tiny synthetic dataset, one epoch
ExperimentConfig tiny_config() {
    std::vector<BlockSpec> blocks(1);
    blocks[0].conv = ConvSpec{3, 3, 2, 1, 0};
    blocks[0].pool = PoolSpec{2, 2};

    ExperimentConfig config;
    config.spec = ArchitectureSpec(InputShape{16, 20, 3}, blocks);
    config.spec_name = "tiny";
    config.modes = {RoutingMode::Mono, RoutingMode::Chiasma, RoutingMode::Achiasma};
    config.runs = 2;
    config.master_seed = 17;
    config.dataset.pairs_per_class = 5;
    config.train.epochs = 1;
    config.train.batch_size = 4;
    config.svm.epochs = 5;
    return config;
}

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("bcnn_exp_test_" + std::to_string(counter_++));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    fs::path path() const { return path_; }

private:
    static inline int counter_ = 0;
    fs::path path_;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace

TEST(Summarize, HandCases) {
    const Summary constant = summarize({0.5, 0.5, 0.5});
    EXPECT_EQ(constant.min, 0.5);
    EXPECT_EQ(constant.max, 0.5);
    EXPECT_EQ(constant.mean, 0.5);
    EXPECT_EQ(constant.stdev, 0.0);

    const Summary two = summarize({0.0, 1.0});
    EXPECT_EQ(two.mean, 0.5);
    EXPECT_NEAR(two.stdev, 0.7071, 5e-5);

    EXPECT_THROW(summarize({}), InputError);
}

TEST(Summarize, PermutationInvariantBitwise) {
    Rng rng(61);
    std::vector<double> values;
    for (int i = 0; i < 25; ++i) {
        values.push_back(rng.uniform_in(0.8, 1.0));
    }
    const Summary base = summarize(values);
    for (int round = 0; round < 20; ++round) {
        rng.shuffle(values);
        const Summary shuffled = summarize(values);
        ASSERT_EQ(base.min, shuffled.min);
        ASSERT_EQ(base.max, shuffled.max);
        ASSERT_EQ(base.mean, shuffled.mean);
        ASSERT_EQ(base.stdev, shuffled.stdev);
    }
}

TEST(Summarize, TableFormattingConvention) {
    EXPECT_EQ(format_percent(0.9438), "94.38");
    EXPECT_EQ(format_percent(0.9443), "94.43");
    EXPECT_EQ(format_percent(0.975), "97.50");
    EXPECT_EQ(format_stdev(0.0248), "0.0248");
    EXPECT_EQ(format_stdev(0.0174), "0.0174");
}

TEST(RunExperiment, SingleRunSummaryDegenerates) {
    ExperimentConfig config = tiny_config();
    config.modes = {RoutingMode::Mono};
    config.runs = 1;
    const RunReport report = run_experiment(config);
    ASSERT_EQ(report.results.size(), 1u);
    ASSERT_EQ(report.results[0].accuracies.size(), 1u);
    const Summary& s = report.results[0].summary;
    EXPECT_EQ(s.min, s.max);
    EXPECT_EQ(s.min, s.mean);
    EXPECT_EQ(s.stdev, 0.0);
}

TEST(RunExperiment, DeterministicAcrossCalls) {
    const ExperimentConfig config = tiny_config();
    const RunReport a = run_experiment(config);
    const RunReport b = run_experiment(config);
    EXPECT_TRUE(reports_equal(a, b));
    for (std::size_t m = 0; m < a.results.size(); ++m) {
        EXPECT_EQ(a.results[m].accuracies, b.results[m].accuracies);
    }
}

TEST(RunExperiment, SerialEqualsParallel) {
    ExperimentConfig config = tiny_config();
    config.runs = 4;
    const RunReport serial = run_experiment(config);
    config.workers = 4;
    const RunReport parallel = run_experiment(config);
    EXPECT_TRUE(reports_equal(serial, parallel));
}

TEST(RunExperiment, RecordsEntriesPerMode) {
    const ExperimentConfig config = tiny_config();
    const RunReport report = run_experiment(config);
    ASSERT_EQ(report.results.size(), config.modes.size());
    for (const ModeReport& mode : report.results) {
        EXPECT_EQ(static_cast<int>(mode.accuracies.size()) + mode.failed_runs, config.runs);
        EXPECT_LE(mode.summary.min, mode.summary.mean);
        EXPECT_LE(mode.summary.mean, mode.summary.max);
    }
    EXPECT_EQ(report.run_seconds.size(), static_cast<std::size_t>(config.runs));
}

TEST(RunExperiment, DivergedRunsAreCountedNotRetried) {
    ExperimentConfig config = tiny_config();
    // identity normalization so the blow-up is not damped away
    std::vector<BlockSpec> blocks(1);
    blocks[0].conv = ConvSpec{3, 3, 2, 1, 0};
    blocks[0].lrn = LrnSpec{2, 1.0, 0.0, 0.75};
    blocks[0].pool = PoolSpec{2, 2};
    config.spec = ArchitectureSpec(InputShape{16, 20, 3}, blocks);
    config.modes = {RoutingMode::Mono};
    config.train.learning_rate = 1e150; // overflow within a few steps
    config.train.epochs = 4;
    const RunReport report = run_experiment(config);
    ASSERT_EQ(report.results.size(), 1u);
    EXPECT_EQ(report.results[0].failed_runs, config.runs);
    EXPECT_TRUE(report.results[0].accuracies.empty());
}

TEST(Report, EmitParseRoundTrip) {
    TempDir dir;
    const ExperimentConfig config = tiny_config();
    const RunReport report = run_experiment(config);
    emit_report(report, dir.path().string());

    const RunReport parsed = parse_report((dir.path() / "report.json").string());
    EXPECT_TRUE(reports_equal(report, parsed));
    // accuracies round-trip bit-exactly through JSON
    for (std::size_t m = 0; m < report.results.size(); ++m) {
        ASSERT_EQ(parsed.results[m].accuracies.size(), report.results[m].accuracies.size());
        for (std::size_t i = 0; i < report.results[m].accuracies.size(); ++i) {
            EXPECT_EQ(parsed.results[m].accuracies[i], report.results[m].accuracies[i]);
        }
    }
}

TEST(Report, TableAndPlotShapes) {
    TempDir dir;
    const ExperimentConfig config = tiny_config();
    const RunReport report = run_experiment(config);
    emit_report(report, dir.path().string());

    const std::string table = slurp(dir.path() / "summary.tsv");
    // header + one row per mode
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'),
              static_cast<long>(1 + config.modes.size()));

    const std::string plot = slurp(dir.path() / "plot.csv");
    long expected_rows = 1; // header
    for (const ModeReport& mode : report.results) {
        expected_rows += static_cast<long>(mode.accuracies.size());
    }
    EXPECT_EQ(std::count(plot.begin(), plot.end(), '\n'), expected_rows);

    const std::string rendered = render_table(report);
    EXPECT_NE(rendered.find("mono"), std::string::npos);
    EXPECT_NE(rendered.find("bcnn1"), std::string::npos);
}

TEST(Report, UnwritableDirectoryIsOutputError) {
    const ExperimentConfig config = tiny_config();
    RunReport report;
    report.modes = config.modes;
    EXPECT_THROW(emit_report(report, "/proc/definitely/not/writable"), OutputError);
}

TEST(Config, Validation) {
    ExperimentConfig config = tiny_config();
    config.runs = 0;
    EXPECT_THROW(config.validate(), ParamError);
    config = tiny_config();
    config.modes.clear();
    EXPECT_THROW(config.validate(), ParamError);
    config = tiny_config();
    config.split_fraction = 1.0;
    EXPECT_THROW(config.validate(), ParamError);
    config = tiny_config();
    config.workers = 0;
    EXPECT_THROW(config.validate(), ParamError);
}
