#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bcnn/augment.hpp"
#include "bcnn/dataset.hpp"
#include "bcnn/error.hpp"
#include "bcnn/network.hpp"
#include "bcnn/routing.hpp"
#include "bcnn/svm.hpp"
#include "bcnn/synth.hpp"

namespace bcnn {

struct Summary {
    double min = 0, max = 0, mean = 0, stdev = 0;
    bool operator==(const Summary&) const = default;
};

/// min/max/mean and sample standard deviation (n-1 denominator, fraction
/// scale). The list is sorted internally before any accumulation, so the
/// result is bit-identical under permutation of the input.
Summary summarize(const std::vector<double>& accuracies);

/// 0.9438 -> "94.38" (display convention for accuracy columns).
std::string format_percent(double fraction);
/// 0.0248 -> "0.0248" (stdev stays on the fraction scale).
std::string format_stdev(double fraction);

struct DatasetSource {
    enum class Kind { Synthetic, Manifest } kind = Kind::Synthetic;
    int pairs_per_class = 50;
    SynthConfig synth;
    std::string manifest_path;

    std::string describe() const;
};

struct ExperimentConfig {
    std::vector<RoutingMode> modes{RoutingMode::Mono, RoutingMode::Chiasma,
                                   RoutingMode::Achiasma};
    int runs = 5;
    double split_fraction = 0.6;
    std::uint64_t master_seed = 7;
    std::string spec_name = "desk"; // paper | desk | path to a spec file
    ArchitectureSpec spec = ArchitectureSpec::desk();
    // desk-calibrated optimizer defaults; the engine-wide TrainConfig
    // default of 1e-3 moves the desk nets too slowly for the timed protocol
    TrainConfig train{.learning_rate = 1e-2, .momentum = 0.9, .epochs = 4, .batch_size = 8,
                      .weight_init_stddev = 1.0};
    SvmTrainConfig svm;
    bool augment = false;
    AugmentConfig augment_config;
    DatasetSource dataset;
    int workers = 1; // execution detail; not part of the report identity

    void validate() const;
};

struct ModeReport {
    RoutingMode mode = RoutingMode::Mono;
    std::vector<double> accuracies; // run order, failed runs omitted
    int failed_runs = 0;
    Summary summary;
    bool operator==(const ModeReport&) const = default;
};

struct RunReport {
    // config echo (experiment identity, enough for exact replay)
    std::vector<RoutingMode> modes;
    int runs = 0;
    double split_fraction = 0.6;
    std::uint64_t master_seed = 0;
    std::string spec_name;
    std::string dataset_desc;
    bool augment = false;
    TrainConfig train;
    SvmTrainConfig svm;

    std::vector<ModeReport> results;
    std::vector<double> run_seconds; // timing; excluded from equality
};

/// Equality over everything except timing.
bool reports_equal(const RunReport& a, const RunReport& b);

/// The full protocol: materialize the dataset once (plus augmentation when
/// enabled), then for each run derive a seed, draw a pair-level split shared
/// by every mode, train the routed networks, fit the SVM head on assembled
/// train features and score assembled test features. Runs execute on
/// `workers` threads; every run uses only its own derived streams, so serial
/// and parallel schedules produce identical reports.
RunReport run_experiment(const ExperimentConfig& config);

/// Same protocol on an already materialized sample list.
RunReport run_experiment(const ExperimentConfig& config,
                         const std::vector<StereoSample>& samples);

/// Writes report.json (schema bcnn-report/v1), summary.tsv and plot.csv
/// into out_dir (created if missing).
void emit_report(const RunReport& report, const std::string& out_dir);

RunReport parse_report(const std::string& json_path);

/// Fixed-width text table, one row per mode: min/max/mean in percent,
/// stdev in fractions.
std::string render_table(const RunReport& report);

} // namespace bcnn
