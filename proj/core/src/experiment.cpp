#include "bcnn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "bcnn/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace bcnn {

Summary summarize(const std::vector<double>& accuracies) {
    if (accuracies.empty()) {
        throw InputError("summarize: empty accuracy list");
    }
    std::vector<double> sorted = accuracies;
    std::sort(sorted.begin(), sorted.end());
    Summary s;
    s.min = sorted.front();
    s.max = sorted.back();
    double sum = 0.0;
    for (double a : sorted) {
        sum += a;
    }
    s.mean = sum / static_cast<double>(sorted.size());
    if (sorted.size() > 1) {
        double sq = 0.0;
        for (double a : sorted) {
            sq += (a - s.mean) * (a - s.mean);
        }
        s.stdev = std::sqrt(sq / static_cast<double>(sorted.size() - 1));
    }
    return s;
}

std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
    return buf;
}

std::string format_stdev(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", fraction);
    return buf;
}

std::string DatasetSource::describe() const {
    if (kind == Kind::Synthetic) {
        return "synthetic:" + std::to_string(pairs_per_class) + "x2";
    }
    return "manifest:" + manifest_path;
}

void ExperimentConfig::validate() const {
    if (modes.empty()) {
        throw ParamError("experiment: at least one mode required");
    }
    if (runs < 1) {
        throw ParamError("experiment: runs must be >= 1");
    }
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
        throw ParamError("experiment: split_fraction must be in (0, 1)");
    }
    if (workers < 1) {
        throw ParamError("experiment: workers must be >= 1");
    }
    train.validate();
    svm.validate();
}

namespace {

constexpr const char* kSchema = "bcnn-report/v1";

std::vector<StereoSample> materialize_dataset(const ExperimentConfig& config) {
    std::vector<StereoSample> samples;
    if (config.dataset.kind == DatasetSource::Kind::Synthetic) {
        SynthConfig synth = config.dataset.synth;
        synth.height = config.spec.input().height;
        synth.width = config.spec.input().width;
        samples = synthesize_dataset(config.dataset.pairs_per_class,
                                     derive_seed(config.master_seed, {0x64617461ull}), synth);
    } else {
        const DatasetManifest manifest = load_manifest(config.dataset.manifest_path);
        samples = load_and_resize(manifest, config.spec.input().height,
                                  config.spec.input().width);
    }
    if (config.augment) {
        AugmentConfig aug = config.augment_config;
        aug.seed = derive_seed(config.master_seed, {0x617567ull});
        samples = augment_dataset(samples, aug);
    }
    return samples;
}

struct RunOutcome {
    std::vector<double> accuracy;  // per mode, NaN marks a diverged run
    double seconds = 0.0;
};

RunOutcome execute_run(const ExperimentConfig& config, const std::vector<StereoSample>& samples,
                       int run_index) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t run_seed =
        derive_seed(config.master_seed, {0x72756eull, static_cast<std::uint64_t>(run_index)});

    SplitPlan plan{config.split_fraction, derive_seed(run_seed, {0x73706c6974ull})};
    const SplitResult split = split_dataset(samples, plan);

    RunOutcome outcome;
    outcome.accuracy.assign(config.modes.size(), std::nan(""));
    for (std::size_t m = 0; m < config.modes.size(); ++m) {
        const RoutingMode mode = config.modes[m];
        const std::uint64_t mode_seed =
            derive_seed(run_seed, {0x6d6f6465ull, static_cast<std::uint64_t>(mode)});
        try {
            const HemisphereNets nets =
                train_routed(split.train, mode, config.spec, config.train,
                             derive_seed(mode_seed, {0x747261696eull}));
            SvmTrainConfig svm_cfg = config.svm;
            svm_cfg.seed = derive_seed(mode_seed, {0x73766dull});
            const SvmModel model = svm_train(assemble_features(split.train, mode, nets), svm_cfg);
            outcome.accuracy[m] =
                svm_accuracy(model, assemble_features(split.test, mode, nets));
        } catch (const TrainingError&) {
            // diverged run: recorded as failed, not retried
        }
    }
    outcome.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return outcome;
}

} // namespace

RunReport run_experiment(const ExperimentConfig& config,
                         const std::vector<StereoSample>& samples) {
    config.validate();

    std::vector<RunOutcome> outcomes(static_cast<std::size_t>(config.runs));
    const int workers = std::min(config.workers, config.runs);
    if (workers <= 1) {
        for (int run = 0; run < config.runs; ++run) {
            outcomes[static_cast<std::size_t>(run)] = execute_run(config, samples, run);
        }
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (int run = next.fetch_add(1); run < config.runs; run = next.fetch_add(1)) {
                    outcomes[static_cast<std::size_t>(run)] = execute_run(config, samples, run);
                }
            });
        }
        for (std::thread& t : pool) {
            t.join();
        }
    }

    RunReport report;
    report.modes = config.modes;
    report.runs = config.runs;
    report.split_fraction = config.split_fraction;
    report.master_seed = config.master_seed;
    report.spec_name = config.spec_name;
    report.dataset_desc = config.dataset.describe();
    report.augment = config.augment;
    report.train = config.train;
    report.svm = config.svm;

    for (std::size_t m = 0; m < config.modes.size(); ++m) {
        ModeReport mode_report;
        mode_report.mode = config.modes[m];
        for (int run = 0; run < config.runs; ++run) {
            const double acc = outcomes[static_cast<std::size_t>(run)].accuracy[m];
            if (std::isnan(acc)) {
                ++mode_report.failed_runs;
            } else {
                mode_report.accuracies.push_back(acc);
            }
        }
        if (!mode_report.accuracies.empty()) {
            mode_report.summary = summarize(mode_report.accuracies);
        }
        report.results.push_back(std::move(mode_report));
    }
    for (const RunOutcome& o : outcomes) {
        report.run_seconds.push_back(o.seconds);
    }
    return report;
}

RunReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    return run_experiment(config, materialize_dataset(config));
}

bool reports_equal(const RunReport& a, const RunReport& b) {
    return a.modes == b.modes && a.runs == b.runs && a.split_fraction == b.split_fraction &&
           a.master_seed == b.master_seed && a.spec_name == b.spec_name &&
           a.dataset_desc == b.dataset_desc && a.augment == b.augment &&
           a.train.learning_rate == b.train.learning_rate &&
           a.train.momentum == b.train.momentum && a.train.epochs == b.train.epochs &&
           a.train.batch_size == b.train.batch_size &&
           a.train.weight_init_stddev == b.train.weight_init_stddev &&
           a.svm.lambda == b.svm.lambda && a.svm.epochs == b.svm.epochs &&
           a.results == b.results;
}

namespace {

json config_json(const RunReport& report) {
    json modes = json::array();
    for (RoutingMode mode : report.modes) {
        modes.push_back(to_string(mode));
    }
    return json{{"modes", modes},
                {"runs", report.runs},
                {"split_fraction", report.split_fraction},
                {"master_seed", report.master_seed},
                {"spec", report.spec_name},
                {"dataset", report.dataset_desc},
                {"augment", report.augment},
                {"train",
                 {{"learning_rate", report.train.learning_rate},
                  {"momentum", report.train.momentum},
                  {"epochs", report.train.epochs},
                  {"batch_size", report.train.batch_size},
                  {"weight_init_stddev", report.train.weight_init_stddev}}},
                {"svm", {{"lambda", report.svm.lambda}, {"epochs", report.svm.epochs}}}};
}

} // namespace

void emit_report(const RunReport& report, const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw OutputError("report: cannot create directory '" + out_dir + "'");
    }

    json results = json::array();
    for (const ModeReport& mode : report.results) {
        results.push_back(json{{"mode", to_string(mode.mode)},
                               {"accuracies", mode.accuracies},
                               {"failed_runs", mode.failed_runs},
                               {"summary",
                                {{"min", mode.summary.min},
                                 {"max", mode.summary.max},
                                 {"mean", mode.summary.mean},
                                 {"stdev", mode.summary.stdev}}}});
    }
    const json doc{{"schema", kSchema},
                   {"config", config_json(report)},
                   {"results", results},
                   {"timing", {{"run_seconds", report.run_seconds}}}};

    const fs::path dir(out_dir);
    {
        std::ofstream out(dir / "report.json");
        if (!out) {
            throw OutputError("report: cannot write '" + (dir / "report.json").string() + "'");
        }
        out << doc.dump(2) << "\n";
    }
    {
        std::ofstream out(dir / "summary.tsv");
        if (!out) {
            throw OutputError("report: cannot write '" + (dir / "summary.tsv").string() + "'");
        }
        out << "mode\tmin\tmax\tmean\tstdev\truns\tfailed\n";
        for (const ModeReport& mode : report.results) {
            out << to_string(mode.mode) << "\t" << format_percent(mode.summary.min) << "\t"
                << format_percent(mode.summary.max) << "\t" << format_percent(mode.summary.mean)
                << "\t" << format_stdev(mode.summary.stdev) << "\t" << mode.accuracies.size()
                << "\t" << mode.failed_runs << "\n";
        }
    }
    {
        std::ofstream out(dir / "plot.csv");
        if (!out) {
            throw OutputError("report: cannot write '" + (dir / "plot.csv").string() + "'");
        }
        out << "run,mode,accuracy\n";
        char buf[40];
        for (const ModeReport& mode : report.results) {
            for (std::size_t i = 0; i < mode.accuracies.size(); ++i) {
                std::snprintf(buf, sizeof buf, "%.17g", mode.accuracies[i]);
                out << i << "," << to_string(mode.mode) << "," << buf << "\n";
            }
        }
    }
}

RunReport parse_report(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in) {
        throw DataError("report: cannot open '" + json_path + "'");
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw DataError("report: '" + json_path + "' is not valid JSON: " + e.what());
    }
    if (doc.value("schema", "") != kSchema) {
        throw DataError("report: '" + json_path + "' has unknown schema");
    }
    RunReport report;
    const json& config = doc.at("config");
    for (const auto& m : config.at("modes")) {
        report.modes.push_back(routing_mode_from_string(m.get<std::string>()));
    }
    report.runs = config.at("runs").get<int>();
    report.split_fraction = config.at("split_fraction").get<double>();
    report.master_seed = config.at("master_seed").get<std::uint64_t>();
    report.spec_name = config.at("spec").get<std::string>();
    report.dataset_desc = config.at("dataset").get<std::string>();
    report.augment = config.at("augment").get<bool>();
    const json& train = config.at("train");
    report.train.learning_rate = train.at("learning_rate").get<double>();
    report.train.momentum = train.at("momentum").get<double>();
    report.train.epochs = train.at("epochs").get<int>();
    report.train.batch_size = train.at("batch_size").get<int>();
    report.train.weight_init_stddev = train.at("weight_init_stddev").get<double>();
    report.svm.lambda = config.at("svm").at("lambda").get<double>();
    report.svm.epochs = config.at("svm").at("epochs").get<int>();

    for (const auto& entry : doc.at("results")) {
        ModeReport mode;
        mode.mode = routing_mode_from_string(entry.at("mode").get<std::string>());
        mode.accuracies = entry.at("accuracies").get<std::vector<double>>();
        mode.failed_runs = entry.at("failed_runs").get<int>();
        mode.summary.min = entry.at("summary").at("min").get<double>();
        mode.summary.max = entry.at("summary").at("max").get<double>();
        mode.summary.mean = entry.at("summary").at("mean").get<double>();
        mode.summary.stdev = entry.at("summary").at("stdev").get<double>();
        report.results.push_back(std::move(mode));
    }
    if (doc.contains("timing") && doc.at("timing").contains("run_seconds")) {
        report.run_seconds = doc.at("timing").at("run_seconds").get<std::vector<double>>();
    }
    return report;
}

std::string render_table(const RunReport& report) {
    std::ostringstream out;
    out << "mode          min (%)   max (%)   mean (%)  stdev\n";
    for (const ModeReport& mode : report.results) {
        char line[128];
        std::snprintf(line, sizeof line, "%-12s  %-8s  %-8s  %-8s  %s\n",
                      to_string(mode.mode).c_str(), format_percent(mode.summary.min).c_str(),
                      format_percent(mode.summary.max).c_str(),
                      format_percent(mode.summary.mean).c_str(),
                      format_stdev(mode.summary.stdev).c_str());
        out << line;
    }
    return out.str();
}

} // namespace bcnn
