// bcnn: dataset synthesis/ingestion, routed CNN training, gradient checking
// and the multi-run classification experiment, from one binary.
//
// Exit codes: 0 success, 1 usage, 2 configuration, 3 data, 4 training,
// 5 output.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bcnn/augment.hpp"
#include "bcnn/checkpoint.hpp"
#include "bcnn/dataset.hpp"
#include "bcnn/error.hpp"
#include "bcnn/experiment.hpp"
#include "bcnn/gradcheck.hpp"
#include "bcnn/image.hpp"
#include "bcnn/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitTraining = 4;
constexpr int kExitOutput = 5;

bcnn::ArchitectureSpec load_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw bcnn::ParamError("spec: cannot open '" + path + "'");
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw bcnn::ParamError("spec: '" + path + "' is not valid JSON: " + std::string(e.what()));
    }
    const auto input = doc.at("input"); // [height, width, channels]
    std::vector<bcnn::BlockSpec> blocks;
    for (const auto& b : doc.at("blocks")) {
        bcnn::BlockSpec block;
        block.conv.kernel_h = b.at("kernel").at(0).get<int>();
        block.conv.kernel_w = b.at("kernel").at(1).get<int>();
        block.conv.out_channels = b.at("channels").get<int>();
        block.conv.stride = b.value("stride", 1);
        block.conv.padding = b.value("padding", 0);
        if (b.contains("lrn")) {
            const auto& l = b.at("lrn");
            block.lrn.depth_radius = l.value("radius", 2);
            block.lrn.bias_k = l.value("k", 2.0);
            block.lrn.alpha = l.value("alpha", 1e-4);
            block.lrn.beta = l.value("beta", 0.75);
        }
        block.pool.window = b.at("pool").at(0).get<int>();
        block.pool.stride = b.at("pool").at(1).get<int>();
        blocks.push_back(block);
    }
    return bcnn::ArchitectureSpec(
        bcnn::InputShape{input.at(0).get<int>(), input.at(1).get<int>(), input.at(2).get<int>()},
        std::move(blocks), doc.value("num_classes", 2));
}

bcnn::ArchitectureSpec resolve_spec(const std::string& name) {
    if (name == "paper") {
        return bcnn::ArchitectureSpec::paper();
    }
    if (name == "desk") {
        return bcnn::ArchitectureSpec::desk();
    }
    return load_spec_file(name);
}

std::vector<bcnn::RoutingMode> parse_modes(const std::vector<std::string>& names) {
    std::vector<bcnn::RoutingMode> modes;
    for (const std::string& name : names) {
        const bcnn::RoutingMode mode = bcnn::routing_mode_from_string(name);
        if (std::find(modes.begin(), modes.end(), mode) == modes.end()) {
            modes.push_back(mode);
        }
    }
    return modes;
}

std::vector<bcnn::StereoSample> load_dataset(const std::string& dataset, int target_h,
                                             int target_w, int pairs_per_class,
                                             std::uint64_t seed) {
    if (dataset == "synthetic") {
        bcnn::SynthConfig synth;
        synth.height = target_h;
        synth.width = target_w;
        return bcnn::synthesize_dataset(pairs_per_class, bcnn::derive_seed(seed, {0x64617461ull}),
                                        synth);
    }
    return bcnn::load_and_resize(bcnn::load_manifest(dataset), target_h, target_w);
}

// resolved-config echo: into <out>/resolved.cfg when an output directory
// exists, otherwise onto stdout, so every invocation can be replayed
void echo_config(CLI::App* sub, const std::string& out_dir) {
    const std::string text = sub->config_to_str(true, false);
    if (out_dir.empty()) {
        std::cout << "# resolved-config (" << sub->get_name() << ")\n" << text;
        return;
    }
    std::ofstream out(fs::path(out_dir) / "resolved.cfg");
    if (!out) {
        throw bcnn::OutputError("cannot write resolved.cfg into '" + out_dir + "'");
    }
    out << text;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw bcnn::OutputError("cannot create output directory '" + dir + "'");
    }
}

std::string image_name(const std::string& pair_id, const char* eye, const std::string& format) {
    std::string base = pair_id;
    std::replace(base.begin(), base.end(), '#', '_');
    return base + "_" + eye + "." + format;
}

void write_dataset(const std::vector<bcnn::StereoSample>& samples,
                   const std::vector<std::string>& classes, const std::string& out_dir,
                   const std::string& format) {
    ensure_dir(out_dir);
    bcnn::DatasetManifest manifest;
    manifest.classes = classes;
    manifest.root = out_dir;
    for (const bcnn::StereoSample& s : samples) {
        const std::string left = image_name(s.pair_id, "L", format);
        const std::string right = image_name(s.pair_id, "R", format);
        bcnn::save_image(s.left_eye, (fs::path(out_dir) / left).string());
        bcnn::save_image(s.right_eye, (fs::path(out_dir) / right).string());
        manifest.entries.push_back({s.pair_id, classes.at(static_cast<std::size_t>(s.label)),
                                    left, right});
    }
    bcnn::save_manifest(manifest, (fs::path(out_dir) / "dataset.manifest").string());
}

struct ExperimentFlags {
    std::vector<std::string> modes{"mono", "bcnn1", "bcnn2"};
    int runs = 5;
    std::uint64_t seed = 7;
    int workers = 1;
    std::string out = "out/experiment";
    std::string spec = "desk";
    std::string dataset = "synthetic";
    int pairs = 50;
    double split = 0.6;
    double lr = 1e-2;
    double momentum = 0.9;
    int epochs = 4;
    int batch = 8;
    double init_scale = 1.0;
    double svm_lambda = 1e-3;
    int svm_epochs = 50;
    bool augment = false;
    double noise = 0.02;
    double rotation = 3.0;
    int translation = 4;
    bool verbose = false;
};

void add_experiment_options(CLI::App* sub, ExperimentFlags& flags) {
    sub->add_option("--modes", flags.modes, "routing modes: mono,bcnn1,bcnn2,mono-chiasma")
        ->delimiter(',');
    sub->add_option("--runs", flags.runs, "independent simulations");
    sub->add_option("--seed", flags.seed, "master seed");
    sub->add_option("--workers", flags.workers, "parallel run workers");
    sub->add_option("--out", flags.out, "output directory")->envname("BCNN_OUT");
    sub->add_option("--spec", flags.spec, "architecture: paper | desk | spec file");
    sub->add_option("--dataset", flags.dataset, "'synthetic' or a manifest path");
    sub->add_option("--pairs", flags.pairs, "synthetic pairs per class");
    sub->add_option("--split", flags.split, "train fraction");
    sub->add_option("--lr", flags.lr, "learning rate");
    sub->add_option("--momentum", flags.momentum, "SGD momentum");
    sub->add_option("--epochs", flags.epochs, "training epochs");
    sub->add_option("--batch-size", flags.batch, "minibatch size");
    sub->add_option("--init-scale", flags.init_scale, "weight init stddev scale");
    sub->add_option("--svm-lambda", flags.svm_lambda, "SVM regularization");
    sub->add_option("--svm-epochs", flags.svm_epochs, "SVM training epochs");
    sub->add_flag("--augment", flags.augment, "materialize the augmented corpus");
    sub->add_option("--noise", flags.noise, "augment: noise stddev");
    sub->add_option("--rotation", flags.rotation, "augment: max rotation degrees");
    sub->add_option("--translation", flags.translation, "augment: max shift px");
    sub->add_flag("-v,--verbose", flags.verbose, "progress output");
}

bcnn::ExperimentConfig to_config(const ExperimentFlags& flags) {
    bcnn::ExperimentConfig config;
    config.modes = parse_modes(flags.modes);
    config.runs = flags.runs;
    config.master_seed = flags.seed;
    config.workers = flags.workers;
    config.spec_name = flags.spec;
    config.spec = resolve_spec(flags.spec);
    config.split_fraction = flags.split;
    config.train.learning_rate = flags.lr;
    config.train.momentum = flags.momentum;
    config.train.epochs = flags.epochs;
    config.train.batch_size = flags.batch;
    config.train.weight_init_stddev = flags.init_scale;
    config.svm.lambda = flags.svm_lambda;
    config.svm.epochs = flags.svm_epochs;
    config.augment = flags.augment;
    config.augment_config.noise_stddev = flags.noise;
    config.augment_config.rotation_max_degrees = flags.rotation;
    config.augment_config.translation_max_pixels = flags.translation;
    if (flags.dataset == "synthetic") {
        config.dataset.kind = bcnn::DatasetSource::Kind::Synthetic;
        config.dataset.pairs_per_class = flags.pairs;
    } else {
        config.dataset.kind = bcnn::DatasetSource::Kind::Manifest;
        config.dataset.manifest_path = flags.dataset;
    }
    return config;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"binocular convolutional network engine and experiment harness"};
    app.require_subcommand(1);
    // resolved.cfg echoes must carry real default values for exact replay
    app.option_defaults()->always_capture_default(true);

    // ---- synth ----------------------------------------------------------
    struct {
        int pairs = 50;
        std::uint64_t seed = 7;
        std::string out = "out/synthetic";
        int height = 100, width = 80;
        double disparity = 0.04;
        std::string format = "png";
    } synth_flags;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic stereo dataset");
    synth->add_option("--pairs", synth_flags.pairs, "pairs per class");
    synth->add_option("--seed", synth_flags.seed, "generator seed");
    synth->add_option("--out", synth_flags.out, "output directory")->envname("BCNN_OUT");
    synth->add_option("--height", synth_flags.height, "image height");
    synth->add_option("--width", synth_flags.width, "image width");
    synth->add_option("--disparity", synth_flags.disparity, "max disparity fraction of width");
    synth->add_option("--format", synth_flags.format, "png or ppm")
        ->check(CLI::IsMember({"png", "ppm"}));

    // ---- ingest ---------------------------------------------------------
    struct {
        std::string dataset;
        int height = 100, width = 80;
        std::string out;
        std::string format = "png";
    } ingest_flags;
    CLI::App* ingest = app.add_subcommand("ingest", "validate and resize a manifest dataset");
    ingest->add_option("--dataset", ingest_flags.dataset, "manifest path")->required();
    ingest->add_option("--height", ingest_flags.height, "target height");
    ingest->add_option("--width", ingest_flags.width, "target width");
    ingest->add_option("--out", ingest_flags.out, "materialize the resized dataset here")
        ->envname("BCNN_OUT");
    ingest->add_option("--format", ingest_flags.format, "png or ppm")
        ->check(CLI::IsMember({"png", "ppm"}));

    // ---- augment --------------------------------------------------------
    struct {
        std::string dataset;
        std::string out;
        std::uint64_t seed = 7;
        double noise = 0.02;
        double rotation = 3.0;
        int translation = 4;
        double rescale_down = 0.5;
        double rescale_up = 0.5;
        bool no_hreflect = false;
        bool no_vreflect = false;
        bool reflect_swaps_eyes = false;
        std::string format = "png";
    } augment_flags;
    CLI::App* augment_cmd =
        app.add_subcommand("augment", "materialize the augmented corpus with a provenance sidecar");
    augment_cmd->add_option("--dataset", augment_flags.dataset, "manifest path")->required();
    augment_cmd->add_option("--out", augment_flags.out, "output directory")
        ->envname("BCNN_OUT")
        ->required();
    augment_cmd->add_option("--seed", augment_flags.seed, "augmentation seed");
    augment_cmd->add_option("--noise", augment_flags.noise, "noise stddev");
    augment_cmd->add_option("--rotation", augment_flags.rotation, "max rotation degrees");
    augment_cmd->add_option("--translation", augment_flags.translation, "max shift px");
    augment_cmd->add_option("--rescale-down", augment_flags.rescale_down,
                            "down-up round trip factor in (0,1)");
    augment_cmd->add_option("--rescale-up", augment_flags.rescale_up,
                            "up-down round trip factor in (0,1)");
    augment_cmd->add_flag("--no-hreflect", augment_flags.no_hreflect, "skip horizontal reflection");
    augment_cmd->add_flag("--no-vreflect", augment_flags.no_vreflect, "skip vertical reflection");
    augment_cmd->add_flag("--reflect-swaps-eyes", augment_flags.reflect_swaps_eyes,
                          "horizontal reflection also swaps eye roles");
    augment_cmd->add_option("--format", augment_flags.format, "png or ppm")
        ->check(CLI::IsMember({"png", "ppm"}));

    // ---- train ----------------------------------------------------------
    ExperimentFlags train_flags;
    train_flags.out = "out/train";
    CLI::App* train = app.add_subcommand("train", "train one routed model and its SVM head");
    add_experiment_options(train, train_flags);
    std::string train_mode = "mono";
    train->add_option("--mode", train_mode, "routing mode for this model");

    // ---- gradcheck ------------------------------------------------------
    struct {
        std::string spec = "desk";
        std::uint64_t seed = 1;
        double tolerance = 1e-4;
        int samples = 6;
    } grad_flags;
    CLI::App* gradcheck_cmd =
        app.add_subcommand("gradcheck", "finite-difference check of the backward pass");
    gradcheck_cmd->add_option("--spec", grad_flags.spec, "paper | desk | spec file");
    gradcheck_cmd->add_option("--seed", grad_flags.seed, "input/init seed");
    gradcheck_cmd->add_option("--tolerance", grad_flags.tolerance, "relative error bound");
    gradcheck_cmd->add_option("--samples", grad_flags.samples, "sampled entries per tensor");

    // ---- experiment -----------------------------------------------------
    ExperimentFlags experiment_flags;
    CLI::App* experiment = app.add_subcommand(
        "experiment", "the repeated-simulation protocol with Table-style summaries");
    experiment->set_config("--config", "", "key=value configuration file (flags override)");
    experiment->allow_config_extras(CLI::config_extras_mode::error);
    add_experiment_options(experiment, experiment_flags);

    // ---- report ---------------------------------------------------------
    struct {
        std::string in;
        std::string out;
    } report_flags;
    CLI::App* report_cmd = app.add_subcommand("report", "re-render an emitted report");
    report_cmd->add_option("--in", report_flags.in, "path to report.json")->required();
    report_cmd->add_option("--out", report_flags.out, "re-emit table and plot data here")
        ->envname("BCNN_OUT");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (synth->parsed()) {
            bcnn::SynthConfig config;
            config.height = synth_flags.height;
            config.width = synth_flags.width;
            config.max_disparity_fraction = synth_flags.disparity;
            const auto samples =
                bcnn::synthesize_dataset(synth_flags.pairs, synth_flags.seed, config);
            write_dataset(samples, {"buildings", "others"}, synth_flags.out, synth_flags.format);
            echo_config(synth, synth_flags.out);
            std::cout << "wrote " << samples.size() << " pairs to " << synth_flags.out << "\n";
        } else if (ingest->parsed()) {
            const bcnn::DatasetManifest manifest = bcnn::load_manifest(ingest_flags.dataset);
            const auto samples =
                bcnn::load_and_resize(manifest, ingest_flags.height, ingest_flags.width);
            std::map<int, int> per_class;
            for (const auto& s : samples) {
                ++per_class[s.label];
            }
            std::cout << "pairs: " << samples.size() << "\n";
            for (const auto& [label, count] : per_class) {
                std::cout << "  class " << label << " (" << manifest.classes.at(label)
                          << "): " << count << "\n";
            }
            if (!ingest_flags.out.empty()) {
                write_dataset(samples, manifest.classes, ingest_flags.out, ingest_flags.format);
                std::cout << "materialized resized dataset in " << ingest_flags.out << "\n";
            }
            echo_config(ingest, ingest_flags.out);
        } else if (augment_cmd->parsed()) {
            const bcnn::DatasetManifest manifest = bcnn::load_manifest(augment_flags.dataset);
            std::vector<bcnn::StereoSample> samples;
            for (const auto& entry : manifest.entries) {
                bcnn::StereoSample s;
                s.pair_id = entry.pair_id;
                s.label = manifest.label_of(entry.class_name);
                const fs::path root(manifest.root);
                s.left_eye = bcnn::load_image((root / entry.left_path).string());
                s.right_eye = bcnn::load_image((root / entry.right_path).string());
                samples.push_back(std::move(s));
            }
            bcnn::AugmentConfig config;
            config.seed = augment_flags.seed;
            config.noise_stddev = augment_flags.noise;
            config.rotation_max_degrees = augment_flags.rotation;
            config.translation_max_pixels = augment_flags.translation;
            config.rescale_down_factor = augment_flags.rescale_down;
            config.rescale_up_factor = augment_flags.rescale_up;
            config.horizontal_reflect = !augment_flags.no_hreflect;
            config.vertical_reflect = !augment_flags.no_vreflect;
            config.reflect_swaps_eyes = augment_flags.reflect_swaps_eyes;
            const auto augmented = bcnn::augment_dataset(samples, config);
            write_dataset(augmented, manifest.classes, augment_flags.out, augment_flags.format);
            echo_config(augment_cmd, augment_flags.out);
            std::cout << "wrote " << augmented.size() << " pairs (originals + variants) to "
                      << augment_flags.out << "\n";
        } else if (train->parsed()) {
            const bcnn::RoutingMode mode = bcnn::routing_mode_from_string(train_mode);
            bcnn::ExperimentConfig config = to_config(train_flags);
            auto samples = load_dataset(train_flags.dataset, config.spec.input().height,
                                        config.spec.input().width, train_flags.pairs,
                                        train_flags.seed);
            if (config.augment) {
                bcnn::AugmentConfig aug = config.augment_config;
                aug.seed = bcnn::derive_seed(train_flags.seed, {0x617567ull});
                samples = bcnn::augment_dataset(samples, aug);
            }
            const bcnn::SplitResult split =
                bcnn::split_dataset(samples, {config.split_fraction,
                                              bcnn::derive_seed(train_flags.seed, {0x73706c6974ull})});
            if (train_flags.verbose) {
                std::cout << "training " << bcnn::to_string(mode) << " on " << split.train.size()
                          << " train pairs\n";
            }
            const bcnn::HemisphereNets nets =
                bcnn::train_routed(split.train, mode, config.spec, config.train,
                                   bcnn::derive_seed(train_flags.seed, {0x747261696eull}));
            bcnn::SvmTrainConfig svm_cfg = config.svm;
            svm_cfg.seed = bcnn::derive_seed(train_flags.seed, {0x73766dull});
            const auto train_features = bcnn::assemble_features(split.train, mode, nets);
            const bcnn::SvmModel model = bcnn::svm_train(train_features, svm_cfg);
            const auto test_features = bcnn::assemble_features(split.test, mode, nets);

            ensure_dir(train_flags.out);
            bcnn::Checkpoint checkpoint;
            checkpoint.mode = mode;
            checkpoint.nets = nets.nets;
            checkpoint.svm = model;
            bcnn::save_checkpoint(checkpoint,
                                  (fs::path(train_flags.out) / "checkpoint.bcnn").string());
            echo_config(train, train_flags.out);
            std::cout << "mode " << bcnn::to_string(mode) << "\n"
                      << "final losses:";
            for (double loss : nets.final_losses) {
                std::cout << " " << loss;
            }
            std::cout << "\ntrain accuracy: "
                      << bcnn::format_percent(bcnn::svm_accuracy(model, train_features))
                      << "\ntest accuracy:  "
                      << bcnn::format_percent(bcnn::svm_accuracy(model, test_features)) << "\n";
        } else if (gradcheck_cmd->parsed()) {
            const bcnn::ArchitectureSpec spec = resolve_spec(grad_flags.spec);
            bcnn::Rng rng(grad_flags.seed);
            bcnn::Network net =
                bcnn::Network::initialized(spec, 1.0, rng);
            bcnn::Tensor batch(bcnn::Shape{2, spec.input().height, spec.input().width,
                                           spec.input().channels});
            for (double& v : batch.data()) {
                v = rng.uniform();
            }
            bcnn::GradCheckConfig config;
            config.tolerance = grad_flags.tolerance;
            config.max_samples_per_tensor = grad_flags.samples;
            config.seed = grad_flags.seed;
            const bcnn::GradCheckReport result =
                bcnn::gradient_check(net, batch, {0, 1}, config);
            std::printf("checked %d sampled parameters\n", result.checked);
            std::printf("worst relative error %.3e at %s[%lld] (analytic %.6e, numeric %.6e)\n",
                        result.worst.rel_error, result.worst.layer.c_str(),
                        static_cast<long long>(result.worst.index), result.worst.analytic,
                        result.worst.numeric);
            echo_config(gradcheck_cmd, "");
            if (!result.pass) {
                std::cerr << "gradient check failed tolerance " << grad_flags.tolerance << "\n";
                return kExitTraining;
            }
        } else if (experiment->parsed()) {
            const bcnn::ExperimentConfig config = to_config(experiment_flags);
            if (experiment_flags.verbose) {
                std::cout << "running " << config.runs << " simulations on "
                          << config.dataset.describe() << " with " << config.workers
                          << " worker(s)\n";
            }
            const bcnn::RunReport result = run_experiment(config);
            bcnn::emit_report(result, experiment_flags.out);
            echo_config(experiment, experiment_flags.out);
            std::cout << render_table(result);
            std::cout << "report written to " << experiment_flags.out << "\n";
        } else if (report_cmd->parsed()) {
            const bcnn::RunReport parsed = bcnn::parse_report(report_flags.in);
            std::cout << render_table(parsed);
            if (!report_flags.out.empty()) {
                bcnn::emit_report(parsed, report_flags.out);
            }
            echo_config(report_cmd, report_flags.out);
        }
        return 0;
    } catch (const bcnn::TrainingError& e) {
        std::cerr << "training error: " << e.what() << "\n";
        return kExitTraining;
    } catch (const bcnn::OutputError& e) {
        std::cerr << "output error: " << e.what() << "\n";
        return kExitOutput;
    } catch (const bcnn::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const bcnn::InputError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const bcnn::Error& e) {
        // ParamError, SpecError, ShapeError, BoundsError, StateError
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}

} // namespace

int main(int argc, char** argv) {
    return dispatch(argc, argv);
}
