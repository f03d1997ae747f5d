#include "bcnn/routing.hpp"

#include <algorithm>
#include <numeric>

#include "bcnn/error.hpp"
#include "bcnn/rng.hpp"

namespace bcnn {

std::string to_string(RoutingMode mode) {
    switch (mode) {
        case RoutingMode::Mono: return "mono";
        case RoutingMode::Chiasma: return "bcnn1";
        case RoutingMode::Achiasma: return "bcnn2";
        case RoutingMode::MonoChiasma: return "mono-chiasma";
    }
    return "?";
}

RoutingMode routing_mode_from_string(const std::string& name) {
    if (name == "mono") return RoutingMode::Mono;
    if (name == "bcnn1") return RoutingMode::Chiasma;
    if (name == "bcnn2") return RoutingMode::Achiasma;
    if (name == "mono-chiasma") return RoutingMode::MonoChiasma;
    throw ParamError("unknown routing mode '" + name +
                     "' (expected mono | bcnn1 | bcnn2 | mono-chiasma)");
}

int lane_count(RoutingMode mode) {
    return mode == RoutingMode::Mono ? 1 : 2;
}

std::pair<Tensor, Tensor> split_visual_fields(const Tensor& image) {
    const int w = image.shape().width;
    if (w < 2) {
        throw InputError("split_visual_fields: width must be >= 2");
    }
    const int mid = (w + 1) / 2;
    return {slice_width(image, 0, mid), slice_width(image, mid, w)};
}

namespace {

void check_samples(const std::vector<StereoSample>& samples) {
    if (samples.empty()) {
        throw InputError("routing: empty sample list");
    }
    const Shape& ref = samples.front().left_eye.shape();
    for (const StereoSample& s : samples) {
        if (!(s.left_eye.shape() == ref) || !(s.right_eye.shape() == ref)) {
            throw InputError("routing: inconsistent image shapes in sample list (pair '" +
                             s.pair_id + "')");
        }
        if (s.label < 0 || s.label > 1) {
            throw InputError("routing: label out of range for pair '" + s.pair_id + "'");
        }
    }
}

} // namespace

TrainingStreams build_training_streams(const std::vector<StereoSample>& samples,
                                       RoutingMode mode) {
    check_samples(samples);
    TrainingStreams streams;
    streams.lanes.resize(static_cast<std::size_t>(lane_count(mode)));
    for (const StereoSample& s : samples) {
        switch (mode) {
            case RoutingMode::Mono:
                streams.lanes[0].push_back({s.left_eye, s.label, s.pair_id + ":L"});
                streams.lanes[0].push_back({s.right_eye, s.label, s.pair_id + ":R"});
                break;
            case RoutingMode::Chiasma:
            case RoutingMode::MonoChiasma: {
                // Both wirings cross each image's fields; each visual field
                // is its own training sample.
                auto [left_of_left, right_of_left] = split_visual_fields(s.left_eye);
                auto [left_of_right, right_of_right] = split_visual_fields(s.right_eye);
                streams.lanes[0].push_back({std::move(left_of_left), s.label, s.pair_id + ":L"});
                streams.lanes[0].push_back({std::move(left_of_right), s.label, s.pair_id + ":R"});
                streams.lanes[1].push_back({std::move(right_of_left), s.label, s.pair_id + ":L"});
                streams.lanes[1].push_back({std::move(right_of_right), s.label, s.pair_id + ":R"});
                break;
            }
            case RoutingMode::Achiasma:
                streams.lanes[0].push_back({s.left_eye, s.label, s.pair_id});
                streams.lanes[1].push_back({s.right_eye, s.label, s.pair_id});
                break;
        }
    }
    return streams;
}

namespace {

Network train_lane(const std::vector<StreamSample>& stream, const ArchitectureSpec& spec,
                   const TrainConfig& config, std::uint64_t seed, double* final_loss) {
    Rng init_rng(derive_seed(seed, {0x696e6974ull})); // "init"
    Network net = Network::initialized(spec, config.weight_init_stddev, init_rng);
    SgdState state = SgdState::zeros_like(net);
    Rng shuffle_rng(derive_seed(seed, {0x73687566ull})); // "shuf"

    std::vector<std::size_t> order(stream.size());
    std::iota(order.begin(), order.end(), 0);
    const Shape image_shape = stream.front().image.shape();

    double last_epoch_loss = 0.0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t count = std::min(static_cast<std::size_t>(config.batch_size),
                                               order.size() - start);
            Tensor batch(Shape{static_cast<int>(count), image_shape.height, image_shape.width,
                               image_shape.channels});
            std::vector<int> labels(count);
            const std::size_t image_size = static_cast<std::size_t>(image_shape.count());
            for (std::size_t i = 0; i < count; ++i) {
                const StreamSample& s = stream[order[start + i]];
                std::copy(s.image.data().begin(), s.image.data().end(),
                          batch.data().begin() + i * image_size);
                labels[i] = s.label;
            }
            epoch_loss += train_step(net, batch, labels, config, state);
            ++batches;
        }
        last_epoch_loss = epoch_loss / std::max(batches, 1);
    }
    if (final_loss != nullptr) {
        *final_loss = last_epoch_loss;
    }
    return net;
}

} // namespace

HemisphereNets train_routed(const std::vector<StereoSample>& samples, RoutingMode mode,
                            const ArchitectureSpec& spec, const TrainConfig& config,
                            std::uint64_t seed) {
    config.validate();
    const TrainingStreams streams = build_training_streams(samples, mode);

    HemisphereNets result;
    result.mode = mode;
    for (std::size_t lane = 0; lane < streams.lanes.size(); ++lane) {
        const Shape lane_shape = streams.lanes[lane].front().image.shape();
        const ArchitectureSpec lane_spec =
            spec.input().height == lane_shape.height && spec.input().width == lane_shape.width
                ? spec
                : spec.with_input(lane_shape.height, lane_shape.width);
        double loss = 0.0;
        result.nets.push_back(train_lane(streams.lanes[lane], lane_spec, config,
                                         derive_seed(seed, {static_cast<std::uint64_t>(lane)}),
                                         &loss));
        result.final_losses.push_back(loss);
    }
    return result;
}

namespace {

void check_nets(RoutingMode mode, const HemisphereNets& nets) {
    if (nets.mode != mode) {
        throw StateError("assemble_features: networks were trained for mode '" +
                         to_string(nets.mode) + "', not '" + to_string(mode) + "'");
    }
    if (static_cast<int>(nets.nets.size()) != lane_count(mode)) {
        throw StateError("assemble_features: expected " + std::to_string(lane_count(mode)) +
                         " hemisphere networks, have " + std::to_string(nets.nets.size()));
    }
}

} // namespace

std::vector<AssembledFeatures> assemble_features(const StereoSample& sample, RoutingMode mode,
                                                 const HemisphereNets& nets) {
    check_nets(mode, nets);
    std::vector<AssembledFeatures> out;
    auto concat_two = [](std::vector<double> left, const std::vector<double>& right) {
        left.insert(left.end(), right.begin(), right.end());
        return left;
    };
    switch (mode) {
        case RoutingMode::Mono:
            out.push_back({extract_features(nets.nets[0], sample.left_eye),
                           sample.pair_id + ":L", sample.label});
            out.push_back({extract_features(nets.nets[0], sample.right_eye),
                           sample.pair_id + ":R", sample.label});
            break;
        case RoutingMode::Chiasma:
        case RoutingMode::MonoChiasma: {
            for (const auto& [eye, suffix] :
                 {std::pair<const Tensor&, const char*>{sample.left_eye, ":L"},
                  std::pair<const Tensor&, const char*>{sample.right_eye, ":R"}}) {
                auto [left_field, right_field] = split_visual_fields(eye);
                out.push_back({concat_two(extract_features(nets.nets[0], left_field),
                                          extract_features(nets.nets[1], right_field)),
                               sample.pair_id + suffix, sample.label});
            }
            break;
        }
        case RoutingMode::Achiasma:
            out.push_back({concat_two(extract_features(nets.nets[0], sample.left_eye),
                                      extract_features(nets.nets[1], sample.right_eye)),
                           sample.pair_id, sample.label});
            break;
    }
    return out;
}

std::vector<AssembledFeatures> assemble_features(const std::vector<StereoSample>& samples,
                                                 RoutingMode mode, const HemisphereNets& nets) {
    check_samples(samples);
    check_nets(mode, nets);
    std::vector<AssembledFeatures> out;
    for (const StereoSample& s : samples) {
        std::vector<AssembledFeatures> per_sample = assemble_features(s, mode, nets);
        for (AssembledFeatures& f : per_sample) {
            out.push_back(std::move(f));
        }
    }
    return out;
}

} // namespace bcnn
