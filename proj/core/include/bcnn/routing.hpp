#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bcnn/network.hpp"
#include "bcnn/svm.hpp"
#include "bcnn/tensor.hpp"

namespace bcnn {

struct StereoSample {
    Tensor left_eye;  // (1, h, w, c)
    Tensor right_eye; // same shape
    int label = 0;    // {0, 1}
    std::string pair_id;
};

/// How eye images reach the hemisphere networks.
///   Mono        - one network, both eye images as independent samples
///   Chiasma     - two networks; each sees one visual field of BOTH eyes
///   Achiasma    - two networks; each sees whole images of ONE eye
///   MonoChiasma - chiasma wiring applied to each image independently
enum class RoutingMode { Mono, Chiasma, Achiasma, MonoChiasma };

std::string to_string(RoutingMode mode);
/// Accepts the CLI names: mono, bcnn1, bcnn2, mono-chiasma.
RoutingMode routing_mode_from_string(const std::string& name);
int lane_count(RoutingMode mode); // 1 for Mono, otherwise 2

/// Left field gets ceil(w/2) columns, right field the remainder, so widths
/// always cover the image exactly.
std::pair<Tensor, Tensor> split_visual_fields(const Tensor& image);

struct StreamSample {
    Tensor image;
    int label = 0;
    std::string source_id;
};

/// Per-hemisphere training streams; lanes[0] is the left-component lane
/// (left fields or left eyes), lanes[1] the right-component lane. Mono has a
/// single lane. Order is stable: pair order, left eye before right eye.
struct TrainingStreams {
    std::vector<std::vector<StreamSample>> lanes;
};
TrainingStreams build_training_streams(const std::vector<StereoSample>& samples,
                                       RoutingMode mode);

struct HemisphereNets {
    RoutingMode mode = RoutingMode::Mono;
    std::vector<Network> nets; // one per lane
    std::vector<double> final_losses;
};

/// Train one network per lane on its stream. The spec argument describes the
/// full-width input; field modes derive per-lane specs via with_input, which
/// re-validates (and throws SpecError when the halved width collapses a
/// layer). Each lane trains from its own derived seed.
HemisphereNets train_routed(const std::vector<StereoSample>& samples, RoutingMode mode,
                            const ArchitectureSpec& spec, const TrainConfig& config,
                            std::uint64_t seed);

/// SVM samples for one stereo pair under the mode's assembly rule:
///   Chiasma      2 per pair (per eye image: left-field features then
///                right-field features)
///   Achiasma     1 per pair (left-eye features then right-eye features)
///   Mono         2 per pair (whole-image features)
///   MonoChiasma  2 per pair (per image: its own two fields)
std::vector<AssembledFeatures> assemble_features(const StereoSample& sample, RoutingMode mode,
                                                 const HemisphereNets& nets);
std::vector<AssembledFeatures> assemble_features(const std::vector<StereoSample>& samples,
                                                 RoutingMode mode, const HemisphereNets& nets);

} // namespace bcnn
