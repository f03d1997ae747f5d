#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bcnn/network.hpp"
#include "bcnn/routing.hpp"
#include "bcnn/svm.hpp"

namespace bcnn {

/// Container for trained hemisphere networks plus the optional SVM head.
///
/// Binary layout (all integers and doubles little-endian):
///   magic "BCW1", format version u32
///   routing mode u32, network count u32, svm flag u32
///   per network: spec hash u64, spec block (input dims, class count, per
///   block conv/lrn/pool fields), then the named parameter tensors as
///   (name, dims, f64 payload)
///   svm (when flagged): lambda f64, bias f64, weight count u64, weights
struct Checkpoint {
    RoutingMode mode = RoutingMode::Mono;
    std::vector<Network> nets;
    std::optional<SvmModel> svm;
};

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

} // namespace bcnn
