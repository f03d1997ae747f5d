#pragma once

#include <cstdint>
#include <vector>

#include "bcnn/routing.hpp"

namespace bcnn {

/// Synthetic stereo scenes for desk-scale experiments. Class 0 renders
/// building-like facades (rectangle stacks with window grids), class 1
/// renders smooth blob fields; a configurable fraction of class-1 scenes
/// arranges its blobs in loose grids so the classes are not separable by
/// texture energy alone. The right eye re-renders the same scene with each
/// object shifted horizontally by its depth-scaled disparity.
struct SynthConfig {
    int height = 100;
    int width = 80;
    /// Disparity of the nearest object as a fraction of image width;
    /// 0 makes both eyes identical.
    double max_disparity_fraction = 0.04;
    /// Fraction of class-1 scenes drawn with grid-arranged blobs.
    double hard_fraction = 0.3;
    /// Brightness separation between facades and their windows.
    double window_contrast = 0.35;
};

/// n_pairs labelled scenes of one class, ids "c<class>-NNNN", drawn from the
/// given stream.
std::vector<StereoSample> synthesize_stereo(int n_pairs, int class_id, Rng& rng,
                                            const SynthConfig& config = {});

/// Balanced two-class dataset (class 0 entries first), derived streams per
/// class from the seed.
std::vector<StereoSample> synthesize_dataset(int pairs_per_class, std::uint64_t seed,
                                             const SynthConfig& config = {});

} // namespace bcnn
