#pragma once

#include <stdexcept>
#include <string>

namespace bcnn {

/// Base class for every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dimension mismatches and invalid tensor shapes.
struct ShapeError : Error { using Error::Error; };

/// Out-of-range slice or element indices.
struct BoundsError : Error { using Error::Error; };

/// Invalid configuration or parameter values.
struct ParamError : Error { using Error::Error; };

/// Malformed caller input (sample lists, feature vectors, ...).
struct InputError : Error { using Error::Error; };

/// Operation attempted on an object in the wrong state.
struct StateError : Error { using Error::Error; };

/// Architecture validation failures; message names the offending layer.
struct SpecError : Error { using Error::Error; };

/// Divergence (non-finite loss) during optimization.
struct TrainingError : Error { using Error::Error; };

/// Dataset ingestion, image format and split problems.
struct DataError : Error { using Error::Error; };

/// Unwritable report or checkpoint destinations.
struct OutputError : Error { using Error::Error; };

} // namespace bcnn
