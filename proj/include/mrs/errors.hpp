#pragma once

#include <stdexcept>
#include <string>

namespace mrs {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// signal
struct InvalidSignal : Error { using Error::Error; };
struct WindowOutOfRange : Error { using Error::Error; };
struct AxisMismatch : Error { using Error::Error; };

// basis
struct EmptyModel : Error { using Error::Error; };
struct InvalidLinewidth : Error { using Error::Error; };
struct DuplicateMetabolite : Error { using Error::Error; };

// datagen
struct UnsupportedDimension : Error { using Error::Error; };
struct UnknownMetabolite : Error { using Error::Error; };
struct DegenerateSample : Error { using Error::Error; };
struct NoBasis : Error { using Error::Error; };

// preprocess
struct InvalidCutoff : Error { using Error::Error; };
struct MissingAcquisition : Error { using Error::Error; };

// nn
struct ShapeError : Error { using Error::Error; };
struct DegenerateBatch : Error { using Error::Error; };
struct ArchitectureError : Error { using Error::Error; };
struct DivergenceError : Error { using Error::Error; };

// fitting
struct ConvergenceError : Error { using Error::Error; };

// eval
struct InvalidReduction : Error { using Error::Error; };
struct DegenerateRegression : Error { using Error::Error; };

// file formats
struct FormatError : Error {
    FormatError(const std::string& msg, size_t byte_offset)
        : Error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    size_t offset = 0;
};
struct VersionError : Error { using Error::Error; };

}  // namespace mrs
