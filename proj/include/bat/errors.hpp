#pragma once

#include <stdexcept>
#include <string>

namespace bat {

// Base class for all contract violations raised by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// event_io
struct MalformedRecord : Error { using Error::Error; };
struct OutOfBounds : Error { using Error::Error; };
struct NonMonotonicTime : Error { using Error::Error; };
struct InvalidInterval : Error { using Error::Error; };

// voxelizer
struct BinCountTooSmall : Error { using Error::Error; };
struct NotDivisible : Error { using Error::Error; };

// tensor core
struct ShapeMismatch : Error { using Error::Error; };
struct NotScalar : Error { using Error::Error; };
struct NoTape : Error { using Error::Error; };
struct TapeConsumed : Error { using Error::Error; };
struct NumericError : Error { using Error::Error; };

// model
struct NotDivisibleByStride : Error { using Error::Error; };
struct BadMode : Error { using Error::Error; };
struct BadConfig : Error { using Error::Error; };
struct ListLengthMismatch : Error { using Error::Error; };
struct BadFactor : Error { using Error::Error; };

// training / evaluation
struct EmptyMask : Error { using Error::Error; };
struct DivergedLoss : Error { using Error::Error; };

// file handling
struct IoError : Error { using Error::Error; };

}  // namespace bat
