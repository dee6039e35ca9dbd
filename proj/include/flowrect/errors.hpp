#ifndef FLOWRECT_ERRORS_HPP
#define FLOWRECT_ERRORS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace flowrect {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor dimensions do not line up, or a zero dimension was requested.
struct ShapeError : Error {
    using Error::Error;
};

// Scalar argument outside its valid range (t_max, alpha, delta, ...).
struct DomainError : Error {
    using Error::Error;
};

// Non-finite values fed into a model evaluation.
struct NumericError : Error {
    using Error::Error;
};

// Malformed tensor/checkpoint file; carries the byte offset of the defect.
struct FormatError : Error {
    FormatError(const std::string& msg, std::uint64_t offset)
        : Error(msg + " (byte offset " + std::to_string(offset) + ")"), byte_offset(offset) {}
    std::uint64_t byte_offset;
};

struct IoError : Error {
    using Error::Error;
};

// Latent blew up mid-sampling; reports where and under which lambda.
struct DivergenceError : Error {
    DivergenceError(int step_index, double lambda, const std::string& detail)
        : Error("divergence at step " + std::to_string(step_index) +
                " (lambda=" + std::to_string(lambda) + "): " + detail),
          step(step_index),
          rectification_scale(lambda) {}
    int step;
    double rectification_scale;
};

}  // namespace flowrect

#endif
