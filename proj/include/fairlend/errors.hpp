#pragma once

#include <stdexcept>
#include <string>

namespace fairlend {

// Invalid configuration or malformed input files. The CLI maps this to exit 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Training failures: single-class labels, non-finite loss.
class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

// Threshold calibration failures: empty group, group without positives.
class CalibrationError : public std::runtime_error {
public:
    explicit CalibrationError(const std::string& what) : std::runtime_error(what) {}
};

// Structural misuse of populations and decision sets (empty input, size mismatch).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fairlend
