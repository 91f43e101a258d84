#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace proact {

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct OverlapMismatch : std::runtime_error {
    OverlapMismatch(std::size_t frame, std::size_t column, double deviation);
    std::size_t frame;
    std::size_t column;
    double deviation;
};

struct NonFiniteLoss : std::runtime_error {
    explicit NonFiniteLoss(std::size_t batch_index);
    std::size_t batch_index;
};

struct SolverDiverged : std::runtime_error {
    explicit SolverDiverged(int step);
    int step;
};

struct OutOfVocabulary : std::invalid_argument {
    explicit OutOfVocabulary(const std::string& token);
    std::string token;
};

struct StreamStarvation : std::runtime_error {
    StreamStarvation(long long needed_end, long long available_end);
};

struct RangeViolation : std::invalid_argument {
    RangeViolation(const std::string& quantity, double value, double bound);
    std::string quantity;
    double value;
    double bound;
};

}  // namespace proact
