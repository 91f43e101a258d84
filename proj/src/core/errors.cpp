#include "proact/core/errors.hpp"

#include <sstream>

namespace proact {

namespace {
std::string overlap_message(std::size_t frame, std::size_t column, double deviation) {
    std::ostringstream os;
    os << "overlap mismatch at frame " << frame << ", column " << column << " (deviation " << deviation << ")";
    return os.str();
}
}  // namespace

OverlapMismatch::OverlapMismatch(std::size_t f, std::size_t c, double d)
    : std::runtime_error(overlap_message(f, c, d)), frame(f), column(c), deviation(d) {}

NonFiniteLoss::NonFiniteLoss(std::size_t b)
    : std::runtime_error("non-finite loss at batch index " + std::to_string(b)), batch_index(b) {}

SolverDiverged::SolverDiverged(int s)
    : std::runtime_error("non-finite state at solver step " + std::to_string(s)), step(s) {}

OutOfVocabulary::OutOfVocabulary(const std::string& t)
    : std::invalid_argument("out-of-vocabulary token '" + t + "'"), token(t) {}

StreamStarvation::StreamStarvation(long long needed_end, long long available_end)
    : std::runtime_error("stream starvation: audio needed up to frame " + std::to_string(needed_end) +
                         " but only " + std::to_string(available_end) + " available") {}

RangeViolation::RangeViolation(const std::string& q, double v, double b)
    : std::invalid_argument(q + " = " + std::to_string(v) + " exceeds bound " + std::to_string(b)),
      quantity(q), value(v), bound(b) {}

}  // namespace proact
