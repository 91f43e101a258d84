#pragma once

#include <stdexcept>

#include "proact/core/binary_io.hpp"

namespace proact::training {

template <typename Params>
void save_training_state(std::ostream& out, std::int64_t step, std::uint64_t config_hash, const Params& params,
                         const Adam& adam) {
    binary::write_magic(out, "PRTC");
    binary::write_le<std::uint32_t>(out, 1);
    binary::write_le<std::int64_t>(out, step);
    binary::write_le<std::uint64_t>(out, config_hash);
    std::uint64_t count = 0;
    params.for_each_parameter([&](const std::string&, const Matrix& m) { count += static_cast<std::uint64_t>(m.size()); });
    binary::write_le<std::uint64_t>(out, count);
    params.for_each_parameter([&](const std::string&, const Matrix& m) {
        for (Eigen::Index i = 0; i < m.size(); ++i) binary::write_le<double>(out, m.data()[i]);
    });
    adam.save(out);
}

template <typename Params>
std::int64_t load_training_state(std::istream& in, std::uint64_t config_hash, Params& params, Adam& adam) {
    binary::expect_magic(in, "PRTC");
    if (binary::read_le<std::uint32_t>(in) != 1) throw std::runtime_error("unsupported training state version");
    const auto step = binary::read_le<std::int64_t>(in);
    if (binary::read_le<std::uint64_t>(in) != config_hash) {
        throw std::runtime_error("training state was written under a different config");
    }
    std::uint64_t count = 0;
    params.for_each_parameter([&](const std::string&, const Matrix& m) { count += static_cast<std::uint64_t>(m.size()); });
    if (binary::read_le<std::uint64_t>(in) != count) throw std::runtime_error("training state parameter count mismatch");
    params.for_each_parameter([&](const std::string&, Matrix& m) {
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = binary::read_le<double>(in);
    });
    adam.load(in);
    return step;
}

}  // namespace proact::training
