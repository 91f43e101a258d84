#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "proact/core/binary_io.hpp"
#include "proact/flow/network.hpp"

namespace proact::flow {

// Network weights, little-endian:
//   magic "PRFW" | u32 version (=1) | u32 section tag
//   | u32 blocks | u32 hidden | u32 ff_hidden | u32 kernel | u32 time_dims | u32 frame_width | u32 audio_dims
//   | section-specific header (see control/branch.hpp for tag 2)
//   | u64 parameter count | parameter blocks in declaration order, each row-major float32.
inline constexpr std::uint32_t kCheckpointVersion = 2;
inline constexpr std::uint32_t kBaseSection = 1;
inline constexpr std::uint32_t kBranchSection = 2;

void write_network_header(std::ostream& out, std::uint32_t section, const NetworkShape& shape);
NetworkShape read_network_header(std::istream& in, std::uint32_t expected_section);

template <typename Params>
void write_parameters(std::ostream& out, const Params& params, std::size_t count) {
    binary::write_le<std::uint64_t>(out, count);
    params.for_each_parameter([&](const std::string&, const Matrix& m) {
        for (Eigen::Index i = 0; i < m.size(); ++i) binary::write_le<float>(out, static_cast<float>(m.data()[i]));
    });
}

template <typename Params>
void read_parameters(std::istream& in, Params& params, std::size_t count) {
    if (binary::read_le<std::uint64_t>(in) != count) throw std::runtime_error("checkpoint parameter count mismatch");
    params.for_each_parameter([&](const std::string&, Matrix& m) {
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = binary::read_le<float>(in);
    });
}

void save_network(std::ostream& out, const VelocityNetwork& net);
VelocityNetwork load_network(std::istream& in);
void save_network(const std::string& path, const VelocityNetwork& net);
VelocityNetwork load_network(const std::string& path);

}  // namespace proact::flow
