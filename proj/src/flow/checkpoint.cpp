#include "proact/flow/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace proact::flow {

void write_network_header(std::ostream& out, std::uint32_t section, const NetworkShape& shape) {
    binary::write_magic(out, "PRFW");
    binary::write_le<std::uint32_t>(out, kCheckpointVersion);
    binary::write_le<std::uint32_t>(out, section);
    for (int v : {shape.blocks, shape.hidden, shape.ff_hidden, shape.kernel, shape.time_dims, shape.frame_width,
                  shape.audio_dims}) {
        binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(v));
    }
}

NetworkShape read_network_header(std::istream& in, std::uint32_t expected_section) {
    binary::expect_magic(in, "PRFW");
    if (binary::read_le<std::uint32_t>(in) != kCheckpointVersion) throw std::runtime_error("unsupported checkpoint version");
    const auto section = binary::read_le<std::uint32_t>(in);
    if (section != expected_section) {
        throw std::runtime_error("checkpoint section tag " + std::to_string(section) + ", expected " +
                                 std::to_string(expected_section));
    }
    NetworkShape s;
    for (int* v : {&s.blocks, &s.hidden, &s.ff_hidden, &s.kernel, &s.time_dims, &s.frame_width, &s.audio_dims}) {
        *v = static_cast<int>(binary::read_le<std::uint32_t>(in));
    }
    s.validate();
    return s;
}

void save_network(std::ostream& out, const VelocityNetwork& net) {
    write_network_header(out, kBaseSection, net.shape());
    write_parameters(out, net, net.parameter_count());
    const auto& n = net.norm();
    binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(n.mean.size()));
    for (const RowVector* v : {&n.mean, &n.scale}) {
        for (Eigen::Index i = 0; i < v->size(); ++i) binary::write_le<double>(out, (*v)[i]);
    }
}

VelocityNetwork load_network(std::istream& in) {
    auto net = VelocityNetwork::zeros(read_network_header(in, kBaseSection));
    read_parameters(in, net, net.parameter_count());
    const auto width = binary::read_le<std::uint32_t>(in);
    if (width != 0 && static_cast<int>(width) != net.shape().frame_width) throw std::runtime_error("feature norm width mismatch");
    auto& n = net.norm();
    if (width) {
        for (RowVector* v : {&n.mean, &n.scale}) {
            v->resize(width);
            for (Eigen::Index i = 0; i < v->size(); ++i) (*v)[i] = binary::read_le<double>(in);
        }
    }
    return net;
}

void save_network(const std::string& path, const VelocityNetwork& net) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    save_network(out, net);
}

VelocityNetwork load_network(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    return load_network(in);
}

}  // namespace proact::flow
