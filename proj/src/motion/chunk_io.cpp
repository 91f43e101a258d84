#include "proact/motion/chunk_io.hpp"

#include <istream>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "proact/core/binary_io.hpp"
#include "proact/core/errors.hpp"

namespace proact::motion {

using nlohmann::ordered_json;

void write_chunk_ndjson(std::ostream& out, const MotionChunk& chunk) {
    for (Eigen::Index t = 0; t < chunk.length(); ++t) {
        ordered_json rec;
        rec["index"] = chunk.start_index() + t;
        auto f = chunk.frame(t);
        rec["values"] = std::vector<double>(f.begin(), f.end());
        out << rec.dump() << '\n';
    }
}

MotionChunk read_chunk_ndjson(std::istream& in, SkeletonRef skeleton) {
    std::vector<std::vector<double>> rows;
    std::int64_t start = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto rec = nlohmann::json::parse(line);
        const auto index = rec.at("index").get<std::int64_t>();
        if (rows.empty()) {
            start = index;
        } else if (index != start + static_cast<std::int64_t>(rows.size())) {
            throw std::runtime_error("chunk ndjson: non-contiguous frame index " + std::to_string(index));
        }
        rows.push_back(rec.at("values").get<std::vector<double>>());
        if (static_cast<int>(rows.back().size()) != skeleton->frame_width()) {
            throw ShapeError("chunk ndjson: frame width mismatch at index " + std::to_string(index));
        }
    }
    Matrix frames(static_cast<Eigen::Index>(rows.size()), skeleton->frame_width());
    for (std::size_t t = 0; t < rows.size(); ++t) {
        for (std::size_t c = 0; c < rows[t].size(); ++c) frames(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = rows[t][c];
    }
    return MotionChunk(std::move(frames), start, std::move(skeleton));
}

void write_chunk_binary(std::ostream& out, const MotionChunk& chunk) {
    binary::write_magic(out, "PRMC");
    binary::write_le<std::uint32_t>(out, 1);
    binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(chunk.width()));
    binary::write_le<std::uint64_t>(out, static_cast<std::uint64_t>(chunk.length()));
    binary::write_le<std::int64_t>(out, chunk.start_index());
    for (Eigen::Index c = 0; c < chunk.width(); ++c) {
        for (Eigen::Index t = 0; t < chunk.length(); ++t) binary::write_le<double>(out, chunk.frames()(t, c));
    }
}

MotionChunk read_chunk_binary(std::istream& in, SkeletonRef skeleton) {
    binary::expect_magic(in, "PRMC");
    const auto version = binary::read_le<std::uint32_t>(in);
    if (version != 1) throw std::runtime_error("unsupported chunk dump version " + std::to_string(version));
    const auto width = binary::read_le<std::uint32_t>(in);
    const auto count = binary::read_le<std::uint64_t>(in);
    const auto start = binary::read_le<std::int64_t>(in);
    if (static_cast<int>(width) != skeleton->frame_width()) throw ShapeError("chunk dump width mismatch");
    Matrix frames(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(width));
    for (Eigen::Index c = 0; c < frames.cols(); ++c) {
        for (Eigen::Index t = 0; t < frames.rows(); ++t) frames(t, c) = binary::read_le<double>(in);
    }
    return MotionChunk(std::move(frames), start, std::move(skeleton));
}

}  // namespace proact::motion
