#pragma once

#include <iosfwd>
#include <string>

#include "proact/motion/chunk.hpp"

namespace proact::motion {

// Newline-delimited JSON, one record per frame, keys in this order:
//   {"index": <global frame index>, "values": [v_0, ..., v_{W-1}]}
// Values are written with round-trip precision.
void write_chunk_ndjson(std::ostream& out, const MotionChunk& chunk);
// Reads consecutive frame records; indices must be contiguous.
MotionChunk read_chunk_ndjson(std::istream& in, SkeletonRef skeleton);

// Binary columnar dump, little-endian:
//   magic "PRMC" | u32 version (=1) | u32 frame_width | u64 frame_count | i64 start_index
//   then frame_width columns, each frame_count float64 values (column c, frames 0..n-1).
void write_chunk_binary(std::ostream& out, const MotionChunk& chunk);
MotionChunk read_chunk_binary(std::istream& in, SkeletonRef skeleton);

}  // namespace proact::motion
