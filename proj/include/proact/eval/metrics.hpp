#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "proact/core/linalg.hpp"
#include "proact/motion/chunk.hpp"
#include "proact/scenario/synthetic.hpp"

namespace proact::eval {

struct MetricReport {
    std::string metric;
    double value = 0.0;
    nlohmann::json config = nlohmann::json::object();
    std::size_t reference_count = 0;
    std::size_t generated_count = 0;
    std::vector<std::string> notes;

    nlohmann::json to_json() const;
};

// Per-chunk statistics: [mean per coordinate | std per coordinate].
RowVector chunk_features(const Matrix& motion);

struct Gaussian {
    RowVector mean;
    Matrix covariance;
};

Gaussian fit_gaussian(const Matrix& samples);

// ||mu1 - mu2||^2 + tr(S1 + S2 - 2 (S1 S2)^(1/2)). When a covariance is singular,
// eps * I is added to both and *regularized is set.
double frechet_distance(const Gaussian& a, const Gaussian& b, double eps = 1e-6, bool* regularized = nullptr);

// Frechet distance between Gaussian fits of seeded random projections of chunk_features.
MetricReport fgd(const std::vector<Matrix>& reference, const std::vector<Matrix>& generated,
                 std::uint64_t projection_seed, int projected_dims = 16);

// Joint-speed envelope over rotation columns: central differences, moving-average smoothed.
std::vector<double> speed_envelope(const Matrix& motion, int rotation_columns, int smooth_radius = 1);
// Local minima of the speed envelope.
std::vector<int> motion_beats(const Matrix& motion, int rotation_columns, int smooth_radius = 1);

struct BeatAlignScore {
    double sum = 0.0;
    std::size_t count = 0;
};

// Sum of exp(-d^2 / (2 sigma^2)) over motion beats, d = distance to the nearest audio beat.
BeatAlignScore beat_align_terms(const std::vector<int>& motion_beats, const std::vector<int>& audio_beats,
                                double sigma);

// Mean over all detected motion beats in the set. Throws when no motion beats are found.
MetricReport beat_align(const std::vector<Matrix>& motions, const std::vector<std::vector<int>>& audio_beats,
                        int rotation_columns, double sigma = 3.0);

// Mean feature distance over k seeded random pairs; k <= 0 uses every unordered pair.
MetricReport diversity_k(const std::vector<Matrix>& generated, int k, std::uint64_t seed);

struct ContinuityReport {
    std::vector<double> boundary_deltas;  // step norm across each chunk seam
    double boundary_max = 0.0;
    double boundary_mean = 0.0;
    double within_p999 = 0.0;             // 99.9th percentile of within-chunk step norms
    double overlap_max_deviation = 0.0;   // cached vs clamped frames, when windows are given
    bool passed = false;                  // boundary_max <= within_p999

    nlohmann::json to_json() const;
};

// emitted: consecutive emitted chunks of one stream. windows (optional): the full sampled
// windows whose first `overlap` rows were clamped to the preceding emitted frames.
ContinuityReport continuity(const std::vector<motion::MotionChunk>& emitted,
                            const std::vector<motion::MotionChunk>* windows = nullptr, int overlap = 0);

// Max over offsets of the normalized cross-correlation between the template and the
// template's columns of the chunk; columns are centred over time before correlating.
double template_match(const Matrix& chunk, const scenario::IntentionTemplate& tmpl);

}  // namespace proact::eval
