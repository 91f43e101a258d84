#include "proact/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "proact/core/errors.hpp"
#include "proact/core/rng.hpp"
#include "proact/core/stats.hpp"
#include "proact/motion/chunk_ops.hpp"

namespace proact::eval {

nlohmann::json MetricReport::to_json() const {
    return {{"metric", metric},
            {"value", value},
            {"config", config},
            {"reference_count", reference_count},
            {"generated_count", generated_count},
            {"notes", notes}};
}

RowVector chunk_features(const Matrix& motion) {
    if (motion.rows() < 1) throw std::invalid_argument("chunk_features: empty chunk");
    const Eigen::Index w = motion.cols();
    RowVector f(2 * w);
    const RowVector mu = motion.colwise().mean();
    f.head(w) = mu;
    f.tail(w) = ((motion.rowwise() - mu).array().square().colwise().sum() / static_cast<double>(motion.rows())).sqrt();
    return f;
}

Gaussian fit_gaussian(const Matrix& samples) {
    if (samples.rows() < 1) throw std::invalid_argument("fit_gaussian: no samples");
    Gaussian g;
    g.mean = samples.colwise().mean();
    const Matrix centred = samples.rowwise() - g.mean;
    const double denom = samples.rows() > 1 ? static_cast<double>(samples.rows() - 1) : 1.0;
    g.covariance = (centred.transpose() * centred) / denom;
    return g;
}

namespace {

Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

double min_eigen(const Eigen::MatrixXd& m) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

Matrix feature_matrix(const std::vector<Matrix>& set) {
    Matrix f(static_cast<Eigen::Index>(set.size()), set.front().cols() * 2);
    for (std::size_t i = 0; i < set.size(); ++i) f.row(static_cast<Eigen::Index>(i)) = chunk_features(set[i]);
    return f;
}

}  // namespace

double frechet_distance(const Gaussian& a, const Gaussian& b, double eps, bool* regularized) {
    if (a.mean.size() != b.mean.size()) throw ShapeError("frechet_distance: dimension mismatch");
    Eigen::MatrixXd s1 = a.covariance, s2 = b.covariance;
    const bool singular = min_eigen(s1) < eps || min_eigen(s2) < eps;
    if (singular) {
        s1 += eps * Eigen::MatrixXd::Identity(s1.rows(), s1.cols());
        s2 += eps * Eigen::MatrixXd::Identity(s2.rows(), s2.cols());
    }
    if (regularized) *regularized = singular;
    const Eigen::MatrixXd r1 = sym_sqrt(s1);
    const Eigen::MatrixXd inner = r1 * s2 * r1;
    const double cross = sym_sqrt(0.5 * (inner + inner.transpose())).trace();
    const double d = (a.mean - b.mean).squaredNorm() + s1.trace() + s2.trace() - 2.0 * cross;
    return std::max(d, 0.0);
}

MetricReport fgd(const std::vector<Matrix>& reference, const std::vector<Matrix>& generated,
                 std::uint64_t projection_seed, int projected_dims) {
    if (reference.empty() || generated.empty()) throw std::invalid_argument("fgd: both sets must be nonempty");
    const Eigen::Index w = reference.front().cols();
    for (const auto* set : {&reference, &generated}) {
        for (const auto& m : *set) {
            if (m.cols() != w) throw ShapeError("fgd: frame width mismatch");
        }
    }
    Rng rng(mix_seed(projection_seed, 0xf6d));
    const Matrix proj = standard_normal(rng, 2 * w, projected_dims) / std::sqrt(static_cast<double>(2 * w));
    bool reg = false;
    MetricReport r;
    r.metric = "fgd";
    r.value = frechet_distance(fit_gaussian(feature_matrix(reference) * proj),
                               fit_gaussian(feature_matrix(generated) * proj), 1e-6, &reg);
    r.config = {{"projection_seed", projection_seed},
                {"projected_dims", projected_dims},
                {"features", "random projection of per-chunk mean and std per coordinate"}};
    r.reference_count = reference.size();
    r.generated_count = generated.size();
    if (reg) r.notes.push_back("singular covariance, added 1e-6 * I");
    return r;
}

std::vector<double> speed_envelope(const Matrix& motion, int rotation_columns, int smooth_radius) {
    const Eigen::Index n = motion.rows();
    if (n < 2) return {};
    const auto rot = motion.leftCols(rotation_columns);
    std::vector<double> raw(static_cast<std::size_t>(n));
    for (Eigen::Index t = 0; t < n; ++t) {
        const Eigen::Index a = std::max<Eigen::Index>(t - 1, 0), b = std::min<Eigen::Index>(t + 1, n - 1);
        raw[static_cast<std::size_t>(t)] = (rot.row(b) - rot.row(a)).norm() / static_cast<double>(b - a);
    }
    std::vector<double> out(raw.size());
    for (Eigen::Index t = 0; t < n; ++t) {
        double sum = 0;
        int count = 0;
        for (Eigen::Index k = t - smooth_radius; k <= t + smooth_radius; ++k) {
            if (k < 0 || k >= n) continue;
            sum += raw[static_cast<std::size_t>(k)];
            ++count;
        }
        out[static_cast<std::size_t>(t)] = sum / count;
    }
    return out;
}

std::vector<int> motion_beats(const Matrix& motion, int rotation_columns, int smooth_radius) {
    const auto env = speed_envelope(motion, rotation_columns, smooth_radius);
    std::vector<int> beats;
    for (std::size_t t = 1; t + 1 < env.size(); ++t) {
        if (env[t] < env[t - 1] && env[t] <= env[t + 1]) beats.push_back(static_cast<int>(t));
    }
    return beats;
}

BeatAlignScore beat_align_terms(const std::vector<int>& motion, const std::vector<int>& audio, double sigma) {
    if (!(sigma > 0)) throw std::invalid_argument("beat_align: sigma must be positive");
    BeatAlignScore s;
    for (int m : motion) {
        double d = std::numeric_limits<double>::infinity();
        for (int a : audio) d = std::min(d, std::abs(static_cast<double>(m - a)));
        s.sum += std::isfinite(d) ? std::exp(-d * d / (2 * sigma * sigma)) : 0.0;
        ++s.count;
    }
    return s;
}

MetricReport beat_align(const std::vector<Matrix>& motions, const std::vector<std::vector<int>>& audio_beats,
                        int rotation_columns, double sigma) {
    if (motions.size() != audio_beats.size()) throw std::invalid_argument("beat_align: one beat list per motion");
    BeatAlignScore total;
    for (std::size_t i = 0; i < motions.size(); ++i) {
        const auto s = beat_align_terms(motion_beats(motions[i], rotation_columns), audio_beats[i], sigma);
        total.sum += s.sum;
        total.count += s.count;
    }
    if (total.count == 0) throw std::runtime_error("beat_align: no motion beats detected");
    MetricReport r;
    r.metric = "beat_align";
    r.value = total.sum / static_cast<double>(total.count);
    r.config = {{"sigma_frames", sigma}, {"motion_beats", total.count}};
    r.generated_count = motions.size();
    return r;
}

MetricReport diversity_k(const std::vector<Matrix>& generated, int k, std::uint64_t seed) {
    if (generated.size() < 2) throw std::invalid_argument("diversity_k: need at least two samples");
    const Matrix f = feature_matrix(generated);
    const auto n = static_cast<Eigen::Index>(generated.size());
    double sum = 0;
    std::size_t pairs = 0;
    if (k <= 0) {
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j) {
                sum += (f.row(i) - f.row(j)).norm();
                ++pairs;
            }
        }
    } else {
        Rng rng(mix_seed(seed, 0xd1f));
        std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
        for (int p = 0; p < k; ++p) {
            const Eigen::Index i = pick(rng);
            Eigen::Index j = pick(rng);
            while (j == i) j = pick(rng);
            sum += (f.row(i) - f.row(j)).norm();
            ++pairs;
        }
    }
    MetricReport r;
    r.metric = "diversity_k";
    r.value = sum / static_cast<double>(pairs);
    r.config = {{"k", k <= 0 ? nlohmann::json("all") : nlohmann::json(k)}, {"seed", seed}};
    r.generated_count = generated.size();
    return r;
}

nlohmann::json ContinuityReport::to_json() const {
    return {{"boundary_max", boundary_max},     {"boundary_mean", boundary_mean},
            {"within_p999", within_p999},       {"overlap_max_deviation", overlap_max_deviation},
            {"boundaries", boundary_deltas.size()}, {"passed", passed}};
}

ContinuityReport continuity(const std::vector<motion::MotionChunk>& emitted,
                            const std::vector<motion::MotionChunk>* windows, int overlap) {
    if (emitted.size() < 2) throw std::invalid_argument("continuity: need at least two chunks");
    ContinuityReport r;
    std::vector<double> within;
    for (std::size_t i = 0; i < emitted.size(); ++i) {
        const auto steps = motion::frame_step_norms(emitted[i].frames());
        within.insert(within.end(), steps.begin(), steps.end());
        if (i == 0) continue;
        const auto& prev = emitted[i - 1];
        if (emitted[i].start_index() != prev.end_index()) throw std::invalid_argument("continuity: chunks not contiguous");
        r.boundary_deltas.push_back((emitted[i].frames().row(0) - prev.frames().row(prev.length() - 1)).norm());
    }
    r.boundary_max = *std::max_element(r.boundary_deltas.begin(), r.boundary_deltas.end());
    r.boundary_mean = mean(r.boundary_deltas);
    r.within_p999 = within.empty() ? 0.0 : percentile(within, 99.9);
    if (windows && overlap > 0) {
        // Window i >= 1 starts `overlap` frames before emitted chunk i.
        for (std::size_t i = 1; i < windows->size() && i < emitted.size(); ++i) {
            const Matrix& prev = emitted[i - 1].frames();
            const Matrix cached = prev.bottomRows(std::min<Eigen::Index>(overlap, prev.rows()));
            const Matrix head = (*windows)[i].frames().topRows(cached.rows());
            r.overlap_max_deviation = std::max(r.overlap_max_deviation, (head - cached).cwiseAbs().maxCoeff());
        }
    }
    r.passed = r.boundary_max <= r.within_p999;
    return r;
}

double template_match(const Matrix& chunk, const scenario::IntentionTemplate& tmpl) {
    const Eigen::Index len = tmpl.length();
    if (len >= chunk.rows()) throw ShapeError("template_match: template must be shorter than the chunk");
    for (int c : tmpl.columns) {
        if (c < 0 || c >= chunk.cols()) throw ShapeError("template_match: template column outside chunk width");
    }
    const Matrix t = tmpl.values.rowwise() - tmpl.values.colwise().mean();
    const double tn = t.squaredNorm();
    double best = -1.0;
    for (Eigen::Index o = 0; o + len <= chunk.rows(); ++o) {
        Matrix x(len, static_cast<Eigen::Index>(tmpl.columns.size()));
        for (std::size_t k = 0; k < tmpl.columns.size(); ++k) {
            x.col(static_cast<Eigen::Index>(k)) = chunk.block(o, tmpl.columns[k], len, 1);
        }
        x = x.rowwise() - x.colwise().mean();
        const double denom = std::sqrt(tn * x.squaredNorm());
        if (denom <= 0) continue;
        best = std::max(best, (x.array() * t.array()).sum() / denom);
    }
    return best;
}

}  // namespace proact::eval
