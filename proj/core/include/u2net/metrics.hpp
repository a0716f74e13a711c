#ifndef U2NET_METRICS_HPP
#define U2NET_METRICS_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace u2net {

// Plain 2-D map used on the evaluation side (64-bit, no graph involvement).
struct GrayMap {
    std::int64_t h = 0;
    std::int64_t w = 0;
    std::vector<double> v;

    GrayMap() = default;
    GrayMap(std::int64_t height, std::int64_t width, double fill = 0.0)
        : h(height), w(width), v(static_cast<std::size_t>(height * width), fill) {}

    double& at(std::int64_t y, std::int64_t x) { return v[static_cast<std::size_t>(y * w + x)]; }
    double at(std::int64_t y, std::int64_t x) const { return v[static_cast<std::size_t>(y * w + x)]; }
    std::int64_t count() const { return h * w; }
};

GrayMap resize_map_bilinear(const GrayMap& map, std::int64_t h, std::int64_t w);

// Prediction in [0,1] against a binary ground truth of the same size.
struct EvalPair {
    GrayMap pred;
    GrayMap gt;

    void validate() const;
};

struct PrPoint {
    int threshold = 0;  // 0..255; prediction quantized to 0..255, binarized by >= t
    double precision = 0.0;
    double recall = 0.0;
};

// 256 dataset-averaged precision/recall pairs, one per threshold.
struct PrCurve {
    std::array<PrPoint, 256> points{};
};

// Per-threshold precision/recall averaged over images. Empty-set
// conventions: precision of an empty prediction is 1, recall of an empty
// ground truth is 1.
PrCurve pr_curve(const std::vector<EvalPair>& pairs);

// max over thresholds of (1+b2) P R / (b2 P + R), with F(0,0) = 0.
double max_f_beta(const PrCurve& curve, double beta2 = 0.3);

double mae(const EvalPair& pair);

// Weighted F-measure: errors smoothed by a 7x7 Gaussian (sigma 5) inside
// the foreground, background errors weighted by 2 - exp(ln(0.5)/5 * D)
// with D the Euclidean distance to the foreground. Undefined (nullopt)
// when the ground truth has no foreground.
std::optional<double> weighted_f_beta(const EvalPair& pair, double beta2 = 1.0);

// S = (1-alpha) S_region + alpha S_object. Degenerate ground truths fall
// back to 1 - mean(P) (all background) or mean(P) (all foreground).
double s_measure(const EvalPair& pair, double alpha = 0.5);

GrayMap binarize(const GrayMap& map, double threshold);

// One-pixel-wide boundary: XOR of the mask with its erosion by a 3x3
// all-ones structuring element (outside the image counts as background).
GrayMap extract_boundary(const GrayMap& binary_mask);

// F-measure over boundaries with a Euclidean slack of rho pixels. Both
// boundaries empty gives 1; F(0,0) is 0.
double relax_boundary_f(const EvalPair& pair, double rho = 3.0, double beta2 = 0.3,
                        double threshold = 0.5);

struct PerImageMetrics {
    std::string stem;
    double mae = 0.0;
    std::optional<double> weighted_f;
    double s_measure = 0.0;
    double relax_boundary_f = 0.0;
};

struct MetricReport {
    std::string dataset;
    std::int64_t n_images = 0;
    double max_f_beta = 0.0;
    double mae = 0.0;
    std::optional<double> weighted_f_beta; // mean over images where defined
    double s_measure = 0.0;
    double relax_f_boundary = 0.0;
    PrCurve pr_curve;
    std::vector<PerImageMetrics> per_image;

    std::string to_json() const;
    void save_json(const std::string& path) const;
    void save_csv(const std::string& path) const; // per-image rows
};

// Dataset evaluation over stem-named pairs, ordered by stem. Per-image
// metrics are arithmetic-averaged; the PR curve averages per threshold.
MetricReport evaluate_dataset(std::vector<std::pair<std::string, EvalPair>> pairs,
                              const std::string& dataset_name = "");

// Euclidean distance transform: per pixel, the distance to the nearest
// foreground pixel of `mask` and that pixel's flat index (ties resolved to
// the smallest row, then column). Used by the weighted F-measure.
void distance_transform(const GrayMap& mask, GrayMap& dist, std::vector<std::int64_t>& nearest);

} // namespace u2net

#endif
