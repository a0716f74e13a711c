#include "u2net/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "u2net/error.hpp"
#include "u2net/parallel.hpp"

namespace u2net {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double f_beta(double precision, double recall, double beta2) {
    const double denom = beta2 * precision + recall;
    if (denom == 0.0) return 0.0;
    return (1.0 + beta2) * precision * recall / denom;
}

bool is_binary(const GrayMap& m) {
    for (double x : m.v)
        if (x != 0.0 && x != 1.0) return false;
    return true;
}

} // namespace

GrayMap resize_map_bilinear(const GrayMap& map, std::int64_t h, std::int64_t w) {
    if (h < 1 || w < 1) throw ConfigError("resize_map_bilinear: target must be >= 1x1");
    GrayMap out(h, w);
    const double sy = static_cast<double>(map.h) / static_cast<double>(h);
    const double sx = static_cast<double>(map.w) / static_cast<double>(w);
    for (std::int64_t y = 0; y < h; ++y) {
        double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0,
                               static_cast<double>(map.h - 1));
        const auto y0 = static_cast<std::int64_t>(std::floor(fy));
        const auto y1 = std::min(y0 + 1, map.h - 1);
        const double wy = fy - static_cast<double>(y0);
        for (std::int64_t x = 0; x < w; ++x) {
            double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(map.w - 1));
            const auto x0 = static_cast<std::int64_t>(std::floor(fx));
            const auto x1 = std::min(x0 + 1, map.w - 1);
            const double wx = fx - static_cast<double>(x0);
            out.at(y, x) = (1.0 - wy) * ((1.0 - wx) * map.at(y0, x0) + wx * map.at(y0, x1)) +
                           wy * ((1.0 - wx) * map.at(y1, x0) + wx * map.at(y1, x1));
        }
    }
    return out;
}

void EvalPair::validate() const {
    if (pred.h != gt.h || pred.w != gt.w)
        throw ConfigError("evaluation pair size mismatch");
    if (!is_binary(gt)) throw ConfigError("ground truth mask must be binary");
}

// ---------------------------------------------------------------------------
// PR curve / F-measure / MAE

PrCurve pr_curve(const std::vector<EvalPair>& pairs) {
    if (pairs.empty()) throw DataError("pr_curve: no evaluation pairs");

    std::array<double, 256> precision_sum{};
    std::array<double, 256> recall_sum{};
    for (const auto& pair : pairs) {
        pair.validate();
        // Histogram of quantized prediction levels, split by ground truth,
        // turned into >= t counts by a suffix sum.
        std::array<std::int64_t, 256> pos{};
        std::array<std::int64_t, 256> neg{};
        std::int64_t gt_total = 0;
        for (std::int64_t i = 0; i < pair.pred.count(); ++i) {
            const auto q = static_cast<int>(
                std::llround(pair.pred.v[static_cast<std::size_t>(i)] * 255.0));
            if (pair.gt.v[static_cast<std::size_t>(i)] != 0.0) {
                ++pos[static_cast<std::size_t>(q)];
                ++gt_total;
            } else {
                ++neg[static_cast<std::size_t>(q)];
            }
        }
        std::int64_t tp = 0, fp = 0;
        std::array<std::int64_t, 256> tp_at{}, fp_at{};
        for (int t = 255; t >= 0; --t) {
            tp += pos[static_cast<std::size_t>(t)];
            fp += neg[static_cast<std::size_t>(t)];
            tp_at[static_cast<std::size_t>(t)] = tp;
            fp_at[static_cast<std::size_t>(t)] = fp;
        }
        for (int t = 0; t < 256; ++t) {
            const std::int64_t tpt = tp_at[static_cast<std::size_t>(t)];
            const std::int64_t predicted = tpt + fp_at[static_cast<std::size_t>(t)];
            precision_sum[static_cast<std::size_t>(t)] +=
                predicted == 0 ? 1.0 : static_cast<double>(tpt) / static_cast<double>(predicted);
            recall_sum[static_cast<std::size_t>(t)] +=
                gt_total == 0 ? 1.0 : static_cast<double>(tpt) / static_cast<double>(gt_total);
        }
    }

    PrCurve curve;
    const auto n = static_cast<double>(pairs.size());
    for (int t = 0; t < 256; ++t) {
        curve.points[static_cast<std::size_t>(t)] = {
            t, precision_sum[static_cast<std::size_t>(t)] / n,
            recall_sum[static_cast<std::size_t>(t)] / n};
    }
    return curve;
}

double max_f_beta(const PrCurve& curve, double beta2) {
    double best = 0.0;
    for (const auto& p : curve.points)
        best = std::max(best, f_beta(p.precision, p.recall, beta2));
    return best;
}

double mae(const EvalPair& pair) {
    pair.validate();
    double sum = 0.0;
    for (std::int64_t i = 0; i < pair.pred.count(); ++i)
        sum += std::abs(pair.pred.v[static_cast<std::size_t>(i)] -
                        pair.gt.v[static_cast<std::size_t>(i)]);
    return sum / static_cast<double>(pair.pred.count());
}

// ---------------------------------------------------------------------------
// Distance transform (exact Euclidean, with nearest-pixel index)

void distance_transform(const GrayMap& mask, GrayMap& dist, std::vector<std::int64_t>& nearest) {
    const std::int64_t h = mask.h, w = mask.w;
    dist = GrayMap(h, w, std::numeric_limits<double>::infinity());
    nearest.assign(static_cast<std::size_t>(h * w), -1);

    // Nearest foreground column within each row (ties to the left).
    const std::int64_t inf = h * w + h + w + 1;
    std::vector<std::int64_t> rowdist(static_cast<std::size_t>(h * w), inf);
    std::vector<std::int64_t> rowcol(static_cast<std::size_t>(h * w), -1);
    for (std::int64_t y = 0; y < h; ++y) {
        std::int64_t last = -inf;
        for (std::int64_t x = 0; x < w; ++x) {
            if (mask.at(y, x) != 0.0) last = x;
            rowdist[static_cast<std::size_t>(y * w + x)] = x - last;
            rowcol[static_cast<std::size_t>(y * w + x)] = last;
        }
        last = inf;
        for (std::int64_t x = w - 1; x >= 0; --x) {
            if (mask.at(y, x) != 0.0) last = x;
            // Strict improvement keeps the left candidate on ties.
            if (last - x < rowdist[static_cast<std::size_t>(y * w + x)]) {
                rowdist[static_cast<std::size_t>(y * w + x)] = last - x;
                rowcol[static_cast<std::size_t>(y * w + x)] = last;
            }
        }
    }

#pragma omp parallel for schedule(static) if (h * w > 4096 && thread_count() > 1)
    for (std::int64_t x = 0; x < w; ++x) {
        for (std::int64_t y = 0; y < h; ++y) {
            double best = std::numeric_limits<double>::infinity();
            std::int64_t best_idx = -1;
            for (std::int64_t yy = 0; yy < h; ++yy) {
                const std::int64_t rd = rowdist[static_cast<std::size_t>(yy * w + x)];
                if (rd >= inf) continue;
                const double d2 = static_cast<double>((y - yy) * (y - yy) + rd * rd);
                if (d2 < best) {
                    best = d2;
                    best_idx = yy * w + rowcol[static_cast<std::size_t>(yy * w + x)];
                }
            }
            dist.at(y, x) = best_idx < 0 ? std::numeric_limits<double>::infinity()
                                         : std::sqrt(best);
            nearest[static_cast<std::size_t>(y * w + x)] = best_idx;
        }
    }
}

// ---------------------------------------------------------------------------
// Weighted F-measure

std::optional<double> weighted_f_beta(const EvalPair& pair, double beta2) {
    pair.validate();
    const std::int64_t h = pair.gt.h, w = pair.gt.w, n = h * w;

    double gt_sum = 0.0;
    for (double g : pair.gt.v) gt_sum += g;
    if (gt_sum == 0.0) return std::nullopt;

    GrayMap dist;
    std::vector<std::int64_t> nearest;
    distance_transform(pair.gt, dist, nearest);

    // Absolute error, with background errors replaced by the error at the
    // nearest foreground pixel before smoothing.
    std::vector<double> err(static_cast<std::size_t>(n));
    std::vector<double> err_t(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        err[static_cast<std::size_t>(i)] = std::abs(pair.pred.v[static_cast<std::size_t>(i)] -
                                                    pair.gt.v[static_cast<std::size_t>(i)]);
    }
    for (std::int64_t i = 0; i < n; ++i) {
        err_t[static_cast<std::size_t>(i)] =
            pair.gt.v[static_cast<std::size_t>(i)] != 0.0
                ? err[static_cast<std::size_t>(i)]
                : err[static_cast<std::size_t>(nearest[static_cast<std::size_t>(i)])];
    }

    // 7x7 Gaussian (sigma 5), normalized, zero-padded.
    constexpr int kHalf = 3;
    double kernel[7][7];
    double ksum = 0.0;
    for (int dy = -kHalf; dy <= kHalf; ++dy)
        for (int dx = -kHalf; dx <= kHalf; ++dx) {
            const double v = std::exp(-(dy * dy + dx * dx) / (2.0 * 5.0 * 5.0));
            kernel[dy + kHalf][dx + kHalf] = v;
            ksum += v;
        }
    for (auto& row : kernel)
        for (double& v : row) v /= ksum;

    std::vector<double> smoothed(static_cast<std::size_t>(n), 0.0);
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int dy = -kHalf; dy <= kHalf; ++dy) {
                const std::int64_t yy = y + dy;
                if (yy < 0 || yy >= h) continue;
                for (int dx = -kHalf; dx <= kHalf; ++dx) {
                    const std::int64_t xx = x + dx;
                    if (xx < 0 || xx >= w) continue;
                    acc += kernel[dy + kHalf][dx + kHalf] *
                           err_t[static_cast<std::size_t>(yy * w + xx)];
                }
            }
            smoothed[static_cast<std::size_t>(y * w + x)] = acc;
        }
    }

    // Foreground keeps min(E, smoothed E); background errors decay with
    // distance from the foreground.
    double ew_fg_sum = 0.0, ew_bg_sum = 0.0;
    const double decay = std::log(0.5) / 5.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const bool fg = pair.gt.v[static_cast<std::size_t>(i)] != 0.0;
        double e = err[static_cast<std::size_t>(i)];
        if (fg && smoothed[static_cast<std::size_t>(i)] < e)
            e = smoothed[static_cast<std::size_t>(i)];
        if (fg) {
            ew_fg_sum += e;
        } else {
            const double b = 2.0 - std::exp(decay * dist.v[static_cast<std::size_t>(i)]);
            ew_bg_sum += e * b;
        }
    }

    const double tpw = gt_sum - ew_fg_sum;
    const double fpw = ew_bg_sum;
    const double recall = 1.0 - ew_fg_sum / gt_sum;
    const double precision = tpw / (kEps + tpw + fpw);
    return (1.0 + beta2) * recall * precision / (kEps + beta2 * recall + precision);
}

// ---------------------------------------------------------------------------
// S-measure

namespace {

double object_score(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double sd = 0.0;
    if (values.size() > 1) {
        for (double v : values) sd += (v - mean) * (v - mean);
        sd = std::sqrt(sd / static_cast<double>(values.size() - 1));
    }
    return 2.0 * mean / (mean * mean + 1.0 + sd + kEps);
}

double s_object(const GrayMap& pred, const GrayMap& gt) {
    std::vector<double> fg, bg;
    double u = 0.0;
    for (std::int64_t i = 0; i < gt.count(); ++i) {
        if (gt.v[static_cast<std::size_t>(i)] != 0.0) {
            fg.push_back(pred.v[static_cast<std::size_t>(i)]);
            u += 1.0;
        } else {
            bg.push_back(1.0 - pred.v[static_cast<std::size_t>(i)]);
        }
    }
    u /= static_cast<double>(gt.count());
    return u * object_score(fg) + (1.0 - u) * object_score(bg);
}

// Centroid of the foreground, 1-based with round-half-away, matching the
// convention of the reference region split.
void centroid_1based(const GrayMap& gt, std::int64_t& cx, std::int64_t& cy) {
    double total = 0.0, sx = 0.0, sy = 0.0;
    for (std::int64_t y = 0; y < gt.h; ++y)
        for (std::int64_t x = 0; x < gt.w; ++x)
            if (gt.at(y, x) != 0.0) {
                total += 1.0;
                sx += static_cast<double>(x + 1);
                sy += static_cast<double>(y + 1);
            }
    if (total == 0.0) {
        cx = (gt.w + 1) / 2;
        cy = (gt.h + 1) / 2;
    } else {
        cx = std::llround(sx / total);
        cy = std::llround(sy / total);
    }
}

double ssim_block(const GrayMap& pred, const GrayMap& gt,
                  std::int64_t y0, std::int64_t y1, std::int64_t x0, std::int64_t x1) {
    const auto n = static_cast<double>((y1 - y0) * (x1 - x0));
    double mx = 0.0, my = 0.0;
    for (std::int64_t y = y0; y < y1; ++y)
        for (std::int64_t x = x0; x < x1; ++x) {
            mx += pred.at(y, x);
            my += gt.at(y, x);
        }
    mx /= n;
    my /= n;
    double vx = 0.0, vy = 0.0, vxy = 0.0;
    for (std::int64_t y = y0; y < y1; ++y)
        for (std::int64_t x = x0; x < x1; ++x) {
            const double dx = pred.at(y, x) - mx;
            const double dy = gt.at(y, x) - my;
            vx += dx * dx;
            vy += dy * dy;
            vxy += dx * dy;
        }
    vx /= n - 1.0 + kEps;
    vy /= n - 1.0 + kEps;
    vxy /= n - 1.0 + kEps;

    const double alpha = 4.0 * mx * my * vxy;
    const double beta = (mx * mx + my * my) * (vx + vy);
    if (alpha != 0.0) return alpha / (beta + kEps);
    if (beta == 0.0) return 1.0;
    return 0.0;
}

double s_region(const GrayMap& pred, const GrayMap& gt) {
    std::int64_t cx = 0, cy = 0;
    centroid_1based(gt, cx, cy);
    // 1-based centroid (X,Y) splits rows into [0,Y) / [Y,h) and columns into
    // [0,X) / [X,w); empty quadrants carry zero weight and are skipped.
    const auto total = static_cast<double>(gt.count());
    struct Block {
        std::int64_t y0, y1, x0, x1;
    };
    const Block blocks[4] = {
        {0, cy, 0, cx},
        {0, cy, cx, gt.w},
        {cy, gt.h, 0, cx},
        {cy, gt.h, cx, gt.w},
    };
    double score = 0.0;
    for (const auto& b : blocks) {
        const auto area = static_cast<double>((b.y1 - b.y0) * (b.x1 - b.x0));
        if (area <= 0.0) continue;
        score += area / total * ssim_block(pred, gt, b.y0, b.y1, b.x0, b.x1);
    }
    return score;
}

} // namespace

double s_measure(const EvalPair& pair, double alpha) {
    pair.validate();
    double gt_mean = 0.0, pred_mean = 0.0;
    for (std::int64_t i = 0; i < pair.gt.count(); ++i) {
        gt_mean += pair.gt.v[static_cast<std::size_t>(i)];
        pred_mean += pair.pred.v[static_cast<std::size_t>(i)];
    }
    gt_mean /= static_cast<double>(pair.gt.count());
    pred_mean /= static_cast<double>(pair.pred.count());

    if (gt_mean == 0.0) return 1.0 - pred_mean;
    if (gt_mean == 1.0) return pred_mean;

    const double s = (1.0 - alpha) * s_region(pair.pred, pair.gt) +
                     alpha * s_object(pair.pred, pair.gt);
    return std::max(s, 0.0);
}

// ---------------------------------------------------------------------------
// Boundary measures

GrayMap binarize(const GrayMap& map, double threshold) {
    GrayMap out(map.h, map.w);
    for (std::int64_t i = 0; i < map.count(); ++i)
        out.v[static_cast<std::size_t>(i)] = map.v[static_cast<std::size_t>(i)] >= threshold ? 1.0 : 0.0;
    return out;
}

GrayMap extract_boundary(const GrayMap& mask) {
    GrayMap out(mask.h, mask.w);
    for (std::int64_t y = 0; y < mask.h; ++y) {
        for (std::int64_t x = 0; x < mask.w; ++x) {
            if (mask.at(y, x) == 0.0) continue;
            bool survives = true;
            for (std::int64_t dy = -1; dy <= 1 && survives; ++dy)
                for (std::int64_t dx = -1; dx <= 1; ++dx) {
                    const std::int64_t yy = y + dy, xx = x + dx;
                    if (yy < 0 || yy >= mask.h || xx < 0 || xx >= mask.w ||
                        mask.at(yy, xx) == 0.0) {
                        survives = false;
                        break;
                    }
                }
            // XOR with the erosion: boundary = foreground minus interior.
            if (!survives) out.at(y, x) = 1.0;
        }
    }
    return out;
}

namespace {

// Fraction of foreground pixels of `from` within Euclidean distance rho of
// any foreground pixel of `to`. Empty `from` gives 1.
double boundary_match_fraction(const GrayMap& from, const GrayMap& to, double rho) {
    const auto r = static_cast<std::int64_t>(std::floor(rho));
    const double rho2 = rho * rho;
    std::int64_t total = 0, matched = 0;
    for (std::int64_t y = 0; y < from.h; ++y) {
        for (std::int64_t x = 0; x < from.w; ++x) {
            if (from.at(y, x) == 0.0) continue;
            ++total;
            bool hit = false;
            for (std::int64_t dy = -r; dy <= r && !hit; ++dy) {
                const std::int64_t yy = y + dy;
                if (yy < 0 || yy >= to.h) continue;
                for (std::int64_t dx = -r; dx <= r; ++dx) {
                    const std::int64_t xx = x + dx;
                    if (xx < 0 || xx >= to.w) continue;
                    if (static_cast<double>(dy * dy + dx * dx) <= rho2 && to.at(yy, xx) != 0.0) {
                        hit = true;
                        break;
                    }
                }
            }
            if (hit) ++matched;
        }
    }
    if (total == 0) return 1.0;
    return static_cast<double>(matched) / static_cast<double>(total);
}

} // namespace

double relax_boundary_f(const EvalPair& pair, double rho, double beta2, double threshold) {
    pair.validate();
    const GrayMap pred_bin = binarize(pair.pred, threshold);
    const GrayMap pred_boundary = extract_boundary(pred_bin);
    const GrayMap gt_boundary = extract_boundary(pair.gt);

    const double precision = boundary_match_fraction(pred_boundary, gt_boundary, rho);
    const double recall = boundary_match_fraction(gt_boundary, pred_boundary, rho);
    return f_beta(precision, recall, beta2);
}

// ---------------------------------------------------------------------------
// Dataset evaluation and report IO

MetricReport evaluate_dataset(std::vector<std::pair<std::string, EvalPair>> pairs,
                              const std::string& dataset_name) {
    if (pairs.empty()) throw DataError("evaluate_dataset: no pairs");
    std::sort(pairs.begin(), pairs.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    MetricReport report;
    report.dataset = dataset_name;
    report.n_images = static_cast<std::int64_t>(pairs.size());
    report.per_image.resize(pairs.size());

    const auto n = static_cast<std::int64_t>(pairs.size());
#pragma omp parallel for schedule(dynamic) if (n > 1 && thread_count() > 1)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& [stem, pair] = pairs[static_cast<std::size_t>(i)];
        auto& row = report.per_image[static_cast<std::size_t>(i)];
        row.stem = stem;
        row.mae = mae(pair);
        row.weighted_f = weighted_f_beta(pair);
        row.s_measure = s_measure(pair);
        row.relax_boundary_f = relax_boundary_f(pair);
    }

    double mae_sum = 0.0, sm_sum = 0.0, rf_sum = 0.0, wf_sum = 0.0;
    std::int64_t wf_count = 0;
    for (const auto& row : report.per_image) {
        mae_sum += row.mae;
        sm_sum += row.s_measure;
        rf_sum += row.relax_boundary_f;
        if (row.weighted_f) {
            wf_sum += *row.weighted_f;
            ++wf_count;
        }
    }
    report.mae = mae_sum / static_cast<double>(n);
    report.s_measure = sm_sum / static_cast<double>(n);
    report.relax_f_boundary = rf_sum / static_cast<double>(n);
    if (wf_count > 0) report.weighted_f_beta = wf_sum / static_cast<double>(wf_count);

    std::vector<EvalPair> just_pairs;
    just_pairs.reserve(pairs.size());
    for (auto& [stem, pair] : pairs) just_pairs.push_back(std::move(pair));
    report.pr_curve = pr_curve(just_pairs);
    report.max_f_beta = u2net::max_f_beta(report.pr_curve);
    return report;
}

std::string MetricReport::to_json() const {
    nlohmann::json j;
    j["dataset"] = dataset;
    j["n_images"] = n_images;
    j["max_f_beta"] = max_f_beta;
    j["mae"] = mae;
    if (weighted_f_beta)
        j["wf_beta"] = *weighted_f_beta;
    else
        j["wf_beta"] = nullptr;
    j["s_measure"] = s_measure;
    j["relax_f_boundary"] = relax_f_boundary;
    j["pr_curve"] = nlohmann::json::array();
    for (const auto& p : pr_curve.points)
        j["pr_curve"].push_back({{"t", p.threshold}, {"precision", p.precision}, {"recall", p.recall}});
    return j.dump(2);
}

void MetricReport::save_json(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write report to " + path);
    os << to_json() << "\n";
}

void MetricReport::save_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write per-image CSV to " + path);
    os << "stem,mae,wf_beta,s_measure,relax_f_boundary\n";
    for (const auto& row : per_image) {
        os << row.stem << "," << row.mae << ",";
        if (row.weighted_f) os << *row.weighted_f;
        os << "," << row.s_measure << "," << row.relax_boundary_f << "\n";
    }
}

} // namespace u2net
