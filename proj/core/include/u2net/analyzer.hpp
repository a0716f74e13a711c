#ifndef U2NET_ANALYZER_HPP
#define U2NET_ANALYZER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "u2net/network.hpp"
#include "u2net/rsu.hpp"

namespace u2net {

// FLOPs are reported as 2 x multiply-accumulates throughout.
inline constexpr double kFlopsPerMac = 2.0;

enum class BlockFamily { pln, res, dse, inc, rsu };

// A block to cost: one of the comparison families (plain, residual-like,
// dense-like, inception-like) or an RSU-L / RSU-LF with channel counts.
struct BlockKind {
    BlockFamily family = BlockFamily::rsu;
    int height = 0;    // RSU only
    bool dilated = false;
    std::int64_t c_in = 0;
    std::int64_t mid = 0;
    std::int64_t c_out = 0;

    // Parses "RSU-7:3:32:64", "RSU-4F:512:256:512", "PLN:3:64:64", ...
    static BlockKind parse(const std::string& text);
    std::string str() const;
};

struct LayerCost {
    std::string name;
    std::int64_t out_h = 0;
    std::int64_t out_w = 0;
    std::int64_t out_c = 0;
    std::int64_t macs = 0;
    std::int64_t params = 0;
};

struct CostReport {
    std::string label;
    std::vector<LayerCost> layers;
    std::int64_t total_macs = 0;
    std::int64_t total_params = 0;

    double gflops() const { return kFlopsPerMac * static_cast<double>(total_macs) * 1e-9; }
    std::string to_json() const;
};

struct ParamCount {
    std::int64_t values = 0;    // everything a checkpoint serializes
    std::int64_t trainable = 0; // conv weights/biases + BN gamma/beta
    std::int64_t bytes = 0;     // values * 4 (32-bit storage)
};

// Closed-form parameter accounting: each 3x3 conv contributes
// k^2*C_in*C_out + C_out, each batch-norm 4*C (2*C trainable plus the two
// running statistics).
ParamCount count_params(const RsuSpec& spec, bool with_batchnorm = true);
ParamCount count_params(const NetworkConfig& config);

// Analytic MAC counting at an input of (h, w); RSU internals are costed at
// their true (ceil-halved) resolutions.
CostReport flops(const BlockKind& kind, std::int64_t h, std::int64_t w);

// Whole-network cost at (h, w): all eleven stages at their stage
// resolutions plus side and fusion heads.
CostReport network_flops(const NetworkConfig& config, std::int64_t h, std::int64_t w);

struct QuadraticFit {
    double a = 0.0; // constant
    double b = 0.0; // linear
    double c = 0.0; // quadratic
    double max_rel_residual = 0.0;
};

// Least-squares fit of f(m) = a + b m + c m^2 through >= 3 samples.
QuadraticFit fit_quadratic(const std::vector<double>& m, const std::vector<double>& f);

struct CurvePoint {
    std::string kind;
    std::int64_t m = 0;
    double gflops = 0.0;
};

struct CostCurve {
    std::vector<CurvePoint> points; // all kinds, ordered kind-major
    std::vector<std::pair<std::string, QuadraticFit>> fits;
};

// FLOPs-vs-M series for each block kind with its middle channels swept over
// m_values, plus fitted quadratic coefficients.
CostCurve cost_curve(const std::vector<BlockKind>& kinds, const std::vector<std::int64_t>& m_values,
                     std::int64_t h, std::int64_t w);

void save_curve_csv(const CostCurve& curve, const std::string& path);
std::string curve_csv(const CostCurve& curve); // "kind,M,gflops" rows

struct StageShapeRow {
    std::string stage;
    std::int64_t in_c = 0, in_h = 0, in_w = 0;
    std::int64_t out_c = 0, out_h = 0, out_w = 0;
};

// Resolution/channel table of every stage plus the side heads at a given
// input size.
std::vector<StageShapeRow> stage_shapes(const NetworkConfig& config, std::int64_t h, std::int64_t w);

} // namespace u2net

#endif
