#include "u2net/analyzer.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace u2net {

namespace {

std::int64_t ceil_half(std::int64_t x) { return (x + 1) / 2; }

struct Costing {
    std::vector<LayerCost> layers;
    bool with_bn = true;

    // One k x k convolution with bias, optionally followed by batch norm.
    void conv(const std::string& name, std::int64_t h, std::int64_t w,
              std::int64_t c_in, std::int64_t c_out, std::int64_t k, bool bn) {
        LayerCost l;
        l.name = name;
        l.out_h = h;
        l.out_w = w;
        l.out_c = c_out;
        l.macs = h * w * c_out * c_in * k * k;
        l.params = k * k * c_in * c_out + c_out;
        if (bn) l.params += 4 * c_out;
        layers.push_back(l);
    }

    void conv3(const std::string& name, std::int64_t h, std::int64_t w,
               std::int64_t c_in, std::int64_t c_out) {
        conv(name, h, w, c_in, c_out, 3, with_bn);
    }

    CostReport finish(std::string label) const {
        CostReport r;
        r.label = std::move(label);
        r.layers = layers;
        for (const auto& l : layers) {
            r.total_macs += l.macs;
            r.total_params += l.params;
        }
        return r;
    }
};

// Mirrors RsuBlock::forward shape-for-shape (ceil-mode halving between
// encoder levels in the standard form, constant resolution in the dilated
// form).
void cost_rsu(Costing& c, const RsuSpec& spec, std::int64_t h, std::int64_t w) {
    const int L = spec.height;
    c.conv3("x0", h, w, spec.c_in, spec.c_out);
    std::vector<std::pair<std::int64_t, std::int64_t>> enc_res;
    std::int64_t eh = h, ew = w;
    for (int i = 1; i <= L - 1; ++i) {
        if (!spec.dilated && i >= 2) {
            eh = ceil_half(eh);
            ew = ceil_half(ew);
        }
        c.conv3("e" + std::to_string(i), eh, ew, i == 1 ? spec.c_out : spec.mid, spec.mid);
        enc_res.emplace_back(eh, ew);
    }
    c.conv3("b", eh, ew, spec.mid, spec.mid);
    for (int i = L - 1; i >= 1; --i) {
        const auto [dh, dw] = enc_res[static_cast<std::size_t>(i - 1)];
        c.conv3("d" + std::to_string(i), dh, dw, 2 * spec.mid,
                i == 1 ? spec.c_out : spec.mid);
    }
}

void cost_family(Costing& c, const BlockKind& k, std::int64_t h, std::int64_t w) {
    switch (k.family) {
    case BlockFamily::pln:
        c.conv3("conv1", h, w, k.c_in, k.mid);
        c.conv3("conv2", h, w, k.mid, k.c_out);
        break;
    case BlockFamily::res:
        c.conv3("conv1", h, w, k.c_in, k.mid);
        c.conv3("conv2", h, w, k.mid, k.c_out);
        c.conv("shortcut", h, w, k.c_in, k.c_out, 1, c.with_bn);
        break;
    case BlockFamily::dse:
        // Three growth layers on the running concatenation, fused by 1x1.
        c.conv3("growth1", h, w, k.c_in, k.mid);
        c.conv3("growth2", h, w, k.c_in + k.mid, k.mid);
        c.conv3("growth3", h, w, k.c_in + 2 * k.mid, k.mid);
        c.conv("fuse", h, w, k.c_in + 3 * k.mid, k.c_out, 1, c.with_bn);
        break;
    case BlockFamily::inc:
        // Stem to M channels, four parallel dilated branches, 1x1 fusion.
        c.conv3("stem", h, w, k.c_in, k.mid);
        c.conv3("branch_d1", h, w, k.mid, k.mid);
        c.conv3("branch_d2", h, w, k.mid, k.mid);
        c.conv3("branch_d4", h, w, k.mid, k.mid);
        c.conv3("branch_d8", h, w, k.mid, k.mid);
        c.conv("fuse", h, w, 4 * k.mid, k.c_out, 1, c.with_bn);
        break;
    case BlockFamily::rsu: {
        RsuSpec spec{k.height, k.c_in, k.mid, k.c_out, k.dilated};
        cost_rsu(c, spec, h, w);
        break;
    }
    }
}

} // namespace

BlockKind BlockKind::parse(const std::string& text) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() != 4)
        throw ConfigError("block spec must be KIND:c_in:M:c_out, got '" + text + "'");

    BlockKind k;
    const std::string& fam = parts[0];
    if (fam == "PLN") k.family = BlockFamily::pln;
    else if (fam == "RES") k.family = BlockFamily::res;
    else if (fam == "DSE") k.family = BlockFamily::dse;
    else if (fam == "INC") k.family = BlockFamily::inc;
    else if (fam.rfind("RSU-", 0) == 0) {
        k.family = BlockFamily::rsu;
        std::string rest = fam.substr(4);
        if (!rest.empty() && rest.back() == 'F') {
            k.dilated = true;
            rest.pop_back();
        }
        try {
            k.height = std::stoi(rest);
        } catch (...) {
            throw ConfigError("bad RSU height in '" + text + "'");
        }
        if (k.height < 2) throw ConfigError("RSU height must be >= 2 in '" + text + "'");
    } else {
        throw ConfigError("unknown block family '" + fam + "'");
    }
    try {
        k.c_in = std::stoll(parts[1]);
        k.mid = std::stoll(parts[2]);
        k.c_out = std::stoll(parts[3]);
    } catch (...) {
        throw ConfigError("bad channel counts in '" + text + "'");
    }
    if (k.c_in < 1 || k.mid < 1 || k.c_out < 1)
        throw ConfigError("channel counts must be >= 1 in '" + text + "'");
    return k;
}

std::string BlockKind::str() const {
    std::string fam;
    switch (family) {
    case BlockFamily::pln: fam = "PLN"; break;
    case BlockFamily::res: fam = "RES"; break;
    case BlockFamily::dse: fam = "DSE"; break;
    case BlockFamily::inc: fam = "INC"; break;
    case BlockFamily::rsu:
        fam = "RSU-" + std::to_string(height) + (dilated ? "F" : "");
        break;
    }
    return fam + ":" + std::to_string(c_in) + ":" + std::to_string(mid) + ":" +
           std::to_string(c_out);
}

ParamCount count_params(const RsuSpec& spec, bool with_batchnorm) {
    spec.validate();
    Costing c;
    c.with_bn = with_batchnorm;
    cost_rsu(c, spec, 1, 1);
    ParamCount p;
    for (const auto& l : c.layers) {
        p.values += l.params;
        p.trainable += l.params;
        if (with_batchnorm) p.trainable -= 2 * l.out_c; // running stats
    }
    p.bytes = 4 * p.values;
    return p;
}

ParamCount count_params(const NetworkConfig& config) {
    config.validate();
    ParamCount p;
    for (const auto& s : config.encoders) {
        const ParamCount sp = count_params(s.rsu, config.use_batchnorm);
        p.values += sp.values;
        p.trainable += sp.trainable;
    }
    for (const auto& s : config.decoders) {
        const ParamCount sp = count_params(s.rsu, config.use_batchnorm);
        p.values += sp.values;
        p.trainable += sp.trainable;
    }
    // Side heads (3x3, no BN): De_1..De_5 outputs then En_6, plus the 1x1
    // fusion over six logit channels.
    for (int i = 0; i < 6; ++i) {
        const std::int64_t src = i < 5 ? config.decoders[static_cast<std::size_t>(4 - i)].rsu.c_out
                                       : config.encoders[5].rsu.c_out;
        p.values += 9 * src + 1;
        p.trainable += 9 * src + 1;
    }
    p.values += 6 + 1;
    p.trainable += 6 + 1;
    p.bytes = 4 * p.values;
    return p;
}

CostReport flops(const BlockKind& kind, std::int64_t h, std::int64_t w) {
    if (h < 1 || w < 1)
        throw ConfigError("flops: input size must be >= 1x1");
    Costing c;
    cost_family(c, kind, h, w);
    return c.finish(kind.str());
}

CostReport network_flops(const NetworkConfig& config, std::int64_t h, std::int64_t w) {
    config.validate();
    Costing c;
    c.with_bn = config.use_batchnorm;

    std::vector<std::pair<std::int64_t, std::int64_t>> enc_res;
    std::int64_t eh = h, ew = w;
    for (std::size_t i = 0; i < 6; ++i) {
        if (i > 0) {
            eh = ceil_half(eh);
            ew = ceil_half(ew);
        }
        Costing stage;
        stage.with_bn = config.use_batchnorm;
        cost_rsu(stage, config.encoders[i].rsu, eh, ew);
        CostReport r = stage.finish(config.encoders[i].name);
        c.layers.push_back({config.encoders[i].name, eh, ew,
                            config.encoders[i].rsu.c_out, r.total_macs, r.total_params});
        enc_res.emplace_back(eh, ew);
    }
    for (std::size_t i = 0; i < 5; ++i) {
        const auto [dh, dw] = enc_res[4 - i];
        Costing stage;
        stage.with_bn = config.use_batchnorm;
        cost_rsu(stage, config.decoders[i].rsu, dh, dw);
        CostReport r = stage.finish(config.decoders[i].name);
        c.layers.push_back({config.decoders[i].name, dh, dw,
                            config.decoders[i].rsu.c_out, r.total_macs, r.total_params});
    }
    for (int i = 0; i < 6; ++i) {
        const std::int64_t src = i < 5 ? config.decoders[static_cast<std::size_t>(4 - i)].rsu.c_out
                                       : config.encoders[5].rsu.c_out;
        const auto [sh, sw] = i < 5 ? enc_res[static_cast<std::size_t>(i)] : enc_res[5];
        c.conv("side" + std::to_string(i + 1), sh, sw, src, 1, 3, false);
    }
    c.conv("fuse", h, w, 6, 1, 1, false);
    return c.finish("network");
}

QuadraticFit fit_quadratic(const std::vector<double>& m, const std::vector<double>& f) {
    if (m.size() < 3 || m.size() != f.size())
        throw ConfigError("fit_quadratic: need at least 3 aligned samples");

    // Normalize the abscissa for conditioning, fit in long double, unscale.
    double m_max = 1.0;
    for (double v : m) m_max = std::max(m_max, std::abs(v));
    const auto n = static_cast<std::int64_t>(m.size());

    long double s[5] = {0, 0, 0, 0, 0};
    long double t[3] = {0, 0, 0};
    for (std::int64_t i = 0; i < n; ++i) {
        const long double u = m[static_cast<std::size_t>(i)] / m_max;
        long double up = 1.0L;
        for (int p = 0; p <= 4; ++p) {
            s[p] += up;
            if (p <= 2) t[p] += up * f[static_cast<std::size_t>(i)];
            up *= u;
        }
    }
    const long double a11 = s[0], a12 = s[1], a13 = s[2];
    const long double a22 = s[2], a23 = s[3], a33 = s[4];
    const long double det = a11 * (a22 * a33 - a23 * a23) - a12 * (a12 * a33 - a23 * a13) +
                            a13 * (a12 * a23 - a22 * a13);
    if (det == 0.0L) throw ConfigError("fit_quadratic: singular system");
    const long double d0 = t[0] * (a22 * a33 - a23 * a23) - a12 * (t[1] * a33 - a23 * t[2]) +
                           a13 * (t[1] * a23 - a22 * t[2]);
    const long double d1 = a11 * (t[1] * a33 - t[2] * a23) - t[0] * (a12 * a33 - a23 * a13) +
                           a13 * (a12 * t[2] - t[1] * a13);
    const long double d2 = a11 * (a22 * t[2] - a23 * t[1]) - a12 * (a12 * t[2] - t[1] * a13) +
                           t[0] * (a12 * a23 - a22 * a13);

    QuadraticFit fit;
    fit.a = static_cast<double>(d0 / det);
    fit.b = static_cast<double>(d1 / det) / m_max;
    fit.c = static_cast<double>(d2 / det) / (m_max * m_max);
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double predicted = fit.a + fit.b * m[i] + fit.c * m[i] * m[i];
        const double rel = std::abs(predicted - f[i]) / (std::abs(f[i]) + 1e-30);
        fit.max_rel_residual = std::max(fit.max_rel_residual, rel);
    }
    return fit;
}

CostCurve cost_curve(const std::vector<BlockKind>& kinds, const std::vector<std::int64_t>& m_values,
                     std::int64_t h, std::int64_t w) {
    if (m_values.size() < 3)
        throw ConfigError("cost_curve: need at least 3 M values for the quadratic fit");
    CostCurve curve;
    for (const auto& kind : kinds) {
        std::vector<double> ms, fs;
        for (std::int64_t m : m_values) {
            BlockKind k = kind;
            k.mid = m;
            const double gf = flops(k, h, w).gflops();
            curve.points.push_back({kind.str(), m, gf});
            ms.push_back(static_cast<double>(m));
            fs.push_back(gf);
        }
        curve.fits.emplace_back(kind.str(), fit_quadratic(ms, fs));
    }
    return curve;
}

std::string curve_csv(const CostCurve& curve) {
    std::ostringstream os;
    os << "kind,M,gflops\n";
    for (const auto& p : curve.points) os << p.kind << "," << p.m << "," << p.gflops << "\n";
    return os.str();
}

void save_curve_csv(const CostCurve& curve, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write curve CSV to " + path);
    os << curve_csv(curve);
}

std::vector<StageShapeRow> stage_shapes(const NetworkConfig& config, std::int64_t h, std::int64_t w) {
    config.validate();
    if (h < 32 || w < 32)
        throw ConfigError("stage_shapes: input must be at least 32x32");

    std::vector<StageShapeRow> rows;
    std::vector<std::pair<std::int64_t, std::int64_t>> enc_res;
    std::int64_t eh = h, ew = w;
    for (std::size_t i = 0; i < 6; ++i) {
        if (i > 0) {
            eh = ceil_half(eh);
            ew = ceil_half(ew);
        }
        rows.push_back({config.encoders[i].name, config.encoders[i].rsu.c_in, eh, ew,
                        config.encoders[i].rsu.c_out, eh, ew});
        enc_res.emplace_back(eh, ew);
    }
    for (std::size_t i = 0; i < 5; ++i) {
        const auto [dh, dw] = enc_res[4 - i];
        rows.push_back({config.decoders[i].name, config.decoders[i].rsu.c_in, dh, dw,
                        config.decoders[i].rsu.c_out, dh, dw});
    }
    for (int i = 0; i < 6; ++i) {
        const std::int64_t src = i < 5 ? config.decoders[static_cast<std::size_t>(4 - i)].rsu.c_out
                                       : config.encoders[5].rsu.c_out;
        const auto [sh, sw] = i < 5 ? enc_res[static_cast<std::size_t>(i)] : enc_res[5];
        rows.push_back({"side" + std::to_string(i + 1), src, sh, sw, 1, h, w});
    }
    rows.push_back({"fuse", 6, h, w, 1, h, w});
    return rows;
}

std::string CostReport::to_json() const {
    nlohmann::json j;
    j["label"] = label;
    j["total_macs"] = total_macs;
    j["gflops"] = gflops();
    j["total_params"] = total_params;
    j["param_bytes"] = 4 * total_params;
    j["layers"] = nlohmann::json::array();
    for (const auto& l : layers)
        j["layers"].push_back({{"name", l.name},
                               {"out", {l.out_c, l.out_h, l.out_w}},
                               {"macs", l.macs},
                               {"params", l.params}});
    return j.dump(2);
}

} // namespace u2net
