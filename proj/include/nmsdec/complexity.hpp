#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nmsdec/code.hpp"

namespace nmsdec {

enum class SharingScheme { full, protograph_full, spatial, temporal, spatial_ucn };

inline std::string scheme_name(SharingScheme s) {
    switch (s) {
        case SharingScheme::full: return "full";
        case SharingScheme::protograph_full: return "protograph-full";
        case SharingScheme::spatial: return "spatial";
        case SharingScheme::temporal: return "temporal";
        case SharingScheme::spatial_ucn: return "spatial-ucn";
    }
    throw std::invalid_argument("unknown sharing scheme");
}

inline SharingScheme scheme_from_name(const std::string& s) {
    if (s == "full") return SharingScheme::full;
    if (s == "protograph-full" || s == "protograph_full") return SharingScheme::protograph_full;
    if (s == "spatial") return SharingScheme::spatial;
    if (s == "temporal") return SharingScheme::temporal;
    if (s == "spatial-ucn" || s == "spatial_ucn" || s == "spatial+ucn")
        return SharingScheme::spatial_ucn;
    throw std::invalid_argument("unknown sharing scheme '" + s + "'");
}

// Number of trainable parameters a scheme needs to cover L iterations of a
// protograph with N proto VNs and E proto edges. Full diversity is defined at
// protograph resolution, so "full" and "protograph-full" coincide.
inline std::int64_t weight_count(SharingScheme scheme, int proto_vns, int proto_edges, int iterations) {
    if (iterations < 1) throw std::invalid_argument("weight_count: iteration count must be >= 1");
    const std::int64_t n = proto_vns, e = proto_edges, l = iterations;
    switch (scheme) {
        case SharingScheme::full:
        case SharingScheme::protograph_full: return (n + e) * l;
        case SharingScheme::spatial: return 2 * l;
        case SharingScheme::temporal: return n + e;
        case SharingScheme::spatial_ucn: return 3 * l;
    }
    throw std::invalid_argument("unknown sharing scheme");
}

inline std::int64_t weight_count(const std::string& scheme, int proto_vns, int proto_edges, int iterations) {
    return weight_count(scheme_from_name(scheme), proto_vns, proto_edges, iterations);
}

enum class DecoderKind { ms, nms };

// Per-iteration operation counts and the aggregate cost (A + 2C + Mul) * lbar.
// Comparisons are counted per check node as d_c + ceil(ln d_c) - 2, the cost
// of a two-minimum search; summed over exact CN degrees this reproduces the
// usual per-CN average (alpha ~ 15.7 for the rate-3/4 WiMAX code).
struct ComplexityReport {
    std::int64_t additions = 0;        // A = 2Ez
    std::int64_t comparisons = 0;      // C = sum_c (d_c + ceil(ln d_c) - 2)
    std::int64_t multiplications = 0;  // Ez for MS, (2E+N)z for NMS
    int iterations = 0;
    std::int64_t total = 0;            // (A + 2C + Mul) * iterations
    std::int64_t weight_memory = 0;    // parameters to store, summed over stages
};

inline std::int64_t cn_comparisons(int degree) {
    return degree + static_cast<std::int64_t>(std::ceil(std::log(static_cast<double>(degree)))) - 2;
}

struct StageShape {
    SharingScheme scheme;
    int iterations;
};

inline ComplexityReport complexity_estimate(const TannerGraph& g, DecoderKind kind, int iterations,
                                            const std::vector<StageShape>& stages = {}) {
    if (iterations < 1) throw std::invalid_argument("complexity_estimate: iterations must be >= 1");
    const std::int64_t ez = g.edges();
    ComplexityReport r;
    r.iterations = iterations;
    r.additions = 2 * ez;
    for (int c = 0; c < g.m; ++c) r.comparisons += cn_comparisons(g.cn_degree(c));
    r.multiplications = kind == DecoderKind::ms
                            ? ez
                            : (2 * static_cast<std::int64_t>(g.proto_edge_count) + g.proto_vns) *
                                  static_cast<std::int64_t>(g.lift);
    r.total = (r.additions + 2 * r.comparisons + r.multiplications) * iterations;
    if (kind == DecoderKind::nms) {
        if (stages.empty()) {
            r.weight_memory = weight_count(SharingScheme::full, g.proto_vns, g.proto_edge_count, iterations);
        } else {
            for (const auto& s : stages)
                r.weight_memory += weight_count(s.scheme, g.proto_vns, g.proto_edge_count, s.iterations);
        }
    }
    return r;
}

}  // namespace nmsdec
