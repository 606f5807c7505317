#pragma once

// Test-only reference implementations, deliberately structured differently
// from the library (per-target-edge recomputation, no two-minimum
// bookkeeping) so they can serve as independent oracles.

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "nmsdec/code.hpp"
#include "nmsdec/quantizer.hpp"

namespace oracles {

struct ReferenceResult {
    std::vector<double> output_llr;
    std::vector<std::uint8_t> hard;
};

// Plain flooding (weighted) min-sum with unit VN weights and one shared CN
// weight. Weight 1.0 gives the MS decoder.
inline ReferenceResult reference_wms(const nmsdec::TannerGraph& g, const std::vector<double>& chan_in,
                                     double cn_weight, int iterations, bool quantized,
                                     const nmsdec::Quantizer& q) {
    auto sgn = [](double x) { return x < 0.0 ? -1.0 : 1.0; };
    std::vector<double> chan(chan_in);
    if (quantized)
        for (double& x : chan) x = q.apply(x);

    const int ez = g.edges();
    std::vector<double> vc(static_cast<std::size_t>(ez), 0.0);
    std::vector<double> cv(static_cast<std::size_t>(ez), 0.0);
    std::vector<double> cv_next(static_cast<std::size_t>(ez), 0.0);

    for (int it = 1; it <= iterations; ++it) {
        for (int e = 0; e < ez; ++e) {
            const int v = g.edge_vn[e];
            double acc = chan[v];
            for (int k = g.vn_offsets[v]; k < g.vn_offsets[v + 1]; ++k) {
                const int o = g.vn_edges[k];
                if (o != e) acc += cv[o];
            }
            vc[e] = quantized ? q.apply(acc) : acc;
        }
        for (int e = 0; e < ez; ++e) {
            const int c = g.edge_cn[e];
            double sign = 1.0;
            double mag = std::numeric_limits<double>::infinity();
            for (int k = g.cn_offsets[c]; k < g.cn_offsets[c + 1]; ++k) {
                const int o = g.cn_edges[k];
                if (o == e) continue;
                sign *= sgn(vc[o]);
                mag = std::min(mag, std::fabs(vc[o]));
            }
            double val = cn_weight * sign * mag;
            cv_next[e] = quantized ? q.apply(val) : val;
        }
        std::swap(cv, cv_next);
    }

    ReferenceResult r;
    r.output_llr.assign(chan.begin(), chan.end());
    for (int e = 0; e < ez; ++e) r.output_llr[g.edge_vn[e]] += cv[e];
    r.hard.resize(r.output_llr.size());
    for (std::size_t v = 0; v < r.output_llr.size(); ++v) r.hard[v] = r.output_llr[v] < 0.0 ? 1 : 0;
    return r;
}

// Exhaustive nullspace enumeration for small codes (n <= 20).
inline std::vector<std::vector<std::uint8_t>> enumerate_codewords(const nmsdec::TannerGraph& g) {
    std::vector<std::vector<std::uint8_t>> words;
    for (std::uint32_t w = 0; w < (1u << g.n); ++w) {
        std::vector<std::uint8_t> bits(static_cast<std::size_t>(g.n));
        for (int v = 0; v < g.n; ++v) bits[v] = (w >> v) & 1u;
        if (nmsdec::is_codeword(g, bits)) words.push_back(std::move(bits));
    }
    return words;
}

}  // namespace oracles
