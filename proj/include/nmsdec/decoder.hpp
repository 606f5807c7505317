#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "nmsdec/code.hpp"
#include "nmsdec/quantizer.hpp"
#include "nmsdec/weights.hpp"

namespace nmsdec {

struct DecoderConfig {
    int iterations = 50;        // unrolled depth lbar
    bool quantized = false;
    Quantizer quantizer;
    bool early_stop = false;    // stop on zero syndrome of the per-iteration posterior
    bool record_trace = false;  // keep everything the backward pass needs

    DecoderConfig() = default;
    DecoderConfig(int iters, bool quant, bool early, bool trace = false)
        : iterations(iters), quantized(quant), early_stop(early), record_trace(trace) {}
};

// Per-CN bookkeeping of one iteration: the two smallest incoming magnitudes,
// where they came from, the total sign product (sgn(0) = +1) and whether the
// check was satisfied by the current VN-to-CN signs.
struct CnTrace {
    std::int32_t argmin1 = -1;
    std::int32_t argmin2 = -1;
    double min1 = 0.0;
    double min2 = 0.0;
    float sign_product = 1.0f;
    std::uint8_t satisfied = 1;
};

struct DecodeRecord {
    std::vector<double> channel_llr;      // input as the decoder consumed it
    std::vector<double> output_llr;       // m^o at the last executed iteration
    std::vector<std::uint8_t> hard_decision;
    std::vector<int> error_counts;        // per executed iteration, vs all-zero
    int iterations_run = 0;
    bool early_stopped = false;
    bool success = false;                 // final hard decision has zero syndrome
    int final_errors = 0;                 // Hamming weight of the final decision

    bool frame_error() const { return final_errors > 0; }

    bool has_trace = false;
    bool quantized = false;     // forward mode, echoed for the backward pass
    Quantizer quantizer;
    std::vector<std::vector<double>> msg_vc;   // [iteration][edge]
    std::vector<std::vector<double>> msg_cv;   // [iteration][edge]
    std::vector<std::vector<CnTrace>> cn;      // [iteration][check node]
};

namespace detail {

inline double sign_of(double x) { return x < 0.0 ? -1.0 : 1.0; }

// Pointers to per-proto weight values valid for one iteration.
struct IterWeights {
    const double* vn;        // length N
    const double* cn_sat;    // length E
    const double* cn_unsat;  // length E
};

struct WeightScratch {
    std::vector<double> vn, cn_sat, cn_unsat;
    void ensure(int n, int e) {
        vn.resize(static_cast<std::size_t>(n));
        cn_sat.resize(static_cast<std::size_t>(e));
        cn_unsat.resize(static_cast<std::size_t>(e));
    }
};

inline IterWeights resolve_iteration(const WeightSet& ws, int iter, WeightScratch& scratch) {
    const int n = ws.proto_vns(), e = ws.proto_edges();
    const double* p = ws.params().data();
    std::size_t i = static_cast<std::size_t>(iter - ws.iter_first());
    switch (ws.scheme()) {
        case SharingScheme::full:
        case SharingScheme::protograph_full: {
            const double* base = p + i * static_cast<std::size_t>(n + e);
            return {base, base + n, base + n};
        }
        case SharingScheme::temporal:
            return {p, p + n, p + n};
        case SharingScheme::spatial: {
            scratch.ensure(n, e);
            std::fill(scratch.vn.begin(), scratch.vn.end(), p[i * 2]);
            std::fill(scratch.cn_sat.begin(), scratch.cn_sat.end(), p[i * 2 + 1]);
            return {scratch.vn.data(), scratch.cn_sat.data(), scratch.cn_sat.data()};
        }
        case SharingScheme::spatial_ucn: {
            scratch.ensure(n, e);
            std::fill(scratch.vn.begin(), scratch.vn.end(), p[i * 3]);
            std::fill(scratch.cn_sat.begin(), scratch.cn_sat.end(), p[i * 3 + 1]);
            std::fill(scratch.cn_unsat.begin(), scratch.cn_unsat.end(), p[i * 3 + 2]);
            return {scratch.vn.data(), scratch.cn_sat.data(), scratch.cn_unsat.data()};
        }
    }
    throw std::logic_error("unreachable");
}

}  // namespace detail

// Single-query weight lookup, mirroring what the decoder applies at
// iteration `iter` on the lifted edge `edge`.
inline std::pair<double, double> resolve_weights(const WeightStack& stack, const TannerGraph& g,
                                                 int iter, int edge, bool cn_satisfied) {
    const WeightSet& ws = stack.stage_for(iter);
    return {ws.vn_weight(iter, g.edge_proto_vn[edge]),
            ws.cn_weight(iter, g.edge_proto_edge[edge], cn_satisfied)};
}

// Eq.-level helpers; decode() inlines the same arithmetic.
inline double vn_update(double channel_llr, const std::vector<double>& incoming, double vn_weight) {
    double acc = vn_weight * channel_llr;
    for (double m : incoming) acc += m;
    return acc;
}

namespace detail {

// Canonical VN pre-activation: left fold starting from the weighted channel
// LLR, adding the other incoming CN messages in ascending edge order. Every
// path that evaluates Eq. (1) (decode, backward STE gate) uses this exact
// association so results are bit-reproducible.
inline double vn_preactivation(const TannerGraph& g, int v, std::int32_t excluded_edge,
                               double vn_weight, double chan_v, const double* prev_cv) {
    double acc = vn_weight * chan_v;
    if (prev_cv != nullptr)
        for (std::int32_t k = g.vn_offsets[v]; k < g.vn_offsets[v + 1]; ++k) {
            const std::int32_t e = g.vn_edges[k];
            if (e != excluded_edge) acc += prev_cv[e];
        }
    return acc;
}

}  // namespace detail

inline double cn_update(const std::vector<double>& incoming, double cn_weight) {
    if (incoming.empty()) throw std::invalid_argument("cn_update: empty incoming set");
    double sign = 1.0;
    double mag = std::numeric_limits<double>::infinity();
    for (double m : incoming) {
        sign *= detail::sign_of(m);
        mag = std::min(mag, std::fabs(m));
    }
    return cn_weight * sign * mag;
}

// Flooding NMS decode: per iteration all VN->CN updates, then CN satisfaction
// flags from the just-computed signs, then all CN->VN updates. The flags feed
// the UCN weight selection of the same iteration.
inline void decode_into(const TannerGraph& g, const std::vector<double>& channel_llr,
                        const WeightStack& stack, const DecoderConfig& cfg, DecodeRecord& rec) {
    if (static_cast<int>(channel_llr.size()) != g.n)
        throw std::invalid_argument("decode: channel LLR length mismatch");
    if (cfg.iterations < 1) throw std::invalid_argument("decode: iterations must be >= 1");
    stack.validate(cfg.iterations);

    const int n = g.n, m = g.m, z = g.lift;
    const std::size_t ez = static_cast<std::size_t>(g.edges());
    const Quantizer& q = cfg.quantizer;

    rec.channel_llr.resize(static_cast<std::size_t>(n));
    if (cfg.quantized)
        for (int v = 0; v < n; ++v) rec.channel_llr[v] = q.apply(channel_llr[v]);
    else
        rec.channel_llr.assign(channel_llr.begin(), channel_llr.end());

    rec.has_trace = cfg.record_trace;
    rec.quantized = cfg.quantized;
    rec.quantizer = cfg.quantizer;
    rec.iterations_run = 0;
    rec.early_stopped = false;
    rec.error_counts.clear();
    if (cfg.record_trace) {
        rec.msg_vc.resize(static_cast<std::size_t>(cfg.iterations));
        rec.msg_cv.resize(static_cast<std::size_t>(cfg.iterations));
        rec.cn.resize(static_cast<std::size_t>(cfg.iterations));
    }

    thread_local std::vector<double> vc_buf, cv_prev, cv_cur;
    thread_local std::vector<CnTrace> cn_roll;
    thread_local detail::WeightScratch wscratch;
    thread_local std::vector<std::uint8_t> parity;

    rec.hard_decision.assign(static_cast<std::size_t>(n), 0);
    rec.output_llr.resize(static_cast<std::size_t>(n));

    if (!cfg.record_trace) {
        vc_buf.resize(ez);
        cv_prev.resize(ez);
        cv_cur.resize(ez);
        cn_roll.resize(static_cast<std::size_t>(m));
    }

    const double* chan = rec.channel_llr.data();

    for (int it = 1; it <= cfg.iterations; ++it) {
        const WeightSet& ws = stack.stage_for(it);
        detail::IterWeights w = detail::resolve_iteration(ws, it, wscratch);

        double* cur_vc;
        double* cur_cv;
        const double* prev_cv = nullptr;
        CnTrace* ct;
        if (cfg.record_trace) {
            auto& tvc = rec.msg_vc[static_cast<std::size_t>(it - 1)];
            auto& tcv = rec.msg_cv[static_cast<std::size_t>(it - 1)];
            auto& tcn = rec.cn[static_cast<std::size_t>(it - 1)];
            tvc.resize(ez);
            tcv.resize(ez);
            tcn.resize(static_cast<std::size_t>(m));
            cur_vc = tvc.data();
            cur_cv = tcv.data();
            ct = tcn.data();
            if (it > 1) prev_cv = rec.msg_cv[static_cast<std::size_t>(it - 2)].data();
        } else {
            cur_vc = vc_buf.data();
            cur_cv = cv_cur.data();
            ct = cn_roll.data();
            if (it > 1) prev_cv = cv_prev.data();
        }

        // VN to CN (Eq. 1)
        for (int v = 0; v < n; ++v) {
            const double wv = w.vn[v / z];
            for (std::int32_t k = g.vn_offsets[v]; k < g.vn_offsets[v + 1]; ++k) {
                const std::int32_t e = g.vn_edges[k];
                const double u = detail::vn_preactivation(g, v, e, wv, chan[v], prev_cv);
                cur_vc[e] = cfg.quantized ? q.apply(u) : u;
            }
        }

        // CN to VN (Eq. 2), preceded by the satisfaction scan
        for (int c = 0; c < m; ++c) {
            const std::int32_t* eb = g.cn_edges.data() + g.cn_offsets[c];
            const int deg = g.cn_offsets[c + 1] - g.cn_offsets[c];
            double min1 = std::numeric_limits<double>::infinity();
            double min2 = min1;
            std::int32_t am1 = -1, am2 = -1;
            double sign = 1.0;
            for (int k = 0; k < deg; ++k) {
                const std::int32_t e = eb[k];
                const double msg = cur_vc[e];
                sign *= detail::sign_of(msg);
                const double a = std::fabs(msg);
                if (a < min1) {
                    min2 = min1;
                    am2 = am1;
                    min1 = a;
                    am1 = e;
                } else if (a < min2) {
                    min2 = a;
                    am2 = e;
                }
            }
            const bool satisfied = sign > 0.0;
            ct[c] = {am1, am2, min1, min2, static_cast<float>(sign),
                     static_cast<std::uint8_t>(satisfied ? 1 : 0)};
            const double* wcn = satisfied ? w.cn_sat : w.cn_unsat;
            for (int k = 0; k < deg; ++k) {
                const std::int32_t e = eb[k];
                const double mag = (e == am1) ? min2 : min1;
                const double out_sign = sign * detail::sign_of(cur_vc[e]);
                double val = wcn[g.edge_proto_edge[e]] * out_sign * mag;
                if (cfg.quantized) val = q.apply(val);
                cur_cv[e] = val;
            }
        }

        // per-iteration posterior (channel LLR plus incoming CN messages in
        // ascending edge order), error count, early stop
        int errors = 0;
        for (int v = 0; v < n; ++v) {
            double post = chan[v];
            for (std::int32_t k = g.vn_offsets[v]; k < g.vn_offsets[v + 1]; ++k)
                post += cur_cv[g.vn_edges[k]];
            const std::uint8_t bit = post < 0.0 ? 1 : 0;
            rec.hard_decision[v] = bit;
            rec.output_llr[v] = post;
            errors += bit;
        }
        rec.error_counts.push_back(errors);
        rec.iterations_run = it;

        if (cfg.early_stop) {
            if (errors == 0) {
                rec.early_stopped = it < cfg.iterations;
                break;
            }
            parity.assign(static_cast<std::size_t>(m), 0);
            for (std::size_t e = 0; e < ez; ++e)
                parity[g.edge_cn[e]] ^= rec.hard_decision[g.edge_vn[e]];
            bool zero = true;
            for (std::uint8_t p : parity)
                if (p) {
                    zero = false;
                    break;
                }
            if (zero) {
                rec.early_stopped = it < cfg.iterations;
                break;
            }
        }

        if (!cfg.record_trace) std::swap(cv_prev, cv_cur);
    }

    rec.final_errors = rec.error_counts.back();
    if (rec.final_errors == 0) {
        rec.success = true;
    } else {
        parity.assign(static_cast<std::size_t>(m), 0);
        for (std::size_t e = 0; e < ez; ++e)
            parity[g.edge_cn[e]] ^= rec.hard_decision[g.edge_vn[e]];
        rec.success = true;
        for (std::uint8_t p : parity)
            if (p) {
                rec.success = false;
                break;
            }
    }
    if (cfg.record_trace) {
        rec.msg_vc.resize(static_cast<std::size_t>(rec.iterations_run));
        rec.msg_cv.resize(static_cast<std::size_t>(rec.iterations_run));
        rec.cn.resize(static_cast<std::size_t>(rec.iterations_run));
    }
}

inline DecodeRecord decode(const TannerGraph& g, const std::vector<double>& channel_llr,
                           const WeightStack& stack, const DecoderConfig& cfg) {
    DecodeRecord rec;
    decode_into(g, channel_llr, stack, cfg, rec);
    return rec;
}

// Hard decision of the posterior recorded at iteration `iter` (1-based).
inline std::vector<std::uint8_t> posterior_hard_decision(const TannerGraph& g, const DecodeRecord& rec,
                                                         int iter) {
    if (!rec.has_trace) throw std::invalid_argument("posterior_hard_decision: record has no trace");
    if (iter < 1 || iter > rec.iterations_run)
        throw std::out_of_range("posterior_hard_decision: iteration beyond trace");
    const auto& cv = rec.msg_cv[static_cast<std::size_t>(iter - 1)];
    std::vector<double> post(rec.channel_llr);
    for (int e = 0; e < g.edges(); ++e) post[g.edge_vn[e]] += cv[e];
    std::vector<std::uint8_t> bits(post.size());
    for (std::size_t v = 0; v < post.size(); ++v) bits[v] = post[v] < 0.0 ? 1 : 0;
    return bits;
}

}  // namespace nmsdec
