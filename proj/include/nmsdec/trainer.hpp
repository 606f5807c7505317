#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nmsdec/decoder.hpp"
#include "nmsdec/weights.hpp"

namespace nmsdec {

enum class LossKind { fer_hard, fer_soft };

struct LossConfig {
    LossKind kind = LossKind::fer_soft;
    double alpha = 1.0;  // steepness of the soft surrogate

    void validate() const {
        if (!(alpha > 0.0)) throw std::invalid_argument("loss: alpha must be positive");
    }
};

// 1/2 [1 - sgn(min_v m_o)]; a minimum of exactly zero counts as a failure.
inline double fer_loss_hard(const std::vector<double>& output_llr) {
    if (output_llr.empty()) throw std::invalid_argument("fer_loss_hard: empty output");
    double mn = output_llr[0];
    for (double x : output_llr) mn = std::min(mn, x);
    return mn <= 0.0 ? 1.0 : 0.0;
}

struct SoftLoss {
    double value = 0.0;
    double min_llr = 0.0;
    int argmin = 0;       // lowest index on ties
    double d_min = 0.0;   // d value / d min_llr
};

// Differentiable surrogate: sigmoid(-alpha * min_v m_o). The subgradient of
// the min routes entirely to the argmin component.
inline SoftLoss fer_loss_soft(const std::vector<double>& output_llr, double alpha = 1.0) {
    if (output_llr.empty()) throw std::invalid_argument("fer_loss_soft: empty output");
    if (!(alpha > 0.0)) throw std::invalid_argument("fer_loss_soft: alpha must be positive");
    SoftLoss r;
    r.min_llr = output_llr[0];
    for (int v = 1; v < static_cast<int>(output_llr.size()); ++v)
        if (output_llr[v] < r.min_llr) {
            r.min_llr = output_llr[v];
            r.argmin = v;
        }
    double s = 1.0 / (1.0 + std::exp(alpha * r.min_llr));  // sigmoid(-alpha*min)
    r.value = s;
    r.d_min = -alpha * s * (1.0 - s);
    return r;
}

// Gradient accumulator aligned, element for element, with one WeightSet's
// parameter storage.
struct GradientBuffer {
    std::vector<double> grad;
    std::int64_t samples = 0;

    explicit GradientBuffer(std::size_t n = 0) : grad(n, 0.0) {}
    explicit GradientBuffer(const WeightSet& ws) : grad(ws.params().size(), 0.0) {}

    void reset() {
        std::fill(grad.begin(), grad.end(), 0.0);
        samples = 0;
    }
    void merge(const GradientBuffer& other) {
        if (other.grad.size() != grad.size())
            throw std::invalid_argument("gradient merge: size mismatch");
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += other.grad[i];
        samples += other.samples;
    }
    void check_finite() const {
        for (double gv : grad)
            if (!std::isfinite(gv)) throw std::runtime_error("gradient buffer holds non-finite value");
    }
};

namespace detail {

struct BackwardScratch {
    std::vector<double> g_vc, g_cv, g_cv_prev;
};

}  // namespace detail

// Reverse pass over a recorded forward trace. Message gradients flow from the
// output LLRs down to iteration `trainable_first`; parameter gradients are
// accumulated only for iterations in [trainable_first, trainable_last] and
// only into `target_stage` of the stack. Signs, argmin choices and UCN flags
// are constants of the forward pass; the quantizer backpropagates
// straight-through inside (-max, max) and cuts the path outside.
inline void backward_into(const TannerGraph& g, const DecodeRecord& rec, const WeightStack& stack,
                          int trainable_first, int trainable_last, std::size_t target_stage,
                          const LossConfig& loss, GradientBuffer& out) {
    if (!rec.has_trace) throw std::invalid_argument("backward: record has no trace");
    if (rec.early_stopped) throw std::invalid_argument("backward: record was early-stopped");
    if (loss.kind != LossKind::fer_soft)
        throw std::invalid_argument("backward: fer-hard loss has no gradient");
    loss.validate();
    if (target_stage >= stack.stages.size()) throw std::out_of_range("backward: bad stage index");
    const WeightSet& ws = stack.stages[target_stage];
    if (out.grad.size() != ws.params().size())
        throw std::invalid_argument("backward: gradient buffer misaligned with stage");
    const int depth = rec.iterations_run;
    if (trainable_first < 1 || trainable_last > depth || trainable_first > trainable_last)
        throw std::invalid_argument("backward: trainable range outside recorded iterations");
    if (trainable_first < ws.iter_first() || trainable_last > ws.iter_last())
        throw std::invalid_argument("backward: trainable range outside target stage");

    const int n = g.n, m = g.m, z = g.lift;
    const std::size_t ez = static_cast<std::size_t>(g.edges());
    const double qmax = rec.quantizer.max_mag;
    const bool quant = rec.quantized;
    const double* chan = rec.channel_llr.data();

    thread_local detail::BackwardScratch s;
    s.g_vc.assign(ez, 0.0);
    s.g_cv.assign(ez, 0.0);
    s.g_cv_prev.assign(ez, 0.0);

    // seed: d loss / d m_o routed to the argmin VN, then into its CN messages
    SoftLoss sl = fer_loss_soft(rec.output_llr, loss.alpha);
    for (std::int32_t k = g.vn_offsets[sl.argmin]; k < g.vn_offsets[sl.argmin + 1]; ++k)
        s.g_cv[g.vn_edges[k]] = sl.d_min;

    thread_local detail::WeightScratch wscratch;

    for (int it = depth; it >= trainable_first; --it) {
        const WeightSet& flow_ws = stack.stage_for(it);
        detail::IterWeights w = detail::resolve_iteration(flow_ws, it, wscratch);
        const bool accumulate = it >= trainable_first && it <= trainable_last;
        const auto& vc = rec.msg_vc[static_cast<std::size_t>(it - 1)];
        const auto& ct = rec.cn[static_cast<std::size_t>(it - 1)];

        // CN update backward
        for (int c = 0; c < m; ++c) {
            const std::int32_t* eb = g.cn_edges.data() + g.cn_offsets[c];
            const int deg = g.cn_offsets[c + 1] - g.cn_offsets[c];
            const CnTrace& t = ct[static_cast<std::size_t>(c)];
            const double psign = t.sign_product;
            const bool sat = t.satisfied != 0;
            const double* wcn = sat ? w.cn_sat : w.cn_unsat;
            for (int k = 0; k < deg; ++k) {
                const std::int32_t e = eb[k];
                double gv = s.g_cv[e];
                if (gv == 0.0) continue;
                const double s_e = detail::sign_of(vc[e]);
                const double mag = (e == t.argmin1) ? t.min2 : t.min1;
                const double unweighted = psign * s_e * mag;
                const double wv = wcn[g.edge_proto_edge[e]];
                if (quant) {
                    const double u = wv * unweighted;
                    if (!(u > -qmax && u < qmax)) continue;  // straight-through cut
                }
                if (accumulate)
                    out.grad[ws.cn_index(it, g.edge_proto_edge[e], sat)] += gv * unweighted;
                const std::int32_t route = (e == t.argmin1) ? t.argmin2 : t.argmin1;
                s.g_vc[route] += gv * wv * psign * s_e * detail::sign_of(vc[route]);
            }
        }

        // VN update backward
        const bool have_prev = it > 1;
        const double* prev =
            have_prev ? rec.msg_cv[static_cast<std::size_t>(it - 2)].data() : nullptr;
        if (have_prev) std::fill(s.g_cv_prev.begin(), s.g_cv_prev.end(), 0.0);

        for (int v = 0; v < n; ++v) {
            const std::int32_t* vb = g.vn_edges.data() + g.vn_offsets[v];
            const int deg = g.vn_offsets[v + 1] - g.vn_offsets[v];
            double total = 0.0;
            bool any = false;
            for (int k = 0; k < deg; ++k) {
                const std::int32_t e = vb[k];
                double gv = s.g_vc[e];
                if (gv == 0.0) continue;
                if (quant) {
                    const double u = detail::vn_preactivation(g, v, e, w.vn[v / z], chan[v], prev);
                    if (!(u > -qmax && u < qmax)) {
                        s.g_vc[e] = 0.0;
                        continue;
                    }
                }
                any = true;
                total += gv;
                if (accumulate) out.grad[ws.vn_index(it, v / z)] += gv * chan[v];
            }
            if (any && have_prev) {
                // each surviving edge gradient fans out to the other edges'
                // previous CN messages
                for (int k = 0; k < deg; ++k) {
                    const std::int32_t e = vb[k];
                    const double add = total - s.g_vc[e];
                    if (add != 0.0) s.g_cv_prev[e] += add;
                }
            }
        }

        if (have_prev) {
            std::swap(s.g_cv, s.g_cv_prev);
            std::fill(s.g_vc.begin(), s.g_vc.end(), 0.0);
        }
    }

    out.samples += 1;
}

inline GradientBuffer backward(const TannerGraph& g, const DecodeRecord& rec, const WeightStack& stack,
                               int trainable_first, int trainable_last, std::size_t target_stage,
                               const LossConfig& loss) {
    GradientBuffer buf(stack.stages[target_stage]);
    backward_into(g, rec, stack, trainable_first, trainable_last, target_stage, loss, buf);
    return buf;
}

// Standard bias-corrected Adam over one WeightSet. Parameters are not
// clipped; trained weights may exceed 1.
struct AdamState {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t t = 0;
    std::vector<double> m, v;

    explicit AdamState(std::size_t params = 0, double lr_ = 0.001)
        : lr(lr_), m(params, 0.0), v(params, 0.0) {}
    explicit AdamState(const WeightSet& ws, double lr_ = 0.001)
        : AdamState(ws.params().size(), lr_) {}
};

inline void adam_step(AdamState& st, const GradientBuffer& grads, WeightSet& ws) {
    auto& p = ws.params();
    if (st.m.size() != p.size() || grads.grad.size() != p.size())
        throw std::invalid_argument("adam_step: misaligned state or gradient");
    const double scale = grads.samples > 0 ? 1.0 / static_cast<double>(grads.samples) : 1.0;
    ++st.t;
    const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
    const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double gv = grads.grad[i] * scale;
        if (!std::isfinite(gv))
            throw std::runtime_error("adam_step: non-finite gradient at parameter " + std::to_string(i));
        st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * gv;
        st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * gv * gv;
        const double mhat = st.m[i] / bc1;
        const double vhat = st.v[i] / bc2;
        p[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
    }
}

}  // namespace nmsdec
