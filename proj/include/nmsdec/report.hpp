#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nmsdec/dataset.hpp"
#include "nmsdec/decoder.hpp"
#include "nmsdec/util.hpp"

namespace nmsdec {

// Residual-error distribution of a dataset captured at a chosen iteration.
// Words with fewer than `small_error_threshold` remaining errors count as
// small-error words.
struct ErrorHistogram {
    int capture_iteration = 0;
    std::map<int, std::int64_t> counts;  // residual error count -> frequency
    std::int64_t total = 0;
    int small_error_threshold = 11;

    std::int64_t small_error_mass() const {
        std::int64_t s = 0;
        for (const auto& [err, freq] : counts)
            if (err < small_error_threshold) s += freq;
        return s;
    }
    double small_error_fraction() const {
        return total ? static_cast<double>(small_error_mass()) / static_cast<double>(total) : 0.0;
    }
};

// Decodes every dataset sample once to the deepest capture point and reads
// the per-iteration error counts off the record. A frame that stops early
// keeps its final error count for later captures.
inline std::vector<ErrorHistogram> error_histogram(const TannerGraph& g, const WeightStack& stack,
                                                   const DecoderConfig& base_cfg, const Dataset& ds,
                                                   const std::vector<int>& capture_iterations,
                                                   int threads = 0) {
    if (ds.size() == 0) throw std::invalid_argument("error_histogram: empty dataset");
    if (capture_iterations.empty()) throw std::invalid_argument("error_histogram: no capture points");
    int depth = 0;
    for (int it : capture_iterations) {
        if (it < 1) throw std::invalid_argument("error_histogram: capture iteration must be >= 1");
        depth = std::max(depth, it);
    }
    DecoderConfig cfg = base_cfg;
    cfg.iterations = depth;
    cfg.record_trace = false;

    std::vector<ErrorHistogram> hists(capture_iterations.size());
    for (std::size_t k = 0; k < capture_iterations.size(); ++k)
        hists[k].capture_iteration = capture_iterations[k];

    std::mutex merge;
    parallel_chunks(ds.size(), threads, [&](std::size_t lo, std::size_t hi) {
        thread_local std::vector<double> llr;
        thread_local DecodeRecord rec;
        std::vector<std::map<int, std::int64_t>> local(capture_iterations.size());
        for (std::size_t i = lo; i < hi; ++i) {
            ds.sample_as_double(i, llr);
            decode_into(g, llr, stack, cfg, rec);
            for (std::size_t k = 0; k < capture_iterations.size(); ++k) {
                int it = std::min(capture_iterations[k], rec.iterations_run);
                ++local[k][rec.error_counts[static_cast<std::size_t>(it - 1)]];
            }
        }
        std::lock_guard<std::mutex> lock(merge);
        for (std::size_t k = 0; k < capture_iterations.size(); ++k)
            for (const auto& [err, freq] : local[k]) hists[k].counts[err] += freq;
    });
    for (auto& h : hists)
        for (const auto& [err, freq] : h.counts) h.total += freq;
    return hists;
}

inline void write_histogram_csv(const std::vector<ErrorHistogram>& hists, std::ostream& os) {
    os << "capture_iteration,residual_errors,frequency,small_error\n";
    for (const auto& h : hists)
        for (const auto& [err, freq] : h.counts)
            os << h.capture_iteration << ',' << err << ',' << freq << ','
               << (err < h.small_error_threshold ? 1 : 0) << "\n";
}

// Per-iteration weight table. Spatial-style stacks report one (vw, cw, ucw)
// row per iteration; other schemes report summary statistics.
struct WeightReportRow {
    int iteration = 0;
    std::string scheme;
    double vw = 0.0, cw = 0.0, ucw = 0.0;        // spatial / spatial-ucn
    double vw_min = 0.0, vw_max = 0.0;           // full / temporal summaries
    double cw_min = 0.0, cw_max = 0.0;
    bool summary = false;
};

inline std::vector<WeightReportRow> weight_report(const WeightStack& stack) {
    std::vector<WeightReportRow> rows;
    for (const auto& ws : stack.stages) {
        for (int it = ws.iter_first(); it <= ws.iter_last(); ++it) {
            WeightReportRow r;
            r.iteration = it;
            r.scheme = scheme_name(ws.scheme());
            switch (ws.scheme()) {
                case SharingScheme::spatial:
                    r.vw = ws.vn_weight(it, 0);
                    r.cw = r.ucw = ws.cn_weight(it, 0, true);
                    break;
                case SharingScheme::spatial_ucn:
                    r.vw = ws.vn_weight(it, 0);
                    r.cw = ws.cn_weight(it, 0, true);
                    r.ucw = ws.cn_weight(it, 0, false);
                    break;
                default: {
                    r.summary = true;
                    double vsum = 0.0, csum = 0.0;
                    r.vw_min = r.cw_min = std::numeric_limits<double>::infinity();
                    r.vw_max = r.cw_max = -r.vw_min;
                    for (int v = 0; v < ws.proto_vns(); ++v) {
                        double w = ws.vn_weight(it, v);
                        vsum += w;
                        r.vw_min = std::min(r.vw_min, w);
                        r.vw_max = std::max(r.vw_max, w);
                    }
                    for (int e = 0; e < ws.proto_edges(); ++e) {
                        double w = ws.cn_weight(it, e, true);
                        csum += w;
                        r.cw_min = std::min(r.cw_min, w);
                        r.cw_max = std::max(r.cw_max, w);
                    }
                    r.vw = vsum / ws.proto_vns();
                    r.cw = r.ucw = csum / ws.proto_edges();
                    break;
                }
            }
            rows.push_back(r);
        }
    }
    return rows;
}

inline void write_weight_report_csv(const std::vector<WeightReportRow>& rows, std::ostream& os) {
    os << "iteration,scheme,vw,cw,ucw,vw_min,vw_max,cw_min,cw_max,summary\n";
    for (const auto& r : rows) {
        os << r.iteration << ',' << r.scheme << ',' << r.vw << ',' << r.cw << ',' << r.ucw << ',';
        if (r.summary)
            os << r.vw_min << ',' << r.vw_max << ',' << r.cw_min << ',' << r.cw_max;
        else
            os << ",,,";
        os << ',' << (r.summary ? 1 : 0) << "\n";
    }
}

}  // namespace nmsdec
