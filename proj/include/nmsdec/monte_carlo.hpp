#pragma once

#include <cmath>
#include <cstdint>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "nmsdec/channel.hpp"
#include "nmsdec/decoder.hpp"
#include "nmsdec/util.hpp"

namespace nmsdec {

struct MonteCarloStop {
    std::int64_t min_frame_errors = 500;
    std::int64_t max_frames = 0;  // required; no default cap is meaningful at low FER

    void validate() const {
        if (min_frame_errors < 1) throw std::invalid_argument("monte carlo: min frame errors >= 1");
        if (max_frames < 1) throw std::invalid_argument("monte carlo: max frames must be set");
    }
};

struct FerPoint {
    double ebn0_db = 0.0;
    std::int64_t frames = 0;
    std::int64_t frame_errors = 0;
    std::int64_t bit_errors = 0;
    double fer = 0.0;
    double ber = 0.0;
    double avg_iterations = 0.0;
    double wall_seconds = 0.0;
    bool capped = false;          // hit max_frames before min_frame_errors
    double fer_ci_low = 0.0;      // 95% Wilson interval
    double fer_ci_high = 0.0;
};

// 95% Wilson score interval for a binomial proportion.
inline std::pair<double, double> wilson_interval(std::int64_t successes, std::int64_t trials,
                                                 double zscore = 1.959963984540054) {
    if (trials <= 0) return {0.0, 1.0};
    const double nn = static_cast<double>(trials);
    if (successes == 0) {
        const double z2 = zscore * zscore;
        return {0.0, z2 / (nn + z2)};
    }
    if (successes == trials) {
        const double z2 = zscore * zscore;
        return {nn / (nn + z2), 1.0};
    }
    const double p = static_cast<double>(successes) / nn;
    const double z2 = zscore * zscore;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double half = zscore * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

// Simulates frames in fixed-size batches until the stop rule fires. Frames
// are seeded by their global index, and counters merge per batch, so the
// result is identical for any worker count.
inline FerPoint monte_carlo_point(const TannerGraph& g, const WeightStack& stack,
                                  const DecoderConfig& cfg, ChannelParams params,
                                  const MonteCarloStop& stop, int threads = 0,
                                  std::size_t batch_size = 2048) {
    stop.validate();
    params.validate();
    Stopwatch clock;
    FerPoint pt;
    pt.ebn0_db = params.ebn0_db;

    std::int64_t iter_sum = 0;
    std::mutex merge_mutex;

    while (pt.frame_errors < stop.min_frame_errors && pt.frames < stop.max_frames) {
        std::size_t batch = static_cast<std::size_t>(
            std::min<std::int64_t>(static_cast<std::int64_t>(batch_size), stop.max_frames - pt.frames));
        const std::uint64_t first = static_cast<std::uint64_t>(pt.frames);
        parallel_chunks(batch, threads, [&](std::size_t lo, std::size_t hi) {
            thread_local std::vector<double> llr;
            thread_local DecodeRecord rec;
            std::int64_t ferr = 0, berr = 0, iters = 0;
            for (std::size_t i = lo; i < hi; ++i) {
                transmit_into(params, g.n, first + i, llr);
                decode_into(g, llr, stack, cfg, rec);
                ferr += rec.frame_error() ? 1 : 0;
                berr += rec.final_errors;
                iters += rec.iterations_run;
            }
            std::lock_guard<std::mutex> lock(merge_mutex);
            pt.frame_errors += ferr;
            pt.bit_errors += berr;
            iter_sum += iters;
        });
        pt.frames += static_cast<std::int64_t>(batch);
    }

    pt.capped = pt.frame_errors < stop.min_frame_errors;
    pt.fer = pt.frames ? static_cast<double>(pt.frame_errors) / pt.frames : 0.0;
    pt.ber = pt.frames ? static_cast<double>(pt.bit_errors) / (static_cast<double>(pt.frames) * g.n) : 0.0;
    pt.avg_iterations = pt.frames ? static_cast<double>(iter_sum) / pt.frames : 0.0;
    auto ci = wilson_interval(pt.frame_errors, pt.frames);
    pt.fer_ci_low = ci.first;
    pt.fer_ci_high = ci.second;
    pt.wall_seconds = clock.seconds();
    return pt;
}

inline std::vector<FerPoint> monte_carlo(const TannerGraph& g, const WeightStack& stack,
                                         const DecoderConfig& cfg, const ChannelParams& base_params,
                                         const std::vector<double>& ebn0_list,
                                         const MonteCarloStop& stop, int threads = 0) {
    std::vector<FerPoint> points;
    points.reserve(ebn0_list.size());
    for (std::size_t i = 0; i < ebn0_list.size(); ++i) {
        ChannelParams p = base_params;
        p.ebn0_db = ebn0_list[i];
        p.seed = mix_seed(base_params.seed, 0xFE5000 + i);
        points.push_back(monte_carlo_point(g, stack, cfg, p, stop, threads));
    }
    return points;
}

inline void write_fer_csv(const std::vector<FerPoint>& points, std::ostream& os) {
    os << "ebn0_db,frames,frame_errors,bit_errors,fer,ber,fer_ci_low,fer_ci_high,"
          "avg_iterations,capped,wall_seconds\n";
    for (const auto& p : points) {
        os << p.ebn0_db << ',' << p.frames << ',' << p.frame_errors << ',' << p.bit_errors << ','
           << p.fer << ',' << p.ber << ',' << p.fer_ci_low << ',' << p.fer_ci_high << ','
           << p.avg_iterations << ',' << (p.capped ? 1 : 0) << ',' << p.wall_seconds << "\n";
    }
}

}  // namespace nmsdec
