#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nmsdec/dataset.hpp"
#include "nmsdec/decoder.hpp"
#include "nmsdec/monte_carlo.hpp"
#include "nmsdec/trainer.hpp"
#include "nmsdec/util.hpp"

namespace nmsdec {

enum class StageSource { region, collected };

struct StageConfig {
    std::string name;
    int iter_first = 1;
    int iter_last = 1;
    SharingScheme scheme = SharingScheme::spatial;
    StageSource source = StageSource::region;
    std::vector<double> region;  // Eb/N0 set: training region, or collection region

    // block-wise schedule; delta1 == 0 means one-shot over the whole stage
    int delta1 = 0;
    int delta2 = 0;

    int epochs = 100;
    int batch_size = 500;
    double lr = 0.001;
    double loss_alpha = 1.0;

    // region-source stages
    std::int64_t frames_per_epoch = 50000;
    std::int64_t val_frames = 5000;

    // collected-source stages
    std::int64_t collect_count = 60000;
    std::vector<std::size_t> split = {50000, 5000, 5000};
    double min_acceptance = 1e-6;

    int length() const { return iter_last - iter_first + 1; }
    int effective_delta1() const { return delta1 > 0 ? std::min(delta1, length()) : length(); }

    void validate() const {
        if (iter_first < 1 || iter_last < iter_first)
            throw std::invalid_argument("stage '" + name + "': bad iteration range");
        if (delta1 < 0 || delta2 < 0) throw std::invalid_argument("stage: deltas must be >= 0");
        if (effective_delta1() + delta2 > length())
            throw std::invalid_argument("stage: schedule window exceeds stage bounds");
        if (epochs < 1 || batch_size < 1) throw std::invalid_argument("stage: epochs/batch must be >= 1");
        if (region.empty()) throw std::invalid_argument("stage '" + name + "': empty Eb/N0 region");
        if (source == StageSource::collected && split.empty())
            throw std::invalid_argument("stage: collected source needs split sizes");
    }
};

struct PipelineConfig {
    std::string code_file;
    std::string out_dir = ".";
    bool quantized = true;
    Quantizer quantizer;
    ChannelKind channel = ChannelKind::awgn;
    double rayleigh_scale = 1.0;
    std::uint64_t seed = 1;
    int threads = 0;
    std::vector<StageConfig> stages;

    void validate() const {
        if (stages.empty()) throw std::invalid_argument("pipeline: no stages");
        int expect = 1;
        for (const auto& s : stages) {
            s.validate();
            if (s.iter_first != expect)
                throw std::invalid_argument("pipeline: stage ranges must be contiguous from 1");
            expect = s.iter_last + 1;
        }
    }
};

struct TrainLogRow {
    std::string stage;
    int substage = 0;
    int epoch = 0;
    double train_loss = 0.0;
    double train_fer = 0.0;
    double val_fer = 0.0;
    double wall_seconds = 0.0;
};

inline void write_train_log_csv(const std::vector<TrainLogRow>& rows, std::ostream& os) {
    os << "stage,substage,epoch,train_loss,train_fer,val_fer,wall_seconds\n";
    for (const auto& r : rows)
        os << r.stage << ',' << r.substage << ',' << r.epoch << ',' << r.train_loss << ','
           << r.train_fer << ',' << r.val_fer << ',' << r.wall_seconds << "\n";
}

// Sub-stage s trains [first + (s-1)*d1 - d2, first + s*d1 - 1] clipped to the
// stage; earlier iterations stay frozen at their last trained values.
inline std::vector<std::pair<int, int>> substage_windows(int first, int last, int delta1, int delta2) {
    if (delta1 < 1) throw std::invalid_argument("substage_windows: delta1 must be >= 1");
    std::vector<std::pair<int, int>> windows;
    const int len = last - first + 1;
    const int count = (len + delta1 - 1) / delta1;
    for (int s = 1; s <= count; ++s) {
        int lo = std::max(first, first + (s - 1) * delta1 - delta2);
        int hi = std::min(last, first + s * delta1 - 1);
        windows.emplace_back(lo, hi);
    }
    return windows;
}

struct CollectStats {
    std::int64_t frames_examined = 0;
    double acceptance_rate = 0.0;
};

// Draws frames from the Eb/N0 region (uniform over the listed values, chosen
// per frame index) and keeps the channel LLR vectors the frozen decoder fails
// to correct within `depth` iterations.
inline Dataset collect_uncorrected(const TannerGraph& g, const WeightStack& frozen,
                                   const DecoderConfig& decode_cfg, int depth, ChannelKind kind,
                                   double rayleigh_scale, const std::vector<double>& region,
                                   std::int64_t target_count, std::uint64_t seed, int threads = 0,
                                   double min_acceptance = 1e-6, CollectStats* stats = nullptr) {
    if (target_count < 1) throw std::invalid_argument("collect: target count must be >= 1");
    if (region.empty()) throw std::invalid_argument("collect: empty region");

    Dataset ds;
    ds.code_id = g.id;
    ds.kind = kind;
    ds.rate = g.rate();
    ds.rayleigh_scale = rayleigh_scale;
    ds.seed = seed;
    ds.region = region;
    ds.decoder_digest = frozen.digest();
    ds.decode_iterations = static_cast<std::uint32_t>(depth);
    ds.frame_length = g.n;
    ds.llrs.reserve(static_cast<std::size_t>(target_count) * g.n);

    DecoderConfig cfg = decode_cfg;
    cfg.iterations = depth;
    cfg.early_stop = true;
    cfg.record_trace = false;

    std::mutex merge_mutex;
    std::int64_t examined = 0;
    std::int64_t found = 0;  // all failures seen, including past the target
    const std::size_t batch = 4096;
    std::vector<std::vector<float>> kept_by_chunk;

    while (static_cast<std::int64_t>(ds.size()) < target_count) {
        const std::uint64_t first = static_cast<std::uint64_t>(examined);
        const std::size_t chunk = 256;
        const std::size_t nchunks = (batch + chunk - 1) / chunk;
        kept_by_chunk.assign(nchunks, {});
        parallel_chunks(batch, threads, [&](std::size_t lo, std::size_t hi) {
            thread_local std::vector<double> llr;
            thread_local DecodeRecord rec;
            auto& kept = kept_by_chunk[lo / chunk];
            for (std::size_t i = lo; i < hi; ++i) {
                const std::uint64_t idx = first + i;
                ChannelParams p;
                p.kind = kind;
                p.rate = g.rate();
                p.rayleigh_scale = rayleigh_scale;
                p.seed = seed;
                p.ebn0_db = region[splitmix64(mix_seed(seed ^ 0xC0117EC7, idx)) % region.size()];
                transmit_into(p, g.n, idx, llr);
                decode_into(g, llr, frozen, cfg, rec);
                if (rec.frame_error())
                    for (double x : llr) kept.push_back(static_cast<float>(x));
            }
        }, chunk);
        for (const auto& kept : kept_by_chunk) {
            found += static_cast<std::int64_t>(kept.size() / static_cast<std::size_t>(g.n));
            std::int64_t room = target_count - static_cast<std::int64_t>(ds.size());
            if (room <= 0) continue;
            std::size_t take = std::min(kept.size(), static_cast<std::size_t>(room) * g.n);
            ds.llrs.insert(ds.llrs.end(), kept.begin(), kept.begin() + take);
        }
        examined += static_cast<std::int64_t>(batch);
        const double rate = static_cast<double>(found) / static_cast<double>(examined);
        const auto patience =
            std::max<std::int64_t>(10'000, static_cast<std::int64_t>(4.0 / min_acceptance));
        if (examined >= patience && rate < min_acceptance)
            throw std::runtime_error("collect: region too easy (acceptance rate " + std::to_string(rate) +
                                     " below floor after " + std::to_string(examined) + " frames)");
    }
    if (stats) {
        stats->frames_examined = examined;
        stats->acceptance_rate = static_cast<double>(found) / static_cast<double>(examined);
    }
    return ds;
}

// Every sample must still fail under its provenance decoder.
inline bool verify_dataset(const TannerGraph& g, const Dataset& ds, const WeightStack& frozen,
                           const DecoderConfig& decode_cfg, int threads = 0) {
    if (frozen.digest() != ds.decoder_digest) return false;
    DecoderConfig cfg = decode_cfg;
    cfg.iterations = static_cast<int>(ds.decode_iterations);
    cfg.early_stop = true;
    cfg.record_trace = false;
    std::atomic<bool> ok{true};
    parallel_chunks(ds.size(), threads, [&](std::size_t lo, std::size_t hi) {
        thread_local std::vector<double> llr;
        thread_local DecodeRecord rec;
        for (std::size_t i = lo; i < hi && ok.load(std::memory_order_relaxed); ++i) {
            ds.sample_as_double(i, llr);
            decode_into(g, llr, frozen, cfg, rec);
            if (!rec.frame_error()) ok.store(false, std::memory_order_relaxed);
        }
    });
    return ok.load();
}

struct StageResult {
    double best_val_fer = 1.0;
    int best_epoch = 0;
    std::vector<TrainLogRow> log;
};

namespace detail {

// One epoch's batch samples are either dataset rows or freshly drawn frames.
struct SampleProvider {
    const TannerGraph* graph = nullptr;
    const Dataset* data = nullptr;                // collected mode
    std::vector<std::size_t> order;               // shuffle per epoch
    ChannelKind kind = ChannelKind::awgn;
    double rayleigh_scale = 1.0;
    std::vector<double> region;                   // region mode
    std::uint64_t stream = 0;                     // region mode: epoch-unique stream

    std::size_t count = 0;

    void fetch(std::size_t i, std::vector<double>& llr) const {
        if (data) {
            data->sample_as_double(order[i], llr);
        } else {
            ChannelParams p;
            p.kind = kind;
            p.rate = graph->rate();
            p.rayleigh_scale = rayleigh_scale;
            p.seed = stream;
            p.ebn0_db = region[splitmix64(mix_seed(stream ^ 0x7261AD, i)) % region.size()];
            transmit_into(p, graph->n, i, llr);
        }
    }
};

inline double dataset_fer(const TannerGraph& g, const WeightStack& stack, const DecoderConfig& cfg,
                          const SampleProvider& samples, int threads) {
    std::atomic<std::int64_t> failures{0};
    parallel_chunks(samples.count, threads, [&](std::size_t lo, std::size_t hi) {
        thread_local std::vector<double> llr;
        thread_local DecodeRecord rec;
        std::int64_t local = 0;
        for (std::size_t i = lo; i < hi; ++i) {
            samples.fetch(i, llr);
            decode_into(g, llr, stack, cfg, rec);
            local += rec.frame_error() ? 1 : 0;
        }
        failures.fetch_add(local);
    });
    return samples.count ? static_cast<double>(failures.load()) / samples.count : 0.0;
}

}  // namespace detail

// Block-wise training of one stage. Stages before `stage_index` are frozen by
// construction (gradients and updates target only the indexed stage, and only
// the active window's iterations). Validation FER at the window end selects
// the epoch whose weights each sub-stage keeps.
inline StageResult train_stage(const TannerGraph& g, WeightStack& stack, std::size_t stage_index,
                               const StageConfig& sc, const PipelineConfig& pc,
                               const Dataset* train_data, const Dataset* val_data) {
    sc.validate();
    WeightSet& ws = stack.stages.at(stage_index);
    if (ws.iter_first() != sc.iter_first || ws.iter_last() != sc.iter_last)
        throw std::invalid_argument("train_stage: stage/weight range mismatch");
    if (sc.source == StageSource::collected && (!train_data || train_data->size() == 0))
        throw std::invalid_argument("train_stage: empty dataset");

    const int threads = pc.threads;
    StageResult result;

    LossConfig loss;
    loss.alpha = sc.loss_alpha;

    const auto windows = substage_windows(sc.iter_first, sc.iter_last, sc.effective_delta1(), sc.delta2);

    // fixed validation set for region-source stages
    detail::SampleProvider val;
    val.graph = &g;
    val.kind = pc.channel;
    val.rayleigh_scale = pc.rayleigh_scale;
    if (sc.source == StageSource::collected) {
        val.data = val_data;
        val.count = val_data ? val_data->size() : 0;
        val.order.resize(val.count);
        std::iota(val.order.begin(), val.order.end(), std::size_t{0});
    } else {
        val.region = sc.region;
        val.stream = mix_seed(pc.seed, 0x5A11D + stage_index);
        val.count = static_cast<std::size_t>(sc.val_frames);
    }

    detail::SampleProvider train;
    train.graph = &g;
    train.kind = pc.channel;
    train.rayleigh_scale = pc.rayleigh_scale;
    if (sc.source == StageSource::collected) {
        train.data = train_data;
        train.count = train_data->size();
    } else {
        train.region = sc.region;
        train.count = static_cast<std::size_t>(sc.frames_per_epoch);
    }

    for (std::size_t si = 0; si < windows.size(); ++si) {
        const auto [win_lo, win_hi] = windows[si];
        DecoderConfig fwd(win_hi, pc.quantized, /*early=*/false, /*trace=*/true);
        fwd.quantizer = pc.quantizer;
        DecoderConfig eval_cfg(win_hi, pc.quantized, /*early=*/false, /*trace=*/false);
        eval_cfg.quantizer = pc.quantizer;

        AdamState adam(ws, sc.lr);
        std::vector<double> best_params = ws.params();
        double best_val = std::numeric_limits<double>::infinity();
        int best_epoch = 0;

        for (int epoch = 1; epoch <= sc.epochs; ++epoch) {
            Stopwatch epoch_clock;
            // per-epoch ordering / stream
            if (train.data) {
                train.order.resize(train.count);
                std::iota(train.order.begin(), train.order.end(), std::size_t{0});
                std::mt19937_64 rng(mix_seed(pc.seed, 0xE90C * (stage_index + 1) + 131 * si + epoch));
                for (std::size_t i = train.order.size(); i > 1; --i)
                    std::swap(train.order[i - 1], train.order[rng() % i]);
            } else {
                train.stream = mix_seed(pc.seed, 0xF4A3 * (stage_index + 1) + 977 * si + epoch);
            }

            double loss_sum = 0.0;
            std::int64_t hard_sum = 0;

            for (std::size_t batch_lo = 0; batch_lo < train.count;
                 batch_lo += static_cast<std::size_t>(sc.batch_size)) {
                const std::size_t batch_hi =
                    std::min(train.count, batch_lo + static_cast<std::size_t>(sc.batch_size));
                const std::size_t bsize = batch_hi - batch_lo;
                const std::size_t chunk = 32;
                const std::size_t nchunks = (bsize + chunk - 1) / chunk;
                std::vector<GradientBuffer> partial(nchunks, GradientBuffer(ws));
                std::vector<double> loss_partial(nchunks, 0.0);
                std::vector<std::int64_t> hard_partial(nchunks, 0);

                parallel_chunks(bsize, threads, [&](std::size_t lo, std::size_t hi) {
                    thread_local std::vector<double> llr;
                    thread_local DecodeRecord rec;
                    const std::size_t ci = lo / chunk;
                    for (std::size_t i = lo; i < hi; ++i) {
                        train.fetch(batch_lo + i, llr);
                        decode_into(g, llr, stack, fwd, rec);
                        SoftLoss sl = fer_loss_soft(rec.output_llr, sc.loss_alpha);
                        loss_partial[ci] += sl.value;
                        hard_partial[ci] += fer_loss_hard(rec.output_llr) > 0.5 ? 1 : 0;
                        backward_into(g, rec, stack, win_lo, win_hi, stage_index, loss, partial[ci]);
                    }
                }, chunk);

                GradientBuffer grads(ws);
                for (auto& pb : partial) grads.merge(pb);
                for (double lp : loss_partial) loss_sum += lp;
                for (std::int64_t hp : hard_partial) hard_sum += hp;
                adam_step(adam, grads, ws);
            }

            const double val_fer = detail::dataset_fer(g, stack, eval_cfg, val, threads);
            if (val_fer < best_val) {
                best_val = val_fer;
                best_epoch = epoch;
                best_params = ws.params();
            }

            TrainLogRow row;
            row.stage = sc.name;
            row.substage = static_cast<int>(si + 1);
            row.epoch = epoch;
            row.train_loss = train.count ? loss_sum / static_cast<double>(train.count) : 0.0;
            row.train_fer = train.count ? static_cast<double>(hard_sum) / train.count : 0.0;
            row.val_fer = val_fer;
            row.wall_seconds = epoch_clock.seconds();
            result.log.push_back(row);
        }

        ws.params() = best_params;  // best validation epoch of this sub-stage
        result.best_val_fer = best_val;
        result.best_epoch = best_epoch;
    }
    return result;
}

struct TestFerResult {
    std::size_t samples = 0;
    std::size_t failures = 0;
    double fer = 0.0;
};

// Fraction of held-out collected words the full pipeline still fails on.
inline TestFerResult evaluate_test_fer(const TannerGraph& g, const WeightStack& stack,
                                       const PipelineConfig& pc, const Dataset& test, int depth = 0) {
    if (test.size() == 0) throw std::invalid_argument("evaluate_test_fer: empty test split");
    DecoderConfig cfg(depth > 0 ? depth : stack.last_iteration(), pc.quantized, /*early=*/true);
    cfg.quantizer = pc.quantizer;
    detail::SampleProvider sp;
    sp.graph = &g;
    sp.data = &test;
    sp.count = test.size();
    sp.order.resize(sp.count);
    std::iota(sp.order.begin(), sp.order.end(), std::size_t{0});
    TestFerResult r;
    r.samples = test.size();
    r.fer = detail::dataset_fer(g, stack, cfg, sp, pc.threads);
    r.failures = static_cast<std::size_t>(r.fer * static_cast<double>(r.samples) + 0.5);
    return r;
}

}  // namespace nmsdec
