#pragma once

// Pipeline config files and the end-to-end runner: stage training, dataset
// collection between stages, and persistence of weights/logs/manifests.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nmsdec/pipeline.hpp"
#include "nmsdec/report.hpp"
#include "nmsdec/toml.hpp"
#include "nmsdec/weights.hpp"

namespace nmsdec {

inline std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// write-then-rename so interrupted runs never leave a torn checkpoint
inline void write_text_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
        os << content;
        if (!os) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

inline void save_weight_stack(const WeightStack& stack, int proto_vns, int proto_edges,
                              const std::string& path) {
    write_text_file_atomic(path, weight_stack_to_json(stack, proto_vns, proto_edges).dump(2) + "\n");
}

inline WeightStack load_weight_stack(const std::string& path) {
    return weight_stack_from_json(nlohmann::json::parse(read_text_file(path)));
}

inline PipelineConfig parse_pipeline_config(const std::string& toml_text) {
    toml::Document doc = toml::parse(toml_text);
    PipelineConfig pc;

    const toml::Table* run = doc.tables.count("run") ? &doc.tables.at("run") : &doc.root;
    if (const auto* v = toml::find(*run, "code")) pc.code_file = v->as_string();
    if (const auto* v = toml::find(*run, "out_dir")) pc.out_dir = v->as_string();
    if (const auto* v = toml::find(*run, "seed")) pc.seed = static_cast<std::uint64_t>(v->as_int());
    if (const auto* v = toml::find(*run, "quantized")) pc.quantized = v->as_bool();
    if (const auto* v = toml::find(*run, "threads")) pc.threads = static_cast<int>(v->as_int());
    if (const auto* v = toml::find(*run, "channel")) {
        const std::string& c = v->as_string();
        if (c == "awgn") pc.channel = ChannelKind::awgn;
        else if (c == "rayleigh") pc.channel = ChannelKind::rayleigh;
        else throw std::runtime_error("pipeline config: unknown channel '" + c + "'");
    }
    if (const auto* v = toml::find(*run, "rayleigh_scale")) pc.rayleigh_scale = v->as_number();
    if (pc.code_file.empty()) throw std::runtime_error("pipeline config: missing run.code");

    if (doc.tables.count("quantizer")) {
        const auto& q = doc.tables.at("quantizer");
        double mx = pc.quantizer.max_mag, st = pc.quantizer.step;
        if (const auto* v = toml::find(q, "max")) mx = v->as_number();
        if (const auto* v = toml::find(q, "step")) st = v->as_number();
        pc.quantizer = Quantizer(mx, st);
    }

    if (!doc.table_arrays.count("stage")) throw std::runtime_error("pipeline config: no [[stage]] tables");
    for (const auto& t : doc.table_arrays.at("stage")) {
        StageConfig sc;
        if (const auto* v = toml::find(t, "name")) sc.name = v->as_string();
        if (const auto* v = toml::find(t, "iter_first")) sc.iter_first = static_cast<int>(v->as_int());
        if (const auto* v = toml::find(t, "iter_last")) sc.iter_last = static_cast<int>(v->as_int());
        if (const auto* v = toml::find(t, "scheme")) sc.scheme = scheme_from_name(v->as_string());
        if (const auto* v = toml::find(t, "source")) {
            const std::string& s = v->as_string();
            if (s == "region") sc.source = StageSource::region;
            else if (s == "collected") sc.source = StageSource::collected;
            else throw std::runtime_error("pipeline config: unknown source '" + s + "'");
        }
        if (const auto* v = toml::find(t, "region")) sc.region = v->as_number_array();
        if (const auto* v = toml::find(t, "delta1")) sc.delta1 = static_cast<int>(v->as_int());
        if (const auto* v = toml::find(t, "delta2")) sc.delta2 = static_cast<int>(v->as_int());
        if (const auto* v = toml::find(t, "epochs")) sc.epochs = static_cast<int>(v->as_int());
        if (const auto* v = toml::find(t, "batch")) sc.batch_size = static_cast<int>(v->as_int());
        if (const auto* v = toml::find(t, "lr")) sc.lr = v->as_number();
        if (const auto* v = toml::find(t, "loss_alpha")) sc.loss_alpha = v->as_number();
        if (const auto* v = toml::find(t, "frames_per_epoch"))
            sc.frames_per_epoch = v->as_int();
        if (const auto* v = toml::find(t, "val_frames")) sc.val_frames = v->as_int();
        if (const auto* v = toml::find(t, "collect_count")) sc.collect_count = v->as_int();
        if (const auto* v = toml::find(t, "split")) {
            sc.split.clear();
            for (double x : v->as_number_array()) sc.split.push_back(static_cast<std::size_t>(x));
        }
        if (const auto* v = toml::find(t, "min_acceptance")) sc.min_acceptance = v->as_number();
        if (sc.name.empty()) sc.name = "stage" + std::to_string(pc.stages.size() + 1);
        pc.stages.push_back(std::move(sc));
    }
    pc.validate();
    return pc;
}

struct PipelineRunResult {
    WeightStack stack;
    std::vector<TrainLogRow> log;
    std::vector<TestFerResult> stage_test_fer;  // one entry per collected-source stage
};

// Runs every stage in order. A collected-source stage first gathers
// uncorrected words with the pipeline trained so far (frozen, decoding
// through the previous stage's last iteration), splits them, trains on the
// train split with best-validation selection, and reports held-out test FER.
inline PipelineRunResult run_pipeline(const TannerGraph& g, const PipelineConfig& pc,
                                      bool persist = true) {
    pc.validate();
    namespace fs = std::filesystem;
    if (persist) fs::create_directories(pc.out_dir);

    PipelineRunResult result;
    WeightStack& stack = result.stack;
    stack.code_id = g.id;
    stack.quantizer = pc.quantizer;

    for (std::size_t k = 0; k < pc.stages.size(); ++k) {
        const StageConfig& sc = pc.stages[k];

        Dataset train_split, val_split, test_split;
        const Dataset* train_ptr = nullptr;
        const Dataset* val_ptr = nullptr;

        if (sc.source == StageSource::collected) {
            if (k == 0) throw std::runtime_error("pipeline: first stage cannot use collected source");
            DecoderConfig basis(sc.iter_first - 1, pc.quantized, /*early=*/true);
            basis.quantizer = pc.quantizer;
            CollectStats cs;
            Dataset ds = collect_uncorrected(g, stack, basis, sc.iter_first - 1, pc.channel,
                                             pc.rayleigh_scale, sc.region, sc.collect_count,
                                             mix_seed(pc.seed, 0xDA7A + k), pc.threads,
                                             sc.min_acceptance, &cs);
            if (persist)
                save_dataset(ds, (fs::path(pc.out_dir) / (sc.name + "_uncorrected.bin")).string());
            auto parts = split_dataset(ds, sc.split, mix_seed(pc.seed, 0x5B117 + k));
            train_split = std::move(parts.at(0));
            if (parts.size() > 1) val_split = std::move(parts.at(1));
            if (parts.size() > 2) test_split = std::move(parts.at(2));
            train_ptr = &train_split;
            val_ptr = val_split.size() ? &val_split : &train_split;
        }

        stack.stages.emplace_back(sc.scheme, sc.iter_first, sc.iter_last, g.proto_vns,
                                  g.proto_edge_count, 1.0);

        StageResult sr = train_stage(g, stack, k, sc, pc, train_ptr, val_ptr);
        for (const auto& row : sr.log) result.log.push_back(row);

        if (sc.source == StageSource::collected && test_split.size() > 0) {
            TestFerResult tf = evaluate_test_fer(g, stack, pc, test_split, sc.iter_last);
            result.stage_test_fer.push_back(tf);
        }

        if (persist) {
            save_weight_stack(stack, g.proto_vns, g.proto_edge_count,
                              (fs::path(pc.out_dir) / ("weights_through_" + sc.name + ".json")).string());
            std::ostringstream log_csv;
            write_train_log_csv(result.log, log_csv);
            write_text_file_atomic((fs::path(pc.out_dir) / "train_log.csv").string(), log_csv.str());
        }
    }

    if (persist)
        save_weight_stack(stack, g.proto_vns, g.proto_edge_count,
                          (fs::path(pc.out_dir) / "weights_final.json").string());
    return result;
}

}  // namespace nmsdec
