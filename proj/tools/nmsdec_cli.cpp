#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "nmsdec/code.hpp"
#include "nmsdec/complexity.hpp"
#include "nmsdec/monte_carlo.hpp"
#include "nmsdec/pipeline.hpp"
#include "nmsdec/report.hpp"
#include "nmsdec/runner.hpp"

using namespace nmsdec;

namespace {

std::string code_id_from_path(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

TannerGraph load_graph(const std::string& path) {
    std::string text = read_text_file(path);
    std::string id = code_id_from_path(path);
    if (std::filesystem::path(path).extension() == ".alist")
        return lift(parse_alist(text, id));
    return lift(parse_base_matrix(text, id));
}

// "2.0:0.5:5.0" (start:step:stop, inclusive) or "2.0,2.5,3.0"
std::vector<double> parse_ebn0_list(const std::string& spec) {
    std::vector<double> out;
    if (spec.find(':') != std::string::npos) {
        double start, step, stop;
        char c1, c2;
        std::istringstream ss(spec);
        if (!(ss >> start >> c1 >> step >> c2 >> stop) || c1 != ':' || c2 != ':' || step <= 0)
            throw std::runtime_error("bad Eb/N0 range '" + spec + "' (want start:step:stop)");
        for (double v = start; v <= stop + 1e-9; v += step) out.push_back(v);
        return out;
    }
    std::istringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    if (out.empty()) throw std::runtime_error("empty Eb/N0 list");
    return out;
}

WeightStack stack_for_decoder(const std::string& decoder, const std::string& weights_path,
                              double wms_weight, int iterations, const TannerGraph& g) {
    if (decoder == "ms") return WeightStack::ms(iterations, g.proto_vns, g.proto_edge_count, g.id);
    if (decoder == "wms")
        return WeightStack::wms(iterations, g.proto_vns, g.proto_edge_count, wms_weight, g.id);
    if (decoder == "nms") {
        if (weights_path.empty()) throw std::runtime_error("nms decoder needs --weights");
        WeightStack w = load_weight_stack(weights_path);
        if (w.stages[0].proto_vns() != g.proto_vns || w.stages[0].proto_edges() != g.proto_edge_count)
            throw std::runtime_error("weight file does not match the code's protograph");
        return w;
    }
    throw std::runtime_error("unknown decoder '" + decoder + "' (ms|wms|nms)");
}

void write_manifest(const std::string& out_csv, const nlohmann::json& extra) {
    nlohmann::json j = extra;
    j["tool"] = "nmsdec";
    j["format_version"] = 1;
    std::filesystem::path p(out_csv);
    p.replace_extension(".manifest.json");
    write_text_file_atomic(p.string(), j.dump(2) + "\n");
}

void emit(const std::string& out, const std::string& content) {
    if (out.empty() || out == "-")
        std::cout << content;
    else
        write_text_file_atomic(out, content);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"QC-LDPC neural min-sum decoding, training and evaluation"};
    app.require_subcommand(1);

    try {
        // ---- code info ----------------------------------------------------
        auto* code_cmd = app.add_subcommand("code", "code model utilities");
        code_cmd->require_subcommand(1);
        auto* info = code_cmd->add_subcommand("info", "print code parameters and complexity");
        std::string info_file;
        int info_iters = 50;
        info->add_option("base-matrix", info_file, "base-matrix or .alist file")->required();
        info->add_option("--iters", info_iters, "iterations for the complexity table");

        // ---- eval fer -----------------------------------------------------
        auto* eval_cmd = app.add_subcommand("eval", "Monte Carlo evaluation");
        eval_cmd->require_subcommand(1);
        auto* fer = eval_cmd->add_subcommand("fer", "frame/bit error rate sweep");
        std::string fer_code, fer_weights, fer_ebn0, fer_out, fer_decoder = "nms",
                    fer_channel = "awgn";
        double fer_wms = 0.75, fer_scale = 1.0;
        int fer_iters = 50, fer_threads = 0;
        std::int64_t fer_min_errors = 500, fer_max_frames = 0;
        std::uint64_t fer_seed = 1;
        bool fer_float = false;
        fer->add_option("--code", fer_code)->required();
        fer->add_option("--weights", fer_weights, "weight file (nms decoder)");
        fer->add_option("--decoder", fer_decoder, "ms|wms|nms (default nms)");
        fer->add_option("--wms-weight", fer_wms, "CN weight for wms (default 0.75)");
        fer->add_option("--ebn0", fer_ebn0, "list 2.0,2.5 or range 2.0:0.5:5.0")->required();
        fer->add_option("--min-errors", fer_min_errors, "frame errors per point (default 500)");
        fer->add_option("--max-frames", fer_max_frames, "hard frame cap per point")->required();
        fer->add_option("--iters", fer_iters, "decoding iterations (default 50)");
        fer->add_flag("--floating", fer_float, "decode unquantized (default 5-bit quantized)");
        fer->add_option("--channel", fer_channel, "awgn|rayleigh");
        fer->add_option("--rayleigh-scale", fer_scale);
        fer->add_option("--seed", fer_seed);
        fer->add_option("--threads", fer_threads, "worker threads (0 = NMSDEC_THREADS or hardware)");
        fer->add_option("--out", fer_out, "CSV path (default stdout)");

        // ---- eval hist ----------------------------------------------------
        auto* hist = eval_cmd->add_subcommand("hist", "residual-error histogram on a dataset");
        std::string hist_code, hist_weights, hist_dataset, hist_capture = "20,50", hist_out;
        int hist_threads = 0;
        bool hist_float = false;
        hist->add_option("--code", hist_code)->required();
        hist->add_option("--weights", hist_weights)->required();
        hist->add_option("--dataset", hist_dataset)->required();
        hist->add_option("--capture", hist_capture, "capture iterations, e.g. 20,50");
        hist->add_flag("--floating", hist_float);
        hist->add_option("--threads", hist_threads);
        hist->add_option("--out", hist_out, "CSV path (default stdout)");

        // ---- collect ------------------------------------------------------
        auto* collect_cmd = app.add_subcommand("collect", "collect uncorrected words");
        std::string col_code, col_weights, col_ebn0, col_out, col_channel = "awgn";
        int col_iters = 0, col_threads = 0;
        std::int64_t col_count = 60000;
        std::uint64_t col_seed = 1;
        double col_scale = 1.0, col_floor = 1e-6;
        bool col_float = false;
        collect_cmd->add_option("--code", col_code)->required();
        collect_cmd->add_option("--weights", col_weights, "frozen decoder weight file")->required();
        collect_cmd->add_option("--ebn0", col_ebn0, "collection region, list or range")->required();
        collect_cmd->add_option("--count", col_count, "samples to collect (default 60000)");
        collect_cmd->add_option("--iters", col_iters, "decode depth (default: weight coverage)");
        collect_cmd->add_option("--out", col_out, "output dataset file")->required();
        collect_cmd->add_flag("--floating", col_float);
        collect_cmd->add_option("--channel", col_channel, "awgn|rayleigh");
        collect_cmd->add_option("--rayleigh-scale", col_scale);
        collect_cmd->add_option("--min-acceptance", col_floor);
        collect_cmd->add_option("--seed", col_seed);
        collect_cmd->add_option("--threads", col_threads);

        // ---- train ----------------------------------------------------------
        auto* train_cmd = app.add_subcommand("train", "run a training pipeline from a config file");
        std::string train_config;
        train_cmd->add_option("--config", train_config, "pipeline TOML file")->required();

        // ---- weights report -------------------------------------------------
        auto* weights_cmd = app.add_subcommand("weights", "weight file utilities");
        weights_cmd->require_subcommand(1);
        auto* wreport = weights_cmd->add_subcommand("report", "per-iteration weight table");
        std::string wr_file, wr_out;
        wreport->add_option("file", wr_file, "weight JSON file")->required();
        wreport->add_option("--out", wr_out, "CSV path (default stdout)");

        // ---- dataset --------------------------------------------------------
        auto* ds_cmd = app.add_subcommand("dataset", "dataset utilities");
        ds_cmd->require_subcommand(1);
        auto* ds_info = ds_cmd->add_subcommand("info", "print dataset header");
        std::string dsi_file;
        ds_info->add_option("file", dsi_file)->required();
        auto* ds_export = ds_cmd->add_subcommand("export", "export samples to CSV");
        std::string dse_file, dse_out;
        ds_export->add_option("file", dse_file)->required();
        ds_export->add_option("--out", dse_out, "CSV path (default stdout)");

        app.parse(argc, argv);

        if (*info) {
            TannerGraph g = load_graph(info_file);
            std::cout << "code id:        " << g.id << "\n"
                      << "proto (M x N):  " << g.proto_cns << " x " << g.proto_vns << "\n"
                      << "lift z:         " << g.lift << "\n"
                      << "proto edges E:  " << g.proto_edge_count << "\n"
                      << "lifted (m x n): " << g.m << " x " << g.n << "\n"
                      << "edges:          " << g.edges() << "\n"
                      << "rate:           " << g.rate() << "\n";
            for (auto kind : {DecoderKind::ms, DecoderKind::nms}) {
                ComplexityReport r = complexity_estimate(g, kind, info_iters);
                std::cout << (kind == DecoderKind::ms ? "MS " : "NMS") << " @" << info_iters
                          << " iters: A=" << r.additions << " C=" << r.comparisons
                          << " Mul=" << r.multiplications << " total=" << r.total
                          << " weights=" << r.weight_memory << "\n";
            }
            return 0;
        }

        if (*fer) {
            TannerGraph g = load_graph(fer_code);
            WeightStack stack = stack_for_decoder(fer_decoder, fer_weights, fer_wms, fer_iters, g);
            if (stack.last_iteration() < fer_iters)
                throw std::runtime_error("weight file covers fewer iterations than --iters");
            DecoderConfig cfg(fer_iters, !fer_float, /*early=*/true);
            cfg.quantizer = stack.quantizer;
            ChannelParams base;
            base.kind = fer_channel == "rayleigh" ? ChannelKind::rayleigh : ChannelKind::awgn;
            base.rate = g.rate();
            base.rayleigh_scale = fer_scale;
            base.seed = fer_seed;
            MonteCarloStop stop{fer_min_errors, fer_max_frames};
            auto points = monte_carlo(g, stack, cfg, base, parse_ebn0_list(fer_ebn0), stop, fer_threads);
            std::ostringstream csv;
            write_fer_csv(points, csv);
            emit(fer_out, csv.str());
            if (!fer_out.empty() && fer_out != "-")
                write_manifest(fer_out, {{"command", "eval fer"},
                                         {"code", fer_code},
                                         {"decoder", fer_decoder},
                                         {"weights_digest", hex64(stack.digest())},
                                         {"seed", fer_seed},
                                         {"iters", fer_iters},
                                         {"quantized", !fer_float},
                                         {"min_errors", fer_min_errors},
                                         {"max_frames", fer_max_frames}});
            return 0;
        }

        if (*hist) {
            TannerGraph g = load_graph(hist_code);
            WeightStack stack = load_weight_stack(hist_weights);
            Dataset ds = load_dataset(hist_dataset);
            std::vector<int> capture;
            for (double v : parse_ebn0_list(hist_capture)) capture.push_back(static_cast<int>(v));
            DecoderConfig cfg(stack.last_iteration(), !hist_float, /*early=*/true);
            cfg.quantizer = stack.quantizer;
            auto hists = error_histogram(g, stack, cfg, ds, capture, hist_threads);
            std::ostringstream csv;
            write_histogram_csv(hists, csv);
            emit(hist_out, csv.str());
            return 0;
        }

        if (*collect_cmd) {
            TannerGraph g = load_graph(col_code);
            WeightStack stack = load_weight_stack(col_weights);
            int depth = col_iters > 0 ? col_iters : stack.last_iteration();
            DecoderConfig cfg(depth, !col_float, /*early=*/true);
            cfg.quantizer = stack.quantizer;
            CollectStats stats;
            ChannelKind kind = col_channel == "rayleigh" ? ChannelKind::rayleigh : ChannelKind::awgn;
            Dataset ds = collect_uncorrected(g, stack, cfg, depth, kind, col_scale,
                                             parse_ebn0_list(col_ebn0), col_count, col_seed,
                                             col_threads, col_floor, &stats);
            save_dataset(ds, col_out);
            std::cout << "collected " << ds.size() << " uncorrected words from "
                      << stats.frames_examined << " frames (acceptance rate "
                      << stats.acceptance_rate << ")\n";
            write_manifest(col_out, {{"command", "collect"},
                                     {"code", col_code},
                                     {"weights_digest", hex64(stack.digest())},
                                     {"seed", col_seed},
                                     {"count", static_cast<std::int64_t>(ds.size())},
                                     {"acceptance_rate", stats.acceptance_rate}});
            return 0;
        }

        if (*train_cmd) {
            PipelineConfig pc = parse_pipeline_config(read_text_file(train_config));
            TannerGraph g = load_graph(pc.code_file);
            PipelineRunResult res = run_pipeline(g, pc);
            std::cout << "pipeline complete; weights in " << pc.out_dir << "/weights_final.json\n";
            for (std::size_t i = 0; i < res.stage_test_fer.size(); ++i)
                std::cout << "held-out test FER (collected stage " << i + 1
                          << "): " << res.stage_test_fer[i].fer << "\n";
            return 0;
        }

        if (*wreport) {
            WeightStack stack = load_weight_stack(wr_file);
            std::ostringstream csv;
            write_weight_report_csv(weight_report(stack), csv);
            emit(wr_out, csv.str());
            return 0;
        }

        if (*ds_info) {
            Dataset ds = load_dataset(dsi_file);
            std::cout << "code id:         " << ds.code_id << "\n"
                      << "channel:         " << (ds.kind == ChannelKind::awgn ? "awgn" : "rayleigh")
                      << "\n"
                      << "rate:            " << ds.rate << "\n"
                      << "region (dB):    ";
            for (double r : ds.region) std::cout << ' ' << r;
            std::cout << "\n"
                      << "decoder digest:  " << hex64(ds.decoder_digest) << "\n"
                      << "decode iters:    " << ds.decode_iterations << "\n"
                      << "frame length:    " << ds.frame_length << "\n"
                      << "samples:         " << ds.size() << "\n";
            return 0;
        }

        if (*ds_export) {
            Dataset ds = load_dataset(dse_file);
            std::ostringstream csv;
            export_dataset_csv(ds, csv);
            emit(dse_out, csv.str());
            return 0;
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
