#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <map>
#include <random>

#include "nmsdec/pipeline.hpp"
#include "nmsdec/runner.hpp"

using namespace nmsdec;

namespace {

TannerGraph toy_graph() {
    return lift(parse_base_matrix("2 4 3\n0 1 -1 2\n1 -1 0 0\n", "toy12"));
}

Dataset make_dataset(const TannerGraph& g, int count, double ebn0, std::uint64_t seed) {
    Dataset ds;
    ds.code_id = g.id;
    ds.rate = g.rate();
    ds.frame_length = g.n;
    ds.region = {ebn0};
    ChannelParams p;
    p.ebn0_db = ebn0;
    p.rate = g.rate();
    p.seed = seed;
    std::vector<double> llr;
    for (int i = 0; i < count; ++i) {
        transmit_into(p, g.n, static_cast<std::uint64_t>(i), llr);
        ds.append(llr);
    }
    return ds;
}

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "nmsdec_pipeline_test";
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("block-wise sub-stage windows") {
    SECTION("post stage 21..50 with delta1 5, delta2 10") {
        auto w = substage_windows(21, 50, 5, 10);
        REQUIRE(w.size() == 6);
        CHECK(w[0] == std::pair{21, 25});
        CHECK(w[1] == std::pair{21, 30});
        CHECK(w[2] == std::pair{21, 35});
        CHECK(w[3] == std::pair{26, 40});
        CHECK(w[4] == std::pair{31, 45});
        CHECK(w[5] == std::pair{36, 50});
    }
    SECTION("one-shot is a single window") {
        auto w = substage_windows(21, 30, 10, 0);
        REQUIRE(w.size() == 1);
        CHECK(w[0] == std::pair{21, 30});
    }
    SECTION("iter-by-iter trains one iteration at a time") {
        auto w = substage_windows(21, 24, 1, 0);
        REQUIRE(w.size() == 4);
        for (int s = 0; s < 4; ++s) CHECK(w[s] == std::pair{21 + s, 21 + s});
    }
    SECTION("retraining windows never reach before the stage start") {
        for (int d2 : {0, 1, 3, 7})
            for (auto [lo, hi] : substage_windows(5, 16, 3, d2)) {
                CHECK(lo >= 5);
                CHECK(hi <= 16);
                CHECK(lo <= hi);
            }
    }
    CHECK_THROWS(substage_windows(1, 10, 0, 0));
}

TEST_CASE("dataset split") {
    TannerGraph g = toy_graph();
    Dataset ds = make_dataset(g, 60, 1.0, 5);

    auto parts = split_dataset(ds, {40, 10, 10}, 99);
    REQUIRE(parts.size() == 3);
    CHECK(parts[0].size() == 40);
    CHECK(parts[1].size() == 10);
    CHECK(parts[2].size() == 10);

    SECTION("same seed, same split") {
        auto again = split_dataset(ds, {40, 10, 10}, 99);
        for (int i = 0; i < 3; ++i) CHECK(parts[i].llrs == again[i].llrs);
        auto different = split_dataset(ds, {40, 10, 10}, 100);
        CHECK(parts[0].llrs != different[0].llrs);
    }

    SECTION("union of splits is the original multiset") {
        std::multiset<std::vector<float>> original, rebuilt;
        for (std::size_t i = 0; i < ds.size(); ++i)
            original.insert(std::vector<float>(ds.sample(i), ds.sample(i) + ds.frame_length));
        for (const auto& part : parts)
            for (std::size_t i = 0; i < part.size(); ++i)
                rebuilt.insert(std::vector<float>(part.sample(i), part.sample(i) + part.frame_length));
        CHECK(original == rebuilt);
    }

    SECTION("ratio mismatch") { CHECK_THROWS(split_dataset(ds, {40, 10, 5}, 1)); }
}

TEST_CASE("dataset binary round trip and csv export") {
    TannerGraph g = toy_graph();
    Dataset ds = make_dataset(g, 17, 2.0, 3);
    ds.decoder_digest = 0xabcdef0102030405ULL;
    ds.decode_iterations = 7;

    auto path = (temp_dir() / "roundtrip.bin").string();
    save_dataset(ds, path);
    Dataset back = load_dataset(path);
    CHECK(back.code_id == ds.code_id);
    CHECK(back.rate == ds.rate);
    CHECK(back.region == ds.region);
    CHECK(back.decoder_digest == ds.decoder_digest);
    CHECK(back.decode_iterations == ds.decode_iterations);
    CHECK(back.frame_length == ds.frame_length);
    CHECK(back.llrs == ds.llrs);

    std::ostringstream csv;
    export_dataset_csv(back, csv);
    std::string text = csv.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 18);  // header + 17 rows

    CHECK_THROWS(load_dataset((temp_dir() / "missing.bin").string()));
}

TEST_CASE("collection keeps only uncorrected words") {
    TannerGraph g = toy_graph();
    WeightStack stack = WeightStack::ms(4, g.proto_vns, g.proto_edge_count, g.id);
    // floating decoder: deep in the noise, quantized LLRs collapse to zero
    // and masquerade as the all-zero codeword
    DecoderConfig cfg(4, false, true);

    SECTION("noisy region accepts nearly everything") {
        CollectStats stats;
        Dataset ds = collect_uncorrected(g, stack, cfg, 4, ChannelKind::awgn, 1.0, {-22.0}, 300,
                                         77, 1, 1e-6, &stats);
        CHECK(ds.size() == 300);
        CHECK(stats.acceptance_rate > 0.95);
        CHECK(verify_dataset(g, ds, stack, cfg, 1));

        // every stored frame, re-decoded by the frozen decoder, still fails
        std::vector<double> llr;
        DecodeRecord rec;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            ds.sample_as_double(i, llr);
            decode_into(g, llr, stack, cfg, rec);
            REQUIRE(rec.frame_error());
        }

        SECTION("verification fails for a different decoder or tampered data") {
            WeightStack other = WeightStack::wms(4, g.proto_vns, g.proto_edge_count, 0.75, g.id);
            CHECK_FALSE(verify_dataset(g, ds, other, cfg, 1));
            Dataset tampered = ds;
            for (auto& x : tampered.llrs) x = std::fabs(x) + 1.0f;  // all-positive: decodes clean
            CHECK_FALSE(verify_dataset(g, tampered, stack, cfg, 1));
        }
    }

    SECTION("too-easy region aborts") {
        CHECK_THROWS_WITH(collect_uncorrected(g, stack, cfg, 4, ChannelKind::awgn, 1.0, {40.0}, 10,
                                              78, 1, 1e-3, nullptr),
                          Catch::Matchers::ContainsSubstring("region too easy"));
    }
}

TEST_CASE("pipeline config parsing") {
    const std::string text = R"(
# pipeline example
[run]
code = "data/codes/wimax_576_34b.bm"
out_dir = "/tmp/nmsdec_cfg_test"
seed = 321
quantized = true
threads = 2

[quantizer]
max = 7.5
step = 0.5

[[stage]]
name = "base"
iter_first = 1
iter_last = 20
scheme = "spatial"
source = "region"
region = [2.0, 2.5, 3.0, 3.5, 4.0]
epochs = 7
batch = 250
frames_per_epoch = 1000
val_frames = 400
delta1 = 20

[[stage]]
name = "post"
iter_first = 21
iter_last = 50
scheme = "spatial-ucn"
source = "collected"
region = [4.5]
collect_count = 600
split = [500, 50, 50]
delta1 = 5
delta2 = 10
epochs = 3
)";
    PipelineConfig pc = parse_pipeline_config(text);
    CHECK(pc.code_file == "data/codes/wimax_576_34b.bm");
    CHECK(pc.seed == 321);
    CHECK(pc.quantized);
    CHECK(pc.threads == 2);
    REQUIRE(pc.stages.size() == 2);
    CHECK(pc.stages[0].scheme == SharingScheme::spatial);
    CHECK(pc.stages[0].region == std::vector<double>{2.0, 2.5, 3.0, 3.5, 4.0});
    CHECK(pc.stages[0].epochs == 7);
    CHECK(pc.stages[1].source == StageSource::collected);
    CHECK(pc.stages[1].split == std::vector<std::size_t>{500, 50, 50});
    CHECK(pc.stages[1].delta2 == 10);

    SECTION("rejects gaps and malformed documents") {
        CHECK_THROWS(parse_pipeline_config("[run]\ncode = \"x\"\n"));  // no stages
        CHECK_THROWS(parse_pipeline_config("nonsense line\n"));
        CHECK_THROWS(parse_pipeline_config(
            "[run]\ncode=\"x\"\n[[stage]]\niter_first=2\niter_last=4\nregion=[1.0]\n"));
    }
}

TEST_CASE("toml subset reader") {
    auto doc = toml::parse("a = 1.5\nb = \"text\" # comment\nc = [1, 2, 3]\nd = false\n");
    CHECK(doc.root.at("a").as_number() == 1.5);
    CHECK(doc.root.at("b").as_string() == "text");
    CHECK(doc.root.at("c").as_number_array() == std::vector<double>{1, 2, 3});
    CHECK(doc.root.at("d").as_bool() == false);
    CHECK_THROWS(toml::parse("x = \n"));
    CHECK_THROWS(toml::parse("= 3\n"));
    CHECK_THROWS(toml::parse("x = [1, 2\n"));
}

TEST_CASE("weight stack json round trip") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> dist(0.2, 1.8);
    WeightStack stack;
    stack.code_id = "toy12";
    stack.stages.emplace_back(SharingScheme::spatial, 1, 3, 4, 6);
    stack.stages.emplace_back(SharingScheme::spatial_ucn, 4, 6, 4, 6);
    stack.stages.emplace_back(SharingScheme::protograph_full, 7, 8, 4, 6);
    for (auto& s : stack.stages)
        for (auto& p : s.params()) p = dist(rng);

    nlohmann::json j = weight_stack_to_json(stack, 4, 6);
    WeightStack back = weight_stack_from_json(j);
    REQUIRE(back.stages.size() == 3);
    CHECK(back.digest() == stack.digest());
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(back.stages[k].scheme() == stack.stages[k].scheme());
        CHECK(back.stages[k].params() == stack.stages[k].params());
    }

    SECTION("file round trip") {
        auto path = (temp_dir() / "w.json").string();
        save_weight_stack(stack, 4, 6, path);
        WeightStack loaded = load_weight_stack(path);
        CHECK(loaded.digest() == stack.digest());
    }

    SECTION("rejects corrupted payloads") {
        nlohmann::json bad = j;
        bad["stages"][0]["vn"] = std::vector<double>{1.0};  // wrong length
        CHECK_THROWS(weight_stack_from_json(bad));
        nlohmann::json nan = j;
        nan["stages"][0]["vn"][0] = "oops";
        CHECK_THROWS(weight_stack_from_json(nan));
    }
}

TEST_CASE("training a stage improves and freezes correctly") {
    TannerGraph g = toy_graph();

    PipelineConfig pc;
    pc.code_file = "toy";
    pc.quantized = true;
    pc.seed = 2025;
    pc.threads = 1;

    StageConfig base;
    base.name = "base";
    base.iter_first = 1;
    base.iter_last = 3;
    base.scheme = SharingScheme::spatial;
    base.source = StageSource::region;
    base.region = {0.0, 1.0};
    base.epochs = 3;
    base.batch_size = 64;
    base.frames_per_epoch = 256;
    base.val_frames = 200;
    pc.stages.push_back(base);

    StageConfig post;
    post.name = "post";
    post.iter_first = 4;
    post.iter_last = 7;
    post.scheme = SharingScheme::spatial_ucn;
    post.source = StageSource::collected;
    post.region = {1.0};
    post.collect_count = 240;
    post.split = {160, 40, 40};
    post.epochs = 3;
    post.batch_size = 64;
    post.delta1 = 2;
    post.delta2 = 1;
    pc.stages.push_back(post);
    pc.validate();

    WeightStack stack;
    stack.code_id = g.id;
    stack.stages.emplace_back(base.scheme, 1, 3, g.proto_vns, g.proto_edge_count);
    StageResult r1 = train_stage(g, stack, 0, base, pc, nullptr, nullptr);
    CHECK(r1.log.size() == 3);  // one row per epoch, one-shot window
    double best_logged = 1e9;
    for (const auto& row : r1.log) best_logged = std::min(best_logged, row.val_fer);
    CHECK(r1.best_val_fer == best_logged);

    std::string frozen_base = weight_stack_to_json(stack, g.proto_vns, g.proto_edge_count).dump();

    // collected post stage on top of the frozen base
    DecoderConfig basis(3, pc.quantized, true);
    Dataset ds = collect_uncorrected(g, stack, basis, 3, ChannelKind::awgn, 1.0, post.region, 240,
                                     7, 1, 1e-6, nullptr);
    auto parts = split_dataset(ds, post.split, 11);
    stack.stages.emplace_back(post.scheme, 4, 7, g.proto_vns, g.proto_edge_count);
    StageResult r2 = train_stage(g, stack, 1, post, pc, &parts[0], &parts[1]);
    CHECK(r2.log.size() == 2 * 3);  // two sub-stage windows, three epochs each

    // freeze discipline: the base stage is byte-identical after post training
    nlohmann::json after = weight_stack_to_json(stack, g.proto_vns, g.proto_edge_count);
    nlohmann::json before = nlohmann::json::parse(frozen_base);
    CHECK(after["stages"][0].dump() == before["stages"][0].dump());

    // held-out evaluation runs and reports a fraction
    TestFerResult tf = evaluate_test_fer(g, stack, pc, parts[2]);
    CHECK(tf.samples == 40);
    CHECK(tf.fer >= 0.0);
    CHECK(tf.fer <= 1.0);
}

TEST_CASE("full pipeline run is deterministic") {
    TannerGraph g = toy_graph();

    PipelineConfig pc;
    pc.code_file = "toy";
    pc.out_dir = (temp_dir() / "run").string();
    pc.quantized = true;
    pc.seed = 77;
    pc.threads = 1;

    StageConfig base;
    base.name = "base";
    base.iter_first = 1;
    base.iter_last = 2;
    base.scheme = SharingScheme::spatial;
    base.source = StageSource::region;
    base.region = {0.5};
    base.epochs = 2;
    base.batch_size = 50;
    base.frames_per_epoch = 100;
    base.val_frames = 100;
    pc.stages.push_back(base);

    StageConfig post;
    post.name = "post";
    post.iter_first = 3;
    post.iter_last = 4;
    post.scheme = SharingScheme::spatial_ucn;
    post.source = StageSource::collected;
    post.region = {0.5};
    post.collect_count = 120;
    post.split = {80, 20, 20};
    post.epochs = 2;
    post.batch_size = 40;
    pc.stages.push_back(post);

    PipelineRunResult a = run_pipeline(g, pc, /*persist=*/true);
    PipelineRunResult b = run_pipeline(g, pc, /*persist=*/false);
    CHECK(a.stack.digest() == b.stack.digest());
    REQUIRE(a.stage_test_fer.size() == 1);
    REQUIRE(b.stage_test_fer.size() == 1);
    CHECK(a.stage_test_fer[0].fer == b.stage_test_fer[0].fer);

    // artifacts exist
    namespace fs = std::filesystem;
    CHECK(fs::exists(fs::path(pc.out_dir) / "weights_final.json"));
    CHECK(fs::exists(fs::path(pc.out_dir) / "weights_through_base.json"));
    CHECK(fs::exists(fs::path(pc.out_dir) / "post_uncorrected.bin"));
    CHECK(fs::exists(fs::path(pc.out_dir) / "train_log.csv"));

    // the saved final stack reloads to the same digest
    WeightStack reloaded = load_weight_stack((fs::path(pc.out_dir) / "weights_final.json").string());
    CHECK(reloaded.digest() == a.stack.digest());

    // collected dataset still verifies against the frozen base prefix
    Dataset ds = load_dataset((fs::path(pc.out_dir) / "post_uncorrected.bin").string());
    WeightStack base_only = a.stack;
    base_only.stages.resize(1);
    DecoderConfig basis(2, pc.quantized, true);
    CHECK(verify_dataset(g, ds, base_only, basis, 1));
}

TEST_CASE("stage config validation") {
    StageConfig sc;
    sc.name = "s";
    sc.iter_first = 5;
    sc.iter_last = 4;
    sc.region = {1.0};
    CHECK_THROWS(sc.validate());
    sc.iter_last = 14;
    CHECK_NOTHROW(sc.validate());
    sc.delta1 = 4;
    sc.delta2 = 7;  // 4 + 7 > 10
    CHECK_THROWS(sc.validate());
    sc.delta2 = 6;
    CHECK_NOTHROW(sc.validate());
    sc.region.clear();
    CHECK_THROWS(sc.validate());
}
