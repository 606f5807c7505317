#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "nmsdec/code.hpp"
#include "nmsdec/complexity.hpp"

using namespace nmsdec;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream is(path);
    REQUIRE(is.good());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("base matrix parsing") {
    BaseMatrix bm = parse_base_matrix("2 3 3\n-1 0 1\n0 -1 2\n");
    CHECK(bm.proto_cns == 2);
    CHECK(bm.proto_vns == 3);
    CHECK(bm.lift == 3);
    CHECK(bm.proto_edges() == 4);

    SECTION("shift out of range") {
        CHECK_THROWS_WITH(parse_base_matrix("1 2 24\n24 0\n"),
                          Catch::Matchers::ContainsSubstring("shift out of range"));
        CHECK_THROWS_WITH(parse_base_matrix("1 2 24\n-2 0\n"),
                          Catch::Matchers::ContainsSubstring("shift out of range"));
    }
    SECTION("non-integer token") {
        CHECK_THROWS_WITH(parse_base_matrix("1 2 4\nx 0\n"),
                          Catch::Matchers::ContainsSubstring("non-integer"));
        CHECK_THROWS_WITH(parse_base_matrix("1 2 4\n1.5 0\n"),
                          Catch::Matchers::ContainsSubstring("non-integer"));
    }
    SECTION("dimension mismatch") {
        CHECK_THROWS(parse_base_matrix("2 3 3\n-1 0 1\n0 -1\n"));
        CHECK_THROWS(parse_base_matrix("2 3 3\n-1 0 1\n0 -1 2 5\n"));
        CHECK_THROWS(parse_base_matrix("0 3 3\n"));
    }
}

TEST_CASE("shipped WiMAX rate-3/4 code") {
    BaseMatrix bm = parse_base_matrix(slurp("data/codes/wimax_576_34b.bm"), "wimax_576_34b");
    CHECK(bm.proto_cns == 6);
    CHECK(bm.proto_vns == 24);
    CHECK(bm.lift == 24);
    CHECK(bm.proto_edges() == 88);

    TannerGraph g = lift(bm);
    CHECK(g.n == 576);
    CHECK(g.m == 144);
    CHECK(g.edges() == 88 * 24);
    CHECK(g.rate() == Catch::Approx(0.75));
}

TEST_CASE("shipped WLAN and NR codes lift cleanly") {
    TannerGraph wlan = lift(parse_base_matrix(slurp("data/codes/wlan_648_56.bm"), "wlan_648_56"));
    CHECK(wlan.n == 648);
    CHECK(wlan.rate() == Catch::Approx(5.0 / 6.0));
    TannerGraph nr = lift(parse_base_matrix(slurp("data/codes/nr_552_12.bm"), "nr_552_12"));
    CHECK(nr.n == 552);
    CHECK(nr.rate() == Catch::Approx(0.5));
}

TEST_CASE("lifting follows the circulant rule") {
    SECTION("single entry, shift 1, z 3") {
        BaseMatrix bm = parse_base_matrix("1 2 3\n1 0\n");
        TannerGraph g = lift(bm);
        // first proto entry (shift 1): VN offset i connects to CN (i+1) mod 3
        for (int i = 0; i < 3; ++i) {
            CHECK(g.edge_vn[i] == i);
            CHECK(g.edge_cn[i] == (i + 1) % 3);
        }
    }
    SECTION("all-absent matrix") {
        BaseMatrix bm = parse_base_matrix("2 2 4\n-1 -1\n-1 -1\n");
        CHECK_THROWS_WITH(lift(bm), Catch::Matchers::ContainsSubstring("no edges"));
    }
    SECTION("degree-1 check node rejected") {
        CHECK_THROWS(lift(parse_base_matrix("2 2 2\n0 1\n0 -1\n")));
    }
}

TEST_CASE("lift round-trip and degree conservation") {
    BaseMatrix bm = parse_base_matrix(slurp("data/codes/wimax_576_34b.bm"), "wimax_576_34b");
    TannerGraph g = lift(bm);

    // every edge maps back to its base-matrix entry and per-proto-edge
    // multiplicity is exactly z
    std::vector<int> per_proto(static_cast<std::size_t>(g.proto_edge_count), 0);
    for (int e = 0; e < g.edges(); ++e) {
        int pv = g.edge_proto_vn[e];
        int pc = g.edge_proto_cn[e];
        int s = bm.at(pc, pv);
        REQUIRE(s >= 0);
        int vn_off = g.edge_vn[e] % g.lift;
        int cn_off = g.edge_cn[e] % g.lift;
        CHECK(g.edge_vn[e] / g.lift == pv);
        CHECK(g.edge_cn[e] / g.lift == pc);
        CHECK(cn_off == (vn_off + s) % g.lift);
        ++per_proto[g.edge_proto_edge[e]];
    }
    for (int count : per_proto) CHECK(count == g.lift);

    long vn_sum = 0, cn_sum = 0;
    for (int v = 0; v < g.n; ++v) vn_sum += g.vn_degree(v);
    for (int c = 0; c < g.m; ++c) cn_sum += g.cn_degree(c);
    CHECK(vn_sum == g.edges());
    CHECK(cn_sum == g.edges());

    // adjacency maps are mutually inverse
    for (int v = 0; v < g.n; ++v)
        for (int k = g.vn_offsets[v]; k < g.vn_offsets[v + 1]; ++k)
            CHECK(g.edge_vn[g.vn_edges[k]] == v);
    for (int c = 0; c < g.m; ++c)
        for (int k = g.cn_offsets[c]; k < g.cn_offsets[c + 1]; ++k)
            CHECK(g.edge_cn[g.cn_edges[k]] == c);
}

TEST_CASE("syndrome") {
    BaseMatrix bm = parse_base_matrix("2 3 3\n-1 0 1\n0 -1 2\n");
    TannerGraph g = lift(bm);

    SECTION("all-zero word") {
        std::vector<std::uint8_t> bits(static_cast<std::size_t>(g.n), 0);
        for (auto p : syndrome(g, bits)) CHECK(p == 0);
    }
    SECTION("single one lights exactly the neighbours") {
        for (int v = 0; v < g.n; ++v) {
            std::vector<std::uint8_t> bits(static_cast<std::size_t>(g.n), 0);
            bits[v] = 1;
            auto par = syndrome(g, bits);
            std::set<int> expect;
            for (int k = g.vn_offsets[v]; k < g.vn_offsets[v + 1]; ++k)
                expect.insert(g.edge_cn[g.vn_edges[k]]);
            for (int c = 0; c < g.m; ++c) CHECK(par[c] == (expect.count(c) ? 1 : 0));
        }
    }
    SECTION("length mismatch") {
        std::vector<std::uint8_t> bits(3, 0);
        CHECK_THROWS(syndrome(g, bits));
    }
    SECTION("linearity over GF(2)") {
        std::mt19937_64 rng(7);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<std::uint8_t> a(static_cast<std::size_t>(g.n)), b(a), x(a);
            for (int v = 0; v < g.n; ++v) {
                a[v] = rng() & 1;
                b[v] = rng() & 1;
                x[v] = a[v] ^ b[v];
            }
            auto sa = syndrome(g, a), sb = syndrome(g, b), sx = syndrome(g, x);
            for (int c = 0; c < g.m; ++c) CHECK(sx[c] == (sa[c] ^ sb[c]));
        }
    }
}

TEST_CASE("brute-forced codewords of a toy code have zero syndrome") {
    // dense 4x8 parity matrix, z = 1
    const std::string toy =
        "4 8 1\n"
        "0 0 -1 0 -1 -1 0 -1\n"
        "-1 0 0 -1 0 -1 -1 0\n"
        "0 -1 0 -1 -1 0 0 -1\n"
        "-1 -1 -1 0 0 0 0 0\n";
    BaseMatrix bm = parse_base_matrix(toy);
    TannerGraph g = lift(bm);

    // independent oracle: exhaustive nullspace search over the dense matrix
    int h[4][8] = {};
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 8; ++c) h[r][c] = bm.at(r, c) != kAbsent;
    int codewords = 0;
    for (int word = 0; word < 256; ++word) {
        bool member = true;
        for (int r = 0; r < 4 && member; ++r) {
            int acc = 0;
            for (int c = 0; c < 8; ++c) acc ^= ((word >> c) & 1) & h[r][c];
            member = acc == 0;
        }
        if (!member) continue;
        ++codewords;
        std::vector<std::uint8_t> bits(8);
        for (int c = 0; c < 8; ++c) bits[c] = (word >> c) & 1;
        CHECK(is_codeword(g, bits));
    }
    CHECK(codewords == 16);  // 8 - rank(4) = 4 free bits
}

TEST_CASE("weight counts match the published table") {
    CHECK(weight_count(SharingScheme::full, 24, 88, 30) == 3360);
    CHECK(weight_count(SharingScheme::protograph_full, 24, 88, 30) == 3360);
    CHECK(weight_count(SharingScheme::spatial, 24, 88, 30) == 60);
    CHECK(weight_count(SharingScheme::temporal, 24, 88, 30) == 112);
    CHECK(weight_count(SharingScheme::spatial_ucn, 24, 88, 30) == 90);
    CHECK(weight_count("spatial", 24, 88, 30) == 60);
    CHECK_THROWS(weight_count("diagonal", 24, 88, 30));
    CHECK_THROWS(weight_count(SharingScheme::full, 24, 88, 0));
}

TEST_CASE("complexity accounting for the WiMAX code") {
    TannerGraph g = lift(parse_base_matrix(slurp("data/codes/wimax_576_34b.bm"), "wimax_576_34b"));

    ComplexityReport ms = complexity_estimate(g, DecoderKind::ms, 50);
    CHECK(ms.additions == 4224);
    CHECK(ms.multiplications == 2112);
    CHECK(ms.comparisons == 2256);
    CHECK(ms.total == 542400);
    CHECK(ms.weight_memory == 0);

    ComplexityReport nms = complexity_estimate(g, DecoderKind::nms, 50);
    CHECK(nms.additions == 4224);
    CHECK(nms.multiplications == 4800);
    CHECK(nms.total == 676800);
    CHECK(nms.weight_memory == (24 + 88) * 50);

    // per-stage memory accounting: spatial base + ucn post
    ComplexityReport staged = complexity_estimate(
        g, DecoderKind::nms, 50,
        {{SharingScheme::spatial, 20}, {SharingScheme::spatial_ucn, 30}});
    CHECK(staged.weight_memory == 2 * 20 + 3 * 30);

    CHECK(cn_comparisons(3) == 3);
}

TEST_CASE("alist import") {
    // 2x4 H with rows {0,1,2} and {1,3}
    const std::string alist =
        "4 2\n2 3\n"
        "1 2 1 1\n3 2\n"
        "1 0\n1 2\n1 0\n2 0\n"
        "1 2 3\n2 4\n";
    BaseMatrix bm = parse_alist(alist, "toy");
    CHECK(bm.lift == 1);
    CHECK(bm.proto_cns == 2);
    CHECK(bm.proto_vns == 4);
    CHECK(bm.at(0, 0) == 0);
    CHECK(bm.at(0, 1) == 0);
    CHECK(bm.at(0, 2) == 0);
    CHECK(bm.at(0, 3) == kAbsent);
    CHECK(bm.at(1, 1) == 0);
    CHECK(bm.at(1, 3) == 0);
    CHECK(bm.proto_edges() == 5);
}
