#pragma once

#include <cstdint>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nmsdec {

constexpr int kAbsent = -1;

// Protograph of a QC-LDPC code: an M x N grid of circulant shifts in [0, z),
// -1 marking absent entries.
struct BaseMatrix {
    int proto_cns = 0;   // M
    int proto_vns = 0;   // N
    int lift = 1;        // z
    std::vector<int> shifts;  // row-major, M*N, kAbsent or [0, z)
    std::string id;           // free-form label, usually the file stem

    int at(int r, int c) const { return shifts[static_cast<std::size_t>(r) * proto_vns + c]; }
    int& at(int r, int c) { return shifts[static_cast<std::size_t>(r) * proto_vns + c]; }

    int proto_edges() const {
        int e = 0;
        for (int s : shifts) e += (s != kAbsent);
        return e;
    }

    int row_degree(int r) const {
        int d = 0;
        for (int c = 0; c < proto_vns; ++c) d += (at(r, c) != kAbsent);
        return d;
    }
    int col_degree(int c) const {
        int d = 0;
        for (int r = 0; r < proto_cns; ++r) d += (at(r, c) != kAbsent);
        return d;
    }

    void validate() const {
        if (proto_cns < 1 || proto_vns < 1 || lift < 1)
            throw std::invalid_argument("base matrix: M, N, z must be >= 1");
        if (shifts.size() != static_cast<std::size_t>(proto_cns) * proto_vns)
            throw std::invalid_argument("base matrix: entry count mismatch");
        for (int s : shifts)
            if (s != kAbsent && (s < 0 || s >= lift))
                throw std::invalid_argument("base matrix: shift out of range [0, z)");
    }
};

// Text format: line 1 "M N z", then M lines of N integers, -1 = absent.
inline BaseMatrix parse_base_matrix(const std::string& text, const std::string& id = "") {
    std::istringstream in(text);
    auto next_int = [&](const char* what) {
        std::string tok;
        if (!(in >> tok)) throw std::invalid_argument(std::string("base matrix: missing ") + what);
        std::size_t pos = 0;
        long v = 0;
        try {
            v = std::stol(tok, &pos);
        } catch (const std::exception&) {
            throw std::invalid_argument("base matrix: non-integer token '" + tok + "'");
        }
        if (pos != tok.size())
            throw std::invalid_argument("base matrix: non-integer token '" + tok + "'");
        return static_cast<int>(v);
    };

    BaseMatrix bm;
    bm.id = id;
    bm.proto_cns = next_int("M");
    bm.proto_vns = next_int("N");
    bm.lift = next_int("z");
    if (bm.proto_cns < 1 || bm.proto_vns < 1 || bm.lift < 1)
        throw std::invalid_argument("base matrix: M, N, z must be >= 1");
    bm.shifts.resize(static_cast<std::size_t>(bm.proto_cns) * bm.proto_vns);
    for (int r = 0; r < bm.proto_cns; ++r) {
        for (int c = 0; c < bm.proto_vns; ++c) {
            int s = next_int("entry");
            if (s < kAbsent) throw std::invalid_argument("base matrix: shift out of range [0, z)");
            if (s >= bm.lift) throw std::invalid_argument("base matrix: shift out of range [0, z)");
            bm.at(r, c) = s;
        }
    }
    std::string extra;
    if (in >> extra) throw std::invalid_argument("base matrix: trailing token '" + extra + "'");
    bm.validate();
    return bm;
}

// alist import (MacKay format). A general H matrix is represented as a
// z=1 protograph whose present entries all carry shift 0.
inline BaseMatrix parse_alist(const std::string& text, const std::string& id = "") {
    std::istringstream in(text);
    long n = 0, m = 0, dvmax = 0, dcmax = 0;
    if (!(in >> n >> m >> dvmax >> dcmax)) throw std::invalid_argument("alist: bad header");
    if (n < 1 || m < 1) throw std::invalid_argument("alist: bad dimensions");
    std::vector<int> dv(static_cast<std::size_t>(n)), dc(static_cast<std::size_t>(m));
    for (auto& d : dv)
        if (!(in >> d)) throw std::invalid_argument("alist: truncated column degrees");
    for (auto& d : dc)
        if (!(in >> d)) throw std::invalid_argument("alist: truncated row degrees");

    BaseMatrix bm;
    bm.id = id;
    bm.proto_cns = static_cast<int>(m);
    bm.proto_vns = static_cast<int>(n);
    bm.lift = 1;
    bm.shifts.assign(static_cast<std::size_t>(m) * n, kAbsent);
    // column neighbour lists, 1-indexed, zero-padded to dvmax
    for (long c = 0; c < n; ++c) {
        for (long k = 0; k < dvmax; ++k) {
            long r = 0;
            if (!(in >> r)) throw std::invalid_argument("alist: truncated column list");
            if (r == 0) continue;
            if (r < 1 || r > m) throw std::invalid_argument("alist: row index out of range");
            bm.at(static_cast<int>(r - 1), static_cast<int>(c)) = 0;
        }
    }
    // row lists are redundant; ignore the remainder
    return bm;
}

// One lifted edge. Canonical order: base-matrix entries row-major, then
// ascending lift offset. This order fixes weight-file layout and the
// reduction order of every deterministic accumulation.
struct TannerGraph {
    int n = 0;  // variable nodes
    int m = 0;  // check nodes
    int lift = 1;
    int proto_vns = 0, proto_cns = 0, proto_edge_count = 0;
    std::string id;

    std::vector<std::int32_t> edge_vn, edge_cn;          // per edge
    std::vector<std::int32_t> edge_proto_vn, edge_proto_cn, edge_proto_edge;

    // CSR adjacency, edge ids ascending within each node
    std::vector<std::int32_t> vn_offsets, vn_edges;
    std::vector<std::int32_t> cn_offsets, cn_edges;

    int edges() const { return static_cast<int>(edge_vn.size()); }
    int vn_degree(int v) const { return vn_offsets[v + 1] - vn_offsets[v]; }
    int cn_degree(int c) const { return cn_offsets[c + 1] - cn_offsets[c]; }
    double rate() const { return static_cast<double>(n - m) / n; }
};

inline TannerGraph lift(const BaseMatrix& bm) {
    bm.validate();
    const int z = bm.lift;
    TannerGraph g;
    g.id = bm.id;
    g.lift = z;
    g.proto_vns = bm.proto_vns;
    g.proto_cns = bm.proto_cns;
    g.n = bm.proto_vns * z;
    g.m = bm.proto_cns * z;

    int proto_e = bm.proto_edges();
    if (proto_e == 0) throw std::invalid_argument("lift: graph has no edges");
    g.proto_edge_count = proto_e;

    std::size_t total = static_cast<std::size_t>(proto_e) * z;
    g.edge_vn.reserve(total);
    g.edge_cn.reserve(total);
    g.edge_proto_vn.reserve(total);
    g.edge_proto_cn.reserve(total);
    g.edge_proto_edge.reserve(total);

    int pe = 0;
    for (int r = 0; r < bm.proto_cns; ++r) {
        for (int c = 0; c < bm.proto_vns; ++c) {
            int s = bm.at(r, c);
            if (s == kAbsent) continue;
            for (int i = 0; i < z; ++i) {
                g.edge_vn.push_back(c * z + i);
                g.edge_cn.push_back(r * z + (i + s) % z);
                g.edge_proto_vn.push_back(c);
                g.edge_proto_cn.push_back(r);
                g.edge_proto_edge.push_back(pe);
            }
            ++pe;
        }
    }

    auto build_csr = [&](int nodes, const std::vector<std::int32_t>& node_of,
                         std::vector<std::int32_t>& offsets, std::vector<std::int32_t>& lists) {
        offsets.assign(static_cast<std::size_t>(nodes) + 1, 0);
        for (std::int32_t v : node_of) ++offsets[static_cast<std::size_t>(v) + 1];
        for (int i = 0; i < nodes; ++i) offsets[i + 1] += offsets[i];
        lists.resize(node_of.size());
        std::vector<std::int32_t> cursor(offsets.begin(), offsets.end() - 1);
        for (std::int32_t e = 0; e < static_cast<std::int32_t>(node_of.size()); ++e)
            lists[cursor[node_of[e]]++] = e;  // ascending edge ids per node
    };
    build_csr(g.n, g.edge_vn, g.vn_offsets, g.vn_edges);
    build_csr(g.m, g.edge_cn, g.cn_offsets, g.cn_edges);

    for (int c = 0; c < g.m; ++c)
        if (g.cn_degree(c) < 2)
            throw std::invalid_argument("lift: check node of degree < 2 (row degree must be >= 2)");
    return g;
}

// parity[c] = XOR of bits over N(c); all-zero syndrome <=> bits is a codeword
inline std::vector<std::uint8_t> syndrome(const TannerGraph& g, const std::vector<std::uint8_t>& bits) {
    if (static_cast<int>(bits.size()) != g.n)
        throw std::invalid_argument("syndrome: bit vector length mismatch");
    std::vector<std::uint8_t> parity(static_cast<std::size_t>(g.m), 0);
    for (int e = 0; e < g.edges(); ++e) parity[g.edge_cn[e]] ^= (bits[g.edge_vn[e]] & 1u);
    return parity;
}

inline bool is_codeword(const TannerGraph& g, const std::vector<std::uint8_t>& bits) {
    for (std::uint8_t p : syndrome(g, bits))
        if (p) return false;
    return true;
}

}  // namespace nmsdec
