#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nmsdec/complexity.hpp"
#include "nmsdec/quantizer.hpp"
#include "nmsdec/util.hpp"

#include <json.hpp>

namespace nmsdec {

// All trainable parameters of one decoding stage under a sharing scheme.
// Storage layouts (canonical order, fixed by the scheme):
//   full / protograph-full : per iteration [N vn weights][E cn weights]
//   spatial                : per iteration [vn][cn]
//   temporal               : [N vn weights][E cn weights]
//   spatial-ucn            : per iteration [vn][scn][ucn]
class WeightSet {
public:
    WeightSet() = default;
    WeightSet(SharingScheme scheme, int iter_first, int iter_last, int proto_vns, int proto_edges,
              double init = 1.0)
        : scheme_(scheme), iter_first_(iter_first), iter_last_(iter_last),
          proto_vns_(proto_vns), proto_edges_(proto_edges) {
        if (iter_first < 1 || iter_last < iter_first)
            throw std::invalid_argument("weight set: bad iteration range");
        params_.assign(static_cast<std::size_t>(weight_count(scheme, proto_vns, proto_edges, iterations())),
                       init);
    }

    SharingScheme scheme() const { return scheme_; }
    int iter_first() const { return iter_first_; }
    int iter_last() const { return iter_last_; }
    int iterations() const { return iter_last_ - iter_first_ + 1; }
    int proto_vns() const { return proto_vns_; }
    int proto_edges() const { return proto_edges_; }
    bool covers(int iter) const { return iter >= iter_first_ && iter <= iter_last_; }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }

    std::size_t vn_index(int iter, int proto_vn) const {
        check_iter(iter);
        std::size_t i = static_cast<std::size_t>(iter - iter_first_);
        switch (scheme_) {
            case SharingScheme::full:
            case SharingScheme::protograph_full:
                return i * static_cast<std::size_t>(proto_vns_ + proto_edges_) + proto_vn;
            case SharingScheme::spatial: return i * 2;
            case SharingScheme::temporal: return static_cast<std::size_t>(proto_vn);
            case SharingScheme::spatial_ucn: return i * 3;
        }
        throw std::logic_error("unreachable");
    }

    std::size_t cn_index(int iter, int proto_edge, bool satisfied) const {
        check_iter(iter);
        std::size_t i = static_cast<std::size_t>(iter - iter_first_);
        switch (scheme_) {
            case SharingScheme::full:
            case SharingScheme::protograph_full:
                return i * static_cast<std::size_t>(proto_vns_ + proto_edges_) + proto_vns_ + proto_edge;
            case SharingScheme::spatial: return i * 2 + 1;
            case SharingScheme::temporal: return static_cast<std::size_t>(proto_vns_ + proto_edge);
            case SharingScheme::spatial_ucn: return i * 3 + (satisfied ? 1 : 2);
        }
        throw std::logic_error("unreachable");
    }

    double vn_weight(int iter, int proto_vn) const { return params_[vn_index(iter, proto_vn)]; }
    double cn_weight(int iter, int proto_edge, bool satisfied) const {
        return params_[cn_index(iter, proto_edge, satisfied)];
    }

    std::uint64_t digest(std::uint64_t h = 0xcbf29ce484222325ULL) const {
        h = fnv1a64(scheme_name(scheme_), h);
        std::int32_t meta[4] = {iter_first_, iter_last_, proto_vns_, proto_edges_};
        h = fnv1a64(meta, sizeof(meta), h);
        return fnv1a64(params_.data(), params_.size() * sizeof(double), h);
    }

private:
    void check_iter(int iter) const {
        if (!covers(iter)) throw std::out_of_range("weight set: iteration outside covered range");
    }

    SharingScheme scheme_ = SharingScheme::spatial;
    int iter_first_ = 1, iter_last_ = 1;
    int proto_vns_ = 0, proto_edges_ = 0;
    std::vector<double> params_;
};

// Ordered stages with contiguous, disjoint iteration ranges starting at 1.
struct WeightStack {
    std::vector<WeightSet> stages;
    std::string code_id;
    Quantizer quantizer;  // recorded alongside so a weight file pins its alphabet

    void validate(int total_iterations = 0) const {
        if (stages.empty()) throw std::invalid_argument("weight stack: no stages");
        int expect = 1;
        for (const auto& s : stages) {
            if (s.iter_first() != expect)
                throw std::invalid_argument("weight stack: stages must be contiguous from iteration 1");
            expect = s.iter_last() + 1;
        }
        if (total_iterations > 0 && expect <= total_iterations)
            throw std::invalid_argument("weight stack: weight coverage gap before requested depth");
    }

    int last_iteration() const { return stages.empty() ? 0 : stages.back().iter_last(); }

    const WeightSet& stage_for(int iter) const {
        for (const auto& s : stages)
            if (s.covers(iter)) return s;
        throw std::out_of_range("weight stack: iteration not covered");
    }
    WeightSet& stage_for(int iter) {
        for (auto& s : stages)
            if (s.covers(iter)) return s;
        throw std::out_of_range("weight stack: iteration not covered");
    }

    std::uint64_t digest() const {
        std::uint64_t h = fnv1a64(code_id);
        for (const auto& s : stages) h = s.digest(h);
        return h;
    }

    // Uniform MS weights (everything 1.0) as a single spatial stage.
    static WeightStack ms(int iterations, int proto_vns, int proto_edges, const std::string& code_id = "") {
        WeightStack w;
        w.code_id = code_id;
        w.stages.emplace_back(SharingScheme::spatial, 1, iterations, proto_vns, proto_edges, 1.0);
        return w;
    }

    // WMS: all CN weights share one value, VN weights stay at 1.
    static WeightStack wms(int iterations, int proto_vns, int proto_edges, double cn_weight,
                           const std::string& code_id = "") {
        WeightStack w = ms(iterations, proto_vns, proto_edges, code_id);
        auto& p = w.stages[0].params();
        for (int i = 0; i < iterations; ++i) p[static_cast<std::size_t>(i) * 2 + 1] = cn_weight;
        return w;
    }
};

// Expands any scheme to protograph-full storage using the satisfied-CN value
// per (iteration, proto edge). Reproduces the source decode bit-exactly on
// frames where every CN stays satisfied.
inline WeightSet broadcast_full(const WeightSet& src) {
    WeightSet out(SharingScheme::protograph_full, src.iter_first(), src.iter_last(), src.proto_vns(),
                  src.proto_edges());
    for (int it = src.iter_first(); it <= src.iter_last(); ++it) {
        for (int v = 0; v < src.proto_vns(); ++v)
            out.params()[out.vn_index(it, v)] = src.vn_weight(it, v);
        for (int e = 0; e < src.proto_edges(); ++e)
            out.params()[out.cn_index(it, e, true)] = src.cn_weight(it, e, true);
    }
    return out;
}

inline nlohmann::json weight_set_to_json(const WeightSet& ws) {
    nlohmann::json j;
    j["scheme"] = scheme_name(ws.scheme());
    j["iter_first"] = ws.iter_first();
    j["iter_last"] = ws.iter_last();
    const auto& p = ws.params();
    const int n = ws.proto_vns(), e = ws.proto_edges(), l = ws.iterations();
    switch (ws.scheme()) {
        case SharingScheme::full:
        case SharingScheme::protograph_full: {
            nlohmann::json vn = nlohmann::json::array(), cn = nlohmann::json::array();
            for (int i = 0; i < l; ++i) {
                std::size_t base = static_cast<std::size_t>(i) * (n + e);
                vn.push_back(std::vector<double>(p.begin() + base, p.begin() + base + n));
                cn.push_back(std::vector<double>(p.begin() + base + n, p.begin() + base + n + e));
            }
            j["vn"] = std::move(vn);
            j["cn"] = std::move(cn);
            break;
        }
        case SharingScheme::spatial: {
            std::vector<double> vn(l), cn(l);
            for (int i = 0; i < l; ++i) {
                vn[i] = p[static_cast<std::size_t>(i) * 2];
                cn[i] = p[static_cast<std::size_t>(i) * 2 + 1];
            }
            j["vn"] = vn;
            j["cn"] = cn;
            break;
        }
        case SharingScheme::temporal:
            j["vn"] = std::vector<double>(p.begin(), p.begin() + n);
            j["cn"] = std::vector<double>(p.begin() + n, p.begin() + n + e);
            break;
        case SharingScheme::spatial_ucn: {
            std::vector<double> vn(l), cn(l), ucn(l);
            for (int i = 0; i < l; ++i) {
                vn[i] = p[static_cast<std::size_t>(i) * 3];
                cn[i] = p[static_cast<std::size_t>(i) * 3 + 1];
                ucn[i] = p[static_cast<std::size_t>(i) * 3 + 2];
            }
            j["vn"] = vn;
            j["cn"] = cn;
            j["ucn"] = ucn;
            break;
        }
    }
    return j;
}

inline WeightSet weight_set_from_json(const nlohmann::json& j, int proto_vns, int proto_edges) {
    WeightSet ws(scheme_from_name(j.at("scheme").get<std::string>()), j.at("iter_first").get<int>(),
                 j.at("iter_last").get<int>(), proto_vns, proto_edges);
    auto& p = ws.params();
    const int n = proto_vns, e = proto_edges, l = ws.iterations();
    auto expect_len = [](const nlohmann::json& a, std::size_t len, const char* what) {
        if (!a.is_array() || a.size() != len)
            throw std::invalid_argument(std::string("weight file: bad length for ") + what);
    };
    switch (ws.scheme()) {
        case SharingScheme::full:
        case SharingScheme::protograph_full: {
            const auto& vn = j.at("vn");
            const auto& cn = j.at("cn");
            expect_len(vn, static_cast<std::size_t>(l), "vn");
            expect_len(cn, static_cast<std::size_t>(l), "cn");
            for (int i = 0; i < l; ++i) {
                expect_len(vn[i], static_cast<std::size_t>(n), "vn row");
                expect_len(cn[i], static_cast<std::size_t>(e), "cn row");
                std::size_t base = static_cast<std::size_t>(i) * (n + e);
                for (int k = 0; k < n; ++k) p[base + k] = vn[i][k].get<double>();
                for (int k = 0; k < e; ++k) p[base + n + k] = cn[i][k].get<double>();
            }
            break;
        }
        case SharingScheme::spatial: {
            expect_len(j.at("vn"), static_cast<std::size_t>(l), "vn");
            expect_len(j.at("cn"), static_cast<std::size_t>(l), "cn");
            for (int i = 0; i < l; ++i) {
                p[static_cast<std::size_t>(i) * 2] = j["vn"][i].get<double>();
                p[static_cast<std::size_t>(i) * 2 + 1] = j["cn"][i].get<double>();
            }
            break;
        }
        case SharingScheme::temporal: {
            expect_len(j.at("vn"), static_cast<std::size_t>(n), "vn");
            expect_len(j.at("cn"), static_cast<std::size_t>(e), "cn");
            for (int k = 0; k < n; ++k) p[static_cast<std::size_t>(k)] = j["vn"][k].get<double>();
            for (int k = 0; k < e; ++k) p[static_cast<std::size_t>(n + k)] = j["cn"][k].get<double>();
            break;
        }
        case SharingScheme::spatial_ucn: {
            expect_len(j.at("vn"), static_cast<std::size_t>(l), "vn");
            expect_len(j.at("cn"), static_cast<std::size_t>(l), "cn");
            expect_len(j.at("ucn"), static_cast<std::size_t>(l), "ucn");
            for (int i = 0; i < l; ++i) {
                p[static_cast<std::size_t>(i) * 3] = j["vn"][i].get<double>();
                p[static_cast<std::size_t>(i) * 3 + 1] = j["cn"][i].get<double>();
                p[static_cast<std::size_t>(i) * 3 + 2] = j["ucn"][i].get<double>();
            }
            break;
        }
    }
    for (double v : p)
        if (!std::isfinite(v)) throw std::invalid_argument("weight file: non-finite parameter");
    return ws;
}

constexpr int kWeightFormatVersion = 1;

inline nlohmann::json weight_stack_to_json(const WeightStack& w, int proto_vns, int proto_edges) {
    nlohmann::json j;
    j["format_version"] = kWeightFormatVersion;
    j["code_id"] = w.code_id;
    j["proto_vns"] = proto_vns;
    j["proto_edges"] = proto_edges;
    j["quantizer"] = {{"max", w.quantizer.max_mag}, {"step", w.quantizer.step}};
    j["stages"] = nlohmann::json::array();
    for (const auto& s : w.stages) j["stages"].push_back(weight_set_to_json(s));
    return j;
}

inline WeightStack weight_stack_from_json(const nlohmann::json& j) {
    if (j.at("format_version").get<int>() != kWeightFormatVersion)
        throw std::invalid_argument("weight file: unsupported format version");
    WeightStack w;
    w.code_id = j.at("code_id").get<std::string>();
    int n = j.at("proto_vns").get<int>();
    int e = j.at("proto_edges").get<int>();
    if (j.contains("quantizer"))
        w.quantizer = Quantizer(j["quantizer"].at("max").get<double>(), j["quantizer"].at("step").get<double>());
    for (const auto& js : j.at("stages")) w.stages.push_back(weight_set_from_json(js, n, e));
    w.validate();
    return w;
}

}  // namespace nmsdec
