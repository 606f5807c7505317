#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "nmsdec/channel.hpp"

namespace nmsdec {

// Collected channel-LLR frames (unquantized, stored as 32-bit floats) plus
// the provenance needed to re-verify that the frozen collecting decoder
// fails on every one of them.
struct Dataset {
    std::string code_id;
    ChannelKind kind = ChannelKind::awgn;
    double rate = 0.5;
    double rayleigh_scale = 1.0;
    std::uint64_t seed = 0;
    std::vector<double> region;        // Eb/N0 values sampled uniformly
    std::uint64_t decoder_digest = 0;  // digest of the frozen weight stack
    std::uint32_t decode_iterations = 0;
    int frame_length = 0;

    std::vector<float> llrs;  // flat, sample-major, frame_length per sample

    std::size_t size() const {
        return frame_length == 0 ? 0 : llrs.size() / static_cast<std::size_t>(frame_length);
    }

    const float* sample(std::size_t i) const {
        return llrs.data() + i * static_cast<std::size_t>(frame_length);
    }

    void sample_as_double(std::size_t i, std::vector<double>& out) const {
        const float* p = sample(i);
        out.assign(p, p + frame_length);
    }

    void append(const std::vector<double>& frame) {
        if (static_cast<int>(frame.size()) != frame_length)
            throw std::invalid_argument("dataset: frame length mismatch");
        for (double x : frame) llrs.push_back(static_cast<float>(x));
    }

    Dataset clone_header() const {
        Dataset d = *this;
        d.llrs.clear();
        return d;
    }
};

namespace detail {

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T read_pod(std::istream& is) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
        throw std::runtime_error("dataset: truncated file");
    return v;
}

}  // namespace detail

inline constexpr char kDatasetMagic[8] = {'N', 'M', 'S', 'D', 'S', '0', '0', '1'};

inline void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("dataset: cannot open '" + path + "' for writing");
    os.write(kDatasetMagic, 8);
    detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(ds.code_id.size()));
    os.write(ds.code_id.data(), static_cast<std::streamsize>(ds.code_id.size()));
    detail::write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(ds.kind));
    detail::write_pod<double>(os, ds.rate);
    detail::write_pod<double>(os, ds.rayleigh_scale);
    detail::write_pod<std::uint64_t>(os, ds.seed);
    detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(ds.region.size()));
    for (double r : ds.region) detail::write_pod<double>(os, r);
    detail::write_pod<std::uint64_t>(os, ds.decoder_digest);
    detail::write_pod<std::uint32_t>(os, ds.decode_iterations);
    detail::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(ds.frame_length));
    detail::write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(ds.size()));
    os.write(reinterpret_cast<const char*>(ds.llrs.data()),
             static_cast<std::streamsize>(ds.llrs.size() * sizeof(float)));
    if (!os) throw std::runtime_error("dataset: write failed for '" + path + "'");
}

inline Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("dataset: cannot open '" + path + "'");
    char magic[8];
    if (!is.read(magic, 8) || std::memcmp(magic, kDatasetMagic, 8) != 0)
        throw std::runtime_error("dataset: bad magic in '" + path + "'");
    Dataset ds;
    auto idlen = detail::read_pod<std::uint32_t>(is);
    ds.code_id.resize(idlen);
    if (idlen && !is.read(ds.code_id.data(), idlen)) throw std::runtime_error("dataset: truncated file");
    ds.kind = static_cast<ChannelKind>(detail::read_pod<std::uint8_t>(is));
    ds.rate = detail::read_pod<double>(is);
    ds.rayleigh_scale = detail::read_pod<double>(is);
    ds.seed = detail::read_pod<std::uint64_t>(is);
    auto rc = detail::read_pod<std::uint32_t>(is);
    ds.region.resize(rc);
    for (auto& r : ds.region) r = detail::read_pod<double>(is);
    ds.decoder_digest = detail::read_pod<std::uint64_t>(is);
    ds.decode_iterations = detail::read_pod<std::uint32_t>(is);
    ds.frame_length = static_cast<int>(detail::read_pod<std::uint32_t>(is));
    auto count = detail::read_pod<std::uint64_t>(is);
    ds.llrs.resize(static_cast<std::size_t>(count) * ds.frame_length);
    if (!is.read(reinterpret_cast<char*>(ds.llrs.data()),
                 static_cast<std::streamsize>(ds.llrs.size() * sizeof(float))))
        throw std::runtime_error("dataset: truncated sample block");
    return ds;
}

inline void export_dataset_csv(const Dataset& ds, std::ostream& os) {
    os << "sample";
    for (int v = 0; v < ds.frame_length; ++v) os << ",llr" << v;
    os << "\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        os << i;
        const float* p = ds.sample(i);
        for (int v = 0; v < ds.frame_length; ++v) os << "," << p[v];
        os << "\n";
    }
}

// Deterministic shuffled split; `counts` must sum to the sample count.
inline std::vector<Dataset> split_dataset(const Dataset& ds, const std::vector<std::size_t>& counts,
                                          std::uint64_t seed) {
    std::size_t total = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
    if (total != ds.size())
        throw std::invalid_argument("split_dataset: split sizes do not sum to the sample count");
    std::vector<std::size_t> perm(ds.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = perm.size(); i > 1; --i) {
        std::size_t j = rng() % i;  // Fisher-Yates, stable across platforms
        std::swap(perm[i - 1], perm[j]);
    }
    std::vector<Dataset> parts;
    parts.reserve(counts.size());
    std::size_t at = 0;
    for (std::size_t part = 0; part < counts.size(); ++part) {
        Dataset d = ds.clone_header();
        d.llrs.reserve(counts[part] * static_cast<std::size_t>(ds.frame_length));
        for (std::size_t k = 0; k < counts[part]; ++k) {
            const float* p = ds.sample(perm[at++]);
            d.llrs.insert(d.llrs.end(), p, p + ds.frame_length);
        }
        parts.push_back(std::move(d));
    }
    return parts;
}

}  // namespace nmsdec
