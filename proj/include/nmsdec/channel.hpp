#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "nmsdec/util.hpp"

namespace nmsdec {

enum class ChannelKind : std::uint8_t { awgn = 0, rayleigh = 1 };

struct ChannelParams {
    ChannelKind kind = ChannelKind::awgn;
    double ebn0_db = 0.0;
    double rate = 0.5;          // R = (n - m) / n of the code in use
    double rayleigh_scale = 1.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(rate > 0.0 && rate < 1.0)) throw std::invalid_argument("channel: rate must be in (0,1)");
        if (!std::isfinite(ebn0_db)) throw std::invalid_argument("channel: Eb/N0 must be finite");
        if (!(rayleigh_scale > 0.0)) throw std::invalid_argument("channel: scale must be positive");
    }
};

// Unit-energy BPSK: sigma = (2 R 10^(EbN0/10))^(-1/2)
inline double ebn0_to_sigma(double ebn0_db, double rate) {
    if (!(rate > 0.0 && rate < 1.0)) throw std::invalid_argument("ebn0_to_sigma: rate must be in (0,1)");
    return 1.0 / std::sqrt(2.0 * rate * std::pow(10.0, ebn0_db / 10.0));
}

// Platform-stable normal sampler (Box-Muller over 53-bit uniforms) so that
// a fixed seed gives bit-identical frames on any standard library.
class NormalSampler {
public:
    explicit NormalSampler(std::uint64_t seed) : rng_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform_open();
        double u2 = uniform_open();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // uniform in (0, 1]
    double uniform_open() {
        std::uint64_t bits = rng_();
        return (static_cast<double>(bits >> 11) + 1.0) * (1.0 / 9007199254740992.0);
    }

private:
    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Channel LLRs for one frame under all-zero-codeword transmission (BPSK +1
// per bit). `frame_index` selects an independent stream, so generation is
// pure and parallelizes without shared state.
inline void transmit_into(const ChannelParams& params, int n, std::uint64_t frame_index,
                          std::vector<double>& llr) {
    params.validate();
    const double sigma = ebn0_to_sigma(params.ebn0_db, params.rate);
    const double two_over_s2 = 2.0 / (sigma * sigma);
    NormalSampler rng(mix_seed(params.seed, frame_index));
    llr.resize(static_cast<std::size_t>(n));
    if (params.kind == ChannelKind::awgn) {
        for (int v = 0; v < n; ++v) {
            double y = 1.0 + sigma * rng();
            llr[static_cast<std::size_t>(v)] = two_over_s2 * y;
        }
    } else {
        // fading coefficient known at the receiver
        for (int v = 0; v < n; ++v) {
            double h = params.rayleigh_scale * std::sqrt(-2.0 * std::log(rng.uniform_open()));
            double y = h + sigma * rng();
            llr[static_cast<std::size_t>(v)] = two_over_s2 * h * y;
        }
    }
}

inline std::vector<double> transmit(const ChannelParams& params, int n, std::uint64_t frame_index) {
    std::vector<double> llr;
    transmit_into(params, n, frame_index, llr);
    return llr;
}

}  // namespace nmsdec
