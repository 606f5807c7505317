#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace nmsdec {

// Uniform symmetric message quantizer. The default (max 7.5, step 0.5) gives
// the 31-level alphabet {-7.5, ..., -0.5, 0, 0.5, ..., 7.5} of a 5-bit
// sign-magnitude format. Ties round away from zero so the map stays odd.
struct Quantizer {
    double max_mag = 7.5;
    double step = 0.5;

    Quantizer() = default;
    Quantizer(double max_mag_, double step_) : max_mag(max_mag_), step(step_) { validate(); }

    void validate() const {
        if (!(max_mag > 0.0) || !(step > 0.0))
            throw std::invalid_argument("quantizer: max and step must be positive");
        double levels = max_mag / step;
        if (std::fabs(levels - std::round(levels)) > 1e-9)
            throw std::invalid_argument("quantizer: max must be an integer multiple of step");
    }

    int levels_per_side() const { return static_cast<int>(std::round(max_mag / step)); }
    int alphabet_size() const { return 2 * levels_per_side() + 1; }
    int bit_width() const {
        int b = 0;
        while ((1 << b) < alphabet_size()) ++b;
        return b;
    }

    double apply(double x) const {
        if (x > max_mag) return max_mag;
        if (x < -max_mag) return -max_mag;
        // std::round halves away from zero, which is the tie rule we want
        double q = std::round(x / step) * step;
        return q == 0.0 ? 0.0 : q;  // normalize -0.0
    }

    bool in_alphabet(double x) const {
        if (std::fabs(x) > max_mag + 1e-12) return false;
        double k = x / step;
        return std::fabs(k - std::round(k)) < 1e-9;
    }

    std::vector<double> alphabet() const {
        std::vector<double> a;
        int half = levels_per_side();
        a.reserve(static_cast<std::size_t>(alphabet_size()));
        for (int k = -half; k <= half; ++k) a.push_back(k == 0 ? 0.0 : k * step);
        return a;
    }
};

}  // namespace nmsdec
