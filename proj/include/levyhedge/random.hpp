#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace levyhedge {

// One mt19937_64 stream per (seed, stream index).  Draws can be taped and replayed
// with every normal negated, which gives antithetic partners for any sampler built
// on top of this class.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                          0x9e3779b9u};
        engine_.seed(seq);
    }

    void record() {
        mode_ = Mode::record;
        tape_.clear();
    }
    void mirror() {
        mode_ = Mode::mirror;
        pos_ = 0;
    }
    void plain() { mode_ = Mode::plain; }

    double normal() {
        if (mode_ == Mode::mirror) return -tape_[pos_++];
        return keep(normal_(engine_));
    }
    double uniform() {
        if (mode_ == Mode::mirror) return tape_[pos_++];
        // (0, 1]: safe for logs.
        return keep(1.0 - uniform_(engine_));
    }
    double gamma(double shape, double scale) {
        if (mode_ == Mode::mirror) return tape_[pos_++];
        return keep(std::gamma_distribution<double>(shape, scale)(engine_));
    }
    std::uint64_t poisson(double mean) {
        if (mode_ == Mode::mirror) return static_cast<std::uint64_t>(tape_[pos_++]);
        if (mean <= 0.0) return static_cast<std::uint64_t>(keep(0.0));
        const auto k = std::poisson_distribution<std::uint64_t>(mean)(engine_);
        return static_cast<std::uint64_t>(keep(static_cast<double>(k)));
    }
    double exponential() { return -std::log(uniform()); }

private:
    enum class Mode { plain, record, mirror };

    double keep(double v) {
        if (mode_ == Mode::record) tape_.push_back(v);
        return v;
    }

    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
    std::uniform_real_distribution<double> uniform_;
    Mode mode_ = Mode::plain;
    std::vector<double> tape_;
    std::size_t pos_ = 0;
};

}  // namespace levyhedge
