#include "overq/generators.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace overq {

void DistSpec::validate() const {
    if (kind == DistKind::Mixture) {
        if (components.empty())
            throw std::invalid_argument("DistSpec: mixture needs at least one component");
        double total = 0.0;
        for (const MixComponent& c : components) {
            if (c.kind == DistKind::Mixture)
                throw std::invalid_argument("DistSpec: mixture components cannot nest");
            if (!(c.weight > 0.0) || !(c.sigma > 0.0))
                throw std::invalid_argument("DistSpec: component weight and sigma must be > 0");
            total += c.weight;
        }
        if (!(total > 0.0)) throw std::invalid_argument("DistSpec: zero total weight");
    } else if (!(sigma > 0.0)) {
        throw std::invalid_argument("DistSpec: sigma must be > 0");
    }
}

namespace {

double uniform01_open(std::mt19937_64& rng) {
    // In (0, 1]; keeps log() finite below.
    return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

// Box-Muller, one variate per call; std::normal_distribution is
// implementation-defined, this is reproducible everywhere.
double standard_normal(std::mt19937_64& rng) {
    double u1 = uniform01_open(rng);
    double u2 = uniform01_open(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double draw(const DistSpec& dist, std::mt19937_64& rng) {
    switch (dist.kind) {
        case DistKind::HalfNormal:
            return std::fabs(standard_normal(rng)) * dist.sigma;
        case DistKind::ReluNormal: {
            double z = standard_normal(rng) * dist.sigma;
            return z > 0.0 ? z : 0.0;
        }
        case DistKind::Mixture: {
            double total = 0.0;
            for (const MixComponent& c : dist.components) total += c.weight;
            double pick = uniform01_open(rng) * total;
            for (const MixComponent& c : dist.components) {
                pick -= c.weight;
                if (pick <= 0.0) {
                    DistSpec leaf{c.kind, c.sigma, {}};
                    return draw(leaf, rng);
                }
            }
            DistSpec leaf{dist.components.back().kind, dist.components.back().sigma, {}};
            return draw(leaf, rng);
        }
    }
    return 0.0;
}

}  // namespace

ActivationBatch gen_activations(const DistSpec& dist, std::size_t channels,
                                std::size_t samples, std::uint64_t seed) {
    dist.validate();
    ActivationBatch batch;
    batch.samples = samples;
    batch.channels = channels;
    batch.values.resize(samples * channels);
    std::mt19937_64 rng(seed);
    for (double& v : batch.values) v = draw(dist, rng);
    return batch;
}

ActivationBatch gen_activations_scaled(const DistSpec& dist,
                                       std::span<const double> channel_scales,
                                       std::size_t samples, std::uint64_t seed) {
    ActivationBatch batch = gen_activations(dist, channel_scales.size(), samples, seed);
    for (std::size_t s = 0; s < samples; ++s)
        for (std::size_t c = 0; c < channel_scales.size(); ++c)
            batch.values[s * channel_scales.size() + c] *= channel_scales[c];
    return batch;
}

}  // namespace overq
