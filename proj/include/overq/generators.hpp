#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace overq {

// DNN-like activation generators: heavy mass near zero, rare large values,
// and (for the relu kind) a large fraction of exact zeros.
enum class DistKind : std::uint8_t { HalfNormal, ReluNormal, Mixture };

struct MixComponent {
    double weight = 1.0;
    DistKind kind = DistKind::HalfNormal;  // Mixture components cannot nest
    double sigma = 1.0;
};

struct DistSpec {
    DistKind kind = DistKind::HalfNormal;
    double sigma = 1.0;
    std::vector<MixComponent> components;  // used only when kind == Mixture

    void validate() const;
    static DistSpec half_normal(double sigma) { return {DistKind::HalfNormal, sigma, {}}; }
    static DistSpec relu_normal(double sigma) { return {DistKind::ReluNormal, sigma, {}}; }
};

struct ActivationBatch {
    std::size_t samples = 0;
    std::size_t channels = 0;
    std::vector<double> values;  // row-major [samples x channels]

    std::span<const double> row(std::size_t s) const {
        return std::span<const double>(values).subspan(s * channels, channels);
    }
};

// Deterministic for a given seed (engine and transforms are pinned; no
// implementation-defined distributions involved).
ActivationBatch gen_activations(const DistSpec& dist, std::size_t channels,
                                std::size_t samples, std::uint64_t seed);

// Same, with each channel's draw multiplied by its entry in channel_scales.
ActivationBatch gen_activations_scaled(const DistSpec& dist,
                                       std::span<const double> channel_scales,
                                       std::size_t samples, std::uint64_t seed);

}  // namespace overq
