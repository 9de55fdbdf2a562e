#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace overq {

// Uniform sign-magnitude fixed-point format for one tensor/layer.
// magnitude_bits is the unsigned magnitude width; the sign is carried
// separately, so codes live in the symmetric range [-(2^B-1), +(2^B-1)].
struct QuantConfig {
    int magnitude_bits = 4;
    double clip_scale = 1.0;
    double overwrite_threshold = 0.25;

    // Largest representable magnitude code, 2^B - 1.
    std::int64_t max_code() const { return (std::int64_t{1} << magnitude_bits) - 1; }

    // Value of one code step, clip_scale / (2^B - 1).
    double lsb() const { return clip_scale / static_cast<double>(max_code()); }

    // Throws std::invalid_argument if any field is out of range.
    void validate() const;
};

// Returns a config with overwrite_threshold = clip_scale / 4.
QuantConfig make_config(int magnitude_bits, double clip_scale);

struct QuantizedTensor {
    std::vector<std::int32_t> codes;
    QuantConfig config;
    std::vector<std::size_t> shape;  // channels-last for activation tensors

    std::size_t size() const { return codes.size(); }
};

enum class CalibMethod { Max, Percentile, Mmse };

// Number of candidate thresholds scanned by MMSE calibration; candidates are
// evenly spaced in (0, max|sample|].
inline constexpr int kMmseGridSize = 512;

// code_i = clamp(round_half_away_from_zero(x_i * (2^B - 1) / S), -(2^B-1), 2^B-1)
QuantizedTensor quantize(std::span<const double> x, const QuantConfig& cfg);
QuantizedTensor quantize(std::span<const double> x, const QuantConfig& cfg,
                         std::vector<std::size_t> shape);

// Element-wise code * S / (2^B - 1).
std::vector<double> dequantize(const QuantizedTensor& q);

// Scalar helpers shared by the codec.
std::int64_t quantize_code(double x, const QuantConfig& cfg);
double dequantize_code(std::int64_t code, const QuantConfig& cfg);

// Picks the clip scale from profiled samples. percentile_p is only read for
// CalibMethod::Percentile and must lie in (0, 100]. The returned config uses
// overwrite_threshold = S/4.
QuantConfig calibrate(std::span<const double> samples, int magnitude_bits,
                      CalibMethod method, double percentile_p = 100.0);

// Order statistic used by both calibrate() and channel profiling:
// the ceil(p/100 * n)-th smallest magnitude.
double percentile_magnitude(std::span<const double> samples, double p);

}  // namespace overq
