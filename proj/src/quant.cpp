#include "overq/quant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace overq {

void QuantConfig::validate() const {
    if (magnitude_bits < 2 || magnitude_bits > 20)
        throw std::invalid_argument("QuantConfig: magnitude_bits must be in [2, 20], got " +
                                    std::to_string(magnitude_bits));
    if (!std::isfinite(clip_scale) || clip_scale <= 0.0)
        throw std::invalid_argument("QuantConfig: clip_scale must be finite and positive");
    if (!std::isfinite(overwrite_threshold) || overwrite_threshold <= 0.0 ||
        overwrite_threshold > clip_scale)
        throw std::invalid_argument(
            "QuantConfig: overwrite_threshold must be in (0, clip_scale]");
}

QuantConfig make_config(int magnitude_bits, double clip_scale) {
    QuantConfig cfg{magnitude_bits, clip_scale, clip_scale / 4.0};
    cfg.validate();
    return cfg;
}

std::int64_t quantize_code(double x, const QuantConfig& cfg) {
    const std::int64_t maxc = cfg.max_code();
    std::int64_t code = std::llround(x * static_cast<double>(maxc) / cfg.clip_scale);
    return std::clamp(code, -maxc, maxc);
}

double dequantize_code(std::int64_t code, const QuantConfig& cfg) {
    return static_cast<double>(code) * cfg.clip_scale / static_cast<double>(cfg.max_code());
}

QuantizedTensor quantize(std::span<const double> x, const QuantConfig& cfg,
                         std::vector<std::size_t> shape) {
    cfg.validate();
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    if (n != x.size())
        throw std::invalid_argument("quantize: shape does not match element count");

    QuantizedTensor out;
    out.config = cfg;
    out.shape = std::move(shape);
    out.codes.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]))
            throw std::invalid_argument("quantize: non-finite input at index " +
                                        std::to_string(i));
        out.codes[i] = static_cast<std::int32_t>(quantize_code(x[i], cfg));
    }
    return out;
}

QuantizedTensor quantize(std::span<const double> x, const QuantConfig& cfg) {
    return quantize(x, cfg, {x.size()});
}

std::vector<double> dequantize(const QuantizedTensor& q) {
    q.config.validate();
    std::vector<double> out(q.codes.size());
    for (std::size_t i = 0; i < q.codes.size(); ++i)
        out[i] = dequantize_code(q.codes[i], q.config);
    return out;
}

double percentile_magnitude(std::span<const double> samples, double p) {
    if (samples.empty())
        throw std::invalid_argument("percentile_magnitude: empty samples");
    if (!(p > 0.0) || p > 100.0)
        throw std::invalid_argument("percentile_magnitude: p must be in (0, 100]");
    std::vector<double> mags(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) mags[i] = std::fabs(samples[i]);
    std::sort(mags.begin(), mags.end());
    auto rank = static_cast<std::size_t>(
        std::ceil(p / 100.0 * static_cast<double>(mags.size())));
    rank = std::clamp<std::size_t>(rank, 1, mags.size());
    return mags[rank - 1];
}

namespace {

double grid_mse(std::span<const double> samples, int magnitude_bits, double candidate) {
    QuantConfig cfg{magnitude_bits, candidate, candidate / 4.0};
    double sum = 0.0;
    for (double x : samples) {
        double err = x - dequantize_code(quantize_code(x, cfg), cfg);
        sum += err * err;
    }
    return sum / static_cast<double>(samples.size());
}

}  // namespace

QuantConfig calibrate(std::span<const double> samples, int magnitude_bits,
                      CalibMethod method, double percentile_p) {
    if (samples.empty()) throw std::invalid_argument("calibrate: empty samples");
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (!std::isfinite(samples[i]))
            throw std::invalid_argument("calibrate: non-finite sample at index " +
                                        std::to_string(i));

    double max_abs = 0.0;
    for (double x : samples) max_abs = std::max(max_abs, std::fabs(x));
    if (max_abs == 0.0)
        throw std::invalid_argument("calibrate: all-zero samples, clip scale would be 0");

    double scale = 0.0;
    switch (method) {
        case CalibMethod::Max:
            scale = max_abs;
            break;
        case CalibMethod::Percentile:
            scale = percentile_magnitude(samples, percentile_p);
            if (scale == 0.0)
                throw std::invalid_argument("calibrate: percentile clip scale is 0");
            break;
        case CalibMethod::Mmse: {
            // Evenly spaced candidates in (0, max|sample|]; first minimum wins,
            // so ties resolve toward the smaller scale.
            double best_mse = std::numeric_limits<double>::infinity();
            for (int k = 1; k <= kMmseGridSize; ++k) {
                double candidate = max_abs * static_cast<double>(k) /
                                   static_cast<double>(kMmseGridSize);
                double mse = grid_mse(samples, magnitude_bits, candidate);
                if (mse < best_mse) {
                    best_mse = mse;
                    scale = candidate;
                }
            }
            break;
        }
    }
    return make_config(magnitude_bits, scale);
}

}  // namespace overq
