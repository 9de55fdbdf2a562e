#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "overq/codec.hpp"
#include "overq/generators.hpp"
#include "overq/quant.hpp"

namespace overq {

// Measurement modes: the four slot-encoding variants plus a zero-reuse-only
// mode (outlier overwrite disabled by clipping first) so the outlier and
// zero-reuse contributions can be reported separately.
enum class SweepMode : std::uint8_t {
    Baseline,
    Split,
    OutlierOnly,       // Shift encoding, range extension only
    ZeroReuseOnly,     // precision extension only; outliers just clip
    OutlierZeroReuse,  // Shift encoding with both
};

const char* sweep_mode_name(SweepMode m);

// A clip threshold for one sweep point: either a fraction of the maximum
// profiled magnitude, or MMSE-calibrated.
struct ThresholdSpec {
    bool is_mmse = false;
    double fraction = 1.0;

    static ThresholdSpec mmse() { return {true, 0.0}; }
    static ThresholdSpec of_max(double fraction) { return {false, fraction}; }
    std::string label() const;
};

// 0.2 to 0.9 in steps of 0.05.
std::vector<ThresholdSpec> default_threshold_grid();

struct SweepRecord {
    SweepMode mode = SweepMode::Baseline;
    int magnitude_bits = 0;
    ThresholdSpec threshold;
    double clip_scale = 0.0;
    double mse = 0.0;
    double coverage = 0.0;
    bool coverage_defined = false;  // baseline has no overwrites to cover with
    double outlier_fraction = 0.0;
    double overwrite_rate = 0.0;    // committed outlier pairs per slot
    double zero_reuse_rate = 0.0;   // committed zero-reuse pairs per slot
};

struct SweepReport {
    std::vector<SweepRecord> records;

    std::string to_csv() const;
    std::string to_json() const;
};

// Encodes one row under a measurement mode. ZeroReuseOnly clips to the
// representable range first so no outlier pair can form.
EncodedVector encode_for_mode(std::span<const double> row, const QuantConfig& cfg,
                              SweepMode mode);

// Runs every (mode, threshold) combination over the batch, encoding each
// sample row along its channels.
SweepReport sweep(const ActivationBatch& acts, int magnitude_bits,
                  std::span<const SweepMode> modes,
                  std::span<const ThresholdSpec> thresholds);

// Compensated mean squared error between two equal-length sequences.
double mean_squared_error(std::span<const double> a, std::span<const double> b);

}  // namespace overq
