#include "overq/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace overq {

const char* sweep_mode_name(SweepMode m) {
    switch (m) {
        case SweepMode::Baseline: return "baseline";
        case SweepMode::Split: return "split";
        case SweepMode::OutlierOnly: return "shift";
        case SweepMode::ZeroReuseOnly: return "zr";
        case SweepMode::OutlierZeroReuse: return "shift-zr";
    }
    return "?";
}

std::string ThresholdSpec::label() const {
    if (is_mmse) return "mmse";
    std::ostringstream os;
    os << fraction;
    return os.str();
}

std::vector<ThresholdSpec> default_threshold_grid() {
    std::vector<ThresholdSpec> grid;
    for (int k = 0; k < 15; ++k)
        grid.push_back(ThresholdSpec::of_max(0.2 + 0.05 * static_cast<double>(k)));
    return grid;
}

namespace {

// Neumaier-compensated accumulator; keeps mean comparisons honest when two
// modes differ by a handful of tiny per-pair improvements.
struct CompensatedSum {
    double sum = 0.0;
    double compensation = 0.0;

    void add(double x) {
        double t = sum + x;
        if (std::fabs(sum) >= std::fabs(x))
            compensation += (sum - t) + x;
        else
            compensation += (x - t) + sum;
        sum = t;
    }
    double value() const { return sum + compensation; }
};

Variant mode_variant(SweepMode mode) {
    switch (mode) {
        case SweepMode::Baseline: return Variant::Baseline;
        case SweepMode::Split: return Variant::Split;
        case SweepMode::OutlierOnly: return Variant::Shift;
        case SweepMode::ZeroReuseOnly: return Variant::ShiftWithZeroReuse;
        case SweepMode::OutlierZeroReuse: return Variant::ShiftWithZeroReuse;
    }
    return Variant::Baseline;
}

}  // namespace

double mean_squared_error(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("mean_squared_error: length mismatch or empty");
    CompensatedSum acc;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double e = a[i] - b[i];
        acc.add(e * e);
    }
    return acc.value() / static_cast<double>(a.size());
}

EncodedVector encode_for_mode(std::span<const double> row, const QuantConfig& cfg,
                              SweepMode mode) {
    if (mode != SweepMode::ZeroReuseOnly) return encode(row, cfg, mode_variant(mode));
    std::vector<double> clipped(row.begin(), row.end());
    for (double& x : clipped) x = std::clamp(x, -cfg.clip_scale, cfg.clip_scale);
    return encode(clipped, cfg, Variant::ShiftWithZeroReuse);
}

SweepReport sweep(const ActivationBatch& acts, int magnitude_bits,
                  std::span<const SweepMode> modes,
                  std::span<const ThresholdSpec> thresholds) {
    if (acts.samples == 0 || acts.channels == 0)
        throw std::invalid_argument("sweep: empty activation batch");
    if (modes.empty() || thresholds.empty())
        throw std::invalid_argument("sweep: need at least one mode and one threshold");

    double max_abs = 0.0;
    for (double x : acts.values) max_abs = std::max(max_abs, std::fabs(x));
    if (max_abs == 0.0) throw std::invalid_argument("sweep: all-zero batch");

    SweepReport report;
    for (const ThresholdSpec& th : thresholds) {
        double scale;
        if (th.is_mmse) {
            scale = calibrate(acts.values, magnitude_bits, CalibMethod::Mmse).clip_scale;
        } else {
            if (!(th.fraction > 0.0) || th.fraction > 1.0)
                throw std::invalid_argument("sweep: threshold fraction must be in (0, 1]");
            scale = th.fraction * max_abs;
        }
        QuantConfig cfg = make_config(magnitude_bits, scale);

        for (SweepMode mode : modes) {
            CompensatedSum err_sq;
            std::int64_t outliers = 0, covered = 0;
            std::int64_t overwrite_pairs = 0, zero_reuse_pairs = 0;

            for (std::size_t s = 0; s < acts.samples; ++s) {
                auto row = acts.row(s);
                EncodedVector enc = encode_for_mode(row, cfg, mode);
                std::vector<double> dec = decode(enc);
                auto roles = parse_flags(enc.flags);
                for (std::size_t c = 0; c < acts.channels; ++c) {
                    double e = row[c] - dec[c];
                    err_sq.add(e * e);
                    bool outlier = std::fabs(row[c]) > cfg.clip_scale;
                    if (outlier) ++outliers;
                    if (roles[c] == SlotRole::PairLeft) {
                        if (outlier) {
                            ++covered;
                            ++overwrite_pairs;
                        } else {
                            ++zero_reuse_pairs;
                        }
                    }
                }
            }

            const double total_slots =
                static_cast<double>(acts.samples) * static_cast<double>(acts.channels);
            SweepRecord rec;
            rec.mode = mode;
            rec.magnitude_bits = magnitude_bits;
            rec.threshold = th;
            rec.clip_scale = scale;
            rec.mse = err_sq.value() / total_slots;
            rec.coverage_defined = mode != SweepMode::Baseline;
            rec.coverage = !rec.coverage_defined ? 0.0
                           : outliers == 0       ? 1.0
                                 : static_cast<double>(covered) / static_cast<double>(outliers);
            rec.outlier_fraction = static_cast<double>(outliers) / total_slots;
            rec.overwrite_rate = static_cast<double>(overwrite_pairs) / total_slots;
            rec.zero_reuse_rate = static_cast<double>(zero_reuse_pairs) / total_slots;
            report.records.push_back(rec);
        }
    }
    return report;
}

std::string SweepReport::to_csv() const {
    std::ostringstream os;
    os << "mode,bits,threshold,clip_scale,mse,coverage,coverage_defined,"
          "outlier_fraction,overwrite_rate,zero_reuse_rate\n";
    os.precision(12);
    for (const SweepRecord& r : records) {
        os << sweep_mode_name(r.mode) << ',' << r.magnitude_bits << ','
           << r.threshold.label() << ',' << r.clip_scale << ',' << r.mse << ','
           << r.coverage << ',' << (r.coverage_defined ? 1 : 0) << ','
           << r.outlier_fraction << ',' << r.overwrite_rate << ','
           << r.zero_reuse_rate << '\n';
    }
    return os.str();
}

std::string SweepReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const SweepRecord& r : records) {
        nlohmann::json j;
        j["mode"] = sweep_mode_name(r.mode);
        j["bits"] = r.magnitude_bits;
        j["threshold"] = r.threshold.label();
        j["clip_scale"] = r.clip_scale;
        j["mse"] = r.mse;
        j["coverage"] = r.coverage;
        j["coverage_defined"] = r.coverage_defined;
        j["outlier_fraction"] = r.outlier_fraction;
        j["overwrite_rate"] = r.overwrite_rate;
        j["zero_reuse_rate"] = r.zero_reuse_rate;
        arr.push_back(j);
    }
    return arr.dump(2);
}

}  // namespace overq
