// Acceptance suite: every release-gating property, one pass/fail line each.
// Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "overq/codec.hpp"
#include "overq/generators.hpp"
#include "overq/quant.hpp"
#include "overq/reorder.hpp"
#include "overq/simarray.hpp"
#include "overq/sweep.hpp"
#include "overq/tensor_file.hpp"

using namespace overq;

namespace {

int g_failures = 0;

void report(int criterion, const char* name, bool pass, const std::string& detail = "") {
    std::printf("[%s] criterion %d: %s%s%s\n", pass ? "PASS" : "FAIL", criterion, name,
                detail.empty() ? "" : " - ", detail.c_str());
    if (!pass) ++g_failures;
}

std::vector<double> mixed_vector(std::mt19937_64& rng, std::size_t n, double scale) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::uniform_real_distribution<double> body(-scale, scale);
    std::vector<double> x(n);
    for (double& v : x) {
        double kind = uni(rng);
        if (kind < 0.3)
            v = 0.0;
        else if (kind < 0.45)
            v = body(rng) * 4.0;
        else
            v = body(rng);
    }
    return x;
}

QuantizedTensor random_weights(std::mt19937_64& rng, int rows, int cols) {
    QuantizedTensor w;
    w.config = make_config(8, 1.0);
    w.shape = {static_cast<std::size_t>(rows), static_cast<std::size_t>(cols)};
    w.codes.resize(static_cast<std::size_t>(rows) * cols);
    std::uniform_int_distribution<std::int32_t> dist(-255, 255);
    for (auto& c : w.codes) c = dist(rng);
    return w;
}

PeVariant pe_for(Variant v) {
    switch (v) {
        case Variant::Baseline: return PeVariant::Baseline;
        case Variant::Split: return PeVariant::Split;
        default: return PeVariant::Shift;
    }
}

// 1. Array outputs equal the reference dot product, bit-exact, across every
//    shape, bitwidth, and variant combination.
void criterion_equivalence() {
    const int dims[] = {1, 2, 4, 8};
    const Variant variants[] = {Variant::Baseline, Variant::Split, Variant::Shift,
                                Variant::ShiftWithZeroReuse};
    const std::int64_t vectors_per_config = 10000;
    const std::int64_t batch = 1000;

    std::mt19937_64 rng(0xACC3551);
    std::int64_t checked = 0;
    for (int rows : dims) {
        for (int cols : dims) {
            for (int bits : {3, 4, 5}) {
                QuantConfig acfg = make_config(bits, 1.0);
                for (Variant variant : variants) {
                    ArrayConfig cfg{rows, cols, pe_for(variant), 48, bits};
                    auto w = random_weights(rng, rows, cols);
                    auto state = load_weights(cfg, w);

                    std::vector<std::vector<std::int32_t>> cols_of_w(
                        static_cast<std::size_t>(cols));
                    for (int c = 0; c < cols; ++c)
                        for (int r = 0; r < rows; ++r)
                            cols_of_w[static_cast<std::size_t>(c)].push_back(
                                w.codes[static_cast<std::size_t>(r) * cols + c]);

                    std::int64_t done = 0;
                    while (done < vectors_per_config) {
                        std::int64_t count = std::min(batch, vectors_per_config - done);
                        std::vector<EncodedVector> acts;
                        acts.reserve(static_cast<std::size_t>(count));
                        for (std::int64_t t = 0; t < count; ++t)
                            acts.push_back(encode(
                                mixed_vector(rng, static_cast<std::size_t>(rows), 1.0),
                                acfg, variant));
                        auto result = run_matmul(state, acts);
                        for (std::int64_t t = 0; t < count; ++t) {
                            for (int c = 0; c < cols; ++c) {
                                std::int64_t expect = dot_reference(
                                    acts[static_cast<std::size_t>(t)],
                                    cols_of_w[static_cast<std::size_t>(c)]);
                                std::int64_t got =
                                    result.outputs[static_cast<std::size_t>(t) * cols + c];
                                if (expect != got) {
                                    report(1, "bit-exact array/reference equivalence",
                                           false,
                                           "mismatch at " + std::to_string(rows) + "x" +
                                               std::to_string(cols) + " B=" +
                                               std::to_string(bits) + " " +
                                               variant_name(variant));
                                    return;
                                }
                                ++checked;
                            }
                        }
                        done += count;
                    }
                }
            }
        }
    }
    report(1, "bit-exact array/reference equivalence", true,
           std::to_string(checked) + " outputs compared");
}

// 2. Roundtrip error bounds per regime, 1e6 scalars each.
void criterion_roundtrip_bounds() {
    const int bits = 4;
    QuantConfig cfg = make_config(bits, 1.0);
    const double lsb = cfg.lsb();
    const double fine = lsb / 8.0;
    const double ext_max = 127.0 * lsb;
    const double slack = 1.0 + 1e-12;  // headroom for the comparison arithmetic only
    const int n = 1000000;

    std::mt19937_64 rng(0xB0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    auto sgn = [&]() { return uni(rng) < 0.5 ? -1.0 : 1.0; };

    int bad_regular = 0, bad_split = 0, bad_msb = 0, bad_zr = 0;
    for (int i = 0; i < n; ++i) {
        double xr = sgn() * uni(rng);
        auto enc = encode(std::vector<double>{xr, 0.6}, cfg, Variant::Shift);
        if (std::fabs(decode(enc)[0] - xr) > 0.5 * lsb * slack) ++bad_regular;

        double xs = sgn() * (1.0 + uni(rng));
        enc = encode(std::vector<double>{xs, 0.0}, cfg, Variant::Split);
        if (std::fabs(decode(enc)[0] - xs) > lsb * slack) ++bad_split;

        double xm = sgn() * (1.0 + uni(rng) * (ext_max - 1.0));
        enc = encode(std::vector<double>{xm, 0.0}, cfg, Variant::Shift);
        if (std::fabs(decode(enc)[0] - xm) > 0.5 * lsb * slack) ++bad_msb;

        double xz = sgn() * uni(rng);
        enc = encode(std::vector<double>{xz, 0.0}, cfg, Variant::ShiftWithZeroReuse);
        if (std::fabs(decode(enc)[0] - xz) > 0.5 * fine * slack) ++bad_zr;
    }
    bool pass = bad_regular + bad_split + bad_msb + bad_zr == 0;
    report(2, "roundtrip error bounds (regular/split/msb/zero-reuse)", pass,
           pass ? std::to_string(4 * n) + " scalars checked"
                : "violations: regular=" + std::to_string(bad_regular) +
                      " split=" + std::to_string(bad_split) +
                      " msb=" + std::to_string(bad_msb) +
                      " zr=" + std::to_string(bad_zr));
}

// 3. MMSE calibration equals the brute-force grid oracle exactly.
void criterion_mmse_oracle() {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        auto batch = gen_activations(DistSpec::half_normal(1.0), 1, 100, seed);
        auto cfg = calibrate(batch.values, 4, CalibMethod::Mmse);
        double expect = oracle::mmse_scale(batch.values, 4, kMmseGridSize);
        if (cfg.clip_scale != expect) {
            report(3, "MMSE calibration equals brute-force oracle", false,
                   "seed " + std::to_string(seed));
            return;
        }
    }
    report(3, "MMSE calibration equals brute-force oracle", true,
           "50 seeds x 100 half-normal samples, exact");
}

// 4. Clip-threshold sweep sign pattern at B=4 on relu-normal data.
void criterion_sweep_pattern() {
    auto acts = gen_activations(DistSpec::relu_normal(1.0), 64, 500, 0xF16);
    std::vector<SweepMode> modes{SweepMode::Baseline, SweepMode::OutlierOnly,
                                 SweepMode::ZeroReuseOnly, SweepMode::OutlierZeroReuse};
    auto grid = default_threshold_grid();
    auto rep = sweep(acts, 4, modes, grid);

    auto mse_of = [&](SweepMode mode, double fraction) {
        for (const auto& r : rep.records)
            if (r.mode == mode && !r.threshold.is_mmse &&
                std::fabs(r.threshold.fraction - fraction) < 1e-9)
                return r.mse;
        std::abort();
    };

    bool ordering = true;
    std::string bad;
    for (const auto& th : grid) {
        double base = mse_of(SweepMode::Baseline, th.fraction);
        double ol = mse_of(SweepMode::OutlierOnly, th.fraction);
        double zr = mse_of(SweepMode::ZeroReuseOnly, th.fraction);
        double both = mse_of(SweepMode::OutlierZeroReuse, th.fraction);
        if (!(both <= ol && both <= zr && ol <= base && zr <= base)) {
            ordering = false;
            bad = "ordering broken at fraction " + std::to_string(th.fraction);
            break;
        }
    }
    report(4, "sweep ordering: OL+ZR <= min(OL, ZR) <= baseline at every threshold",
           ordering, ordering ? "15 thresholds" : bad);

    double gain_ol_small = mse_of(SweepMode::Baseline, 0.2) - mse_of(SweepMode::OutlierOnly, 0.2);
    double gain_zr_small = mse_of(SweepMode::Baseline, 0.2) - mse_of(SweepMode::ZeroReuseOnly, 0.2);
    double gain_ol_large = mse_of(SweepMode::Baseline, 0.9) - mse_of(SweepMode::OutlierOnly, 0.9);
    double gain_zr_large = mse_of(SweepMode::Baseline, 0.9) - mse_of(SweepMode::ZeroReuseOnly, 0.9);
    bool pattern = gain_ol_small > gain_zr_small && gain_zr_large > gain_ol_large;
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "small-S gains OL=%.3g ZR=%.3g; large-S gains OL=%.3g ZR=%.3g",
                  gain_ol_small, gain_zr_small, gain_ol_large, gain_zr_large);
    report(4, "sweep sign pattern: OL wins at small S, ZR wins at large S", pattern, buf);
}

// 5. Channel reordering raises mean outlier coverage on two-scale layers.
void criterion_reorder_benefit() {
    const std::size_t channels = 32, samples = 128, layers = 100;
    double before_sum = 0.0, after_sum = 0.0;
    for (std::uint64_t layer = 0; layer < layers; ++layer) {
        std::vector<double> scales(channels, 1.0);
        for (std::size_t c = 0; c < channels / 2; ++c) scales[c] = 10.0;
        auto batch = gen_activations_scaled(DistSpec::relu_normal(1.0), scales, samples,
                                            0x5EED + layer);
        QuantConfig cfg = calibrate(batch.values, 4, CalibMethod::Mmse);
        auto prof = profile(batch.values, samples, channels);
        auto perm = reorder_plan(prof);
        before_sum += coverage(batch.values, samples, channels, cfg, Variant::Shift);
        after_sum +=
            coverage(batch.values, samples, channels, cfg, Variant::Shift, perm);
    }
    double before = before_sum / layers, after = after_sum / layers;
    bool pass = after >= before && after - before > 0.0;
    char buf[120];
    std::snprintf(buf, sizeof buf, "mean coverage %.4f -> %.4f (delta %+.4f)", before,
                  after, after - before);
    report(5, "reordering raises mean outlier coverage", pass, buf);
}

// 6. Cycle counts are identical across PE variants.
void criterion_latency_invariance() {
    const int dims[] = {1, 2, 4, 8};
    std::mt19937_64 rng(0x1A7);
    QuantConfig acfg = make_config(4, 1.0);
    for (int rows : dims) {
        for (int cols : dims) {
            for (std::size_t batch : {std::size_t{1}, std::size_t{17}}) {
                std::vector<std::vector<double>> raw;
                for (std::size_t t = 0; t < batch; ++t)
                    raw.push_back(mixed_vector(rng, static_cast<std::size_t>(rows), 1.0));
                std::int64_t expect = -1;
                for (Variant variant : {Variant::Baseline, Variant::Split, Variant::Shift,
                                        Variant::ShiftWithZeroReuse}) {
                    ArrayConfig cfg{rows, cols, pe_for(variant), 48, 4};
                    auto state = load_weights(cfg, random_weights(rng, rows, cols));
                    std::vector<EncodedVector> acts;
                    for (auto& x : raw) acts.push_back(encode(x, acfg, variant));
                    auto result = run_matmul(state, acts);
                    if (expect < 0) expect = result.cycles;
                    if (result.cycles != expect) {
                        report(6, "cycle-count invariance across PE variants", false,
                               std::to_string(rows) + "x" + std::to_string(cols));
                        return;
                    }
                }
            }
        }
    }
    report(6, "cycle-count invariance across PE variants", true,
           "16 shapes x 2 batch sizes");
}

// 7. With no overwrite opportunities every variant matches baseline bit for bit.
void criterion_no_flag_degeneracy() {
    const int rows = 4, cols = 4, trials = 1000;
    std::mt19937_64 rng(0xDE6);
    QuantConfig acfg = make_config(4, 1.0);
    std::uniform_real_distribution<double> mid(0.51, 0.99);

    auto w = random_weights(rng, rows, cols);
    for (int trial = 0; trial < trials; ++trial) {
        std::vector<double> x(rows);
        for (double& v : x) v = (rng() % 2 ? 1.0 : -1.0) * mid(rng);

        auto base_enc = encode(x, acfg, Variant::Baseline);
        ArrayConfig bcfg{rows, cols, PeVariant::Baseline, 48, 4};
        auto bstate = load_weights(bcfg, w);
        auto base_out = run_matmul(bstate, std::vector<EncodedVector>{base_enc});

        for (Variant variant :
             {Variant::Split, Variant::Shift, Variant::ShiftWithZeroReuse}) {
            auto enc = encode(x, acfg, variant);
            if (!(enc.slots == base_enc.slots) ||
                !(enc.flags == base_enc.flags)) {
                report(7, "no-flag degeneracy", false, "encoding differs from baseline");
                return;
            }
            ArrayConfig cfg{rows, cols, pe_for(variant), 48, 4};
            auto state = load_weights(cfg, w);
            auto out = run_matmul(state, std::vector<EncodedVector>{enc});
            if (out.outputs != base_out.outputs || out.cycles != base_out.cycles) {
                report(7, "no-flag degeneracy", false, "array output differs");
                return;
            }
        }
    }
    report(7, "no-flag degeneracy", true, std::to_string(trials) + " trials");
}

// 8. Tensor file write/read is bit-exact.
void criterion_file_roundtrip() {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "overq_acceptance";
    fs::create_directories(dir);
    std::mt19937_64 rng(0xF11E);
    std::uniform_real_distribution<float> val(-1000.0f, 1000.0f);

    bool pass = true;
    for (int i = 0; i < 50 && pass; ++i) {
        TensorData t;
        std::size_t rank = 1 + rng() % 4;
        t.dims.resize(rank);
        for (auto& d : t.dims) d = 1 + static_cast<std::uint32_t>(rng() % 6);
        t.data.resize(t.element_count());
        for (float& v : t.data) v = val(rng);

        std::string path = (dir / ("t" + std::to_string(i) + ".ovqt")).string();
        write_tensor(path, t);
        auto back = read_tensor(path);
        pass = back.dims == t.dims && back.data == t.data;
    }
    fs::remove_all(dir);
    report(8, "tensor file roundtrip bit-exact (50 tensors, rank 1-4)", pass);
}

}  // namespace

int main() {
    auto start = std::chrono::steady_clock::now();
    criterion_equivalence();
    criterion_roundtrip_bounds();
    criterion_mmse_oracle();
    criterion_sweep_pattern();
    criterion_reorder_benefit();
    criterion_latency_invariance();
    criterion_no_flag_degeneracy();
    criterion_file_roundtrip();
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - start)
                       .count();
    std::printf("%d criterion failures, %lld ms total\n", g_failures,
                static_cast<long long>(elapsed));
    return g_failures == 0 ? 0 : 1;
}
