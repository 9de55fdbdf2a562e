// overq: post-training fixed-point quantization experiments with slot
// overwrite encoding, plus a functional weight-stationary array checker.
//
// Exit codes: 0 success, 1 validation error, 2 runtime/property failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "overq/codec.hpp"
#include "overq/generators.hpp"
#include "overq/quant.hpp"
#include "overq/reorder.hpp"
#include "overq/simarray.hpp"
#include "overq/sweep.hpp"
#include "overq/tensor_file.hpp"

using namespace overq;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct CommonGen {
    std::string dist = "relu-normal";
    double sigma = 1.0;
    std::size_t channels = 64;
    std::size_t samples = 500;
    std::uint64_t seed = 1;
};

DistSpec parse_dist(const CommonGen& g) {
    if (g.dist == "half-normal") return DistSpec::half_normal(g.sigma);
    if (g.dist == "relu-normal") return DistSpec::relu_normal(g.sigma);
    throw CLI::ValidationError("--dist", "unknown distribution " + g.dist);
}

Variant parse_variant(const std::string& name) {
    if (name == "baseline") return Variant::Baseline;
    if (name == "split") return Variant::Split;
    if (name == "shift") return Variant::Shift;
    if (name == "shift-zr") return Variant::ShiftWithZeroReuse;
    throw CLI::ValidationError("--variant", "unknown variant " + name);
}

SweepMode parse_mode(const std::string& name) {
    if (name == "baseline") return SweepMode::Baseline;
    if (name == "split") return SweepMode::Split;
    if (name == "shift") return SweepMode::OutlierOnly;
    if (name == "zr") return SweepMode::ZeroReuseOnly;
    if (name == "shift-zr") return SweepMode::OutlierZeroReuse;
    throw CLI::ValidationError("--variants", "unknown sweep mode " + name);
}

PeVariant pe_for(Variant v) {
    switch (v) {
        case Variant::Baseline: return PeVariant::Baseline;
        case Variant::Split: return PeVariant::Split;
        default: return PeVariant::Shift;
    }
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text;
}

std::vector<double> random_mixed_vector(std::mt19937_64& rng, std::size_t n,
                                        double scale) {
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

// ---------------------------------------------------------------- quantize

struct QuantizeArgs {
    std::string in_path;
    std::string out_path;
    std::string stats_path;
    int bits = 4;
    std::string calib = "max";
    double percentile = 99.0;
    double clip_scale = 0.0;  // 0 = calibrate
};

int run_quantize(const QuantizeArgs& a) {
    TensorData t = read_tensor(a.in_path);
    std::vector<double> values = t.as_doubles();
    if (values.empty()) throw std::runtime_error("input tensor is empty");

    QuantConfig cfg;
    if (a.clip_scale > 0.0) {
        cfg = make_config(a.bits, a.clip_scale);
    } else {
        bool all_zero = true;
        for (double v : values) all_zero &= v == 0.0;
        if (all_zero) {
            // Degenerate input: any scale represents it exactly.
            cfg = make_config(a.bits, 1.0);
        } else if (a.calib == "max") {
            cfg = calibrate(values, a.bits, CalibMethod::Max);
        } else if (a.calib == "percentile") {
            cfg = calibrate(values, a.bits, CalibMethod::Percentile, a.percentile);
        } else if (a.calib == "mmse") {
            cfg = calibrate(values, a.bits, CalibMethod::Mmse);
        } else {
            throw CLI::ValidationError("--calib", "unknown method " + a.calib);
        }
    }

    auto deq = dequantize(quantize(values, cfg));
    double mse = mean_squared_error(values, deq);

    if (!a.out_path.empty())
        write_tensor(a.out_path, TensorData::from_doubles(deq, t.dims));
    nlohmann::json stats{{"mse", mse},
                         {"clip_scale", cfg.clip_scale},
                         {"magnitude_bits", cfg.magnitude_bits}};
    if (!a.stats_path.empty())
        write_text(a.stats_path, stats.dump(2) + "\n");
    std::cout << stats.dump(2) << "\n";
    return 0;
}

// ------------------------------------------------------------------- sweep

struct SweepArgs {
    CommonGen gen;
    std::string in_path;
    int bits = 4;
    std::vector<std::string> variants{"baseline", "split", "shift", "shift-zr"};
    std::vector<std::string> thresholds;  // fractions and/or "mmse"; empty = default grid
    std::string out_path;
    std::string json_path;
};

int run_sweep(const SweepArgs& a) {
    if (a.variants.empty()) throw CLI::ValidationError("--variants", "empty variant list");

    ActivationBatch acts;
    if (!a.in_path.empty()) {
        TensorData t = read_tensor(a.in_path);
        if (t.dims.size() != 2)
            throw std::runtime_error("sweep input tensor must be rank 2 [samples x channels]");
        acts.samples = t.dims[0];
        acts.channels = t.dims[1];
        acts.values = t.as_doubles();
    } else {
        acts = gen_activations(parse_dist(a.gen), a.gen.channels, a.gen.samples,
                               a.gen.seed);
    }

    std::vector<SweepMode> modes;
    for (const auto& name : a.variants) modes.push_back(parse_mode(name));

    std::vector<ThresholdSpec> grid;
    if (a.thresholds.empty()) {
        grid = default_threshold_grid();
    } else {
        for (const auto& th : a.thresholds) {
            if (th == "mmse")
                grid.push_back(ThresholdSpec::mmse());
            else
                grid.push_back(ThresholdSpec::of_max(std::stod(th)));
        }
    }

    auto report = sweep(acts, a.bits, modes, grid);
    if (!a.out_path.empty()) write_text(a.out_path, report.to_csv());
    if (!a.json_path.empty()) write_text(a.json_path, report.to_json());
    if (a.out_path.empty() && a.json_path.empty()) std::cout << report.to_csv();
    return 0;
}

// ---------------------------------------------------------------- simcheck

struct SimcheckArgs {
    int rows = 8;
    int cols = 8;
    int bits = 4;
    std::string variant = "shift-zr";
    std::int64_t trials = 10000;
    std::uint64_t seed = 1;
};

void dump_counterexample(const EncodedVector& enc, const std::vector<double>& x,
                         const QuantizedTensor& w, int cols) {
    std::cerr << "counterexample (" << variant_name(enc.variant) << ", B="
              << enc.config.magnitude_bits << "):\n  x =";
    for (double v : x) std::cerr << ' ' << v;
    std::cerr << "\n  slots =";
    for (std::size_t i = 0; i < enc.size(); ++i)
        std::cerr << " (" << (enc.slots[i].sign ? '-' : '+') << enc.slots[i].magnitude
                  << ",f" << int(enc.flags[i]) << ')';
    std::cerr << "\n";
    ArrayConfig cfg{static_cast<int>(enc.size()), cols, pe_for(enc.variant), 48,
                    enc.config.magnitude_bits};
    auto state = load_weights(cfg, w);
    auto result = run_matmul(state, std::vector<EncodedVector>{enc});
    for (int c = 0; c < cols; ++c) {
        std::vector<std::int32_t> col;
        for (std::size_t r = 0; r < enc.size(); ++r)
            col.push_back(w.codes[r * cols + c]);
        std::cerr << "  col " << c << ": array=" << result.outputs[c]
                  << " reference=" << dot_reference(enc, col) << "\n";
    }
}

int run_simcheck(const SimcheckArgs& a) {
    Variant variant = parse_variant(a.variant);
    QuantConfig acfg = make_config(a.bits, 1.0);
    ArrayConfig cfg{a.rows, a.cols, pe_for(variant), 48, a.bits};
    std::mt19937_64 rng(a.seed);
    auto w = random_weights(rng, a.rows, a.cols);
    auto state = load_weights(cfg, w);

    const std::int64_t batch_size = 512;
    std::int64_t done = 0;
    while (done < a.trials) {
        std::int64_t batch = std::min(batch_size, a.trials - done);
        std::vector<std::vector<double>> raw;
        std::vector<EncodedVector> acts;
        for (std::int64_t t = 0; t < batch; ++t) {
            raw.push_back(random_mixed_vector(rng, static_cast<std::size_t>(a.rows), 1.0));
            acts.push_back(encode(raw.back(), acfg, variant));
        }
        auto result = run_matmul(state, acts);
        for (std::int64_t t = 0; t < batch; ++t) {
            for (int c = 0; c < a.cols; ++c) {
                std::vector<std::int32_t> col;
                for (int r = 0; r < a.rows; ++r) col.push_back(w.codes[r * a.cols + c]);
                std::int64_t expect = dot_reference(acts[t], col);
                std::int64_t got = result.outputs[static_cast<std::size_t>(t) * a.cols + c];
                if (expect != got) {
                    std::cerr << "mismatch at trial " << done + t << " column " << c
                              << ": array=" << got << " reference=" << expect << "\n";
                    // Shrink: zero elements while the mismatch survives.
                    std::vector<double> x = raw[static_cast<std::size_t>(t)];
                    for (std::size_t i = 0; i < x.size(); ++i) {
                        std::vector<double> candidate = x;
                        candidate[i] = 0.0;
                        auto enc2 = encode(candidate, acfg, variant);
                        auto st2 = load_weights(cfg, w);
                        auto res2 = run_matmul(st2, std::vector<EncodedVector>{enc2});
                        std::vector<std::int32_t> col2;
                        for (int r = 0; r < a.rows; ++r)
                            col2.push_back(w.codes[r * a.cols + c]);
                        if (res2.outputs[static_cast<std::size_t>(c)] !=
                            dot_reference(enc2, col2))
                            x = candidate;
                    }
                    dump_counterexample(encode(x, acfg, variant), x, w, a.cols);
                    return kExitRuntime;
                }
            }
        }
        done += batch;
    }
    std::cout << "simcheck pass: " << a.trials << " vectors, " << a.rows << "x" << a.cols
              << " array, B=" << a.bits << ", variant=" << a.variant << "\n";
    return 0;
}

// ----------------------------------------------------------------- reorder

struct ReorderArgs {
    std::string profile_path;
    std::string out_path;
    CommonGen gen;
    int bits = 4;
    double hot_fraction = 0.5;
    double hot_scale = 10.0;
};

int run_reorder(const ReorderArgs& a) {
    if (!a.profile_path.empty()) {
        std::ifstream in(a.profile_path);
        if (!in) throw std::runtime_error("cannot open " + a.profile_path);
        std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
        ChannelProfile prof = ChannelProfile::from_json(text);
        Permutation perm = reorder_plan(prof);
        if (!a.out_path.empty()) write_text(a.out_path, perm.to_json() + "\n");
        std::cout << perm.to_json() << "\n";
        return 0;
    }

    std::vector<double> scales(a.gen.channels, 1.0);
    auto hot = static_cast<std::size_t>(a.hot_fraction * a.gen.channels);
    for (std::size_t c = 0; c < hot; ++c) scales[c] = a.hot_scale;
    auto batch = gen_activations_scaled(parse_dist(a.gen), scales, a.gen.samples,
                                        a.gen.seed);

    auto prof = profile(batch.values, batch.samples, batch.channels);
    auto perm = reorder_plan(prof);
    QuantConfig cfg = make_config(a.bits, percentile_magnitude(batch.values, 99.0));
    double before =
        coverage(batch.values, batch.samples, batch.channels, cfg, Variant::Shift);
    double after = coverage(batch.values, batch.samples, batch.channels, cfg,
                            Variant::Shift, perm);

    nlohmann::json summary{{"coverage_before", before},
                           {"coverage_after", after},
                           {"delta", after - before}};
    if (!a.out_path.empty()) write_text(a.out_path, perm.to_json() + "\n");
    std::cout << perm.to_json() << "\n" << summary.dump(2) << "\n";
    return 0;
}

// ------------------------------------------------------------------- trace

struct TraceArgs {
    int rows = 2;
    int cols = 2;
    int bits = 4;
    std::string variant = "shift";
    std::uint64_t seed = 1;
    std::size_t vectors = 2;
    std::string out_path = "trace.csv";
};

int run_trace(const TraceArgs& a) {
    Variant variant = parse_variant(a.variant);
    QuantConfig acfg = make_config(a.bits, 1.0);
    ArrayConfig cfg{a.rows, a.cols, pe_for(variant), 48, a.bits};
    std::mt19937_64 rng(a.seed);
    auto w = random_weights(rng, a.rows, a.cols);
    auto state = load_weights(cfg, w);

    std::vector<EncodedVector> acts;
    for (std::size_t t = 0; t < a.vectors; ++t)
        acts.push_back(
            encode(random_mixed_vector(rng, static_cast<std::size_t>(a.rows), 1.0), acfg,
                   variant));

    std::ofstream out(a.out_path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + a.out_path);
    out << "cycle,row,col,act_code,flag,psum\n";
    TraceSink sink = [&](const TraceRow& row) {
        out << row.cycle << ',' << row.row << ',' << row.col << ',' << row.act_code << ','
            << row.flag << ',' << row.psum << '\n';
    };
    auto result = run_matmul(state, acts, &sink);
    std::cout << "traced " << a.vectors << " vectors over " << result.cycles
              << " cycles to " << a.out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"overq: overwrite-quantization toolkit and array simulator"};
    app.require_subcommand(1);
    app.set_config("--config");

    QuantizeArgs qa;
    auto* quant_cmd =
        app.add_subcommand("quantize", "Quantize a tensor file and report the error");
    quant_cmd->add_option("--in", qa.in_path, "input .ovqt tensor")->required();
    quant_cmd->add_option("--out", qa.out_path, "dequantized output tensor");
    quant_cmd->add_option("--stats", qa.stats_path, "stats JSON path");
    quant_cmd->add_option("--bits", qa.bits, "magnitude bits")->check(CLI::Range(2, 12));
    quant_cmd->add_option("--calib", qa.calib, "max | percentile | mmse");
    quant_cmd->add_option("--percentile", qa.percentile, "percentile for --calib percentile");
    quant_cmd->add_option("--clip-scale", qa.clip_scale, "explicit clip scale (skips calibration)");

    SweepArgs sa;
    auto* sweep_cmd =
        app.add_subcommand("sweep", "Clip-threshold sweep with per-mode error reports");
    sweep_cmd->add_option("--in", sa.in_path, "rank-2 tensor input (samples x channels)");
    sweep_cmd->add_option("--dist", sa.gen.dist, "half-normal | relu-normal");
    sweep_cmd->add_option("--sigma", sa.gen.sigma, "generator sigma");
    sweep_cmd->add_option("--channels", sa.gen.channels, "generated channels");
    sweep_cmd->add_option("--samples", sa.gen.samples, "generated sample vectors");
    sweep_cmd->add_option("--seed", sa.gen.seed, "generator seed");
    sweep_cmd->add_option("--bits", sa.bits, "magnitude bits")->check(CLI::Range(2, 12));
    sweep_cmd->add_option("--variants", sa.variants,
                          "baseline | split | shift | shift-zr | zr")
        ->delimiter(',');
    sweep_cmd->add_option("--thresholds", sa.thresholds,
                          "fractions of max and/or 'mmse'; default 0.2..0.9 step 0.05")
        ->delimiter(',');
    sweep_cmd->add_option("--out", sa.out_path, "CSV output path");
    sweep_cmd->add_option("--json", sa.json_path, "JSON output path");

    SimcheckArgs ka;
    auto* sim_cmd = app.add_subcommand(
        "simcheck", "Check the spatial array against the reference dot product");
    sim_cmd->add_option("--rows", ka.rows, "array rows")->check(CLI::Range(1, 256));
    sim_cmd->add_option("--cols", ka.cols, "array cols")->check(CLI::Range(1, 256));
    sim_cmd->add_option("--bits", ka.bits, "activation magnitude bits")
        ->check(CLI::Range(2, 12));
    sim_cmd->add_option("--variant", ka.variant, "baseline | split | shift | shift-zr");
    sim_cmd->add_option("--trials", ka.trials, "random vectors to stream")
        ->check(CLI::NonNegativeNumber);
    sim_cmd->add_option("--seed", ka.seed, "RNG seed");

    ReorderArgs ra;
    auto* re_cmd = app.add_subcommand(
        "reorder", "Plan a channel permutation and report outlier coverage");
    re_cmd->add_option("--profile", ra.profile_path, "channel profile JSON input");
    re_cmd->add_option("--out", ra.out_path, "permutation JSON output");
    re_cmd->add_option("--dist", ra.gen.dist, "half-normal | relu-normal");
    re_cmd->add_option("--sigma", ra.gen.sigma, "generator sigma");
    re_cmd->add_option("--channels", ra.gen.channels, "generated channels");
    re_cmd->add_option("--samples", ra.gen.samples, "generated sample vectors");
    re_cmd->add_option("--seed", ra.gen.seed, "generator seed");
    re_cmd->add_option("--bits", ra.bits, "magnitude bits for coverage");
    re_cmd->add_option("--hot-fraction", ra.hot_fraction, "fraction of 10x channels");
    re_cmd->add_option("--hot-scale", ra.hot_scale, "scale multiplier for hot channels");

    TraceArgs ta;
    auto* tr_cmd = app.add_subcommand("trace", "Dump a per-cycle PE trace CSV");
    tr_cmd->add_option("--rows", ta.rows, "array rows")->check(CLI::Range(1, 64));
    tr_cmd->add_option("--cols", ta.cols, "array cols")->check(CLI::Range(1, 64));
    tr_cmd->add_option("--bits", ta.bits, "activation magnitude bits");
    tr_cmd->add_option("--variant", ta.variant, "baseline | split | shift | shift-zr");
    tr_cmd->add_option("--seed", ta.seed, "RNG seed");
    tr_cmd->add_option("--vectors", ta.vectors, "vectors to stream");
    tr_cmd->add_option("--out", ta.out_path, "trace CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (quant_cmd->parsed()) return run_quantize(qa);
        if (sweep_cmd->parsed()) return run_sweep(sa);
        if (sim_cmd->parsed()) return run_simcheck(ka);
        if (re_cmd->parsed()) return run_reorder(ra);
        if (tr_cmd->parsed()) return run_trace(ta);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return 0;
}
