#include "overq/simarray.hpp"

#include <stdexcept>
#include <string>

namespace overq {

const char* pe_variant_name(PeVariant v) {
    switch (v) {
        case PeVariant::Baseline: return "baseline";
        case PeVariant::Split: return "split";
        case PeVariant::Shift: return "shift";
    }
    return "?";
}

void ArrayConfig::validate() const {
    if (rows < 1 || cols < 1)
        throw std::invalid_argument("ArrayConfig: rows and cols must be >= 1");
    if (accumulator_bits < 32 || accumulator_bits > 62)
        throw std::invalid_argument("ArrayConfig: accumulator_bits must be in [32, 62]");
    if (magnitude_bits < 2 || magnitude_bits > 12)
        throw std::invalid_argument("ArrayConfig: magnitude_bits must be in [2, 12]");
}

AccumulatorOverflow::AccumulatorOverflow(int r, int c, std::int64_t cyc)
    : std::runtime_error("accumulator overflow at PE(" + std::to_string(r) + "," +
                         std::to_string(c) + ") on cycle " + std::to_string(cyc)),
      row(r), col(c), cycle(cyc) {}

ArrayState load_weights(const ArrayConfig& cfg, const QuantizedTensor& w) {
    cfg.validate();
    const std::size_t rows = static_cast<std::size_t>(cfg.rows);
    const std::size_t cols = static_cast<std::size_t>(cfg.cols);
    if (w.shape.size() != 2 || w.shape[0] != rows || w.shape[1] != cols)
        throw std::invalid_argument("load_weights: weight tensor is not rows x cols");
    for (std::int32_t code : w.codes)
        if (code > (1 << 20) || code < -(1 << 20))
            throw std::invalid_argument("load_weights: weight code out of supported range");

    ArrayState state;
    state.config = cfg;
    state.pes.resize(rows * cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            PEState& pe = state.pes[r * cols + c];
            pe.weight = w.codes[r * cols + c];
            // Row 0 has no upper neighbour; its copy is never selected since a
            // pair's right member always sits one row below its left member.
            pe.adjacent_weight = r == 0 ? 0 : w.codes[(r - 1) * cols + c];
        }
    }
    return state;
}

namespace {

bool encoding_compatible(PeVariant pe, const EncodedVector& v) {
    bool any_flag = false;
    for (std::uint8_t f : v.flags) any_flag |= f != 0;
    if (!any_flag) return true;
    switch (pe) {
        case PeVariant::Baseline: return false;
        case PeVariant::Split: return v.variant == Variant::Split;
        case PeVariant::Shift:
            return v.variant == Variant::Shift || v.variant == Variant::ShiftWithZeroReuse;
    }
    return false;
}

std::vector<ActPacket> build_packets(const EncodedVector& v, const ArrayConfig& cfg) {
    auto roles = parse_flags(v.flags);
    std::vector<ActPacket> packets(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Slot& s = v.slots[i];
        ActPacket& p = packets[i];
        p.valid = true;
        p.field = s.magnitude;
        p.sign = s.sign;
        if (roles[i] == SlotRole::PairRight) {
            p.use_adjacent = true;
            if (v.variant != Variant::Split) {
                // Extension slot: the outlier's sign rides in from the left
                // slot, the direction select from the slot's own top bit.
                p.sign = v.slots[i - 1].sign;
                p.direction = (s.magnitude >> (cfg.magnitude_bits - 1)) & 1u;
            }
        }
    }
    return packets;
}

std::int64_t pe_contribution(const PEState& pe, const ArrayConfig& cfg) {
    const ActPacket& a = pe.act_reg;
    if (!a.valid) return 0;

    const int bits = cfg.magnitude_bits;
    const std::int64_t frac_unit = std::int64_t{1} << (bits - 1);
    const std::int64_t sgn = a.sign ? -1 : 1;

    switch (cfg.pe_variant) {
        case PeVariant::Baseline:
            return sgn * static_cast<std::int64_t>(a.field) * pe.weight * frac_unit;
        case PeVariant::Split: {
            const std::int64_t w = a.use_adjacent ? pe.adjacent_weight : pe.weight;
            return sgn * static_cast<std::int64_t>(a.field) * w * frac_unit;
        }
        case PeVariant::Shift: {
            const std::int64_t w = a.use_adjacent ? pe.adjacent_weight : pe.weight;
            if (!a.use_adjacent)
                return sgn * static_cast<std::int64_t>(a.field) * w * frac_unit;
            const std::uint32_t data = a.field & ((1u << (bits - 1)) - 1u);
            const std::int64_t prod = sgn * static_cast<std::int64_t>(data) * w;
            // Constant-shift mux: MSB data aligns 2^B above a regular product,
            // LSB data lands f bits below it (so unshifted in the accumulator).
            if (a.direction == kDirectionMsb)
                return prod * (std::int64_t{1} << (2 * bits - 1));
            return prod;
        }
    }
    return 0;
}

}  // namespace

void queue_inputs(ArrayState& state, std::span<const EncodedVector> acts) {
    const ArrayConfig& cfg = state.config;
    cfg.validate();
    const std::size_t rows = static_cast<std::size_t>(cfg.rows);

    state.pending.assign(rows, {});
    for (auto& lane : state.pending) lane.resize(acts.size());
    for (std::size_t t = 0; t < acts.size(); ++t) {
        const EncodedVector& v = acts[t];
        if (v.size() != rows)
            throw std::invalid_argument("queue_inputs: vector " + std::to_string(t) +
                                        " length does not match row count");
        if (v.config.magnitude_bits != cfg.magnitude_bits)
            throw std::invalid_argument("queue_inputs: activation bitwidth mismatch");
        if (!encoding_compatible(cfg.pe_variant, v))
            throw std::invalid_argument(
                std::string("queue_inputs: ") + variant_name(v.variant) +
                " encoding is not compatible with " + pe_variant_name(cfg.pe_variant) +
                " PEs");
        auto packets = build_packets(v, cfg);
        for (std::size_t r = 0; r < rows; ++r) state.pending[r][t] = packets[r];
    }

    state.vectors_total = acts.size();
    state.outputs.assign(acts.size() * static_cast<std::size_t>(cfg.cols), 0);
    state.output_ready.assign(acts.size() * static_cast<std::size_t>(cfg.cols), 0);
    state.cycle = 0;
    for (PEState& pe : state.pes) {
        pe.act_reg = ActPacket{};
        pe.psum_reg = 0;
    }
}

void step(ArrayState& state, const TraceSink* trace) {
    const ArrayConfig& cfg = state.config;
    const int rows = cfg.rows;
    const int cols = cfg.cols;
    const std::int64_t acc_limit = std::int64_t{1} << (cfg.accumulator_bits - 1);

    std::vector<std::int64_t> psum_next(state.pes.size(), 0);
    std::vector<ActPacket> act_next(state.pes.size());

    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const PEState& pe = state.pe(r, c);
            std::int64_t incoming = r == 0 ? 0 : state.pe(r - 1, c).psum_reg;
            std::int64_t psum = incoming + pe_contribution(pe, cfg);
            if (psum >= acc_limit || psum < -acc_limit)
                throw AccumulatorOverflow(r, c, state.cycle);
            psum_next[static_cast<std::size_t>(r) * cols + c] = psum;

            if (c == 0) {
                ActPacket feed;
                std::int64_t t = state.cycle - r;
                if (t >= 0 && static_cast<std::size_t>(t) < state.vectors_total)
                    feed = state.pending[static_cast<std::size_t>(r)]
                                        [static_cast<std::size_t>(t)];
                act_next[static_cast<std::size_t>(r) * cols] = feed;
            } else {
                act_next[static_cast<std::size_t>(r) * cols + c] = state.pe(r, c - 1).act_reg;
            }

            if (trace) {
                const ActPacket& a = pe.act_reg;
                std::int32_t code = a.valid ? (a.sign ? -static_cast<std::int32_t>(a.field)
                                                      : static_cast<std::int32_t>(a.field))
                                            : 0;
                (*trace)({state.cycle, r, c, code, a.use_adjacent ? 1 : 0, psum});
            }
        }
    }

    for (std::size_t i = 0; i < state.pes.size(); ++i) {
        state.pes[i].psum_reg = psum_next[i];
        state.pes[i].act_reg = act_next[i];
    }

    // A vector entering row 0 on cycle t reaches the bottom of column j with
    // its final psum latched at the end of cycle t + rows + j.
    for (int c = 0; c < cols; ++c) {
        std::int64_t t = state.cycle - rows - c;
        if (t >= 0 && static_cast<std::size_t>(t) < state.vectors_total) {
            std::size_t idx = static_cast<std::size_t>(t) * cols + c;
            state.outputs[idx] = state.pe(rows - 1, c).psum_reg;
            state.output_ready[idx] = 1;
        }
    }
    ++state.cycle;
}

MatmulResult run_matmul(ArrayState& state, std::span<const EncodedVector> acts,
                        const TraceSink* trace) {
    queue_inputs(state, acts);
    const std::int64_t total =
        static_cast<std::int64_t>(acts.size()) + state.config.rows + state.config.cols - 1;
    for (std::int64_t i = 0; i < total; ++i) step(state, trace);

    for (std::uint8_t ready : state.output_ready)
        if (!ready) throw std::logic_error("run_matmul: pipeline failed to drain");
    return {state.outputs, total};
}

EncodedVector rescale_and_requantize(std::span<const std::int64_t> psums,
                                     const QuantConfig& act_cfg, const QuantConfig& w_cfg,
                                     const QuantConfig& out_cfg, Variant variant) {
    act_cfg.validate();
    w_cfg.validate();
    const double frac_unit = static_cast<double>(std::int64_t{1}
                                                 << (act_cfg.magnitude_bits - 1));
    const double to_real = act_cfg.lsb() * w_cfg.lsb() / frac_unit;
    std::vector<double> reals(psums.size());
    for (std::size_t i = 0; i < psums.size(); ++i)
        reals[i] = static_cast<double>(psums[i]) * to_real;
    return encode(reals, out_cfg, variant);
}

}  // namespace overq
