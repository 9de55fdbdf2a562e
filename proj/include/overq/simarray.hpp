#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "overq/codec.hpp"
#include "overq/quant.hpp"

namespace overq {

enum class PeVariant : std::uint8_t { Baseline, Split, Shift };

const char* pe_variant_name(PeVariant v);

// Weight-stationary M x N array: input channels map to rows, output channels
// to columns. Activations move left to right, partial sums top to bottom.
struct ArrayConfig {
    int rows = 1;
    int cols = 1;
    PeVariant pe_variant = PeVariant::Baseline;
    int accumulator_bits = 48;  // psums saturate nowhere; overflow is an error
    int magnitude_bits = 4;     // activation slot width B; psums carry B-1 fraction bits

    void validate() const;
};

// Activation packet in flight through one row. use_adjacent is the per-slot
// flag bit the PE muxes weights on; direction/data are decoded from the slot
// field when the packet is an extension slot.
struct ActPacket {
    bool valid = false;
    std::uint8_t sign = 0;
    std::uint32_t field = 0;
    bool use_adjacent = false;
    std::uint32_t direction = kDirectionMsb;
};

struct PEState {
    std::int32_t weight = 0;
    std::int32_t adjacent_weight = 0;  // latched copy of the row-above weight
    ActPacket act_reg;
    std::int64_t psum_reg = 0;
};

struct TraceRow {
    std::int64_t cycle;
    int row;
    int col;
    std::int32_t act_code;
    int flag;
    std::int64_t psum;
};

using TraceSink = std::function<void(const TraceRow&)>;

struct ArrayState {
    ArrayConfig config;
    std::vector<PEState> pes;  // row-major [rows x cols]
    std::int64_t cycle = 0;

    // Streaming bookkeeping for run_matmul / step.
    std::vector<std::vector<ActPacket>> pending;  // [rows][vector index]
    std::size_t vectors_total = 0;
    std::vector<std::int64_t> outputs;  // [vectors_total x cols], filled as psums drain
    std::vector<std::uint8_t> output_ready;

    PEState& pe(int r, int c) { return pes[static_cast<std::size_t>(r) * config.cols + c]; }
    const PEState& pe(int r, int c) const {
        return pes[static_cast<std::size_t>(r) * config.cols + c];
    }
};

// Thrown on accumulator overflow with the offending coordinates.
struct AccumulatorOverflow : std::runtime_error {
    int row, col;
    std::int64_t cycle;
    AccumulatorOverflow(int r, int c, std::int64_t cyc);
};

// Latches weights and each PE's copy of its upper neighbour's weight.
// w is [rows x cols] row-major.
ArrayState load_weights(const ArrayConfig& cfg, const QuantizedTensor& w);

// Queues encoded vectors (each of length rows) for streaming. Validates that
// the encoding variant is compatible with the PE variant.
void queue_inputs(ArrayState& state, std::span<const EncodedVector> acts);

// One synchronous cycle: every PE computes from its current registers, then
// activations shift right and psums shift down.
void step(ArrayState& state, const TraceSink* trace = nullptr);

struct MatmulResult {
    std::vector<std::int64_t> outputs;  // [vectors x cols]
    std::int64_t cycles = 0;
};

// Streams all vectors with the skewed schedule and drains the pipeline.
// Cycle count depends only on shape and batch size, never on the PE variant.
MatmulResult run_matmul(ArrayState& state, std::span<const EncodedVector> acts,
                        const TraceSink* trace = nullptr);

// Converts one output row of accumulator words back to reals (dividing by the
// activation/weight scale product and 2^f) and re-encodes it for the next
// layer, producing the flagged activation stream.
EncodedVector rescale_and_requantize(std::span<const std::int64_t> psums,
                                     const QuantConfig& act_cfg, const QuantConfig& w_cfg,
                                     const QuantConfig& out_cfg, Variant variant);

}  // namespace overq
