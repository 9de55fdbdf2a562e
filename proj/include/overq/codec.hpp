#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "overq/quant.hpp"

namespace overq {

enum class Variant : std::uint8_t { Baseline, Split, Shift, ShiftWithZeroReuse };

const char* variant_name(Variant v);

// One hardware vector slot: a sign bit plus a B-bit unsigned field.
// For a regular slot the field is the magnitude code. For a Shift extension
// slot the top field bit is the shift-direction select (0 = extra MSBs,
// 1 = extra LSBs) and the low B-1 bits are extension data; its sign bit is
// always 0, the pair's sign lives in the left slot.
struct Slot {
    std::uint8_t sign = 0;
    std::uint32_t magnitude = 0;

    friend bool operator==(const Slot&, const Slot&) = default;
};

inline constexpr std::uint32_t kDirectionMsb = 0;
inline constexpr std::uint32_t kDirectionLsb = 1;

struct EncodedVector {
    std::vector<Slot> slots;
    std::vector<std::uint8_t> flags;  // 1 = slot participates in an overwrite pair
    Variant variant = Variant::Baseline;
    QuantConfig config;

    std::size_t size() const { return slots.size(); }
};

// Role of each slot after parsing the flag stream. Flags come in adjacent
// non-overlapping (left, right) pairs; a lone trailing flag is malformed.
enum class SlotRole : std::uint8_t { Single, PairLeft, PairRight };

std::vector<SlotRole> parse_flags(std::span<const std::uint8_t> flags);

// Exact decoded value of one slot position. The effective code is the
// rational code_num / code_den in units of S/(2^B-1); code_den is always
// 2^(B-1), so code_num is exact for every regime (outlier extension codes
// exceed 2^B-1, zero-reuse codes are fractional).
struct DecodedValue {
    double value = 0.0;
    std::int64_t code_num = 0;
    std::int64_t code_den = 1;
};

EncodedVector encode(std::span<const double> x, const QuantConfig& cfg, Variant variant);

std::vector<double> decode(const EncodedVector& v);
std::vector<DecodedValue> decode_values(const EncodedVector& v);

// Bit-exact reference dot product against quantized weights. Returns the
// integer accumulator with f = B-1 fractional bits; a flagged right slot
// contributes through its left neighbour's weight. Integer arithmetic only.
std::int64_t dot_reference(const EncodedVector& v, const QuantizedTensor& w);
std::int64_t dot_reference(const EncodedVector& v, std::span<const std::int32_t> w_codes);

// Canonical test-vector serialization: one record per slot, fields
// (flag:1, sign:1, magnitude:B) packed little-endian. See docs/ENCODING.md.
std::vector<std::uint8_t> serialize_slots(const EncodedVector& v);
EncodedVector deserialize_slots(std::span<const std::uint8_t> bytes, std::size_t n,
                                const QuantConfig& cfg, Variant variant);

}  // namespace overq
