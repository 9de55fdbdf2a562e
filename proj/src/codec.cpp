#include "overq/codec.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace overq {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::Baseline: return "baseline";
        case Variant::Split: return "split";
        case Variant::Shift: return "shift";
        case Variant::ShiftWithZeroReuse: return "shift-zr";
    }
    return "?";
}

std::vector<SlotRole> parse_flags(std::span<const std::uint8_t> flags) {
    std::vector<SlotRole> roles(flags.size(), SlotRole::Single);
    std::size_t i = 0;
    while (i < flags.size()) {
        if (!flags[i]) {
            ++i;
            continue;
        }
        if (i + 1 >= flags.size() || !flags[i + 1])
            throw std::invalid_argument("parse_flags: unpaired flag at index " +
                                        std::to_string(i));
        roles[i] = SlotRole::PairLeft;
        roles[i + 1] = SlotRole::PairRight;
        i += 2;
    }
    return roles;
}

namespace {

struct SlotFields {
    std::uint32_t direction;
    std::uint32_t data;
};

SlotFields extension_fields(const Slot& s, int magnitude_bits) {
    const std::uint32_t data_mask = (1u << (magnitude_bits - 1)) - 1u;
    return {(s.magnitude >> (magnitude_bits - 1)) & 1u, s.magnitude & data_mask};
}

double pair_error_sq(double e0, double e1) { return e0 * e0 + e1 * e1; }

// Squared error of encoding the pair (x0, x1) as two independent regular slots.
double baseline_pair_error(double x0, double x1, const QuantConfig& cfg) {
    double e0 = x0 - dequantize_code(quantize_code(x0, cfg), cfg);
    double e1 = x1 - dequantize_code(quantize_code(x1, cfg), cfg);
    return pair_error_sq(e0, e1);
}

}  // namespace

EncodedVector encode(std::span<const double> x, const QuantConfig& cfg, Variant variant) {
    cfg.validate();
    if (x.empty()) throw std::invalid_argument("encode: empty input vector");
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!std::isfinite(x[i]))
            throw std::invalid_argument("encode: non-finite input at index " +
                                        std::to_string(i));

    const int bits = cfg.magnitude_bits;
    const std::int64_t maxc = cfg.max_code();
    const double scale = cfg.clip_scale;
    const double lsb = cfg.lsb();
    const std::size_t n = x.size();

    EncodedVector out;
    out.variant = variant;
    out.config = cfg;
    out.slots.resize(n);
    out.flags.assign(n, 0);

    auto store_regular = [&](std::size_t i) {
        std::int64_t code = quantize_code(x[i], cfg);
        out.slots[i].sign = code < 0 ? 1 : 0;
        out.slots[i].magnitude = static_cast<std::uint32_t>(code < 0 ? -code : code);
    };

    if (variant == Variant::Baseline) {
        for (std::size_t i = 0; i < n; ++i) store_regular(i);
        return out;
    }

    const bool zero_reuse = variant == Variant::ShiftWithZeroReuse;
    std::size_t i = 0;
    while (i < n) {
        if (i + 1 >= n) {
            store_regular(i);
            break;
        }
        const double xi = x[i];
        const double xnext = x[i + 1];
        const double mag = std::fabs(xi);
        const std::uint8_t sign = xi < 0 ? 1 : 0;

        // Outlier overwrite: the right neighbour's slot extends xi's range.
        // Committed only when it strictly reduces the pair's squared error.
        if (mag > scale && std::fabs(xnext) < cfg.overwrite_threshold) {
            if (variant == Variant::Split) {
                std::int64_t half = quantize_code(xi / 2.0, cfg);
                std::uint32_t m = static_cast<std::uint32_t>(half < 0 ? -half : half);
                double decoded = 2.0 * dequantize_code(half, cfg);
                if (pair_error_sq(xi - decoded, xnext) <
                    baseline_pair_error(xi, xnext, cfg)) {
                    out.slots[i] = {sign, m};
                    out.slots[i + 1] = {sign, m};
                    out.flags[i] = out.flags[i + 1] = 1;
                    i += 2;
                    continue;
                }
            } else {
                const std::int64_t ext_max = (std::int64_t{1} << (2 * bits - 1)) - 1;
                std::int64_t r = std::llround(mag * static_cast<double>(maxc) / scale);
                r = std::min(r, ext_max);
                std::uint32_t low = static_cast<std::uint32_t>(r & maxc);
                std::uint32_t high = static_cast<std::uint32_t>(r >> bits);
                double decoded = (sign ? -1.0 : 1.0) * static_cast<double>(r) * lsb;
                if (pair_error_sq(xi - decoded, xnext) <
                    baseline_pair_error(xi, xnext, cfg)) {
                    out.slots[i] = {sign, low};
                    out.slots[i + 1] = {0, (kDirectionMsb << (bits - 1)) | high};
                    out.flags[i] = out.flags[i + 1] = 1;
                    i += 2;
                    continue;
                }
            }
        }

        // Zero-reuse: the neighbour quantizes to zero, so its slot can carry
        // B-1 extra fraction bits of xi. Skipped when the finer grid lands on
        // the same point (zero fractional residual keeps encodings canonical).
        if (zero_reuse && mag <= scale && quantize_code(xnext, cfg) == 0) {
            const std::int64_t frac_den = std::int64_t{1} << (bits - 1);
            double r_real = mag * static_cast<double>(maxc) / scale;
            std::int64_t t = std::llround(r_real * static_cast<double>(frac_den));
            std::int64_t slot_mag = t >> (bits - 1);
            std::int64_t frac = t & (frac_den - 1);
            if (frac != 0) {
                double decoded = (sign ? -1.0 : 1.0) * static_cast<double>(t) * lsb /
                                 static_cast<double>(frac_den);
                if (pair_error_sq(xi - decoded, xnext) <
                    baseline_pair_error(xi, xnext, cfg)) {
                    out.slots[i] = {sign, static_cast<std::uint32_t>(slot_mag)};
                    out.slots[i + 1] = {
                        0, (kDirectionLsb << (bits - 1)) | static_cast<std::uint32_t>(frac)};
                    out.flags[i] = out.flags[i + 1] = 1;
                    i += 2;
                    continue;
                }
            }
        }

        store_regular(i);
        ++i;
    }
    return out;
}

std::vector<DecodedValue> decode_values(const EncodedVector& v) {
    v.config.validate();
    const int bits = v.config.magnitude_bits;
    const std::int64_t maxc = v.config.max_code();
    const std::int64_t den = std::int64_t{1} << (bits - 1);
    const double lsb = v.config.lsb();

    if (v.slots.size() != v.flags.size())
        throw std::invalid_argument("decode: slot/flag length mismatch");
    for (const Slot& s : v.slots)
        if (s.magnitude > static_cast<std::uint32_t>(maxc) || s.sign > 1)
            throw std::invalid_argument("decode: slot field out of range");

    auto roles = parse_flags(v.flags);
    if (v.variant == Variant::Baseline)
        for (auto r : roles)
            if (r != SlotRole::Single)
                throw std::invalid_argument("decode: flags set on a baseline vector");

    std::vector<DecodedValue> out(v.slots.size());
    for (std::size_t i = 0; i < v.slots.size(); ++i) {
        const Slot& s = v.slots[i];
        DecodedValue& d = out[i];
        d.code_den = den;
        switch (roles[i]) {
            case SlotRole::Single: {
                std::int64_t code = s.sign ? -static_cast<std::int64_t>(s.magnitude)
                                           : static_cast<std::int64_t>(s.magnitude);
                d.code_num = code * den;
                break;
            }
            case SlotRole::PairRight:
                d.code_num = 0;  // overwritten value is dropped
                break;
            case SlotRole::PairLeft: {
                const Slot& ext = v.slots[i + 1];
                std::int64_t sgn = s.sign ? -1 : 1;
                if (v.variant == Variant::Split) {
                    if (ext.magnitude != s.magnitude || ext.sign != s.sign)
                        throw std::invalid_argument(
                            "decode: split pair slots differ at index " + std::to_string(i));
                    d.code_num = sgn * 2 * static_cast<std::int64_t>(s.magnitude) * den;
                } else {
                    if (ext.sign != 0)
                        throw std::invalid_argument(
                            "decode: extension slot carries a sign at index " +
                            std::to_string(i + 1));
                    auto [dir, data] = extension_fields(ext, bits);
                    if (dir == kDirectionLsb && v.variant != Variant::ShiftWithZeroReuse)
                        throw std::invalid_argument(
                            "decode: LSB extension outside zero-reuse variant");
                    if (dir == kDirectionMsb) {
                        std::int64_t code = (static_cast<std::int64_t>(data) << bits) |
                                            static_cast<std::int64_t>(s.magnitude);
                        d.code_num = sgn * code * den;
                    } else {
                        d.code_num = sgn * (static_cast<std::int64_t>(s.magnitude) * den +
                                            static_cast<std::int64_t>(data));
                    }
                }
                break;
            }
        }
        d.value = static_cast<double>(d.code_num) * lsb / static_cast<double>(den);
    }
    return out;
}

std::vector<double> decode(const EncodedVector& v) {
    auto vals = decode_values(v);
    std::vector<double> out(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) out[i] = vals[i].value;
    return out;
}

std::int64_t dot_reference(const EncodedVector& v, std::span<const std::int32_t> w_codes) {
    v.config.validate();
    if (w_codes.size() != v.slots.size())
        throw std::invalid_argument("dot_reference: length mismatch");
    // Same operating bounds as the spatial array: keeps every per-slot
    // product exactly representable in the 64-bit accumulator.
    if (v.config.magnitude_bits > 12)
        throw std::invalid_argument("dot_reference: magnitude_bits above 12 unsupported");
    for (std::int32_t w : w_codes)
        if (w > (1 << 20) || w < -(1 << 20))
            throw std::invalid_argument("dot_reference: weight code out of supported range");
    for (const Slot& s : v.slots)
        if (s.magnitude > static_cast<std::uint32_t>(v.config.max_code()))
            throw std::invalid_argument("dot_reference: slot magnitude out of range");

    const int bits = v.config.magnitude_bits;
    const std::int64_t frac_unit = std::int64_t{1} << (bits - 1);
    const std::int64_t msb_unit = std::int64_t{1} << (2 * bits - 1);
    auto roles = parse_flags(v.flags);

    std::int64_t acc = 0;
    for (std::size_t i = 0; i < v.slots.size(); ++i) {
        const Slot& s = v.slots[i];
        std::int64_t code = s.sign ? -static_cast<std::int64_t>(s.magnitude)
                                   : static_cast<std::int64_t>(s.magnitude);
        switch (roles[i]) {
            case SlotRole::Single:
            case SlotRole::PairLeft:
                acc += code * w_codes[i] * frac_unit;
                break;
            case SlotRole::PairRight: {
                // Overwritten slot: product uses the left neighbour's weight,
                // and for Shift pairs the left neighbour's sign.
                const std::int64_t w_left = w_codes[i - 1];
                if (v.variant == Variant::Split) {
                    acc += code * w_left * frac_unit;
                } else {
                    auto [dir, data] = extension_fields(s, bits);
                    std::int64_t sgn = v.slots[i - 1].sign ? -1 : 1;
                    std::int64_t prod = sgn * static_cast<std::int64_t>(data) * w_left;
                    // MSB data aligns 2^B above the regular product; LSB data
                    // already sits f bits down, so it lands unshifted.
                    acc += dir == kDirectionMsb ? prod * msb_unit : prod;
                }
                break;
            }
        }
    }
    return acc;
}

std::int64_t dot_reference(const EncodedVector& v, const QuantizedTensor& w) {
    return dot_reference(v, std::span<const std::int32_t>(w.codes));
}

std::vector<std::uint8_t> serialize_slots(const EncodedVector& v) {
    const int bits = v.config.magnitude_bits;
    const std::size_t record_bits = static_cast<std::size_t>(bits) + 2;
    std::vector<std::uint8_t> out((v.slots.size() * record_bits + 7) / 8, 0);

    auto put_bit = [&](std::size_t pos, std::uint32_t bit) {
        if (bit) out[pos / 8] |= static_cast<std::uint8_t>(1u << (pos % 8));
    };
    for (std::size_t i = 0; i < v.slots.size(); ++i) {
        std::size_t base = i * record_bits;
        put_bit(base, v.flags[i]);
        put_bit(base + 1, v.slots[i].sign);
        for (int b = 0; b < bits; ++b)
            put_bit(base + 2 + static_cast<std::size_t>(b), (v.slots[i].magnitude >> b) & 1u);
    }
    return out;
}

EncodedVector deserialize_slots(std::span<const std::uint8_t> bytes, std::size_t n,
                                const QuantConfig& cfg, Variant variant) {
    cfg.validate();
    const int bits = cfg.magnitude_bits;
    const std::size_t record_bits = static_cast<std::size_t>(bits) + 2;
    if (bytes.size() * 8 < n * record_bits)
        throw std::invalid_argument("deserialize_slots: byte stream too short");

    auto get_bit = [&](std::size_t pos) -> std::uint32_t {
        return (bytes[pos / 8] >> (pos % 8)) & 1u;
    };
    EncodedVector v;
    v.variant = variant;
    v.config = cfg;
    v.slots.resize(n);
    v.flags.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t base = i * record_bits;
        v.flags[i] = static_cast<std::uint8_t>(get_bit(base));
        v.slots[i].sign = static_cast<std::uint8_t>(get_bit(base + 1));
        std::uint32_t mag = 0;
        for (int b = 0; b < bits; ++b)
            mag |= get_bit(base + 2 + static_cast<std::size_t>(b)) << b;
        v.slots[i].magnitude = mag;
    }
    parse_flags(v.flags);  // validates pair structure
    return v;
}

}  // namespace overq
