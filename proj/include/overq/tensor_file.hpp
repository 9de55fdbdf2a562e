#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace overq {

// Binary tensor container: magic "OVQT", version u16, dtype tag u16 (f32),
// rank u16, dims u32 each, then the little-endian f32 payload.
struct TensorData {
    std::vector<std::uint32_t> dims;
    std::vector<float> data;

    std::size_t element_count() const;
    std::vector<double> as_doubles() const;
    static TensorData from_doubles(const std::vector<double>& values,
                                   std::vector<std::uint32_t> dims);
};

inline constexpr std::uint16_t kTensorFileVersion = 1;
inline constexpr std::uint16_t kDtypeF32 = 1;

void write_tensor(const std::string& path, const TensorData& t);
TensorData read_tensor(const std::string& path);

}  // namespace overq
