#include "overq/tensor_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace overq {

static_assert(std::endian::native == std::endian::little,
              "tensor file reader assumes a little-endian host");

std::size_t TensorData::element_count() const {
    std::size_t n = 1;
    for (std::uint32_t d : dims) n *= d;
    return dims.empty() ? 0 : n;
}

std::vector<double> TensorData::as_doubles() const {
    return std::vector<double>(data.begin(), data.end());
}

TensorData TensorData::from_doubles(const std::vector<double>& values,
                                    std::vector<std::uint32_t> dims) {
    TensorData t;
    t.dims = std::move(dims);
    t.data.assign(values.begin(), values.end());
    if (t.data.size() != t.element_count())
        throw std::invalid_argument("TensorData: dims do not match element count");
    return t;
}

namespace {

constexpr char kMagic[4] = {'O', 'V', 'Q', 'T'};

template <typename T>
void write_pod(std::ofstream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& what) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw std::runtime_error("tensor file: truncated while reading " + what);
    return value;
}

}  // namespace

void write_tensor(const std::string& path, const TensorData& t) {
    if (t.data.size() != t.element_count())
        throw std::invalid_argument("write_tensor: dims do not match payload size");
    if (t.dims.size() > std::numeric_limits<std::uint16_t>::max())
        throw std::invalid_argument("write_tensor: rank too large");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_tensor: cannot open " + path);
    out.write(kMagic, sizeof(kMagic));
    write_pod<std::uint16_t>(out, kTensorFileVersion);
    write_pod<std::uint16_t>(out, kDtypeF32);
    write_pod<std::uint16_t>(out, static_cast<std::uint16_t>(t.dims.size()));
    for (std::uint32_t d : t.dims) write_pod<std::uint32_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!out) throw std::runtime_error("write_tensor: write failed for " + path);
}

TensorData read_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_tensor: cannot open " + path);

    char magic[4];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("read_tensor: bad magic in " + path);

    auto version = read_pod<std::uint16_t>(in, "version");
    if (version != kTensorFileVersion)
        throw std::runtime_error("read_tensor: unsupported version " +
                                 std::to_string(version));
    auto dtype = read_pod<std::uint16_t>(in, "dtype");
    if (dtype != kDtypeF32)
        throw std::runtime_error("read_tensor: unsupported dtype tag " +
                                 std::to_string(dtype));
    auto rank = read_pod<std::uint16_t>(in, "rank");

    TensorData t;
    t.dims.resize(rank);
    for (std::uint16_t i = 0; i < rank; ++i)
        t.dims[i] = read_pod<std::uint32_t>(in, "dims");

    t.data.resize(t.element_count());
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!in) throw std::runtime_error("read_tensor: truncated payload in " + path);
    char extra;
    if (in.read(&extra, 1))
        throw std::runtime_error("read_tensor: trailing bytes in " + path);
    return t;
}

}  // namespace overq
