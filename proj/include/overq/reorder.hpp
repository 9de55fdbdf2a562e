#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "overq/codec.hpp"
#include "overq/quant.hpp"

namespace overq {

// Per-channel statistics sampled from a profiling batch. Outliers here are
// the profiling-sense kind: values above the global 99th-percentile
// magnitude. The encoding-sense outlier (|x| > S) is a separate notion.
struct ChannelProfile {
    std::vector<std::int64_t> outlier_count;
    std::vector<std::int64_t> zero_count;
    std::int64_t sample_count = 0;

    std::size_t channels() const { return outlier_count.size(); }
    std::string to_json() const;
    static ChannelProfile from_json(const std::string& text);
};

// order[old_channel] = new position.
struct Permutation {
    std::vector<std::size_t> order;

    std::size_t size() const { return order.size(); }
    bool is_identity() const;
    void validate() const;  // throws unless order is a bijection

    std::string to_json() const;
    static Permutation from_json(const std::string& text);
};

// activations is a [samples x channels] row-major batch.
ChannelProfile profile(std::span<const double> activations, std::size_t samples,
                       std::size_t channels);

// Interleaves channels sorted by outlier count (descending, ties by original
// index) as high, low, high, low: even positions take the sorted list from
// the front, odd positions from the back. All-equal counts return identity.
Permutation reorder_plan(const ChannelProfile& p);

// Permutes each row of a [samples x channels] batch.
std::vector<double> apply_permutation(std::span<const double> activations,
                                      std::size_t samples, std::size_t channels,
                                      const Permutation& perm);

// Fraction of encoding-sense outliers (|x| > S) whose encoding committed an
// overwrite, measured by encoding every (optionally permuted) row. Returns
// 1.0 when the batch has no outliers.
double coverage(std::span<const double> activations, std::size_t samples,
                std::size_t channels, const QuantConfig& cfg, Variant variant,
                const std::optional<Permutation>& perm = std::nullopt);

}  // namespace overq
