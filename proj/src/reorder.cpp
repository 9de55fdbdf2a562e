#include "overq/reorder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace overq {

using nlohmann::json;

std::string ChannelProfile::to_json() const {
    json j;
    j["sample_count"] = sample_count;
    j["outlier_count"] = outlier_count;
    j["zero_count"] = zero_count;
    return j.dump(2);
}

ChannelProfile ChannelProfile::from_json(const std::string& text) {
    json j = json::parse(text);
    ChannelProfile p;
    p.sample_count = j.at("sample_count").get<std::int64_t>();
    p.outlier_count = j.at("outlier_count").get<std::vector<std::int64_t>>();
    p.zero_count = j.at("zero_count").get<std::vector<std::int64_t>>();
    if (p.outlier_count.size() != p.zero_count.size() || p.outlier_count.empty())
        throw std::invalid_argument("ChannelProfile: inconsistent channel counts");
    for (std::size_t c = 0; c < p.channels(); ++c)
        if (p.outlier_count[c] < 0 || p.zero_count[c] < 0 ||
            p.outlier_count[c] > p.sample_count || p.zero_count[c] > p.sample_count)
            throw std::invalid_argument("ChannelProfile: count out of range");
    return p;
}

bool Permutation::is_identity() const {
    for (std::size_t i = 0; i < order.size(); ++i)
        if (order[i] != i) return false;
    return true;
}

void Permutation::validate() const {
    std::vector<std::size_t> image(order.begin(), order.end());
    std::sort(image.begin(), image.end());
    for (std::size_t i = 0; i < image.size(); ++i)
        if (image[i] != i)
            throw std::invalid_argument("Permutation: order is not a bijection");
}

std::string Permutation::to_json() const {
    json j;
    j["order"] = order;
    return j.dump(2);
}

Permutation Permutation::from_json(const std::string& text) {
    json j = json::parse(text);
    Permutation p;
    p.order = j.at("order").get<std::vector<std::size_t>>();
    p.validate();
    return p;
}

ChannelProfile profile(std::span<const double> activations, std::size_t samples,
                       std::size_t channels) {
    if (samples == 0 || channels == 0 || activations.size() != samples * channels)
        throw std::invalid_argument("profile: empty tensor or shape mismatch");

    // Outlier cut: the largest 1% of all profiled magnitudes.
    double cut = percentile_magnitude(activations, 99.0);

    ChannelProfile p;
    p.sample_count = static_cast<std::int64_t>(samples);
    p.outlier_count.assign(channels, 0);
    p.zero_count.assign(channels, 0);
    for (std::size_t s = 0; s < samples; ++s) {
        for (std::size_t c = 0; c < channels; ++c) {
            double x = activations[s * channels + c];
            if (std::fabs(x) > cut) ++p.outlier_count[c];
            if (x == 0.0) ++p.zero_count[c];
        }
    }
    return p;
}

Permutation reorder_plan(const ChannelProfile& p) {
    const std::size_t n = p.channels();
    if (n == 0) throw std::invalid_argument("reorder_plan: empty profile");

    Permutation perm;
    perm.order.resize(n);
    bool all_equal = std::all_of(p.outlier_count.begin(), p.outlier_count.end(),
                                 [&](std::int64_t c) { return c == p.outlier_count[0]; });
    if (all_equal) {
        std::iota(perm.order.begin(), perm.order.end(), std::size_t{0});
        return perm;
    }

    std::vector<std::size_t> by_count(n);
    std::iota(by_count.begin(), by_count.end(), std::size_t{0});
    std::stable_sort(by_count.begin(), by_count.end(), [&](std::size_t a, std::size_t b) {
        return p.outlier_count[a] > p.outlier_count[b];
    });

    // Even positions walk the sorted list from the front (high counts), odd
    // positions from the back (low counts).
    std::size_t front = 0, back = n - 1;
    for (std::size_t pos = 0; pos < n; ++pos) {
        std::size_t channel = (pos % 2 == 0) ? by_count[front++] : by_count[back--];
        perm.order[channel] = pos;
    }
    return perm;
}

std::vector<double> apply_permutation(std::span<const double> activations,
                                      std::size_t samples, std::size_t channels,
                                      const Permutation& perm) {
    if (perm.size() != channels)
        throw std::invalid_argument("apply_permutation: channel count mismatch");
    if (activations.size() != samples * channels)
        throw std::invalid_argument("apply_permutation: shape mismatch");
    perm.validate();
    std::vector<double> out(activations.size());
    for (std::size_t s = 0; s < samples; ++s)
        for (std::size_t c = 0; c < channels; ++c)
            out[s * channels + perm.order[c]] = activations[s * channels + c];
    return out;
}

double coverage(std::span<const double> activations, std::size_t samples,
                std::size_t channels, const QuantConfig& cfg, Variant variant,
                const std::optional<Permutation>& perm) {
    cfg.validate();
    if (activations.size() != samples * channels)
        throw std::invalid_argument("coverage: shape mismatch");

    std::vector<double> permuted;
    std::span<const double> data = activations;
    if (perm) {
        permuted = apply_permutation(activations, samples, channels, *perm);
        data = permuted;
    }

    std::int64_t outliers = 0, covered = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        auto row = data.subspan(s * channels, channels);
        EncodedVector enc = encode(row, cfg, variant);
        auto roles = parse_flags(enc.flags);
        for (std::size_t c = 0; c < channels; ++c) {
            if (std::fabs(row[c]) > cfg.clip_scale) {
                ++outliers;
                if (roles[c] == SlotRole::PairLeft) ++covered;
            }
        }
    }
    if (outliers == 0) return 1.0;
    return static_cast<double>(covered) / static_cast<double>(outliers);
}

}  // namespace overq
