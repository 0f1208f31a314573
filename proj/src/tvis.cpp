#include "splatstream/tvis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace splatstream {

GaussianTable::GaussianTable(std::span<Gaussian3D> gaussians) {
    entries_.reserve(gaussians.size());
    for (Gaussian3D& g : gaussians) {
        entries_.push_back(&g);
    }
}

std::vector<std::uint32_t> filter_visible(const GaussianTable& gaussians, double t) {
    std::vector<std::uint32_t> out;
    for (std::size_t i = 0; i < gaussians.size(); ++i) {
        if (gaussians[i].visibility.contains(t)) {
            out.push_back(static_cast<std::uint32_t>(i));
        }
    }
    return out;
}

namespace {

inline void observe(TimeInterval& life, double t) {
    const float tf = static_cast<float>(t);
    life.start = std::min(life.start, tf);
    life.end = std::max(life.end, tf);
}

}  // namespace

void update_point_life(const GaussianTable& gaussians, std::span<const std::uint32_t> presented,
                       std::span<const std::uint8_t> mask, double t) {
    if (presented.size() != mask.size()) {
        throw std::invalid_argument("update_point_life: mask has " + std::to_string(mask.size()) +
                                    " entries for " + std::to_string(presented.size()) + " presented Gaussians");
    }
    for (std::size_t k = 0; k < presented.size(); ++k) {
        if (mask[k]) {
            observe(gaussians[presented[k]].life, t);
        }
    }
}

void update_point_life(const GaussianTable& gaussians, std::span<const std::uint8_t> mask, double t) {
    if (mask.size() != gaussians.size()) {
        throw std::invalid_argument("update_point_life: mask length does not match the Gaussian count");
    }
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) {
            observe(gaussians[i].life, t);
        }
    }
}

void commit_visibility(const GaussianTable& gaussians) {
    for (std::size_t i = 0; i < gaussians.size(); ++i) {
        Gaussian3D& g = gaussians[i];
        if (g.life.start > g.life.end) {
            g.visibility = kAlwaysVisible;
        } else {
            g.visibility.start = std::max(-1.0f, g.life.start - kVisibilityMargin);
            g.visibility.end = std::min(1.0f, g.life.end + kVisibilityMargin);
        }
        g.life = kEmptyLife;
    }
}

void reset_visibility(const GaussianTable& gaussians) {
    for (std::size_t i = 0; i < gaussians.size(); ++i) {
        gaussians[i].visibility = kAlwaysVisible;
    }
}

bool VisibilitySchedule::commit(const GaussianTable& gaussians) {
    commit_visibility(gaussians);
    ++commits_;
    if (reset_period_ > 0 && commits_ % reset_period_ == 0) {
        reset_visibility(gaussians);
        return true;
    }
    return false;
}

TemporalIndex::TemporalIndex(const GaussianTable& gaussians, std::size_t bucket_count)
    : bucket_count_(std::max<std::size_t>(bucket_count, 1)) {
    const std::size_t n = gaussians.size();
    starts_.resize(n);
    ends_.resize(n);
    std::vector<std::uint32_t> counts(bucket_count_ + 1, 0);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> ranges(n);
    const std::size_t wide_span = std::max<std::size_t>(bucket_count_ / 4, 1);
    for (std::size_t i = 0; i < n; ++i) {
        const TimeInterval v = gaussians[i].visibility;
        starts_[i] = v.start;
        ends_[i] = v.end;
        if (v.start > v.end || v.start > 1.0f || v.end < -1.0f) {
            ranges[i] = {1, 0};  // can never match a t in [-1, 1]
            continue;
        }
        const auto lo = static_cast<std::uint32_t>(bucket_of(v.start));
        const auto hi = static_cast<std::uint32_t>(bucket_of(v.end));
        if (hi - lo + 1 > wide_span) {
            wide_.push_back(static_cast<std::uint32_t>(i));
            ranges[i] = {1, 0};
            continue;
        }
        ranges[i] = {lo, hi};
        for (std::uint32_t b = lo; b <= hi; ++b) {
            ++counts[b + 1];
        }
    }
    for (std::size_t b = 0; b < bucket_count_; ++b) {
        counts[b + 1] += counts[b];
    }
    bucket_offsets_ = counts;
    bucket_entries_.resize(counts.back());
    std::vector<std::uint32_t> cursor(counts.begin(), counts.end() - 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::uint32_t b = ranges[i].first; b <= ranges[i].second && ranges[i].first <= ranges[i].second; ++b) {
            bucket_entries_[cursor[b]++] = static_cast<std::uint32_t>(i);
        }
    }
}

std::size_t TemporalIndex::bucket_of(double t) const {
    const double u = std::floor(0.5 * (t + 1.0) * double(bucket_count_));
    return static_cast<std::size_t>(std::clamp(u, 0.0, double(bucket_count_ - 1)));
}

std::vector<std::uint32_t> TemporalIndex::query(double t) const {
    std::vector<std::uint32_t> out;
    if (bucket_count_ == 0) {
        return out;
    }
    const std::size_t b = bucket_of(t);
    const auto* first = bucket_entries_.data() + bucket_offsets_[b];
    const auto* last = bucket_entries_.data() + bucket_offsets_[b + 1];
    auto wide = wide_.begin();
    out.reserve(static_cast<std::size_t>(last - first) + wide_.size());
    auto hit = [&](std::uint32_t i) { return double(starts_[i]) <= t && t <= double(ends_[i]); };
    // Both lists are ascending; merge them.
    while (first != last || wide != wide_.end()) {
        std::uint32_t i;
        if (wide == wide_.end() || (first != last && *first < *wide)) {
            i = *first++;
        } else {
            i = *wide++;
        }
        if (hit(i)) {
            out.push_back(i);
        }
    }
    return out;
}

}  // namespace splatstream
