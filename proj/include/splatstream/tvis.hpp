#pragma once

#include "splatstream/core.hpp"
#include "splatstream/parallel.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace splatstream {

/// Flat, index-stable view over Gaussians that may live in several containers.
class GaussianTable {
public:
    GaussianTable() = default;
    explicit GaussianTable(std::span<Gaussian3D> gaussians);
    explicit GaussianTable(std::vector<Gaussian3D*> entries) : entries_(std::move(entries)) {}

    std::size_t size() const { return entries_.size(); }
    Gaussian3D& operator[](std::size_t i) const { return *entries_[i]; }

private:
    std::vector<Gaussian3D*> entries_;
};

/// Indices i (ascending) with v_s <= t <= v_e. Serial scan; the reference for TemporalIndex.
std::vector<std::uint32_t> filter_visible(const GaussianTable& gaussians, double t);

/// Point-life update for the Gaussians presented at time t. `presented` are the indices that
/// were projected (filter_visible output) and `mask` is aligned with them.
void update_point_life(const GaussianTable& gaussians, std::span<const std::uint32_t> presented,
                       std::span<const std::uint8_t> mask, double t);
/// Same, with every Gaussian presented.
void update_point_life(const GaussianTable& gaussians, std::span<const std::uint8_t> mask, double t);

inline constexpr float kVisibilityMargin = 0.1f;

/// v <- clamp(l +- 0.1); unobserved Gaussians become visible everywhere; life resets afterwards.
void commit_visibility(const GaussianTable& gaussians);
void reset_visibility(const GaussianTable& gaussians);

/// Counts commits and resets visibility every `reset_period` of them.
class VisibilitySchedule {
public:
    explicit VisibilitySchedule(int reset_period = 30) : reset_period_(reset_period) {}

    /// Commits life to visibility; returns true when this commit also triggered a reset.
    bool commit(const GaussianTable& gaussians);
    int commits() const { return commits_; }
    int reset_period() const { return reset_period_; }

private:
    int reset_period_;
    int commits_ = 0;
};

/// Bucketed interval index over visibility. Intervals narrower than a quarter of the time
/// domain are stored per time bucket; wider ones are scanned. Query cost tracks the
/// number of candidates around t rather than the table size.
class TemporalIndex {
public:
    TemporalIndex() = default;
    explicit TemporalIndex(const GaussianTable& gaussians, std::size_t bucket_count = 256);

    /// Same contract as filter_visible.
    std::vector<std::uint32_t> query(double t) const;

    std::size_t size() const { return starts_.size(); }
    std::size_t wide_count() const { return wide_.size(); }

private:
    std::size_t bucket_of(double t) const;

    std::vector<float> starts_;
    std::vector<float> ends_;
    std::size_t bucket_count_ = 0;
    std::vector<std::uint32_t> bucket_offsets_;
    std::vector<std::uint32_t> bucket_entries_;
    std::vector<std::uint32_t> wide_;
};

}  // namespace splatstream
