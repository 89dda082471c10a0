#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace qnd {

// Histogram with uniform bins and additive smoothing. Values outside the
// binned range are clamped into the nearest edge bin, so any real query
// lands in a bin and (with pseudo_count > 0) has strictly positive
// probability.
class EmpiricalDistribution {
  public:
    EmpiricalDistribution() = default;

    EmpiricalDistribution(double lo, double hi, std::size_t n_bins, double pseudo_count)
        : lo_(lo), hi_(hi), counts_(n_bins, 0), pseudo_(pseudo_count) {
        if (n_bins == 0) throw std::invalid_argument("histogram: n_bins must be > 0");
        if (!(hi > lo)) throw std::invalid_argument("histogram: hi must exceed lo");
        if (pseudo_count < 0.0) throw std::invalid_argument("histogram: pseudo_count < 0");
    }

    void add(double value) {
        ++counts_[bin_index(value)];
        ++total_;
    }

    void add_all(std::span<const double> values) {
        for (double v : values) add(v);
    }

    std::size_t bin_index(double value) const {
        if (value <= lo_) return 0;
        if (value >= hi_) return counts_.size() - 1;
        auto idx = static_cast<std::size_t>((value - lo_) / (hi_ - lo_) * counts_.size());
        return std::min(idx, counts_.size() - 1);
    }

    // Smoothed probability of the bin containing `value`.
    double probability(double value) const { return bin_probability(bin_index(value)); }

    double bin_probability(std::size_t i) const {
        const double denom = static_cast<double>(total_) + pseudo_ * counts_.size();
        return (static_cast<double>(counts_[i]) + pseudo_) / denom;
    }

    // Unsmoothed empirical frequency of bin i.
    double bin_frequency(std::size_t i) const {
        return total_ == 0 ? 0.0 : static_cast<double>(counts_[i]) / static_cast<double>(total_);
    }

    std::size_t n_bins() const { return counts_.size(); }
    std::uint64_t total() const { return total_; }
    double pseudo_count() const { return pseudo_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    const std::vector<std::uint64_t>& counts() const { return counts_; }

    double bin_width() const { return (hi_ - lo_) / static_cast<double>(counts_.size()); }
    double bin_center(std::size_t i) const { return lo_ + (static_cast<double>(i) + 0.5) * bin_width(); }

    std::vector<double> bin_edges() const {
        std::vector<double> edges(counts_.size() + 1);
        for (std::size_t i = 0; i <= counts_.size(); ++i)
            edges[i] = lo_ + static_cast<double>(i) * bin_width();
        return edges;
    }

    bool same_edges(const EmpiricalDistribution& other) const {
        return lo_ == other.lo_ && hi_ == other.hi_ && counts_.size() == other.counts_.size();
    }

    void set_counts(std::vector<std::uint64_t> counts) {
        counts_ = std::move(counts);
        total_ = 0;
        for (auto c : counts_) total_ += c;
    }

  private:
    double lo_ = 0.0;
    double hi_ = 1.0;
    std::vector<std::uint64_t> counts_;
    double pseudo_ = 0.0;
    std::uint64_t total_ = 0;
};

}  // namespace qnd
