#pragma once

// Flat row-major storage for lists of points that all share one dimension.
// Hot loops (dot clouds, estimation nodes) stay allocation-free this way.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace rarering {

class PointBlock {
public:
    PointBlock() = default;
    explicit PointBlock(int dim) : dim_(dim) {
        if (dim < 1) throw std::invalid_argument("PointBlock: need dim >= 1");
    }

    int dim() const { return dim_; }
    std::size_t size() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
    bool empty() const { return data_.empty(); }

    void reserve(std::size_t n) { data_.reserve(n * dim_); }
    void clear() { data_.clear(); }

    void push_back(std::span<const double> p) {
        if (static_cast<int>(p.size()) != dim_)
            throw std::invalid_argument("PointBlock: dimension mismatch");
        data_.insert(data_.end(), p.begin(), p.end());
    }

    // Appends an uninitialized row and returns a pointer to fill it.
    double* append_row() {
        data_.resize(data_.size() + dim_);
        return data_.data() + data_.size() - dim_;
    }

    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * dim_, static_cast<std::size_t>(dim_)};
    }
    const double* row_ptr(std::size_t i) const { return data_.data() + i * dim_; }
    double* row_ptr(std::size_t i) { return data_.data() + i * dim_; }

    double norm(std::size_t i) const {
        const double* p = row_ptr(i);
        double s = 0.0;
        for (int k = 0; k < dim_; ++k) s += p[k] * p[k];
        return std::sqrt(s);
    }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

private:
    int dim_ = 0;
    std::vector<double> data_;
};

inline double squared_distance(const double* a, const double* b, int dim) {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) {
        double d = a[k] - b[k];
        s += d * d;
    }
    return s;
}

} // namespace rarering
