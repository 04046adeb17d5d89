#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace chemotw {

/// Uniform 1-D sample grid x(i) = x_min + i*dx, i = 0..n-1.
class UniformGrid {
public:
    UniformGrid() = default;

    UniformGrid(double x_min, double dx, std::size_t n) : x_min_(x_min), dx_(dx), n_(n) {
        if (!(dx > 0.0) || !std::isfinite(dx)) {
            throw std::invalid_argument("UniformGrid: dx must be positive and finite");
        }
        if (n < 2) {
            throw std::invalid_argument("UniformGrid: need at least 2 samples");
        }
        if (!std::isfinite(x_min)) {
            throw std::invalid_argument("UniformGrid: x_min must be finite");
        }
    }

    /// Grid covering [a, b] with spacing no larger than max_dx. The end points are nodes.
    static UniformGrid covering(double a, double b, double max_dx) {
        if (!(b > a)) throw std::invalid_argument("UniformGrid::covering: need a < b");
        if (!(max_dx > 0.0)) throw std::invalid_argument("UniformGrid::covering: max_dx must be positive");
        auto cells = static_cast<std::size_t>(std::ceil((b - a) / max_dx - 1e-9));
        cells = std::max<std::size_t>(cells, 1);
        return UniformGrid(a, (b - a) / static_cast<double>(cells), cells + 1);
    }

    /// Symmetric grid on [-half, half] with an even number of cells, so x = 0 is a node.
    static UniformGrid symmetric(double half, double max_dx) {
        if (!(half > 0.0)) throw std::invalid_argument("UniformGrid::symmetric: half-length must be positive");
        auto cells = static_cast<std::size_t>(std::ceil(2.0 * half / max_dx - 1e-9));
        cells += cells % 2;
        cells = std::max<std::size_t>(cells, 2);
        return UniformGrid(-half, 2.0 * half / static_cast<double>(cells), cells + 1);
    }

    double x_min() const { return x_min_; }
    double x_max() const { return x_min_ + dx_ * static_cast<double>(n_ - 1); }
    double dx() const { return dx_; }
    std::size_t size() const { return n_; }
    double x(std::size_t i) const { return x_min_ + dx_ * static_cast<double>(i); }

    /// Index of the node nearest to x (clamped to the grid).
    std::size_t nearest(double x) const {
        const double s = std::round((x - x_min_) / dx_);
        if (s <= 0.0) return 0;
        if (s >= static_cast<double>(n_ - 1)) return n_ - 1;
        return static_cast<std::size_t>(s);
    }

    bool contains(double x) const { return x >= x_min_ - 1e-12 * dx_ && x <= x_max() + 1e-12 * dx_; }

    std::vector<double> nodes() const {
        std::vector<double> out(n_);
        for (std::size_t i = 0; i < n_; ++i) out[i] = x(i);
        return out;
    }

    friend bool operator==(const UniformGrid&, const UniformGrid&) = default;

private:
    double x_min_ = 0.0;
    double dx_ = 1.0;
    std::size_t n_ = 2;
};

/// Real samples on a UniformGrid.
class Field {
public:
    Field() = default;

    explicit Field(UniformGrid grid, double fill = 0.0) : grid_(grid), values_(grid.size(), fill) {}

    Field(UniformGrid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.size()) {
            throw std::invalid_argument("Field: value count " + std::to_string(values_.size()) +
                                        " does not match grid size " + std::to_string(grid_.size()));
        }
        for (double v : values_) {
            if (!std::isfinite(v)) throw std::invalid_argument("Field: non-finite sample");
        }
    }

    template <class F>
    static Field sample(UniformGrid grid, F&& f) {
        std::vector<double> vals(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = f(grid.x(i));
        return Field(grid, std::move(vals));
    }

    const UniformGrid& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    double x(std::size_t i) const { return grid_.x(i); }
    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }
    const std::vector<double>& data() const { return values_; }

    double front() const { return values_.front(); }
    double back() const { return values_.back(); }

    /// Linear interpolation; outside the grid the end values are held.
    double at(double x) const {
        const double s = (x - grid_.x_min()) / grid_.dx();
        if (s <= 0.0) return values_.front();
        const auto last = static_cast<double>(values_.size() - 1);
        if (s >= last) return values_.back();
        const auto i = static_cast<std::size_t>(s);
        const double t = s - static_cast<double>(i);
        return (1.0 - t) * values_[i] + t * values_[i + 1];
    }

    /// Resample onto another grid by linear interpolation, holding `left`/`right` outside.
    Field resampled(const UniformGrid& target, double left, double right) const {
        return Field::sample(target, [&](double x) {
            if (x < grid_.x_min()) return left;
            if (x > grid_.x_max()) return right;
            return at(x);
        });
    }

    double max() const { return *std::max_element(values_.begin(), values_.end()); }
    double min() const { return *std::min_element(values_.begin(), values_.end()); }

private:
    UniformGrid grid_;
    std::vector<double> values_ = std::vector<double>(2, 0.0);
};

/// Sup-norm distance of two fields over a window, comparing at the nodes of `a`.
inline double sup_distance(const Field& a, const Field& b, double lo, double hi) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a.x(i);
        if (x < lo || x > hi) continue;
        d = std::max(d, std::abs(a[i] - b.at(x)));
    }
    return d;
}

/// Composite trapezoid rule over the whole grid.
inline double trapezoid(const UniformGrid& g, std::span<const double> f) {
    if (f.size() != g.size()) throw std::invalid_argument("trapezoid: size mismatch");
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
    return s * g.dx();
}

}  // namespace chemotw
