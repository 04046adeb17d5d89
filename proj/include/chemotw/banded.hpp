#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace chemotw {

/// Square banded matrix with kl sub- and ku super-diagonals, factorized in place by
/// Gaussian elimination with partial pivoting. Each row keeps kl extra slots on the right
/// for the fill-in that row exchanges produce.
class BandMatrix {
public:
    BandMatrix(std::size_t n, std::size_t kl, std::size_t ku)
        : n_(n), kl_(kl), ku_(ku), w_(2 * kl + ku + 1), a_(n * w_, 0.0), piv_(n, 0) {}

    std::size_t size() const { return n_; }

    void clear() {
        std::fill(a_.begin(), a_.end(), 0.0);
        factored_ = false;
    }

    /// Adds to entry (i, j); j must lie within the original band.
    void add(std::size_t i, std::size_t j, double v) {
        if (j + kl_ < i || j > i + ku_) throw std::out_of_range("BandMatrix: entry outside band");
        ref(i, j) += v;
    }

    double get(std::size_t i, std::size_t j) const {
        if (j + kl_ < i || j > i + ku_ + kl_) return 0.0;
        return a_[i * w_ + (j + kl_ - i)];
    }

    /// y = A x (only valid before factorization).
    std::vector<double> multiply(const std::vector<double>& x) const {
        std::vector<double> y(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t j0 = i >= kl_ ? i - kl_ : 0;
            const std::size_t j1 = std::min(n_ - 1, i + ku_);
            for (std::size_t j = j0; j <= j1; ++j) y[i] += get(i, j) * x[j];
        }
        return y;
    }

    void factorize() {
        for (std::size_t k = 0; k < n_; ++k) {
            const std::size_t last = std::min(n_ - 1, k + kl_);
            std::size_t p = k;
            double best = std::abs(ref(k, k));
            for (std::size_t i = k + 1; i <= last; ++i) {
                if (std::abs(ref(i, k)) > best) {
                    best = std::abs(ref(i, k));
                    p = i;
                }
            }
            if (best == 0.0 || !std::isfinite(best)) throw std::runtime_error("BandMatrix: singular matrix");
            piv_[k] = p;
            const std::size_t jend = std::min(n_ - 1, k + ku_ + kl_);
            if (p != k) {
                for (std::size_t j = k; j <= jend; ++j) std::swap(ref(k, j), ref(p, j));
            }
            const double d = ref(k, k);
            for (std::size_t i = k + 1; i <= last; ++i) {
                const double l = ref(i, k) / d;
                ref(i, k) = l;
                if (l == 0.0) continue;
                for (std::size_t j = k + 1; j <= jend; ++j) ref(i, j) -= l * ref(k, j);
            }
        }
        factored_ = true;
    }

    /// Solves A x = b in place using the factorization.
    void solve(std::vector<double>& b) const {
        if (!factored_) throw std::logic_error("BandMatrix: solve before factorize");
        for (std::size_t k = 0; k < n_; ++k) {
            if (piv_[k] != k) std::swap(b[k], b[piv_[k]]);
            const std::size_t last = std::min(n_ - 1, k + kl_);
            for (std::size_t i = k + 1; i <= last; ++i) b[i] -= cref(i, k) * b[k];
        }
        for (std::size_t k = n_; k-- > 0;) {
            const std::size_t jend = std::min(n_ - 1, k + ku_ + kl_);
            double s = b[k];
            for (std::size_t j = k + 1; j <= jend; ++j) s -= cref(k, j) * b[j];
            b[k] = s / cref(k, k);
        }
    }

private:
    double& ref(std::size_t i, std::size_t j) { return a_[i * w_ + (j + kl_ - i)]; }
    double cref(std::size_t i, std::size_t j) const { return a_[i * w_ + (j + kl_ - i)]; }

    std::size_t n_, kl_, ku_, w_;
    std::vector<double> a_;
    std::vector<std::size_t> piv_;
    bool factored_ = false;
};

/// Tridiagonal solve (no pivoting); lower[0] and upper[n-1] are ignored.
inline std::vector<double> solve_tridiagonal(std::vector<double> lower, std::vector<double> diag,
                                             std::vector<double> upper, std::vector<double> rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        if (diag[i - 1] == 0.0) throw std::runtime_error("solve_tridiagonal: zero pivot");
        const double m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    if (diag[n - 1] == 0.0) throw std::runtime_error("solve_tridiagonal: zero pivot");
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
    return rhs;
}

}  // namespace chemotw
