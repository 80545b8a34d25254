#pragma once

// Symmetric positive-definite matrices in profile (skyline) storage:
// row i keeps columns first(i)..i. first() is forced nondecreasing, so the
// Cholesky factor and the selected inverse live in the same profile.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace bql {

class SymProfileMatrix {
public:
    SymProfileMatrix() = default;
    /// `first[i]` is the leftmost stored column of row i (clamped to [0, i]
    /// and replaced by its suffix minimum).
    explicit SymProfileMatrix(std::vector<int> first);

    int size() const { return shape_ ? static_cast<int>(shape_->first.size()) : 0; }
    int first(int i) const { return shape_->first[static_cast<std::size_t>(i)]; }
    /// Largest row index k with first(k) <= j.
    int last(int j) const { return shape_->last[static_cast<std::size_t>(j)]; }
    std::size_t stored() const { return data_.size(); }
    int max_width() const;

    void set_zero();

    /// Entry (i, j) with first(i) <= j <= i.
    double& at(int i, int j) { return data_[offset(i, j)]; }
    double at(int i, int j) const { return data_[offset(i, j)]; }
    /// Contiguous row slice columns first(i)..i.
    const double* row(int i) const { return data_.data() + shape_->ptr[static_cast<std::size_t>(i)]; }

    /// Symmetric read; zero outside the profile.
    double operator()(int i, int j) const;

    double trace() const;

private:
    // Copies share the sparsity structure and own their values.
    struct Shape {
        std::vector<int> first;
        std::vector<int> last;
        std::vector<std::size_t> ptr;
    };

    std::size_t offset(int i, int j) const {
        return shape_->ptr[static_cast<std::size_t>(i)] + static_cast<std::size_t>(j - first(i));
    }

    std::shared_ptr<const Shape> shape_;
    std::vector<double> data_;
};

/// In-place Cholesky S = L L^T. Returns false if a pivot is not positive.
bool profile_cholesky(SymProfileMatrix& a);

/// Solves L y = b in place.
void profile_forward(const SymProfileMatrix& l, std::span<double> b);

/// Solves L^T x = y in place.
void profile_backward(const SymProfileMatrix& l, std::span<double> y);

/// log det S = 2 sum log L_ii.
double profile_logdet(const SymProfileMatrix& l);

/// Entries of S^{-1} inside the profile, from the Cholesky factor.
SymProfileMatrix profile_selected_inverse(const SymProfileMatrix& l);

}  // namespace bql
