#include "tristage/matrix.hpp"

#include "tristage/error.hpp"

#include <algorithm>

namespace tristage {

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
        throw Error(ErrorKind::Validation, "feature matrix: value count does not match shape");
    }
}

FeatureMatrix FeatureMatrix::with_column(std::span<const double> column) const {
    if (column.size() != rows_) {
        throw Error(ErrorKind::Validation, "feature matrix: appended column has wrong length");
    }
    FeatureMatrix out(rows_, cols_ + 1);
    for (std::size_t r = 0; r < rows_; ++r) {
        std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(r * cols_), cols_,
                    out.values_.begin() + static_cast<std::ptrdiff_t>(r * out.cols_));
        out(r, cols_) = column[r];
    }
    return out;
}

FeatureMatrix FeatureMatrix::slice_rows(std::size_t first, std::size_t count) const {
    if (first + count > rows_) {
        throw Error(ErrorKind::Validation, "feature matrix: row slice out of range");
    }
    auto begin = values_.begin() + static_cast<std::ptrdiff_t>(first * cols_);
    return FeatureMatrix(count, cols_,
                         std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(count * cols_)));
}

} // namespace tristage
