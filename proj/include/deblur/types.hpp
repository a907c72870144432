#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "deblur/error.hpp"

namespace deblur {

/// Real raster in row-major order: pixel (i1, i2) sits at row i1, column i2 and
/// vectorizes to index i1 * n2 + i2 ("top-left to bottom-right").
using Image = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Column-major dense matrix for oracles and factor decompositions.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Size2 {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;

    Eigen::Index count() const { return rows * cols; }
    friend bool operator==(const Size2&, const Size2&) = default;
};

inline Size2 size_of(const Image& img) { return {img.rows(), img.cols()}; }

inline std::string to_string(Size2 s) {
    return std::to_string(s.rows) + "x" + std::to_string(s.cols);
}

/// Three channels in RGB order sharing one size.
struct ColorImage {
    std::array<Image, 3> channels;

    Size2 size() const { return size_of(channels[0]); }

    static ColorImage zeros(Size2 s) {
        ColorImage out;
        for (auto& c : out.channels) c = Image::Zero(s.rows, s.cols);
        return out;
    }

    void check_consistent() const {
        const Size2 s = size();
        for (const auto& c : channels)
            detail::require(size_of(c) == s, Errc::invalid_size, "color channels differ in size");
    }
};

namespace detail {

/// Pairwise (cascade) summation; keeps rounding growth at O(log n).
inline double pairwise_sum(std::span<const double> xs) {
    constexpr std::size_t block = 32;
    if (xs.size() <= block) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

inline double sum_of_squares(std::span<const double> xs) {
    constexpr std::size_t block = 32;
    if (xs.size() <= block) {
        double s = 0.0;
        for (double x : xs) s += x * x;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return sum_of_squares(xs.first(half)) + sum_of_squares(xs.subspan(half));
}

inline std::span<const double> as_span(const Image& img) {
    return {img.data(), static_cast<std::size_t>(img.size())};
}

} // namespace detail

/// Frobenius norm of an image with pairwise summation.
inline double norm2(const Image& img) {
    return std::sqrt(detail::sum_of_squares(detail::as_span(img)));
}

inline double norm2(const ColorImage& img) {
    double s = 0.0;
    for (const auto& c : img.channels) s += detail::sum_of_squares(detail::as_span(c));
    return std::sqrt(s);
}

/// Row-major vectorization.
inline Vector vectorize(const Image& img) {
    return Eigen::Map<const Vector>(img.data(), img.size());
}

inline Image unvectorize(const Vector& v, Size2 s) {
    detail::require(v.size() == s.count(), Errc::invalid_size, "vector length does not match image size");
    return Eigen::Map<const Image>(v.data(), s.rows, s.cols);
}

} // namespace deblur
