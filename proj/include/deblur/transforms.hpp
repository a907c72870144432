#pragma once

// Fast 1D and two-level trigonometric transforms:
//   R_m   orthogonal DCT-III, R[s,t] = sqrt((2 - delta_{t,1})/m) cos((t-1)(s-1/2) pi/m)
//   Q_m   symmetric orthogonal DST-I, Q[s,t] = sqrt(2/(m+1)) sin(s t pi/(m+1))
//   T_m   non-orthogonal anti-reflective transform and its inverse T~_m,
//         built from Q_{m-2}, the ramp p_j = 1 - j/(m-1) and alpha = sqrt(1 + |p|^2).
// The 1D kernels run through FFTW real-to-real plans; every other piece of
// arithmetic (scaling, ramp corrections, two-level sweeps) lives here.
// DST-I lengths whose period 2(n+1) has a large prime factor are routed
// through a chirp-z convolution on power-of-two complex plans instead.

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "deblur/error.hpp"
#include "deblur/types.hpp"

namespace deblur {

enum class Transform {
    dct3,            ///< y = R_m x
    dct3_transposed, ///< y = R_m^T x
    dst1,            ///< y = Q_m x (Q_m = Q_m^T = Q_m^{-1})
    ar_forward,      ///< y = T_m x
    ar_inverse,      ///< y = T~_m x = T_m^{-1} x
};

inline Eigen::Index min_length(Transform t) {
    return (t == Transform::ar_forward || t == Transform::ar_inverse) ? 3 : 1;
}

inline void check_length(Transform t, Eigen::Index m) {
    detail::require(m >= min_length(t), Errc::invalid_size,
                    "transform length " + std::to_string(m) + " below minimum " + std::to_string(min_length(t)));
}

/// Ramp vector of the anti-reflective transform.
struct ArRamp {
    Vector p;     ///< p_j = 1 - j/(m-1), j = 1..m-2
    double alpha; ///< sqrt(1 + |p|^2), so first/last columns of T_m have unit norm

    static ArRamp make(Eigen::Index m) {
        check_length(Transform::ar_forward, m);
        ArRamp r;
        r.p.resize(m - 2);
        long double sq = 0.0L;
        for (Eigen::Index j = 1; j <= m - 2; ++j) {
            const long double pj = 1.0L - static_cast<long double>(j) / static_cast<long double>(m - 1);
            r.p[j - 1] = static_cast<double>(pj);
            sq += pj * pj;
        }
        r.alpha = static_cast<double>(std::sqrt(1.0L + sq));
        return r;
    }

    double norm() const { return std::sqrt(alpha * alpha - 1.0); }
};

namespace detail {

struct FftwFree {
    void operator()(double* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<double[], FftwFree>;

inline FftwBuffer fftw_buffer(std::size_t n) {
    auto* p = static_cast<double*>(fftw_malloc(sizeof(double) * (n == 0 ? 1 : n)));
    if (p == nullptr) throw std::bad_alloc();
    return FftwBuffer(p);
}

using Complex = std::complex<double>;

inline long largest_prime_factor(long n) {
    long best = 1;
    for (long f = 2; f * f <= n; ++f)
        while (n % f == 0) {
            best = f;
            n /= f;
        }
    return n > 1 ? n : best;
}

/// Past this prime factor FFTW's generic passes cost more than the chirp-z
/// route (measured crossover: 1022 stays direct, 2046 does not).
inline constexpr long chirp_prime_threshold = 32;

inline bool dst1_uses_chirp(std::size_t n) {
    return largest_prime_factor(static_cast<long>(n) + 1) > chirp_prime_threshold;
}

/// Unnormalized DST-I (the RODFT00 convention y_k = 2 sum_j x_j sin(pi (j+1)(k+1)/(n+1)))
/// through a complex DFT of length N = n + 1 computed by Bluestein's chirp-z
/// identity jk = (j^2 + k^2 - (k-j)^2) / 2 on power-of-two FFTs.
class ChirpDst1 {
public:
    /// Must be constructed under the planner lock.
    explicit ChirpDst1(std::size_t n) : n_(n), big_n_(n + 1) {
        m_ = 1;
        while (m_ < 2 * big_n_ - 1) m_ *= 2;
        chirp_.resize(big_n_);
        const long two_n = 2 * static_cast<long>(big_n_);
        for (std::size_t t = 0; t < big_n_; ++t) {
            const long r = static_cast<long>((static_cast<unsigned long long>(t) * t) % static_cast<unsigned long long>(two_n));
            chirp_[t] = std::polar(1.0, std::numbers::pi * static_cast<double>(r) / static_cast<double>(big_n_));
        }
        twiddle_.resize(big_n_);
        for (std::size_t k = 0; k < big_n_; ++k)
            twiddle_[k] = std::polar(1.0, -std::numbers::pi * static_cast<double>(k) / static_cast<double>(big_n_));

        buf_a_ = alloc(m_);
        buf_b_ = alloc(m_);
        auto* a = reinterpret_cast<fftw_complex*>(buf_a_.get());
        auto* b = reinterpret_cast<fftw_complex*>(buf_b_.get());
        const int mi = static_cast<int>(m_);
        forward_ = fftw_plan_dft_1d(mi, a, b, FFTW_FORWARD, FFTW_ESTIMATE);
        backward_ = fftw_plan_dft_1d(mi, a, b, FFTW_BACKWARD, FFTW_ESTIMATE);
        if (forward_ == nullptr || backward_ == nullptr)
            throw Error(Errc::unsupported, "FFTW could not plan length " + std::to_string(m_));

        // kernel b_t = c_t on the wrapped support -(N-1)..(N-1)
        Complex* in = buf_a_.get();
        std::fill(in, in + m_, Complex{});
        for (std::size_t t = 0; t < big_n_; ++t) {
            in[t] = chirp_[t];
            if (t > 0) in[m_ - t] = chirp_[t];
        }
        fftw_execute_dft(forward_, a, b);
        kernel_.assign(buf_b_.get(), buf_b_.get() + m_);
    }

    ChirpDst1(const ChirpDst1&) = delete;
    ChirpDst1& operator=(const ChirpDst1&) = delete;

    ~ChirpDst1() {
        if (forward_ != nullptr) fftw_destroy_plan(forward_);
        if (backward_ != nullptr) fftw_destroy_plan(backward_);
    }

    /// In place on x (length n).
    void run(std::span<double> x) const {
        auto& s = scratch(m_);
        double* a = reinterpret_cast<double*>(s.a.get());
        double* b = reinterpret_cast<double*>(s.b.get());
        const double* c = reinterpret_cast<const double*>(chirp_.data());
        const double* kern = reinterpret_cast<const double*>(kernel_.data());
        const double* tw = reinterpret_cast<const double*>(twiddle_.data());
        const std::size_t n = n_, big = big_n_;

        // odd extension z (length 2N) packed as w_j = z_2j + i z_2j+1, times conj(c_j)
        auto z = [&](std::size_t j) -> double {
            if (j == 0 || j == big) return 0.0;
            return j < big ? x[j - 1] : -x[2 * big - j - 1];
        };
        for (std::size_t j = 0; j < big; ++j) {
            const double re = z(2 * j), im = z(2 * j + 1);
            const double cr = c[2 * j], ci = c[2 * j + 1];
            a[2 * j] = re * cr + im * ci;
            a[2 * j + 1] = im * cr - re * ci;
        }
        std::fill(a + 2 * big, a + 2 * m_, 0.0);
        fftw_execute_dft(forward_, reinterpret_cast<fftw_complex*>(a), reinterpret_cast<fftw_complex*>(b));
        for (std::size_t t = 0; t < m_; ++t) {
            const double br = b[2 * t], bi = b[2 * t + 1];
            const double kr = kern[2 * t], ki = kern[2 * t + 1];
            b[2 * t] = br * kr - bi * ki;
            b[2 * t + 1] = br * ki + bi * kr;
        }
        fftw_execute_dft(backward_, reinterpret_cast<fftw_complex*>(b), reinterpret_cast<fftw_complex*>(a));
        // W_k = conj(c_k) (conv)_k / M
        const double inv_m = 1.0 / static_cast<double>(m_);
        for (std::size_t k = 0; k < big; ++k) {
            const double ar = a[2 * k], ai = a[2 * k + 1];
            const double cr = c[2 * k], ci = c[2 * k + 1];
            a[2 * k] = (ar * cr + ai * ci) * inv_m;
            a[2 * k + 1] = (ai * cr - ar * ci) * inv_m;
        }
        // split W into the length-2N DFT Z; y_(k-1) = -Im Z_k with
        // Z_k = E_k + e^(-i pi k/N) O_k, E = (W_k + conj W_(N-k))/2, O = (W_k - conj W_(N-k))/(2i)
        for (std::size_t k = 1; k <= n; ++k) {
            const double wr = a[2 * k], wi = a[2 * k + 1];
            const double vr = a[2 * (big - k)], vi = -a[2 * (big - k) + 1];
            const double ei = 0.5 * (wi + vi);
            const double or_ = 0.5 * (wi - vi), oi = -0.5 * (wr - vr);
            x[k - 1] = -(ei + tw[2 * k] * oi + tw[2 * k + 1] * or_);
        }
    }

private:
    struct Free {
        void operator()(Complex* p) const { fftw_free(p); }
    };
    using Buffer = std::unique_ptr<Complex[], Free>;

    static Buffer alloc(std::size_t n) {
        auto* p = static_cast<Complex*>(fftw_malloc(sizeof(Complex) * n));
        if (p == nullptr) throw std::bad_alloc();
        return Buffer(p);
    }

    struct Scratch {
        Buffer a, b;
        std::size_t capacity = 0;
    };

    static Scratch& scratch(std::size_t m) {
        thread_local Scratch s;
        if (s.capacity < m) {
            s.a = alloc(m);
            s.b = alloc(m);
            s.capacity = m;
        }
        return s;
    }

    std::size_t n_, big_n_, m_ = 1;
    std::vector<Complex> chirp_, twiddle_, kernel_;
    Buffer buf_a_, buf_b_;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

/// Process-wide cache of out-of-place r2r plans. Planning is serialized;
/// execution through fftw_execute_r2r is thread safe.
class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(int n, fftw_r2r_kind kind) {
        std::lock_guard lock(mutex_);
        const auto key = std::make_pair(n, static_cast<int>(kind));
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        auto in = fftw_buffer(n);
        auto out = fftw_buffer(n);
        // FFTW_ESTIMATE keeps the chosen algorithm, and hence every output bit,
        // independent of timing measurements.
        fftw_plan plan = fftw_plan_r2r_1d(n, in.get(), out.get(), kind, FFTW_ESTIMATE);
        if (plan == nullptr) throw Error(Errc::unsupported, "FFTW could not plan length " + std::to_string(n));
        plans_.emplace(key, plan);
        return plan;
    }

    const ChirpDst1& chirp_dst1(std::size_t n) {
        std::lock_guard lock(mutex_);
        auto& slot = chirps_[n];
        if (!slot) slot = std::make_unique<ChirpDst1>(n);
        return *slot;
    }

    PlanCache(const PlanCache&) = delete;
    PlanCache& operator=(const PlanCache&) = delete;

    ~PlanCache() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

private:
    PlanCache() = default;
    std::mutex mutex_;
    std::map<std::pair<int, int>, fftw_plan> plans_;
    std::map<std::size_t, std::unique_ptr<ChirpDst1>> chirps_;
};

/// Per-thread aligned scratch pair for plan execution.
struct Scratch {
    FftwBuffer in, out;
    std::size_t capacity = 0;

    static Scratch& local(std::size_t n) {
        thread_local Scratch s;
        if (s.capacity < n) {
            s.in = fftw_buffer(n);
            s.out = fftw_buffer(n);
            s.capacity = n;
        }
        return s;
    }
};

inline void run_r2r(fftw_r2r_kind kind, int n, double* in, double* out) {
    fftw_execute_r2r(PlanCache::instance().get(n, kind), in, out);
}

// Each kernel reads x (length n) and writes the result back into x.

inline void dct3_kernel(std::span<double> x) {
    const auto n = x.size();
    auto& s = Scratch::local(n);
    const double w0 = std::sqrt(1.0 / static_cast<double>(n));
    const double w = 0.5 * std::sqrt(2.0 / static_cast<double>(n));
    s.in[0] = w0 * x[0];
    for (std::size_t j = 1; j < n; ++j) s.in[j] = w * x[j];
    run_r2r(FFTW_REDFT01, static_cast<int>(n), s.in.get(), s.out.get());
    for (std::size_t j = 0; j < n; ++j) x[j] = s.out[j];
}

inline void dct3_transposed_kernel(std::span<double> x) {
    const auto n = x.size();
    auto& s = Scratch::local(n);
    for (std::size_t j = 0; j < n; ++j) s.in[j] = x[j];
    run_r2r(FFTW_REDFT10, static_cast<int>(n), s.in.get(), s.out.get());
    const double w0 = 0.5 * std::sqrt(1.0 / static_cast<double>(n));
    const double w = 0.5 * std::sqrt(2.0 / static_cast<double>(n));
    x[0] = w0 * s.out[0];
    for (std::size_t j = 1; j < n; ++j) x[j] = w * s.out[j];
}

inline void dst1_kernel(std::span<double> x) {
    const auto n = x.size();
    const double scale = 1.0 / std::sqrt(2.0 * static_cast<double>(n + 1));
    if (dst1_uses_chirp(n)) {
        PlanCache::instance().chirp_dst1(n).run(x);
        for (auto& v : x) v *= scale;
        return;
    }
    auto& s = Scratch::local(n);
    for (std::size_t j = 0; j < n; ++j) s.in[j] = x[j];
    run_r2r(FFTW_RODFT00, static_cast<int>(n), s.in.get(), s.out.get());
    for (std::size_t j = 0; j < n; ++j) x[j] = scale * s.out[j];
}

inline void ar_forward_kernel(std::span<double> x, const ArRamp& ramp) {
    const auto m = x.size();
    const double first = x[0] / ramp.alpha;
    const double last = x[m - 1] / ramp.alpha;
    auto interior = x.subspan(1, m - 2);
    dst1_kernel(interior);
    const auto k = interior.size();
    for (std::size_t j = 0; j < k; ++j) interior[j] += first * ramp.p[j] + last * ramp.p[k - 1 - j];
    x[0] = first;
    x[m - 1] = last;
}

inline void ar_inverse_kernel(std::span<double> x, const ArRamp& ramp) {
    const auto m = x.size();
    const double first = x[0];
    const double last = x[m - 1];
    auto interior = x.subspan(1, m - 2);
    const auto k = interior.size();
    for (std::size_t j = 0; j < k; ++j) interior[j] -= first * ramp.p[j] + last * ramp.p[k - 1 - j];
    dst1_kernel(interior);
    x[0] = ramp.alpha * first;
    x[m - 1] = ramp.alpha * last;
}

/// Applies one 1D transform in place; `ramp` must be built for x.size()
/// when t is an AR transform.
inline void apply_inplace(Transform t, std::span<double> x, const ArRamp* ramp) {
    switch (t) {
    case Transform::dct3: dct3_kernel(x); return;
    case Transform::dct3_transposed: dct3_transposed_kernel(x); return;
    case Transform::dst1: dst1_kernel(x); return;
    case Transform::ar_forward: ar_forward_kernel(x, *ramp); return;
    case Transform::ar_inverse: ar_inverse_kernel(x, *ramp); return;
    }
}

inline std::optional<ArRamp> ramp_for(Transform t, Eigen::Index m) {
    if (t == Transform::ar_forward || t == Transform::ar_inverse) return ArRamp::make(m);
    return std::nullopt;
}

/// Applies t to every row of img in place.
inline void apply_rows(Transform t, Image& img) {
    const auto ramp = ramp_for(t, img.cols());
    const ArRamp* rp = ramp ? &*ramp : nullptr;
    for (Eigen::Index r = 0; r < img.rows(); ++r)
        apply_inplace(t, std::span<double>(img.row(r).data(), static_cast<std::size_t>(img.cols())), rp);
}

/// Applies t to every column of img in place, a strip of columns at a time
/// so the gathers stay cache-friendly.
inline void apply_cols(Transform t, Image& img) {
    const auto ramp = ramp_for(t, img.rows());
    const ArRamp* rp = ramp ? &*ramp : nullptr;
    constexpr Eigen::Index strip = 16;
    Image buf(std::min(strip, img.cols()), img.rows());
    for (Eigen::Index c0 = 0; c0 < img.cols(); c0 += strip) {
        const Eigen::Index w = std::min(strip, img.cols() - c0);
        buf.topRows(w) = img.middleCols(c0, w).transpose();
        for (Eigen::Index r = 0; r < w; ++r)
            apply_inplace(t, std::span<double>(buf.row(r).data(), static_cast<std::size_t>(img.rows())), rp);
        img.middleCols(c0, w) = buf.topRows(w).transpose();
    }
}

} // namespace detail

/// y = V x for the 1D transform V selected by t.
inline Vector apply(Transform t, const Vector& x) {
    check_length(t, x.size());
    Vector y = x;
    const auto ramp = detail::ramp_for(t, x.size());
    detail::apply_inplace(t, std::span<double>(y.data(), static_cast<std::size_t>(y.size())),
                          ramp ? &*ramp : nullptr);
    return y;
}

inline Vector dct3_apply(const Vector& x, bool transposed = false) {
    return apply(transposed ? Transform::dct3_transposed : Transform::dct3, x);
}
inline Vector dst1_apply(const Vector& x) { return apply(Transform::dst1, x); }
inline Vector ar_apply(const Vector& x) { return apply(Transform::ar_forward, x); }
inline Vector ar_inverse_apply(const Vector& x) { return apply(Transform::ar_inverse, x); }

/// Y = V1 X V2^T, i.e. (V1 (x) V2) acting on the row-major vectorization of X.
/// V1 = t1 transforms every column, V2 = t2 every row.
inline Image two_level_apply(const Image& x, Transform t1, Transform t2) {
    check_length(t1, x.rows());
    check_length(t2, x.cols());
    Image y = x;
    detail::apply_rows(t2, y);
    detail::apply_cols(t1, y);
    return y;
}

/// Explicit m x m matrix of t, entry by entry from the defining formulas.
inline Matrix dense_transform(Transform t, Eigen::Index m) {
    check_length(t, m);
    detail::require(m <= 4096, Errc::size_guard, "dense transform of length " + std::to_string(m));
    using std::numbers::pi;
    const double md = static_cast<double>(m);
    auto dct = [&] {
        Matrix r(m, m);
        for (Eigen::Index s = 0; s < m; ++s)
            for (Eigen::Index c = 0; c < m; ++c)
                r(s, c) = std::sqrt((c == 0 ? 1.0 : 2.0) / md) * std::cos(c * (s + 0.5) * pi / md);
        return r;
    };
    auto dst = [](Eigen::Index k) {
        Matrix q(k, k);
        for (Eigen::Index s = 1; s <= k; ++s)
            for (Eigen::Index c = 1; c <= k; ++c)
                q(s - 1, c - 1) = std::sqrt(2.0 / (k + 1.0)) * std::sin(static_cast<double>(s * c) * pi / (k + 1.0));
        return q;
    };
    switch (t) {
    case Transform::dct3: return dct();
    case Transform::dct3_transposed: return dct().transpose();
    case Transform::dst1: return dst(m);
    case Transform::ar_forward:
    case Transform::ar_inverse: {
        const auto ramp = ArRamp::make(m);
        const Eigen::Index k = m - 2;
        const Matrix q = dst(k);
        const Vector jp = ramp.p.reverse();
        Matrix a = Matrix::Zero(m, m);
        a.block(1, 1, k, k) = q;
        if (t == Transform::ar_forward) {
            a(0, 0) = 1.0 / ramp.alpha;
            a(m - 1, m - 1) = 1.0 / ramp.alpha;
            a.block(1, 0, k, 1) = ramp.p / ramp.alpha;
            a.block(1, m - 1, k, 1) = jp / ramp.alpha;
        } else {
            a(0, 0) = ramp.alpha;
            a(m - 1, m - 1) = ramp.alpha;
            a.block(1, 0, k, 1) = -q * ramp.p;
            a.block(1, m - 1, k, 1) = -q * jp;
        }
        return a;
    }
    }
    return {};
}

} // namespace deblur
