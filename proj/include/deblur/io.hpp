#pragma once

// Image IO: binary netpbm (P5 gray, P6 RGB, maxval 255 or 65535, 16-bit
// samples big-endian) and whitespace-separated text matrices. Netpbm samples
// map to [0, 1] on load; on save values are clamped to [0, 1] and rounded
// half up.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "deblur/error.hpp"
#include "deblur/types.hpp"

namespace deblur {

namespace detail {

struct NetpbmHeader {
    char kind = 0; ///< '5' or '6'
    long width = 0;
    long height = 0;
    long maxval = 0;
    std::size_t data_offset = 0;
};

class ByteReader {
public:
    explicit ByteReader(std::string bytes) : bytes_(std::move(bytes)) {}

    std::size_t offset() const { return pos_; }
    bool done() const { return pos_ >= bytes_.size(); }

    [[noreturn]] void fail(const std::string& what) const {
        throw Error(Errc::format, what + " at byte offset " + std::to_string(pos_));
    }

    /// Skips whitespace and '#' comments between header tokens.
    void skip_space() {
        while (!done()) {
            const unsigned char c = static_cast<unsigned char>(bytes_[pos_]);
            if (c == '#') {
                while (!done() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(c)) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    long read_uint() {
        skip_space();
        if (done() || !std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) fail("expected an unsigned integer");
        long v = 0;
        while (!done() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
            v = v * 10 + (bytes_[pos_] - '0');
            if (v > 1'000'000'000L) fail("header value too large");
            ++pos_;
        }
        return v;
    }

    char get() {
        if (done()) fail("unexpected end of data");
        return bytes_[pos_++];
    }

    unsigned sample(bool wide) {
        if (!wide) return static_cast<unsigned char>(get());
        const unsigned hi = static_cast<unsigned char>(get());
        const unsigned lo = static_cast<unsigned char>(get());
        return (hi << 8) | lo;
    }

private:
    std::string bytes_;
    std::size_t pos_ = 0;
};

inline NetpbmHeader read_header(ByteReader& r) {
    NetpbmHeader h;
    if (r.get() != 'P') r.fail("missing netpbm magic 'P'");
    h.kind = r.get();
    if (h.kind != '5' && h.kind != '6') r.fail(std::string("unsupported netpbm type P") + h.kind);
    h.width = r.read_uint();
    h.height = r.read_uint();
    h.maxval = r.read_uint();
    if (h.width <= 0 || h.height <= 0) r.fail("image dimensions must be positive");
    if (h.maxval != 255 && h.maxval != 65535) r.fail("maxval must be 255 or 65535");
    const char sep = r.get();
    if (!std::isspace(static_cast<unsigned char>(sep))) r.fail("expected whitespace after maxval");
    h.data_offset = r.offset();
    return h;
}

inline std::string slurp(std::istream& in) {
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::vector<Image> read_netpbm(std::istream& in, char want) {
    ByteReader r(slurp(in));
    const auto h = read_header(r);
    if (h.kind != want) r.fail(std::string("expected P") + want + ", found P" + h.kind);
    const int nc = h.kind == '5' ? 1 : 3;
    const bool wide = h.maxval > 255;
    std::vector<Image> ch(nc, Image(h.height, h.width));
    const double scale = 1.0 / static_cast<double>(h.maxval);
    for (long i = 0; i < h.height; ++i)
        for (long j = 0; j < h.width; ++j)
            for (int c = 0; c < nc; ++c) {
                if (r.done()) r.fail("truncated pixel data");
                const unsigned v = r.sample(wide);
                if (static_cast<long>(v) > h.maxval) r.fail("sample exceeds maxval");
                ch[c](i, j) = v * scale;
            }
    return ch;
}

inline unsigned quantize(double x, unsigned maxval) {
    const double v = std::clamp(std::isnan(x) ? 0.0 : x, 0.0, 1.0);
    return static_cast<unsigned>(std::floor(v * maxval + 0.5));
}

inline void write_netpbm(std::ostream& os, const std::vector<const Image*>& ch, unsigned maxval) {
    detail::require(maxval == 255 || maxval == 65535, Errc::invalid_parameter, "maxval must be 255 or 65535");
    const auto rows = ch[0]->rows(), cols = ch[0]->cols();
    os << 'P' << (ch.size() == 1 ? '5' : '6') << '\n' << cols << ' ' << rows << '\n' << maxval << '\n';
    std::string data;
    data.reserve(static_cast<std::size_t>(rows * cols) * ch.size() * (maxval > 255 ? 2 : 1));
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            for (const Image* c : ch) {
                const unsigned v = quantize((*c)(i, j), maxval);
                if (maxval > 255) data.push_back(static_cast<char>(v >> 8));
                data.push_back(static_cast<char>(v & 0xFF));
            }
    os.write(data.data(), static_cast<std::streamsize>(data.size()));
}

inline std::string lower_extension(const std::string& path) {
    const auto dot = path.find_last_of('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

} // namespace detail

inline Image read_pgm(std::istream& in) { return detail::read_netpbm(in, '5')[0]; }

inline ColorImage read_ppm(std::istream& in) {
    auto ch = detail::read_netpbm(in, '6');
    return {{std::move(ch[0]), std::move(ch[1]), std::move(ch[2])}};
}

inline void write_pgm(std::ostream& os, const Image& img, unsigned maxval = 255) {
    detail::write_netpbm(os, {&img}, maxval);
}

inline void write_ppm(std::ostream& os, const ColorImage& img, unsigned maxval = 255) {
    img.check_consistent();
    detail::write_netpbm(os, {&img.channels[0], &img.channels[1], &img.channels[2]}, maxval);
}

/// One image row per line, whitespace-separated decimals.
inline Image read_text_matrix(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::vector<double> row;
        std::string tok;
        while (ls >> tok) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw Error(Errc::format, "line " + std::to_string(lineno) + ": not a number '" + tok + "'");
            }
        }
        if (row.empty()) continue;
        detail::require(rows.empty() || row.size() == rows[0].size(), Errc::format,
                        "line " + std::to_string(lineno) + ": ragged row");
        rows.push_back(std::move(row));
    }
    detail::require(!rows.empty(), Errc::format, "text matrix is empty");
    Image out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) out(i, j) = rows[i][j];
    return out;
}

inline void write_text_matrix(std::ostream& os, const Image& img) {
    char buf[32];
    for (Eigen::Index i = 0; i < img.rows(); ++i) {
        for (Eigen::Index j = 0; j < img.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", img(i, j));
            if (j > 0) os << ' ';
            os << buf;
        }
        os << '\n';
    }
}

/// Gray image from .pgm or a text matrix (any other extension).
inline Image load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    detail::require(in.good(), Errc::io, "cannot open '" + path + "'");
    return detail::lower_extension(path) == "pgm" ? read_pgm(in) : read_text_matrix(in);
}

inline ColorImage load_color_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    detail::require(in.good(), Errc::io, "cannot open '" + path + "'");
    return read_ppm(in);
}

inline bool is_color_path(const std::string& path) { return detail::lower_extension(path) == "ppm"; }

inline void save_image(const std::string& path, const Image& img) {
    std::ofstream out(path, std::ios::binary);
    detail::require(out.good(), Errc::io, "cannot write '" + path + "'");
    if (detail::lower_extension(path) == "pgm")
        write_pgm(out, img);
    else
        write_text_matrix(out, img);
}

inline void save_color_image(const std::string& path, const ColorImage& img) {
    std::ofstream out(path, std::ios::binary);
    detail::require(out.good(), Errc::io, "cannot write '" + path + "'");
    write_ppm(out, img);
}

} // namespace deblur
