#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "deblur/io.hpp"
#include "oracle/dense_oracles.hpp"

using namespace deblur;
using Index = Eigen::Index;

namespace {

std::string pgm8(int w, int h, const std::string& pixels) {
    return "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n" + pixels;
}

std::string format_error(const std::string& bytes) {
    std::istringstream in(bytes);
    try {
        read_pgm(in);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::format);
        return e.what();
    }
    ADD_FAILURE() << "no error";
    return "";
}

} // namespace

TEST(Io, Pgm8RoundTripIsByteIdentical) {
    std::string pixels;
    for (int i = 0; i < 12; ++i) pixels.push_back(static_cast<char>(i * 21));
    const std::string bytes = pgm8(4, 3, pixels);
    std::istringstream in(bytes);
    const Image img = read_pgm(in);
    EXPECT_EQ(img.rows(), 3);
    EXPECT_EQ(img.cols(), 4);
    EXPECT_DOUBLE_EQ(img(0, 1), 21.0 / 255.0);
    std::ostringstream out;
    write_pgm(out, img);
    EXPECT_EQ(out.str(), bytes);
}

TEST(Io, BlackImageIsZero) {
    std::istringstream in(pgm8(3, 2, std::string(6, '\0')));
    EXPECT_EQ(read_pgm(in), Image::Zero(2, 3));
}

TEST(Io, SixteenBitRamp) {
    std::string bytes = "P5\n3 1\n65535\n";
    for (unsigned v : {0u, 1u, 65535u}) {
        bytes.push_back(static_cast<char>(v >> 8));
        bytes.push_back(static_cast<char>(v & 0xFF));
    }
    std::istringstream in(bytes);
    const Image img = read_pgm(in);
    EXPECT_EQ(img(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(img(0, 1), 1.0 / 65535.0);
    EXPECT_EQ(img(0, 2), 1.0);
    std::ostringstream out;
    write_pgm(out, img, 65535);
    EXPECT_EQ(out.str(), bytes);
}

TEST(Io, HeaderCommentsAccepted) {
    std::istringstream in("P5\n# made by hand\n2 1\n255\n\x01\x02");
    EXPECT_DOUBLE_EQ(read_pgm(in)(0, 1), 2.0 / 255.0);
}

TEST(Io, SaveClampsAndRoundsHalfUp) {
    Image x(1, 4);
    x << -0.5, 1.7, 0.5 / 255.0, 1.49 / 255.0;
    std::ostringstream out;
    write_pgm(out, x);
    const std::string s = out.str();
    const std::string data = s.substr(s.size() - 4);
    EXPECT_EQ(static_cast<unsigned char>(data[0]), 0);
    EXPECT_EQ(static_cast<unsigned char>(data[1]), 255);
    EXPECT_EQ(static_cast<unsigned char>(data[2]), 1);
    EXPECT_EQ(static_cast<unsigned char>(data[3]), 1);
}

TEST(Io, FormatErrorsCarryByteOffset) {
    EXPECT_NE(format_error("P2\n1 1\n255\n0").find("offset 2"), std::string::npos);
    EXPECT_NE(format_error("P5\n2 2\n255\n\x01\x02\x03").find("offset 14"), std::string::npos);
    EXPECT_NE(format_error("P5\n2 2\n100\n\x01\x02\x03\x04").find("maxval"), std::string::npos);
    EXPECT_NE(format_error("P5\nx 2\n255\n").find("offset 3"), std::string::npos);
    EXPECT_NE(format_error("").find("offset 0"), std::string::npos);
}

TEST(Io, PpmRoundTrip) {
    std::string bytes = "P6\n2 1\n255\n";
    for (int v : {10, 20, 30, 40, 50, 60}) bytes.push_back(static_cast<char>(v));
    std::istringstream in(bytes);
    const ColorImage c = read_ppm(in);
    EXPECT_DOUBLE_EQ(c.channels[1](0, 0), 20.0 / 255.0);
    EXPECT_DOUBLE_EQ(c.channels[2](0, 1), 60.0 / 255.0);
    std::ostringstream out;
    write_ppm(out, c);
    EXPECT_EQ(out.str(), bytes);
    std::istringstream wrong(bytes);
    EXPECT_THROW(read_pgm(wrong), Error);
}

TEST(Io, TextMatrixRoundTripIsExact) {
    const Image x = oracle::random_image(3, 4, 1);
    std::stringstream s;
    write_text_matrix(s, x);
    EXPECT_EQ(read_text_matrix(s), x);
}

TEST(Io, TextMatrixErrors) {
    std::istringstream ragged("1 2\n3\n");
    EXPECT_THROW(read_text_matrix(ragged), Error);
    std::istringstream junk("1 x\n");
    EXPECT_THROW(read_text_matrix(junk), Error);
    std::istringstream empty("\n\n");
    EXPECT_THROW(read_text_matrix(empty), Error);
}

TEST(Io, FilesByExtension) {
    const auto dir = std::filesystem::temp_directory_path() / "deblur_io_test";
    std::filesystem::create_directories(dir);
    Image x(2, 2);
    x << 0, 1.0 / 255.0, 128.0 / 255.0, 1;
    save_image((dir / "a.pgm").string(), x);
    EXPECT_EQ(load_image((dir / "a.pgm").string()), x);
    save_image((dir / "a.txt").string(), x);
    EXPECT_EQ(load_image((dir / "a.txt").string()), x);
    EXPECT_TRUE(is_color_path("b.PPM"));
    EXPECT_THROW(load_image((dir / "missing.pgm").string()), Error);
    std::filesystem::remove_all(dir);
}
