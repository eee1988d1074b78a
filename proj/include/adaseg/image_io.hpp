#pragma once

// Grayscale PGM input/output, noise injection and weight-map export.
//
// Binary PGM (P5, maxval 255) is the output format; P5 with 16-bit samples
// and ASCII P2 are accepted on input. Colour PNM variants are rejected.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "adaseg/grid.hpp"
#include "adaseg/lambda_map.hpp"

namespace adaseg {

struct RawImage {
    std::size_t width = 0;
    std::size_t height = 0;
    unsigned maxval = 255;
    /// Row-major, height rows of width samples.
    std::vector<std::uint16_t> samples;

    int depth() const noexcept { return maxval > 255 ? 16 : 8; }
};

namespace detail {

class PnmHeaderReader {
public:
    explicit PnmHeaderReader(const std::string& bytes) : bytes_(bytes) {}

    std::string token() {
        skip_space_and_comments();
        std::string out;
        while (pos_ < bytes_.size() && !std::isspace(static_cast<unsigned char>(bytes_[pos_])) &&
               bytes_[pos_] != '#')
            out.push_back(bytes_[pos_++]);
        if (out.empty()) throw IoError("pnm: truncated header");
        return out;
    }

    unsigned long number() {
        const std::string t = token();
        for (char ch : t)
            if (!std::isdigit(static_cast<unsigned char>(ch)))
                throw IoError("pnm: malformed header field '" + t + "'");
        return std::stoul(t);
    }

    /// Consumes the single whitespace byte that ends a binary header.
    void end_binary_header() {
        if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_])))
            throw IoError("pnm: missing whitespace after header");
        ++pos_;
    }

    std::size_t position() const noexcept { return pos_; }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const char ch = bytes_[pos_];
            if (ch == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(ch))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    const std::string& bytes_;
    std::size_t pos_ = 0;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write to '" + path + "' failed");
}

} // namespace detail

inline RawImage decode_pnm(const std::string& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P') throw IoError("not a PNM file");
    const char kind = bytes[1];
    if (kind == '3' || kind == '6' || kind == '7')
        throw UnsupportedFormatError("multi-channel PNM (P" + std::string(1, kind) +
                                     ") is not supported; convert to grayscale");
    if (kind != '2' && kind != '5')
        throw UnsupportedFormatError("unsupported PNM variant P" + std::string(1, kind));

    detail::PnmHeaderReader reader(bytes);
    reader.token(); // magic
    RawImage img;
    img.width = reader.number();
    img.height = reader.number();
    const unsigned long maxval = reader.number();
    if (img.width == 0 || img.height == 0) throw IoError("pnm: zero image dimension");
    if (maxval == 0 || maxval > 65535) throw IoError("pnm: maxval out of range");
    img.maxval = static_cast<unsigned>(maxval);
    const std::size_t count = img.width * img.height;
    img.samples.resize(count);

    if (kind == '2') {
        for (std::size_t p = 0; p < count; ++p) {
            const unsigned long v = reader.number();
            if (v > maxval) throw IoError("pnm: sample exceeds maxval");
            img.samples[p] = static_cast<std::uint16_t>(v);
        }
        return img;
    }

    reader.end_binary_header();
    const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
    const std::size_t start = reader.position();
    if (bytes.size() - start < count * bytes_per_sample) throw IoError("pnm: truncated raster");
    for (std::size_t p = 0; p < count; ++p) {
        unsigned v;
        if (bytes_per_sample == 1) {
            v = static_cast<unsigned char>(bytes[start + p]);
        } else {
            v = (static_cast<unsigned>(static_cast<unsigned char>(bytes[start + 2 * p])) << 8) |
                static_cast<unsigned char>(bytes[start + 2 * p + 1]);
        }
        if (v > maxval) throw IoError("pnm: sample exceeds maxval");
        img.samples[p] = static_cast<std::uint16_t>(v);
    }
    return img;
}

/// Binary P5 encoding; 16-bit samples are big-endian.
inline std::string encode_pgm(const RawImage& img) {
    std::ostringstream os;
    os << "P5\n" << img.width << ' ' << img.height << '\n' << img.maxval << '\n';
    std::string out = os.str();
    for (std::uint16_t v : img.samples) {
        if (img.maxval > 255) out.push_back(static_cast<char>(v >> 8));
        out.push_back(static_cast<char>(v & 0xff));
    }
    return out;
}

inline RawImage read_pnm(const std::string& path) {
    try {
        return decode_pnm(detail::read_file(path));
    } catch (const UnsupportedFormatError& e) {
        throw UnsupportedFormatError(path + ": " + e.what());
    } catch (const IoError& e) {
        throw IoError(path + ": " + e.what());
    }
}

inline void write_pgm(const std::string& path, const RawImage& img) {
    detail::write_file(path, encode_pgm(img));
}

/// Samples divided by maxval, giving values in [0, 1].
inline ImageGrid to_unit_grid(const RawImage& img) {
    ImageGrid g(img.height, img.width);
    const double scale = static_cast<double>(img.maxval);
    for (std::size_t p = 0; p < g.size(); ++p) g.values()[p] = img.samples[p] / scale;
    return g;
}

/// 8-bit quantization, round half away from zero after clamping to [0, 1].
inline RawImage to_raw_8bit(const ImageGrid& u) {
    RawImage img{u.cols(), u.rows(), 255, std::vector<std::uint16_t>(u.size())};
    for (std::size_t p = 0; p < u.size(); ++p)
        img.samples[p] = static_cast<std::uint16_t>(std::round(std::clamp(u.values()[p], 0.0, 1.0) * 255.0));
    return img;
}

inline ImageGrid load_image(const std::string& path) { return to_unit_grid(read_pnm(path)); }

inline void save_image(const ImageGrid& u, const std::string& path) {
    write_pgm(path, to_raw_8bit(u));
}

/// Foreground 255, background 0.
inline RawImage mask_to_raw(const Mask& mask) {
    RawImage img{mask.cols(), mask.rows(), 255, std::vector<std::uint16_t>(mask.size())};
    for (std::size_t p = 0; p < mask.size(); ++p) img.samples[p] = mask.values()[p] ? 255 : 0;
    return img;
}

inline void save_mask(const Mask& mask, const std::string& path) {
    write_pgm(path, mask_to_raw(mask));
}

/// Samples above half of maxval are foreground.
inline Mask load_mask(const std::string& path) {
    const RawImage img = read_pnm(path);
    Mask m(img.height, img.width, 0);
    for (std::size_t p = 0; p < m.size(); ++p)
        m.values()[p] = 2u * img.samples[p] > img.maxval ? 1 : 0;
    return m;
}

/// Adds N(0, (sigma_255/255)^2) per pixel, then clamps to [0, 1].
/// Deterministic for a given seed (mt19937_64 with std::normal_distribution).
inline ImageGrid add_gaussian_noise(const ImageGrid& u, double sigma_255, std::uint64_t seed) {
    if (!(sigma_255 >= 0.0) || !std::isfinite(sigma_255))
        throw ParameterError("noise sigma must be nonnegative");
    if (sigma_255 == 0.0) return u;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma_255 / 255.0);
    ImageGrid out = u;
    for (double& v : out) v = std::clamp(v + noise(rng), 0.0, 1.0);
    return out;
}

/// (lambda - min)/(max - min) mapped to 8-bit gray.
inline RawImage lambda_heatmap(const LambdaMap& lam, const Bounds& bounds) {
    bounds.validate();
    ImageGrid g(lam.rows(), lam.cols());
    for (std::size_t p = 0; p < g.size(); ++p)
        g.values()[p] = (lam.grid().values()[p] - bounds.min) / (bounds.max - bounds.min);
    return to_raw_8bit(g);
}

inline void save_lambda_heatmap(const LambdaMap& lam, const Bounds& bounds,
                                const std::string& path) {
    write_pgm(path, lambda_heatmap(lam, bounds));
}

} // namespace adaseg
