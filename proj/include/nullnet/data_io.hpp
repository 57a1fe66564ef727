#pragma once

// IDX dataset ingestion (big-endian magics 0x803 images / 0x801 labels),
// pixel normalization to [-1, 1], and binary PGM (P5) image export/import.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nullnet/linalg.hpp"

namespace nullnet {

enum class Source { mnist, fmnist, other };

/// Flattened images in [-1, 1]^n with integer labels and per-image
/// original/rescaled flags.
struct LabeledDataset {
    std::vector<Vector> images;
    std::vector<int> labels;
    std::size_t height = 0;
    std::size_t width = 0;
    Source source = Source::other;
    std::vector<std::uint8_t> rescaled;  // per-image flag, parallel to images

    std::size_t size() const { return images.size(); }
};

struct IdxImages {
    std::size_t count = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> pixels;  // count * height * width
};

struct IdxLabels {
    std::size_t count = 0;
    std::vector<std::uint8_t> labels;
};

namespace detail {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

inline std::uint32_t read_u32_be(const std::vector<std::uint8_t>& b, std::size_t off,
                                 const char* what) {
    if (off + 4 > b.size()) {
        std::ostringstream msg;
        msg << "idx: truncated " << what << " at byte " << off << ": expected 4 bytes, got "
            << (b.size() - off);
        throw std::runtime_error(msg.str());
    }
    return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
           (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

}  // namespace detail

inline IdxImages parse_idx_images(const std::vector<std::uint8_t>& bytes) {
    using namespace detail;
    const std::uint32_t magic = read_u32_be(bytes, 0, "magic");
    if (magic != kIdxImageMagic) {
        std::ostringstream msg;
        msg << "idx: bad image magic at byte 0: got 0x" << std::hex << magic << ", expected 0x"
            << kIdxImageMagic;
        throw std::runtime_error(msg.str());
    }
    IdxImages out;
    out.count = read_u32_be(bytes, 4, "image count");
    out.height = read_u32_be(bytes, 8, "image height");
    out.width = read_u32_be(bytes, 12, "image width");
    const std::size_t payload = out.count * out.height * out.width;
    if (bytes.size() < 16 + payload) {
        std::ostringstream msg;
        msg << "idx: truncated image payload at byte " << bytes.size() << ": expected "
            << 16 + payload << " bytes total, got " << bytes.size();
        throw std::runtime_error(msg.str());
    }
    out.pixels.assign(bytes.begin() + 16, bytes.begin() + 16 + payload);
    return out;
}

inline IdxImages parse_idx_images_file(const std::string& path) {
    return parse_idx_images(detail::read_file_bytes(path));
}

inline IdxLabels parse_idx_labels(const std::vector<std::uint8_t>& bytes) {
    using namespace detail;
    const std::uint32_t magic = read_u32_be(bytes, 0, "magic");
    if (magic != kIdxLabelMagic) {
        std::ostringstream msg;
        msg << "idx: bad label magic at byte 0: got 0x" << std::hex << magic << ", expected 0x"
            << kIdxLabelMagic;
        throw std::runtime_error(msg.str());
    }
    IdxLabels out;
    out.count = read_u32_be(bytes, 4, "label count");
    if (bytes.size() < 8 + out.count) {
        std::ostringstream msg;
        msg << "idx: truncated label payload at byte " << bytes.size() << ": expected "
            << 8 + out.count << " bytes total, got " << bytes.size();
        throw std::runtime_error(msg.str());
    }
    out.labels.assign(bytes.begin() + 8, bytes.begin() + 8 + out.count);
    return out;
}

inline IdxLabels parse_idx_labels_file(const std::string& path) {
    return parse_idx_labels(detail::read_file_bytes(path));
}

inline void write_idx_images(const std::string& path, const IdxImages& images) {
    if (images.pixels.size() != images.count * images.height * images.width)
        throw std::invalid_argument("write_idx_images: pixel buffer does not match dimensions");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    auto put_u32 = [&out](std::uint32_t v) {
        const char b[4] = {char(v >> 24), char(v >> 16), char(v >> 8), char(v)};
        out.write(b, 4);
    };
    put_u32(detail::kIdxImageMagic);
    put_u32(static_cast<std::uint32_t>(images.count));
    put_u32(static_cast<std::uint32_t>(images.height));
    put_u32(static_cast<std::uint32_t>(images.width));
    out.write(reinterpret_cast<const char*>(images.pixels.data()),
              static_cast<std::streamsize>(images.pixels.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

inline void write_idx_labels(const std::string& path, const IdxLabels& labels) {
    if (labels.labels.size() != labels.count)
        throw std::invalid_argument("write_idx_labels: label buffer does not match count");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    auto put_u32 = [&out](std::uint32_t v) {
        const char b[4] = {char(v >> 24), char(v >> 16), char(v >> 8), char(v)};
        out.write(b, 4);
    };
    put_u32(detail::kIdxLabelMagic);
    put_u32(static_cast<std::uint32_t>(labels.count));
    out.write(reinterpret_cast<const char*>(labels.labels.data()),
              static_cast<std::streamsize>(labels.labels.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

/// Affine pixel map p -> p/127.5 - 1 onto [-1, 1].
inline double normalize_pixel(std::uint8_t p) { return static_cast<double>(p) / 127.5 - 1.0; }

inline Vector normalize_pixels(const std::uint8_t* p, std::size_t n) {
    Vector v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = normalize_pixel(p[i]);
    return v;
}

/// Inverse display map [-1, 1] -> [0, 255], rounding to the nearest level.
inline std::uint8_t denormalize_pixel(double v) {
    long q = std::lround((v + 1.0) * 127.5);
    if (q < 0) q = 0;
    if (q > 255) q = 255;
    return static_cast<std::uint8_t>(q);
}

/// Parse an image/label file pair into a normalized dataset.
inline LabeledDataset load_labeled_dataset(const std::string& images_path,
                                           const std::string& labels_path,
                                           Source source = Source::other) {
    const IdxImages imgs = parse_idx_images_file(images_path);
    const IdxLabels labs = parse_idx_labels_file(labels_path);
    if (imgs.count != labs.count) {
        std::ostringstream msg;
        msg << "dataset: image count " << imgs.count << " != label count " << labs.count;
        throw std::runtime_error(msg.str());
    }
    LabeledDataset data;
    data.height = imgs.height;
    data.width = imgs.width;
    data.source = source;
    const std::size_t dim = imgs.height * imgs.width;
    data.images.reserve(imgs.count);
    data.labels.reserve(imgs.count);
    for (std::size_t i = 0; i < imgs.count; ++i) {
        data.images.push_back(normalize_pixels(&imgs.pixels[i * dim], dim));
        data.labels.push_back(static_cast<int>(labs.labels[i]));
    }
    data.rescaled.assign(imgs.count, 0);
    return data;
}

/// Write a [-1, 1] image as binary PGM (P5, maxval 255).
inline void encode_image(const Vector& v, std::size_t height, std::size_t width,
                         const std::string& path) {
    if (v.size() != height * width)
        throw std::invalid_argument("encode_image: dimension mismatch");
    for (double x : v)
        if (!(x >= -1.0 - 1e-9 && x <= 1.0 + 1e-9))
            throw std::invalid_argument("encode_image: values must lie in [-1, 1]");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out << "P5\n" << width << " " << height << "\n255\n";
    std::vector<std::uint8_t> row(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) row[i] = denormalize_pixel(v[i]);
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

struct DecodedImage {
    Vector values;  // [-1, 1]
    std::size_t height = 0;
    std::size_t width = 0;
};

inline DecodedImage decode_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::string magic;
    in >> magic;
    if (magic != "P5") throw std::runtime_error("pgm: not a binary PGM (P5) file: " + path);
    auto next_token = [&in, &path]() {
        // Skip whitespace and '#' comment lines between header fields.
        int c = in.peek();
        while (c == '#' || std::isspace(c)) {
            if (c == '#') in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
            else in.get();
            c = in.peek();
        }
        long v = -1;
        in >> v;
        if (!in || v < 0) throw std::runtime_error("pgm: malformed header: " + path);
        return static_cast<std::size_t>(v);
    };
    const std::size_t width = next_token();
    const std::size_t height = next_token();
    const std::size_t maxval = next_token();
    if (maxval != 255) throw std::runtime_error("pgm: unsupported maxval (want 255): " + path);
    in.get();  // single whitespace after maxval
    std::vector<std::uint8_t> buf(width * height);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size())
        throw std::runtime_error("pgm: truncated payload: " + path);
    DecodedImage img;
    img.height = height;
    img.width = width;
    img.values = normalize_pixels(buf.data(), buf.size());
    return img;
}

}  // namespace nullnet
