#include "tse/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "tse/error.hpp"

namespace tse::io {

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

// Minimal header tokenizer shared by PGM and FPLANES. Tracks the byte offset
// so that format errors can point at the offending position.
class HeaderReader {
public:
    HeaderReader(std::span<const unsigned char> bytes, std::string origin)
        : bytes_(bytes), origin_(std::move(origin)) {}

    [[noreturn]] void fail(const std::string& what) const {
        throw FormatError(origin_ + ": " + what + " at byte offset " + std::to_string(pos_));
    }

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (is_space(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::string token() {
        skip_space_and_comments();
        const std::size_t start = pos_;
        while (pos_ < bytes_.size() && !is_space(bytes_[pos_])) ++pos_;
        if (start == pos_) fail("unexpected end of header");
        return std::string(bytes_.begin() + static_cast<std::ptrdiff_t>(start),
                           bytes_.begin() + static_cast<std::ptrdiff_t>(pos_));
    }

    long positive_int() {
        skip_space_and_comments();
        const std::size_t start = pos_;
        const std::string tok = token();
        long value = 0;
        for (char c : tok) {
            if (c < '0' || c > '9') {
                pos_ = start;
                fail("expected a decimal integer, found '" + tok + "'");
            }
            value = value * 10 + (c - '0');
            if (value > (1L << 30)) {
                pos_ = start;
                fail("integer too large");
            }
        }
        return value;
    }

    // Exactly one whitespace byte separates the header from the payload.
    void single_space() {
        if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) fail("expected whitespace before payload");
        ++pos_;
    }

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }
    const std::string& origin() const { return origin_; }

private:
    std::span<const unsigned char> bytes_;
    std::string origin_;
    std::size_t pos_ = 0;
};

std::uint32_t load_le32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_le32(unsigned char* p, std::uint32_t v) {
    p[0] = static_cast<unsigned char>(v & 0xFFU);
    p[1] = static_cast<unsigned char>((v >> 8) & 0xFFU);
    p[2] = static_cast<unsigned char>((v >> 16) & 0xFFU);
    p[3] = static_cast<unsigned char>((v >> 24) & 0xFFU);
}

}  // namespace

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "' for reading");
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
    // Write to a sibling temporary and rename so readers never observe a partial file.
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error("short write to '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

Image decode_pgm(std::span<const unsigned char> bytes, const std::string& origin) {
    HeaderReader reader(bytes, origin);
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') reader.fail("bad magic, expected 'P5'");
    reader.token();
    const long width = reader.positive_int();
    const long height = reader.positive_int();
    const std::size_t maxval_offset = reader.pos();
    const long maxval = reader.positive_int();
    if (maxval != 255) {
        throw UnsupportedDepthError(origin + ": unsupported maxval " + std::to_string(maxval) +
                                    " at byte offset " + std::to_string(maxval_offset) + " (only 255 is supported)");
    }
    if (width == 0 || height == 0) reader.fail("zero image dimension");
    reader.single_space();
    const auto count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (reader.remaining() < count) {
        reader.fail("truncated payload: need " + std::to_string(count) + " bytes, have " +
                    std::to_string(reader.remaining()));
    }
    std::vector<std::uint8_t> pixels(bytes.begin() + static_cast<std::ptrdiff_t>(reader.pos()),
                                     bytes.begin() + static_cast<std::ptrdiff_t>(reader.pos() + count));
    return Image(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

std::vector<unsigned char> encode_pgm(const Image& image) {
    const std::string header =
        "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
    std::vector<unsigned char> out(header.begin(), header.end());
    out.insert(out.end(), image.pixels().begin(), image.pixels().end());
    return out;
}

Image load_image(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return decode_pgm(bytes, path.string());
}

void save_image(const std::filesystem::path& path, const Image& image) { write_file(path, encode_pgm(image)); }

PixelLabelMap load_mask(const std::filesystem::path& path) {
    const Image img = load_image(path);
    PixelLabelMap mask(img.width(), img.height());
    for (std::size_t i = 0; i < img.size(); ++i) mask.labels()[i] = img.pixels()[i] != 0 ? 1 : 0;
    return mask;
}

void save_mask(const std::filesystem::path& path, const PixelLabelMap& mask) {
    Image img(mask.width(), mask.height());
    for (std::size_t i = 0; i < mask.size(); ++i) img.pixels()[i] = mask.labels()[i] != 0 ? 255 : 0;
    save_image(path, img);
}

PlaneStack decode_planes(std::span<const unsigned char> bytes, const std::string& origin) {
    HeaderReader reader(bytes, origin);
    if (reader.token() != "FPLANES") {
        throw FormatError(origin + ": bad magic, expected 'FPLANES' at byte offset 0");
    }
    const long planes = reader.positive_int();
    const long width = reader.positive_int();
    const long height = reader.positive_int();
    if (planes == 0 || width == 0 || height == 0) reader.fail("zero dimension in FPLANES header");
    if (reader.pos() >= bytes.size() || bytes[reader.pos()] != '\n') reader.fail("expected newline after header");
    reader.single_space();
    const std::size_t count =
        static_cast<std::size_t>(planes) * static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    if (reader.remaining() != count * 4) {
        reader.fail("payload size mismatch: need " + std::to_string(count * 4) + " bytes, have " +
                    std::to_string(reader.remaining()));
    }
    std::vector<float> values(count);
    const unsigned char* p = bytes.data() + reader.pos();
    for (std::size_t i = 0; i < count; ++i) values[i] = std::bit_cast<float>(load_le32(p + 4 * i));
    return PlaneStack(static_cast<int>(planes), static_cast<int>(width), static_cast<int>(height),
                      std::move(values));
}

std::vector<unsigned char> encode_planes(const PlaneStack& planes) {
    const std::string header = "FPLANES " + std::to_string(planes.planes()) + " " + std::to_string(planes.width()) +
                               " " + std::to_string(planes.height()) + "\n";
    std::vector<unsigned char> out(header.begin(), header.end());
    const std::size_t start = out.size();
    out.resize(start + planes.values().size() * 4);
    for (std::size_t i = 0; i < planes.values().size(); ++i) {
        store_le32(out.data() + start + 4 * i, std::bit_cast<std::uint32_t>(planes.values()[i]));
    }
    return out;
}

PlaneStack load_planes(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return decode_planes(bytes, path.string());
}

void save_planes(const std::filesystem::path& path, const PlaneStack& planes) {
    write_file(path, encode_planes(planes));
}

void validate_prob_map(const PixelProbMap& prob, const std::string& origin) {
    if (prob.planes() != kNumClasses) {
        throw FormatError(origin + ": probability map must have 4 planes, found " + std::to_string(prob.planes()));
    }
    for (int y = 0; y < prob.height(); ++y) {
        for (int x = 0; x < prob.width(); ++x) {
            double sum = 0.0;
            for (int k = 0; k < kNumClasses; ++k) {
                const float v = prob.at(k, x, y);
                if (!(v >= -1e-6F && v <= 1.0F + 1e-6F)) {
                    std::ostringstream msg;
                    msg << origin << ": probability " << v << " out of range at class " << (k + 1) << ", pixel ("
                        << x << ", " << y << ")";
                    throw RangeError(msg.str());
                }
                sum += v;
            }
            if (std::abs(sum - 1.0) > 1e-4) {
                std::ostringstream msg;
                msg << origin << ": class probabilities sum to " << sum << " at pixel (" << x << ", " << y << ")";
                throw NormalizationError(msg.str());
            }
        }
    }
}

PixelProbMap load_prob_map(const std::filesystem::path& path) {
    PixelProbMap prob = load_planes(path);
    validate_prob_map(prob, path.string());
    return prob;
}

void save_prob_map(const std::filesystem::path& path, const PixelProbMap& prob) {
    validate_prob_map(prob, path.string());
    save_planes(path, prob);
}

PixelLabelMap load_index_map(const std::filesystem::path& path) {
    const PlaneStack planes = load_planes(path);
    if (planes.planes() != 1) throw FormatError(path.string() + ": index map must have exactly one plane");
    PixelLabelMap map(planes.width(), planes.height());
    for (std::size_t i = 0; i < map.size(); ++i) {
        const float v = planes.values()[i];
        if (!(v >= 0.0F) || v >= 16777216.0F || v != std::floor(v)) {
            throw RangeError(path.string() + ": non-integral or negative region index at element " +
                             std::to_string(i));
        }
        map.labels()[i] = static_cast<int>(v);
    }
    return map;
}

void save_index_map(const std::filesystem::path& path, const PixelLabelMap& map) {
    std::vector<float> values(map.size());
    for (std::size_t i = 0; i < map.size(); ++i) {
        if (map.labels()[i] < 0 || map.labels()[i] >= (1 << 24)) {
            throw RangeError("index " + std::to_string(map.labels()[i]) + " not exactly representable as float32");
        }
        values[i] = static_cast<float>(map.labels()[i]);
    }
    save_planes(path, PlaneStack(1, map.width(), map.height(), std::move(values)));
}

std::vector<double> load_region_vector(const std::filesystem::path& path) {
    const PlaneStack planes = load_planes(path);
    return std::vector<double>(planes.values().begin(), planes.values().end());
}

void save_region_vector(const std::filesystem::path& path, std::span<const double> values) {
    if (values.empty()) throw ContractError("cannot save an empty region vector");
    std::vector<float> data(values.begin(), values.end());
    save_planes(path, PlaneStack(1, static_cast<int>(values.size()), 1, std::move(data)));
}

}  // namespace tse::io
