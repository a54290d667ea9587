#include "histreg/io.hpp"

#include <png.h>

#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

#include "histreg/errors.hpp"

namespace histreg::io {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    for (auto &f : fields) {
        while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) {
            f.remove_prefix(1);
        }
        while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) {
            f.remove_suffix(1);
        }
    }
    return fields;
}

// Splits on '\n', dropping a trailing '\r' per line. Line numbers are 1-based.
std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            nl = text.size();
        }
        std::string_view line = text.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        lines.push_back(line);
        start = nl + 1;
    }
    return lines;
}

bool is_blank(std::string_view line) {
    return line.find_first_not_of(" \t") == std::string_view::npos;
}

double parse_number(std::string_view field, std::size_t line) {
    if (!field.empty() && field.front() == '+') {
        field.remove_prefix(1);
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size()) {
        throw MalformedRow(line, "non-numeric field '" + std::string(field) + "'");
    }
    if (!std::isfinite(v)) {
        throw MalformedRow(line, "non-finite value '" + std::string(field) + "'");
    }
    return v;
}

void put_u32(std::string &out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
    }
}

std::uint32_t get_u32(const std::string &in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    }
    return v;
}

void put_f32(std::string &out, float f) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, &f, sizeof bits);
    put_u32(out, bits);
}

float get_f32(const std::string &in, std::size_t at) {
    const std::uint32_t bits = get_u32(in, at);
    float f = 0.0F;
    std::memcpy(&f, &bits, sizeof f);
    return f;
}

constexpr std::string_view kMatchHeader = "x_src,y_src,x_dst,y_dst";

}  // namespace

std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

std::string read_text_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoFailure("cannot open '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoFailure("cannot open '" + path.string() + "' for writing");
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
        throw IoFailure("write failed for '" + path.string() + "'");
    }
}

MatchSet parse_match_csv(const std::string &text) {
    const auto lines = split_lines(text);
    MatchSet set;
    if (lines.empty()) {
        return set;
    }

    const auto header = split_fields(lines.front());
    const bool has_provenance = header.size() == 5 && header[4] == "provenance";
    std::string joined;
    for (std::size_t i = 0; i < std::min<std::size_t>(4, header.size()); ++i) {
        joined += (i ? "," : "") + std::string(header[i]);
    }
    if (joined != kMatchHeader || (header.size() != 4 && !has_provenance)) {
        throw MalformedRow(1, "expected header 'x_src,y_src,x_dst,y_dst[,provenance]'");
    }
    const std::size_t arity = header.size();

    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (is_blank(lines[i])) {
            continue;
        }
        const std::size_t line_no = i + 1;
        const auto fields = split_fields(lines[i]);
        if (fields.size() != arity) {
            throw MalformedRow(line_no, "expected " + std::to_string(arity) + " fields, got " +
                                            std::to_string(fields.size()));
        }
        MatchPair pair{{parse_number(fields[0], line_no), parse_number(fields[1], line_no)},
                       {parse_number(fields[2], line_no), parse_number(fields[3], line_no)}};
        std::string tag = kUnknownProvenance;
        if (has_provenance && !fields[4].empty()) {
            tag = std::string(fields[4]);
        }
        set.add(pair, std::move(tag));
    }
    return set;
}

MatchSet read_match_csv(const std::filesystem::path &path) {
    return parse_match_csv(read_text_file(path));
}

std::string format_match_csv(const MatchSet &set) {
    std::string out(kMatchHeader);
    out += ",provenance\n";
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto &tag = set.provenance(i);
        if (tag.find_first_of(",\r\n") != std::string::npos) {
            throw DataError("provenance tag '" + tag + "' contains a separator");
        }
        const auto &p = set[i];
        out += format_double(p.src.x) + ',' + format_double(p.src.y) + ',' +
               format_double(p.dst.x) + ',' + format_double(p.dst.y) + ',' + tag + '\n';
    }
    return out;
}

void write_match_csv(const MatchSet &set, const std::filesystem::path &path) {
    write_text_file(path, format_match_csv(set));
}

LandmarkSet parse_landmarks_csv(const std::string &text) {
    const auto lines = split_lines(text);
    LandmarkSet landmarks;
    if (lines.empty()) {
        return landmarks;
    }
    const auto header = split_fields(lines.front());
    if (header.size() != 3 || !header[0].empty() || header[1] != "X" || header[2] != "Y") {
        throw MalformedRow(1, "expected header ',X,Y'");
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (is_blank(lines[i])) {
            continue;
        }
        const std::size_t line_no = i + 1;
        const auto fields = split_fields(lines[i]);
        if (fields.size() != 3) {
            throw MalformedRow(line_no, "expected 3 fields, got " + std::to_string(fields.size()));
        }
        std::size_t index = 0;
        const auto [ptr, ec] =
            std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), index);
        if (fields[0].empty() || ec != std::errc{} || ptr != fields[0].data() + fields[0].size()) {
            throw MalformedRow(line_no, "bad landmark index '" + std::string(fields[0]) + "'");
        }
        if (index != landmarks.size()) {
            throw NonContiguousIndex("line " + std::to_string(line_no) + ": expected index " +
                                     std::to_string(landmarks.size()) + ", got " +
                                     std::to_string(index));
        }
        landmarks.push_back({parse_number(fields[1], line_no), parse_number(fields[2], line_no)});
    }
    return landmarks;
}

LandmarkSet read_landmarks_csv(const std::filesystem::path &path) {
    return parse_landmarks_csv(read_text_file(path));
}

void write_landmarks_csv(const LandmarkSet &landmarks, const std::filesystem::path &path) {
    std::string out = ",X,Y\n";
    for (std::size_t i = 0; i < landmarks.size(); ++i) {
        out += std::to_string(i) + ',' + format_double(landmarks[i].x) + ',' +
               format_double(landmarks[i].y) + '\n';
    }
    write_text_file(path, out);
}

std::string encode_dvf(const DvfRaster &raster) {
    if (raster.field.size() != raster.meta.pixel_count()) {
        throw SizeMismatch("DVF field length does not match width*height");
    }
    std::string out = "DVF1";
    out.reserve(12 + raster.field.size() * 8);
    put_u32(out, raster.meta.width);
    put_u32(out, raster.meta.height);
    for (const auto &v : raster.field) {
        put_f32(out, v[0]);
        put_f32(out, v[1]);
    }
    return out;
}

DvfRaster decode_dvf(const std::string &bytes) {
    if (bytes.size() < 4 || bytes.compare(0, 4, "DVF1") != 0) {
        throw BadMagic("not a DVF1 raster");
    }
    if (bytes.size() < 12) {
        throw TruncatedPayload("DVF1 header truncated");
    }
    const ImageMeta meta{get_u32(bytes, 4), get_u32(bytes, 8)};
    const std::size_t expected = 12 + meta.pixel_count() * 8;
    if (bytes.size() < expected) {
        throw TruncatedPayload("DVF1 payload truncated: expected " + std::to_string(expected) +
                               " bytes, got " + std::to_string(bytes.size()));
    }
    if (bytes.size() > expected) {
        throw DecodeFailure("DVF1 payload has trailing bytes");
    }
    DvfRaster raster(meta);
    std::size_t at = 12;
    for (auto &v : raster.field) {
        v[0] = get_f32(bytes, at);
        v[1] = get_f32(bytes, at + 4);
        if (!std::isfinite(v[0]) || !std::isfinite(v[1])) {
            throw DecodeFailure("DVF1 contains non-finite displacement");
        }
        at += 8;
    }
    return raster;
}

DvfRaster read_dvf(const std::filesystem::path &path) { return decode_dvf(read_text_file(path)); }

void write_dvf(const DvfRaster &raster, const std::filesystem::path &path) {
    write_text_file(path, encode_dvf(raster));
}

ImageBuffer read_image(const std::filesystem::path &path) {
    if (!std::filesystem::exists(path)) {
        throw IoFailure("cannot open '" + path.string() + "'");
    }
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (png_image_begin_read_from_file(&image, path.string().c_str()) == 0) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw DecodeFailure("'" + path.string() + "': " + msg);
    }
    if ((image.format & PNG_FORMAT_FLAG_LINEAR) != 0) {
        png_image_free(&image);
        throw UnsupportedFormat("'" + path.string() + "': 16-bit PNG is not supported");
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

    ImageBuffer out(ImageMeta{image.width, image.height}, color ? 3 : 1);
    if (png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr) == 0) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw DecodeFailure("'" + path.string() + "': " + msg);
    }
    return out;
}

void write_image(const ImageBuffer &image, const std::filesystem::path &path) {
    if (image.channels != 1 && image.channels != 3) {
        throw UnsupportedFormat("only 1- or 3-channel images can be written");
    }
    if (image.pixels.size() != image.meta.pixel_count() * static_cast<std::size_t>(image.channels)) {
        throw SizeMismatch("pixel buffer does not match image dimensions");
    }
    png_image png;
    std::memset(&png, 0, sizeof png);
    png.version = PNG_IMAGE_VERSION;
    png.width = image.meta.width;
    png.height = image.meta.height;
    png.format = image.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (png_image_write_to_file(&png, path.string().c_str(), 0, image.pixels.data(), 0, nullptr) ==
        0) {
        const std::string msg = png.message;
        png_image_free(&png);
        throw IoFailure("cannot write '" + path.string() + "': " + msg);
    }
}

}  // namespace histreg::io
