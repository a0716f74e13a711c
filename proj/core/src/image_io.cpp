#include "u2net/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <png.h>

#include "u2net/error.hpp"

namespace u2net {

namespace {

std::string lower_ext(const std::string& path) {
    std::string ext = std::filesystem::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

struct Raster {
    std::int64_t channels = 0; // 1 or 3
    std::int64_t h = 0;
    std::int64_t w = 0;
    std::vector<std::uint8_t> interleaved; // h*w*channels
};

struct PngReadCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    ~PngReadCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

Raster read_png(const std::string& path) {
    PngReadCloser ctx;
    ctx.fp = std::fopen(path.c_str(), "rb");
    if (!ctx.fp) throw DataError("cannot open image: " + path);

    unsigned char header[8];
    if (std::fread(header, 1, 8, ctx.fp) != 8 || png_sig_cmp(header, 0, 8) != 0)
        throw DataError("not a PNG file: " + path);

    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw DataError("libpng init failed for " + path);
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw DataError("libpng init failed for " + path);
    if (setjmp(png_jmpbuf(ctx.png))) throw DataError("corrupt PNG: " + path);

    png_init_io(ctx.png, ctx.fp);
    png_set_sig_bytes(ctx.png, 8);
    png_read_info(ctx.png, ctx.info);

    png_set_strip_16(ctx.png);
    png_set_strip_alpha(ctx.png);
    png_set_palette_to_rgb(ctx.png);
    png_set_expand_gray_1_2_4_to_8(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    const png_byte color = png_get_color_type(ctx.png, ctx.info);
    Raster img;
    img.w = static_cast<std::int64_t>(png_get_image_width(ctx.png, ctx.info));
    img.h = static_cast<std::int64_t>(png_get_image_height(ctx.png, ctx.info));
    if (color == PNG_COLOR_TYPE_GRAY) img.channels = 1;
    else if (color == PNG_COLOR_TYPE_RGB) img.channels = 3;
    else throw DataError("unsupported PNG color type in " + path);

    const std::size_t rowbytes = png_get_rowbytes(ctx.png, ctx.info);
    if (rowbytes != static_cast<std::size_t>(img.w * img.channels))
        throw DataError("unexpected PNG row size in " + path);

    img.interleaved.resize(static_cast<std::size_t>(img.h) * rowbytes);
    std::vector<png_bytep> rows(static_cast<std::size_t>(img.h));
    for (std::int64_t y = 0; y < img.h; ++y)
        rows[static_cast<std::size_t>(y)] = img.interleaved.data() + y * static_cast<std::int64_t>(rowbytes);
    png_read_image(ctx.png, rows.data());
    png_read_end(ctx.png, nullptr);
    return img;
}

void write_png_gray(const std::string& path, std::int64_t h, std::int64_t w,
                    const std::vector<std::uint8_t>& data) {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw DataError("cannot open for writing: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        std::fclose(fp);
        throw DataError("libpng init failed for " + path);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw DataError("PNG write failed: " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (std::int64_t y = 0; y < h; ++y)
        rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(data.data() + y * w);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

Raster read_pgm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open image: " + path);
    std::string magic;
    is >> magic;
    if (magic != "P5") throw DataError("unsupported PGM variant '" + magic + "' in " + path);

    auto next_int = [&is, &path]() {
        // Skip whitespace and '#' comment lines between header fields.
        int c = is.get();
        while (c != EOF && (std::isspace(c) || c == '#')) {
            if (c == '#') {
                while (c != EOF && c != '\n') c = is.get();
            }
            c = is.get();
        }
        if (c == EOF) throw DataError("truncated PGM header in " + path);
        std::int64_t value = 0;
        while (c != EOF && std::isdigit(c)) {
            value = value * 10 + (c - '0');
            c = is.get();
        }
        return value;
    };
    Raster img;
    img.channels = 1;
    img.w = next_int();
    img.h = next_int();
    const std::int64_t maxval = next_int();
    if (img.w < 1 || img.h < 1 || maxval != 255)
        throw DataError("unsupported PGM header in " + path);
    img.interleaved.resize(static_cast<std::size_t>(img.h * img.w));
    is.read(reinterpret_cast<char*>(img.interleaved.data()),
            static_cast<std::streamsize>(img.interleaved.size()));
    if (static_cast<std::size_t>(is.gcount()) != img.interleaved.size())
        throw DataError("truncated PGM payload in " + path);
    return img;
}

void write_pgm(const std::string& path, std::int64_t h, std::int64_t w,
               const std::vector<std::uint8_t>& data) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open for writing: " + path);
    os << "P5\n" << w << " " << h << "\n255\n";
    os.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(data.size()));
    if (!os) throw DataError("PGM write failed: " + path);
}

Raster read_raster(const std::string& path) {
    const std::string ext = lower_ext(path);
    if (ext == ".png") return read_png(path);
    if (ext == ".pgm") return read_pgm(path);
    throw DataError("unsupported image format '" + ext + "': " + path);
}

GrayMap to_gray(const Raster& img) {
    GrayMap map(img.h, img.w);
    for (std::int64_t i = 0; i < img.h * img.w; ++i) {
        double v;
        if (img.channels == 1) {
            v = img.interleaved[static_cast<std::size_t>(i)];
        } else {
            const auto* px = &img.interleaved[static_cast<std::size_t>(3 * i)];
            v = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
        }
        map.v[static_cast<std::size_t>(i)] = v / 255.0;
    }
    return map;
}

} // namespace

ImageRecord load_image(const std::string& path) {
    const Raster img = read_raster(path);
    ImageRecord rec;
    rec.stem = std::filesystem::path(path).stem().string();
    rec.path = path;
    rec.channels = img.channels;
    rec.h = img.h;
    rec.w = img.w;
    rec.pixels.resize(static_cast<std::size_t>(img.channels * img.h * img.w));
    for (std::int64_t y = 0; y < img.h; ++y)
        for (std::int64_t x = 0; x < img.w; ++x)
            for (std::int64_t c = 0; c < img.channels; ++c)
                rec.pixels[static_cast<std::size_t>((c * img.h + y) * img.w + x)] =
                    static_cast<float>(
                        img.interleaved[static_cast<std::size_t>((y * img.w + x) * img.channels + c)]) /
                    255.0f;
    return rec;
}

GrayMap load_mask(const std::string& path) {
    GrayMap gray = to_gray(read_raster(path));
    for (double& v : gray.v) v = v * 255.0 >= 128.0 ? 1.0 : 0.0;
    return gray;
}

GrayMap load_map(const std::string& path) {
    return to_gray(read_raster(path));
}

void save_map(const GrayMap& map, const std::string& path) {
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(map.count()));
    for (std::int64_t i = 0; i < map.count(); ++i) {
        const double v = std::clamp(map.v[static_cast<std::size_t>(i)], 0.0, 1.0);
        bytes[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(std::llround(v * 255.0));
    }
    const std::string ext = lower_ext(path);
    if (ext == ".png") write_png_gray(path, map.h, map.w, bytes);
    else if (ext == ".pgm") write_pgm(path, map.h, map.w, bytes);
    else throw DataError("unsupported output format '" + ext + "': " + path);
}

} // namespace u2net
