#include "arreid/png_io.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <vector>

#include <png.h>

#include "arreid/error.hpp"

namespace arreid {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports errors by longjmp; keep every C++ object outside this frame.
bool write_rows(std::FILE* file, std::size_t width, std::size_t height, int color_type, png_bytep* rows,
                png_text* chunks, int chunk_count) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (png == nullptr) return false;
    png_infop info = png_create_info_struct(png);
    if (info == nullptr || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_init_io(png, file);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    if (chunk_count > 0) png_set_text(png, info, chunks, chunk_count);
    png_write_info(png, info);
    png_write_image(png, rows);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

}  // namespace

Image read_png(const std::filesystem::path& path) {
    png_image decoded{};
    decoded.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&decoded, path.c_str())) {
        throw Error(ErrorKind::format, path.string() + ": " + decoded.message);
    }
    decoded.format = PNG_FORMAT_RGB;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(decoded));
    if (!png_image_finish_read(&decoded, nullptr, buffer.data(), 0, nullptr)) {
        const std::string message = decoded.message;
        png_image_free(&decoded);
        throw Error(ErrorKind::format, path.string() + ": " + message);
    }
    Image img({decoded.height, decoded.width}, 3);
    auto pixels = img.pixels();
    for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = buffer[i] / 255.0;
    return img;
}

void write_png(const std::filesystem::path& path, const Image& image, const std::map<std::string, std::string>& text) {
    if (image.channels() != 1 && image.channels() != 3) {
        throw Error(ErrorKind::format, "png output supports 1 or 3 channels");
    }
    const std::size_t row_len = image.width() * image.channels();
    std::vector<png_byte> bytes(row_len * image.height());
    const auto pixels = image.pixels();
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        bytes[i] = static_cast<png_byte>(std::lround(std::clamp(pixels[i], 0.0, 1.0) * 255.0));
    }
    std::vector<png_bytep> rows(image.height());
    for (std::size_t y = 0; y < image.height(); ++y) rows[y] = bytes.data() + y * row_len;

    std::vector<std::string> keys, values;
    for (const auto& [k, v] : text) {
        keys.push_back(k);
        values.push_back(v);
    }
    std::vector<png_text> chunks(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
        chunks[i].compression = PNG_TEXT_COMPRESSION_NONE;
        chunks[i].key = keys[i].data();
        chunks[i].text = values[i].data();
        chunks[i].text_length = values[i].size();
    }

    File file(std::fopen(path.c_str(), "wb"));
    if (!file) throw Error(ErrorKind::io, "cannot write image " + path.string());
    const int color = image.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
    if (!write_rows(file.get(), image.width(), image.height(), color, rows.data(), chunks.data(),
                    static_cast<int>(chunks.size()))) {
        throw Error(ErrorKind::io, "png encoding failed for " + path.string());
    }
}

}  // namespace arreid
