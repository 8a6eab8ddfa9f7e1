#include "zstyle/image_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace zstyle {

namespace {

struct ByteReader {
    std::string bytes;
    std::size_t pos = 0;
    std::string path;

    [[noreturn]] void fail(const std::string& what) const {
        std::ostringstream msg;
        msg << path << ": " << what << " at byte " << pos;
        throw IoError(msg.str());
    }

    int peek() const { return pos < bytes.size() ? static_cast<unsigned char>(bytes[pos]) : -1; }
    int get() { return pos < bytes.size() ? static_cast<unsigned char>(bytes[pos++]) : -1; }

    void skip_space_and_comments() {
        for (;;) {
            int c = peek();
            if (c == '#') {
                while (c != -1 && c != '\n') c = get();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                get();
            } else {
                return;
            }
        }
    }

    unsigned parse_uint() {
        skip_space_and_comments();
        if (peek() < '0' || peek() > '9') fail("expected an unsigned integer");
        unsigned long v = 0;
        while (peek() >= '0' && peek() <= '9') {
            v = v * 10 + static_cast<unsigned long>(get() - '0');
            if (v > 1u << 24) fail("header value out of range");
        }
        return static_cast<unsigned>(v);
    }
};

}  // namespace

Tensor read_image(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for reading: " + path);
    ByteReader r;
    r.path = path;
    r.bytes.assign(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());

    const int m0 = r.get(), m1 = r.get();
    std::size_t channels = 0;
    if (m0 == 'P' && m1 == '5') channels = 1;
    else if (m0 == 'P' && m1 == '6') channels = 3;
    else { r.pos = 0; r.fail("unsupported magic (want P5 or P6)"); }

    const unsigned width = r.parse_uint();
    const unsigned height = r.parse_uint();
    const unsigned maxval = r.parse_uint();
    if (maxval != 255) r.fail("unsupported maxval (want 255)");
    // Exactly one whitespace byte separates the header from the payload.
    const int sep = r.get();
    if (sep != ' ' && sep != '\t' && sep != '\r' && sep != '\n') r.fail("missing header separator");

    const std::size_t need = static_cast<std::size_t>(width) * height * channels;
    if (r.bytes.size() - r.pos < need) {
        r.pos = r.bytes.size();
        r.fail("truncated payload");
    }
    Tensor img({height, width, channels});
    for (std::size_t i = 0; i < need; ++i)
        img[i] = static_cast<unsigned char>(r.bytes[r.pos + i]) / 255.0;
    return img;
}

void write_image(const std::string& path, const Tensor& image) {
    if (image.rank() != 3) throw ShapeError("image tensors are rank-3 [H, W, C]");
    const std::size_t c = image.extent(2);
    if (c != 1 && c != 3) throw ShapeError("image channel count must be 1 or 3");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << (c == 1 ? "P5" : "P6") << '\n'
      << image.extent(1) << ' ' << image.extent(0) << '\n'
      << "255\n";
    std::string payload(image.size(), '\0');
    for (std::size_t i = 0; i < image.size(); ++i) {
        const double v = std::min(1.0, std::max(0.0, image[i]));
        payload[i] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
    }
    f.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!f) throw IoError("failed writing image: " + path);
}

}  // namespace zstyle
