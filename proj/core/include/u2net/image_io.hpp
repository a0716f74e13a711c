#ifndef U2NET_IMAGE_IO_HPP
#define U2NET_IMAGE_IO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "u2net/metrics.hpp"

namespace u2net {

// Decoded image: channels x H x W planes in [0,1]. 3 channels for RGB
// sources, 1 for grayscale.
struct ImageRecord {
    std::string stem;
    std::string path;
    std::int64_t channels = 0;
    std::int64_t h = 0;
    std::int64_t w = 0;
    std::vector<float> pixels;

    float at(std::int64_t c, std::int64_t y, std::int64_t x) const {
        return pixels[static_cast<std::size_t>((c * h + y) * w + x)];
    }
};

// Reads an 8-bit PNG or binary PGM (P5). Values are scaled to [0,1].
ImageRecord load_image(const std::string& path);

// Ground-truth loader: grayscale (RGB collapsed by luma), binarized at 128.
GrayMap load_mask(const std::string& path);

// Probability map from a grayscale file, values in [0,1].
GrayMap load_map(const std::string& path);

// Writes round(P*255) as 8-bit grayscale; PNG or PGM by file extension.
void save_map(const GrayMap& map, const std::string& path);

} // namespace u2net

#endif
