#include "synthetic.hpp"

#include <cmath>
#include <filesystem>

#include "u2net/image_io.hpp"
#include "u2net/rng.hpp"

namespace u2net::testsupport {

namespace {

bool inside_shape(int shape, double ny, double nx) {
    // Coordinates normalized to [-1, 1] around the image center.
    const double r = std::sqrt(ny * ny + nx * nx);
    switch (shape % 8) {
    case 0: return r < 0.55;
    case 1: return std::abs(ny) < 0.5 && std::abs(nx) < 0.5;
    case 2: return std::abs(ny) + std::abs(nx) < 0.7;
    case 3: return r > 0.3 && r < 0.65;
    case 4: return std::abs(ny) < 0.25;
    case 5: return ny > -0.5 && ny < 0.5 && std::abs(nx) < (ny + 0.5) * 0.7;
    case 6: {
        const double d1 = std::hypot(ny + 0.35, nx + 0.35);
        const double d2 = std::hypot(ny - 0.35, nx - 0.35);
        return d1 < 0.3 || d2 < 0.3;
    }
    default: return std::abs(ny) < 0.18 || std::abs(nx) < 0.18;
    }
}

} // namespace

std::vector<ShapeImage> make_shape_set(int count, std::int64_t size, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ShapeImage> set;
    set.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        ShapeImage img;
        img.size = size;
        img.mask = GrayMap(size, size);
        img.rgb.resize(static_cast<std::size_t>(3 * size * size));

        const float fg[3] = {static_cast<float>(rng.uniform(0.7, 1.0)),
                             static_cast<float>(rng.uniform(0.0, 0.3)),
                             static_cast<float>(rng.uniform(0.3, 0.7))};
        const float bg[3] = {static_cast<float>(rng.uniform(0.0, 0.2)),
                             static_cast<float>(rng.uniform(0.7, 1.0)),
                             static_cast<float>(rng.uniform(0.0, 0.2))};
        const double off_y = rng.uniform(-0.15, 0.15);
        const double off_x = rng.uniform(-0.15, 0.15);

        for (std::int64_t y = 0; y < size; ++y) {
            for (std::int64_t x = 0; x < size; ++x) {
                const double ny = (2.0 * static_cast<double>(y) / static_cast<double>(size - 1)) -
                                  1.0 - off_y;
                const double nx = (2.0 * static_cast<double>(x) / static_cast<double>(size - 1)) -
                                  1.0 - off_x;
                const bool in = inside_shape(i, ny, nx);
                img.mask.at(y, x) = in ? 1.0 : 0.0;
                const float noise = static_cast<float>(rng.uniform(-0.03, 0.03));
                for (int c = 0; c < 3; ++c) {
                    float v = (in ? fg[c] : bg[c]) + noise;
                    img.rgb[static_cast<std::size_t>((c * size + y) * size + x)] =
                        std::min(1.0f, std::max(0.0f, v));
                }
            }
        }
        set.push_back(std::move(img));
    }
    return set;
}

template <typename T>
std::vector<SamplePair<T>> to_sample_pairs(const std::vector<ShapeImage>& images) {
    std::vector<SamplePair<T>> out;
    out.reserve(images.size());
    for (const auto& img : images) {
        SamplePair<T> s;
        std::vector<T> rgb(img.rgb.size());
        for (std::size_t i = 0; i < img.rgb.size(); ++i) rgb[i] = static_cast<T>(img.rgb[i]);
        s.image = Tensor<T>::from_data(Shape{1, 3, img.size, img.size}, std::move(rgb));
        std::vector<T> m(img.mask.v.size());
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = static_cast<T>(img.mask.v[i]);
        s.mask = Tensor<T>::from_data(Shape{1, 1, img.size, img.size}, std::move(m));
        out.push_back(std::move(s));
    }
    return out;
}

void write_shape_set(const std::vector<ShapeImage>& images, const std::string& image_dir,
                     const std::string& mask_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(image_dir);
    fs::create_directories(mask_dir);
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto& img = images[i];
        const std::string stem = "shape_" + std::to_string(i);
        // Images are written as grayscale luminance; the loader replicates
        // grayscale to three channels.
        GrayMap gray(img.size, img.size);
        for (std::int64_t p = 0; p < img.size * img.size; ++p) {
            const double r = img.rgb[static_cast<std::size_t>(p)];
            const double g = img.rgb[static_cast<std::size_t>(img.size * img.size + p)];
            const double b = img.rgb[static_cast<std::size_t>(2 * img.size * img.size + p)];
            gray.v[static_cast<std::size_t>(p)] = 0.299 * r + 0.587 * g + 0.114 * b;
        }
        save_map(gray, image_dir + "/" + stem + ".png");
        save_map(images[i].mask, mask_dir + "/" + stem + ".png");
    }
}

GrayMap random_map(std::int64_t h, std::int64_t w, std::uint64_t seed) {
    Rng rng(seed);
    GrayMap m(h, w);
    for (auto& v : m.v) v = rng.uniform(0.0, 1.0);
    return m;
}

GrayMap random_mask(std::int64_t h, std::int64_t w, std::uint64_t seed, double fg_prob) {
    Rng rng(seed);
    GrayMap m(h, w);
    for (auto& v : m.v) v = rng.bernoulli(fg_prob) ? 1.0 : 0.0;
    return m;
}

template std::vector<SamplePair<float>> to_sample_pairs<float>(const std::vector<ShapeImage>&);
template std::vector<SamplePair<double>> to_sample_pairs<double>(const std::vector<ShapeImage>&);

} // namespace u2net::testsupport
