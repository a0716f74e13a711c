#include "u2net/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <map>

namespace u2net {

namespace fs = std::filesystem;

namespace {

bool known_image(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext == ".png" || ext == ".pgm";
}

std::map<std::string, std::string> scan_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
    std::map<std::string, std::string> by_stem;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || !known_image(entry.path())) continue;
        by_stem[entry.path().stem().string()] = entry.path().string();
    }
    return by_stem;
}

} // namespace

PairingReport pair_dataset(const std::string& first_dir, const std::string& second_dir) {
    const auto first = scan_dir(first_dir);
    const auto second = scan_dir(second_dir);

    PairingReport report;
    for (const auto& [stem, path] : first) {
        auto it = second.find(stem);
        if (it != second.end())
            report.pairs.push_back({stem, path, it->second});
        else
            report.unmatched_first.push_back(stem);
    }
    for (const auto& [stem, path] : second)
        if (!first.contains(stem)) report.unmatched_second.push_back(stem);

    if (report.pairs.empty())
        throw DataError("no matching stems between " + first_dir + " and " + second_dir);
    return report;
}

template <typename T>
Tensor<T> image_to_tensor(const ImageRecord& rec) {
    std::vector<T> data(static_cast<std::size_t>(3 * rec.h * rec.w));
    for (std::int64_t c = 0; c < 3; ++c) {
        const std::int64_t src_c = rec.channels == 3 ? c : 0;
        for (std::int64_t i = 0; i < rec.h * rec.w; ++i)
            data[static_cast<std::size_t>(c * rec.h * rec.w + i)] =
                static_cast<T>(rec.pixels[static_cast<std::size_t>(src_c * rec.h * rec.w + i)]);
    }
    return Tensor<T>::from_data(Shape{1, 3, rec.h, rec.w}, std::move(data));
}

template <typename T>
GrayMap tensor_to_map(const Tensor<T>& map) {
    const std::int64_t h = map.dim(2), w = map.dim(3);
    GrayMap out(h, w);
    const auto v = map.values();
    for (std::int64_t i = 0; i < h * w; ++i)
        out.v[static_cast<std::size_t>(i)] = static_cast<double>(v[static_cast<std::size_t>(i)]);
    return out;
}

template <typename T>
std::vector<SamplePair<T>> load_training_pairs(const PairingReport& pairing) {
    std::vector<SamplePair<T>> out;
    out.reserve(pairing.pairs.size());
    for (const auto& p : pairing.pairs) {
        SamplePair<T> sample;
        sample.image = image_to_tensor<T>(load_image(p.first_path));
        GrayMap mask = load_mask(p.second_path);
        if (mask.h != sample.image.dim(2) || mask.w != sample.image.dim(3))
            throw DataError("image/mask size mismatch for stem " + p.stem);
        std::vector<T> mv(mask.v.size());
        for (std::size_t i = 0; i < mask.v.size(); ++i) mv[i] = static_cast<T>(mask.v[i]);
        sample.mask = Tensor<T>::from_data(Shape{1, 1, mask.h, mask.w}, std::move(mv));
        out.push_back(std::move(sample));
    }
    return out;
}

std::vector<std::pair<std::string, EvalPair>> load_eval_pairs(
    const PairingReport& pairing, std::vector<std::string>* notes) {
    std::vector<std::pair<std::string, EvalPair>> out;
    out.reserve(pairing.pairs.size());
    for (const auto& p : pairing.pairs) {
        EvalPair pair;
        pair.pred = load_map(p.first_path);
        pair.gt = load_mask(p.second_path);
        if (pair.pred.h != pair.gt.h || pair.pred.w != pair.gt.w) {
            if (notes)
                notes->push_back("resized prediction " + p.stem + " to ground-truth size");
            pair.pred = resize_map_bilinear(pair.pred, pair.gt.h, pair.gt.w);
        }
        out.emplace_back(p.stem, std::move(pair));
    }
    return out;
}

template Tensor<float> image_to_tensor<float>(const ImageRecord&);
template Tensor<double> image_to_tensor<double>(const ImageRecord&);
template GrayMap tensor_to_map<float>(const Tensor<float>&);
template GrayMap tensor_to_map<double>(const Tensor<double>&);
template std::vector<SamplePair<float>> load_training_pairs<float>(const PairingReport&);
template std::vector<SamplePair<double>> load_training_pairs<double>(const PairingReport&);

} // namespace u2net
