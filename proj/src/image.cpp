#include "tse/image.hpp"

#include <string>
#include <utility>

#include "tse/error.hpp"

namespace tse {

namespace {

void check_dims(int width, int height) {
    if (width <= 0 || height <= 0) {
        throw ContractError("image dimensions must be positive, got " + std::to_string(width) + "x" +
                            std::to_string(height));
    }
}

}  // namespace

Image::Image(int width, int height, std::uint8_t fill)
    : width_(width), height_(height) {
    check_dims(width, height);
    pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

Image::Image(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    check_dims(width, height);
    if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw ContractError("pixel buffer size does not match " + std::to_string(width) + "x" +
                            std::to_string(height));
    }
}

PixelLabelMap::PixelLabelMap(int width, int height, int fill)
    : width_(width), height_(height) {
    check_dims(width, height);
    labels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

PixelLabelMap::PixelLabelMap(int width, int height, std::vector<int> labels)
    : width_(width), height_(height), labels_(std::move(labels)) {
    check_dims(width, height);
    if (labels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw ContractError("label buffer size does not match " + std::to_string(width) + "x" +
                            std::to_string(height));
    }
}

PlaneStack::PlaneStack(int planes, int width, int height, float fill)
    : planes_(planes), width_(width), height_(height) {
    check_dims(width, height);
    if (planes <= 0) throw ContractError("plane count must be positive");
    values_.assign(static_cast<std::size_t>(planes) * plane_size(), fill);
}

PlaneStack::PlaneStack(int planes, int width, int height, std::vector<float> values)
    : planes_(planes), width_(width), height_(height), values_(std::move(values)) {
    check_dims(width, height);
    if (planes <= 0) throw ContractError("plane count must be positive");
    if (values_.size() != static_cast<std::size_t>(planes) * plane_size()) {
        throw ContractError("plane buffer size does not match header");
    }
}

std::span<const float> PlaneStack::plane(int p) const {
    return std::span<const float>(values_).subspan(static_cast<std::size_t>(p) * plane_size(), plane_size());
}

std::span<float> PlaneStack::plane(int p) {
    return std::span<float>(values_).subspan(static_cast<std::size_t>(p) * plane_size(), plane_size());
}

int argmax_class(const PixelProbMap& prob, int x, int y) {
    int best = 0;
    float best_value = prob.at(0, x, y);
    for (int k = 1; k < prob.planes(); ++k) {
        const float v = prob.at(k, x, y);
        if (v > best_value) {
            best_value = v;
            best = k;
        }
    }
    return best + 1;
}

PixelLabelMap argmax_labels(const PixelProbMap& prob) {
    PixelLabelMap labels(prob.width(), prob.height());
    for (int y = 0; y < prob.height(); ++y)
        for (int x = 0; x < prob.width(); ++x) labels.at(x, y) = argmax_class(prob, x, y);
    return labels;
}

}  // namespace tse
