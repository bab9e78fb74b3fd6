#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tse {

inline constexpr int kNumClasses = 4;  // skin, fat, mammary, muscle

// 8-bit grayscale image, row-major.
class Image {
public:
    Image() = default;
    Image(int width, int height, std::uint8_t fill = 0);
    Image(int width, int height, std::vector<std::uint8_t> pixels);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return pixels_.size(); }

    std::uint8_t at(int x, int y) const { return pixels_[index(x, y)]; }
    std::uint8_t& at(int x, int y) { return pixels_[index(x, y)]; }
    std::span<const std::uint8_t> pixels() const { return pixels_; }
    std::span<std::uint8_t> pixels() { return pixels_; }

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    bool operator==(const Image&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

// Per-pixel integer labels. Used both for anatomy class maps (1..4), binary
// ground truth (0/1) and superpixel index maps (0..N-1).
class PixelLabelMap {
public:
    PixelLabelMap() = default;
    PixelLabelMap(int width, int height, int fill = 0);
    PixelLabelMap(int width, int height, std::vector<int> labels);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return labels_.size(); }

    int at(int x, int y) const { return labels_[index(x, y)]; }
    int& at(int x, int y) { return labels_[index(x, y)]; }
    std::span<const int> labels() const { return labels_; }
    std::span<int> labels() { return labels_; }

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    bool operator==(const PixelLabelMap&) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<int> labels_;
};

// Stack of float planes: plane-major, row-major within a plane. The anatomy
// probability map is the 4-plane case; per-region vectors are 1 x N planes.
class PlaneStack {
public:
    PlaneStack() = default;
    PlaneStack(int planes, int width, int height, float fill = 0.0F);
    PlaneStack(int planes, int width, int height, std::vector<float> values);

    int planes() const { return planes_; }
    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t plane_size() const {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }

    float at(int plane, int x, int y) const { return values_[offset(plane, x, y)]; }
    float& at(int plane, int x, int y) { return values_[offset(plane, x, y)]; }
    std::span<const float> plane(int p) const;
    std::span<float> plane(int p);
    std::span<const float> values() const { return values_; }

    bool operator==(const PlaneStack&) const = default;

private:
    std::size_t offset(int plane, int x, int y) const {
        return static_cast<std::size_t>(plane) * plane_size() +
               static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int planes_ = 0;
    int width_ = 0;
    int height_ = 0;
    std::vector<float> values_;
};

// Anatomy class probabilities per pixel; plane k holds class k+1.
using PixelProbMap = PlaneStack;

// Index of the most probable class (1..4) at pixel (x, y); ties go to the lower class.
int argmax_class(const PixelProbMap& prob, int x, int y);

// Pixel labelling by argmax_class over the whole map.
PixelLabelMap argmax_labels(const PixelProbMap& prob);

}  // namespace tse
