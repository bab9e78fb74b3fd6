#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tse/image.hpp"

namespace tse {

inline constexpr int kNumThresholds = 256;

struct PrecisionRecall {
    double precision = 0.0;
    double recall = 0.0;
};

using PrCurve = std::array<PrecisionRecall, kNumThresholds>;

// Pixel is 1 iff value > threshold.
Image binarize(const Image& sm, int threshold);

// Masks treat any nonzero pixel as set. Empty prediction gives precision 0,
// empty ground truth gives recall 0.
PrecisionRecall precision_recall(const Image& sm_bin, const Image& gt);

double f_measure(double precision, double recall, double theta_sq = 0.3);

// Mean absolute difference of two maps valued in [0, 1].
double mae(std::span<const double> a, std::span<const double> b);
// Saliency rescaled by 1/255 against a binary mask.
double mae(const Image& sm, const Image& gt);

// One entry per threshold 0..255, computed from a 256-bin histogram.
PrCurve pr_curve(const Image& sm, const Image& gt);

// min(255, round(2 * mean(sm))).
int adaptive_threshold(const Image& sm);

struct EvalReport {
    PrCurve curve{};
    int threshold = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f_measure = 0.0;
    double mae = 0.0;
};

EvalReport evaluate(const Image& sm, const Image& gt, double theta_sq = 0.3);

struct DatasetReport {
    std::vector<std::string> ids;
    std::vector<EvalReport> images;
    PrCurve curve{};  // pointwise mean over images
    double precision = 0.0;
    double recall = 0.0;
    double f_measure = 0.0;  // mean of per-image F
    double mae = 0.0;
};

DatasetReport aggregate(std::vector<std::string> ids, std::vector<EvalReport> images);

// CSV with header row; summary ends with a `mean` row.
std::string pr_curve_csv(const PrCurve& curve);
std::string summary_csv(const DatasetReport& report);
void write_eval_csv(const std::filesystem::path& dir, const DatasetReport& report);

}  // namespace tse
