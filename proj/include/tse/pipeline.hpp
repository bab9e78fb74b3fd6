#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tse/anatomy.hpp"
#include "tse/config.hpp"
#include "tse/eval.hpp"
#include "tse/maps.hpp"
#include "tse/optimizer.hpp"
#include "tse/phantom.hpp"
#include "tse/superpixel.hpp"

namespace tse {

// Everything up to the unary maps; independent of the energy weights.
struct AnatomyStage {
    SuperpixelMap spmap;
    RegionGraph graph;
    RegionLabels region_labels;
    AnatomyLabeling semantic;
    LayerDecomposition ncl;
    AnatomyLabeling refined;
    std::array<LayerFlag, kNumClasses> flags{};
};

struct SaliencyRun {
    AnatomyStage anatomy;
    UnaryMaps maps;
    BackgroundConstraint constraint;
    SaliencyResult result;
    Image saliency;  // rendered, min-max scaled to [0, 255]
};

// Segmentation (or the supplied index map), region graph, semantic labels,
// non-semantic layers, refinement and layer flags. Errors are re-raised with
// the failing stage name prefixed.
AnatomyStage analyze_anatomy(const Image& image, const PixelProbMap& prob, const PipelineConfig& config,
                             const SuperpixelMap* superpixels = nullptr);

// Unary maps, constraint, solve and rendering on top of a finished anatomy stage.
SaliencyRun finish_saliency(AnatomyStage anatomy, const PipelineConfig& config);

SaliencyRun estimate_saliency(const Image& image, const PixelProbMap& prob, const PipelineConfig& config,
                              const SuperpixelMap* superpixels = nullptr);

// Region values scaled so the smallest maps to 0 and the largest to 255; a
// constant vector renders black.
Image render_saliency(const SuperpixelMap& spmap, std::span<const double> s);
// Values in [0, 1] scaled by 255.
Image render_unit_map(const SuperpixelMap& spmap, std::span<const double> v);

// Writes region vectors, index map, rendered PGMs and manifest.txt into dir.
void write_saliency_artifacts(const std::filesystem::path& dir, const SaliencyRun& run, const PipelineConfig& config);

// Number of workers: config.threads (or hardware concurrency), capped by TSE_THREADS.
unsigned worker_count(const PipelineConfig& config);

// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
// (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

// Phantom i of the configured series.
PhantomSpec phantom_spec(const PhantomSeries& series, int index);
std::string phantom_id(int index);
Image mask_image(const PixelLabelMap& mask);  // 0/1 labels -> 0/255 pixels

// `phantom`: images/, prob/, gt/ and manifest.txt under output_dir.
void run_phantoms(const PipelineConfig& config);

// `saliency`: a single image, or every *.pgm of a directory with prob maps
// matched by stem. Directory runs write <out>/<stem>/ plus <out>/saliency/<stem>.pgm.
void run_saliency(const PipelineConfig& config);

// `eval`: matches *.pgm by file name; throws before writing anything when the
// sets differ or are empty.
DatasetReport run_eval(const PipelineConfig& config, const std::filesystem::path& saliency_dir,
                       const std::filesystem::path& gt_dir);

struct AblationReport {
    DatasetReport bg_nc2;
    DatasetReport bg_full;
};

// `ablate`: both background variants on the phantom series.
AblationReport run_ablation(const PipelineConfig& config);
std::string ablation_csv(const AblationReport& report);

struct SweepPoint {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f_measure = 0.0;
    double mae = 0.0;
};

// `sweep`: the alpha x beta x gamma grid on the phantom series, written to sweep.csv.
std::vector<SweepPoint> run_sweep(const PipelineConfig& config);

}  // namespace tse
