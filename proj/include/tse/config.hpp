#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tse/anatomy.hpp"
#include "tse/maps.hpp"
#include "tse/optimizer.hpp"
#include "tse/phantom.hpp"
#include "tse/superpixel.hpp"

namespace tse {

// Phantom series used by the phantom, ablate and sweep subcommands. Phantom i
// uses seed + i; tumor geometry is jittered around the nominal ellipse by
// amounts drawn from that seed.
struct PhantomSeries {
    int count = 10;
    std::uint64_t seed = 0;
    int width = 256;
    int height = 256;
    double noise_sigma = 10.0;
    double prob_blur = 3.0;
    std::array<double, 3> band_edges{0.10, 0.25, 0.70};
    std::array<double, 4> band_intensity{200.0, 120.0, 140.0, 90.0};
    double tumor_intensity = 40.0;
    Ellipse tumor{0.5, 0.5, 0.08, 0.06};
    double jitter_center = 0.02;  // uniform +/- on cx and cy
    double jitter_axes = 0.01;    // uniform +/- on rx and ry
    bool distractor = false;
    Ellipse distractor_shape{0.5, 0.175, 0.07, 0.05};
    double distractor_intensity = 40.0;
};

struct PipelineConfig {
    EnergyParams energy;
    SuperpixelParams superpixel;
    NclParams ncl;
    FlagThresholds flags;
    MapParams maps;
    double theta_sq = 0.3;

    // Inputs: a file or a directory of files matched by stem.
    std::string image;
    std::string prob_map;
    std::string superpixels;  // optional precomputed index map(s)
    std::string output_dir = "out";

    PhantomSeries phantom;

    std::vector<double> sweep_alpha{0.0, 5.0, 10.0};
    std::vector<double> sweep_beta{1.0, 51.0, 101.0, 151.0};
    std::vector<double> sweep_gamma{1.0, 6.0, 11.0, 16.0, 21.0};

    int threads = 0;  // 0: hardware concurrency, further capped by TSE_THREADS
};

// Parses `key = value` lines. Blank lines and lines starting with '#' are
// ignored; unknown keys, duplicate keys and out-of-range values throw
// ConfigError naming the key and line.
PipelineConfig parse_config(std::string_view text, const std::string& origin = "<config>");
PipelineConfig load_config(const std::filesystem::path& path);

// Every key with its current value, in a form parse_config reads back exactly.
std::string to_text(const PipelineConfig& config);

// Checks numeric invariants (weights >= 0, bandwidths > 0, ...).
void validate(const PipelineConfig& config);

// Sets one key as if it appeared in a config file; does not re-validate.
void set_value(PipelineConfig& config, std::string_view key, std::string_view value);

std::vector<std::string> config_keys();

}  // namespace tse
