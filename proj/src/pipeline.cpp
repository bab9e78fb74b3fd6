#include "tse/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "tse/error.hpp"
#include "tse/io.hpp"

namespace tse {

namespace fs = std::filesystem;

namespace {

// Re-raises a pipeline error with the stage name prepended, keeping its type.
template <class F>
auto stage(const char* name, F&& body) -> decltype(body()) {
    const std::string prefix = std::string(name) + ": ";
    try {
        return body();
    } catch (const UnsupportedDepthError& e) {
        throw UnsupportedDepthError(prefix + e.what());
    } catch (const FormatError& e) {
        throw FormatError(prefix + e.what());
    } catch (const RangeError& e) {
        throw RangeError(prefix + e.what());
    } catch (const NormalizationError& e) {
        throw NormalizationError(prefix + e.what());
    } catch (const ContractError& e) {
        throw ContractError(prefix + e.what());
    } catch (const GeometryError& e) {
        throw GeometryError(prefix + e.what());
    } catch (const ConfigError& e) {
        throw ConfigError(prefix + e.what());
    } catch (const Error& e) {
        throw Error(prefix + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    io::write_file(path, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

std::vector<double> to_double(std::span<const int> v) { return {v.begin(), v.end()}; }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

// Sorted stems of the *.pgm files directly inside dir.
std::vector<std::string> pgm_names(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw ContractError("'" + dir.string() + "' is not a directory");
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".pgm") names.push_back(entry.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    return names;
}

Image label_image(std::span<const int> labels, int width, int height, int scale) {
    Image img(width, height);
    for (std::size_t i = 0; i < labels.size(); ++i) img.pixels()[i] = static_cast<std::uint8_t>(std::clamp(labels[i] * scale, 0, 255));
    return img;
}

struct PhantomRun {
    PhantomCase phantom;
    AnatomyStage anatomy;
};

PhantomRun analyze_phantom(const PipelineConfig& config, int index) {
    PhantomRun run;
    run.phantom = stage("phantom", [&] { return generate_phantom(phantom_spec(config.phantom, index)); });
    run.anatomy = analyze_anatomy(run.phantom.image, run.phantom.prob_map, config);
    return run;
}

}  // namespace

AnatomyStage analyze_anatomy(const Image& image, const PixelProbMap& prob, const PipelineConfig& config,
                             const SuperpixelMap* superpixels) {
    if (prob.width() != image.width() || prob.height() != image.height()) {
        throw ContractError("input: prob_map is " + std::to_string(prob.width()) + "x" + std::to_string(prob.height()) +
                            " but the image is " + std::to_string(image.width()) + "x" + std::to_string(image.height()));
    }
    AnatomyStage a;
    a.spmap = stage("superpixel", [&] { return superpixels ? *superpixels : segment(image, config.superpixel); });
    a.graph = stage("region_graph", [&] { return build_region_graph(image, a.spmap); });
    a.region_labels = stage("semantic", [&] { return regionize_labels(prob, a.spmap); });
    a.semantic = semantic_labeling(a.region_labels);
    a.ncl = stage("ncl", [&] { return decompose_nc_layers(a.graph, config.ncl); });
    a.refined = stage("refine", [&] { return refine_layers(a.semantic, a.ncl, a.graph, config.maps.validity_fraction); });
    a.flags = stage("layer_flags", [&] { return classify_layers(a.refined, a.graph, config.flags); });
    return a;
}

SaliencyRun finish_saliency(AnatomyStage anatomy, const PipelineConfig& config) {
    SaliencyRun run;
    run.anatomy = std::move(anatomy);
    const AnatomyStage& a = run.anatomy;
    run.maps = stage("maps", [&] { return build_unary_maps(a.graph, a.refined, a.flags, config.maps); });
    run.constraint = build_constraint(a.refined);
    run.result = stage("optimizer", [&] {
        const PairwiseWeights w = pairwise_weights(a.graph, config.energy);
        return solve(run.maps, w, run.constraint, config.energy);
    });
    run.saliency = render_saliency(a.spmap, run.result.s);
    return run;
}

SaliencyRun estimate_saliency(const Image& image, const PixelProbMap& prob, const PipelineConfig& config,
                              const SuperpixelMap* superpixels) {
    return finish_saliency(analyze_anatomy(image, prob, config, superpixels), config);
}

Image render_saliency(const SuperpixelMap& spmap, std::span<const double> s) {
    if (s.size() != static_cast<std::size_t>(spmap.count)) throw ContractError("render_saliency: region count mismatch");
    const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    const double range = *hi - *lo;
    std::vector<std::uint8_t> level(s.size(), 0);
    if (range > 0.0) {
        for (std::size_t i = 0; i < s.size(); ++i) level[i] = static_cast<std::uint8_t>(std::lround(255.0 * (s[i] - *lo) / range));
    }
    return Image(spmap.width(), spmap.height(), paint_regions(spmap, level));
}

Image render_unit_map(const SuperpixelMap& spmap, std::span<const double> v) {
    if (v.size() != static_cast<std::size_t>(spmap.count)) throw ContractError("render_unit_map: region count mismatch");
    std::vector<std::uint8_t> level(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) level[i] = static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v[i], 0.0, 1.0)));
    return Image(spmap.width(), spmap.height(), paint_regions(spmap, level));
}

void write_saliency_artifacts(const fs::path& dir, const SaliencyRun& run, const PipelineConfig& config) {
    fs::create_directories(dir);
    const AnatomyStage& a = run.anatomy;
    const int n = a.graph.count;

    io::save_index_map(dir / "superpixels.fplanes", a.spmap.region_of);
    io::save_region_vector(dir / "sa.fplanes", to_double(a.semantic.layer_of));
    io::save_region_vector(dir / "nsa.fplanes", to_double(a.refined.layer_of));
    PlaneStack sp(kNumClasses, n, 1);
    for (int k = 0; k < kNumClasses; ++k) {
        for (int i = 0; i < n; ++i) sp.at(k, i, 0) = static_cast<float>(a.region_labels.prob[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)]);
    }
    io::save_planes(dir / "sp.fplanes", sp);
    io::save_region_vector(dir / "F.fplanes", run.maps.foreground);
    io::save_region_vector(dir / "C.fplanes", run.maps.center);
    io::save_region_vector(dir / "T.fplanes", run.maps.background);
    io::save_region_vector(dir / "nc.fplanes", run.maps.nc);
    io::save_region_vector(dir / "S.fplanes", run.result.s);

    io::save_image(dir / "saliency.pgm", run.saliency);
    io::save_image(dir / "F.pgm", render_unit_map(a.spmap, run.maps.foreground));
    io::save_image(dir / "C.pgm", render_unit_map(a.spmap, run.maps.center));
    io::save_image(dir / "T.pgm", render_unit_map(a.spmap, run.maps.background));
    const std::vector<int> nsa_pixels = paint_regions(a.spmap, a.refined.layer_of);
    io::save_image(dir / "nsa.pgm", label_image(nsa_pixels, a.spmap.width(), a.spmap.height(), 60));

    std::string manifest = to_text(config);
    manifest += "# run\n";
    manifest += "regions = " + std::to_string(n) + "\n";
    manifest += "ncl_layers = " + std::to_string(a.ncl.count()) + "\n";
    for (int k = 0; k < kNumClasses; ++k) manifest += std::string("flag_") + std::to_string(k + 1) + " = " + to_string(a.flags[static_cast<std::size_t>(k)]) + "\n";
    manifest += "adaptive_center = " + fmt(run.maps.adaptive_center[0]) + "," + fmt(run.maps.adaptive_center[1]) + "\n";
    manifest += "pinned = " + std::to_string(n - run.constraint.free_count()) + "\n";
    manifest += "iterations = " + std::to_string(run.result.iterations) + "\n";
    manifest += std::string("converged = ") + (run.result.converged ? "true" : "false") + "\n";
    manifest += "energy = " + fmt(run.result.energy_trace.back()) + "\n";
    write_text(dir / "manifest.txt", manifest);
}

unsigned worker_count(const PipelineConfig& config) {
    unsigned n = config.threads > 0 ? static_cast<unsigned>(config.threads) : std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("TSE_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) n = std::min(n, static_cast<unsigned>(cap));
    }
    return std::max(1u, n);
}

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(n);
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < std::min<std::size_t>(workers, n); ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

PhantomSpec phantom_spec(const PhantomSeries& series, int index) {
    PhantomSpec spec;
    spec.width = series.width;
    spec.height = series.height;
    spec.noise_sigma = series.noise_sigma;
    spec.prob_blur = series.prob_blur;
    spec.band_edges = series.band_edges;
    spec.band_intensity = series.band_intensity;
    spec.tumor_intensity = series.tumor_intensity;
    spec.seed = series.seed + static_cast<std::uint64_t>(index);
    // Geometry draws use their own stream so pixel noise stays independent of them.
    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    spec.tumor = series.tumor;
    spec.tumor.cx += series.jitter_center * unit(rng);
    spec.tumor.cy += series.jitter_center * unit(rng);
    spec.tumor.rx += series.jitter_axes * unit(rng);
    spec.tumor.ry += series.jitter_axes * unit(rng);
    if (series.distractor) spec.distractors.push_back({series.distractor_shape, series.distractor_intensity});
    return spec;
}

std::string phantom_id(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "phantom_%04d", index);
    return buf;
}

Image mask_image(const PixelLabelMap& mask) { return label_image(mask.labels(), mask.width(), mask.height(), 255); }

void run_phantoms(const PipelineConfig& config) {
    const fs::path out(config.output_dir);
    for (const char* sub : {"images", "prob", "gt"}) fs::create_directories(out / sub);
    parallel_for(static_cast<std::size_t>(config.phantom.count), worker_count(config), [&](std::size_t i) {
        const int index = static_cast<int>(i);
        const PhantomCase ph = stage("phantom", [&] { return generate_phantom(phantom_spec(config.phantom, index)); });
        const std::string id = phantom_id(index);
        io::save_image(out / "images" / (id + ".pgm"), ph.image);
        io::save_prob_map(out / "prob" / (id + ".fplanes"), ph.prob_map);
        io::save_mask(out / "gt" / (id + ".pgm"), ph.ground_truth);
    });
    write_text(out / "manifest.txt", to_text(config));
}

void run_saliency(const PipelineConfig& config) {
    if (config.image.empty()) throw ConfigError("config key 'image' is required for saliency");
    if (config.prob_map.empty()) throw ConfigError("config key 'prob_map' is required for saliency");
    const fs::path image_path(config.image);
    const fs::path prob_path(config.prob_map);
    const fs::path out(config.output_dir);
    if (!fs::exists(image_path)) throw ConfigError("config key 'image': '" + config.image + "' does not exist");
    if (!fs::exists(prob_path)) throw ConfigError("config key 'prob_map': '" + config.prob_map + "' does not exist");
    if (!config.superpixels.empty() && !fs::exists(config.superpixels)) {
        throw ConfigError("config key 'superpixels': '" + config.superpixels + "' does not exist");
    }

    auto one = [&](const fs::path& img, const fs::path& prob, const fs::path& sp, const fs::path& dir) {
        const Image image = stage("input", [&] { return io::load_image(img); });
        const PixelProbMap pm = stage("input", [&] { return io::load_prob_map(prob); });
        std::optional<SuperpixelMap> pre;
        if (!sp.empty()) pre = stage("input", [&] { return make_superpixel_map(io::load_index_map(sp)); });
        const SaliencyRun run = estimate_saliency(image, pm, config, pre ? &*pre : nullptr);
        write_saliency_artifacts(dir, run, config);
        return run.saliency;
    };

    if (!fs::is_directory(image_path)) {
        one(image_path, prob_path, config.superpixels, out);
        return;
    }
    const std::vector<std::string> names = pgm_names(image_path);
    if (names.empty()) throw ContractError("input: no *.pgm files in '" + config.image + "'");
    fs::create_directories(out / "saliency");
    parallel_for(names.size(), worker_count(config), [&](std::size_t i) {
        const std::string stem = fs::path(names[i]).stem().string();
        const fs::path prob = prob_path / (stem + ".fplanes");
        if (!fs::exists(prob)) throw ConfigError("config key 'prob_map': missing '" + prob.string() + "'");
        const fs::path sp = config.superpixels.empty() ? fs::path() : fs::path(config.superpixels) / (stem + ".fplanes");
        const Image sal = one(image_path / names[i], prob, sp, out / stem);
        io::save_image(out / "saliency" / names[i], sal);
    });
}

DatasetReport run_eval(const PipelineConfig& config, const fs::path& saliency_dir, const fs::path& gt_dir) {
    const std::vector<std::string> sal = pgm_names(saliency_dir);
    const std::vector<std::string> gt = pgm_names(gt_dir);
    if (sal.empty() && gt.empty()) throw ContractError("eval: both directories are empty");
    if (sal != gt) {
        std::vector<std::string> only_sal;
        std::vector<std::string> only_gt;
        std::set_difference(sal.begin(), sal.end(), gt.begin(), gt.end(), std::back_inserter(only_sal));
        std::set_difference(gt.begin(), gt.end(), sal.begin(), sal.end(), std::back_inserter(only_gt));
        std::string msg = "eval: file sets differ;";
        for (const auto& s : only_sal) msg += " saliency-only " + s;
        for (const auto& s : only_gt) msg += " gt-only " + s;
        throw ContractError(msg);
    }
    std::vector<EvalReport> reports(sal.size());
    parallel_for(sal.size(), worker_count(config), [&](std::size_t i) {
        const Image sm = io::load_image(saliency_dir / sal[i]);
        const Image g = io::load_image(gt_dir / gt[i]);
        reports[i] = stage("eval", [&] { return evaluate(sm, g, config.theta_sq); });
    });
    std::vector<std::string> ids;
    for (const auto& s : sal) ids.push_back(fs::path(s).stem().string());
    DatasetReport report = aggregate(std::move(ids), std::move(reports));
    write_eval_csv(config.output_dir, report);
    return report;
}

AblationReport run_ablation(const PipelineConfig& config) {
    const auto n = static_cast<std::size_t>(config.phantom.count);
    std::vector<EvalReport> nc2(n);
    std::vector<EvalReport> full(n);
    parallel_for(n, worker_count(config), [&](std::size_t i) {
        PhantomRun pr = analyze_phantom(config, static_cast<int>(i));
        const Image gt = mask_image(pr.phantom.ground_truth);
        PipelineConfig variant = config;
        variant.maps.background = BackgroundMode::NcSquared;
        nc2[i] = evaluate(finish_saliency(pr.anatomy, variant).saliency, gt, config.theta_sq);
        variant.maps.background = BackgroundMode::Full;
        full[i] = evaluate(finish_saliency(std::move(pr.anatomy), variant).saliency, gt, config.theta_sq);
    });
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back(phantom_id(static_cast<int>(i)));
    AblationReport report{aggregate(ids, std::move(nc2)), aggregate(ids, std::move(full))};

    const fs::path out(config.output_dir);
    write_eval_csv(out / "bg_nc2", report.bg_nc2);
    write_eval_csv(out / "bg_full", report.bg_full);
    write_text(out / "ablation.csv", ablation_csv(report));
    write_text(out / "manifest.txt", to_text(config));
    return report;
}

std::string ablation_csv(const AblationReport& report) {
    std::string out = "metric,bg_nc2,bg_full\n";
    const DatasetReport& a = report.bg_nc2;
    const DatasetReport& b = report.bg_full;
    out += "precision," + fmt(a.precision) + "," + fmt(b.precision) + "\n";
    out += "recall," + fmt(a.recall) + "," + fmt(b.recall) + "\n";
    out += "f_measure," + fmt(a.f_measure) + "," + fmt(b.f_measure) + "\n";
    out += "mae," + fmt(a.mae) + "," + fmt(b.mae) + "\n";
    return out;
}

std::vector<SweepPoint> run_sweep(const PipelineConfig& config) {
    std::vector<SweepPoint> grid;
    for (double a : config.sweep_alpha) {
        for (double b : config.sweep_beta) {
            for (double g : config.sweep_gamma) {
                if (a < 0.0 || b < 0.0 || g < 0.0) throw ConfigError("sweep: grid values must be >= 0");
                grid.push_back({a, b, g});
            }
        }
    }
    const auto n = static_cast<std::size_t>(config.phantom.count);
    // scores[i][k]: phantom i at grid point k.
    std::vector<std::vector<EvalReport>> scores(n, std::vector<EvalReport>(grid.size()));
    parallel_for(n, worker_count(config), [&](std::size_t i) {
        const PhantomRun pr = analyze_phantom(config, static_cast<int>(i));
        const Image gt = mask_image(pr.phantom.ground_truth);
        const AnatomyStage& a = pr.anatomy;
        const UnaryMaps maps = stage("maps", [&] { return build_unary_maps(a.graph, a.refined, a.flags, config.maps); });
        const BackgroundConstraint b = build_constraint(a.refined);
        const PairwiseWeights w = pairwise_weights(a.graph, config.energy);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            EnergyParams p = config.energy;
            p.alpha = grid[k].alpha;
            p.beta = grid[k].beta;
            p.gamma = grid[k].gamma;
            const SaliencyResult r = stage("optimizer", [&] { return solve(maps, w, b, p); });
            scores[i][k] = evaluate(render_saliency(a.spmap, r.s), gt, config.theta_sq);
        }
    });

    std::string csv = "alpha,beta,gamma,precision,recall,f_measure,mae\n";
    for (std::size_t k = 0; k < grid.size(); ++k) {
        SweepPoint& pt = grid[k];
        for (std::size_t i = 0; i < n; ++i) {
            pt.precision += scores[i][k].precision;
            pt.recall += scores[i][k].recall;
            pt.f_measure += scores[i][k].f_measure;
            pt.mae += scores[i][k].mae;
        }
        pt.precision /= static_cast<double>(n);
        pt.recall /= static_cast<double>(n);
        pt.f_measure /= static_cast<double>(n);
        pt.mae /= static_cast<double>(n);
        csv += fmt(pt.alpha) + "," + fmt(pt.beta) + "," + fmt(pt.gamma) + "," + fmt(pt.precision) + "," +
               fmt(pt.recall) + "," + fmt(pt.f_measure) + "," + fmt(pt.mae) + "\n";
    }
    const fs::path out(config.output_dir);
    fs::create_directories(out);
    write_text(out / "sweep.csv", csv);
    write_text(out / "manifest.txt", to_text(config));
    return grid;
}

}  // namespace tse
