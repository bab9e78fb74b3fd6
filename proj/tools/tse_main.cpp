// Command-line front end: phantom, saliency, eval, ablate, sweep.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tse/config.hpp"
#include "tse/error.hpp"
#include "tse/pipeline.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "key = value configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out, "output directory (overrides output_dir)");
    cmd->add_option("--seed", opts.seed, "phantom seed (overrides phantom_seed)");
    cmd->add_option("--set", opts.overrides, "extra key=value override, repeatable");
}

tse::PipelineConfig resolve(const CommonOptions& opts) {
    tse::PipelineConfig config = opts.config_path.empty() ? tse::PipelineConfig{} : tse::load_config(opts.config_path);
    for (const std::string& kv : opts.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw tse::ConfigError("--set expects key=value, got '" + kv + "'");
        tse::set_value(config, std::string_view(kv).substr(0, eq), std::string_view(kv).substr(eq + 1));
    }
    if (!opts.out.empty()) config.output_dir = opts.out;
    if (opts.seed) config.phantom.seed = *opts.seed;
    tse::validate(config);
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tumor saliency estimation on breast-ultrasound-like images"};
    app.require_subcommand(1);

    CommonOptions phantom_opts;
    CommonOptions saliency_opts;
    CommonOptions eval_opts;
    CommonOptions ablate_opts;
    CommonOptions sweep_opts;
    std::string saliency_dir;
    std::string gt_dir;

    auto* phantom = app.add_subcommand("phantom", "write a phantom series (images/, prob/, gt/)");
    add_common(phantom, phantom_opts);
    auto* saliency = app.add_subcommand("saliency", "estimate saliency for an image or a directory");
    add_common(saliency, saliency_opts);
    auto* eval = app.add_subcommand("eval", "score saliency maps against ground truth");
    add_common(eval, eval_opts);
    eval->add_option("saliency_dir", saliency_dir, "directory of saliency PGMs")->required();
    eval->add_option("gt_dir", gt_dir, "directory of ground-truth PGMs")->required();
    auto* ablate = app.add_subcommand("ablate", "compare bg_nc2 and bg_full on the phantom series");
    add_common(ablate, ablate_opts);
    auto* sweep = app.add_subcommand("sweep", "grid over alpha, beta, gamma on the phantom series");
    add_common(sweep, sweep_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (phantom->parsed()) {
            const auto config = resolve(phantom_opts);
            tse::run_phantoms(config);
            std::printf("wrote %d phantoms to %s\n", config.phantom.count, config.output_dir.c_str());
        } else if (saliency->parsed()) {
            tse::run_saliency(resolve(saliency_opts));
        } else if (eval->parsed()) {
            const auto report = tse::run_eval(resolve(eval_opts), saliency_dir, gt_dir);
            std::printf("images %zu  precision %.4f  recall %.4f  F %.4f  MAE %.4f\n", report.images.size(),
                        report.precision, report.recall, report.f_measure, report.mae);
        } else if (ablate->parsed()) {
            const auto report = tse::run_ablation(resolve(ablate_opts));
            std::printf("bg_nc2  F %.4f  MAE %.4f\nbg_full F %.4f  MAE %.4f\n", report.bg_nc2.f_measure,
                        report.bg_nc2.mae, report.bg_full.f_measure, report.bg_full.mae);
        } else if (sweep->parsed()) {
            const auto points = tse::run_sweep(resolve(sweep_opts));
            const auto best = std::max_element(points.begin(), points.end(),
                                               [](const auto& a, const auto& b) { return a.f_measure < b.f_measure; });
            std::printf("best alpha %g beta %g gamma %g  F %.4f  MAE %.4f\n", best->alpha, best->beta, best->gamma,
                        best->f_measure, best->mae);
        }
    } catch (const tse::Error& e) {
        std::fprintf(stderr, "tse: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "tse: unexpected failure: %s\n", e.what());
        return 3;
    }
    return 0;
}
