// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <string>
#include <vector>

#include "support/fixtures.hpp"
#include "tse/eval.hpp"
#include "tse/optimizer.hpp"
#include "tse/pipeline.hpp"

using namespace tse;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(bool ok, const char* name, const std::string& detail) {
    std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Every energy trace produced below is checked at the end.
std::mutex trace_mu;
std::vector<std::vector<double>> traces;

void keep_trace(const SaliencyResult& r) {
    const std::lock_guard lock(trace_mu);
    traces.push_back(r.energy_trace);
}

struct Instance {
    UnaryMaps maps;
    PairwiseWeights w;
    BackgroundConstraint b;
    std::vector<double> raw_w;
};

Instance random_instance(testing::Rng& rng, int n) {
    std::vector<double> f, c, t;
    for (int i = 0; i < n; ++i) {
        f.push_back(testing::uniform(rng, 0.01, 1));
        c.push_back(testing::uniform(rng, 0.01, 1));
        t.push_back(testing::uniform(rng, 0.01, 1));
    }
    std::vector<double> w(static_cast<std::size_t>(n * n), 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double v = testing::uniform(rng, 0, 1);
            w[static_cast<std::size_t>(i * n + j)] = v;
            w[static_cast<std::size_t>(j * n + i)] = v;
        }
    }
    return {testing::unary(f, c, t), PairwiseWeights(n, w), BackgroundConstraint{std::vector<int>(static_cast<std::size_t>(n), 0)}, w};
}

void oracle_equivalence() {
    testing::Rng rng(101);
    const auto t0 = Clock::now();
    int bad = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = testing::uniform_int(rng, 1, 4);
        Instance in = random_instance(rng, n);
        // A quarter of the instances pin one coordinate, keeping at least one free.
        if (n > 1 && trial % 4 == 0) in.b.pinned[static_cast<std::size_t>(testing::uniform_int(rng, 0, n - 1))] = 1;
        const SaliencyResult a = solve(in.maps, in.w, in.b);
        const SaliencyResult o = brute_force_solve(in.maps, in.w, in.b, EnergyParams{}, 0.01);
        keep_trace(a);
        double diff = 0.0;
        for (int i = 0; i < n; ++i) diff = std::max(diff, std::abs(a.s[static_cast<std::size_t>(i)] - o.s[static_cast<std::size_t>(i)]));
        worst = std::max(worst, diff);
        bad += diff > 0.02;
    }
    const double secs = seconds_since(t0);
    report(bad == 0 && secs < 10.0, "oracle-equivalence", fmt("200 instances, max |diff| %.4f (<= 0.02), %.2f s (< 10 s)", worst, secs));
}

void closed_form() {
    testing::Rng rng(202);
    const EnergyParams p;
    int bad = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const UnaryMaps m = testing::unary({testing::uniform(rng, 0.001, 1)}, {testing::uniform(rng, 0.001, 1)}, {testing::uniform(rng, 0.001, 1)});
        const double k = p.alpha * std::log(m.center[0]) + p.beta * std::log(m.foreground[0]) - p.gamma * std::log(m.background[0]);
        const SaliencyResult r = solve(m, PairwiseWeights(1), BackgroundConstraint{{0}}, p);
        keep_trace(r);
        bad += r.s[0] != (k > 0 ? 1.0 : 0.0);
    }
    report(bad == 0, "closed-form-n1", fmt("1000 cases, %g mismatches", bad));
}

void gradient_check() {
    testing::Rng rng(303);
    const EnergyParams p;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Instance in = random_instance(rng, 8);
        std::vector<double> s;
        for (int i = 0; i < 8; ++i) s.push_back(testing::uniform(rng, 1e-3, 1 - 1e-3));
        const std::vector<double> g = energy_gradient(s, in.maps, in.w, p);
        for (int i = 0; i < 8; ++i) {
            const double h = 1e-5;
            std::vector<double> hi = s, lo = s;
            hi[static_cast<std::size_t>(i)] += h;
            lo[static_cast<std::size_t>(i)] -= h;
            const double fd = (energy(hi, in.maps, in.w, in.b, p) - energy(lo, in.maps, in.w, in.b, p)) / (2 * h);
            const double rel = std::abs(g[static_cast<std::size_t>(i)] - fd) / std::max(1.0, std::abs(fd));
            worst = std::max(worst, rel);
        }
    }
    report(worst <= 1e-4, "gradient-fd", fmt("100 points, N = 8, max rel error %.2e (<= 1e-4)", worst));
}

void spot_values() {
    RegionGraph g = testing::column_graph(4, {{0}, {1}});
    g.intensity = {0.2, 0.7};
    g.center = {{0.4, 0.4}, {0.4, 0.4}};
    const double w = pairwise_weights(g)(0, 1);
    RegionGraph gc = testing::column_graph(4, {{0}});
    gc.center = {{0.6, 0.5}};
    const double c = center_map({0.5, 0.5}, gc)[0];
    const double f = f_measure(0.8, 0.5, 0.3);
    const double e1 = std::exp(-1.0);
    const bool ok = std::abs(w - e1) <= 1e-6 && std::abs(c - e1) <= 1e-6 && std::abs(f - 0.52 / 0.74) <= 1e-6 && std::abs(f - 0.7027) < 5e-5;
    report(ok, "formula-spot-values", fmt("w %.7f  c %.7f  F %.7f", w, c, f));
}

void refinement_rules() {
    const RegionGraph g = testing::refine_grid_graph();
    const LayerDecomposition ncl = testing::refine_grid_ncl();
    int fixture_bad = 0;
    const auto cases = testing::refine_cases();
    for (const auto& rc : cases) fixture_bad += refine_layers(testing::labeling_from(rc.semantic), ncl, g).layer_of != rc.expected;
    testing::Rng rng(404);
    int fuzz_bad = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        const auto fc = testing::random_refine_case(rng);
        fuzz_bad += !testing::is_partition(refine_layers(fc.semantic, fc.ncl, fc.graph), fc.graph.count);
    }
    report(fixture_bad == 0 && fuzz_bad == 0, "refinement-rules",
           fmt("%g/%g fixture cases exact, %g partition violations in 10000 fuzz cases", static_cast<double>(cases.size()) - fixture_bad,
               static_cast<double>(cases.size()), fuzz_bad));
}

void end_to_end() {
    PipelineConfig cfg;
    cfg.phantom.count = 100;
    cfg.phantom.width = 256;
    cfg.phantom.height = 256;
    cfg.phantom.noise_sigma = 10.0;
    std::vector<EvalReport> reports(100);
    const auto t0 = Clock::now();
    parallel_for(100, worker_count(cfg), [&](std::size_t i) {
        const PhantomCase ph = generate_phantom(phantom_spec(cfg.phantom, static_cast<int>(i)));
        const SaliencyRun run = estimate_saliency(ph.image, ph.prob_map, cfg);
        keep_trace(run.result);
        reports[i] = evaluate(run.saliency, mask_image(ph.ground_truth), cfg.theta_sq);
    });
    const double secs = seconds_since(t0);
    const DatasetReport d = aggregate(std::vector<std::string>(100), reports);
    report(d.f_measure >= 0.70 && d.mae <= 0.10 && secs < 300.0, "end-to-end-phantoms",
           fmt("100 seeds, mean F %.4f (>= 0.70), mean MAE %.4f (<= 0.10), %.1f s (< 300 s)", d.f_measure, d.mae, secs));
}

void ablation_direction() {
    PipelineConfig cfg;
    for (const auto& [k, v] : std::vector<std::pair<const char*, const char*>>{
             {"phantom_count", "50"}, {"band_edges", "0.08,0.445,0.80"}, {"tumor_cy", "0.51"}, {"tumor_rx", "0.08"},
             {"tumor_ry", "0.045"}, {"jitter_axes", "0.003"}, {"jitter_center", "0.01"}, {"distractor", "true"},
             {"distractor_cy", "0.41"}, {"distractor_rx", "0.07"}, {"distractor_ry", "0.03"}, {"distractor_intensity", "0"}}) {
        set_value(cfg, k, v);
    }
    validate(cfg);
    std::vector<EvalReport> nc2(50), full(50);
    parallel_for(50, worker_count(cfg), [&](std::size_t i) {
        const PhantomCase ph = generate_phantom(phantom_spec(cfg.phantom, static_cast<int>(i)));
        const AnatomyStage a = analyze_anatomy(ph.image, ph.prob_map, cfg);
        const Image gt = mask_image(ph.ground_truth);
        PipelineConfig variant = cfg;
        variant.maps.background = BackgroundMode::NcSquared;
        const SaliencyRun r2 = finish_saliency(a, variant);
        variant.maps.background = BackgroundMode::Full;
        const SaliencyRun rf = finish_saliency(a, variant);
        keep_trace(r2.result);
        keep_trace(rf.result);
        nc2[i] = evaluate(r2.saliency, gt, cfg.theta_sq);
        full[i] = evaluate(rf.saliency, gt, cfg.theta_sq);
    });
    const double f2 = aggregate(std::vector<std::string>(50), nc2).f_measure;
    const double ff = aggregate(std::vector<std::string>(50), full).f_measure;
    report(ff - f2 > 0.0, "ablation-direction", fmt("50 phantoms with distractor, F bg_full %.4f - bg_nc2 %.4f = %+.4f (> 0)", ff, f2, ff - f2));
}

void metric_suite() {
    testing::Rng rng(505);
    int recall_bad = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int w = testing::uniform_int(rng, 1, 24);
        const int h = testing::uniform_int(rng, 1, 24);
        Image sm(w, h), gt(w, h);
        const double density = testing::uniform(rng, 0, 1);
        for (auto& p : sm.pixels()) p = static_cast<std::uint8_t>(testing::uniform_int(rng, 0, 255));
        for (auto& p : gt.pixels()) p = testing::uniform(rng, 0, 1) < density ? 255 : 0;
        const PrCurve c = pr_curve(sm, gt);
        for (int t = 1; t < kNumThresholds; ++t) recall_bad += c[static_cast<std::size_t>(t)].recall > c[static_cast<std::size_t>(t - 1)].recall;
    }
    int tri_bad = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = static_cast<std::size_t>(testing::uniform_int(rng, 1, 500));
        std::vector<double> a(n), b(n), c(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = testing::uniform(rng, 0, 1);
            b[i] = testing::uniform(rng, 0, 1);
            c[i] = testing::uniform(rng, 0, 1);
        }
        tri_bad += mae(a, c) > mae(a, b) + mae(b, c) + 1e-12;
    }
    report(recall_bad == 0 && tri_bad == 0, "metric-suite",
           fmt("recall monotonicity violations %g / 1000 pairs, triangle violations %g / 1000 triples", recall_bad, tri_bad));
}

void energy_monotonicity() {
    long steps = 0;
    long bad = 0;
    for (const auto& t : traces) {
        for (std::size_t k = 1; k < t.size(); ++k) {
            ++steps;
            bad += t[k] > t[k - 1] + 1e-9 * std::abs(t[k - 1]);
        }
    }
    report(bad == 0, "energy-monotonicity",
           fmt("%g solver runs, %g accepted steps, %g increases beyond 1e-9 relative", static_cast<double>(traces.size()),
               static_cast<double>(steps), static_cast<double>(bad)));
}

}  // namespace

int main() {
    try {
        oracle_equivalence();
        closed_form();
        gradient_check();
        spot_values();
        refinement_rules();
        end_to_end();
        ablation_direction();
        metric_suite();
        energy_monotonicity();
    } catch (const std::exception& e) {
        std::printf("FAIL  acceptance aborted: %s\n", e.what());
        return 2;
    }
    std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
    return failures == 0 ? 0 : 1;
}
