#include "tse/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string_view>

#include "tse/error.hpp"
#include "tse/io.hpp"

namespace tse {

namespace {

void check_same_shape(const Image& a, const Image& b, const char* op) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw ContractError(std::string(op) + ": dimension mismatch " + std::to_string(a.width()) + "x" +
                            std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                            std::to_string(b.height()));
    }
}

PrecisionRecall ratios(std::size_t hit, std::size_t predicted, std::size_t actual) {
    PrecisionRecall pr;
    pr.precision = predicted == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(predicted);
    pr.recall = actual == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(actual);
    return pr;
}

void append_number(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    out += buf;
}

}  // namespace

Image binarize(const Image& sm, int threshold) {
    Image out(sm.width(), sm.height());
    const auto src = sm.pixels();
    auto dst = out.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > threshold ? 1 : 0;
    return out;
}

PrecisionRecall precision_recall(const Image& sm_bin, const Image& gt) {
    check_same_shape(sm_bin, gt, "precision_recall");
    std::size_t hit = 0;
    std::size_t predicted = 0;
    std::size_t actual = 0;
    const auto s = sm_bin.pixels();
    const auto g = gt.pixels();
    for (std::size_t i = 0; i < s.size(); ++i) {
        const bool p = s[i] != 0;
        const bool a = g[i] != 0;
        predicted += p;
        actual += a;
        hit += p && a;
    }
    return ratios(hit, predicted, actual);
}

double f_measure(double precision, double recall, double theta_sq) {
    const double denom = theta_sq * precision + recall;
    if (denom <= 0.0) return 0.0;
    return (1.0 + theta_sq) * precision * recall / denom;
}

double mae(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ContractError("mae: maps differ in size");
    if (a.empty()) throw ContractError("mae: empty maps");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
    return sum / static_cast<double>(a.size());
}

double mae(const Image& sm, const Image& gt) {
    check_same_shape(sm, gt, "mae");
    const auto s = sm.pixels();
    const auto g = gt.pixels();
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) sum += std::abs(s[i] / 255.0 - (g[i] != 0 ? 1.0 : 0.0));
    return sum / static_cast<double>(s.size());
}

PrCurve pr_curve(const Image& sm, const Image& gt) {
    check_same_shape(sm, gt, "pr_curve");
    std::array<std::size_t, kNumThresholds> all{};
    std::array<std::size_t, kNumThresholds> pos{};
    std::size_t actual = 0;
    const auto s = sm.pixels();
    const auto g = gt.pixels();
    for (std::size_t i = 0; i < s.size(); ++i) {
        ++all[s[i]];
        if (g[i] != 0) {
            ++pos[s[i]];
            ++actual;
        }
    }
    // Pixels above threshold t are the suffix sums from bin t + 1.
    PrCurve curve{};
    std::size_t predicted = 0;
    std::size_t hit = 0;
    for (int t = kNumThresholds - 1; t >= 0; --t) {
        curve[static_cast<std::size_t>(t)] = ratios(hit, predicted, actual);
        predicted += all[static_cast<std::size_t>(t)];
        hit += pos[static_cast<std::size_t>(t)];
    }
    return curve;
}

int adaptive_threshold(const Image& sm) {
    if (sm.size() == 0) return 0;
    std::uint64_t sum = 0;
    for (std::uint8_t v : sm.pixels()) sum += v;
    const double mean = static_cast<double>(sum) / static_cast<double>(sm.size());
    return static_cast<int>(std::min<long>(255, std::lround(2.0 * mean)));
}

EvalReport evaluate(const Image& sm, const Image& gt, double theta_sq) {
    EvalReport r;
    r.curve = pr_curve(sm, gt);
    r.threshold = adaptive_threshold(sm);
    const PrecisionRecall pr = precision_recall(binarize(sm, r.threshold), gt);
    r.precision = pr.precision;
    r.recall = pr.recall;
    r.f_measure = f_measure(pr.precision, pr.recall, theta_sq);
    r.mae = mae(sm, gt);
    return r;
}

DatasetReport aggregate(std::vector<std::string> ids, std::vector<EvalReport> images) {
    if (ids.size() != images.size()) throw ContractError("aggregate: id and report counts differ");
    if (images.empty()) throw ContractError("aggregate: no images");
    DatasetReport d;
    const double n = static_cast<double>(images.size());
    for (const EvalReport& r : images) {
        for (std::size_t t = 0; t < r.curve.size(); ++t) {
            d.curve[t].precision += r.curve[t].precision;
            d.curve[t].recall += r.curve[t].recall;
        }
        d.precision += r.precision;
        d.recall += r.recall;
        d.f_measure += r.f_measure;
        d.mae += r.mae;
    }
    for (auto& p : d.curve) {
        p.precision /= n;
        p.recall /= n;
    }
    d.precision /= n;
    d.recall /= n;
    d.f_measure /= n;
    d.mae /= n;
    d.ids = std::move(ids);
    d.images = std::move(images);
    return d;
}

std::string pr_curve_csv(const PrCurve& curve) {
    std::string out = "threshold,precision,recall\n";
    for (std::size_t t = 0; t < curve.size(); ++t) {
        out += std::to_string(t);
        out += ',';
        append_number(out, curve[t].precision);
        out += ',';
        append_number(out, curve[t].recall);
        out += '\n';
    }
    return out;
}

std::string summary_csv(const DatasetReport& report) {
    std::string out = "image,precision,recall,f_measure,mae\n";
    auto row = [&out](std::string_view id, double p, double r, double f, double m) {
        out += id;
        for (double v : {p, r, f, m}) {
            out += ',';
            append_number(out, v);
        }
        out += '\n';
    };
    for (std::size_t i = 0; i < report.images.size(); ++i) {
        const EvalReport& r = report.images[i];
        row(report.ids[i], r.precision, r.recall, r.f_measure, r.mae);
    }
    row("mean", report.precision, report.recall, report.f_measure, report.mae);
    return out;
}

void write_eval_csv(const std::filesystem::path& dir, const DatasetReport& report) {
    std::filesystem::create_directories(dir);
    auto put = [&dir](const char* name, const std::string& text) {
        io::write_file(dir / name, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
    };
    put("summary.csv", summary_csv(report));
    put("pr_curve.csv", pr_curve_csv(report.curve));
}

}  // namespace tse
