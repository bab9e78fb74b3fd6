#include "tse/config.hpp"

#include <charconv>
#include <cstdio>
#include <functional>
#include <set>
#include <algorithm>
#include <string>

#include "tse/error.hpp"
#include "tse/io.hpp"

namespace tse {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(std::string_view s) {
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) throw ConfigError("expected a number, got '" + std::string(s) + "'");
    return v;
}

template <class Int>
Int parse_int(std::string_view s) {
    Int v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) throw ConfigError("expected an integer, got '" + std::string(s) + "'");
    return v;
}

bool parse_bool(std::string_view s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("expected true or false, got '" + std::string(s) + "'");
}

std::vector<double> parse_list(std::string_view s) {
    std::vector<double> out;
    while (!s.empty()) {
        const auto comma = s.find(',');
        out.push_back(parse_double(trim(s.substr(0, comma))));
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    if (out.empty()) throw ConfigError("expected a comma-separated list of numbers");
    return out;
}

struct Field {
    std::string key;
    std::function<void(PipelineConfig&, std::string_view)> set;
    std::function<std::string(const PipelineConfig&)> get;
};

template <class Access>
Field number(std::string key, Access access) {
    return {std::move(key), [access](PipelineConfig& c, std::string_view v) { access(c) = parse_double(v); },
            [access](const PipelineConfig& c) { return format_double(access(const_cast<PipelineConfig&>(c))); }};
}

template <class Int, class Access>
Field integer(std::string key, Access access) {
    return {std::move(key), [access](PipelineConfig& c, std::string_view v) { access(c) = parse_int<Int>(v); },
            [access](const PipelineConfig& c) { return std::to_string(access(const_cast<PipelineConfig&>(c))); }};
}

template <class Access>
Field text(std::string key, Access access) {
    return {std::move(key), [access](PipelineConfig& c, std::string_view v) { access(c) = std::string(v); },
            [access](const PipelineConfig& c) { return access(const_cast<PipelineConfig&>(c)); }};
}

template <class Access>
Field flag(std::string key, Access access) {
    return {std::move(key), [access](PipelineConfig& c, std::string_view v) { access(c) = parse_bool(v); },
            [access](const PipelineConfig& c) { return std::string(access(const_cast<PipelineConfig&>(c)) ? "true" : "false"); }};
}

template <class Access>
Field list(std::string key, Access access) {
    return {std::move(key), [access](PipelineConfig& c, std::string_view v) { access(c) = parse_list(v); },
            [access](const PipelineConfig& c) {
                std::string out;
                for (double v : access(const_cast<PipelineConfig&>(c))) {
                    if (!out.empty()) out += ",";
                    out += format_double(v);
                }
                return out;
            }};
}

template <std::size_t N, class Access>
Field fixed_list(std::string key, Access access) {
    return {std::move(key),
            [access](PipelineConfig& c, std::string_view v) {
                const std::vector<double> values = parse_list(v);
                if (values.size() != N) throw ConfigError("expected " + std::to_string(N) + " comma-separated numbers");
                std::copy(values.begin(), values.end(), access(c).begin());
            },
            [access](const PipelineConfig& c) {
                std::string out;
                for (double v : access(const_cast<PipelineConfig&>(c))) {
                    if (!out.empty()) out += ",";
                    out += format_double(v);
                }
                return out;
            }};
}

void add_ellipse(std::vector<Field>& fields, const std::string& prefix, Ellipse& (*access)(PipelineConfig&)) {
    fields.push_back(number(prefix + "_cx", [access](PipelineConfig& c) -> double& { return access(c).cx; }));
    fields.push_back(number(prefix + "_cy", [access](PipelineConfig& c) -> double& { return access(c).cy; }));
    fields.push_back(number(prefix + "_rx", [access](PipelineConfig& c) -> double& { return access(c).rx; }));
    fields.push_back(number(prefix + "_ry", [access](PipelineConfig& c) -> double& { return access(c).ry; }));
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        // energy
        f.push_back(number("alpha", [](PipelineConfig& c) -> double& { return c.energy.alpha; }));
        f.push_back(number("beta", [](PipelineConfig& c) -> double& { return c.energy.beta; }));
        f.push_back(number("gamma", [](PipelineConfig& c) -> double& { return c.energy.gamma; }));
        f.push_back(number("sigma1_sq", [](PipelineConfig& c) -> double& { return c.energy.sigma1_sq; }));
        f.push_back(number("sigma2_sq", [](PipelineConfig& c) -> double& { return c.energy.sigma2_sq; }));
        f.push_back(number("eps_log", [](PipelineConfig& c) -> double& { return c.energy.eps_log; }));
        f.push_back(number("step", [](PipelineConfig& c) -> double& { return c.energy.step; }));
        f.push_back(integer<int>("max_iters", [](PipelineConfig& c) -> int& { return c.energy.max_iters; }));
        f.push_back(number("tol", [](PipelineConfig& c) -> double& { return c.energy.tol; }));
        f.push_back({"pairwise",
                     [](PipelineConfig& c, std::string_view v) {
                         if (v == "dense") c.energy.pairwise = PairwiseMode::Dense;
                         else if (v == "adjacent") c.energy.pairwise = PairwiseMode::Adjacent;
                         else throw ConfigError("expected dense or adjacent, got '" + std::string(v) + "'");
                     },
                     [](const PipelineConfig& c) {
                         return std::string(c.energy.pairwise == PairwiseMode::Dense ? "dense" : "adjacent");
                     }});
        // superpixels
        f.push_back(integer<int>("sp_kernel_size", [](PipelineConfig& c) -> int& { return c.superpixel.kernel_size; }));
        f.push_back(number("sp_max_dist", [](PipelineConfig& c) -> double& { return c.superpixel.max_dist; }));
        f.push_back(number("sp_intensity_weight", [](PipelineConfig& c) -> double& { return c.superpixel.intensity_weight; }));
        // anatomy
        f.push_back(number("ncl_span_fraction", [](PipelineConfig& c) -> double& { return c.ncl.span_fraction; }));
        f.push_back(number("ncl_split_ratio", [](PipelineConfig& c) -> double& { return c.ncl.split_ratio; }));
        f.push_back(number("validity_fraction", [](PipelineConfig& c) -> double& { return c.maps.validity_fraction; }));
        f.push_back(number("dark_intensity", [](PipelineConfig& c) -> double& { return c.flags.dark_intensity; }));
        f.push_back(number("dark_fraction", [](PipelineConfig& c) -> double& { return c.flags.dark_fraction; }));
        f.push_back(number("smooth_intensity", [](PipelineConfig& c) -> double& { return c.flags.smooth_intensity; }));
        f.push_back(number("smooth_fraction", [](PipelineConfig& c) -> double& { return c.flags.smooth_fraction; }));
        // maps
        f.push_back(number("z_spread", [](PipelineConfig& c) -> double& { return c.maps.foreground.spread; }));
        f.push_back(number("dark_value", [](PipelineConfig& c) -> double& { return c.maps.foreground.dark_value; }));
        f.push_back(number("sigma3_sq", [](PipelineConfig& c) -> double& { return c.maps.sigma3_sq; }));
        f.push_back(number("nc_bandwidth", [](PipelineConfig& c) -> double& { return c.maps.nc_bandwidth; }));
        f.push_back({"background",
                     [](PipelineConfig& c, std::string_view v) {
                         if (v == "full") c.maps.background = BackgroundMode::Full;
                         else if (v == "nc2") c.maps.background = BackgroundMode::NcSquared;
                         else throw ConfigError("expected full or nc2, got '" + std::string(v) + "'");
                     },
                     [](const PipelineConfig& c) {
                         return std::string(c.maps.background == BackgroundMode::Full ? "full" : "nc2");
                     }});
        // evaluation
        f.push_back(number("theta_sq", [](PipelineConfig& c) -> double& { return c.theta_sq; }));
        // paths
        f.push_back(text("image", [](PipelineConfig& c) -> std::string& { return c.image; }));
        f.push_back(text("prob_map", [](PipelineConfig& c) -> std::string& { return c.prob_map; }));
        f.push_back(text("superpixels", [](PipelineConfig& c) -> std::string& { return c.superpixels; }));
        f.push_back(text("output_dir", [](PipelineConfig& c) -> std::string& { return c.output_dir; }));
        // phantom series
        f.push_back(integer<int>("phantom_count", [](PipelineConfig& c) -> int& { return c.phantom.count; }));
        f.push_back(integer<std::uint64_t>("phantom_seed", [](PipelineConfig& c) -> std::uint64_t& { return c.phantom.seed; }));
        f.push_back(integer<int>("phantom_width", [](PipelineConfig& c) -> int& { return c.phantom.width; }));
        f.push_back(integer<int>("phantom_height", [](PipelineConfig& c) -> int& { return c.phantom.height; }));
        f.push_back(number("noise_sigma", [](PipelineConfig& c) -> double& { return c.phantom.noise_sigma; }));
        f.push_back(number("prob_blur", [](PipelineConfig& c) -> double& { return c.phantom.prob_blur; }));
        f.push_back(fixed_list<3>("band_edges", [](PipelineConfig& c) -> std::array<double, 3>& { return c.phantom.band_edges; }));
        f.push_back(fixed_list<4>("band_intensity", [](PipelineConfig& c) -> std::array<double, 4>& { return c.phantom.band_intensity; }));
        f.push_back(number("tumor_intensity", [](PipelineConfig& c) -> double& { return c.phantom.tumor_intensity; }));
        add_ellipse(f, "tumor", [](PipelineConfig& c) -> Ellipse& { return c.phantom.tumor; });
        f.push_back(number("jitter_center", [](PipelineConfig& c) -> double& { return c.phantom.jitter_center; }));
        f.push_back(number("jitter_axes", [](PipelineConfig& c) -> double& { return c.phantom.jitter_axes; }));
        f.push_back(flag("distractor", [](PipelineConfig& c) -> bool& { return c.phantom.distractor; }));
        add_ellipse(f, "distractor", [](PipelineConfig& c) -> Ellipse& { return c.phantom.distractor_shape; });
        f.push_back(number("distractor_intensity", [](PipelineConfig& c) -> double& { return c.phantom.distractor_intensity; }));
        // sweep grid
        f.push_back(list("sweep_alpha", [](PipelineConfig& c) -> std::vector<double>& { return c.sweep_alpha; }));
        f.push_back(list("sweep_beta", [](PipelineConfig& c) -> std::vector<double>& { return c.sweep_beta; }));
        f.push_back(list("sweep_gamma", [](PipelineConfig& c) -> std::vector<double>& { return c.sweep_gamma; }));
        f.push_back(integer<int>("threads", [](PipelineConfig& c) -> int& { return c.threads; }));
        return f;
    }();
    return table;
}

void require(bool ok, const char* key, const std::string& what) {
    if (!ok) throw ConfigError(std::string("config key '") + key + "': " + what);
}

}  // namespace

void validate(const PipelineConfig& c) {
    require(c.energy.alpha >= 0.0, "alpha", "must be >= 0");
    require(c.energy.beta >= 0.0, "beta", "must be >= 0");
    require(c.energy.gamma >= 0.0, "gamma", "must be >= 0");
    require(c.energy.sigma1_sq > 0.0, "sigma1_sq", "must be > 0");
    require(c.energy.sigma2_sq > 0.0, "sigma2_sq", "must be > 0");
    require(c.energy.eps_log > 0.0 && c.energy.eps_log < 1.0, "eps_log", "must be in (0, 1)");
    require(c.energy.step > 0.0, "step", "must be > 0");
    require(c.energy.max_iters >= 0, "max_iters", "must be >= 0");
    require(c.energy.tol > 0.0, "tol", "must be > 0");
    require(c.superpixel.kernel_size >= 1, "sp_kernel_size", "must be >= 1");
    require(c.superpixel.max_dist >= 1.0, "sp_max_dist", "must be >= 1");
    require(c.superpixel.intensity_weight >= 0.0, "sp_intensity_weight", "must be >= 0");
    require(c.ncl.span_fraction > 0.0 && c.ncl.span_fraction <= 1.0, "ncl_span_fraction", "must be in (0, 1]");
    require(c.ncl.split_ratio > 0.0 && c.ncl.split_ratio <= 1.0, "ncl_split_ratio", "must be in (0, 1]");
    require(c.maps.validity_fraction > 0.0 && c.maps.validity_fraction <= 1.0, "validity_fraction", "must be in (0, 1]");
    require(c.maps.foreground.spread > 0.0, "z_spread", "must be > 0");
    require(c.maps.foreground.dark_value >= 0.0 && c.maps.foreground.dark_value <= 1.0, "dark_value", "must be in [0, 1]");
    require(c.maps.sigma3_sq > 0.0, "sigma3_sq", "must be > 0");
    require(c.maps.nc_bandwidth > 0.0, "nc_bandwidth", "must be > 0");
    require(c.theta_sq > 0.0, "theta_sq", "must be > 0");
    require(c.phantom.count >= 1, "phantom_count", "must be >= 1");
    require(c.phantom.width >= 8 && c.phantom.height >= 8, "phantom_width", "phantom must be at least 8x8");
    const auto& e = c.phantom.band_edges;
    require(0.0 < e[0] && e[0] < e[1] && e[1] < e[2] && e[2] < 1.0, "band_edges", "must be strictly increasing inside (0, 1)");
    for (double v : c.phantom.band_intensity) require(v >= 0.0 && v <= 255.0, "band_intensity", "must be in [0, 255]");
    require(c.phantom.tumor_intensity >= 0.0 && c.phantom.tumor_intensity <= 255.0, "tumor_intensity", "must be in [0, 255]");
    require(c.phantom.distractor_intensity >= 0.0 && c.phantom.distractor_intensity <= 255.0, "distractor_intensity",
            "must be in [0, 255]");
    require(c.phantom.noise_sigma >= 0.0, "noise_sigma", "must be >= 0");
    require(c.phantom.jitter_center >= 0.0 && c.phantom.jitter_axes >= 0.0, "jitter_center", "jitter must be >= 0");
    require(c.threads >= 0, "threads", "must be >= 0");
}

PipelineConfig parse_config(std::string_view text, const std::string& origin) {
    PipelineConfig config;
    std::set<std::string, std::less<>> seen;
    int line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const std::string_view line = trim(text.substr(0, nl));
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const std::string where = origin + ":" + std::to_string(line_no);
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        const auto& table = fields();
        const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
        if (it == table.end()) throw ConfigError(where + ": unknown key '" + std::string(key) + "'");
        if (!seen.insert(std::string(key)).second) throw ConfigError(where + ": duplicate key '" + std::string(key) + "'");
        try {
            it->set(config, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + ": key '" + std::string(key) + "': " + e.what());
        }
    }
    validate(config);
    return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    const auto bytes = io::read_file(path);
    return parse_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), path.string());
}

std::string to_text(const PipelineConfig& config) {
    std::string out;
    for (const Field& f : fields()) out += f.key + " = " + f.get(config) + "\n";
    return out;
}

void set_value(PipelineConfig& config, std::string_view key, std::string_view value) {
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
    if (it == table.end()) throw ConfigError("unknown key '" + std::string(key) + "'");
    try {
        it->set(config, trim(value));
    } catch (const ConfigError& e) {
        throw ConfigError("key '" + std::string(key) + "': " + e.what());
    }
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const Field& f : fields()) keys.push_back(f.key);
    return keys;
}

}  // namespace tse
