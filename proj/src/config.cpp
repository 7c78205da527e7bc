#include "calibforge/config.hpp"

#include "calibforge/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <variant>
#include <vector>

namespace calibforge {
namespace {

using Value = std::variant<double, bool, std::string, std::vector<double>>;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Drops a trailing comment that is not inside a string.
std::string strip_comment(const std::string& s) {
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_string = !in_string;
        if (s[i] == '#' && !in_string) return s.substr(0, i);
    }
    return s;
}

double parse_number(const std::string& tok) {
    std::string t;
    for (char c : tok)
        if (c != '_') t += c;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v))
        throw InputError("not a number: '" + tok + "'");
    return v;
}

Value parse_value(const std::string& raw) {
    const std::string s = trim(raw);
    if (s.empty()) throw InputError("missing value");
    if (s == "true") return true;
    if (s == "false") return false;
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"') throw InputError("unterminated string");
        return s.substr(1, s.size() - 2);
    }
    if (s.front() == '[') {
        if (s.back() != ']') throw InputError("unterminated array");
        std::vector<double> out;
        std::stringstream ss(s.substr(1, s.size() - 2));
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (trim(item).empty()) continue;
            out.push_back(parse_number(trim(item)));
        }
        return out;
    }
    return parse_number(s);
}

double as_number(const Value& v) {
    if (const auto* d = std::get_if<double>(&v)) return *d;
    throw InputError("expected a number");
}

template <class Int>
Int as_integer(const Value& v) {
    const double d = as_number(v);
    if (d != std::floor(d)) throw InputError("expected an integer");
    if constexpr (std::is_unsigned_v<Int>)
        if (d < 0) throw InputError("expected a non-negative integer");
    return static_cast<Int>(d);
}

std::string as_string(const Value& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    throw InputError("expected a quoted string");
}

Vec3 as_vec3(const Value& v) {
    const auto* a = std::get_if<std::vector<double>>(&v);
    if (a == nullptr || a->size() != 3) throw InputError("expected an array of 3 numbers");
    return {(*a)[0], (*a)[1], (*a)[2]};
}

using Setter = std::function<void(PipelineConfig&, const Value&)>;

const std::map<std::string, Setter>& setters() {
    using C = PipelineConfig;
    static const std::map<std::string, Setter> table = {
        {"seed", [](C& c, const Value& v) { c.seed = as_integer<std::uint64_t>(v); }},
        {"n_frames", [](C& c, const Value& v) { c.n_frames = as_integer<std::size_t>(v); }},
        {"image_width", [](C& c, const Value& v) { c.image_width = as_integer<int>(v); }},
        {"image_height", [](C& c, const Value& v) { c.image_height = as_integer<int>(v); }},
        {"focal_length", [](C& c, const Value& v) { c.focal_length = as_number(v); }},
        {"workspace_extent", [](C& c, const Value& v) { c.workspace_extent = as_vec3(v); }},
        {"workspace_center", [](C& c, const Value& v) { c.workspace_center = as_vec3(v); }},
        {"rotation_range_deg", [](C& c, const Value& v) { c.rotation_range_deg = as_vec3(v); }},
        {"depth_noise_sigma", [](C& c, const Value& v) { c.depth_noise_sigma = as_number(v); }},
        {"depth_quantization", [](C& c, const Value& v) { c.depth_quantization = as_number(v); }},
        {"n_pairs", [](C& c, const Value& v) { c.n_pairs = as_integer<std::size_t>(v); }},
        {"n_calibration", [](C& c, const Value& v) { c.n_calibration = as_integer<std::size_t>(v); }},
        {"calibration_rotation_range_deg", [](C& c, const Value& v) { c.calibration_rotation_range_deg = as_vec3(v); }},
        {"pose_noise_t", [](C& c, const Value& v) { c.pose_noise_t = as_number(v); }},
        {"pose_noise_r_deg", [](C& c, const Value& v) { c.pose_noise_r_deg = as_number(v); }},
        {"translation_row_weight", [](C& c, const Value& v) { c.translation_row_weight = as_number(v); }},
        {"reference_frame", [](C& c, const Value& v) { c.reference_frame = as_integer<long long>(v); }},
        {"click_noise_px", [](C& c, const Value& v) { c.click_noise_px = as_number(v); }},
        {"crop_margin_u", [](C& c, const Value& v) { c.crop_margin_u = as_integer<int>(v); }},
        {"crop_margin_v", [](C& c, const Value& v) { c.crop_margin_v = as_integer<int>(v); }},
        {"channels", [](C& c, const Value& v) { c.channels = as_string(v); }},
        {"labels", [](C& c, const Value& v) { c.labels = as_string(v); }},
        {"input_size", [](C& c, const Value& v) { c.input_size = as_integer<int>(v); }},
        {"conv1_channels", [](C& c, const Value& v) { c.conv1_channels = as_integer<int>(v); }},
        {"conv2_channels", [](C& c, const Value& v) { c.conv2_channels = as_integer<int>(v); }},
        {"dense_hidden", [](C& c, const Value& v) { c.dense_hidden = as_integer<int>(v); }},
        {"lr0", [](C& c, const Value& v) { c.lr0 = as_number(v); }},
        {"batch", [](C& c, const Value& v) { c.batch = as_integer<std::size_t>(v); }},
        {"epochs", [](C& c, const Value& v) { c.epochs = as_integer<std::size_t>(v); }},
        {"halve_every", [](C& c, const Value& v) { c.halve_every = as_integer<std::size_t>(v); }},
        {"val_fraction", [](C& c, const Value& v) { c.val_fraction = as_number(v); }},
    };
    return table;
}

std::string fmt(double v) {
    // Shortest text that parses back to the same double.
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string fmt(const Vec3& v) { return "[" + fmt(v.x()) + ", " + fmt(v.y()) + ", " + fmt(v.z()) + "]"; }

}  // namespace

PipelineConfig PipelineConfig::parse(const std::string& text, const std::string& source) {
    PipelineConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    std::map<std::string, std::size_t> seen;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string body = trim(strip_comment(line));
        if (body.empty()) continue;
        const std::string where = source + ":" + std::to_string(lineno) + ": ";
        if (body.front() == '[') throw InputError(where + "tables are not supported; the config is flat");
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw InputError(where + "expected 'key = value'");
        const std::string key = trim(body.substr(0, eq));
        const auto it = setters().find(key);
        if (it == setters().end()) throw InputError(where + "unknown key '" + key + "'");
        if (seen.count(key)) throw InputError(where + "duplicate key '" + key + "'");
        seen[key] = lineno;
        try {
            it->second(cfg, parse_value(body.substr(eq + 1)));
        } catch (const InputError& e) {
            throw InputError(where + key + ": " + e.what());
        }
    }
    cfg.validate();
    return cfg;
}

PipelineConfig PipelineConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string(), "cannot open for reading");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

std::string PipelineConfig::to_text() const {
    std::ostringstream o;
    o << "seed = " << seed << "\n"
      << "n_frames = " << n_frames << "\n"
      << "image_width = " << image_width << "\n"
      << "image_height = " << image_height << "\n"
      << "focal_length = " << fmt(focal_length) << "\n"
      << "workspace_extent = " << fmt(workspace_extent) << "\n"
      << "workspace_center = " << fmt(workspace_center) << "\n"
      << "rotation_range_deg = " << fmt(rotation_range_deg) << "\n"
      << "depth_noise_sigma = " << fmt(depth_noise_sigma) << "\n"
      << "depth_quantization = " << fmt(depth_quantization) << "\n"
      << "n_pairs = " << n_pairs << "\n"
      << "n_calibration = " << n_calibration << "\n"
      << "calibration_rotation_range_deg = " << fmt(calibration_rotation_range_deg) << "\n"
      << "pose_noise_t = " << fmt(pose_noise_t) << "\n"
      << "pose_noise_r_deg = " << fmt(pose_noise_r_deg) << "\n"
      << "translation_row_weight = " << fmt(translation_row_weight) << "\n"
      << "reference_frame = " << reference_frame << "\n"
      << "click_noise_px = " << fmt(click_noise_px) << "\n"
      << "crop_margin_u = " << crop_margin_u << "\n"
      << "crop_margin_v = " << crop_margin_v << "\n"
      << "channels = \"" << channels << "\"\n"
      << "labels = \"" << labels << "\"\n"
      << "input_size = " << input_size << "\n"
      << "conv1_channels = " << conv1_channels << "\n"
      << "conv2_channels = " << conv2_channels << "\n"
      << "dense_hidden = " << dense_hidden << "\n"
      << "lr0 = " << fmt(lr0) << "\n"
      << "batch = " << batch << "\n"
      << "epochs = " << epochs << "\n"
      << "halve_every = " << halve_every << "\n"
      << "val_fraction = " << fmt(val_fraction) << "\n";
    return o.str();
}

void PipelineConfig::validate() const {
    if (n_frames < 1) throw InputError("config: n_frames must be at least 1");
    if (image_width < 1 || image_height < 1) throw InputError("config: image size must be positive");
    if (!(focal_length > 0.0)) throw InputError("config: focal_length must be positive");
    if (workspace_extent.minCoeff() < 0.0 || rotation_range_deg.minCoeff() < 0.0 ||
        calibration_rotation_range_deg.minCoeff() < 0.0)
        throw InputError("config: extents and rotation ranges must be non-negative");
    if (depth_noise_sigma < 0.0 || depth_quantization < 0.0 || pose_noise_t < 0.0 || pose_noise_r_deg < 0.0 ||
        click_noise_px < 0.0)
        throw InputError("config: noise levels must be non-negative");
    if (n_calibration < 3 || n_calibration >= n_pairs)
        throw InputError("config: need 3 <= n_calibration < n_pairs");
    if (!(translation_row_weight > 0.0)) throw InputError("config: translation_row_weight must be positive");
    if (crop_margin_u < 0 || crop_margin_v < 0) throw InputError("config: crop margins must be non-negative");
    if (channels != "rgb" && channels != "rgbd" && channels != "d")
        throw InputError("config: channels must be \"rgb\", \"rgbd\" or \"d\"");
    if (labels != "2d" && labels != "3d") throw InputError("config: labels must be \"2d\" or \"3d\"");
    if (input_size < 4 || conv1_channels < 1 || conv2_channels < 1 || dense_hidden < 1)
        throw InputError("config: model sizes must be positive (input_size >= 4)");
    if (!(lr0 >= 0.0) || batch < 1 || epochs < 1 || halve_every < 1)
        throw InputError("config: invalid training schedule");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw InputError("config: val_fraction must be in (0, 1)");
}

}  // namespace calibforge
