#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sandpile::cli {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_list(std::string_view text) {
    text = trim(text);
    if (!text.empty() && text.front() == '[') {
        if (text.back() != ']') throw ConfigError("unterminated list '" + std::string(text) + "'");
        text = text.substr(1, text.size() - 2);
    }
    std::vector<std::string_view> parts;
    while (true) {
        const auto comma = text.find(',');
        parts.push_back(trim(text.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        text.remove_prefix(comma + 1);
    }
    return parts;
}

// 1-based line of the first occurrence of "key" in the config text, 0 if absent.
std::size_t line_of(const std::string& text, const std::string& key) {
    const auto pos = text.find('"' + key + '"');
    if (pos == std::string::npos) return 0;
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

}  // namespace

double parse_real(std::string_view text, bool* irrational) {
    text = trim(text);
    if (irrational) *irrational = false;
    if (text == "sqrt2-1") {
        if (irrational) *irrational = true;
        return std::sqrt(2.0) - 1.0;
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value))
        throw ConfigError("'" + std::string(text) + "' is not a decimal literal or \"sqrt2-1\"");
    return value;
}

std::uint64_t parse_count(std::string_view text) {
    text = trim(text);
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ConfigError("'" + std::string(text) + "' is not a non-negative integer");
    return value;
}

std::vector<std::size_t> parse_dims(std::string_view text) {
    std::vector<std::size_t> dims;
    for (std::string_view part : split_list(text)) {
        if (part.empty()) throw ConfigError("empty entry in dims list");
        dims.push_back(static_cast<std::size_t>(parse_count(part)));
    }
    return dims;
}

std::vector<double> parse_real_list(std::string_view text) {
    std::vector<double> values;
    for (std::string_view part : split_list(text)) values.push_back(parse_real(part));
    return values;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& source) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(source + ": " + e.what());
    }
    if (!doc.is_object()) throw ConfigError(source + ":1: top level must be a JSON object");

    ExperimentConfig cfg;
    auto fail = [&](const std::string& key, const std::string& message) -> ConfigError {
        return ConfigError(source + ":" + std::to_string(line_of(text, key)) + ": '" + key + "' " + message);
    };
    auto real_field = [&](const std::string& key, const nlohmann::json& v, bool* irrational) {
        try {
            if (v.is_number()) {
                if (irrational) *irrational = false;
                return v.get<double>();
            }
            if (v.is_string()) return parse_real(v.get<std::string>(), irrational);
        } catch (const ConfigError& e) {
            throw fail(key, e.what());
        }
        throw fail(key, "must be a number or a string such as \"sqrt2-1\"");
    };
    auto count_field = [&](const std::string& key, const nlohmann::json& v) {
        if (!v.is_number_unsigned()) throw fail(key, "must be a non-negative integer");
        return v.get<std::uint64_t>();
    };

    for (const auto& [key, value] : doc.items()) {
        if (key == "lattice") {
            if (!value.is_object() || !value.contains("dims") || !value["dims"].is_array())
                throw fail(key, "must be an object of the form {\"dims\": [n1, ...]}");
            std::vector<std::size_t> dims;
            for (const auto& n : value["dims"]) {
                if (!n.is_number_unsigned() || n.get<std::uint64_t>() == 0)
                    throw fail("dims", "entries must be positive integers");
                dims.push_back(n.get<std::size_t>());
            }
            cfg.dims = std::move(dims);
        } else if (key == "a" || key == "b") {
            auto& slot = key == "a" ? cfg.a : cfg.b;
            slot = real_field(key, value, key == "a" ? &cfg.a_irrational : &cfg.b_irrational);
            if (!(*slot >= 0.0 && *slot < 1.0)) throw fail(key, "must lie in [0, 1)");
        } else if (key == "init") {
            if (value.is_string() && value != "zero" && value != "max" && value != "mu")
                throw fail(key, "must be \"zero\", \"max\", \"mu\" or explicit arrays");
            if (!value.is_string() && !value.is_array() && !value.is_object())
                throw fail(key, "must be a keyword, a height array or {\"quanta\": [...], \"frac\": [...]}");
            cfg.init = value;
        } else if (key == "steps") {
            cfg.steps = count_field(key, value);
        } else if (key == "samples") {
            cfg.samples = count_field(key, value);
        } else if (key == "bins") {
            cfg.bins = count_field(key, value);
            if (*cfg.bins == 0) throw fail(key, "must be at least 1");
        } else if (key == "seed") {
            cfg.seed = count_field(key, value);
        } else if (key == "epochs") {
            cfg.epochs = count_field(key, value);
        } else if (key == "replicas") {
            cfg.replicas = count_field(key, value);
        } else if (key == "thin") {
            cfg.thin = count_field(key, value);
        } else if (key == "N") {
            cfg.fourier_n = count_field(key, value);
        } else if (key == "m") {
            cfg.fourier_m = count_field(key, value);
        } else if (key == "kmax") {
            cfg.kmax = count_field(key, value);
        } else if (key == "x") {
            if (!value.is_array()) throw fail(key, "must be an array of numbers");
            std::vector<double> point;
            for (const auto& v : value) point.push_back(real_field(key, v, nullptr));
            cfg.point = std::move(point);
        } else if (key == "tolerance") {
            cfg.tolerance = real_field(key, value, nullptr);
        } else if (key == "out") {
            if (!value.is_string()) throw fail(key, "must be a string");
            cfg.out = value.get<std::string>();
        } else if (key == "format") {
            if (value != "csv" && value != "json") throw fail(key, "must be \"csv\" or \"json\"");
            cfg.format = value.get<std::string>();
        } else {
            throw fail(key, "is not a recognised configuration key");
        }
    }
    if (cfg.a && cfg.b && *cfg.a > *cfg.b) throw fail("b", "must not be smaller than 'a'");
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open configuration file");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str(), path);
}

void apply_overrides(ExperimentConfig& base, const ExperimentConfig& flags) {
    auto take = [](auto& dst, const auto& src) {
        if (src) dst = src;
    };
    take(base.dims, flags.dims);
    if (flags.a) {
        base.a = flags.a;
        base.a_irrational = flags.a_irrational;
    }
    if (flags.b) {
        base.b = flags.b;
        base.b_irrational = flags.b_irrational;
    }
    take(base.init, flags.init);
    take(base.steps, flags.steps);
    take(base.samples, flags.samples);
    take(base.bins, flags.bins);
    take(base.seed, flags.seed);
    take(base.epochs, flags.epochs);
    take(base.replicas, flags.replicas);
    take(base.thin, flags.thin);
    take(base.fourier_n, flags.fourier_n);
    take(base.fourier_m, flags.fourier_m);
    take(base.kmax, flags.kmax);
    take(base.point, flags.point);
    take(base.tolerance, flags.tolerance);
    take(base.out, flags.out);
    take(base.format, flags.format);
}

std::string format_real(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

}  // namespace sandpile::cli
