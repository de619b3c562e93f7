#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace sandpile::cli {

/// Invalid configuration; the message already carries file/line context.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Everything an experiment run depends on. Unset fields fall back to
/// per-command defaults; a config file is applied first and flags override it.
struct ExperimentConfig {
    std::optional<std::vector<std::size_t>> dims;
    std::optional<double> a;
    std::optional<double> b;
    bool a_irrational = false;
    bool b_irrational = false;
    /// "zero", "max", "mu", an array of dense heights, or {"quanta": [...], "frac": [...]}.
    std::optional<nlohmann::json> init;
    std::optional<std::uint64_t> steps;
    std::optional<std::uint64_t> samples;
    std::optional<std::uint64_t> bins;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> epochs;
    std::optional<std::uint64_t> replicas;
    std::optional<std::uint64_t> thin;
    std::optional<std::uint64_t> fourier_n;
    std::optional<std::uint64_t> fourier_m;
    std::optional<std::uint64_t> kmax;
    std::optional<std::vector<double>> point;
    std::optional<double> tolerance;
    std::optional<std::string> out;
    std::optional<std::string> format;
};

/// Decimal literal (locale independent) or the token "sqrt2-1".
/// Sets `irrational` when the token form is used.
double parse_real(std::string_view text, bool* irrational = nullptr);
std::uint64_t parse_count(std::string_view text);
/// "2,3" or "[2, 3]".
std::vector<std::size_t> parse_dims(std::string_view text);
std::vector<double> parse_real_list(std::string_view text);

ExperimentConfig load_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& source);

/// Fields set in `flags` replace those in `base`.
void apply_overrides(ExperimentConfig& base, const ExperimentConfig& flags);

/// Shortest round-trip decimal form, locale independent.
std::string format_real(double value);

}  // namespace sandpile::cli
