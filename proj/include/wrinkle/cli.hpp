#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "wrinkle/cell_solver.hpp"
#include "wrinkle/elastic_forms.hpp"
#include "wrinkle/plate_solver.hpp"
#include "wrinkle/shape.hpp"

namespace wrinkle::cli {

/// Exit codes of every command.
enum ExitCode : int {
    kOk = 0,
    kConfigError = 1,
    kNonConvergence = 2,
    kNoDecrease = 3,
    kValidationFailed = 4,
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ShapeConfig {
    std::string catalog;  ///< empty for a custom coefficient list
    double amplitude = 1.0;
    std::vector<shape::ModeRecord> custom;

    shape::ShapeFunction build() const;
};

struct LoadConfig {
    std::string catalog = "dipole";  ///< empty for an inline grid
    double amplitude = 1.0;
    std::vector<double> grid;  ///< x2-outer, x1-inner
    plate::SignMode sign = plate::SignMode::automatic;

    plate::LoadSpec build(const plate::PlateDomain& dom) const;
};

/// Sizes used by the validate command.
struct ValidateConfig {
    int oracle_n = 24;
    int oracle_loads = 5;
    int gradient_states = 3;
    bool plate = true;
};

struct RunConfig {
    ShapeConfig shape;
    elastic::ElasticModel material = elastic::IsotropicModuli{1.0, 1.0};
    cell::CellParams cell;
    plate::PlateDomain domain;
    LoadConfig load;
    plate::MinimizerParams minimizer;
    ValidateConfig validate;
    std::filesystem::path out_dir = ".";
    bool write_correctors = true;
};

/// Parses and validates a configuration document. Throws ConfigError.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

/// JSON text with every floating-point number written to 17 significant digits.
std::string dump_json(const nlohmann::json& doc, int indent = 2);

/// Writes through a temporary file in the same directory and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& text);

nlohmann::json effective_to_json(const cell::EffectiveForm& eff);
/// Reads M (and the kernel) back. Throws ConfigError on malformed input.
cell::EffectiveForm effective_from_json(const nlohmann::json& doc);

std::string solution_csv(const plate::PlateDomain& dom, const plate::PlateState& state);
nlohmann::json energy_to_json(const plate::PlateResult& result);

struct Check {
    std::string name;
    double measured = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    /// "<=" : measured <= tolerance; ">" : measured > tolerance; "==" : equal.
    std::string relation = "<=";
};

struct CommandOptions {
    std::optional<std::filesystem::path> out_dir;
    std::optional<std::filesystem::path> reuse_effective;
    std::optional<std::uint64_t> seed;
};

/// Each command reports diagnostics on err and returns an ExitCode value.
int cmd_effective(const RunConfig& config, std::ostream& err);
int cmd_solve(const RunConfig& config, const std::optional<std::filesystem::path>& reuse_effective,
              std::ostream& err);
int cmd_validate(const RunConfig& config, std::ostream& err);

/// Loads the config, applies the option overrides and runs the verb.
int run(const std::string& verb, const std::filesystem::path& config_path, const CommandOptions& options,
        std::ostream& err);

}  // namespace wrinkle::cli
