#pragma once

// Experiment drivers shared by the command-line tool, the acceptance runner and
// the Python module. Each driver returns a table, key values and a status.

#include <json.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hyperbuild {

inline constexpr std::string_view kVersion = "0.1.0";

struct RunConfig {
    int p = 6;
    int q = 3;
    std::uint64_t seed = 42;
    int tessellation_rings = 4;
    double horizon_L = 30.0;
    int atlas_size = 10000;
    int segment_samples = 64;
    int cone_depth_cap = 4;
    double modulus_tol = 1e-6;
    double C0 = 10.0;
    std::string output_dir = "out";

    // apartment
    int rays = 200;
    double ray_horizon = 40.0;
    // identity
    int identity_triples = 500;
    double identity_horizon = 25.0;
    // lemma4 / poincare segment
    int lemma4_grid = 50;
    double segment_xi = 0.5;
    double segment_span = 0.9;
    double lemma4_band = 20.0;
    // lemma5
    int lemma5_functions = 10000;
    int lemma5_pieces = 64;
    // regularity
    int ahlfors_centers = 20;
    int ahlfors_k_min = 4;
    int ahlfors_k_max = 12;
    double slope_tolerance = 0.05;
    // modulus
    int modulus_graphs = 100;
    int modulus_max_nodes = 12;
    // loewner
    int loewner_atlas_size = 10000;
    int loewner_level = 2;
    int loewner_pairs = 24;
    double loewner_tol = 1e-2;
    std::vector<double> loewner_t = {0.5, 1.0, 2.0};
    double loewner_factor = 2.0;
    // poincare
    int poincare_balls = 10;
    double stability_factor = 2.0;

    /// Throws InvalidInputError on out-of-range fields.
    void validate() const;
};

/// Flat JSON object; unknown keys are rejected.
RunConfig parse_config(std::string_view json_text);
nlohmann::ordered_json to_json(const RunConfig& c);

enum class Status { Pass, Warn, Fail };
std::string_view to_string(Status s) noexcept;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

struct CheckReport {
    std::string check;
    Status status = Status::Pass;
    nlohmann::ordered_json values = nlohmann::ordered_json::object();
    Table table;
    std::vector<std::string> notes;  // failed conditions, hard ones prefixed "hard:"
};

/// 9 significant digits, '.' separator.
std::string format_number(double x);

CheckReport run_dim(const RunConfig& c);
CheckReport run_polygon(const RunConfig& c);
CheckReport run_apartment(const RunConfig& c);
CheckReport run_identity(const RunConfig& c);
CheckReport run_lemma4(const RunConfig& c);
CheckReport run_lemma5(const RunConfig& c);
CheckReport run_regularity(const RunConfig& c);
CheckReport run_poincare(const RunConfig& c);
CheckReport run_modulus(const RunConfig& c);
CheckReport run_loewner(const RunConfig& c);

/// Names accepted by run_check, in report order.
const std::vector<std::string>& check_names();
/// Throws InvalidInputError for an unknown name.
CheckReport run_check(std::string_view name, const RunConfig& c);

/// Header, rows and the trailing metadata comment line.
std::string to_csv(const CheckReport& r, const RunConfig& c);
nlohmann::ordered_json summary_entry(const CheckReport& r);

}  // namespace hyperbuild
