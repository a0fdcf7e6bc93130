#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include <nlohmann/json.hpp>

#include "morozov/dual.hpp"
#include "morozov/linops.hpp"
#include "morozov/problems.hpp"

namespace morozov::io {

namespace fs = std::filesystem;

/// Header-free, row-major, comma-separated. Blank lines are skipped.
Matrix read_matrix_csv(const fs::path& path);
void write_matrix_csv(const fs::path& path, const Matrix& m);

/// Accepts one value per line or a single row.
Vector read_vector_csv(const fs::path& path);
void write_vector_csv(const fs::path& path, const Vector& v);

/// MDOP binary layout, all little-endian:
///   bytes 0-3    magic "MDOP"
///   bytes 4-7    u32 rows
///   bytes 8-11   u32 cols
///   bytes 12-15  u32 reserved, written as 0
///   then rows*cols float64 values in column-major order.
Matrix read_mdop(const fs::path& path);
void write_mdop(const fs::path& path, const Matrix& m);

/// Dispatches on extension: ".bin" is MDOP, anything else CSV.
LinearOperator load_operator(const fs::path& path);

/// Problem directory layout:
///   A.bin (or A.csv)   forward operator
///   g.csv              data
///   f0.csv, g0.csv     ground truth and clean data (optional on load)
///   L.bin              custom regularizer operator (only for kind "custom")
///   meta.json          tau, noise_level, seed, regime, delta_g_norm,
///                      tau_accuracy, regularizer, rows, cols
void save_problem(const fs::path& dir, const InverseProblem& problem);
InverseProblem load_problem(const fs::path& dir);

nlohmann::json to_json(const RegimeDiagnosis& diagnosis);
/// Fields: lambda_star, alpha, discrepancy, tau, regime, method,
/// iterations [{lambda, D, Dprime}], converged, f_star.
nlohmann::json to_json(const SelectionResult& result);
SelectionResult selection_result_from_json(const nlohmann::json& doc);

/// Columns lambda,D,Dprime,discrepancy_sq,j_value; failed points are nan.
void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& sweep);
nlohmann::json sweep_to_json(const std::vector<SweepPoint>& sweep);

nlohmann::json read_json(const fs::path& path);
void write_json(const fs::path& path, const nlohmann::json& doc);

}  // namespace morozov::io
