#include "morozov/io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "morozov/errors.hpp"

namespace morozov::io {

namespace {

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.precision(std::numeric_limits<double>::max_digits10);
  return out;
}

double parse_double(const std::string& token, const fs::path& path, std::size_t line) {
  std::size_t used = 0;
  double value = 0.0;
  std::string trimmed = token;
  trimmed.erase(0, trimmed.find_first_not_of(" \t\r"));
  trimmed.erase(trimmed.find_last_not_of(" \t\r") + 1);
  try {
    value = std::stod(trimmed, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (trimmed.empty() || used != trimmed.size()) {
    throw IoError(path.string() + ":" + std::to_string(line) + ": not a number: '" + token + "'");
  }
  return value;
}

std::vector<std::vector<double>> read_rows(const fs::path& path) {
  std::ifstream in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(parse_double(cell, path, line_no));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path.string() + ": empty file");
  return rows;
}

template <typename T>
T to_little(T value) {
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    std::reverse(bytes.begin(), bytes.end());
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
  }
}

template <typename T>
void write_le(std::ostream& os, T value) {
  value = to_little(value);
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& is, const fs::path& path) {
  T value{};
  if (!is.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw IoError(path.string() + ": truncated MDOP file");
  }
  return to_little(value);
}

}  // namespace

Matrix read_matrix_csv(const fs::path& path) {
  const auto rows = read_rows(path);
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void write_matrix_csv(const fs::path& path, const Matrix& m) {
  std::ofstream out = open_out(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Vector read_vector_csv(const fs::path& path) {
  const Matrix m = read_matrix_csv(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw IoError(path.string() + ": expected a single row or column");
}

void write_vector_csv(const fs::path& path, const Vector& v) {
  std::ofstream out = open_out(path);
  for (Eigen::Index i = 0; i < v.size(); ++i) out << v[i] << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

Matrix read_mdop(const fs::path& path) {
  std::ifstream in = open_in(path, std::ios::binary);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "MDOP", 4) != 0) {
    throw IoError(path.string() + ": missing MDOP magic");
  }
  const auto rows = read_le<std::uint32_t>(in, path);
  const auto cols = read_le<std::uint32_t>(in, path);
  (void)read_le<std::uint32_t>(in, path);
  if (rows == 0 || cols == 0) throw IoError(path.string() + ": zero dimension");
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = read_le<double>(in, path);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw IoError(path.string() + ": trailing bytes after matrix data");
  }
  return m;
}

void write_mdop(const fs::path& path, const Matrix& m) {
  if (m.rows() > std::numeric_limits<std::uint32_t>::max() ||
      m.cols() > std::numeric_limits<std::uint32_t>::max()) {
    throw InvalidInput("write_mdop: matrix too large for u32 dimensions");
  }
  std::ofstream out = open_out(path, std::ios::binary);
  out.write("MDOP", 4);
  write_le(out, static_cast<std::uint32_t>(m.rows()));
  write_le(out, static_cast<std::uint32_t>(m.cols()));
  write_le(out, std::uint32_t{0});
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) write_le(out, m(i, j));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

LinearOperator load_operator(const fs::path& path) {
  if (path.extension() == ".bin") return LinearOperator(read_mdop(path), path.stem().string());
  return LinearOperator(read_matrix_csv(path), path.stem().string());
}

void save_problem(const fs::path& dir, const InverseProblem& p) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  write_mdop(dir / "A.bin", p.a.to_dense());
  write_vector_csv(dir / "g.csv", p.g);
  if (p.f0.size() > 0) write_vector_csv(dir / "f0.csv", p.f0);
  if (p.g0.size() > 0) write_vector_csv(dir / "g0.csv", p.g0);
  if (p.j.kind() == Regularizer::Kind::custom) {
    write_mdop(dir / "L.bin", p.j.seminorm_operator().to_dense());
  }
  nlohmann::json meta = {
      {"tau", p.tau},
      {"noise_level", p.noise_level},
      {"seed", p.seed},
      {"delta_g_norm", p.delta_g_norm},
      {"tau_accuracy", p.tau_accuracy},
      {"regularizer", std::string(to_string(p.j.kind()))},
      {"rows", p.a.rows()},
      {"cols", p.a.cols()},
  };
  meta["regime"] = p.regime ? nlohmann::json(std::string(to_string(*p.regime))) : nlohmann::json();
  write_json(dir / "meta.json", meta);
}

InverseProblem load_problem(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("problem directory '" + dir.string() + "' not found");
  const fs::path a_path = fs::exists(dir / "A.bin") ? dir / "A.bin" : dir / "A.csv";
  if (!fs::exists(a_path)) throw IoError(dir.string() + ": missing A.bin or A.csv");
  LinearOperator a = load_operator(a_path);
  Vector g = read_vector_csv(dir / "g.csv");
  if (g.size() != a.rows()) {
    throw IoError(dir.string() + ": g has " + std::to_string(g.size()) + " entries but A has " +
                  std::to_string(a.rows()) + " rows");
  }
  nlohmann::json meta = nlohmann::json::object();
  if (fs::exists(dir / "meta.json")) meta = read_json(dir / "meta.json");

  Regularizer j = Regularizer::identity(a.cols());
  try {
    const auto kind = regularizer_kind_from_string(meta.value("regularizer", "identity"));
    if (kind == Regularizer::Kind::first_difference) {
      j = Regularizer::first_difference(a.cols());
    } else if (kind == Regularizer::Kind::custom) {
      LinearOperator l = load_operator(dir / "L.bin");
      j = Regularizer(std::move(l), Regularizer::Kind::custom);
    }
    InverseProblem p{std::move(a), std::move(g), Vector(), Vector(), 0.0, 0.0, 0.0, 1.0,
                     std::move(j), 0, std::nullopt};
    if (fs::exists(dir / "f0.csv")) p.f0 = read_vector_csv(dir / "f0.csv");
    if (fs::exists(dir / "g0.csv")) p.g0 = read_vector_csv(dir / "g0.csv");
    p.tau = meta.value("tau", 0.0);
    p.noise_level = meta.value("noise_level", 0.0);
    p.delta_g_norm = meta.value("delta_g_norm", 0.0);
    p.tau_accuracy = meta.value("tau_accuracy", 1.0);
    p.seed = meta.value("seed", std::uint64_t{0});
    if (meta.contains("regime") && meta["regime"].is_string()) {
      p.regime = regime_from_string(meta["regime"].get<std::string>());
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(dir.string() + "/meta.json: " + e.what());
  } catch (const InvalidInput& e) {
    throw IoError(dir.string() + ": " + e.what());
  }
}

nlohmann::json to_json(const RegimeDiagnosis& d) {
  return {{"dist_to_range", d.dist_to_range},
          {"data_norm", d.data_norm},
          {"tau", d.tau},
          {"regime", std::string(to_string(d.regime))}};
}

nlohmann::json to_json(const SelectionResult& r) {
  nlohmann::json trace = nlohmann::json::array();
  for (const auto& t : r.iterations) {
    trace.push_back({{"lambda", t.lambda}, {"D", t.d_value}, {"Dprime", t.d_prime}});
  }
  return {{"lambda_star", r.lambda_star},
          {"alpha", r.alpha},
          {"discrepancy", r.discrepancy},
          {"tau", r.tau},
          {"regime", std::string(to_string(r.regime))},
          {"method", std::string(to_string(r.method))},
          {"iterations", std::move(trace)},
          {"converged", r.converged},
          {"f_star", std::vector<double>(r.f_star.data(), r.f_star.data() + r.f_star.size())}};
}

SelectionResult selection_result_from_json(const nlohmann::json& doc) {
  try {
    SelectionResult r;
    r.lambda_star = doc.at("lambda_star").get<double>();
    r.alpha = doc.at("alpha").get<double>();
    r.discrepancy = doc.at("discrepancy").get<double>();
    r.tau = doc.at("tau").get<double>();
    r.regime = regime_from_string(doc.at("regime").get<std::string>());
    r.method = method_from_string(doc.at("method").get<std::string>());
    r.converged = doc.at("converged").get<bool>();
    for (const auto& t : doc.at("iterations")) {
      r.iterations.push_back(
          {t.at("lambda").get<double>(), t.at("D").get<double>(), t.at("Dprime").get<double>()});
    }
    const auto f = doc.at("f_star").get<std::vector<double>>();
    r.f_star = Eigen::Map<const Vector>(f.data(), static_cast<Eigen::Index>(f.size()));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed selection result: ") + e.what());
  } catch (const InvalidInput& e) {
    throw IoError(std::string("malformed selection result: ") + e.what());
  }
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& sweep) {
  const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
  os << "lambda,D,Dprime,discrepancy_sq,j_value\n";
  for (const auto& p : sweep) {
    os << p.lambda << ',';
    if (p.evaluation && p.evaluation->solution) {
      const auto& e = *p.evaluation;
      os << e.d_value << ',' << e.d_prime << ',' << e.solution->discrepancy_sq << ','
         << e.solution->j_value << '\n';
    } else {
      os << "nan,nan,nan,nan\n";
    }
  }
  os.precision(old_precision);
}

nlohmann::json sweep_to_json(const std::vector<SweepPoint>& sweep) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : sweep) {
    nlohmann::json row = {{"lambda", p.lambda}};
    if (p.evaluation && p.evaluation->solution) {
      const auto& e = *p.evaluation;
      row["D"] = e.d_value;
      row["Dprime"] = e.d_prime;
      row["discrepancy_sq"] = e.solution->discrepancy_sq;
      row["j_value"] = e.solution->j_value;
    } else {
      row["error"] = p.error;
    }
    out.push_back(std::move(row));
  }
  return out;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  std::ofstream out = open_out(path);
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace morozov::io
