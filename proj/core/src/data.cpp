#include "ivqr/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ivqr/error.hpp"

namespace ivqr {
namespace {

constexpr const char* kInterceptName = "const";

Matrix HStack(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

std::vector<std::string> DefaultNames(const std::string& stem, Eigen::Index k) {
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < k; ++j) names.push_back(stem + std::to_string(j + 1));
  return names;
}

std::string Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(first, last - first + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
    out = out.substr(1, out.size() - 2);
  }
  return out;
}

std::vector<std::string> SplitLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
      cur.push_back(ch);
    } else if (ch == ',' && !quoted) {
      cells.push_back(Trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  cells.push_back(Trim(cur));
  return cells;
}

std::optional<double> ParseDouble(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::size_t ColumnIndex(const CsvTable& t, const std::string& name) {
  auto it = std::find(t.header.begin(), t.header.end(), name);
  if (it == t.header.end()) {
    throw Error(ErrorCode::kMissingColumn, "column '" + name + "' not in header");
  }
  return static_cast<std::size_t>(it - t.header.begin());
}

Matrix Columns(const CsvTable& t, const std::vector<std::string>& names) {
  Matrix out(static_cast<Eigen::Index>(t.rows.size()),
             static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    const std::size_t c = ColumnIndex(t, names[j]);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.rows[i][c];
    }
  }
  return out;
}

void CheckInstrumentRank(const InstrumentSet& inst) {
  try {
    numerics::FactorSpd(numerics::Symmetrize(inst.l.transpose() * inst.l));
  } catch (const Error& e) {
    throw Error(ErrorCode::kSingularInstruments,
                std::string("L^T L is not positive definite (") + e.what() + ")");
  }
}

}  // namespace

Matrix Dataset::W() const { return HStack(d, x); }

std::vector<std::string> Dataset::WNames() const {
  std::vector<std::string> names = d_names;
  names.insert(names.end(), x_names.begin(), x_names.end());
  return names;
}

void Validate(const Dataset& ds) {
  const Eigen::Index n = ds.n();
  if (ds.d.rows() != n || ds.x.rows() != n || ds.z.rows() != n) {
    throw Error(ErrorCode::kInconsistentDimensions,
                "D, X and Z must have as many rows as y");
  }
  if (ds.p() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "no covariates");
  }
  if (n < ds.p() + 1) {
    std::ostringstream msg;
    msg << "n = " << n << " but need at least dim(W) + 1 = " << ds.p() + 1;
    throw Error(ErrorCode::kInvalidArgument, msg.str());
  }
  if (ds.z.cols() < ds.d.cols()) {
    throw Error(ErrorCode::kInvalidArgument,
                "need at least as many excluded instruments as endogenous covariates");
  }
  if (!ds.y.allFinite() || !ds.d.allFinite() || !ds.x.allFinite() ||
      !ds.z.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "non-finite entries in dataset");
  }
  const Matrix w = ds.W();
  try {
    numerics::FactorSpd(numerics::Symmetrize(w.transpose() * w));
  } catch (const Error& e) {
    throw Error(ErrorCode::kRankDeficient,
                std::string("W does not have full column rank (") + e.what() + ")");
  }
}

Dataset MakeDataset(Vector y, Matrix d, Matrix x, Matrix z) {
  Dataset ds;
  ds.y = std::move(y);
  ds.d = std::move(d);
  ds.x = std::move(x);
  ds.z = std::move(z);
  ds.d_names = DefaultNames("d", ds.d.cols());
  ds.x_names = DefaultNames("x", ds.x.cols());
  ds.z_names = DefaultNames("z", ds.z.cols());
  Validate(ds);
  return ds;
}

InstrumentSet DefaultInstruments(const Dataset& ds) {
  InstrumentSet inst;
  inst.l = HStack(ds.x, ds.z);
  inst.names = ds.x_names;
  inst.names.insert(inst.names.end(), ds.z_names.begin(), ds.z_names.end());
  CheckInstrumentRank(inst);
  return inst;
}

InstrumentSet InstrumentsWithExogenous(const Dataset& ds,
                                       const std::vector<std::string>& exogenous) {
  InstrumentSet inst;
  Matrix xs(ds.n(), static_cast<Eigen::Index>(exogenous.size()));
  for (std::size_t j = 0; j < exogenous.size(); ++j) {
    auto it = std::find(ds.x_names.begin(), ds.x_names.end(), exogenous[j]);
    if (it == ds.x_names.end()) {
      throw Error(ErrorCode::kMissingColumn,
                  "exogenous column '" + exogenous[j] + "' not in dataset");
    }
    xs.col(static_cast<Eigen::Index>(j)) = ds.x.col(it - ds.x_names.begin());
  }
  inst.l = HStack(xs, ds.z);
  inst.names = exogenous;
  inst.names.insert(inst.names.end(), ds.z_names.begin(), ds.z_names.end());
  if (inst.q() < ds.p()) {
    std::ostringstream msg;
    msg << "under-identified: " << inst.q() << " instruments for " << ds.p() << " coefficients";
    throw Error(ErrorCode::kInvalidArgument, msg.str());
  }
  CheckInstrumentRank(inst);
  return inst;
}

void Validate(const QuantileSpec& spec) {
  if (!(spec.tau > 0.0 && spec.tau < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "tau must lie in (0, 1), got " + std::to_string(spec.tau));
  }
  if (!(spec.epsilon > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  }
  if (!(spec.box_scale > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "box_scale must be positive");
  }
}

CsvSchema ParseSchemaJson(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("schema: ") + e.what());
  }
  auto names = [&](const char* key) {
    std::vector<std::string> out;
    if (!j.contains(key)) return out;
    const auto& v = j.at(key);
    if (v.is_string()) {
      out.push_back(v.get<std::string>());
    } else {
      out = v.get<std::vector<std::string>>();
    }
    return out;
  };
  CsvSchema s;
  try {
    if (!j.contains("outcome")) {
      throw Error(ErrorCode::kInvalidArgument, "schema: missing 'outcome'");
    }
    s.outcome = j.at("outcome").is_array() ? j.at("outcome").at(0).get<std::string>()
                                           : j.at("outcome").get<std::string>();
    s.endogenous = names("endogenous");
    s.exogenous = names("exogenous");
    s.instruments = names("instruments");
    s.intercept = j.value("intercept", true);
    if (j.contains("instrument_exogenous")) {
      s.instrument_exogenous = names("instrument_exogenous");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("schema: ") + e.what());
  }
  return s;
}

CsvSchema LoadSchema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open schema file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseSchemaJson(buf.str());
}

CsvTable ReadCsvTable(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open data file '" + path + "'");
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
      line.erase(0, 3);
    }
    if (Trim(line).empty()) continue;
    auto cells = SplitLine(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      std::ostringstream msg;
      msg << "line " << line_no << " has " << cells.size() << " cells, header has "
          << t.header.size();
      throw Error(ErrorCode::kNonNumericCell, msg.str());
    }
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      auto v = ParseDouble(cells[c]);
      if (!v) {
        std::ostringstream msg;
        msg << "row " << t.rows.size() + 1 << " (line " << line_no << "), column '"
            << t.header[c] << "': '" << cells[c] << "'";
        throw Error(ErrorCode::kNonNumericCell, msg.str());
      }
      row[c] = *v;
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty() || t.rows.empty()) {
    throw Error(ErrorCode::kEmptyFile, "'" + path + "' has no data rows");
  }
  return t;
}

Dataset DatasetFromTable(const CsvTable& table, const CsvSchema& schema) {
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  Dataset ds;
  ds.y = Columns(table, {schema.outcome}).col(0);
  ds.y_name = schema.outcome;
  ds.d = Columns(table, schema.endogenous);
  ds.d_names = schema.endogenous;
  Matrix x = Columns(table, schema.exogenous);
  ds.x_names = schema.exogenous;
  if (schema.intercept) {
    Matrix with_const(n, x.cols() + 1);
    with_const << Matrix::Ones(n, 1), x;
    x = std::move(with_const);
    ds.x_names.insert(ds.x_names.begin(), kInterceptName);
  }
  ds.x = std::move(x);
  ds.z = Columns(table, schema.instruments);
  ds.z_names = schema.instruments;
  Validate(ds);
  return ds;
}

Dataset LoadCsv(const std::string& path, const CsvSchema& schema) {
  return DatasetFromTable(ReadCsvTable(path), schema);
}

void WriteCsv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  std::vector<std::string> header{ds.y_name};
  header.insert(header.end(), ds.d_names.begin(), ds.d_names.end());
  header.insert(header.end(), ds.x_names.begin(), ds.x_names.end());
  header.insert(header.end(), ds.z_names.begin(), ds.z_names.end());
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n' << std::setprecision(17);
  for (Eigen::Index i = 0; i < ds.n(); ++i) {
    out << ds.y(i);
    for (const Matrix* m : {&ds.d, &ds.x, &ds.z}) {
      for (Eigen::Index j = 0; j < m->cols(); ++j) out << ',' << (*m)(i, j);
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write to '" + path + "' failed");
}

InstrumentSet SchemaInstruments(const Dataset& ds, const CsvSchema& schema) {
  if (!schema.instrument_exogenous) return DefaultInstruments(ds);
  std::vector<std::string> exog;
  if (schema.intercept) exog.push_back(kInterceptName);
  for (const auto& name : *schema.instrument_exogenous) {
    if (name != kInterceptName) exog.push_back(name);
  }
  return InstrumentsWithExogenous(ds, exog);
}

}  // namespace ivqr
