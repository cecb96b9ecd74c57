#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ivqr/numerics.hpp"

namespace ivqr {

// Estimation sample. W = [D X] is the covariate matrix, Z the excluded
// instruments. An intercept, when present, is a column of X.
struct Dataset {
  Vector y;
  Matrix d;  // n x k_d endogenous
  Matrix x;  // n x k_x exogenous
  Matrix z;  // n x k_z excluded instruments
  std::string y_name = "y";
  std::vector<std::string> d_names;
  std::vector<std::string> x_names;
  std::vector<std::string> z_names;

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p() const { return d.cols() + x.cols(); }

  Matrix W() const;
  std::vector<std::string> WNames() const;
};

// Checks every Dataset invariant; throws ivqr::Error on the first violation.
void Validate(const Dataset& ds);

// Builds and validates a Dataset. Matrices with zero columns must still have
// n rows.
Dataset MakeDataset(Vector y, Matrix d, Matrix x, Matrix z);

struct InstrumentSet {
  Matrix l;  // n x q
  std::vector<std::string> names;

  Eigen::Index q() const { return l.cols(); }
};

// L = [X Z]; throws kSingularInstruments when L^T L is not positive definite.
InstrumentSet DefaultInstruments(const Dataset& ds);

// L = [selected columns of X, Z].
InstrumentSet InstrumentsWithExogenous(const Dataset& ds,
                                       const std::vector<std::string>& exogenous);

struct QuantileSpec {
  double tau = 0.5;
  double epsilon = 1e-6;
  double box_scale = 10.0;
};

void Validate(const QuantileSpec& spec);

// Column-role mapping for CSV ingestion. JSON form:
//   {"outcome": "q", "endogenous": ["p"], "exogenous": ["mon"],
//    "instruments": ["stormy", "mixed"], "intercept": true,
//    "instrument_exogenous": ["mon"]}
// "instrument_exogenous" is optional; when absent every exogenous column
// (and the intercept) enters L.
struct CsvSchema {
  std::string outcome;
  std::vector<std::string> endogenous;
  std::vector<std::string> exogenous;
  std::vector<std::string> instruments;
  bool intercept = true;
  std::optional<std::vector<std::string>> instrument_exogenous;
};

CsvSchema ParseSchemaJson(const std::string& json_text);
CsvSchema LoadSchema(const std::string& path);

// Raw header + numeric table.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable ReadCsvTable(const std::string& path);
Dataset DatasetFromTable(const CsvTable& table, const CsvSchema& schema);
Dataset LoadCsv(const std::string& path, const CsvSchema& schema);

// Writes y, D, X, Z columns (intercept included) with full round-trip
// precision.
void WriteCsv(const Dataset& ds, const std::string& path);

// Instruments requested by the schema for a dataset it produced.
InstrumentSet SchemaInstruments(const Dataset& ds, const CsvSchema& schema);

}  // namespace ivqr
