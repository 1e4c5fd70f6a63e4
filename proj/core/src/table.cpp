#include "seqkernel/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <regex>
#include <sstream>

#include "seqkernel/errors.hpp"

namespace seqkernel {

namespace {

std::string trim_ws(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim_ws(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last && std::isfinite(out);
}

ColumnSetting setting_of(const ColumnDecl& c) { return {c.kind, c.lengthscale}; }

std::vector<ColumnSetting> settings_of(const std::vector<const ColumnDecl*>& decls) {
  std::vector<ColumnSetting> out;
  for (const auto* d : decls) out.push_back(setting_of(*d));
  return out;
}

std::vector<const ColumnDecl*> require(const DataSchema& schema, Role role, int period, const char* what) {
  auto cols = schema.with_role(role, period);
  if (cols.empty()) throw_input(std::string("schema declares no ") + what + " column");
  return cols;
}

const ColumnDecl* require_single(const DataSchema& schema, Role role, int period, const char* what) {
  auto cols = require(schema, role, period, what);
  if (cols.size() != 1) throw_input(std::string("schema must declare exactly one ") + what + " column");
  return cols.front();
}

}  // namespace

Role parse_role(const std::string& text, int& period) {
  static const std::regex re(R"((outcome|treatment|mediator|covariate)(\d*))");
  std::smatch m;
  if (!std::regex_match(text, m, re)) {
    throw_config("unknown column role '" + text + "' (expected outcome, treatmentN, mediator or covariateN)");
  }
  period = m[2].length() > 0 ? std::stoi(m[2].str()) : 1;
  if (period < 1) throw_config("column role period must be >= 1");
  const std::string base = m[1].str();
  if (base == "outcome") return Role::Outcome;
  if (base == "treatment") return Role::Treatment;
  if (base == "mediator") return Role::Mediator;
  return Role::Covariate;
}

std::string role_name(Role role, int period) {
  switch (role) {
    case Role::Outcome: return "outcome";
    case Role::Mediator: return "mediator";
    case Role::Treatment: return "treatment" + std::to_string(period);
    case Role::Covariate: return "covariate" + std::to_string(period);
  }
  return "covariate1";
}

ColumnKind parse_kind(const std::string& text) {
  if (text == "continuous") return ColumnKind::Continuous;
  if (text == "discrete") return ColumnKind::Discrete;
  throw_config("unknown column kind '" + text + "' (expected continuous or discrete)");
}

std::string kind_name(ColumnKind kind) { return kind == ColumnKind::Discrete ? "discrete" : "continuous"; }

const ColumnDecl& DataSchema::outcome() const {
  for (const auto& c : columns) {
    if (c.role == Role::Outcome) return c;
  }
  throw_input("schema declares no outcome column");
}

std::vector<const ColumnDecl*> DataSchema::with_role(Role role, int period) const {
  std::vector<const ColumnDecl*> out;
  for (const auto& c : columns) {
    if (c.role != role) continue;
    if (period != 0 && (role == Role::Treatment || role == Role::Covariate) && c.period != period) continue;
    out.push_back(&c);
  }
  return out;
}

int DataSchema::treatment_periods() const {
  int T = 0;
  for (const auto& c : columns) {
    if (c.role == Role::Treatment) T = std::max(T, c.period);
  }
  return T;
}

void DataSchema::validate() const {
  int outcomes = 0;
  std::vector<std::string> names;
  for (const auto& c : columns) {
    if (c.name.empty()) throw_config("schema column with empty name");
    if (std::find(names.begin(), names.end(), c.name) != names.end()) {
      throw_config("column '" + c.name + "' declared twice");
    }
    names.push_back(c.name);
    if (c.role == Role::Outcome) ++outcomes;
    if (c.lengthscale && !(*c.lengthscale > 0.0)) throw_config("column '" + c.name + "' has a nonpositive lengthscale");
  }
  if (outcomes != 1) throw_config("schema must declare exactly one outcome column");
}

Eigen::Index Dataset::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw_input("missing column '" + name + "'");
  return static_cast<Eigen::Index>(it - names.begin());
}

Eigen::VectorXd Dataset::column(const std::string& name) const { return values.col(index_of(name)); }

Eigen::MatrixXd Dataset::columns(const std::vector<const ColumnDecl*>& decls) const {
  Eigen::MatrixXd out(rows(), static_cast<Eigen::Index>(decls.size()));
  for (std::size_t j = 0; j < decls.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = column(decls[j]->name);
  return out;
}

DataSchema infer_schema(const Dataset& data) {
  static const std::regex outcome_re("y");
  static const std::regex treat_re(R"(d(\d*))");
  static const std::regex med_re(R"(m(_.*)?)");
  static const std::regex cov_re(R"(x(\d*)(_.*)?)");
  DataSchema schema;
  for (std::size_t j = 0; j < data.names.size(); ++j) {
    const std::string& name = data.names[j];
    std::smatch m;
    ColumnDecl c;
    c.name = name;
    if (std::regex_match(name, outcome_re)) {
      c.role = Role::Outcome;
    } else if (std::regex_match(name, m, treat_re)) {
      c.role = Role::Treatment;
      c.period = m[1].length() > 0 ? std::stoi(m[1].str()) : 1;
      const auto col = data.values.col(static_cast<Eigen::Index>(j));
      const bool binary = ((col.array() == 0.0) || (col.array() == 1.0)).all();
      c.kind = binary ? ColumnKind::Discrete : ColumnKind::Continuous;
    } else if (std::regex_match(name, med_re)) {
      c.role = Role::Mediator;
    } else if (std::regex_match(name, m, cov_re)) {
      c.role = Role::Covariate;
      c.period = m[1].length() > 0 ? std::stoi(m[1].str()) : 1;
    } else {
      continue;
    }
    if (c.period < 1) throw_input("column '" + name + "' has period 0");
    schema.columns.push_back(c);
  }
  schema.validate();
  return schema;
}

Dataset read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_input("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw_input("'" + path + "' is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  Dataset data;
  data.names = split(trim_ws(line));
  if (data.names.empty() || (data.names.size() == 1 && data.names[0].empty())) {
    throw_input("'" + path + "' is empty");
  }
  for (std::size_t j = 0; j < data.names.size(); ++j) {
    if (data.names[j].empty()) throw_input("'" + path + "': header column " + std::to_string(j + 1) + " is unnamed");
  }
  std::vector<double> cells;
  Eigen::Index row = 0;
  while (std::getline(in, line)) {
    if (trim_ws(line).empty()) continue;
    ++row;
    const auto fields = split(trim_ws(line));
    if (fields.size() != data.names.size()) {
      throw_input("'" + path + "': row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                  " fields, header has " + std::to_string(data.names.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      double v = 0.0;
      if (!parse_double(fields[j], v)) {
        throw_input("'" + path + "': non-numeric cell at row " + std::to_string(row) + ", column " +
                    std::to_string(j + 1) + " ('" + data.names[j] + "'): '" + fields[j] + "'");
      }
      cells.push_back(v);
    }
  }
  if (row == 0) throw_input("'" + path + "' has a header but no data rows");
  const auto cols = static_cast<Eigen::Index>(data.names.size());
  data.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      cells.data(), row, cols);
  return data;
}

Dataset load_csv(const std::string& path, const DataSchema& schema) {
  schema.validate();
  Dataset data = read_csv(path);
  for (const auto& c : schema.columns) {
    const auto it = std::find(data.names.begin(), data.names.end(), c.name);
    if (it == data.names.end()) {
      throw_input("'" + path + "': missing column '" + c.name + "' declared as " + role_name(c.role, c.period));
    }
    if (c.kind != ColumnKind::Discrete) continue;
    const auto j = static_cast<Eigen::Index>(it - data.names.begin());
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      const double v = data.values(i, j);
      if (v != std::floor(v)) {
        throw_input("'" + path + "': discrete column '" + c.name + "' has non-integer value at row " +
                    std::to_string(i + 1));
      }
    }
  }
  return data;
}

std::string format_number(double v, int significant_digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", significant_digits, v);
  return buf;
}

namespace {

void write_rows(const std::vector<std::string>& header, Eigen::Index rows, Eigen::Index cols,
                const std::function<double(Eigen::Index, Eigen::Index)>& at, const std::string& path, int digits) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_input("cannot write '" + path + "'");
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) out << (j ? "," : "") << format_number(at(i, j), digits);
    out << '\n';
  }
  if (!out) throw_input("failed while writing '" + path + "'");
}

}  // namespace

void write_csv(const Dataset& data, const std::string& path, int significant_digits) {
  write_rows(data.names, data.rows(), data.values.cols(), [&](Eigen::Index i, Eigen::Index j) { return data.values(i, j); },
             path, significant_digits);
}

void write_surface(const Surface& surface, const std::string& path) {
  const auto cols = static_cast<Eigen::Index>(surface.columns.size());
  for (const auto& r : surface.rows) {
    if (static_cast<Eigen::Index>(r.size()) != cols) throw_input("surface row width does not match its header");
  }
  write_rows(surface.columns, static_cast<Eigen::Index>(surface.rows.size()), cols,
             [&](Eigen::Index i, Eigen::Index j) {
               return surface.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
             },
             path, kSurfaceDigits);
}

MediationData to_mediation(const Dataset& data, const DataSchema& schema, MediationKernelSettings* settings) {
  const ColumnDecl& y = schema.outcome();
  const ColumnDecl* d = require_single(schema, Role::Treatment, 1, "treatment");
  const auto m = require(schema, Role::Mediator, 0, "mediator");
  const auto x = require(schema, Role::Covariate, 1, "covariate");
  if (settings) *settings = {{setting_of(*d)}, settings_of(m), settings_of(x)};
  return {data.column(y.name), data.columns({d}), data.columns(m), data.columns(x)};
}

TimeVaryingData to_time_varying(const Dataset& data, const DataSchema& schema, TimeVaryingKernelSettings* settings) {
  const ColumnDecl& y = schema.outcome();
  const ColumnDecl* d1 = require_single(schema, Role::Treatment, 1, "first-period treatment");
  const ColumnDecl* d2 = require_single(schema, Role::Treatment, 2, "second-period treatment");
  const auto x1 = require(schema, Role::Covariate, 1, "first-period covariate");
  const auto x2 = require(schema, Role::Covariate, 2, "second-period covariate");
  if (settings) *settings = {{setting_of(*d1)}, {setting_of(*d2)}, settings_of(x1), settings_of(x2)};
  return {data.column(y.name), data.columns({d1}), data.columns({d2}), data.columns(x1), data.columns(x2)};
}

AltPopulation to_alt_population(const Dataset& data, const DataSchema& schema) {
  const ColumnDecl* d1 = require_single(schema, Role::Treatment, 1, "first-period treatment");
  const auto x1 = require(schema, Role::Covariate, 1, "first-period covariate");
  const auto x2 = require(schema, Role::Covariate, 2, "second-period covariate");
  return {data.columns({d1}), data.columns(x1), data.columns(x2)};
}

HorizonData to_horizon(const Dataset& data, const DataSchema& schema, bool markov,
                       std::vector<std::vector<ColumnSetting>>* d_settings,
                       std::vector<std::vector<ColumnSetting>>* x_settings) {
  const int T = schema.treatment_periods();
  if (T < 2) throw_input("horizon estimation needs treatments for at least 2 periods");
  HorizonData out;
  out.y = data.column(schema.outcome().name);
  out.markov = markov;
  if (d_settings) d_settings->clear();
  if (x_settings) x_settings->clear();
  for (int t = 1; t <= T; ++t) {
    const std::string tag = "period " + std::to_string(t);
    const ColumnDecl* d = require_single(schema, Role::Treatment, t, "treatment");
    const auto x = require(schema, Role::Covariate, t, "covariate");
    out.d.push_back(data.columns({d}));
    out.x.push_back(data.columns(x));
    if (d_settings) d_settings->push_back({setting_of(*d)});
    if (x_settings) x_settings->push_back(settings_of(x));
  }
  return out;
}

}  // namespace seqkernel
