#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "seqkernel/horizon.hpp"
#include "seqkernel/kernels.hpp"
#include "seqkernel/mediation.hpp"
#include "seqkernel/timevarying.hpp"

namespace seqkernel {

enum class Role { Outcome, Treatment, Mediator, Covariate };

struct ColumnDecl {
  std::string name;
  Role role = Role::Covariate;
  int period = 1;  // treatment/covariate period, 1-based
  ColumnKind kind = ColumnKind::Continuous;
  std::optional<double> lengthscale;  // empty: median heuristic
};

// Role strings: outcome, treatment (= treatment1), treatmentN, mediator,
// covariate (= covariate1), covariateN.
Role parse_role(const std::string& text, int& period);
std::string role_name(Role role, int period);
ColumnKind parse_kind(const std::string& text);
std::string kind_name(ColumnKind kind);

struct DataSchema {
  std::vector<ColumnDecl> columns;

  const ColumnDecl& outcome() const;
  std::vector<const ColumnDecl*> with_role(Role role, int period = 0) const;
  int treatment_periods() const;
  void validate() const;
};

// Columnar numeric table.
struct Dataset {
  std::vector<std::string> names;
  Eigen::MatrixXd values;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index index_of(const std::string& name) const;
  Eigen::VectorXd column(const std::string& name) const;
  Eigen::MatrixXd columns(const std::vector<const ColumnDecl*>& decls) const;
};

// Names: y -> outcome; d, dN -> treatment; m, m_* -> mediator; x, x_* ->
// covariate1; xN, xN_* -> covariateN. Treatments whose values are all 0/1 are
// marked discrete; everything else is continuous.
DataSchema infer_schema(const Dataset& data);

// Reads a header-plus-rows CSV of decimal numbers. Errors cite 1-based data
// row and column name.
Dataset read_csv(const std::string& path);
// read_csv plus schema validation (declared columns present, discrete columns integer-coded).
Dataset load_csv(const std::string& path, const DataSchema& schema);

void write_csv(const Dataset& data, const std::string& path, int significant_digits = 17);

struct Surface {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

inline constexpr int kSurfaceDigits = 12;
// One row per grid point, 12 significant digits.
void write_surface(const Surface& surface, const std::string& path);

std::string format_number(double v, int significant_digits);

MediationData to_mediation(const Dataset& data, const DataSchema& schema, MediationKernelSettings* settings = nullptr);
TimeVaryingData to_time_varying(const Dataset& data, const DataSchema& schema,
                                TimeVaryingKernelSettings* settings = nullptr);
AltPopulation to_alt_population(const Dataset& data, const DataSchema& schema);
HorizonData to_horizon(const Dataset& data, const DataSchema& schema, bool markov,
                       std::vector<std::vector<ColumnSetting>>* d_settings = nullptr,
                       std::vector<std::vector<ColumnSetting>>* x_settings = nullptr);

}  // namespace seqkernel
