#include "seqkernel/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "seqkernel/errors.hpp"

namespace seqkernel {

using nlohmann::json;

namespace {

std::string criterion_name(Criterion c) { return c == Criterion::Gcv ? "gcv" : "loocv"; }

Criterion parse_criterion(const std::string& s) {
  if (s == "loocv") return Criterion::Loocv;
  if (s == "gcv") return Criterion::Gcv;
  throw_config("unknown criterion '" + s + "' (expected loocv or gcv)");
}

std::string alt_scale_name(AltPenaltyScale s) { return s == AltPenaltyScale::SourceSampleSize ? "source" : "alt"; }

AltPenaltyScale parse_alt_scale(const std::string& s) {
  if (s == "alt") return AltPenaltyScale::AltSampleSize;
  if (s == "source") return AltPenaltyScale::SourceSampleSize;
  throw_config("unknown alt_scale '" + s + "' (expected alt or source)");
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw_config(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw_config("unknown key '" + key + "' in " + where);
  }
}

template <class T>
T get(const json& obj, const char* key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw_config("bad value for '" + std::string(key) + "' in " + where);
  }
}

json lengthscale_json(const std::optional<double>& l) { return l ? json(*l) : json("auto"); }

std::optional<double> parse_lengthscale(const json& v, const std::string& where) {
  if (v.is_string() && v.get<std::string>() == "auto") return std::nullopt;
  if (v.is_number()) return v.get<double>();
  throw_config("lengthscale in " + where + " must be \"auto\" or a number");
}

}  // namespace

TuningOptions ExperimentConfig::tuning() const {
  TuningOptions opts;
  opts.grid = logspace_grid(lambda_grid.min, lambda_grid.max, lambda_grid.count);
  opts.criterion = criterion;
  return opts;
}

Penalty ExperimentConfig::penalty() const { return lambda ? Penalty::fixed(*lambda) : Penalty::tuned(); }

void ExperimentConfig::validate() const {
  if (!schema.columns.empty()) schema.validate();
  if (!(lambda_grid.min > 0.0) || !(lambda_grid.max >= lambda_grid.min) || lambda_grid.count < 1) {
    throw_config("lambda_grid needs 0 < min <= max and count >= 1");
  }
  if (lambda && !(*lambda > 0.0)) throw_config("lambda must be positive");
  if (folds < 2) throw_config("folds must be at least 2");
  if (!(level > 0.0 && level < 1.0)) throw_config("level must lie in (0, 1)");
  if (grid_points < 1) throw_config("grid.points must be at least 1");
  if (herd_samples < 1) throw_config("herd_samples must be at least 1");
  if (threads < 1) throw_config("threads must be at least 1");
}

bool operator==(const ColumnDecl& a, const ColumnDecl& b) {
  return a.name == b.name && a.role == b.role && a.period == b.period && a.kind == b.kind &&
         a.lengthscale == b.lengthscale;
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return a.schema.columns == b.schema.columns && a.lambda_grid.min == b.lambda_grid.min &&
         a.lambda_grid.max == b.lambda_grid.max && a.lambda_grid.count == b.lambda_grid.count &&
         a.lambda == b.lambda && a.criterion == b.criterion && a.folds == b.folds && a.level == b.level &&
         a.grid_points == b.grid_points && a.grid == b.grid && a.seed == b.seed && a.output == b.output &&
         a.markov == b.markov && a.alt_scale == b.alt_scale && a.herd_samples == b.herd_samples &&
         a.threads == b.threads;
}

std::string to_json_string(const ExperimentConfig& c, int indent) {
  json schema = json::array();
  for (const auto& col : c.schema.columns) {
    schema.push_back({{"name", col.name},
                      {"role", role_name(col.role, col.period)},
                      {"kind", kind_name(col.kind)},
                      {"lengthscale", lengthscale_json(col.lengthscale)}});
  }
  json j = {{"schema", schema},
            {"lambda_grid", {{"min", c.lambda_grid.min}, {"max", c.lambda_grid.max}, {"count", c.lambda_grid.count}}},
            {"lambda", c.lambda ? json(*c.lambda) : json("tune")},
            {"criterion", criterion_name(c.criterion)},
            {"folds", c.folds},
            {"level", c.level},
            {"grid", {{"points", c.grid_points}, {"values", c.grid}}},
            {"seed", c.seed ? json(*c.seed) : json(nullptr)},
            {"output", c.output},
            {"markov", c.markov},
            {"alt_scale", alt_scale_name(c.alt_scale)},
            {"herd_samples", c.herd_samples},
            {"threads", c.threads}};
  return j.dump(indent);
}

ExperimentConfig from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw_config(std::string("config is not valid JSON: ") + e.what());
  }
  const std::string top = "config";
  check_keys(j,
             {"schema", "lambda_grid", "lambda", "criterion", "folds", "level", "grid", "seed", "output", "markov",
              "alt_scale", "herd_samples", "threads"},
             top);
  ExperimentConfig c;
  if (j.contains("schema")) {
    if (!j["schema"].is_array()) throw_config("schema must be an array");
    for (const auto& entry : j["schema"]) {
      const std::string where = "schema entry";
      check_keys(entry, {"name", "role", "kind", "lengthscale"}, where);
      ColumnDecl col;
      col.name = get<std::string>(entry, "name", where);
      col.role = parse_role(get<std::string>(entry, "role", where), col.period);
      if (entry.contains("kind")) col.kind = parse_kind(get<std::string>(entry, "kind", where));
      if (entry.contains("lengthscale")) col.lengthscale = parse_lengthscale(entry["lengthscale"], where + " '" + col.name + "'");
      c.schema.columns.push_back(col);
    }
  }
  if (j.contains("lambda_grid")) {
    const auto& g = j["lambda_grid"];
    check_keys(g, {"min", "max", "count"}, "lambda_grid");
    if (g.contains("min")) c.lambda_grid.min = get<double>(g, "min", "lambda_grid");
    if (g.contains("max")) c.lambda_grid.max = get<double>(g, "max", "lambda_grid");
    if (g.contains("count")) c.lambda_grid.count = get<int>(g, "count", "lambda_grid");
  }
  if (j.contains("lambda")) {
    const auto& v = j["lambda"];
    if (v.is_number()) {
      c.lambda = v.get<double>();
    } else if (!(v.is_string() && v.get<std::string>() == "tune")) {
      throw_config("lambda must be \"tune\" or a number");
    }
  }
  if (j.contains("criterion")) c.criterion = parse_criterion(get<std::string>(j, "criterion", top));
  if (j.contains("folds")) c.folds = get<int>(j, "folds", top);
  if (j.contains("level")) c.level = get<double>(j, "level", top);
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    check_keys(g, {"points", "values"}, "grid");
    if (g.contains("points")) c.grid_points = get<int>(g, "points", "grid");
    if (g.contains("values")) c.grid = get<std::vector<double>>(g, "values", "grid");
  }
  if (j.contains("seed") && !j["seed"].is_null()) {
    if (!j["seed"].is_number_unsigned()) throw_config("seed must be a nonnegative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("output")) c.output = get<std::string>(j, "output", top);
  if (j.contains("markov")) c.markov = get<bool>(j, "markov", top);
  if (j.contains("alt_scale")) c.alt_scale = parse_alt_scale(get<std::string>(j, "alt_scale", top));
  if (j.contains("herd_samples")) c.herd_samples = get<int>(j, "herd_samples", top);
  if (j.contains("threads")) c.threads = get<int>(j, "threads", top);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_input("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_string(ss.str());
}

void save_config(const ExperimentConfig& config, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_input("cannot write '" + path + "'");
  out << to_json_string(config) << '\n';
}

}  // namespace seqkernel
