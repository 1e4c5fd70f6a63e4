#include "seqkernel/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"
#include "seqkernel/config.hpp"
#include "seqkernel/counterfactual.hpp"
#include "seqkernel/dr_inference.hpp"
#include "seqkernel/errors.hpp"
#include "seqkernel/horizon.hpp"
#include "seqkernel/linalg.hpp"
#include "seqkernel/mediation.hpp"
#include "seqkernel/simulation.hpp"
#include "seqkernel/table.hpp"
#include "seqkernel/timevarying.hpp"

namespace seqkernel::cli {

using nlohmann::json;

namespace {

// Flags shared by the commands that read a dataset.
struct CommonFlags {
  std::string data;
  std::string config;
  std::string out;
  std::string report;
  // Shared by every subcommand, so presence is carried by the value itself.
  std::optional<int> threads;
  std::optional<std::string> criterion;
  std::optional<double> lambda;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool needs_data, bool out_required) {
  if (needs_data) cmd->add_option("--data", f.data, "Input CSV")->required()->check(CLI::ExistingFile);
  cmd->add_option("--config", f.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  auto* out = cmd->add_option("--out", f.out, "Output path");
  if (out_required) out->required();
  cmd->add_option("--threads", f.threads, "Worker threads")->check(CLI::PositiveNumber);
}

void add_tuning(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--criterion", f.criterion, "Penalty criterion")->check(CLI::IsMember({"loocv", "gcv"}));
  cmd->add_option("--lambda", f.lambda, "Fixed penalty for every ridge stage")->check(CLI::PositiveNumber);
}

void add_seed(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--seed", f.seed, "Random seed")->required();
}

ExperimentConfig resolve_config(const CommonFlags& f) {
  ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  if (f.threads) cfg.threads = *f.threads;
  if (f.criterion) cfg.criterion = *f.criterion == "gcv" ? Criterion::Gcv : Criterion::Loocv;
  if (f.lambda) cfg.lambda = *f.lambda;
  if (f.seed) cfg.seed = *f.seed;
  if (!f.out.empty()) cfg.output = f.out;
  cfg.validate();
  return cfg;
}

// Resolved config for result files. Worker count is left out so outputs do
// not depend on it.
json audit(const ExperimentConfig& cfg) {
  json j = json::parse(to_json_string(cfg));
  j.erase("threads");
  return j;
}

Dataset load_data(const std::string& path, ExperimentConfig& cfg) {
  if (cfg.schema.columns.empty()) {
    Dataset data = read_csv(path);
    cfg.schema = infer_schema(data);
    return data;
  }
  return load_csv(path, cfg.schema);
}

AltPopulation load_alt(const std::string& path, const DataSchema& schema) {
  DataSchema alt_schema;
  for (const auto& c : schema.columns) {
    const bool keep = (c.role == Role::Treatment && c.period == 1) || (c.role == Role::Covariate && c.period <= 2);
    if (keep) alt_schema.columns.push_back(c);
  }
  const Dataset data = read_csv(path);
  for (const auto& c : alt_schema.columns) {
    if (std::find(data.names.begin(), data.names.end(), c.name) == data.names.end()) {
      throw_input("'" + path + "': missing column '" + c.name + "' declared as " + role_name(c.role, c.period));
    }
  }
  return to_alt_population(data, alt_schema);
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw_input("cannot write '" + path + "'");
  file << text;
  if (!file) throw_input("failed while writing '" + path + "'");
}

void write_json(const std::string& path, const json& j, std::ostream& out) { write_text(path, j.dump(2) + "\n", out); }

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Explicit values win; discrete treatments use their observed codes; otherwise
// evenly spaced points over the 5th to 95th percentile.
std::vector<double> treatment_grid(const Eigen::MatrixXd& column, ColumnKind kind, const std::vector<double>& flag,
                                   const ExperimentConfig& cfg) {
  if (!flag.empty()) return flag;
  if (!cfg.grid.empty()) return cfg.grid;
  std::vector<double> v(column.data(), column.data() + column.rows());
  if (kind == ColumnKind::Discrete) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  }
  const double lo = percentile(v, 0.05);
  const double hi = percentile(v, 0.95);
  const int G = cfg.grid_points;
  std::vector<double> out(static_cast<std::size_t>(G));
  for (int i = 0; i < G; ++i) out[static_cast<std::size_t>(i)] = G == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (G - 1);
  return out;
}

ColumnKind treatment_kind(const DataSchema& schema, int period) {
  const auto cols = schema.with_role(Role::Treatment, period);
  if (cols.size() != 1) throw_input("schema must declare exactly one treatment" + std::to_string(period) + " column");
  return cols.front()->kind;
}

json describe_kernel(const KernelSpec& k) {
  if (const auto* eq = std::get_if<ExponentiatedQuadratic>(&k.form)) {
    return {{"type", "eq"}, {"lengthscales", eq->lengthscales}};
  }
  if (const auto* ind = std::get_if<Indicator>(&k.form)) return {{"type", "indicator"}, {"dim", ind->dim}};
  const auto& p = std::get<Product>(k.form);
  json factors = json::array();
  for (std::size_t i = 0; i < p.factors.size(); ++i) {
    json f = describe_kernel(p.factors[i]);
    f["columns"] = p.blocks[i];
    factors.push_back(f);
  }
  return {{"type", "product"}, {"factors", factors}};
}

std::string column_name(const std::string& stem, Eigen::Index j, Eigen::Index cols) {
  return cols == 1 ? stem : stem + "_" + std::to_string(j + 1);
}

Dataset to_table(const SimulatedDataset& sim) {
  // (name stem, block, split into name_1..name_k when wide)
  struct Block {
    std::string stem;
    Eigen::MatrixXd values;
    bool split;
  };
  std::vector<Block> blocks;
  if (is_mediation(sim.tag)) {
    const MediationData& d = sim.mediation();
    blocks = {{"y", d.y, false}, {"d", d.d, false}, {"m", d.m, true}, {"x", d.x, true}};
  } else {
    const TimeVaryingData& d = sim.time_varying();
    blocks = {{"y", d.y, false}, {"d1", d.d1, false}, {"d2", d.d2, false}, {"x1", d.x1, true}, {"x2", d.x2, true}};
  }
  Dataset out;
  Eigen::Index cols = 0;
  for (const auto& b : blocks) cols += b.values.cols();
  out.values.resize(blocks.front().values.rows(), cols);
  Eigen::Index c = 0;
  for (const auto& b : blocks) {
    for (Eigen::Index j = 0; j < b.values.cols(); ++j, ++c) {
      out.names.push_back(b.split ? column_name(b.stem, j, b.values.cols()) : b.stem);
      out.values.col(c) = b.values.col(j);
    }
  }
  return out;
}

std::vector<Eigen::Index> parse_sizes(const std::vector<long long>& raw) {
  std::vector<Eigen::Index> out;
  for (long long v : raw) {
    if (v < 5) throw_input("sample sizes must be at least 5");
    out.push_back(static_cast<Eigen::Index>(v));
  }
  return out;
}

MediationTuning mediation_tuning(const ExperimentConfig& cfg) { return {cfg.tuning(), cfg.penalty(), cfg.penalty()}; }

TimeVaryingTuning tv_tuning(const ExperimentConfig& cfg) {
  return {cfg.tuning(), cfg.penalty(), cfg.penalty(), cfg.penalty(), cfg.alt_scale};
}

// ---- simulate --------------------------------------------------------------

struct SimulateFlags {
  std::string dgp;
  long long n = 1000;
  int p = 1;
};

void cmd_simulate(const SimulateFlags& s, const CommonFlags& f, std::ostream&) {
  if (s.n < 5) throw_input("--n must be at least 5");
  const SimulatedDataset sim = simulate(parse_dgp(s.dgp), static_cast<Eigen::Index>(s.n), s.p, *f.seed);
  write_csv(to_table(sim), f.out);
}

// ---- fit-mediation ---------------------------------------------------------

struct FitFlags {
  std::vector<double> grid;
  std::string alt;
  bool markov = false;
};

void cmd_fit_mediation(const FitFlags& g, const CommonFlags& f, std::ostream& out) {
  ExperimentConfig cfg = resolve_config(f);
  const Dataset data = load_data(f.data, cfg);
  MediationKernelSettings settings;
  const MediationData md = to_mediation(data, cfg.schema, &settings);
  const MediationModel model = fit_mediation(md, resolve_kernels(md, settings), mediation_tuning(cfg));
  const std::vector<double> grid = treatment_grid(md.d, treatment_kind(cfg.schema, 1), g.grid, cfg);
  cfg.grid = grid;

  const Eigen::MatrixXd theta = theta_me_surface(model, grid, grid);
  Surface surface{{"d", "d_prime", "theta_me", "te", "de", "ie"}, {}};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const auto a = static_cast<Eigen::Index>(i);
      const auto b = static_cast<Eigen::Index>(j);
      const Decomposition dec = decompose_values(theta(a, b), theta(a, a), theta(b, b));
      surface.rows.push_back({grid[i], grid[j], dec.me, dec.te, dec.de, dec.ie});
    }
  }
  write_surface(surface, f.out);
  if (!f.report.empty()) {
    json r = {{"command", "fit-mediation"},
              {"n", md.n()},
              {"lambda", model.lambda},
              {"lambda1", model.lambda1},
              {"jitter", model.outcome.jitter_used},
              {"kernels",
               {{"d", describe_kernel(model.kernels.d)},
                {"m", describe_kernel(model.kernels.m)},
                {"x", describe_kernel(model.kernels.x)}}},
              {"config", audit(cfg)}};
    write_json(f.report, r, out);
  }
}

// ---- fit-gf ----------------------------------------------------------------

void fit_gf_two(const FitFlags& g, const CommonFlags& f, ExperimentConfig& cfg, const Dataset& data,
                std::ostream& out) {
  TimeVaryingKernelSettings settings;
  const TimeVaryingData tv = to_time_varying(data, cfg.schema, &settings);
  std::optional<AltPopulation> alt;
  if (!g.alt.empty()) alt = load_alt(g.alt, cfg.schema);
  const TimeVaryingModel model = fit_gf(tv, resolve_kernels(tv, settings), tv_tuning(cfg), alt);
  const std::vector<double> grid1 = treatment_grid(tv.d1, treatment_kind(cfg.schema, 1), g.grid, cfg);
  const std::vector<double> grid2 = treatment_grid(tv.d2, treatment_kind(cfg.schema, 2), g.grid, cfg);

  const Eigen::MatrixXd gf = theta_gf_surface(model, grid1, grid2);
  Eigen::MatrixXd ds;
  if (alt) ds = theta_ds_surface(model, grid1, grid2);
  const bool with_grad = model.kernels.d2.is_scalar_eq();
  Surface surface{{"d1", "d2", "theta_gf"}, {}};
  if (alt) surface.columns.push_back("theta_ds");
  if (with_grad) surface.columns.push_back("theta_grad");
  for (std::size_t i = 0; i < grid1.size(); ++i) {
    for (std::size_t j = 0; j < grid2.size(); ++j) {
      const auto a = static_cast<Eigen::Index>(i);
      const auto b = static_cast<Eigen::Index>(j);
      std::vector<double> row{grid1[i], grid2[j], gf(a, b)};
      if (alt) row.push_back(ds(a, b));
      if (with_grad) row.push_back(theta_gf_grad(model, grid1[i], grid2[j]));
      surface.rows.push_back(std::move(row));
    }
  }
  write_surface(surface, f.out);
  if (!f.report.empty()) {
    json r = {{"command", "fit-gf"},
              {"periods", 2},
              {"n", tv.n()},
              {"lambda", model.lambda},
              {"lambda4", model.lambda4},
              {"kernels",
               {{"d1", describe_kernel(model.kernels.d1)},
                {"d2", describe_kernel(model.kernels.d2)},
                {"x1", describe_kernel(model.kernels.x1)},
                {"x2", describe_kernel(model.kernels.x2)}}},
              {"grid_d1", grid1},
              {"grid_d2", grid2},
              {"config", audit(cfg)}};
    if (model.alt) {
      r["alt_n"] = model.alt->data.n();
      r["lambda5"] = model.alt->lambda5;
    }
    write_json(f.report, r, out);
  }
}

void fit_gf_horizon(const FitFlags& g, const CommonFlags& f, ExperimentConfig& cfg, const Dataset& data,
                    std::ostream& out) {
  if (!g.alt.empty()) throw_unsupported("--alt is only defined for two treatment periods");
  std::vector<std::vector<ColumnSetting>> d_settings, x_settings;
  const HorizonData hd = to_horizon(data, cfg.schema, cfg.markov, &d_settings, &x_settings);
  const HorizonModel model =
      fit_horizon(hd, resolve_kernels(hd, d_settings, x_settings), {cfg.tuning(), cfg.penalty(), cfg.penalty()});
  const std::size_t T = hd.periods();
  std::vector<std::vector<double>> grids;
  for (std::size_t t = 0; t < T; ++t) {
    grids.push_back(treatment_grid(hd.d[t], treatment_kind(cfg.schema, static_cast<int>(t + 1)), g.grid, cfg));
  }
  Surface surface;
  for (std::size_t t = 0; t < T; ++t) surface.columns.push_back("d" + std::to_string(t + 1));
  surface.columns.push_back("theta_gf");
  // Odometer over the per-period grids, last period fastest.
  std::vector<std::size_t> idx(T, 0);
  bool done = false;
  while (!done) {
    std::vector<double> path(T);
    for (std::size_t t = 0; t < T; ++t) path[t] = grids[t][idx[t]];
    std::vector<double> row = path;
    row.push_back(theta_gf_T(model, path));
    surface.rows.push_back(std::move(row));
    done = true;
    for (std::size_t t = T; t-- > 0;) {
      if (++idx[t] < grids[t].size()) {
        done = false;
        break;
      }
      idx[t] = 0;
    }
  }
  write_surface(surface, f.out);
  if (!f.report.empty()) {
    json kd = json::array(), kx = json::array();
    for (const auto& k : model.kernels.d) kd.push_back(describe_kernel(k));
    for (const auto& k : model.kernels.x) kx.push_back(describe_kernel(k));
    json r = {{"command", "fit-gf"},
              {"periods", T},
              {"markov", model.markov},
              {"n", hd.n()},
              {"lambda", model.lambda},
              {"stage_lambda", model.stage_lambda},
              {"kernels", {{"d", kd}, {"x", kx}}},
              {"grids", grids},
              {"config", audit(cfg)}};
    write_json(f.report, r, out);
  }
}

void cmd_fit_gf(const FitFlags& g, const CommonFlags& f, std::ostream& out) {
  ExperimentConfig cfg = resolve_config(f);
  if (g.markov) cfg.markov = true;
  const Dataset data = load_data(f.data, cfg);
  const int T = cfg.schema.treatment_periods();
  if (T < 2) throw_input("fit-gf needs treatment columns for at least two periods");
  if (T == 2) {
    fit_gf_two(g, f, cfg, data, out);
  } else {
    fit_gf_horizon(g, f, cfg, data, out);
  }
}

// ---- dml -------------------------------------------------------------------

struct DmlFlags {
  std::string kind;
  double d = 1.0;
  double d_prime = 0.0;
  int folds = 5;
  double level = 0.95;
  CLI::Option* folds_opt = nullptr;
  CLI::Option* level_opt = nullptr;
};

void require_discrete(const DataSchema& schema, int period) {
  if (treatment_kind(schema, period) != ColumnKind::Discrete) {
    throw_input("dml needs discrete treatments; treatment" + std::to_string(period) + " is continuous");
  }
}

void cmd_dml(const DmlFlags& k, const CommonFlags& f, std::ostream& out) {
  ExperimentConfig cfg = resolve_config(f);
  if (k.folds_opt->count()) cfg.folds = k.folds;
  if (k.level_opt->count()) cfg.level = k.level;
  cfg.validate();
  const Dataset data = load_data(f.data, cfg);
  const DmlOptions opts{cfg.folds, cfg.level, *cfg.seed, cfg.tuning(), cfg.threads};
  InferenceResult r;
  Eigen::Index n = 0;
  if (k.kind == "me") {
    require_discrete(cfg.schema, 1);
    MediationKernelSettings settings;
    const MediationData md = to_mediation(data, cfg.schema, &settings);
    n = md.n();
    r = dml_estimate(md, {k.d, k.d_prime}, opts, settings);
  } else {
    require_discrete(cfg.schema, 1);
    require_discrete(cfg.schema, 2);
    TimeVaryingKernelSettings settings;
    const TimeVaryingData tv = to_time_varying(data, cfg.schema, &settings);
    n = tv.n();
    r = dml_estimate(tv, {k.d, k.d_prime}, opts, settings);
  }
  const json j = {{"command", "dml"},
                  {"kind", k.kind},
                  {"d", k.d},
                  {"dprime", k.d_prime},
                  {"theta", r.theta_hat},
                  {"se", r.sigma_hat / std::sqrt(static_cast<double>(n))},
                  {"sigma", r.sigma_hat},
                  {"ci", {r.ci_low, r.ci_high}},
                  {"level", r.level},
                  {"n", n},
                  {"folds", cfg.folds},
                  {"config", audit(cfg)}};
  write_json(f.out, j, out);
}

// ---- herd ------------------------------------------------------------------

struct HerdFlags {
  std::string kind;
  double d = 1.0;
  double d_prime = 0.0;
  int J = 100;
  std::string alt;
  CLI::Option* j_opt = nullptr;
};

void cmd_herd(const HerdFlags& h, const CommonFlags& f, std::ostream& out) {
  ExperimentConfig cfg = resolve_config(f);
  if (h.j_opt->count()) cfg.herd_samples = h.J;
  cfg.validate();
  const Dataset data = load_data(f.data, cfg);
  const ColumnKind y_kind = cfg.schema.outcome().kind;
  DistEmbedding emb;
  Eigen::VectorXd Y;
  double lambda = 0.0;
  if (h.kind == "dme") {
    MediationKernelSettings settings;
    const MediationData md = to_mediation(data, cfg.schema, &settings);
    const MediationModel model = fit_mediation(md, resolve_kernels(md, settings), mediation_tuning(cfg));
    const OutcomeEmbeddingFit fit = fit_outcome_embedding(model, outcome_kernel(md.y, y_kind), cfg.tuning(), cfg.penalty());
    lambda = fit.lambda;
    emb = dist_embedding_me(model, fit, h.d, h.d_prime);
    Y = md.y;
  } else {
    if (h.kind == "dds" && h.alt.empty()) throw_input("herd --kind dds needs --alt");
    TimeVaryingKernelSettings settings;
    const TimeVaryingData tv = to_time_varying(data, cfg.schema, &settings);
    std::optional<AltPopulation> alt;
    if (h.kind == "dds") alt = load_alt(h.alt, cfg.schema);
    const TimeVaryingModel model = fit_gf(tv, resolve_kernels(tv, settings), tv_tuning(cfg), alt);
    const OutcomeEmbeddingFit fit = fit_outcome_embedding(model, outcome_kernel(tv.y, y_kind), cfg.tuning(), cfg.penalty());
    lambda = fit.lambda;
    emb = h.kind == "dgf" ? dist_embedding_gf(model, fit, h.d, h.d_prime) : dist_embedding_ds(model, fit, h.d, h.d_prime);
    Y = tv.y;
  }
  const HerdSet set = herd(emb, default_herding_grid(Y), cfg.herd_samples);
  Surface samples{{"j", "y"}, {}};
  for (std::size_t j = 0; j < set.samples.size(); ++j) samples.rows.push_back({static_cast<double>(j + 1), set.samples[j]});
  write_surface(samples, f.out);
  if (!f.report.empty()) {
    const json r = {{"command", "herd"},
                    {"kind", h.kind},
                    {"d", h.d},
                    {"dprime", h.d_prime},
                    {"J", cfg.herd_samples},
                    {"lambda_y", lambda},
                    {"y_kernel", describe_kernel(emb.y_kernel)},
                    {"mmd2", mmd_diag(set.samples, emb)},
                    {"config", audit(cfg)}};
    write_json(f.report, r, out);
  }
}

// ---- tune ------------------------------------------------------------------

json stage_json(const std::string& name, const TuneResult& r) {
  return {{"stage", name}, {"lambda", r.lambda}, {"scores", r.scores}};
}

void cmd_tune(const std::string& kind, const CommonFlags& f, std::ostream& out) {
  ExperimentConfig cfg = resolve_config(f);
  const Dataset data = load_data(f.data, cfg);
  const TuningOptions opts = cfg.tuning();
  json stages = json::array();
  json kernels;
  if (kind == "me") {
    MediationKernelSettings settings;
    const MediationData md = to_mediation(data, cfg.schema, &settings);
    const MediationKernels k = resolve_kernels(md, settings);
    const Eigen::MatrixXd KD = gram(k.d, md.d).entries;
    const Eigen::MatrixXd KM = gram(k.m, md.m).entries;
    const Eigen::MatrixXd KX = gram(k.x, md.x).entries;
    const Eigen::MatrixXd KDX = KD.cwiseProduct(KX);
    stages.push_back(stage_json("outcome", SpectralTuner(KDX.cwiseProduct(KM)).tune(md.y, opts.grid, opts.criterion)));
    stages.push_back(stage_json("embedding", SpectralTuner(KDX).tune_matrix(KM, opts.grid, opts.criterion)));
    kernels = {{"d", describe_kernel(k.d)}, {"m", describe_kernel(k.m)}, {"x", describe_kernel(k.x)}};
  } else {
    TimeVaryingKernelSettings settings;
    const TimeVaryingData tv = to_time_varying(data, cfg.schema, &settings);
    const TimeVaryingKernels k = resolve_kernels(tv, settings);
    const Eigen::MatrixXd K1 = gram(k.d1, tv.d1).entries.cwiseProduct(gram(k.x1, tv.x1).entries);
    const Eigen::MatrixXd K2 = gram(k.d2, tv.d2).entries;
    const Eigen::MatrixXd KX2 = gram(k.x2, tv.x2).entries;
    stages.push_back(
        stage_json("outcome", SpectralTuner(K1.cwiseProduct(K2).cwiseProduct(KX2)).tune(tv.y, opts.grid, opts.criterion)));
    stages.push_back(stage_json("embedding", SpectralTuner(K1).tune_matrix(KX2, opts.grid, opts.criterion)));
    kernels = {{"d1", describe_kernel(k.d1)},
               {"d2", describe_kernel(k.d2)},
               {"x1", describe_kernel(k.x1)},
               {"x2", describe_kernel(k.x2)}};
  }
  const json j = {{"command", "tune"},
                  {"kind", kind},
                  {"criterion", cfg.criterion == Criterion::Gcv ? "gcv" : "loocv"},
                  {"grid", opts.grid},
                  {"stages", stages},
                  {"kernels", kernels},
                  {"config", audit(cfg)}};
  write_json(f.out, j, out);
}

// ---- mse / coverage --------------------------------------------------------

struct StudyFlags {
  std::string dgp;
  std::string estimator = "rkhs";
  std::vector<long long> n;
  int reps = 20;
  int p = 1;
  double level = 0.95;
  int folds = 5;
  CLI::Option* folds_opt = nullptr;
  CLI::Option* level_opt = nullptr;
};

void cmd_mse(const StudyFlags& s, const CommonFlags& f, std::ostream& out) {
  ExperimentConfig cfg = resolve_config(f);
  const DgpTag tag = parse_dgp(s.dgp);
  const Estimator est = parse_estimator(s.estimator);
  const std::vector<Eigen::Index> sizes = parse_sizes(s.n);
  const std::vector<GridPoint> grid = default_mse_grid(tag);
  const StudyOptions opts{s.p, cfg.threads, cfg.tuning(), cfg.folds};
  const MseTable table = run_mse(tag, est, sizes, s.reps, grid, *cfg.seed, opts);
  json rows = json::array(), summary = json::array(), g = json::array();
  for (const auto& r : table.rows) rows.push_back({{"n", r.n}, {"rep", r.rep}, {"mse", r.mse}, {"sup_error", r.sup_error}});
  for (const auto& r : table.summary) {
    summary.push_back(
        {{"n", r.n}, {"median_mse", r.median_mse}, {"mean_mse", r.mean_mse}, {"median_sup_error", r.median_sup_error}});
  }
  for (const auto& [a, b] : grid) g.push_back({a, b});
  const json j = {{"command", "mse"}, {"dgp", dgp_name(tag)}, {"estimator", estimator_name(est)},
                  {"reps", s.reps},   {"p", s.p},              {"grid", g},
                  {"rows", rows},     {"summary", summary},    {"config", audit(cfg)}};
  write_json(f.out, j, out);
}

void cmd_coverage(const StudyFlags& s, const CommonFlags& f, std::ostream& out) {
  ExperimentConfig cfg = resolve_config(f);
  if (s.folds_opt->count()) cfg.folds = s.folds;
  if (s.level_opt->count()) cfg.level = s.level;
  cfg.validate();
  const DgpTag tag = parse_dgp(s.dgp);
  if (!has_binary_treatment(tag)) throw_input("coverage studies need a binary-treatment design (h2 or h4)");
  const Estimator est = parse_estimator(s.estimator);
  const std::vector<Eigen::Index> sizes = parse_sizes(s.n);
  const StudyOptions opts{s.p, cfg.threads, cfg.tuning(), cfg.folds};
  const CoverageTable table = run_coverage(tag, sizes, s.reps, cfg.level, *cfg.seed, est, opts);
  json rows = json::array(), reps = json::array();
  for (const auto& r : table.rows) {
    rows.push_back({{"n", r.n},
                    {"cell", {r.a, r.b}},
                    {"truth", r.truth},
                    {"mean", r.mean_estimate},
                    {"sd", r.sd_estimate},
                    {"se", r.se_estimate},
                    {"coverage", r.coverage},
                    {"mean_ci_width", r.mean_ci_width}});
  }
  for (const auto& r : table.reps) {
    reps.push_back({{"n", r.n},
                    {"rep", r.rep},
                    {"cell", {r.a, r.b}},
                    {"theta", r.theta},
                    {"sigma", r.sigma},
                    {"ci_width", r.ci_width},
                    {"covered", r.covered}});
  }
  const json j = {{"command", "coverage"}, {"dgp", dgp_name(tag)}, {"estimator", estimator_name(est)},
                  {"reps", s.reps},        {"level", cfg.level},   {"rows", rows},
                  {"replications", reps},  {"config", audit(cfg)}};
  write_json(f.out, j, out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kernel estimators of mediated and time-varying dose responses"};
  app.name("seqkernel");
  app.require_subcommand(1);

  CommonFlags common;
  std::function<void()> action;

  SimulateFlags sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Draw a dataset from a simulation design");
  simulate_cmd->add_option("--dgp", sim.dgp, "Design: h1, h2, h3, h4")->required()->check(CLI::IsMember({"h1", "h2", "h3", "h4"}));
  simulate_cmd->add_option("--n", sim.n, "Rows")->required();
  simulate_cmd->add_option("--p", sim.p, "Covariate dimension (h3, h4)")->check(CLI::PositiveNumber);
  add_common(simulate_cmd, common, false, true);
  add_seed(simulate_cmd, common);
  simulate_cmd->callback([&] { action = [&] { cmd_simulate(sim, common, out); }; });

  FitFlags fit;
  auto* med_cmd = app.add_subcommand("fit-mediation", "Mediated response surface over a treatment grid");
  add_common(med_cmd, common, true, true);
  add_tuning(med_cmd, common);
  med_cmd->add_option("--grid-d", fit.grid, "Treatment grid values")->delimiter(',');
  med_cmd->add_option("--report", common.report, "Write fitted penalties and kernels as JSON");
  med_cmd->callback([&] { action = [&] { cmd_fit_mediation(fit, common, out); }; });

  auto* gf_cmd = app.add_subcommand("fit-gf", "Time-varying response surface over a treatment grid");
  add_common(gf_cmd, common, true, true);
  add_tuning(gf_cmd, common);
  gf_cmd->add_option("--grid", fit.grid, "Treatment grid values, shared by every period")->delimiter(',');
  gf_cmd->add_option("--alt", fit.alt, "Alternative population CSV for distribution shift")->check(CLI::ExistingFile);
  gf_cmd->add_flag("--markov", fit.markov, "Condition each stage on the previous period only");
  gf_cmd->add_option("--report", common.report, "Write fitted penalties and kernels as JSON");
  gf_cmd->callback([&] { action = [&] { cmd_fit_gf(fit, common, out); }; });

  DmlFlags dml;
  auto* dml_cmd = app.add_subcommand("dml", "Cross-fitted doubly robust estimate with a confidence interval");
  dml_cmd->add_option("--kind", dml.kind, "me or gf")->required()->check(CLI::IsMember({"me", "gf"}));
  dml_cmd->add_option("--d", dml.d, "First treatment value (mediator arm, or d1)")->required();
  dml_cmd->add_option("--dprime", dml.d_prime, "Second treatment value (outcome arm, or d2)")->required();
  dml.folds_opt = dml_cmd->add_option("--folds", dml.folds, "Cross-fitting folds");
  dml.level_opt = dml_cmd->add_option("--level", dml.level, "Confidence level");
  add_common(dml_cmd, common, true, false);
  add_tuning(dml_cmd, common);
  add_seed(dml_cmd, common);
  dml_cmd->callback([&] { action = [&] { cmd_dml(dml, common, out); }; });

  HerdFlags hf;
  auto* herd_cmd = app.add_subcommand("herd", "Herded samples from a counterfactual outcome distribution");
  herd_cmd->add_option("--kind", hf.kind, "dme, dgf or dds")->required()->check(CLI::IsMember({"dme", "dgf", "dds"}));
  herd_cmd->add_option("--d", hf.d, "First treatment value")->required();
  herd_cmd->add_option("--dprime", hf.d_prime, "Second treatment value")->required();
  hf.j_opt = herd_cmd->add_option("--j", hf.J, "Number of samples")->check(CLI::PositiveNumber);
  herd_cmd->add_option("--alt", hf.alt, "Alternative population CSV (dds)")->check(CLI::ExistingFile);
  add_common(herd_cmd, common, true, true);
  add_tuning(herd_cmd, common);
  herd_cmd->add_option("--report", common.report, "Write penalty, kernel and MMD as JSON");
  herd_cmd->callback([&] { action = [&] { cmd_herd(hf, common, out); }; });

  std::string tune_kind;
  auto* tune_cmd = app.add_subcommand("tune", "Penalty scores over the lambda grid for each ridge stage");
  tune_cmd->add_option("--kind", tune_kind, "me or gf")->required()->check(CLI::IsMember({"me", "gf"}));
  add_common(tune_cmd, common, true, false);
  add_tuning(tune_cmd, common);
  tune_cmd->callback([&] { action = [&] { cmd_tune(tune_kind, common, out); }; });

  StudyFlags mse;
  auto* mse_cmd = app.add_subcommand("mse", "Grid MSE of the estimated response over replications");
  mse_cmd->add_option("--dgp", mse.dgp, "Design")->required()->check(CLI::IsMember({"h1", "h2", "h3", "h4"}));
  mse_cmd->add_option("--estimator", mse.estimator, "rkhs or truth")->check(CLI::IsMember({"rkhs", "truth"}));
  mse_cmd->add_option("--n", mse.n, "Sample sizes")->required()->delimiter(',');
  mse_cmd->add_option("--reps", mse.reps, "Replications")->check(CLI::PositiveNumber);
  mse_cmd->add_option("--p", mse.p, "Covariate dimension (h3, h4)")->check(CLI::PositiveNumber);
  add_common(mse_cmd, common, false, false);
  add_tuning(mse_cmd, common);
  add_seed(mse_cmd, common);
  mse_cmd->callback([&] { action = [&] { cmd_mse(mse, common, out); }; });

  StudyFlags cov;
  cov.n = {1000};
  cov.reps = 100;
  auto* cov_cmd = app.add_subcommand("coverage", "Interval coverage of the cross-fitted estimator");
  cov_cmd->add_option("--dgp", cov.dgp, "Design: h2 or h4")->required()->check(CLI::IsMember({"h2", "h4"}));
  cov_cmd->add_option("--estimator", cov.estimator, "rkhs or oracle")->check(CLI::IsMember({"rkhs", "oracle"}));
  cov_cmd->add_option("--n", cov.n, "Sample sizes")->delimiter(',');
  cov_cmd->add_option("--reps", cov.reps, "Replications")->check(CLI::PositiveNumber);
  cov_cmd->add_option("--p", cov.p, "Covariate dimension (h4)")->check(CLI::PositiveNumber);
  cov.folds_opt = cov_cmd->add_option("--folds", cov.folds, "Cross-fitting folds");
  cov.level_opt = cov_cmd->add_option("--level", cov.level, "Confidence level");
  add_common(cov_cmd, common, false, false);
  add_tuning(cov_cmd, common);
  add_seed(cov_cmd, common);
  cov_cmd->callback([&] { action = [&] { cmd_coverage(cov, common, out); }; });

  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("seqkernel");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitInput;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitInput;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitInput;
  }

  pin_blas_threads();
  try {
    action();
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace seqkernel::cli
