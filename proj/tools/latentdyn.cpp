// Copyright 2026 The LatentDyn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// latentdyn: command-line driver for data generation, training, sweeps,
// PBT, the linear autoencoder demo, decoding and plot tables.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "latentdyn/config.hpp"
#include "latentdyn/container.hpp"
#include "latentdyn/csv.hpp"
#include "latentdyn/dataset_io.hpp"
#include "latentdyn/decode.hpp"
#include "latentdyn/error.hpp"
#include "latentdyn/linear_ae.hpp"
#include "latentdyn/manifest.hpp"
#include "latentdyn/metrics.hpp"
#include "latentdyn/pbt.hpp"
#include "latentdyn/rng.hpp"
#include "latentdyn/trainer.hpp"

namespace fs = std::filesystem;
using namespace latentdyn;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool force = false;
  std::optional<std::size_t> max_workers;
  std::optional<std::string> cd;
  std::optional<double> sv_frac;
  std::optional<double> data_fraction;
  std::optional<std::size_t> draws;
  std::string checkpoint;             // decode
  std::vector<std::string> inputs;    // plotdata
};

struct Run {
  std::string command;
  ExperimentConfig cfg;
  fs::path out;
  RunManifest manifest;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

// ---- setup ---------------------------------------------------------------

fs::path OutputDir(const std::string& command, const Flags& f, const ExperimentConfig& cfg) {
  if (!f.out.empty()) return f.out;
  const char* env = std::getenv("LATENTDYN_OUT");
  const fs::path root = env && *env ? fs::path(env) : fs::path("latentdyn_out");
  if (!cfg.output.empty()) {
    const fs::path p(cfg.output);
    return p.is_absolute() || !(env && *env) ? p : root / p;
  }
  return root / command;
}

void PrepareOutputDir(const fs::path& dir, bool force) {
  std::error_code ec;
  if (fs::exists(dir, ec) && !fs::is_empty(dir, ec)) {
    Require(force, ErrorCategory::kState, dir.string() + " is not empty; pass --force to overwrite");
  }
  fs::create_directories(dir, ec);
  Require(!ec, ErrorCategory::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

Run Begin(const std::string& command, const Flags& f) {
  Run r;
  r.command = command;
  if (!f.config.empty()) {
    Require(fs::exists(f.config), ErrorCategory::kIo, "config not found: " + f.config);
    r.cfg = LoadExperimentConfig(f.config);
    r.manifest.inputs[f.config] = GitBlobHashFile(f.config);
  }
  ExperimentConfig& c = r.cfg;
  if (f.seed) {
    if (command == "generate") c.data.seed = *f.seed;
    if (command == "train") c.train.seed = *f.seed;
    if (command == "sweep") c.sweep.seed = *f.seed;
    if (command == "pbt") c.pbt.seed = *f.seed;
    if (command == "linear-demo") c.linear.seed = c.linear.train.seed = *f.seed;
    if (command == "decode") c.decode.seed = *f.seed;
  }
  if (f.max_workers) {
    Require(*f.max_workers >= 1, ErrorCategory::kInvalidArgument, "--max-workers must be >= 1");
    c.sweep.max_workers = c.pbt.max_workers = *f.max_workers;
  }
  if (f.cd) c.train.cd_enabled = c.linear.train.cd_enabled = *f.cd == "on";
  if (f.sv_frac) {
    c.train.sv_enabled = *f.sv_frac > 0;
    if (*f.sv_frac > 0) c.train.sv_frac = *f.sv_frac;
  }
  if (f.data_fraction) c.data_fraction = *f.data_fraction;
  if (f.draws) c.draws = *f.draws;
  if (!f.checkpoint.empty()) c.decode.checkpoint = f.checkpoint;
  c.Validate();
  r.out = OutputDir(command, f, c);
  PrepareOutputDir(r.out, f.force);
  r.manifest.command = command;
  return r;
}

// Parses every CSV and container named in the manifest, then writes it.
void Finish(Run& r) {
  for (const auto& [name, _] : r.manifest.outputs) {
    const fs::path p = r.out / name;
    Require(fs::exists(p), ErrorCategory::kIo, "artifact missing after write: " + p.string());
    if (p.extension() == ".csv") CsvTable::Load(p);
    if (p.extension() == ".ldt") TensorContainer::Load(p);
  }
  r.manifest.config = ToJson(r.cfg);
  r.manifest.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - r.start).count();
  WriteManifest(r.out, r.manifest);
  std::cout << r.command << ": wrote " << r.out.string() << "\n";
}

TrainConfig FitToData(TrainConfig t, const GroundTruthDataset& d) {
  t.arch.n_neurons = d.n_neurons();
  t.arch.n_bins = d.n_bins();
  t.arch.Validate();
  return t;
}

// The architecture's data dimensions always follow the dataset.
GroundTruthDataset LoadOrSimulate(Run& r) {
  GroundTruthDataset d;
  if (!r.cfg.dataset.empty()) {
    Require(fs::exists(r.cfg.dataset), ErrorCategory::kIo, "dataset not found: " + r.cfg.dataset);
    r.manifest.inputs[r.cfg.dataset] = GitBlobHashFile(r.cfg.dataset);
    d = LoadDataset(r.cfg.dataset);
  } else {
    r.manifest.seeds["data"] = r.cfg.data.seed;
    d = SimulateChaoticRnn(r.cfg.data);
  }
  r.cfg.train = FitToData(r.cfg.train, d);
  return d;
}

struct Draw {
  GroundTruthDataset data;
  fs::path dir;
  std::string rel;  // prefix for manifest output names
};

// One entry per subsample draw; the full dataset writes straight into out.
std::vector<Draw> Draws(const Run& r, const GroundTruthDataset& data) {
  auto subsets = SubsampleTrials(data, r.cfg.data_fraction, r.cfg.draws, r.cfg.split_seed);
  std::vector<Draw> out;
  for (std::size_t k = 0; k < subsets.size(); ++k) {
    Draw d{std::move(subsets[k]), r.out, ""};
    if (r.cfg.data_fraction < 1) {
      d.rel = "draw" + std::to_string(k) + "/";
      d.dir = r.out / ("draw" + std::to_string(k));
      fs::create_directories(d.dir);
    }
    out.push_back(std::move(d));
  }
  return out;
}

CsvTable SummaryHeader() {
  CsvTable t;
  t.header = {"method", "data_fraction", "draw", "n_trials", "valid_loss", "sv_loss", "rate_r2", "decode_r2"};
  return t;
}

void AddSummary(CsvTable& t, const std::string& method, double fraction, std::size_t draw, std::size_t n_trials,
                const MetricRecord& m) {
  t.rows.push_back({method, FormatNumber(fraction), std::to_string(draw), std::to_string(n_trials),
                    FormatNumber(m.valid_loss), FormatNumber(m.sv_loss), FormatNumber(m.rate_r2),
                    FormatNumber(m.decode_r2)});
}

// ---- commands ------------------------------------------------------------

void CmdGenerate(const Flags& f) {
  Run r = Begin("generate", f);
  Require(r.cfg.dataset.empty(), ErrorCategory::kInvalidArgument, "generate simulates from `data`, not `dataset`");
  const GroundTruthDataset d = SimulateChaoticRnn(r.cfg.data);
  r.manifest.seeds["data"] = r.cfg.data.seed;
  SaveDataset(d, r.out / "dataset.ldt");
  r.manifest.outputs["dataset.ldt"];
  Finish(r);
}

void CmdTrain(const Flags& f) {
  Run r = Begin("train", f);
  const GroundTruthDataset data = LoadOrSimulate(r);
  r.manifest.seeds["split"] = r.cfg.split_seed;
  r.manifest.seeds["train"] = r.cfg.train.seed;
  CsvTable summary = SummaryHeader();
  auto draws = Draws(r, data);
  for (std::size_t k = 0; k < draws.size(); ++k) {
    const Draw& d = draws[k];
    const TrainConfig tc = FitToData(r.cfg.train, d.data);
    const TrainInputs in =
        PrepareInputs(d.data, r.cfg.valid_frac, tc.sv_enabled ? tc.sv_frac : 0.0, r.cfg.split_seed);
    const TrainResult res = Train(tc, in);
    if (res.failed) std::cerr << "warning: training diverged: " << res.failure << "\n";
    MetricsTable(res.log).Save(d.dir / "metrics.csv");
    res.checkpoint.ToContainer().Save(d.dir / "checkpoint.ldt");
    r.manifest.outputs[d.rel + "metrics.csv"];
    r.manifest.outputs[d.rel + "checkpoint.ldt"];
    AddSummary(summary, "single", r.cfg.data_fraction, k, d.data.n_trials(), res.log.back());
  }
  summary.Save(r.out / "summary.csv");
  r.manifest.outputs["summary.csv"];
  Finish(r);
}

// The sweep model a practitioner would keep: lowest SV loss when SV is on,
// lowest standard validation loss otherwise.
const SweepRow* SelectSweepModel(const std::vector<SweepRow>& rows, bool by_sv) {
  const SweepRow* best = nullptr;
  for (const SweepRow& row : rows) {
    if (row.failed) continue;
    const double v = by_sv ? row.final.sv_loss.value_or(INFINITY) : row.final.valid_loss;
    const double b = !best ? INFINITY : by_sv ? best->final.sv_loss.value_or(INFINITY) : best->final.valid_loss;
    if (!best || v < b) best = &row;
  }
  return best;
}

void CmdSweep(const Flags& f) {
  Run r = Begin("sweep", f);
  const GroundTruthDataset data = LoadOrSimulate(r);
  r.manifest.seeds["split"] = r.cfg.split_seed;
  r.manifest.seeds["sweep"] = r.cfg.sweep.seed;
  CsvTable summary = SummaryHeader();
  auto draws = Draws(r, data);
  for (std::size_t k = 0; k < draws.size(); ++k) {
    const Draw& d = draws[k];
    const TrainConfig tc = FitToData(r.cfg.train, d.data);
    const TrainInputs in =
        PrepareInputs(d.data, r.cfg.valid_frac, tc.sv_enabled ? tc.sv_frac : 0.0, r.cfg.split_seed);
    const auto rows = RandomSweep(tc, in, r.cfg.sweep);
    SweepTable(rows).Save(d.dir / "sweep.csv");
    r.manifest.outputs[d.rel + "sweep.csv"];
    if (const SweepRow* best = SelectSweepModel(rows, tc.sv_enabled)) {
      AddSummary(summary, "random_search", r.cfg.data_fraction, k, d.data.n_trials(), best->final);
    }
  }
  summary.Save(r.out / "summary.csv");
  r.manifest.outputs["summary.csv"];
  Finish(r);
}

void CmdPbt(const Flags& f) {
  Run r = Begin("pbt", f);
  const GroundTruthDataset data = LoadOrSimulate(r);
  r.manifest.seeds["split"] = r.cfg.split_seed;
  r.manifest.seeds["pbt"] = r.cfg.pbt.seed;
  CsvTable summary = SummaryHeader();
  auto draws = Draws(r, data);
  for (std::size_t k = 0; k < draws.size(); ++k) {
    const Draw& d = draws[k];
    const TrainConfig tc = FitToData(r.cfg.train, d.data);
    const TrainInputs in =
        PrepareInputs(d.data, r.cfg.valid_frac, tc.sv_enabled ? tc.sv_frac : 0.0, r.cfg.split_seed);
    PbtConfig pc = r.cfg.pbt;
    if (r.cfg.pbt_keep_checkpoints) pc.checkpoint_dir = d.dir / "checkpoints";
    const PbtResult res = RunPbt(pc, r.cfg.space, tc, in);
    res.history.Save(d.dir / "pbt_history.csv");
    res.best.ckpt.ToContainer().Save(d.dir / "best_checkpoint.ldt");
    r.manifest.outputs[d.rel + "pbt_history.csv"];
    r.manifest.outputs[d.rel + "best_checkpoint.ldt"];
    TrainConfig best_cfg = tc;
    best_cfg.hps = res.best.hps;
    AddSummary(summary, "pbt", r.cfg.data_fraction, k, d.data.n_trials(), Evaluate(res.best.ckpt, best_cfg, in));
  }
  summary.Save(r.out / "summary.csv");
  r.manifest.outputs["summary.csv"];
  Finish(r);
}

void CmdLinearDemo(const Flags& f) {
  Run r = Begin("linear-demo", f);
  const LinearDemoConfig& lc = r.cfg.linear;
  r.manifest.seeds["linear_demo"] = lc.seed;
  const LinearDemoDataset data = GenLinearDemo(lc.d, lc.m, lc.n_train, lc.n_val, lc.seed);
  LinearAeOptions opts = lc.train;
  opts.seed = StreamSeed(lc.seed, "linear_demo/train");
  std::optional<LinearAeState> st;
  std::string failure;
  try {
    st = TrainLinearAe(data, opts);
  } catch (const DivergenceError& e) {
    failure = e.what();
  }
  Require(st.has_value(), ErrorCategory::kDivergence, "linear autoencoder diverged: " + failure);
  CsvTable curve;
  curve.header = {"step", "train_recon", "valid_recon", "valid_true"};
  double min_true = INFINITY;
  for (const auto& p : st->curve) {
    curve.rows.push_back({std::to_string(p.step), FormatNumber(p.train_recon), FormatNumber(p.valid_recon),
                          FormatNumber(p.valid_true)});
    min_true = std::min(min_true, p.valid_true);
  }
  curve.Save(r.out / "curve.csv");
  CsvTable summary;
  summary.header = {"cd", "oracle_true_loss", "final_valid_true", "min_valid_true", "mean_abs_diag_minus_one",
                    "max_abs_diag", "max_abs_diag_seen"};
  summary.rows.push_back({opts.cd_enabled ? "on" : "off", FormatNumber(OracleTrueLoss(data)),
                          FormatNumber(st->curve.back().valid_true), FormatNumber(min_true),
                          FormatNumber(MeanAbsDiagMinusOne(st->u)), FormatNumber(MaxAbsDiag(st->u)),
                          FormatNumber(st->max_abs_diag_seen)});
  summary.Save(r.out / "summary.csv");
  TensorContainer u;
  u.Put("u", st->u);
  u.meta()["kind"] = "linear_ae";
  u.Save(r.out / "weights.ldt");
  for (const char* n : {"curve.csv", "summary.csv", "weights.ldt"}) r.manifest.outputs[n];
  Finish(r);
}

fs::path ResolveCheckpoint(const std::string& given) {
  Require(!given.empty(), ErrorCategory::kInvalidArgument, "decode with rate features needs --checkpoint");
  fs::path p(given);
  if (fs::is_directory(p)) {
    for (const char* n : {"best_checkpoint.ldt", "checkpoint.ldt"}) {
      if (fs::exists(p / n)) return p / n;
    }
    Fail(ErrorCategory::kIo, "no checkpoint in " + p.string());
  }
  Require(fs::exists(p), ErrorCategory::kIo, "checkpoint not found: " + p.string());
  return p;
}

void CmdDecode(const Flags& f) {
  Run r = Begin("decode", f);
  const DecodeConfig& dc = r.cfg.decode;
  const GroundTruthDataset data = LoadOrSimulate(r);
  Require(data.has_behavior(), ErrorCategory::kSchema, "dataset has no behavior to decode");
  r.manifest.seeds["decode"] = dc.seed;
  Tensor features;
  if (dc.features == "rates") {
    const fs::path ck = ResolveCheckpoint(dc.checkpoint);
    r.manifest.inputs[ck.string()] = GitBlobHashFile(ck);
    const Checkpoint c = Checkpoint::FromContainer(TensorContainer::Load(ck));
    Require(c.model.arch().n_neurons == data.n_neurons() && c.model.arch().n_bins == data.n_bins(),
            ErrorCategory::kShapeMismatch, "checkpoint architecture does not match the dataset");
    features = InferRates(c.model, data.spikes, data.bin_width);
  } else if (dc.features == "true_rates") {
    Require(data.has_rates(), ErrorCategory::kSchema, "dataset has no true rates");
    features = data.true_rates;
  } else {
    features = GaussianSmooth(data.spikes, dc.smooth_sigma, data.bin_width);
  }
  const DecodeResult res = FitOleCv(features, data.behavior, dc.k_folds, dc.seed);
  CsvTable t;
  t.header = {"target", "r2"};
  for (std::size_t k = 0; k < res.r2_per_dim.size(); ++k) {
    t.rows.push_back({std::to_string(k), FormatNumber(res.r2_per_dim[k])});
  }
  t.rows.push_back({"mean", FormatNumber(res.MeanR2())});
  t.Save(r.out / "decode.csv");
  TensorContainer pred;
  pred.Put("predictions", res.predictions);
  std::vector<std::int64_t> folds(res.fold_of_trial.begin(), res.fold_of_trial.end());
  pred.Put("fold_of_trial", SpikeTensor({folds.size()}, folds));
  pred.meta()["kind"] = "decode";
  pred.meta()["rank_deficient"] = res.rank_deficient;
  pred.Save(r.out / "predictions.ldt");
  r.manifest.outputs["decode.csv"];
  r.manifest.outputs["predictions.ldt"];
  Finish(r);
}

// ---- plotdata ------------------------------------------------------------

std::vector<fs::path> FindInputs(const std::vector<std::string>& given) {
  std::vector<fs::path> out;
  for (const std::string& g : given) {
    const fs::path p(g);
    Require(fs::exists(p), ErrorCategory::kIo, "input not found: " + g);
    if (fs::is_directory(p)) {
      for (const auto& e : fs::recursive_directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".csv") out.push_back(e.path());
      }
    } else {
      out.push_back(p);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool HasColumns(const CsvTable& t, std::initializer_list<const char*> cols) {
  for (const char* c : cols) {
    if (std::find(t.header.begin(), t.header.end(), c) == t.header.end()) return false;
  }
  return true;
}

void CmdPlotdata(const Flags& f) {
  Run r = Begin("plotdata", f);
  Require(!f.inputs.empty(), ErrorCategory::kInvalidArgument, "plotdata needs at least one --input");
  CsvTable valid_scatter, sv_scatter, progress;
  valid_scatter.header = {"source", "model", "valid_loss", "rate_r2"};
  sv_scatter.header = {"source", "model", "sv_loss", "rate_r2"};
  progress.header = {"source", "generation", "best_fitness", "median_fitness", "best_member_rate_r2"};
  // (method, fraction) -> rate_r2 values, decode_r2 values
  std::map<std::pair<std::string, std::string>, std::pair<std::vector<double>, std::vector<double>>> by_size;

  for (const fs::path& p : FindInputs(f.inputs)) {
    const CsvTable t = CsvTable::Load(p);
    const std::string src = p.generic_string();
    bool used = false;
    if (HasColumns(t, {"model", "valid_loss", "sv_loss", "rate_r2", "l2_gen_scale"})) {
      used = true;
      r.manifest.inputs[src] = GitBlobHashFile(p);
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto r2 = t.Number(i, "rate_r2");
        if (!r2) continue;
        const std::string& model = t.rows[i][t.Column("model")];
        valid_scatter.rows.push_back({src, model, FormatNumber(t.Number(i, "valid_loss")), FormatNumber(r2)});
        if (const auto sv = t.Number(i, "sv_loss")) {
          sv_scatter.rows.push_back({src, model, FormatNumber(sv), FormatNumber(r2)});
        }
      }
    } else if (HasColumns(t, {"generation", "member_id", "fitness", "rate_r2", "failed"})) {
      used = true;
      r.manifest.inputs[src] = GitBlobHashFile(p);
      std::map<long long, std::vector<std::pair<double, std::optional<double>>>> gens;
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        if (t.rows[i][t.Column("failed")] == "1") continue;
        const auto g = t.Number(i, "generation");
        const auto fit = t.Number(i, "fitness");
        if (g && fit) gens[static_cast<long long>(*g)].push_back({*fit, t.Number(i, "rate_r2")});
      }
      for (auto& [g, v] : gens) {
        std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<double> fits;
        for (const auto& e : v) fits.push_back(e.first);
        const std::size_t n = fits.size();
        const double median = n % 2 ? fits[n / 2] : 0.5 * (fits[n / 2 - 1] + fits[n / 2]);
        progress.rows.push_back(
            {src, std::to_string(g), FormatNumber(v.front().first), FormatNumber(median), FormatNumber(v.front().second)});
      }
    } else if (HasColumns(t, {"method", "data_fraction", "rate_r2", "decode_r2"})) {
      used = true;
      r.manifest.inputs[src] = GitBlobHashFile(p);
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        auto& slot = by_size[{t.rows[i][t.Column("method")], t.rows[i][t.Column("data_fraction")]}];
        if (const auto v = t.Number(i, "rate_r2")) slot.first.push_back(*v);
        if (const auto v = t.Number(i, "decode_r2")) slot.second.push_back(*v);
      }
    }
    if (!used) std::cerr << "plotdata: skipping " << src << " (not a sweep, PBT or summary table)\n";
  }

  auto mean = [](const std::vector<double>& v) -> std::optional<double> {
    if (v.empty()) return std::nullopt;
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  CsvTable sizes;
  sizes.header = {"method", "data_fraction", "n_runs", "rate_r2_mean", "decode_r2_mean"};
  for (const auto& [key, v] : by_size) {
    sizes.rows.push_back({key.first, key.second, std::to_string(std::max(v.first.size(), v.second.size())),
                          FormatNumber(mean(v.first)), FormatNumber(mean(v.second))});
  }
  Require(!valid_scatter.rows.empty() || !progress.rows.empty() || !sizes.rows.empty(), ErrorCategory::kSchema,
          "no recognizable inputs");
  const std::pair<const char*, const CsvTable*> tables[] = {{"valid_vs_rate_r2.csv", &valid_scatter},
                                                            {"sv_vs_rate_r2.csv", &sv_scatter},
                                                            {"pbt_progress.csv", &progress},
                                                            {"r2_vs_data_fraction.csv", &sizes}};
  for (const auto& [name, table] : tables) {
    if (table->rows.empty()) continue;
    table->Save(r.out / name);
    r.manifest.outputs[name];
  }
  Finish(r);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential autoencoders with coordinated dropout and sample validation"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "experiment config (JSON)");
  app.add_option("--seed", f.seed, "seed for the command's primary random stream");
  app.add_option("--out", f.out, "output directory (default: $LATENTDYN_OUT/<command>)");
  app.add_flag("--force", f.force, "write into a non-empty output directory");
  app.add_option("--max-workers", f.max_workers, "concurrent trainers for sweep and pbt");
  app.add_option("--cd", f.cd, "coordinated dropout")->check(CLI::IsMember({"on", "off"}));
  app.add_option("--sv-frac", f.sv_frac, "speckled holdout fraction, 0 disables")->check(CLI::Range(0.0, 0.99));
  app.add_option("--data-fraction", f.data_fraction, "fraction of trials to keep")->check(CLI::Range(0.0, 1.0));
  app.add_option("--draws", f.draws, "independent subsamples when --data-fraction < 1");

  struct Sub {
    const char* name;
    const char* help;
    void (*fn)(const Flags&);
  };
  const Sub subs[] = {
      {"generate", "simulate a chaotic-RNN dataset", CmdGenerate},
      {"train", "train one model", CmdTrain},
      {"sweep", "random hyperparameter search", CmdSweep},
      {"pbt", "population based training", CmdPbt},
      {"linear-demo", "linear autoencoder with and without coordinated dropout", CmdLinearDemo},
      {"decode", "cross-validated linear decoding of behavior", CmdDecode},
      {"plotdata", "collate sweep, PBT and summary tables into scatter tables", CmdPlotdata},
  };
  void (*chosen)(const Flags&) = nullptr;
  for (const Sub& s : subs) {
    CLI::App* sc = app.add_subcommand(s.name, s.help);
    if (std::string(s.name) == "decode") sc->add_option("--checkpoint", f.checkpoint, "checkpoint file or run dir");
    if (std::string(s.name) == "plotdata") sc->add_option("--input", f.inputs, "CSV file or directory")->expected(1, -1);
    sc->callback([&chosen, fn = s.fn] { chosen = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[" << CategoryName(ErrorCategory::kInvalidArgument) << "]: " << e.what() << "\n";
    return ExitCode(ErrorCategory::kInvalidArgument);
  }
  try {
    chosen(f);
  } catch (const Error& e) {
    std::cerr << "error[" << CategoryName(e.category()) << "]: " << e.what() << "\n";
    return ExitCode(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
