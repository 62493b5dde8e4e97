#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "countlink/evaluation.hpp"
#include "countlink/io.hpp"
#include "countlink/likelihood.hpp"
#include "countlink/sampler.hpp"
#include "countlink/synthetic.hpp"

namespace fs = std::filesystem;
using namespace countlink;

namespace {

struct StageError : std::runtime_error {
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(what), stage(std::move(stage)) {}
  std::string stage;
};

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

// Files written by the current command; removed again if it fails.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

  fs::path open() {
    if (!fs::exists(dir_)) {
      fs::create_directories(dir_);
      created_dir_ = true;
    }
    return dir_;
  }
  fs::path file(const std::string& name) {
    fs::path p = dir_ / name;
    written_.push_back(p);
    return p;
  }
  void commit() { committed_ = true; }
  ~Outputs() {
    if (committed_) return;
    std::error_code ec;
    for (const fs::path& p : written_) fs::remove(p, ec);
    if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
  }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
  bool created_dir_ = false;
  bool committed_ = false;
};

struct DataOptions {
  std::string input;
  std::string format = "edge_list";
  bool symmetric = false;
};

struct SplitOptions {
  std::string holdout = "interactions";
  double train_fraction = 0.8;
};

struct FitOptions {
  DataOptions data;
  SplitOptions split;
  std::string model;
  std::optional<std::size_t> dim;
  Hyperparams hyper;
  std::size_t samples = 500;
  std::size_t burn_in = 0;
  std::size_t thin = 1;
  std::uint64_t seed = 0;
  double rescale_factor = 2.0;
  std::size_t batch_size = 4;
  std::size_t init_iters = 2;
  bool prior_init = false;
  std::string out;
};

void add_data_options(CLI::App* cmd, DataOptions& o) {
  cmd->add_option("--input", o.input, "Count file (label<TAB>label<TAB>count)")->required();
  cmd->add_option("--format", o.format, "Input layout")
      ->check(CLI::IsMember({"edge_list", "pair_counts"}));
  cmd->add_flag("--symmetric", o.symmetric, "Treat (a,b) and (b,a) as one cell");
}

void add_split_options(CLI::App* cmd, SplitOptions& o) {
  cmd->add_option("--holdout", o.holdout, "Held-out scheme")
      ->check(CLI::IsMember({"interactions", "pairs", "none"}));
  cmd->add_option("--train-fraction", o.train_fraction, "Fraction kept for training")
      ->check(CLI::Range(0.0, 1.0));
}

CountMatrix load_input(const DataOptions& o) {
  return stage("load", [&] { return load_counts(o.input, parse_count_format(o.format), o.symmetric); });
}

std::optional<HoldoutSplit> make_split(const CountMatrix& data, const SplitOptions& o,
                                       std::uint64_t seed) {
  return stage("split", [&]() -> std::optional<HoldoutSplit> {
    if (o.holdout == "none") return std::nullopt;
    if (!(o.train_fraction > 0.0 && o.train_fraction < 1.0)) {
      throw std::invalid_argument("--train-fraction must lie strictly between 0 and 1");
    }
    return o.holdout == "pairs" ? split_pairs(data, o.train_fraction, seed)
                                : split_interactions(data, o.train_fraction, seed);
  });
}

std::string fingerprint_for(const CountMatrix& data, const SplitOptions& o, std::uint64_t seed) {
  if (o.holdout == "none") return split_fingerprint(0, "none", 1.0, data);
  return split_fingerprint(seed, o.holdout, o.train_fraction, data);
}

std::vector<double> predicted_grid(std::span<const Sample> samples, const SmoothingScheme& smoothing,
                                   const CountMatrix& train) {
  const std::size_t n = train.n_nodes();
  const std::vector<Cell> universe = train.universe();
  std::vector<Cell> queries;
  queries.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) queries.push_back(train.canonical({i, j}));
  }
  return predictive_probs(samples, smoothing, queries, universe);
}

void write_labels(const fs::path& path, const CountMatrix& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (std::size_t v = 0; v < data.n_nodes(); ++v) out << v << '\t' << data.label(v) << '\n';
}

void put_eval(KeyValueDoc& doc, const EvalReport& r) {
  doc.set("test_cells", std::to_string(r.test_cells));
  doc.set("test_ll", format_double(r.test_log_lik));
  doc.set("kendall_tau", format_double(r.kendall_tau));
  doc.set("tau_p_value", format_double(r.tau_p_value));
  doc.set("dcor", format_double(r.dcor));
}

int run_fit(const FitOptions& o) {
  Outputs outputs(o.out);
  const CountMatrix data = load_input(o.data);

  const PriorKind prior = stage("config", [&] {
    const PriorKind p = parse_prior_kind(o.model);
    if (p == PriorKind::Gaussian && !o.dim) throw std::invalid_argument("--dim is required for --model gaussian");
    if (p == PriorKind::Crp && o.dim) throw std::invalid_argument("--dim applies only to --model gaussian");
    return p;
  });
  Hyperparams hyper = o.hyper;
  if (o.dim) hyper.d_gaussian = *o.dim;
  ChainConfig chain;
  chain.n_samples = o.samples;
  chain.burn_in = o.burn_in;
  chain.thin = o.thin;
  chain.seed = o.seed;
  chain.prior = prior;
  chain.sequential_init = !o.prior_init;
  chain.init.rescale_factor = o.rescale_factor;
  chain.init.batch_size_max = o.batch_size;
  chain.init.iterations_per_batch = o.init_iters;
  stage("config", [&] {
    hyper.validate();
    chain.validate();
    return 0;
  });

  const std::optional<HoldoutSplit> split = make_split(data, o.split, o.seed);
  const CountMatrix& train = split ? split->train : data;
  const SmoothingScheme smoothing = SmoothingScheme::from_training(train, hyper.alpha_dcm);

  const std::vector<Sample> samples = stage("sample", [&] { return run_chain(train, hyper, chain); });

  std::optional<EvalReport> report;
  std::vector<double> test_lls;
  if (split) {
    report = stage("evaluate", [&] { return evaluate(samples, *split, smoothing); });
    for (const Sample& s : samples) {
      test_lls.push_back(sample_test_log_likelihood(s.state, split->test, smoothing));
    }
  }
  const std::vector<double> grid =
      stage("predict", [&] { return predicted_grid(samples, smoothing, train); });

  stage("write", [&] {
    outputs.open();
    save_counts(outputs.file("train.tsv"), train);
    if (split) save_counts(outputs.file("test.tsv"), split->test);
    write_samples(outputs.file("samples.txt"), samples);
    write_trace(outputs.file("trace.tsv"), samples, test_lls);
    write_grid(outputs.file("predicted.tsv"), grid, train.n_nodes());
    write_labels(outputs.file("labels.tsv"), train);

    double seconds = 0.0;
    double dims = 0.0;
    for (const Sample& s : samples) {
      seconds += s.seconds_elapsed;
      dims += static_cast<double>(s.dims);
    }
    const double count = static_cast<double>(samples.size());
    KeyValueDoc doc;
    doc.set("model", o.model);
    doc.set("dim", o.dim ? std::to_string(*o.dim) : "-");
    doc.set("holdout", o.split.holdout);
    doc.set("train_fraction", o.split.holdout == "none" ? "1" : format_double(o.split.train_fraction));
    doc.set("seed", std::to_string(o.seed));
    doc.set("split_fingerprint", fingerprint_for(data, o.split, o.seed));
    doc.set("symmetric", data.symmetric() ? "1" : "0");
    doc.set("n_nodes", std::to_string(data.n_nodes()));
    doc.set("train_cells", std::to_string(train.mask_size()));
    doc.set("samples", std::to_string(samples.size()));
    doc.set("burn_in", std::to_string(o.burn_in));
    doc.set("thin", std::to_string(o.thin));
    doc.set("alpha_crp", format_double(hyper.alpha_crp));
    doc.set("sigma_z", format_double(hyper.sigma_z_sq));
    doc.set("sigma_w", format_double(hyper.sigma_w_sq));
    doc.set("alpha_dcm", format_double(hyper.alpha_dcm));
    doc.set("mc_samples", std::to_string(hyper.mc_new_class_samples));
    doc.set("k_seen", std::to_string(smoothing.k_seen));
    doc.set("mean_dims", format_double(dims / count));
    doc.set("final_train_ll", format_double(samples.back().train_log_lik));
    doc.set("final_log_post", format_double(samples.back().log_posterior));
    if (report) put_eval(doc, *report);
    doc.set("sec_per_sample", format_double(seconds / count));
    doc.write(outputs.file("report.txt"));
    return 0;
  });
  outputs.commit();
  return 0;
}

struct RunDir {
  KeyValueDoc report;
  CountMatrix train;
  std::vector<Sample> samples;
  SmoothingScheme smoothing;
};

RunDir load_run(const fs::path& dir) {
  return stage("load", [&] {
    RunDir run;
    run.report = KeyValueDoc::read(dir / "report.txt");
    const bool symmetric = run.report.require("symmetric") == "1";
    run.train = load_counts(dir / "train.tsv", CountFormat::EdgeList, symmetric);
    run.samples = read_samples(dir / "samples.txt");
    if (run.samples.empty()) throw std::invalid_argument("no samples in " + (dir / "samples.txt").string());
    const std::vector<TraceRow> trace = read_trace(dir / "trace.tsv");
    if (trace.size() != run.samples.size()) throw std::invalid_argument("trace and samples differ in length");
    for (std::size_t s = 0; s < trace.size(); ++s) run.samples[s].seconds_elapsed = trace[s].seconds;
    run.smoothing = SmoothingScheme::from_training(run.train, parse_double(run.report.require("alpha_dcm")));
    return run;
  });
}

int run_split(const DataOptions& data_opts, const SplitOptions& split_opts, std::uint64_t seed,
              const std::string& out) {
  Outputs outputs(out);
  const CountMatrix data = load_input(data_opts);
  if (split_opts.holdout == "none") throw StageError("config", "split needs --holdout interactions or pairs");
  const std::optional<HoldoutSplit> split = make_split(data, split_opts, seed);
  stage("write", [&] {
    outputs.open();
    save_counts(outputs.file("train.tsv"), split->train);
    save_counts(outputs.file("test.tsv"), split->test);
    KeyValueDoc doc;
    doc.set("holdout", split_opts.holdout);
    doc.set("train_fraction", format_double(split_opts.train_fraction));
    doc.set("seed", std::to_string(seed));
    doc.set("split_fingerprint", fingerprint_for(data, split_opts, seed));
    doc.set("train_cells", std::to_string(split->train.mask_size()));
    doc.set("test_cells", std::to_string(split->test.mask_size()));
    doc.set("train_total", format_double(split->train.total()));
    doc.set("test_total", format_double(split->test.total()));
    doc.write(outputs.file("split.txt"));
    return 0;
  });
  outputs.commit();
  return 0;
}

int run_evaluate(const std::string& run_dir) {
  const RunDir run = load_run(run_dir);
  const std::string holdout = run.report.require("holdout");
  if (holdout == "none") throw StageError("evaluate", "run has no held-out data");
  const EvalReport r = stage("evaluate", [&] {
    const bool symmetric = run.train.symmetric();
    HoldoutSplit split{run.train,
                       load_counts(fs::path(run_dir) / "test.tsv", CountFormat::EdgeList, symmetric),
                       holdout == "pairs" ? HoldoutScheme::NodePairs : HoldoutScheme::Interactions,
                       parse_double(run.report.require("train_fraction"))};
    return evaluate(run.samples, split, run.smoothing);
  });
  KeyValueDoc doc;
  put_eval(doc, r);
  doc.set("mean_dims", format_double(r.mean_dims));
  doc.set("sec_per_sample", format_double(r.sec_per_sample));
  for (const auto& [k, v] : doc.fields()) std::cout << k << '\t' << v << '\n';
  return 0;
}

int run_predict(const std::string& run_dir, const std::string& out) {
  Outputs outputs(out);
  const RunDir run = load_run(run_dir);
  const std::vector<double> grid =
      stage("predict", [&] { return predicted_grid(run.samples, run.smoothing, run.train); });
  stage("write", [&] {
    outputs.open();
    write_grid(outputs.file("predicted.tsv"), grid, run.train.n_nodes());
    write_labels(outputs.file("labels.tsv"), run.train);
    return 0;
  });
  outputs.commit();
  return 0;
}

int run_compare(const std::string& a, const std::string& b) {
  const std::string table = stage("compare", [&] {
    for (const std::string& p : {a, b}) {
      if (!fs::is_regular_file(p)) throw std::invalid_argument("no such report: " + p);
    }
    return compare_reports(KeyValueDoc::read(a), KeyValueDoc::read(b));
  });
  std::cout << table;
  return 0;
}

int run_synth(SyntheticConfig cfg, const std::string& out) {
  Outputs outputs(fs::path(out).parent_path().empty() ? fs::path(".") : fs::path(out).parent_path());
  const SyntheticData data = stage("generate", [&] { return generate_gaussian(cfg); });
  stage("write", [&] {
    outputs.open();
    const fs::path name = fs::path(out).filename();
    save_counts(outputs.file(name.string()), data.counts);
    return 0;
  });
  outputs.commit();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-feature models for network interaction counts"};
  app.require_subcommand(1);

  FitOptions fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Split, sample a posterior chain, evaluate, and write artifacts");
  add_data_options(fit_cmd, fit.data);
  add_split_options(fit_cmd, fit.split);
  fit_cmd->add_option("--model", fit.model, "Prior on node representations")
      ->required()
      ->check(CLI::IsMember({"crp", "gaussian"}));
  fit_cmd->add_option("--dim", fit.dim, "Latent dimension (gaussian only)")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--alpha-crp", fit.hyper.alpha_crp, "CRP concentration");
  fit_cmd->add_option("--sigma-z", fit.hyper.sigma_z_sq, "Prior variance of Z entries");
  fit_cmd->add_option("--sigma-w", fit.hyper.sigma_w_sq, "Prior variance of W entries");
  fit_cmd->add_option("--alpha-dcm", fit.hyper.alpha_dcm, "Total Dirichlet smoothing mass");
  fit_cmd->add_option("--mc-samples", fit.hyper.mc_new_class_samples, "Draws for the new-class estimate");
  fit_cmd->add_option("--samples", fit.samples, "Retained samples");
  fit_cmd->add_option("--burn-in", fit.burn_in, "Discarded steps after initialization");
  fit_cmd->add_option("--thin", fit.thin, "Steps per retained sample");
  fit_cmd->add_option("--seed", fit.seed, "Seed for the split and the chain");
  fit_cmd->add_option("--rescale-factor", fit.rescale_factor, "Count growth per annealing stage");
  fit_cmd->add_option("--batch-size", fit.batch_size, "Nodes activated per initialization wave");
  fit_cmd->add_option("--init-iters", fit.init_iters, "Steps per wave and per annealing stage");
  fit_cmd->add_flag("--prior-init", fit.prior_init, "Start from a prior draw instead of sequential initialization");
  fit_cmd->add_option("--out", fit.out, "Output directory")->required();

  DataOptions split_data;
  SplitOptions split_opts;
  std::uint64_t split_seed = 0;
  std::string split_out;
  CLI::App* split_cmd = app.add_subcommand("split", "Write a train/test split of a count file");
  add_data_options(split_cmd, split_data);
  add_split_options(split_cmd, split_opts);
  split_cmd->add_option("--seed", split_seed, "Split seed");
  split_cmd->add_option("--out", split_out, "Output directory")->required();

  std::string eval_dir;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Recompute held-out metrics of a fit directory");
  eval_cmd->add_option("--input", eval_dir, "Directory written by fit")->required()->check(CLI::ExistingDirectory);

  std::string predict_dir;
  std::string predict_out;
  CLI::App* predict_cmd = app.add_subcommand("predict", "Export the posterior predictive grid of a fit directory");
  predict_cmd->add_option("--input", predict_dir, "Directory written by fit")->required()->check(CLI::ExistingDirectory);
  predict_cmd->add_option("--out", predict_out, "Output directory")->required();

  std::vector<std::string> reports;
  CLI::App* compare_cmd = app.add_subcommand("compare", "Tabulate two reports from the same split");
  compare_cmd->add_option("reports", reports, "report.txt files")->required()->expected(2);

  SyntheticConfig synth;
  std::string synth_out;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a count file from the Gaussian model");
  synth_cmd->add_option("--nodes", synth.n_nodes, "Number of nodes");
  synth_cmd->add_option("--dim", synth.dims, "Latent dimension");
  synth_cmd->add_option("--sigma-z", synth.sigma_z_sq, "Variance of Z entries");
  synth_cmd->add_option("--sigma-w", synth.sigma_w_sq, "Variance of W entries");
  synth_cmd->add_option("--draws", synth.total_draws, "Total interactions");
  synth_cmd->add_option("--seed", synth.seed, "Seed");
  synth_cmd->add_flag("--symmetric", synth.symmetric, "Unordered pairs");
  bool sparse_mask = false;
  synth_cmd->add_flag("--sparse-mask", sparse_mask, "Observe only cells with at least one draw");
  synth_cmd->add_option("--out", synth_out, "Output file")->required();

  CLI11_PARSE(app, argc, argv);

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    if (fit_cmd->parsed()) return run_fit(fit);
    if (split_cmd->parsed()) return run_split(split_data, split_opts, split_seed, split_out);
    if (eval_cmd->parsed()) return run_evaluate(eval_dir);
    if (predict_cmd->parsed()) return run_predict(predict_dir, predict_out);
    if (compare_cmd->parsed()) return run_compare(reports[0], reports[1]);
    synth.full_mask = !sparse_mask;
    return run_synth(synth, synth_out);
  } catch (const StageError& e) {
    std::cerr << "countlink " << name << ": [" << e.stage << "] " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "countlink " << name << ": [io] " << e.what() << '\n';
  }
  return 1;
}
