// Command-line front end: dataset synthesis, training, evaluation,
// gradient checking and embedding export.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <set>

#include "dml/data_io.hpp"
#include "dml/errors.hpp"
#include "dml/eval.hpp"
#include "dml/gradcheck.hpp"
#include "dml/train.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct TrainFlags {
  dml::TrainConfig config;
  std::string loss_name = "contrastive";
  std::string features_path;
  std::string checkpoint_path = "checkpoint.dml";
  std::string log_path;
  std::string resume_path;
  std::string config_path;
};

// Applies key=value lines to the train options that were not set on the
// command line. Keys are the long option names without the leading dashes.
void apply_config_file(CLI::App* cmd, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw dml::IoError("cannot open " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw dml::ParseError(path + ":" + std::to_string(line_no) +
                            ": expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr)
      throw dml::ParseError(path + ":" + std::to_string(line_no) +
                            ": unknown key '" + key + "'");
    if (opt->count() > 0) continue;  // explicit flag wins
    opt->add_result(value);
    opt->run_callback();
  }
}

void add_train_options(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--config", f.config_path,
                  "flat key=value config file; command-line flags override");
  cmd->add_option("--features", f.features_path, "training feature file")->required();
  cmd->add_option("--loss", f.loss_name, "contrastive|triplet|npair")
      ->check(CLI::IsMember({"contrastive", "triplet", "npair"}));
  cmd->add_option("--lambda", f.config.lambda, "density regularizer tradeoff");
  cmd->add_option("--eta", f.config.eta, "inter-class density exponent")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--margin", f.config.margin, "hinge margin for contrastive/triplet");
  cmd->add_option("--alpha-init", f.config.alpha_init, "initial target density");
  cmd->add_option("--classes-per-batch", f.config.classes_per_batch, "P");
  cmd->add_option("--samples-per-class", f.config.samples_per_class, "K");
  cmd->add_flag("--accumulate", f.config.accumulate_mode,
                "fill batches with whole classes (for tiny classes)");
  cmd->add_option("--per-anchor", f.config.triplet_per_anchor,
                  "triplets mined per anchor");
  cmd->add_option("--lr", f.config.learning_rate, "Adam learning rate");
  cmd->add_option("--alpha-lr-mult", f.config.alpha_lr_mult,
                  "learning-rate multiplier for alpha updates");
  cmd->add_option("--iterations", f.config.iterations, "training iterations");
  cmd->add_option("--seed", f.config.seed, "rng seed");
  cmd->add_option("--hidden-dim", f.config.hidden_dim, "hidden layer width");
  cmd->add_option("--embedding-dim", f.config.embedding_dim, "embedding size d");
  cmd->add_option("--log-interval", f.config.log_interval, "iterations between log lines");
  cmd->add_flag("--global-c", f.config.global_class_normalization,
                "normalize regularizer sums by the global class count");
  cmd->add_option("--checkpoint", f.checkpoint_path, "checkpoint output path");
  cmd->add_option("--log", f.log_path, "training log output path");
  cmd->add_option("--resume", f.resume_path, "checkpoint to resume from");
}

int cmd_synth(const dml::SynthConfig& cfg, const std::string& out_dir, bool binary) {
  auto [train, test] = dml::synthesize(cfg);
  dml::check_disjoint_labels(train, test);
  const std::string ext = binary ? ".featbin" : ".features";
  dml::save_features(train, out_dir + "/train" + ext, binary);
  dml::save_features(test, out_dir + "/test" + ext, binary);
  std::cout << "wrote " << train.size() << " train rows (" << train.num_classes()
            << " classes) and " << test.size() << " test rows ("
            << test.num_classes() << " classes) to " << out_dir << "\n";
  return kExitOk;
}

int cmd_train(CLI::App* cmd, TrainFlags& f) {
  if (!f.config_path.empty()) apply_config_file(cmd, f.config_path);
  f.config.loss = dml::parse_loss_kind(f.loss_name);
  dml::Dataset dataset = dml::load_features(f.features_path);

  std::ofstream log_file;
  if (!f.log_path.empty()) {
    log_file.open(f.log_path);
    if (!log_file) throw dml::IoError("cannot open " + f.log_path + " for writing");
  }
  auto sink = [&](const dml::LogRecord& rec) {
    const std::string line = dml::format_log_record(rec);
    std::cout << line << "\n";
    if (log_file) log_file << line << "\n";
  };

  dml::Checkpoint ckpt;
  if (!f.resume_path.empty()) {
    dml::Checkpoint start = dml::load_checkpoint(f.resume_path);
    ckpt = dml::train(f.config, dataset, sink, &start);
  } else {
    ckpt = dml::train(f.config, dataset, sink);
  }
  dml::save_checkpoint(ckpt, f.checkpoint_path);
  std::cout << "checkpoint written to " << f.checkpoint_path << " at iteration "
            << ckpt.iteration << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& ckpt_path, const std::string& features_path,
             const std::vector<std::size_t>& ks, const std::string& out_path,
             std::uint64_t seed) {
  dml::Checkpoint ckpt = dml::load_checkpoint(ckpt_path);
  dml::Dataset dataset = dml::load_features(features_path);
  dml::Matrix embeddings = dml::forward(ckpt.net, dataset.features);
  dml::EvalReport report = dml::evaluate(embeddings, dataset.labels, ks, seed);
  std::cout << report.to_table();
  if (!out_path.empty()) {
    std::ofstream os(out_path);
    if (!os) throw dml::IoError("cannot open " + out_path + " for writing");
    os << report.to_records();
  }
  return kExitOk;
}

int cmd_gradcheck(const dml::GradCheckOptions& options) {
  const auto results = dml::run_gradcheck(options);
  for (const auto& r : results)
    std::cout << (r.passed ? "PASS" : "FAIL") << " " << r.component
              << " max_rel_error=" << r.max_rel_error << "\n";
  if (!dml::all_passed(results)) {
    for (const auto& r : results)
      if (!r.passed) std::cerr << "gradient check failed: " << r.component << "\n";
    return kExitValidation;
  }
  return kExitOk;
}

int cmd_embed(const std::string& ckpt_path, const std::string& features_path,
              const std::string& out_path, bool binary) {
  dml::Checkpoint ckpt = dml::load_checkpoint(ckpt_path);
  dml::Dataset dataset = dml::load_features(features_path);
  dml::Dataset embedded = dataset;
  embedded.features = dml::forward(ckpt.net, dataset.features);
  dml::save_features(embedded, out_path, binary);
  std::cout << "wrote " << embedded.size() << " embeddings to " << out_path << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deep metric learning with a density-adaptivity regularizer"};
  app.require_subcommand(1);

  dml::SynthConfig synth_cfg;
  std::string synth_out;
  bool synth_binary = false;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--classes", synth_cfg.num_classes, "total classes (split in half)");
  synth->add_option("--per-class", synth_cfg.samples_per_class, "samples per class");
  synth->add_option("--dim", synth_cfg.input_dim, "feature dimension");
  synth->add_option("--sigma", synth_cfg.noise_sigma, "within-class noise")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", synth_cfg.seed, "rng seed");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_flag("--binary", synth_binary, "write the binary feature format");

  TrainFlags train_flags;
  auto* train = app.add_subcommand("train", "train an embedding network");
  add_train_options(train, train_flags);

  std::string eval_ckpt, eval_features, eval_out;
  std::vector<std::size_t> eval_ks = {1, 2, 4, 8};
  std::uint64_t eval_seed = 0;
  auto* eval = app.add_subcommand("eval", "retrieval + clustering evaluation");
  eval->add_option("--checkpoint", eval_ckpt, "trained checkpoint")->required();
  eval->add_option("--features", eval_features, "feature file to evaluate on")->required();
  eval->add_option("--ks", eval_ks, "Recall@K depths")->delimiter(',');
  eval->add_option("--seed", eval_seed, "kmeans seed");
  eval->add_option("--out", eval_out, "machine-readable report path");

  dml::GradCheckOptions gc;
  std::string gc_component = "all";
  double gc_perturb = 0.0;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suites");
  gradcheck->add_option("--seed", gc.seed, "rng seed");
  gradcheck->add_option("--component", gc_component,
                        "all|contrastive|triplet|npair|density|network|joint");
  gradcheck->add_option("--perturb", gc_perturb,
                        "test hook: offset one analytic gradient coordinate")
      ->group("");

  std::string embed_ckpt, embed_features, embed_out;
  bool embed_binary = false;
  auto* embed = app.add_subcommand("embed", "export unit-norm embeddings");
  embed->add_option("--checkpoint", embed_ckpt, "trained checkpoint")->required();
  embed->add_option("--features", embed_features, "feature file")->required();
  embed->add_option("--out", embed_out, "output path")->required();
  embed->add_flag("--binary", embed_binary, "write the binary feature format");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_cfg, synth_out, synth_binary);
    if (train->parsed()) return cmd_train(train, train_flags);
    if (eval->parsed())
      return cmd_eval(eval_ckpt, eval_features, eval_ks, eval_out, eval_seed);
    if (gradcheck->parsed()) {
      gc.perturbation = gc_perturb;
      if (gc_component != "all") gc.components = {gc_component};
      return cmd_gradcheck(gc);
    }
    if (embed->parsed())
      return cmd_embed(embed_ckpt, embed_features, embed_out, embed_binary);
  } catch (const dml::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const dml::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}
