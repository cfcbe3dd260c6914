// lgrec command-line driver: runs the batch workflow (ingest -> walk ->
// train -> candidates -> rank -> eval) from a TOML config, stage by stage
// or end to end, plus a synthetic-fixture generator.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lgrec/lgrec.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string output_override;
  unsigned threads = 1;
  std::optional<int64_t> seed_override;
  bool force = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "pipeline config file (TOML)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--threads", args.threads, "worker threads (1 = deterministic mode)");
  cmd->add_option("--seed", args.seed_override, "override the global seed");
  cmd->add_option("--output", args.output_override, "override the output directory");
  cmd->add_flag("--force", args.force, "rerun stages even when artifacts are up to date");
}

int run_stages(const CommonArgs& args, const std::string& selector) {
  lgrec::PipelineConfig config = lgrec::PipelineConfig::load(args.config_path);
  if (args.seed_override) config.seed = static_cast<uint64_t>(*args.seed_override);
  if (!args.output_override.empty()) {
    config.output_dir = args.output_override;
    std::filesystem::create_directories(config.output_dir);
  }
  lgrec::Pipeline pipeline(std::move(config), args.threads, args.force);
  for (const auto& outcome : pipeline.run_selector(selector)) {
    std::cout << "[" << lgrec::stage_name(outcome.stage) << "] ";
    switch (outcome.status) {
      case lgrec::StageOutcome::Status::Ran: std::cout << "done"; break;
      case lgrec::StageOutcome::Status::UpToDate: std::cout << "up-to-date"; break;
      case lgrec::StageOutcome::Status::Skipped: std::cout << "skipped: " << outcome.note; break;
    }
    std::cout << '\n';
  }
  return 0;
}

struct SynthArgs {
  std::string output_dir = "fixture";
  uint32_t communities = 4;
  uint32_t nodes_per_community = 50;
  double intra = 0.2;
  double inter = 0.01;
  uint64_t seed = 1;
  size_t golden_size = 10;
  size_t triplet_count = 2000;
  size_t doc_words = 40;
  size_t doc_vocab = 25;
  bool no_config = false;
};

int run_synth(const SynthArgs& args) {
  namespace fs = std::filesystem;
  fs::create_directories(args.output_dir);
  auto path = [&](const char* name) { return args.output_dir + "/" + name; };

  lgrec::SbmSpec spec;
  spec.communities = args.communities;
  spec.nodes_per_community = args.nodes_per_community;
  spec.intra_probability = args.intra;
  spec.inter_probability = args.inter;
  spec.seed = args.seed;

  lgrec::CommunityTable table =
      lgrec::generate_sbm(spec, path("edges.tsv"), path("communities.tsv"));
  lgrec::generate_pageviews(table, args.seed, path("pageviews.tsv"));
  lgrec::generate_docs(table, args.doc_words, args.doc_vocab, args.seed, path("docs.tsv"));
  lgrec::save_golden(lgrec::derive_golden(table, args.golden_size, args.seed), path("golden.tsv"));
  lgrec::save_triplets(lgrec::derive_triplets(table, args.triplet_count, args.seed),
                       path("triplets.tsv"));

  if (!args.no_config) {
    std::ofstream out = lgrec::open_output(path("config.toml"));
    out << "output_dir = \"" << args.output_dir << "/out\"\n"
        << "seed = " << args.seed << "\n"
        << "candidate_k = 500\n"
        << "hops = 10\n"
        << "pageviews = \"" << path("pageviews.tsv") << "\"\n"
        << "documents = \"" << path("docs.tsv") << "\"\n"
        << "golden = \"" << path("golden.tsv") << "\"\n"
        << "triplets = \"" << path("triplets.tsv") << "\"\n"
        << "clickstream_layer = \"sbm\"\n"
        << "coverage_ks = [5, 10, 25, 50]\n"
        << "map_ks = [3, 6, 9]\n"
        << "\n[[layer]]\n"
        << "name = \"sbm\"\n"
        << "path = \"" << path("edges.tsv") << "\"\n"
        << "weight_exponent = 1.0\n"
        << "walks_per_node = 50\n"
        << "\n[lg2vec]\n"
        << "dimension = 32\n"
        << "window = 3\n"
        << "epochs = 3\n"
        << "\n[doc2vec]\n"
        << "dimension = 32\n"
        << "window = 5\n"
        << "epochs = 3\n";
  }
  std::cout << "[synth] fixture written to " << args.output_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lgrec: layered-graph embeddings and entity recommendation"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string stages = "all";

  CLI::App* run = app.add_subcommand("run", "run pipeline stages in dependency order");
  add_common(run, common);
  run->add_option("--stages", stages, "'all' or comma-separated stage names");

  for (lgrec::Stage stage : lgrec::kAllStages) {
    CLI::App* cmd = app.add_subcommand(lgrec::stage_name(stage),
                                       std::string("run the ") + lgrec::stage_name(stage) + " stage");
    add_common(cmd, common);
  }

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic SBM fixture");
  synth_cmd->add_option("--output", synth.output_dir, "fixture directory");
  synth_cmd->add_option("--communities", synth.communities, "number of planted communities");
  synth_cmd->add_option("--nodes-per-community", synth.nodes_per_community, "community size");
  synth_cmd->add_option("--intra", synth.intra, "intra-community edge probability");
  synth_cmd->add_option("--inter", synth.inter, "inter-community edge probability");
  synth_cmd->add_option("--seed", synth.seed, "generator seed");
  synth_cmd->add_option("--golden-size", synth.golden_size, "relevant entities per query");
  synth_cmd->add_option("--triplet-count", synth.triplet_count, "derived triplet count");
  synth_cmd->add_option("--doc-words", synth.doc_words, "words per synthetic document");
  synth_cmd->add_option("--doc-vocab", synth.doc_vocab, "topic words per community");
  synth_cmd->add_flag("--no-config", synth.no_config, "skip writing config.toml");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // CLI misuse is a validation error
  }

  try {
    if (synth_cmd->parsed()) return run_synth(synth);
    if (run->parsed()) return run_stages(common, stages);
    for (lgrec::Stage stage : lgrec::kAllStages)
      if (app.get_subcommand(lgrec::stage_name(stage))->parsed())
        return run_stages(common, stage_name(stage));
    return 1;
  } catch (const lgrec::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
