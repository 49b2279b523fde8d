#include <CLI11.hpp>

#include <iostream>

#include "wordniche/pipeline.hpp"

int main(int argc, char** argv) {
  using wordniche::RunConfig;
  RunConfig cfg;
  std::string config_file;

  CLI::App app{"Word dissemination across users and threads"};
  app.require_subcommand(1);
  const std::map<std::string, std::string> help{
      {"ingest", "parse posts, write window and count tables"},
      {"measures", "per-window D^U and D^T tables"},
      {"bands", "Monte Carlo percentile bands under a shuffle"},
      {"dhat", "conditional measures"},
      {"dynamics", "word fate across window pairs"},
      {"importance", "relative importance of D^U, D^T and frequency"},
      {"trim", "trimmed windows and their correlations"},
      {"casestudy", "rising words, trajectories and cohorts"},
      {"synth", "generate a synthetic corpus and its manifest"},
      {"report", "run every analysis stage and write a manifest"}};
  for (const auto& name : wordniche::subcommands()) app.add_subcommand(name, help.at(name))->fallthrough();

  app.add_option("-i,--input", cfg.input, "posts, one JSON object per line");
  app.add_option("-o,--output", cfg.output, "output directory")->capture_default_str();
  app.add_option("--config", config_file, "JSON config; its keys override flags");
  app.add_option("--epoch", cfg.epoch, "first window start, YYYY-MM-DD");
  app.add_option("--window-days", cfg.window_days, "window length in days")->capture_default_str();
  app.add_option("--strip-quoted", cfg.strip_quoted, "drop lines starting with '>'")->capture_default_str();
  app.add_option("--tokenizer-config", cfg.tokenizer_config, "tokenizer JSON");
  app.add_option("--baseline", cfg.baseline, "exact or poisson")->capture_default_str();
  app.add_option("--min-count", cfg.min_count, "smallest valid N_w")->capture_default_str();
  app.add_option("--log10-f-max", cfg.log10_f_max, "informative frequency cap")->capture_default_str();
  app.add_option("--scheme", cfg.scheme, "global, within_thread or within_user")->capture_default_str();
  app.add_option("--replicates", cfg.replicates, "shuffle replicates")->capture_default_str();
  app.add_option("--seed", cfg.seed, "base seed")->capture_default_str();
  app.add_option("--pairs", cfg.pairs, "nonoverlap or all")->capture_default_str();
  app.add_option("--lag-windows", cfg.lag_windows, "windows between t1 and t2")->capture_default_str();
  app.add_flag("--pool,!--per-pair", cfg.pool, "pool window pairs for importance (default) or fit each pair");
  app.add_option("--post-length", cfg.post_length, "trim post length; 0 uses the median")->capture_default_str();
  app.add_option("--max-per-entity", cfg.max_per_entity, "trim cap per user and thread")->capture_default_str();
  app.add_option("--labels", cfg.labels, "word,label CSV for the case study");
  app.add_option("--quiet-years", cfg.quiet_years, "years a rising word must be absent")->capture_default_str();
  app.add_option("--synth-params", cfg.synth_params, "generator parameters JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  cfg.subcommand = app.get_subcommands().front()->get_name();

  try {
    if (!config_file.empty()) {
      auto j = nlohmann::json::parse(wordniche::read_file(config_file), nullptr, false);
      if (j.is_discarded()) throw wordniche::Error("config is not valid JSON: " + config_file);
      wordniche::apply_config_json(cfg, j);
    }
    return wordniche::run(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
