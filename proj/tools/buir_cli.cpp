// Copyright 2026 The buir-cf Authors
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

// Command-line front end. Exit codes: 0 success, 1 usage error, 2 data
// error, 3 numerical failure.
//
// Configuration files are flat `key=value` lines matching the long flag
// names (lists comma-separated, `#` comments). `--config FILE` merges the
// file under the explicit flags, so command-line values always win, and
// every run echoes its effective configuration to <out-dir>/config.ini;
// re-running with `--config` on that echo reproduces the run bit for bit.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "buir/commands.hpp"

namespace {

struct IniEntry {
  std::string key;
  std::string value;
};

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

std::vector<IniEntry> read_flat_ini(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw buir::DataError("cannot open config file: " + path);
  std::vector<IniEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#' || stripped[0] == ';') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw buir::DataError(path + ":" + std::to_string(line_no) +
                            ": expected key=value");
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
        value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    entries.push_back({std::move(key), std::move(value)});
  }
  return entries;
}

// Pulls `--config FILE` out of the raw tokens and appends one `--key=value`
// token per config entry whose key was not already given explicitly.
std::vector<std::string> merge_config_layer(std::vector<std::string> tokens) {
  std::string config_path;
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == "--config") {
      if (i + 1 >= tokens.size())
        throw buir::DataError("--config needs a file argument");
      config_path = tokens[++i];
    } else if (tokens[i].rfind("--config=", 0) == 0) {
      config_path = tokens[i].substr(9);
    } else {
      kept.push_back(tokens[i]);
    }
  }
  if (config_path.empty()) return kept;

  std::set<std::string> given;
  for (const std::string& t : kept) {
    if (t.rfind("--", 0) != 0) continue;
    const auto eq = t.find('=');
    given.insert(eq == std::string::npos ? t.substr(2) : t.substr(2, eq - 2));
  }
  for (const IniEntry& e : read_flat_ini(config_path))
    if (!given.count(e.key)) kept.push_back("--" + e.key + "=" + e.value);
  return kept;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <class T>
std::string join(const std::vector<T>& values) {
  std::ostringstream out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out << ',';
    out << values[i];
  }
  return out.str();
}

using KeyValues = std::vector<std::pair<std::string, std::string>>;

void write_config_echo(const std::string& out_dir, const KeyValues& kv) {
  if (out_dir.empty()) return;
  std::filesystem::create_directories(out_dir);
  std::ofstream f(out_dir + "/config.ini");
  for (const auto& [key, value] : kv) f << key << '=' << value << '\n';
}

KeyValues model_key_values(const buir::ModelOptions& m) {
  return {
      {"model", m.model},
      {"dim", std::to_string(m.dim)},
      {"lr", format_double(m.lr)},
      {"weight-decay", format_double(m.weight_decay)},
      {"tau", format_double(m.tau)},
      {"layers", std::to_string(m.layers)},
      {"max-drop-prob", format_double(m.max_drop_prob)},
      {"sampler", m.sampler},
      {"negatives", std::to_string(m.negatives)},
      {"candidate-pool", std::to_string(m.candidate_pool)},
      {"batch-size", std::to_string(m.batch_size)},
      {"epochs", std::to_string(m.epochs)},
      {"patience", std::to_string(m.patience)},
  };
}

void add_model_options(CLI::App& cmd, buir::ModelOptions& m) {
  cmd.add_option("--model", m.model, "buir_id | buir_nb | bpr | bpr_cross")
      ->capture_default_str();
  cmd.add_option("--dim", m.dim, "embedding dimension")->capture_default_str();
  cmd.add_option("--lr", m.lr, "learning rate")->capture_default_str();
  cmd.add_option("--weight-decay", m.weight_decay, "L2 coefficient")
      ->capture_default_str();
  cmd.add_option("--tau", m.tau, "momentum coefficient for the target encoder")
      ->capture_default_str();
  cmd.add_option("--layers", m.layers, "graph-convolution layers (buir_nb)")
      ->capture_default_str();
  cmd.add_option("--max-drop-prob", m.max_drop_prob,
                 "max neighbor-dropout probability P; 0 disables augmentation")
      ->capture_default_str();
  cmd.add_option("--sampler", m.sampler,
                 "uniform | static_global | adaptive_contextual (bpr)")
      ->capture_default_str();
  cmd.add_option("--negatives", m.negatives, "negatives per positive (bpr)")
      ->capture_default_str();
  cmd.add_option("--candidate-pool", m.candidate_pool,
                 "candidate pool size for adaptive sampling")
      ->capture_default_str();
  cmd.add_option("--batch-size", m.batch_size)->capture_default_str();
  cmd.add_option("--epochs", m.epochs, "maximum training epochs")
      ->capture_default_str();
  cmd.add_option("--patience", m.patience, "early-stopping patience in epochs")
      ->capture_default_str();
}

void add_config_option(CLI::App& cmd) {
  // Consumed by the merge layer before parsing; declared so help shows it.
  cmd.add_option("--config")
      ->description("flat key=value config file; explicit flags win");
}

buir::ModelOptions load_model_options(const std::string& path) {
  CLI::App cfg{"model configuration"};
  buir::ModelOptions m;
  add_model_options(cfg, m);
  std::set<std::string> known;
  for (const CLI::Option* opt : cfg.get_options())
    for (const std::string& name : opt->get_lnames()) known.insert(name);
  std::vector<std::string> tokens;
  for (const IniEntry& e : read_flat_ini(path))
    if (known.count(e.key)) tokens.push_back("--" + e.key + "=" + e.value);
  std::reverse(tokens.begin(), tokens.end());  // CLI11 consumes back to front
  cfg.parse(tokens);
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"one-class collaborative filtering toolkit"};
  app.require_subcommand(1);

  buir::PrepareArgs pargs;
  CLI::App* prepare =
      app.add_subcommand("prepare", "filter a raw interaction log and split it");
  add_config_option(*prepare);
  prepare->add_option("--input", pargs.input, "raw interaction log")->required();
  prepare->add_option("--out-dir", pargs.out_dir, "split output directory")
      ->capture_default_str();
  prepare->add_option("--min-user", pargs.min_user_interactions,
                      "minimum interactions per user")
      ->capture_default_str();
  prepare->add_option("--min-item", pargs.min_item_interactions,
                      "minimum interactions per item")
      ->capture_default_str();
  prepare->add_option("--beta", pargs.beta, "training fraction per user")
      ->capture_default_str();
  prepare->add_option("--min-train", pargs.min_train_per_user,
                      "minimum training interactions per user")
      ->capture_default_str();
  prepare->add_option("--seed", pargs.seed, "master seed")->capture_default_str();

  buir::TrainArgs targs;
  CLI::App* train = app.add_subcommand("train", "train a model on a split");
  add_config_option(*train);
  train->add_option("--data", targs.data_dir, "prepared split directory")
      ->required();
  train->add_option("--out-dir", targs.out_dir, "run output directory")
      ->capture_default_str();
  add_model_options(*train, targs.model);
  train->add_option("--seed", targs.seed, "master seed")->capture_default_str();
  train->add_option("--threads", targs.threads, "evaluation threads")
      ->capture_default_str();
  train->add_flag("--quiet", targs.quiet, "suppress per-epoch output");

  buir::EvaluateArgs eargs;
  CLI::App* evaluate =
      app.add_subcommand("evaluate", "test-phase metrics for checkpoints");
  add_config_option(*evaluate);
  evaluate->add_option("--checkpoint", eargs.checkpoints,
                       "checkpoint files (comma-separated for aggregation)")
      ->required()
      ->delimiter(',');
  evaluate->add_option("--data", eargs.data_dir, "prepared split directory")
      ->required();
  evaluate->add_option("--out-dir", eargs.out_dir, "report output directory");
  evaluate->add_option("--k", eargs.k_values, "metric cutoffs")
      ->delimiter(',')
      ->capture_default_str();
  evaluate->add_option("--threads", eargs.threads)->capture_default_str();

  buir::RecommendArgs rargs;
  CLI::App* recommend =
      app.add_subcommand("recommend", "top-K items for given users");
  add_config_option(*recommend);
  recommend->add_option("--checkpoint", rargs.checkpoint)->required();
  recommend->add_option("--data", rargs.data_dir, "prepared split directory")
      ->required();
  recommend->add_option("--users", rargs.users, "raw user ids, comma-separated")
      ->required()
      ->delimiter(',');
  recommend->add_option("--k", rargs.k, "list length")->capture_default_str();
  recommend->add_option("--out-dir", rargs.out_dir,
                        "write recommendations.tsv here instead of stdout");

  buir::CompareArgs cargs;
  std::string config_a, config_b;
  CLI::App* compare = app.add_subcommand(
      "compare", "train two configurations on one split and diff their metrics");
  compare->add_option("--config-a", config_a, "model config for side A")
      ->required();
  compare->add_option("--config-b", config_b, "model config for side B")
      ->required();
  compare->add_option("--data", cargs.data_dir, "prepared split directory")
      ->required();
  compare->add_option("--out-dir", cargs.out_dir, "report output directory");
  compare->add_option("--seeds,--seed", cargs.seeds, "master seeds, one run each")
      ->delimiter(',')
      ->capture_default_str();
  compare->add_option("--k", cargs.k_values, "metric cutoffs")
      ->delimiter(',')
      ->capture_default_str();
  compare->add_option("--threads", cargs.threads)->capture_default_str();
  compare->add_flag("--quiet", cargs.quiet, "suppress per-seed output");

  try {
    std::vector<std::string> tokens(argv + 1, argv + argc);
    tokens = merge_config_layer(std::move(tokens));
    std::reverse(tokens.begin(), tokens.end());  // CLI11 consumes back to front
    app.parse(tokens);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const buir::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*prepare) {
      write_config_echo(
          pargs.out_dir,
          {{"input", pargs.input},
           {"out-dir", pargs.out_dir},
           {"min-user", std::to_string(pargs.min_user_interactions)},
           {"min-item", std::to_string(pargs.min_item_interactions)},
           {"beta", format_double(pargs.beta)},
           {"min-train", std::to_string(pargs.min_train_per_user)},
           {"seed", std::to_string(pargs.seed)}});
      const buir::PrepareSummary s = buir::cmd_prepare(pargs);
      std::cout << "users " << s.num_users << ", items " << s.num_items
                << ", interactions " << s.num_interactions << '\n'
                << "train " << s.train_size << ", validation "
                << s.validation_size << ", test " << s.test_size << '\n'
                << "split written to " << pargs.out_dir << '\n';
    } else if (*train) {
      KeyValues kv = model_key_values(targs.model);
      kv.insert(kv.begin(), {{"data", targs.data_dir},
                             {"out-dir", targs.out_dir}});
      kv.push_back({"seed", std::to_string(targs.seed)});
      kv.push_back({"threads", std::to_string(targs.threads)});
      kv.push_back({"quiet", targs.quiet ? "true" : "false"});
      write_config_echo(targs.out_dir, kv);
      buir::cmd_train(targs);
    } else if (*evaluate) {
      write_config_echo(eargs.out_dir,
                        {{"checkpoint", join(eargs.checkpoints)},
                         {"data", eargs.data_dir},
                         {"out-dir", eargs.out_dir},
                         {"k", join(eargs.k_values)},
                         {"threads", std::to_string(eargs.threads)}});
      const buir::EvaluateOutput out = buir::cmd_evaluate(eargs);
      for (std::size_t j = 0; j < eargs.k_values.size(); ++j)
        std::cout << "P@" << eargs.k_values[j] << " = "
                  << out.precision_mean[j] << " +- " << out.precision_std[j]
                  << "\tN@" << eargs.k_values[j] << " = " << out.ndcg_mean[j]
                  << " +- " << out.ndcg_std[j] << '\n';
    } else if (*recommend) {
      write_config_echo(rargs.out_dir,
                        {{"checkpoint", rargs.checkpoint},
                         {"data", rargs.data_dir},
                         {"users", join(rargs.users)},
                         {"k", std::to_string(rargs.k)},
                         {"out-dir", rargs.out_dir}});
      buir::cmd_recommend(rargs);
    } else if (*compare) {
      cargs.model_a = load_model_options(config_a);
      cargs.model_b = load_model_options(config_b);
      write_config_echo(cargs.out_dir,
                        {{"config-a", config_a},
                         {"config-b", config_b},
                         {"data", cargs.data_dir},
                         {"out-dir", cargs.out_dir},
                         {"seeds", join(cargs.seeds)},
                         {"k", join(cargs.k_values)},
                         {"threads", std::to_string(cargs.threads)}});
      const buir::CompareOutput out = buir::cmd_compare(cargs);
      for (std::size_t j = 0; j < cargs.k_values.size(); ++j)
        std::cout << "P@" << cargs.k_values[j] << ": A " << out.precision_a[j]
                  << "\tB " << out.precision_b[j] << "\tdelta "
                  << out.precision_delta[j] << '\n';
    }
  } catch (const buir::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const buir::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
