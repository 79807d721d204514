// vqel: experiment runner for the VQ emergent-language lab.
//
//   vqel train --config exp.json --set lr=3e-4 --seeds 0,1,2
//   vqel eval --checkpoint runs/x/checkpoints/seed_0.json
//   vqel sweep-candidates --checkpoint ... --b-list 2,10,32,100
//   vqel grid --config exp.json --lr 1e-4,3e-4,1e-3
//   vqel export-dataset-split --split-seed 2024 --out split.json

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "vqel/data/objects.hpp"
#include "vqel/error.hpp"
#include "vqel/runner/checkpoint.hpp"
#include "vqel/runner/config.hpp"
#include "vqel/runner/grid.hpp"
#include "vqel/runner/results.hpp"
#include "vqel/runner/run.hpp"

namespace fs = std::filesystem;
using namespace vqel;
using namespace vqel::runner;

namespace {

enum Exit { kOk = 0, kConfig = 1, kNumeric = 2, kIo = 3 };

struct ConfigSource {
  std::string file;
  std::vector<std::string> sets;
  std::vector<std::uint64_t> seeds;
  std::string output_dir;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", file, "JSON config file (flat ExperimentConfig fields)");
    app->add_option("--set", sets, "override a config field, key=value (value parsed as JSON when possible)");
    app->add_option("--seeds", seeds, "seed list")->delimiter(',');
    app->add_option("-o,--output-dir", output_dir, "output directory");
  }

  ExperimentConfig load() const {
    nlohmann::json j = nlohmann::json(ExperimentConfig{});
    if (!file.empty()) {
      const auto f = parse_json_file(file);
      if (!f.is_object()) throw ConfigError(file + ": expected a JSON object");
      for (const auto& [k, v] : f.items()) {
        if (!j.contains(k)) throw ConfigError("unknown config field '" + k + "'");
        j[k] = v;
      }
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
      const auto key = s.substr(0, eq);
      const auto raw = s.substr(eq + 1);
      if (!j.contains(key)) throw ConfigError("unknown config field '" + key + "'");
      auto parsed = nlohmann::json::parse(raw, nullptr, false);
      j[key] = parsed.is_discarded() ? nlohmann::json(raw) : parsed;
    }
    if (!seeds.empty()) j["seeds"] = seeds;
    if (!output_dir.empty()) j["output_dir"] = output_dir;
    ExperimentConfig c;
    try {
      c = j.get<ExperimentConfig>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("bad config value: ") + e.what());
    }
    // Unknown enum strings deserialize to the first enumerator; catch that.
    for (const char* key : {"method", "variant", "sender_update", "receiver_update", "metric"}) {
      if (nlohmann::json(c)[key] != j[key]) throw ConfigError(std::string("invalid value for ") + key + ": " + j[key].dump());
    }
    validate(c);
    return c;
  }
};

void print_summary(const RunResult& r) {
  const auto& a = r.aggregate;
  auto pm = [](const Stat& s) {
    char buf[64];
    if (s.std) std::snprintf(buf, sizeof buf, "%.4f ± %.4f", s.mean, *s.std);
    else std::snprintf(buf, sizeof buf, "%.4f", s.mean);
    return std::string(buf);
  };
  std::cout << to_string(r.config.method) << " " << to_string(r.config.variant) << " ["
            << games::to_string(r.config.sender_update) << "/" << games::to_string(r.config.receiver_update)
            << "]\n  ACC " << pm(a.accuracy) << "  AW " << pm(a.active_words) << "  TopSim " << pm(a.topsim)
            << "  H(C|M) " << pm(a.conditional_entropy) << "  unique " << pm(a.unique_messages) << "\n";
  if (a.self_play_accuracy) std::cout << "  self-play ACC " << pm(*a.self_play_accuracy) << "\n";
  std::cout << "  wall clock " << r.wall_clock << " s\n";
}

void print_metrics(const MetricSummary& m) {
  std::cout << nlohmann::json(m).dump(2) << "\n";
}

std::vector<std::size_t> parse_b_list(const std::vector<std::size_t>& v) {
  if (v.empty()) return {2, 5, 10, 20, 32, 50, 100};
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VQ emergent-language experiment runner"};
  app.require_subcommand(1);

  ConfigSource train_src;
  bool save_checkpoints = true;
  auto* train = app.add_subcommand("train", "train a configuration over its seeds and export results");
  train_src.attach(train);
  train->add_flag("!--no-checkpoints", save_checkpoints, "skip per-seed checkpoint files");

  std::string eval_ckpt, eval_split = "test";
  std::size_t eval_b = 0;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval->add_option("--split", eval_split, "train, valid or test")->check(CLI::IsMember({"train", "valid", "test"}));
  eval->add_option("-B,--candidates", eval_b, "candidate count (default: eval_batch)");

  ConfigSource sweep_src;
  std::string sweep_ckpt, sweep_out;
  std::vector<std::size_t> sweep_list;
  auto* sweep = app.add_subcommand("sweep-candidates", "accuracy of one trained model across candidate counts");
  sweep_src.attach(sweep);
  sweep->add_option("--checkpoint", sweep_ckpt, "checkpoint to evaluate (otherwise train the first seed)");
  sweep->add_option("--b-list", sweep_list, "candidate counts")->delimiter(',');
  sweep->add_option("--out", sweep_out, "CSV path (default: <output_dir>/sweep.csv)");

  ConfigSource grid_src;
  Grid grid;
  auto* gridc = app.add_subcommand("grid", "grid search over lr / tau_sample / tau0 by validation accuracy");
  grid_src.attach(gridc);
  gridc->add_option("--lr", grid.lr, "learning rates")->delimiter(',');
  gridc->add_option("--tau-sample", grid.tau_sample, "sampling temperatures")->delimiter(',');
  gridc->add_option("--tau0", grid.tau0, "GS-ST temperature offsets")->delimiter(',');

  std::uint64_t split_seed = ExperimentConfig{}.split_seed;
  std::string split_out;
  auto* exsplit = app.add_subcommand("export-dataset-split", "write the train/valid/test object ids as JSON");
  exsplit->add_option("--split-seed", split_seed, "split seed");
  exsplit->add_option("--out", split_out, "output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*train) {
      const auto c = train_src.load();
      const fs::path dir = c.output_dir;
      const auto r = run(c, [&](const SeedRun& s) {
        std::cerr << "seed " << s.result.seed << ": ACC " << s.result.test.accuracy << " ("
                  << s.result.wall_clock << " s)\n";
        if (save_checkpoints)
          save_checkpoint(dir / "checkpoints" / ("seed_" + std::to_string(s.result.seed) + ".json"), c, s.models);
      });
      export_results(dir, {r});
      print_summary(r);
    } else if (*eval) {
      const auto ck = load_checkpoint(eval_ckpt);
      const auto split = data::split(ck.config.split_seed);
      const auto b = eval_b ? eval_b : ck.config.eval_batch;
      const auto outcome = ck.models.evaluate(split.part(eval_split), b, ck.config.t_sim);
      metrics::TopSimOptions opt;
      opt.sample_size = ck.config.topsim_sample;
      opt.seed = make_stream(ck.models.seed, stream::topsim)();
      print_metrics(to_summary(metrics::summarize(outcome.transcript, ck.config.vocab, opt)));
    } else if (*sweep) {
      const auto list = parse_b_list(sweep_list);
      std::vector<SweepRow> rows;
      ExperimentConfig c;
      if (!sweep_ckpt.empty()) {
        auto ck = load_checkpoint(sweep_ckpt);
        c = ck.config;
        rows = sweep_candidates(ck.models, data::split(c.split_seed).test, list, c.t_sim);
      } else {
        c = sweep_src.load();
        auto s = run_seed(c, c.seeds.front());
        rows = sweep_candidates(s.models, data::split(c.split_seed).test, list, c.t_sim);
      }
      const auto csv = sweep_csv(rows);
      write_atomic(sweep_out.empty() ? fs::path(c.output_dir) / "sweep.csv" : fs::path(sweep_out), csv);
      std::cout << csv;
    } else if (*gridc) {
      const auto c = grid_src.load();
      const auto g = grid_search(c, grid);
      const fs::path dir = c.output_dir;
      write_atomic(dir / "grid.csv", grid_csv(g));
      write_atomic(dir / "best_config.json", nlohmann::json(g.best_config).dump(2));
      std::cout << grid_csv(g) << "best: row " << g.best << "\n";
    } else if (*exsplit) {
      write_atomic(split_out, data::split_to_json(data::split(split_seed)).dump());
    }
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  }
  return kOk;
}
