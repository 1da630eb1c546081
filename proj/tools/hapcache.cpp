// Command line front end: run one scenario, sweep an axis, train and save a
// policy, rebuild reports from stored summaries, verify stored records.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hapcache/harness.hpp"

namespace fs = std::filesystem;
using namespace hapcache;

namespace {

struct Common {
  std::string profile = "desk";
  std::string config;
  std::vector<std::string> sets;
  std::uint64_t seed = 1;
  bool seed_given = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--profile", c.profile, "Parameter profile: desk or full")->check(CLI::IsMember({"desk", "full"}));
  cmd->add_option("--config", c.config, "JSON file overlaid on the profile")->check(CLI::ExistingFile);
  cmd->add_option("--set", c.sets, "Override a sweep axis, e.g. --set users=18 (repeatable)");
}

ScenarioConfig load(const Common& c) {
  ScenarioConfig cfg;
  if (!c.config.empty()) {
    std::ifstream f(c.config);
    auto j = nlohmann::json::parse(f);
    if (!j.contains("profile")) j["profile"] = c.profile;
    cfg = ScenarioConfig::from_json(j);
  } else {
    cfg = ScenarioConfig::named(c.profile);
  }
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects axis=value, got " + s);
    cfg.set_axis(s.substr(0, eq), std::stod(s.substr(eq + 1)));
  }
  if (c.seed_given) cfg.seed = c.seed;
  cfg.validate();
  return cfg;
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  if (names.empty()) return all_methods();
  std::vector<Method> out;
  for (const auto& n : names) out.push_back(parse_method(n));
  return out;
}

void print_table(const std::vector<CellSummary>& cells) {
  std::cout << std::left << std::setw(10) << "method" << std::setw(12) << "value" << std::setw(6) << "seed" << std::right
            << std::setw(13) << "PC [W]" << std::setw(13) << "P_dc" << std::setw(13) << "P_hap" << std::setw(13) << "P_rf"
            << std::setw(8) << "feas" << '\n';
  for (const auto& c : cells) {
    std::cout << std::left << std::setw(10) << c.method << std::setw(12) << c.value << std::setw(6) << c.seed << std::right
              << std::setprecision(5) << std::setw(13) << c.pc << std::setw(13) << c.p_dc << std::setw(13) << c.p_hap
              << std::setw(13) << c.p_rf << std::setw(8) << c.feasible_rate;
    if (!c.error.empty()) std::cout << "  " << c.error;
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Caching and routing simulator for HAP networks with FSO backhaul"};
  app.require_subcommand(1);

  Common common;
  std::string out;
  std::vector<std::string> methods;

  auto* run = app.add_subcommand("run", "Train and evaluate the methods on one scenario");
  add_common(run, common);
  run->add_option("--seed", common.seed, "Scenario seed")->each([&](const std::string&) { common.seed_given = true; });
  run->add_option("--methods", methods, "Subset of proposed, B1, B2, B3, B4");
  run->add_option("--out", out, "Result directory (default $HAPCACHE_RESULTS or ./results)");

  std::string axis;
  std::vector<double> values;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  auto* sw = app.add_subcommand("sweep", "Sweep one axis over values and seeds, write CSV and plots");
  add_common(sw, common);
  sw->add_option("--axis", axis, "contents, users, mu_cac, mu_acc, n_sto, b_fso, b_rf, visibility or omega")->required();
  sw->add_option("--values", values, "Axis values in SI units")->required();
  sw->add_option("--seeds", seeds, "Seeds");
  sw->add_option("--methods", methods, "Subset of proposed, B1, B2, B3, B4");
  sw->add_option("--out", out, "Result directory");

  std::string checkpoint = "policy";
  bool unicast = false;
  auto* tr = app.add_subcommand("train", "Train a caching policy and save a checkpoint");
  add_common(tr, common);
  tr->add_option("--seed", common.seed, "Scenario seed")->each([&](const std::string&) { common.seed_given = true; });
  tr->add_option("--checkpoint", checkpoint, "Output prefix; writes <prefix>.bin and <prefix>.json");
  tr->add_flag("--unicast", unicast, "Train against unicast routing");

  std::string dir;
  auto* rep = app.add_subcommand("report", "Rebuild tables and plots from summary_*.csv files");
  rep->add_option("dir", dir, "Result directory")->required()->check(CLI::ExistingDirectory);

  std::vector<std::string> paths;
  auto* ver = app.add_subcommand("verify", "Check stored run records (JSON files or directories)");
  ver->add_option("paths", paths, "Files or directories")->required();

  auto* cfg_cmd = app.add_subcommand("config", "Print the effective configuration as JSON");
  add_common(cfg_cmd, common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto cfg = load(common);
      const fs::path dest = results_dir(out);
      const Scenario sc(cfg);
      auto recs = run_all_methods(sc, parse_methods(methods));
      std::vector<CellSummary> cells;
      std::map<std::string, std::vector<double>> curves;
      for (auto& r : recs) {
        cells.push_back(summarize(r));
        write_atomically(dest / "runs" / (r.method + "_seed" + std::to_string(cfg.seed) + ".json"), r.to_json().dump(1));
        if (!r.learning_curve.empty()) curves[r.method] = r.learning_curve;
      }
      if (!curves.empty()) write_atomically(dest / "learning_curve.svg", svg::curves("Mean reward per iteration", curves));
      print_table(cells);
      std::cout << "records written to " << dest << '\n';
    } else if (*sw) {
      const auto cfg = load(common);
      const fs::path dest = results_dir(out);
      const auto cells = sweep(cfg, axis, values, seeds, dest, parse_methods(methods),
                               [](const std::string& tag) { std::cerr << "done " << tag << '\n'; });
      print_table(cells);
      for (const auto& p : write_plots(cells, dest)) std::cout << "plot " << p.string() << '\n';
    } else if (*tr) {
      const auto cfg = load(common);
      const Scenario sc(cfg);
      const auto res = train_policy(sc, unicast ? Coupling::unicast : Coupling::multicast);
      save_checkpoint(checkpoint, res.policy,
                      {{"config_hash", hex64(cfg.hash())},
                       {"iteration", cfg.ppo.iter_max},
                       {"seed", cfg.seed},
                       {"coupling", unicast ? "unicast" : "multicast"},
                       {"config", cfg.to_json()},
                       {"learning_curve", res.curve}});
      for (std::size_t i = 0; i < res.curve.size(); ++i) std::cout << i + 1 << ' ' << res.curve[i] << '\n';
      std::cout << "checkpoint " << checkpoint << ".bin\n";
    } else if (*rep) {
      std::vector<CellSummary> cells;
      for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (name.rfind("summary_", 0) == 0 && e.path().extension() == ".csv") {
          auto part = read_summary_csv(e.path());
          cells.insert(cells.end(), part.begin(), part.end());
        }
      }
      if (cells.empty()) {
        std::cerr << "no summary_*.csv in " << dir << '\n';
        return 1;
      }
      for (const auto& [ax, by_method] : [&] {
             std::map<std::string, std::vector<CellSummary>> m;
             for (const auto& c : cells) m[c.axis].push_back(c);
             return m;
           }()) {
        std::cout << "axis " << ax << '\n';
        for (const auto& [method, row] : mean_by_method(by_method)) {
          std::cout << "  " << std::left << std::setw(10) << method;
          for (const auto& [v, pc] : row) std::cout << ' ' << v << ':' << std::setprecision(5) << pc;
          std::cout << '\n';
        }
      }
      for (const auto& p : write_plots(cells, dir)) std::cout << "plot " << p.string() << '\n';
    } else if (*ver) {
      std::vector<fs::path> files;
      for (const auto& p : paths) {
        if (fs::is_directory(p)) {
          for (const auto& e : fs::recursive_directory_iterator(p))
            if (e.path().extension() == ".json") files.push_back(e.path());
        } else {
          files.emplace_back(p);
        }
      }
      int bad = 0;
      for (const auto& f : files) {
        std::ifstream in(f);
        const auto j = nlohmann::json::parse(in);
        if (!j.contains("slots")) continue;
        const auto r = verify_record(j);
        std::cout << (r.pass() ? "ok   " : "FAIL ") << f.string() << " (" << r.slots_checked << " slots)\n";
        for (const auto& msg : r.failures) std::cout << "     " << msg << '\n';
        bad += r.pass() ? 0 : 1;
      }
      return bad == 0 ? 0 : 1;
    } else if (*cfg_cmd) {
      std::cout << load(common).to_json().dump(2) << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
