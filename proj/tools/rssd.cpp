// rssd: command-line front end for the simulator, the vault service and
// the experiments. Exit codes: 0 success, 1 runtime failure, 2 usage or
// config error.

#include <csignal>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "rssd/cli/experiments.hpp"
#include "rssd/cli/run_config.hpp"
#include "rssd/common/error.hpp"
#include "rssd/harness/trace.hpp"
#include "rssd/vault/server.hpp"
#include "rssd/vault/store.hpp"

namespace {

using namespace rssd;
using rssd::cli::RunConfig;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

/// RunConfig flags for one subcommand. Values are kept as text and applied
/// through RunConfig::set so flags and config files share one parser.
struct RunOptions {
  std::map<std::string, std::string> values;
  std::string config_file;
  CLI::App* app = nullptr;

  void attach(CLI::App* sub) {
    app = sub;
    RunConfig defaults;
    for (const auto& f : cli::config_fields()) {
      std::string flag = "--" + f.name;
      for (auto& c : flag) c = c == '_' ? '-' : c;
      sub->add_option(flag, values[f.name], f.help)->default_str(f.get(defaults));
    }
    sub->add_option("--config", config_file, "key = value file; its values override flags");
  }

  /// `extra` holds values given some other way (positionals); they rank
  /// with flags, below the config file.
  RunConfig build(const std::map<std::string, std::string>& extra = {}) const {
    RunConfig cfg;
    for (const auto& f : cli::config_fields()) {
      std::string flag = "--" + f.name;
      for (auto& c : flag) c = c == '_' ? '-' : c;
      if (app->count(flag) > 0) cfg.set(f.name, values.at(f.name));
    }
    for (const auto& [key, value] : extra) cfg.set(key, value);
    if (!config_file.empty()) cfg.apply_file(config_file);
    cfg.validate();
    return cfg;
  }
};

void print_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::cout << in.rdbuf();
}

int cmd_simulate(const RunConfig& cfg) {
  auto result = cli::run_simulate(cfg, std::cerr);
  print_file(cfg.out_dir() / "summary.txt");
  return result.ok() ? kExitOk : kExitFailure;
}

int cmd_attack(const RunConfig& cfg) {
  auto result = cli::run_attack(cfg, std::cerr);
  print_file(cfg.out_dir() / "attack_report.txt");
  return result.recovered_all() ? kExitOk : kExitFailure;
}

int cmd_retention(const RunConfig& cfg) {
  auto result = cli::run_retention(cfg, std::cerr);
  print_file(cfg.out_dir() / "summary.txt");
  std::cout << "csv: " << (cfg.out_dir() / "retention.csv").string() << "\n";
  bool vault_on = cfg.vault_mode() != cli::VaultMode::Disabled;
  return !vault_on || result.unbounded ? kExitOk : kExitFailure;
}

int cmd_gen_trace(const RunConfig& cfg, const std::string& output) {
  auto logical = cfg.device_config().ftl.logical_pages();
  harness::save_trace(output, harness::generate_benign(cfg.benign_params(logical)));
  std::cout << "wrote " << cfg.ops << " records to " << output << "\n";
  return kExitOk;
}

int cmd_forensics(const cli::ForensicsOptions& options, const std::string& output) {
  std::ofstream file;
  if (!output.empty()) {
    file.open(output, std::ios::trunc);
    if (!file) throw Error(Errc::ConfigError, "cannot write " + output);
  }
  std::ostream& report = output.empty() ? std::cout : file;
  auto result = cli::run_forensics(options, report);
  const auto& chain = result.chain;
  if (chain.tamper_at) {
    std::cerr << "TamperDetected(seq " << *chain.tamper_at << ")\n";
    return kExitFailure;
  }
  if (!chain.replay.ok) {
    std::cerr << "REPLAY MISMATCH at lpa " << chain.replay.first_mismatch.value_or(0) << ": "
              << chain.replay.detail << "\n";
    return kExitFailure;
  }
  std::cerr << "VERIFIED seqs " << chain.lo << ".." << chain.hi;
  if (result.have_truth) {
    std::cerr << ", order " << (result.order_exact ? "matches" : "DIFFERS FROM") << " ground truth ("
              << result.order_matches << "/" << result.truth_ops << "), " << result.attack_ops << " attack ops";
  }
  std::cerr << "\n";
  return result.ok() ? kExitOk : kExitFailure;
}

int cmd_vault_serve(const std::string& listen, const std::string& dir, const std::string& key_file, bool fsync) {
  // Handle SIGTERM and SIGINT synchronously: block them before any thread
  // starts so only sigwait() below sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGTERM);
  sigaddset(&signals, SIGINT);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  vault::VaultStore store(vault::VaultOptions{dir, DeviceKey::load(key_file), fsync});
  vault::VaultServer server(store, net::Endpoint::parse(listen));
  server.start();
  auto status = store.status();
  std::cout << "listening on " << server.endpoint().to_string() << std::endl;
  std::cerr << "vault: " << status.segments << " segments, last seq " << status.last_seq << std::endl;

  int sig = 0;
  sigwait(&signals, &sig);
  server.stop();
  std::cerr << "vault: stopped" << std::endl;
  return kExitOk;
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::ConfigError:
    case Errc::TraceParseError:
      return kExitUsage;
    default:
      return kExitFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rssd: ransomware-aware SSD simulator with a remote vault, attack replay and forensics"};
  app.require_subcommand(1);

  RunOptions simulate_opts, attack_opts, retention_opts, trace_opts;
  auto* simulate = app.add_subcommand("simulate", "replay a trace and write throughput.csv and summary.txt");
  simulate_opts.attach(simulate);

  auto* attack = app.add_subcommand("attack", "run an attack, restore the pre-attack snapshot, print a verdict");
  std::string attack_name;
  attack->add_option("name", attack_name, "gc | timing | trimming (same as --attack)");
  attack_opts.attach(attack);

  auto* retention = app.add_subcommand("retention", "multi-day retention experiment, writes retention.csv");
  retention_opts.attach(retention);

  auto* forensics = app.add_subcommand("forensics", "verify a finished run's evidence chain");
  cli::ForensicsOptions fopts;
  std::string run_dir, forensics_out;
  forensics->add_option("--run", run_dir, "run output directory")->required();
  forensics->add_option("--vault", fopts.vault, "vault directory or host:port (default: the run's vault)");
  forensics->add_option("--lo", fopts.lo, "first seq of the window")->default_val(1);
  forensics->add_option("--hi", fopts.hi, "last seq of the window, 0 for the vault's last")->default_val(0);
  forensics->add_flag("--json", fopts.json, "JSON lines instead of text");
  forensics->add_option("--output", forensics_out, "write the report here instead of stdout");

  auto* serve = app.add_subcommand("vault-serve", "run the vault service until SIGTERM");
  std::string listen = "127.0.0.1:7300", vault_dir, key_file;
  bool fsync = true;
  serve->add_option("--listen", listen, "host:port to bind; port 0 picks one")->capture_default_str();
  serve->add_option("--dir", vault_dir, "segment directory")->required();
  serve->add_option("--key-file", key_file, "device key file")->required();
  serve->add_option("--fsync", fsync, "fsync segment files before acknowledging")->capture_default_str();

  auto* keygen = app.add_subcommand("keygen", "write a fresh random device key");
  std::string key_out;
  bool force = false;
  keygen->add_option("--output", key_out, "key file to create")->required();
  keygen->add_flag("--force", force, "overwrite an existing file");

  auto* gen_trace = app.add_subcommand("gen-trace", "write a generated benign trace");
  std::string trace_out;
  gen_trace->add_option("--output", trace_out, "trace file to create")->required();
  trace_opts.attach(gen_trace);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(simulate_opts.build());
    if (*attack) {
      std::map<std::string, std::string> extra;
      if (!attack_name.empty()) {
        if (attack->count("--attack") > 0) throw Error(Errc::ConfigError, "give the attack by name or --attack, not both");
        extra["attack"] = attack_name;
      }
      return cmd_attack(attack_opts.build(extra));
    }
    if (*retention) return cmd_retention(retention_opts.build());
    if (*gen_trace) return cmd_gen_trace(trace_opts.build(), trace_out);
    if (*forensics) {
      fopts.run_dir = run_dir;
      return cmd_forensics(fopts, forensics_out);
    }
    if (*serve) return cmd_vault_serve(listen, vault_dir, key_file, fsync);
    if (*keygen) {
      if (std::filesystem::exists(key_out) && !force) {
        throw Error(Errc::ConfigError, key_out + " exists; pass --force to overwrite");
      }
      DeviceKey::random().save(key_out);
      std::cout << "wrote key to " << key_out << "\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
