// sqcat: run one scenario from an INI config and write its artifacts.
//
// Exit status: 0 ok, 1 I/O failure, 2 invalid command line or config,
// 3 numerical failure (truncation, non-convergence).

#include <CLI11.hpp>
#include <openssl/evp.h>
#include <openssl/opensslv.h>

#include <boost/version.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "sqcat/scenario.hpp"

namespace {

namespace fs = std::filesystem;
using sqcat::cli::Json;

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os << content;
  if (!os) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spin-motion squeezed-wavepacket simulator and estimator"};
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  app.add_option("--config", config_path, "INI scenario config")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "RNG seed (overrides [run] seed)");
  app.add_option("--threads", threads, "worker threads (0 = all cores)");
  app.require_subcommand(1);
  for (const auto& name : sqcat::cli::commands()) app.add_subcommand(name)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());

  sqcat::cli::Job job;
  std::optional<sqcat::config::Config> cfg;
  sqcat::cli::RunContext ctx;
  try {
    cfg = sqcat::config::Config::load(config_path);
    ctx.seed = seed ? *seed : sqcat::cli::config_seed(*cfg, 1);
    ctx.threads = threads;
    job = sqcat::cli::prepare(command, *cfg, ctx);
  } catch (const std::exception& e) {
    std::cerr << "sqcat " << command << ": invalid input: " << e.what() << "\n";
    return 2;
  }

  const auto start = std::chrono::steady_clock::now();
  sqcat::cli::Artifacts files;
  try {
    files = job();
  } catch (const sqcat::ConvergenceError& e) {
    std::cerr << "sqcat " << command << ": estimate: " << e.what() << " after " << e.iterations()
              << " iterations\n";
    return 3;
  } catch (const sqcat::TruncationError& e) {
    std::cerr << "sqcat " << command << ": fock: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "sqcat " << command << ": numerical failure: " << e.what() << "\n";
    return 3;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  try {
    fs::create_directories(out_dir);
    Json listing = Json::object();
    for (const auto& [name, content] : files) {
      write_file(fs::path(out_dir) / name, content);
      listing[name] = {{"sha256", sha256_hex(content)}, {"bytes", content.size()}};
    }
    Json manifest = {{"command", command},
                     {"config", {{"path", config_path}, {"values", cfg->echo()}}},
                     {"seed", ctx.seed},
                     {"threads", ctx.threads},
                     {"versions",
                      {{"sqcat", SQCAT_VERSION},
                       {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                     "." + std::to_string(EIGEN_MINOR_VERSION)},
                       {"boost", BOOST_LIB_VERSION},
                       {"openssl", OPENSSL_VERSION_TEXT},
                       {"compiler", __VERSION__}}},
                     {"wall_time_s", wall},
                     {"files", listing}};
    write_file(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "sqcat " << command << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
