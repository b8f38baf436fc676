// qvote: run simulated quantum approval-voting elections, noise sweeps and
// transcript replays.
//
//   qvote run <config.json> [-o transcript.json] [--seed N] [--shots N]
//   qvote sweep <sweep.json> [-o out.csv] [--seed N] [--shots N] [--jobs N]
//   qvote replay <transcript.json>
//
// Exit codes: 0 success, 1 bad input, 2 security violation during a run,
// 3 replay divergence.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "qvote/qvote.hpp"

namespace {

constexpr int kExitBadInput = 1;
constexpr int kExitViolation = 2;
constexpr int kExitDivergence = 3;

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw qvote::Error(qvote::ErrorCode::ParseError, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& ex) {
    throw qvote::Error(qvote::ErrorCode::ParseError, path + ": " + ex.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw qvote::Error(qvote::ErrorCode::InvalidArgument, "cannot write " + path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum approval-voting protocol simulator"};
  app.require_subcommand(1);

  std::string input_path;
  std::string output_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> shots;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

  auto* run = app.add_subcommand("run", "Run an election and emit its transcript");
  run->add_option("config", input_path, "Election config JSON")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--output", output_path, "Write the transcript here (default: stdout)");
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--shots", shots, "Override shots per ballot");

  auto* sweep = app.add_subcommand("sweep", "Sweep gate or measurement error and emit CSV");
  sweep->add_option("spec", input_path, "Sweep spec JSON")->required()->check(CLI::ExistingFile);
  sweep->add_option("-o,--output", output_path, "Write the CSV here (default: stdout)");
  sweep->add_option("--seed", seed, "Override the spec seed");
  sweep->add_option("--shots", shots, "Override shots per trajectory");
  sweep->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  auto* replay = app.add_subcommand("replay", "Re-execute a transcript and compare");
  replay->add_option("transcript", input_path, "Transcript JSON")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      qvote::ElectionInput in = qvote::parse_election_config(read_json(input_path));
      if (seed) in.seed = *seed;
      if (shots) in.shots = *shots;
      const auto outcome = qvote::run_election(in);
      const std::string transcript = outcome.transcript.dump(2) + "\n";
      if (output_path.empty()) {
        std::cerr << outcome.summary;
        std::cout << transcript;
      } else {
        write_text(output_path, transcript);
        std::cout << outcome.summary;
      }
      return outcome.violations.empty() ? 0 : kExitViolation;
    }
    if (sweep->parsed()) {
      qvote::SweepSpec spec = qvote::parse_sweep_spec(read_json(input_path));
      if (seed) spec.seed = *seed;
      if (shots) spec.shots = *shots;
      const std::string csv = qvote::sweep_csv(qvote::run_sweep(spec, jobs));
      if (output_path.empty()) {
        std::cout << csv;
      } else {
        write_text(output_path, csv);
      }
      return 0;
    }
    if (replay->parsed()) {
      const auto report = qvote::replay(read_json(input_path));
      if (report.identical) {
        std::cout << "identical\n";
        return 0;
      }
      std::cout << "divergence: " << report.divergence << '\n';
      return kExitDivergence;
    }
  } catch (const qvote::Error& e) {
    std::cerr << "qvote: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "qvote: " << e.what() << '\n';
    return kExitBadInput;
  }
  return kExitBadInput;
}
