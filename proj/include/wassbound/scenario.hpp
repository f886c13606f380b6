#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "wassbound/bounds.hpp"
#include "wassbound/certify.hpp"
#include "wassbound/models.hpp"

namespace wassbound {

/// Exit codes shared by the CLI and the scenario runner.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitCertificateRejected = 2,
  kExitBoundFalsified = 3,
};

/// A reproducible experiment: model + certificate request + bound horizon +
/// simulation budget. The seed is mandatory; identical seeds reproduce
/// byte-identical CSV outputs.
struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  ChainModel model = ChainModel::gg1(DistributionSpec::deterministic(-1.0));
  nlohmann::json raw;

  static Scenario load(const std::filesystem::path& file);
  static Scenario from_json(const nlohmann::json& j);
  nlohmann::json to_json() const { return raw; }
};

struct RunResult {
  int exit_code = kExitOk;
  nlohmann::json summary;
};

/// Builds and verifies the requested certificate; writes certificate.json.
/// Exit 0 on accept, 2 on reject (report still written).
RunResult run_verify(const Scenario& s, const std::filesystem::path& out_dir);

/// Writes the bound curve (bound.csv, schema n,value,stderr).
RunResult run_bound(const Scenario& s, const std::filesystem::path& out_dir);

/// Writes the empirical Wasserstein curve (empirical.csv).
RunResult run_simulate(const Scenario& s, const std::filesystem::path& out_dir);

/// Bound and empirical curves on a shared n-grid: compare.csv
/// (n,bound,empirical,stderr), compare.svg, summary.json. Exit 3 when the
/// empirical curve exceeds the bound by more than 3 stderr anywhere.
RunResult run_compare(const Scenario& s, const std::filesystem::path& out_dir);

/// Batch-means estimate of the CLT variance against the certificate bound;
/// writes clt_summary.json.
RunResult run_clt(const Scenario& s, const std::filesystem::path& out_dir);

}  // namespace wassbound
