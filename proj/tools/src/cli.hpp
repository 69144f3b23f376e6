// Command-line front end: argument parsing, config resolution and the
// subcommand handlers. main() is a thin wrapper so tests can drive dispatch().
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mdca/gateway.hpp"
#include "mdca/metrics.hpp"

namespace mdca::cli {

/// Shared settings. Each key resolves as flag > environment (MDCA_*) >
/// config file (--config or MDCA_CONFIG) > built-in default.
struct GlobalConfig {
    std::string lexicon_path;    // MDCA_LEXICON, "lexicon"; default: built-in lexicon
    std::string registry_path;   // MDCA_REGISTRY, "registry"; default: built-in texts
    std::string providers_path;  // MDCA_PROVIDERS, "providers"; default: none
    std::string store_path = "mdca-store";  // MDCA_STORE, "store"
    std::uint64_t seed = 0;                 // MDCA_SEED, "seed"
    Weights weights;                        // MDCA_WEIGHTS "sc,dc,cpa", "weights"
    Json embedding = "fallback";            // MDCA_EMBEDDING, "embedding"
    std::map<std::string, std::string> source;  // key -> flag | env | file | default
};

struct GlobalFlags {
    std::optional<std::string> config;
    std::optional<std::string> lexicon;
    std::optional<std::string> registry;
    std::optional<std::string> providers;
    std::optional<std::string> store;
    std::optional<std::string> seed;
    std::optional<std::string> weights;
    std::optional<std::string> embedding;
};

GlobalConfig resolve_config(const GlobalFlags& flags, const EnvLookup& env);

/// Runs one command line (without the program name). Data goes to out,
/// diagnostics to err. Returns 0 on success, 1 on partial or data failure,
/// 2 on usage or configuration errors.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
             const EnvLookup& env = process_env);

}  // namespace mdca::cli
