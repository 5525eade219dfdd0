#pragma once
#include <cstdint>
// Bounded symbolic run search: word acceptance and the emptiness oracle.

#include <optional>
#include <string>
#include <vector>

#include "tpda/trpda.hpp"

namespace tpda {

enum class Tri { True, False, Unknown };
std::string tri_str(Tri t);

struct AcceptStats {
    std::size_t nodes = 0;
    bool cut = false;
};

/// acceptance by final state; at most max_silent consecutive epsilon rules
Tri accepts(const TrPDA& a, const TimedWord& w, std::size_t max_silent, AcceptStats* stats = nullptr);
std::size_t default_max_silent(const TimedWord& w);

struct OracleResult {
    bool nonempty = false;
    TimedWord word;
    std::vector<std::size_t> run;  // rule indices
    std::size_t nodes = 0;
};

/// exact search for an accepting run of at most max_steps rules (shortest first)
OracleResult bounded_empty_oracle(const TrPDA& a, std::size_t max_steps);

/// same, but acceptance additionally requires an empty stack
OracleResult bounded_empty_stack_oracle(const TrPDA& a, std::size_t max_steps);

struct SampledRun {
    TimedWord word;
    std::vector<std::size_t> run;
};

/// accepting runs found by randomized bounded search, `per_run` sampled words each
std::vector<SampledRun> sample_accepted(const TrPDA& a, std::size_t max_steps, std::size_t max_inputs,
                                        std::size_t count, std::uint64_t seed, std::size_t per_run = 3);

} // namespace tpda
