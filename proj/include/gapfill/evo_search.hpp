#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "gapfill/pipeline.hpp"
#include "gapfill/rng.hpp"
#include "gapfill/series.hpp"

namespace gapfill {

/// Knobs of the evolutionary structural search.
struct EvoConfig {
    std::size_t population_size = 20;
    std::size_t generations = 15;
    std::size_t tournament_size = 3;
    double mutation_rate = 0.8;
    double crossover_rate = 0.5;
    std::size_t elitism_count = 1;
    std::uint64_t rng_seed = 0;
    double fitness_holdout_fraction = 0.2;
    std::size_t max_nodes = kDefaultMaxNodes;
    unsigned threads = 1;  // 0 = all hardware threads

    void validate() const;
};

struct Individual {
    Pipeline genome;
    double fitness = std::numeric_limits<double>::quiet_NaN();  // NaN = unevaluated
};

struct SearchResult {
    Pipeline best;
    double best_fitness = std::numeric_limits<double>::infinity();
    std::vector<double> trace;  // best-ever fitness after each generation
};

/// Pseudo-gap holdout: contiguous segments (random length 5-50) over observed
/// samples until `fraction` of them is masked. Deterministic per seed; the
/// mask depends only on (series, fraction, seed), never on the genome under
/// evaluation, so fitness values are reproducible and cache-free.
std::vector<GapSegment> pseudo_gap_mask(const TimeSeries& series, double fraction,
                                        std::uint64_t seed);

/// MAE of the bi-directionally restored pseudo-gaps; +inf for genomes whose
/// fit is infeasible on the masked series.
double evaluate_fitness(const Pipeline& genome, const TimeSeries& series, std::size_t w,
                        const EvoConfig& config);

/// 2-4 node chain from a small template family; always valid.
Pipeline random_genome(Rng& rng);

/// One of: swap a node operation, perturb a hyperparameter, add a blend over
/// the sink, drop a non-sink node. Invalid draws are retried a bounded number
/// of times, then the genome is returned unchanged.
Pipeline mutate(const Pipeline& genome, Rng& rng, std::size_t max_nodes = kDefaultMaxNodes);

/// Subtree exchange; falls back to a copy of `a` when no valid graft is
/// found. Structurally equal parents short-circuit to a copy.
Pipeline crossover(const Pipeline& a, const Pipeline& b, Rng& rng,
                   std::size_t max_nodes = kDefaultMaxNodes);

/// Tournament-selected, elitist evolution over `generations` rounds. The
/// trace has one non-increasing entry per round. Throws "no feasible
/// pipeline" when generation 0 contains only infeasible genomes.
SearchResult run_search(const TimeSeries& series, std::size_t w, const EvoConfig& config);

namespace detail {
// Individual mutation operators, exposed for property tests. Empty optional
// means the operator does not apply to this genome.
std::optional<Pipeline> try_swap_operation(const Pipeline& p, Rng& rng);
std::optional<Pipeline> try_perturb_params(const Pipeline& p, Rng& rng);
std::optional<Pipeline> try_add_blend(const Pipeline& p, Rng& rng, std::size_t max_nodes);
std::optional<Pipeline> try_drop_node(const Pipeline& p, Rng& rng);
}  // namespace detail

}  // namespace gapfill
