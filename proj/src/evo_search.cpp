#include "gapfill/evo_search.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "gapfill/bidir.hpp"
#include "gapfill/parallel.hpp"

namespace gapfill {

void EvoConfig::validate() const {
    if (population_size < 2) throw std::invalid_argument("population_size must be >= 2");
    if (tournament_size < 2) throw std::invalid_argument("tournament_size must be >= 2");
    if (mutation_rate < 0.0 || mutation_rate > 1.0 || crossover_rate < 0.0 || crossover_rate > 1.0)
        throw std::invalid_argument("rates must be within [0, 1]");
    if (elitism_count >= population_size)
        throw std::invalid_argument("elitism_count must be below population_size");
    if (fitness_holdout_fraction <= 0.0 || fitness_holdout_fraction >= 1.0)
        throw std::invalid_argument("fitness_holdout_fraction must be in (0, 1)");
    if (max_nodes < 1) throw std::invalid_argument("max_nodes must be >= 1");
}

std::vector<GapSegment> pseudo_gap_mask(const TimeSeries& series, double fraction,
                                        std::uint64_t seed) {
    const std::size_t n = series.size();
    const std::size_t observed = series.observed_count();
    const auto target = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(observed)));
    if (target == 0 || n < 2) return {};

    // Pseudo-gap lengths probe the horizons the filler will actually face:
    // half the draws are short (5-50), half replay the series' own gap
    // lengths, capped by the longest observed run so they stay placeable.
    // Short draws alone let genomes that fall apart beyond ~50 steps win the
    // search and then fill the real long gaps badly.
    std::vector<std::size_t> real_lengths;
    std::size_t longest_run = 0, run = 0;
    for (std::size_t i = 0; i <= n; ++i) {
        if (i < n && !is_missing(series.values[i])) {
            ++run;
        } else {
            longest_run = std::max(longest_run, run);
            run = 0;
        }
    }
    for (const auto& gap : scan_gaps(series))
        if (gap.length > 50) real_lengths.push_back(gap.length);
    const std::size_t length_cap = std::max<std::size_t>(50, longest_run / 2);

    Rng rng = Rng::stream(seed, 0xFACADEULL, n);
    std::vector<std::uint8_t> masked(n, 0);
    std::vector<GapSegment> segments;
    std::size_t total = 0;
    const std::size_t max_attempts = 4000 + 40 * (target / 5 + 1);
    for (std::size_t attempt = 0; attempt < max_attempts && total < target; ++attempt) {
        std::size_t len;
        if (!real_lengths.empty() && rng.bernoulli(0.5))
            len = std::min(real_lengths[rng.index(real_lengths.size())], length_cap);
        else
            len = static_cast<std::size_t>(rng.uniform_int(5, 50));
        len = std::min(len, n);
        const std::size_t start = rng.index(n - len + 1);

        bool ok = (start == 0 || !masked[start - 1]) && (start + len == n || !masked[start + len]);
        for (std::size_t i = start; ok && i < start + len; ++i)
            ok = !is_missing(series.values[i]) && !masked[i];
        if (!ok) continue;

        for (std::size_t i = start; i < start + len; ++i) masked[i] = 1;
        segments.push_back({start, len});
        total += len;
    }
    std::sort(segments.begin(), segments.end(),
              [](const GapSegment& a, const GapSegment& b) { return a.start < b.start; });
    return segments;
}

namespace {

double fitness_on_mask(const Pipeline& genome, const TimeSeries& series,
                       const std::vector<GapSegment>& segments, std::size_t w) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (segments.empty()) return inf;

    TimeSeries masked = series;
    for (const auto& seg : segments)
        for (std::size_t i = seg.start; i < seg.end(); ++i) masked.values[i] = kMissing;

    try {
        const std::size_t w_eff = choose_window(masked, w);
        const DirectionalModels models = fit_directional(genome, masked, w_eff);
        GapFillPolicy policy;
        policy.w = w_eff;
        const TimeSeries filled =
            fill_gaps_with_models(masked, segments, models, policy, Combiner::ramp());

        double acc = 0.0;
        std::size_t cnt = 0;
        for (const auto& seg : segments) {
            for (std::size_t i = seg.start; i < seg.end(); ++i) {
                const double err = filled.values[i] - series.values[i];
                if (!std::isfinite(err)) return inf;
                acc += std::abs(err);
                ++cnt;
            }
        }
        return acc / static_cast<double>(cnt);
    } catch (const std::exception&) {
        return inf;
    }
}

ModelParams random_model_params(Rng& rng) {
    ModelParams params;
    params.lambda = std::pow(10.0, rng.uniform(-4.0, 0.0));
    params.k = static_cast<int>(rng.uniform_int(1, 10));
    return params;
}

OpKind random_model_op(Rng& rng) {
    static constexpr OpKind kOps[] = {OpKind::ridge, OpKind::lasso, OpKind::knn};
    return kOps[rng.index(3)];
}

OpKind random_source_op(Rng& rng) {
    static constexpr OpKind kOps[] = {OpKind::ridge, OpKind::lasso, OpKind::knn,
                                      OpKind::trend_extract, OpKind::residual_extract};
    return kOps[rng.index(5)];
}

PipelineNode make_node(int id, OpKind op, Rng& rng, std::vector<int> parents = {}) {
    PipelineNode node;
    node.id = id;
    node.op = op;
    if (is_model_op(op)) node.params = random_model_params(rng);
    node.parents = std::move(parents);
    return node;
}

int max_id(const Pipeline& p) {
    int m = -1;
    for (const auto& node : p.nodes) m = std::max(m, node.id);
    return m;
}

bool structurally_equal(const Pipeline& a, const Pipeline& b) {
    return pipeline_to_json(a).dump() == pipeline_to_json(b).dump();
}

// Node ids whose every path to the root passes through `through` (i.e. ids
// dangling once `through` is removed), including `through` itself.
std::set<int> removable_with(const Pipeline& p, int through) {
    std::map<int, const PipelineNode*> by_id;
    for (const auto& node : p.nodes) by_id[node.id] = &node;

    // Ancestors of `through`, inclusive.
    std::set<int> candidates;
    std::vector<int> stack{through};
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        if (!candidates.insert(id).second) continue;
        for (int pid : by_id.at(id)->parents) stack.push_back(pid);
    }
    // Everything still reachable from the root without entering `through`.
    std::set<int> kept;
    stack.push_back(p.root);
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        if (id == through || !kept.insert(id).second) continue;
        for (int pid : by_id.at(id)->parents) stack.push_back(pid);
    }
    std::set<int> removable;
    for (int id : candidates)
        if (kept.find(id) == kept.end()) removable.insert(id);
    return removable;
}

// Sub-DAG feeding `at` (ancestors inclusive), ids remapped starting at
// `first_id` in ascending original order. Returns the remapped nodes and the
// new id of `at`.
std::pair<std::vector<PipelineNode>, int> extract_subgraph(const Pipeline& p, int at,
                                                           int first_id) {
    std::map<int, const PipelineNode*> by_id;
    for (const auto& node : p.nodes) by_id[node.id] = &node;

    std::set<int> keep;
    std::vector<int> stack{at};
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        if (!keep.insert(id).second) continue;
        for (int pid : by_id.at(id)->parents) stack.push_back(pid);
    }

    std::map<int, int> remap;
    int next = first_id;
    for (int id : keep) remap[id] = next++;

    std::vector<PipelineNode> nodes;
    for (int id : keep) {
        PipelineNode node = *by_id.at(id);
        node.id = remap.at(id);
        for (int& pid : node.parents) pid = remap.at(pid);
        nodes.push_back(std::move(node));
    }
    return {std::move(nodes), remap.at(at)};
}

}  // namespace

namespace detail {

std::optional<Pipeline> try_swap_operation(const Pipeline& p, Rng& rng) {
    Pipeline out = p;
    PipelineNode& node = out.nodes[rng.index(out.nodes.size())];

    std::vector<OpKind> options;
    if (node.parents.empty()) {
        for (OpKind op : {OpKind::ridge, OpKind::lasso, OpKind::knn, OpKind::trend_extract,
                          OpKind::residual_extract})
            if (op != node.op) options.push_back(op);
    } else {
        for (OpKind op : {OpKind::ridge, OpKind::lasso, OpKind::knn})
            if (op != node.op) options.push_back(op);
        if (node.parents.size() >= 2 && node.op != OpKind::linear_blend)
            options.push_back(OpKind::linear_blend);
    }
    if (options.empty()) return std::nullopt;
    node.op = options[rng.index(options.size())];
    return out;
}

std::optional<Pipeline> try_perturb_params(const Pipeline& p, Rng& rng) {
    std::vector<std::size_t> model_nodes;
    for (std::size_t i = 0; i < p.nodes.size(); ++i)
        if (is_model_op(p.nodes[i].op)) model_nodes.push_back(i);
    if (model_nodes.empty()) return std::nullopt;

    Pipeline out = p;
    PipelineNode& node = out.nodes[model_nodes[rng.index(model_nodes.size())]];
    if (node.op == OpKind::knn) {
        node.params.k = std::clamp(node.params.k + (rng.bernoulli(0.5) ? 1 : -1), 1, 64);
    } else {
        const double factor = rng.uniform(1.0, 3.0);
        const double lambda = rng.bernoulli(0.5) ? node.params.lambda * factor
                                                 : node.params.lambda / factor;
        node.params.lambda = std::clamp(lambda, 1e-9, 1e3);
    }
    return out;
}

std::optional<Pipeline> try_add_blend(const Pipeline& p, Rng& rng, std::size_t max_nodes) {
    if (p.nodes.size() + 2 > max_nodes) return std::nullopt;
    Pipeline out = p;
    const int base = max_id(p);
    out.nodes.push_back(make_node(base + 1, random_model_op(rng), rng));
    out.nodes.push_back(make_node(base + 2, OpKind::linear_blend, rng, {p.root, base + 1}));
    out.root = base + 2;
    return out;
}

std::optional<Pipeline> try_drop_node(const Pipeline& p, Rng& rng) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < p.nodes.size(); ++i)
        if (p.nodes[i].id != p.root) candidates.push_back(i);
    if (candidates.empty()) return std::nullopt;

    const PipelineNode dropped = p.nodes[candidates[rng.index(candidates.size())]];
    Pipeline out;
    out.root = p.root;
    for (const auto& node : p.nodes) {
        if (node.id == dropped.id) continue;
        PipelineNode copy = node;
        std::vector<int> parents;
        for (int pid : copy.parents) {
            // Children of the dropped node inherit its parents.
            if (pid == dropped.id) {
                for (int gp : dropped.parents)
                    if (gp != copy.id && std::find(parents.begin(), parents.end(), gp) == parents.end())
                        parents.push_back(gp);
            } else if (std::find(parents.begin(), parents.end(), pid) == parents.end()) {
                parents.push_back(pid);
            }
        }
        copy.parents = std::move(parents);
        out.nodes.push_back(std::move(copy));
    }
    return out;
}

}  // namespace detail

Pipeline random_genome(Rng& rng) {
    const std::size_t size = 2 + rng.index(3);
    Pipeline p;
    if (size == 2) {
        p.nodes.push_back(make_node(0, random_source_op(rng), rng));
        p.nodes.push_back(make_node(1, random_model_op(rng), rng, {0}));
        p.root = 1;
    } else if (size == 3) {
        if (rng.bernoulli(0.5)) {
            p.nodes.push_back(make_node(0, random_source_op(rng), rng));
            p.nodes.push_back(make_node(1, random_model_op(rng), rng, {0}));
            p.nodes.push_back(make_node(2, random_model_op(rng), rng, {1}));
            p.root = 2;
        } else {
            p.nodes.push_back(make_node(0, random_source_op(rng), rng));
            p.nodes.push_back(make_node(1, random_source_op(rng), rng));
            p.nodes.push_back(make_node(2, OpKind::linear_blend, rng, {0, 1}));
            p.root = 2;
        }
    } else {
        const std::size_t variant = rng.index(3);
        if (variant == 0) {
            p.nodes.push_back(make_node(0, rng.bernoulli(0.5) ? OpKind::trend_extract
                                                              : OpKind::residual_extract,
                                        rng));
            p.nodes.push_back(make_node(1, random_model_op(rng), rng, {0}));
            p.nodes.push_back(make_node(2, random_source_op(rng), rng));
            p.nodes.push_back(make_node(3, OpKind::linear_blend, rng, {1, 2}));
            p.root = 3;
        } else if (variant == 1) {
            p.nodes.push_back(make_node(0, random_source_op(rng), rng));
            p.nodes.push_back(make_node(1, random_model_op(rng), rng, {0}));
            p.nodes.push_back(make_node(2, random_model_op(rng), rng, {1}));
            p.nodes.push_back(make_node(3, random_model_op(rng), rng, {2}));
            p.root = 3;
        } else {
            p.nodes.push_back(make_node(0, random_source_op(rng), rng));
            p.nodes.push_back(make_node(1, random_model_op(rng), rng, {0}));
            p.nodes.push_back(make_node(2, random_model_op(rng), rng, {0}));
            p.nodes.push_back(make_node(3, OpKind::linear_blend, rng, {1, 2}));
            p.root = 3;
        }
    }
    validate(p);
    return p;
}

Pipeline mutate(const Pipeline& genome, Rng& rng, std::size_t max_nodes) {
    for (int attempt = 0; attempt < 16; ++attempt) {
        std::optional<Pipeline> result;
        switch (rng.index(4)) {
            case 0: result = detail::try_swap_operation(genome, rng); break;
            case 1: result = detail::try_perturb_params(genome, rng); break;
            case 2: result = detail::try_add_blend(genome, rng, max_nodes); break;
            case 3: result = detail::try_drop_node(genome, rng); break;
        }
        if (result && !validate_error(*result, max_nodes)) return *result;
    }
    return genome;  // identity mutation
}

Pipeline crossover(const Pipeline& a, const Pipeline& b, Rng& rng, std::size_t max_nodes) {
    if (structurally_equal(a, b)) return a;

    std::vector<int> graft_points;
    for (const auto& node : a.nodes)
        if (node.id != a.root) graft_points.push_back(node.id);
    if (graft_points.empty()) return a;

    for (int attempt = 0; attempt < 16; ++attempt) {
        const int target = graft_points[rng.index(graft_points.size())];
        const int donor = b.nodes[rng.index(b.nodes.size())].id;

        const auto removed = removable_with(a, target);
        Pipeline out;
        out.root = a.root;
        for (const auto& node : a.nodes)
            if (removed.find(node.id) == removed.end()) out.nodes.push_back(node);

        int next_id = max_id(a) + 1;
        auto [sub_nodes, sub_root] = extract_subgraph(b, donor, next_id);
        for (auto& node : sub_nodes) out.nodes.push_back(std::move(node));
        for (auto& node : out.nodes)
            for (int& pid : node.parents)
                if (pid == target) pid = sub_root;

        if (out.nodes.size() <= max_nodes && !validate_error(out, max_nodes)) return out;
    }
    return a;
}

double evaluate_fitness(const Pipeline& genome, const TimeSeries& series, std::size_t w,
                        const EvoConfig& config) {
    const auto segments = pseudo_gap_mask(series, config.fitness_holdout_fraction, config.rng_seed);
    return fitness_on_mask(genome, series, segments, w);
}

namespace {

std::size_t tournament_pick(const std::vector<Individual>& pop, std::size_t tournament_size,
                            Rng& rng) {
    std::size_t best = rng.index(pop.size());
    for (std::size_t t = 1; t < tournament_size; ++t) {
        const std::size_t idx = rng.index(pop.size());
        if (pop[idx].fitness < pop[best].fitness ||
            (pop[idx].fitness == pop[best].fitness && idx < best))
            best = idx;
    }
    return best;
}

}  // namespace

SearchResult run_search(const TimeSeries& series, std::size_t w, const EvoConfig& config) {
    config.validate();
    const auto segments = pseudo_gap_mask(series, config.fitness_holdout_fraction, config.rng_seed);

    // Half single-node genomes cycling over the operations, half random chains.
    std::vector<Individual> pop;
    pop.reserve(config.population_size);
    static constexpr OpKind kSingleCycle[] = {OpKind::ridge, OpKind::lasso, OpKind::knn,
                                              OpKind::trend_extract, OpKind::residual_extract};
    const std::size_t singles = (config.population_size + 1) / 2;
    for (std::size_t i = 0; i < singles; ++i)
        pop.push_back({Pipeline::single(kSingleCycle[i % 5]), {}});
    for (std::size_t i = singles; i < config.population_size; ++i) {
        Rng rng = Rng::stream(config.rng_seed, 0, i);
        pop.push_back({random_genome(rng), {}});
    }

    const auto evaluate_all = [&](std::vector<Individual>& gen) {
        parallel_for(gen.size(), config.threads, [&](std::size_t i) {
            gen[i].fitness = fitness_on_mask(gen[i].genome, series, segments, w);
        });
    };

    evaluate_all(pop);
    bool any_feasible = false;
    for (const auto& ind : pop) any_feasible = any_feasible || std::isfinite(ind.fitness);
    if (!any_feasible) throw std::runtime_error("no feasible pipeline");

    SearchResult result;
    for (const auto& ind : pop) {
        if (ind.fitness < result.best_fitness) {
            result.best = ind.genome;
            result.best_fitness = ind.fitness;
        }
    }

    for (std::size_t g = 1; g <= config.generations; ++g) {
        std::vector<std::size_t> order(pop.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            if (pop[x].fitness != pop[y].fitness) return pop[x].fitness < pop[y].fitness;
            return x < y;
        });

        std::vector<Individual> next;
        next.reserve(pop.size());
        for (std::size_t e = 0; e < config.elitism_count; ++e)
            next.push_back({pop[order[e]].genome, {}});

        for (std::size_t slot = next.size(); slot < config.population_size; ++slot) {
            Rng rng = Rng::stream(config.rng_seed, g, slot);
            const std::size_t first = tournament_pick(pop, config.tournament_size, rng);
            Pipeline child;
            if (rng.bernoulli(config.crossover_rate)) {
                const std::size_t second = tournament_pick(pop, config.tournament_size, rng);
                child = crossover(pop[first].genome, pop[second].genome, rng, config.max_nodes);
            } else {
                child = pop[first].genome;
            }
            if (rng.bernoulli(config.mutation_rate)) child = mutate(child, rng, config.max_nodes);
            next.push_back({std::move(child), {}});
        }

        pop = std::move(next);
        evaluate_all(pop);
        for (const auto& ind : pop) {
            if (ind.fitness < result.best_fitness) {
                result.best = ind.genome;
                result.best_fitness = ind.fitness;
            }
        }
        result.trace.push_back(result.best_fitness);
    }
    return result;
}

}  // namespace gapfill
