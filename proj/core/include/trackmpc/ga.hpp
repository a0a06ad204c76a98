#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace trackmpc::ga {

/// Engine behind every stochastic GA and simulation draw.
using Rng = std::mt19937_64;

/// How a subchromosome's bits map to its unsigned integer.
enum class GeneCoding {
  binary,  // natural base-2, most significant bit first
  gray,    // reflected Gray code: adjacent integers differ in one gene
};

struct GaConfig {
  std::size_t pop_size = 50;
  std::size_t generations = 750;
  double p_mutation = 0.6;
  std::size_t bits_per_gene = 12;
  double du_lo = -200.0;  // W per sample
  double du_hi = 200.0;
  std::uint64_t seed = 1;
  double u_min = 0.0;
  double u_max = 1000.0;
  /// Worker threads for fitness evaluation; results do not depend on it.
  std::size_t threads = 1;
  /// Stop after this many generations without improvement; 0 disables.
  std::size_t stagnation_generations = 0;
  /// Seed the initial population with the shifted previous plan.
  bool warm_start = false;
  GeneCoding coding = GeneCoding::gray;

  void validate() const;
  double quantum() const;  // decode grid spacing in W
};

/// M subchromosomes of bits_per_gene genes each, most significant bit first.
struct Chromosome {
  std::vector<std::uint8_t> bits;
  std::optional<double> cached_fitness;

  bool operator==(const Chromosome& other) const { return bits == other.bits; }
};

std::vector<double> decode(const Chromosome& c, const GaConfig& cfg, std::size_t M);

/// Nearest grid point per gene; ties round down, out-of-range values clamp.
Chromosome encode(std::span<const double> du, const GaConfig& cfg);

/// Sequential clamp: u_i = clamp(u_{i-1} + du_i, u_min, u_max), with each
/// increment rewritten to the one actually realized.
std::vector<double> repair(std::span<const double> du, double u_prev, double u_min, double u_max);

/// 1 / (1 + J). Throws std::invalid_argument for negative or NaN J.
double fitness(double J);

/// Binary tournament with replacement; ties go to the lower index.
std::size_t tournament(std::span<const double> fitnesses, Rng& rng);

/// One cut inside every subchromosome, segments between cuts swapped
/// alternately starting with the segment after the first cut.
std::pair<Chromosome, Chromosome> crossover(const Chromosome& p1, const Chromosome& p2, std::size_t M,
                                            std::size_t bits_per_gene, Rng& rng);

/// With probability p_mutation flips exactly one uniformly chosen gene.
Chromosome mutate(Chromosome c, double p_mutation, Rng& rng);

Chromosome random_chromosome(std::size_t length, Rng& rng);

struct GenerationStats {
  std::size_t generation = 0;
  double best_fitness = 0.0;
  double mean_fitness = 0.0;
  double best_J = 0.0;
};

struct EvolveResult {
  std::vector<double> du_plus;  // decoded and repaired
  double J = 0.0;
  Chromosome best;
  std::size_t generations_run = 0;
  std::size_t non_finite_costs = 0;
  std::vector<GenerationStats> history;  // one row per evaluated population
  /// Population sizes observed after each generation step.
  std::vector<std::size_t> population_sizes;
};

/// Evaluated on repaired increments; may be called concurrently.
using CostFunction = std::function<double(std::span<const double>)>;

/**
 * Generational loop:
 *   evaluate P^k; copy the best chromosome of P^k twice into P^{k+1};
 *   fill the rest by rounds of: two tournaments, crossover, mutate both
 *   children, insert both (for odd pop_size the last round inserts one).
 *
 * Random draws happen in a fixed order: initial bits (individual by
 * individual), then per mating round tournament 1 (2 draws), tournament 2
 * (2 draws), M crossover sites, mutation of child 1 (decision, then gene),
 * mutation of child 2. Evaluation draws nothing, so the result is
 * identical for any thread count.
 */
EvolveResult evolve(const CostFunction& cost_fn, std::size_t M, double u_prev, const GaConfig& cfg,
                    std::span<const Chromosome> seeds = {});

}  // namespace trackmpc::ga
