#include "trackmpc/ga.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace trackmpc::ga {

void GaConfig::validate() const {
  if (pop_size < 4) throw std::invalid_argument("ga: pop_size must be >= 4");
  if (bits_per_gene < 1 || bits_per_gene > 32) throw std::invalid_argument("ga: bits_per_gene must be in [1, 32]");
  if (!(du_lo < du_hi) || !std::isfinite(du_lo) || !std::isfinite(du_hi))
    throw std::invalid_argument("ga: delta_u_range requires lo < hi");
  if (!(p_mutation >= 0.0 && p_mutation <= 1.0)) throw std::invalid_argument("ga: p_mutation must be in [0, 1]");
  if (!(u_min < u_max)) throw std::invalid_argument("ga: u_min must be below u_max");
  if (threads < 1) throw std::invalid_argument("ga: threads must be >= 1");
}

double GaConfig::quantum() const {
  return (du_hi - du_lo) / static_cast<double>((std::uint64_t{1} << bits_per_gene) - 1);
}

std::vector<double> decode(const Chromosome& c, const GaConfig& cfg, std::size_t M) {
  const std::size_t nb = cfg.bits_per_gene;
  if (c.bits.size() != M * nb) throw std::invalid_argument("decode: chromosome length != M * bits_per_gene");
  const double levels = static_cast<double>((std::uint64_t{1} << nb) - 1);
  std::vector<double> du(M);
  for (std::size_t m = 0; m < M; ++m) {
    std::uint64_t v = 0;
    for (std::size_t b = 0; b < nb; ++b) v = (v << 1) | c.bits[m * nb + b];
    if (cfg.coding == GeneCoding::gray)
      for (std::uint64_t shift = v >> 1; shift != 0; shift >>= 1) v ^= shift;
    du[m] = cfg.du_lo + static_cast<double>(v) / levels * (cfg.du_hi - cfg.du_lo);
  }
  return du;
}

Chromosome encode(std::span<const double> du, const GaConfig& cfg) {
  const std::size_t nb = cfg.bits_per_gene;
  const std::uint64_t top = (std::uint64_t{1} << nb) - 1;
  Chromosome c;
  c.bits.resize(du.size() * nb);
  for (std::size_t m = 0; m < du.size(); ++m) {
    const double scaled = (du[m] - cfg.du_lo) / (cfg.du_hi - cfg.du_lo) * static_cast<double>(top);
    double r = std::ceil(scaled - 0.5);  // round half down
    r = std::clamp(r, 0.0, static_cast<double>(top));
    auto v = static_cast<std::uint64_t>(r);
    if (cfg.coding == GeneCoding::gray) v ^= v >> 1;
    for (std::size_t b = 0; b < nb; ++b) c.bits[m * nb + b] = static_cast<std::uint8_t>((v >> (nb - 1 - b)) & 1u);
  }
  return c;
}

std::vector<double> repair(std::span<const double> du, double u_prev, double u_min, double u_max) {
  std::vector<double> out(du.size());
  double u = u_prev;
  for (std::size_t i = 0; i < du.size(); ++i) {
    const double next = std::clamp(u + du[i], u_min, u_max);
    out[i] = next - u;
    u = next;
  }
  return out;
}

double fitness(double J) {
  if (!(J >= 0.0)) throw std::invalid_argument("fitness: cost must be non-negative");
  return 1.0 / (1.0 + J);
}

std::size_t tournament(std::span<const double> fitnesses, Rng& rng) {
  if (fitnesses.empty()) throw std::invalid_argument("tournament: empty population");
  std::uniform_int_distribution<std::size_t> pick(0, fitnesses.size() - 1);
  const std::size_t a = pick(rng);
  const std::size_t b = pick(rng);
  if (fitnesses[a] > fitnesses[b]) return a;
  if (fitnesses[b] > fitnesses[a]) return b;
  return std::min(a, b);
}

std::pair<Chromosome, Chromosome> crossover(const Chromosome& p1, const Chromosome& p2, std::size_t M,
                                            std::size_t bits_per_gene, Rng& rng) {
  if (p1.bits.size() != p2.bits.size() || p1.bits.size() != M * bits_per_gene)
    throw std::invalid_argument("crossover: parent length mismatch");

  std::vector<std::size_t> cuts(M);
  for (std::size_t m = 0; m < M; ++m) {
    std::uniform_int_distribution<std::size_t> site(bits_per_gene >= 2 ? 1 : 0,
                                                    bits_per_gene >= 2 ? bits_per_gene - 1 : 1);
    cuts[m] = m * bits_per_gene + site(rng);
  }

  Chromosome c1{p1.bits, std::nullopt};
  Chromosome c2{p2.bits, std::nullopt};
  const std::size_t L = p1.bits.size();
  for (std::size_t s = 0; s < M; ++s) {
    if (s % 2 != 0) continue;  // segments [cut_s, cut_{s+1}) for even s are swapped
    const std::size_t begin = cuts[s];
    const std::size_t end = s + 1 < M ? cuts[s + 1] : L;
    for (std::size_t i = begin; i < end; ++i) std::swap(c1.bits[i], c2.bits[i]);
  }
  return {std::move(c1), std::move(c2)};
}

Chromosome mutate(Chromosome c, double p_mutation, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < p_mutation && !c.bits.empty()) {
    std::uniform_int_distribution<std::size_t> gene(0, c.bits.size() - 1);
    c.bits[gene(rng)] ^= 1u;
    c.cached_fitness.reset();
  }
  return c;
}

Chromosome random_chromosome(std::size_t length, Rng& rng) {
  Chromosome c;
  c.bits.resize(length);
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < length; ++i) {
    if (i % 64 == 0) word = rng();
    c.bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1u);
  }
  return c;
}

namespace {

struct Evaluation {
  double fitness;
  double J;
  bool finite;
};

Evaluation evaluate_one(const CostFunction& cost_fn, const Chromosome& c, std::size_t M, double u_prev,
                        const GaConfig& cfg) {
  const auto du = repair(decode(c, cfg, M), u_prev, cfg.u_min, cfg.u_max);
  const double J = cost_fn(du);
  if (!std::isfinite(J) || J < 0.0) return {0.0, std::numeric_limits<double>::infinity(), false};
  return {fitness(J), J, true};
}

std::size_t best_index(std::span<const double> fit) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < fit.size(); ++i)
    if (fit[i] > fit[best]) best = i;
  return best;
}

}  // namespace

EvolveResult evolve(const CostFunction& cost_fn, std::size_t M, double u_prev, const GaConfig& cfg,
                    std::span<const Chromosome> seeds) {
  cfg.validate();
  if (M == 0) throw std::invalid_argument("evolve: M must be >= 1");
  const std::size_t L = M * cfg.bits_per_gene;

  Rng rng(cfg.seed);
  std::vector<Chromosome> pop;
  pop.reserve(cfg.pop_size);
  for (std::size_t i = 0; i < cfg.pop_size; ++i) pop.push_back(random_chromosome(L, rng));
  for (std::size_t i = 0; i < seeds.size() && i < cfg.pop_size; ++i) {
    if (seeds[i].bits.size() != L) throw std::invalid_argument("evolve: seed chromosome has wrong length");
    pop[i] = Chromosome{seeds[i].bits, std::nullopt};
  }

  std::vector<double> costs(cfg.pop_size, 0.0);
  std::vector<double> fit(cfg.pop_size, 0.0);
  std::vector<std::uint8_t> finite(cfg.pop_size, 1);

  EvolveResult result;
  double best_seen = -1.0;
  std::size_t since_improvement = 0;

  for (std::size_t gen = 0;; ++gen) {
    // Evaluation: only chromosomes without a cached fitness.
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < pop.size(); ++i)
      if (!pop[i].cached_fitness) todo.push_back(i);
    auto work = [&](std::size_t begin, std::size_t end) {
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t i = todo[k];
        const auto ev = evaluate_one(cost_fn, pop[i], M, u_prev, cfg);
        costs[i] = ev.J;
        fit[i] = ev.fitness;
        finite[i] = ev.finite ? 1 : 0;
        pop[i].cached_fitness = ev.fitness;
      }
    };
    if (cfg.threads <= 1 || todo.size() < 2 * cfg.threads) {
      work(0, todo.size());
    } else {
      std::vector<std::jthread> workers;
      const std::size_t chunk = (todo.size() + cfg.threads - 1) / cfg.threads;
      for (std::size_t b = 0; b < todo.size(); b += chunk)
        workers.emplace_back(work, b, std::min(todo.size(), b + chunk));
    }
    for (std::size_t i : todo)
      if (!finite[i]) ++result.non_finite_costs;
    for (std::size_t i = 0; i < pop.size(); ++i) fit[i] = *pop[i].cached_fitness;

    const std::size_t best = best_index(fit);
    result.history.push_back({gen, fit[best], std::accumulate(fit.begin(), fit.end(), 0.0) / fit.size(), costs[best]});

    if (fit[best] > best_seen) {
      best_seen = fit[best];
      since_improvement = 0;
    } else {
      ++since_improvement;
    }
    const bool stagnated = cfg.stagnation_generations > 0 && since_improvement >= cfg.stagnation_generations;
    if (gen == cfg.generations || stagnated) {
      result.generations_run = gen;
      result.best = pop[best];
      result.du_plus = repair(decode(pop[best], cfg, M), u_prev, cfg.u_min, cfg.u_max);
      result.J = costs[best];
      break;
    }

    std::vector<Chromosome> next;
    std::vector<double> next_costs;
    next.reserve(cfg.pop_size);
    next_costs.reserve(cfg.pop_size);
    next.push_back(pop[best]);
    next.push_back(pop[best]);
    next_costs.push_back(costs[best]);
    next_costs.push_back(costs[best]);

    // pop_size/2 - 1 rounds for even sizes; an odd size drops the second
    // child of the last round (it is still drawn, keeping the draw order).
    while (next.size() < cfg.pop_size) {
      const std::size_t a = tournament(fit, rng);
      const std::size_t b = tournament(fit, rng);
      auto [c1, c2] = crossover(pop[a], pop[b], M, cfg.bits_per_gene, rng);
      next.push_back(mutate(std::move(c1), cfg.p_mutation, rng));
      next_costs.push_back(0.0);
      auto m2 = mutate(std::move(c2), cfg.p_mutation, rng);
      if (next.size() < cfg.pop_size) {
        next.push_back(std::move(m2));
        next_costs.push_back(0.0);
      }
    }
    result.population_sizes.push_back(next.size());
    pop = std::move(next);
    costs = std::move(next_costs);
  }
  return result;
}

}  // namespace trackmpc::ga
