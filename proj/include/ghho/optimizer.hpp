#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ghho/random.hpp"

namespace ghho {

using Vector = Eigen::VectorXd;

/// Objective to minimise. Must be deterministic and callable concurrently.
using FitnessFn = std::function<double(const Vector&)>;

/// Box-bounded search domain [lower, upper] in dim dimensions.
struct SearchSpace {
  Vector lower;
  Vector upper;

  SearchSpace() = default;
  SearchSpace(Vector lo, Vector hi);

  static SearchSpace uniform(std::size_t dim, double lo, double hi);

  std::size_t dim() const { return static_cast<std::size_t>(lower.size()); }
  Vector clamp(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
  bool contains(const Vector& x) const;
  Vector sample(Rng& rng) const;
};

/// A hawk or wolf: a position plus its cached objective value.
struct Candidate {
  Vector position;
  std::optional<double> fitness;

  double value() const;  // throws if unevaluated
};

struct RunConfig {
  std::size_t population = 30;
  std::size_t max_iterations = 500;
  std::uint64_t seed = 0;
  double hho_fraction = 0.5;
  double beta = 1.5;
  std::size_t threads = 1;

  std::size_t hho_iterations() const;
  std::size_t gwo_iterations() const { return max_iterations - hho_iterations(); }
  void validate_hybrid() const;
};

enum class Phase { hho, gwo };
std::string to_string(Phase p);

struct TraceRecord {
  std::size_t iteration = 0;  // 1-based, counted across both phases
  Phase phase = Phase::hho;
  double best_fitness = 0.0;
  Vector best_position;
  std::size_t evaluations = 0;  // cumulative
};

struct Trace {
  double initial_best_fitness = 0.0;
  std::vector<TraceRecord> records;
  std::size_t evaluations = 0;
};

struct OptimizeResult {
  Candidate best;
  Trace trace;
};

/// Invoked after every iteration with the record just appended.
using IterationCallback = std::function<void(const TraceRecord&)>;

// ---------------------------------------------------------------------------
// HHO building blocks

/// Uniform draws consumed by one exploration move.
struct ExploreDraws {
  double q = 0.0;
  double r1 = 0.0, r2 = 0.0, r3 = 0.0, r4 = 0.0;
};

Vector mean_position(const std::vector<Candidate>& population);

/// Perching move. q >= 0.5 perches relative to a random member, otherwise
/// relative to the prey and population mean. Result is clamped.
Vector hho_explore(const Vector& hawk, const Vector& prey, const Vector& rand_member,
                   const Vector& mean, const SearchSpace& space, const ExploreDraws& d);
Vector hho_explore(const Vector& hawk, const Vector& prey, const Vector& rand_member,
                   const Vector& mean, const SearchSpace& space, Rng& rng);

double update_energy(double eng0, std::size_t iteration, std::size_t max_iterations);

/// Jump strength J = 2(1 - r5).
inline double jump_strength(double r5) { return 2.0 * (1.0 - r5); }

Vector soft_besiege(const Vector& hawk, const Vector& prey, double eng, double jump,
                    const SearchSpace& space);
Vector hard_besiege(const Vector& hawk, const Vector& prey, double eng, const SearchSpace& space);

double levy_sigma(double beta);
/// One Levy component from explicit normal draws u ~ N(0,1) (scaled by sigma
/// here) and v ~ N(0,1).
double levy_component(double u, double v, double beta);
Vector levy_flight(std::size_t dim, double beta, Rng& rng);

/// Trial points of a progressive dive, exposed for testing.
struct DiveTrial {
  Vector y;
  Vector z;
};

/// Outcome of a dive: the chosen candidate and which trial won (0 none, 1 Y, 2 Z).
struct DiveResult {
  Candidate hawk;
  int accepted = 0;
};

DiveResult soft_besiege_dive(const Candidate& hawk, const Vector& prey, double eng,
                             const SearchSpace& space, const FitnessFn& fitness, double beta,
                             Rng& rng);
DiveResult hard_besiege_dive(const Candidate& hawk, const Vector& prey, const Vector& mean,
                             double eng, double jump, const SearchSpace& space,
                             const FitnessFn& fitness, double beta, Rng& rng);

/// Greedy selection between the two dive trials.
DiveResult select_dive(const Candidate& hawk, const Vector& y, const Vector& z,
                       const FitnessFn& fitness);

enum class Move { explore, soft, hard, soft_dive, hard_dive };

struct StepStats {
  std::size_t evaluations = 0;
  std::size_t explore = 0, soft = 0, hard = 0, soft_dive = 0, hard_dive = 0;

  std::size_t dives() const { return soft_dive + hard_dive; }
};

struct StepOptions {
  std::uint64_t seed = 0;
  double beta = 1.5;
  std::size_t threads = 1;
};

/// One HHO iteration over the whole population. Every hawk moves against a
/// snapshot of the population taken at the start of the step; the prey is
/// then replaced by the best hawk if that hawk is strictly better.
StepStats hho_step(std::vector<Candidate>& hawks, Candidate& prey, std::size_t iteration,
                   std::size_t max_iterations, const SearchSpace& space,
                   const FitnessFn& fitness, const StepOptions& options);

// ---------------------------------------------------------------------------
// GWO

struct Leaders {
  Candidate alpha, beta, delta;
};

/// Three best of previous leaders followed by wolves; first seen wins ties.
Leaders rank_leaders(const std::vector<Candidate>& wolves, const Leaders* previous = nullptr);

/// a = 2 (1 - i / I).
double gwo_coefficient(std::size_t iteration, std::size_t max_iterations);

/// One GWO iteration: moves every wolf toward alpha/beta/delta, re-evaluates,
/// and re-ranks the leaders. Returns evaluations charged.
std::size_t gwo_step(std::vector<Candidate>& wolves, Leaders& leaders, std::size_t iteration,
                     std::size_t max_iterations, const SearchSpace& space,
                     const FitnessFn& fitness, const StepOptions& options);

// ---------------------------------------------------------------------------
// Drivers

std::vector<Candidate> initial_population(std::size_t n, const SearchSpace& space,
                                          std::uint64_t seed, const FitnessFn& fitness,
                                          std::size_t threads);

OptimizeResult hho_optimize(const RunConfig& config, const SearchSpace& space,
                            const FitnessFn& fitness, const IterationCallback& on_iter = {});
OptimizeResult gwo_optimize(const RunConfig& config, const SearchSpace& space,
                            const FitnessFn& fitness, const IterationCallback& on_iter = {});
/// HHO for floor(hho_fraction * I) iterations, then GWO seeded with the final
/// hawks and the prey as initial alpha for the remainder.
OptimizeResult g_hho_optimize(const RunConfig& config, const SearchSpace& space,
                              const FitnessFn& fitness, const IterationCallback& on_iter = {});

// ---------------------------------------------------------------------------
// Validation objectives

struct BenchmarkFunction {
  std::string name;
  FitnessFn fn;
  double lower;
  double upper;
  double optimum_coordinate;  // every coordinate of the global minimiser
  double optimum_value;
};

double sphere(const Vector& x);
double rastrigin(const Vector& x);
double rosenbrock(const Vector& x);
double ackley(const Vector& x);

std::vector<BenchmarkFunction> benchmark_functions();
const BenchmarkFunction& benchmark_function(const std::string& name);

}  // namespace ghho
