#include "ghho/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ghho/errors.hpp"
#include "ghho/parallel.hpp"

namespace ghho {

namespace {

// Substream tags.
constexpr std::uint64_t kInitTag = 1;
constexpr std::uint64_t kHhoTag = 2;
constexpr std::uint64_t kGwoTag = 3;

void require_same_dim(const Vector& a, const Vector& b, const char* what) {
  require(a.size() == b.size(), std::string(what) + ": dimension mismatch (" +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                                    ")");
}

Vector uniform_vector(std::size_t dim, Rng& rng) {
  Vector v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = rng.uniform();
  return v;
}

// First minimum wins.
std::size_t best_index(const std::vector<Candidate>& pop) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < pop.size(); ++i)
    if (pop[i].value() < pop[best].value()) best = i;
  return best;
}

void evaluate_all(std::vector<Candidate>& pop, const FitnessFn& fitness, std::size_t threads) {
  parallel_for(pop.size(), threads, [&](std::size_t i) { pop[i].fitness = fitness(pop[i].position); });
}

void record(Trace& trace, std::size_t iteration, Phase phase, const Candidate& best,
            const IterationCallback& on_iter) {
  TraceRecord r;
  r.iteration = iteration;
  r.phase = phase;
  r.best_fitness = best.value();
  r.best_position = best.position;
  r.evaluations = trace.evaluations;
  trace.records.push_back(std::move(r));
  if (on_iter) on_iter(trace.records.back());
}

void validate_run(const RunConfig& config, const SearchSpace& space) {
  require(config.population >= 1, "population must be positive");
  require(config.max_iterations >= 1, "max_iterations must be positive");
  require(space.dim() >= 1, "search space must have at least one dimension");
}

}  // namespace

// ---------------------------------------------------------------------------

SearchSpace::SearchSpace(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
  require(lower.size() == upper.size(), "SearchSpace: lower/upper length mismatch");
  require(lower.size() > 0, "SearchSpace: dim must be positive");
  for (Eigen::Index k = 0; k < lower.size(); ++k)
    require(lower[k] < upper[k], "SearchSpace: lower[k] < upper[k] violated at k=" +
                                     std::to_string(k));
}

SearchSpace SearchSpace::uniform(std::size_t dim, double lo, double hi) {
  const auto n = static_cast<Eigen::Index>(dim);
  return SearchSpace(Vector::Constant(n, lo), Vector::Constant(n, hi));
}

bool SearchSpace::contains(const Vector& x) const {
  if (x.size() != lower.size()) return false;
  return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

Vector SearchSpace::sample(Rng& rng) const {
  Vector x(lower.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = lower[k] + rng.uniform() * (upper[k] - lower[k]);
  return x;
}

double Candidate::value() const {
  require(fitness.has_value(), "candidate has not been evaluated");
  return *fitness;
}

std::size_t RunConfig::hho_iterations() const {
  return static_cast<std::size_t>(std::floor(hho_fraction * static_cast<double>(max_iterations)));
}

void RunConfig::validate_hybrid() const {
  require(hho_fraction > 0.0 && hho_fraction < 1.0, "hho_fraction must lie in (0, 1)");
  require(hho_iterations() >= 1, "HHO phase would have zero iterations");
  require(gwo_iterations() >= 1, "GWO phase would have zero iterations");
}

std::string to_string(Phase p) { return p == Phase::hho ? "HHO" : "GWO"; }

// ---------------------------------------------------------------------------
// HHO

Vector mean_position(const std::vector<Candidate>& population) {
  require(!population.empty(), "mean_position: empty population");
  Vector sum = Vector::Zero(population.front().position.size());
  for (const auto& c : population) {
    require_same_dim(sum, c.position, "mean_position");
    sum += c.position;
  }
  return sum / static_cast<double>(population.size());
}

Vector hho_explore(const Vector& hawk, const Vector& prey, const Vector& rand_member,
                   const Vector& mean, const SearchSpace& space, const ExploreDraws& d) {
  require_same_dim(hawk, prey, "hho_explore");
  require_same_dim(hawk, rand_member, "hho_explore");
  require_same_dim(hawk, mean, "hho_explore");
  require_same_dim(hawk, space.lower, "hho_explore");
  Vector next;
  if (d.q >= 0.5) {
    next = rand_member - d.r1 * (rand_member - 2.0 * d.r2 * hawk).cwiseAbs();
  } else {
    // Printed form: no recentring of the LB + r4 (UB - LB) term.
    next = (prey - mean) - d.r3 * (space.lower + d.r4 * (space.upper - space.lower));
  }
  return space.clamp(next);
}

Vector hho_explore(const Vector& hawk, const Vector& prey, const Vector& rand_member,
                   const Vector& mean, const SearchSpace& space, Rng& rng) {
  ExploreDraws d;
  d.q = rng.uniform();
  d.r1 = rng.uniform();
  d.r2 = rng.uniform();
  d.r3 = rng.uniform();
  d.r4 = rng.uniform();
  return hho_explore(hawk, prey, rand_member, mean, space, d);
}

double update_energy(double eng0, std::size_t iteration, std::size_t max_iterations) {
  require(max_iterations > 0, "update_energy: max_iterations must be positive");
  require(iteration <= max_iterations, "update_energy: iteration exceeds max_iterations");
  require(eng0 >= -1.0 && eng0 <= 1.0, "update_energy: eng0 outside [-1, 1]");
  if (iteration == max_iterations) return 0.0;
  return 2.0 * eng0 *
         (1.0 - static_cast<double>(iteration) / static_cast<double>(max_iterations));
}

Vector soft_besiege(const Vector& hawk, const Vector& prey, double eng, double jump,
                    const SearchSpace& space) {
  require_same_dim(hawk, prey, "soft_besiege");
  require_same_dim(hawk, space.lower, "soft_besiege");
  const Vector delta = prey - hawk;
  return space.clamp(delta - eng * (jump * prey - hawk).cwiseAbs());
}

Vector hard_besiege(const Vector& hawk, const Vector& prey, double eng, const SearchSpace& space) {
  require_same_dim(hawk, prey, "hard_besiege");
  require_same_dim(hawk, space.lower, "hard_besiege");
  return space.clamp(prey - eng * (prey - hawk).cwiseAbs());
}

double levy_sigma(double beta) {
  require(beta > 1.0 && beta <= 2.0, "levy: beta must lie in (1, 2]");
  const double num = std::tgamma(1.0 + beta) * std::sin(std::numbers::pi * beta / 2.0);
  const double den = std::tgamma((1.0 + beta) / 2.0) * beta * std::pow(2.0, (beta - 1.0) / 2.0);
  return std::pow(num / den, 1.0 / beta);
}

double levy_component(double u, double v, double beta) {
  const double sigma = levy_sigma(beta);
  return 0.01 * (u * sigma) / std::pow(std::abs(v), 1.0 / beta);
}

Vector levy_flight(std::size_t dim, double beta, Rng& rng) {
  const double sigma = levy_sigma(beta);
  Vector lf(static_cast<Eigen::Index>(dim));
  for (Eigen::Index k = 0; k < lf.size(); ++k) {
    const double u = rng.normal();
    const double v = rng.normal();
    lf[k] = 0.01 * (u * sigma) / std::pow(std::abs(v), 1.0 / beta);
  }
  return lf;
}

DiveResult select_dive(const Candidate& hawk, const Vector& y, const Vector& z,
                       const FitnessFn& fitness) {
  const double current = hawk.value();
  const double fy = fitness(y);
  const double fz = fitness(z);
  if (fy < current) return {Candidate{y, fy}, 1};
  if (fz < current) return {Candidate{z, fz}, 2};
  return {hawk, 0};
}

namespace {

Vector dive_z(const Vector& y, double beta, const SearchSpace& space, Rng& rng) {
  const auto dim = static_cast<std::size_t>(y.size());
  const Vector s = uniform_vector(dim, rng);
  const Vector lf = levy_flight(dim, beta, rng);
  return space.clamp(y + s.cwiseProduct(lf));
}

}  // namespace

DiveResult soft_besiege_dive(const Candidate& hawk, const Vector& prey, double eng,
                             const SearchSpace& space, const FitnessFn& fitness, double beta,
                             Rng& rng) {
  require_same_dim(hawk.position, prey, "soft_besiege_dive");
  require_same_dim(hawk.position, space.lower, "soft_besiege_dive");
  const Vector y = space.clamp(prey - eng * (prey - hawk.position).cwiseAbs());
  const Vector z = dive_z(y, beta, space, rng);
  return select_dive(hawk, y, z, fitness);
}

DiveResult hard_besiege_dive(const Candidate& hawk, const Vector& prey, const Vector& mean,
                             double eng, double jump, const SearchSpace& space,
                             const FitnessFn& fitness, double beta, Rng& rng) {
  require_same_dim(hawk.position, prey, "hard_besiege_dive");
  require_same_dim(hawk.position, mean, "hard_besiege_dive");
  require_same_dim(hawk.position, space.lower, "hard_besiege_dive");
  const Vector y = space.clamp(prey - eng * (jump * prey - mean).cwiseAbs());
  const Vector z = dive_z(y, beta, space, rng);
  return select_dive(hawk, y, z, fitness);
}

StepStats hho_step(std::vector<Candidate>& hawks, Candidate& prey, std::size_t iteration,
                   std::size_t max_iterations, const SearchSpace& space,
                   const FitnessFn& fitness, const StepOptions& options) {
  require(!hawks.empty(), "hho_step: empty population");
  require(iteration < max_iterations, "hho_step: iteration out of range");
  const std::vector<Candidate> snapshot = hawks;
  const Vector mean = mean_position(snapshot);
  const std::size_t n = hawks.size();
  std::vector<Move> moves(n);

  parallel_for(n, options.threads, [&](std::size_t i) {
    Rng rng = Rng::substream(options.seed, kHhoTag, iteration, i);
    const Candidate& self = snapshot[i];
    const double eng0 = 2.0 * rng.uniform() - 1.0;
    const double jump = jump_strength(rng.uniform());
    const double eng = update_energy(eng0, iteration, max_iterations);
    const double abs_eng = std::abs(eng);

    if (abs_eng >= 1.0) {
      const auto pick = std::min<std::size_t>(n - 1, static_cast<std::size_t>(rng.uniform() * n));
      Vector next = hho_explore(self.position, prey.position, snapshot[pick].position, mean,
                                space, rng);
      const double f = fitness(next);
      hawks[i] = Candidate{std::move(next), f};
      moves[i] = Move::explore;
      return;
    }

    const double r = rng.uniform();
    if (r >= 0.5) {
      Vector next = abs_eng >= 0.5 ? soft_besiege(self.position, prey.position, eng, jump, space)
                                   : hard_besiege(self.position, prey.position, eng, space);
      const double f = fitness(next);
      hawks[i] = Candidate{std::move(next), f};
      moves[i] = abs_eng >= 0.5 ? Move::soft : Move::hard;
    } else if (abs_eng >= 0.5) {
      hawks[i] = soft_besiege_dive(self, prey.position, eng, space, fitness, options.beta, rng).hawk;
      moves[i] = Move::soft_dive;
    } else {
      hawks[i] = hard_besiege_dive(self, prey.position, mean, eng, jump, space, fitness,
                                   options.beta, rng)
                     .hawk;
      moves[i] = Move::hard_dive;
    }
  });

  StepStats stats;
  for (Move m : moves) {
    switch (m) {
      case Move::explore: ++stats.explore; stats.evaluations += 1; break;
      case Move::soft: ++stats.soft; stats.evaluations += 1; break;
      case Move::hard: ++stats.hard; stats.evaluations += 1; break;
      case Move::soft_dive: ++stats.soft_dive; stats.evaluations += 2; break;
      case Move::hard_dive: ++stats.hard_dive; stats.evaluations += 2; break;
    }
  }

  const std::size_t best = best_index(hawks);
  if (hawks[best].value() < prey.value()) prey = hawks[best];
  return stats;
}

// ---------------------------------------------------------------------------
// GWO

Leaders rank_leaders(const std::vector<Candidate>& wolves, const Leaders* previous) {
  std::vector<const Candidate*> pool;
  if (previous) {
    pool.push_back(&previous->alpha);
    pool.push_back(&previous->beta);
    pool.push_back(&previous->delta);
  }
  for (const auto& w : wolves) pool.push_back(&w);
  require(!pool.empty(), "rank_leaders: no wolves");
  std::stable_sort(pool.begin(), pool.end(),
                   [](const Candidate* a, const Candidate* b) { return a->value() < b->value(); });
  // Fewer than three distinct wolves: leaders are duplicated from the best ones.
  const auto at = [&](std::size_t k) { return *pool[std::min(k, pool.size() - 1)]; };
  return Leaders{at(0), at(1), at(2)};
}

double gwo_coefficient(std::size_t iteration, std::size_t max_iterations) {
  require(max_iterations > 0, "gwo_coefficient: max_iterations must be positive");
  require(iteration <= max_iterations, "gwo_coefficient: iteration exceeds max_iterations");
  if (iteration == max_iterations) return 0.0;
  return 2.0 * (1.0 - static_cast<double>(iteration) / static_cast<double>(max_iterations));
}

std::size_t gwo_step(std::vector<Candidate>& wolves, Leaders& leaders, std::size_t iteration,
                     std::size_t max_iterations, const SearchSpace& space,
                     const FitnessFn& fitness, const StepOptions& options) {
  require(!wolves.empty(), "gwo_step: empty pack");
  const double a = gwo_coefficient(iteration, max_iterations);
  const auto dim = static_cast<std::size_t>(space.dim());
  const Vector* guides[3] = {&leaders.alpha.position, &leaders.beta.position,
                             &leaders.delta.position};

  parallel_for(wolves.size(), options.threads, [&](std::size_t i) {
    Rng rng = Rng::substream(options.seed, kGwoTag, iteration, i);
    const Vector& x = wolves[i].position;
    require_same_dim(x, space.lower, "gwo_step");
    Vector sum = Vector::Zero(x.size());
    for (const Vector* leader : guides) {
      const Vector r1 = uniform_vector(dim, rng);
      const Vector r2 = uniform_vector(dim, rng);
      const Vector A = (2.0 * a) * r1.array() - a;
      const Vector C = 2.0 * r2;
      const Vector D = (C.cwiseProduct(*leader) - x).cwiseAbs();
      sum += *leader - A.cwiseProduct(D);
    }
    Vector next = space.clamp(sum / 3.0);
    const double f = fitness(next);
    wolves[i] = Candidate{std::move(next), f};
  });

  leaders = rank_leaders(wolves, &leaders);
  return wolves.size();
}

// ---------------------------------------------------------------------------
// Drivers

std::vector<Candidate> initial_population(std::size_t n, const SearchSpace& space,
                                          std::uint64_t seed, const FitnessFn& fitness,
                                          std::size_t threads) {
  std::vector<Candidate> pop(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::substream(seed, kInitTag, 0, i);
    pop[i].position = space.sample(rng);
  }
  evaluate_all(pop, fitness, threads);
  return pop;
}

namespace {

struct HhoPhaseResult {
  std::vector<Candidate> hawks;
  Candidate prey;
};

HhoPhaseResult run_hho_phase(const RunConfig& config, const SearchSpace& space,
                             const FitnessFn& fitness, std::size_t iterations, Trace& trace,
                             const IterationCallback& on_iter) {
  HhoPhaseResult state;
  state.hawks = initial_population(config.population, space, config.seed, fitness, config.threads);
  trace.evaluations += config.population;
  state.prey = state.hawks[best_index(state.hawks)];
  trace.initial_best_fitness = state.prey.value();

  const StepOptions options{config.seed, config.beta, config.threads};
  for (std::size_t it = 0; it < iterations; ++it) {
    trace.evaluations +=
        hho_step(state.hawks, state.prey, it, iterations, space, fitness, options).evaluations;
    record(trace, trace.records.size() + 1, Phase::hho, state.prey, on_iter);
  }
  return state;
}

Candidate run_gwo_phase(std::vector<Candidate> wolves, const RunConfig& config,
                        const SearchSpace& space, const FitnessFn& fitness,
                        std::size_t iterations, Trace& trace, const IterationCallback& on_iter) {
  Leaders leaders = rank_leaders(wolves);
  const StepOptions options{config.seed, config.beta, config.threads};
  for (std::size_t it = 0; it < iterations; ++it) {
    trace.evaluations += gwo_step(wolves, leaders, it, iterations, space, fitness, options);
    record(trace, trace.records.size() + 1, Phase::gwo, leaders.alpha, on_iter);
  }
  return leaders.alpha;
}

}  // namespace

OptimizeResult hho_optimize(const RunConfig& config, const SearchSpace& space,
                            const FitnessFn& fitness, const IterationCallback& on_iter) {
  validate_run(config, space);
  OptimizeResult result;
  auto state = run_hho_phase(config, space, fitness, config.max_iterations, result.trace, on_iter);
  result.best = std::move(state.prey);
  return result;
}

OptimizeResult gwo_optimize(const RunConfig& config, const SearchSpace& space,
                            const FitnessFn& fitness, const IterationCallback& on_iter) {
  validate_run(config, space);
  OptimizeResult result;
  auto wolves = initial_population(config.population, space, config.seed, fitness, config.threads);
  result.trace.evaluations += config.population;
  result.trace.initial_best_fitness = wolves[best_index(wolves)].value();
  result.best = run_gwo_phase(std::move(wolves), config, space, fitness, config.max_iterations,
                              result.trace, on_iter);
  return result;
}

OptimizeResult g_hho_optimize(const RunConfig& config, const SearchSpace& space,
                              const FitnessFn& fitness, const IterationCallback& on_iter) {
  validate_run(config, space);
  config.validate_hybrid();
  OptimizeResult result;
  auto state = run_hho_phase(config, space, fitness, config.hho_iterations(), result.trace, on_iter);

  // Seed the pack: prey first so it becomes alpha, then the hawks minus the
  // worst one (last index wins among equally bad hawks).
  std::size_t worst = 0;
  for (std::size_t i = 1; i < state.hawks.size(); ++i)
    if (state.hawks[i].value() >= state.hawks[worst].value()) worst = i;
  std::vector<Candidate> wolves;
  wolves.reserve(state.hawks.size());
  wolves.push_back(state.prey);
  for (std::size_t i = 0; i < state.hawks.size(); ++i)
    if (i != worst) wolves.push_back(std::move(state.hawks[i]));

  result.best = run_gwo_phase(std::move(wolves), config, space, fitness, config.gwo_iterations(),
                              result.trace, on_iter);
  return result;
}

// ---------------------------------------------------------------------------
// Validation objectives

double sphere(const Vector& x) { return x.squaredNorm(); }

double rastrigin(const Vector& x) {
  const double two_pi = 2.0 * std::numbers::pi;
  return 10.0 * static_cast<double>(x.size()) +
         (x.array().square() - 10.0 * (two_pi * x.array()).cos()).sum();
}

double rosenbrock(const Vector& x) {
  double s = 0.0;
  for (Eigen::Index k = 0; k + 1 < x.size(); ++k) {
    const double a = x[k + 1] - x[k] * x[k];
    const double b = 1.0 - x[k];
    s += 100.0 * a * a + b * b;
  }
  return s;
}

double ackley(const Vector& x) {
  const double n = static_cast<double>(x.size());
  const double two_pi = 2.0 * std::numbers::pi;
  const double sq = std::sqrt(x.squaredNorm() / n);
  const double cs = (two_pi * x.array()).cos().sum() / n;
  const double value = -20.0 * std::exp(-0.2 * sq) - std::exp(cs) + 20.0 + std::numbers::e;
  // exp(1) - exp(1) leaves a 4e-16 residue at the origin.
  return std::max(0.0, value);
}

std::vector<BenchmarkFunction> benchmark_functions() {
  return {
      {"sphere", sphere, -100.0, 100.0, 0.0, 0.0},
      {"rastrigin", rastrigin, -5.12, 5.12, 0.0, 0.0},
      {"rosenbrock", rosenbrock, -30.0, 30.0, 1.0, 0.0},
      {"ackley", ackley, -32.0, 32.0, 0.0, 0.0},
  };
}

const BenchmarkFunction& benchmark_function(const std::string& name) {
  static const std::vector<BenchmarkFunction> zoo = benchmark_functions();
  for (const auto& f : zoo)
    if (f.name == name) return f;
  throw ContractViolation("unknown benchmark function: " + name);
}

}  // namespace ghho
