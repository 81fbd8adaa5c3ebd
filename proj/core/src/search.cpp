#include "exitnas/search.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "exitnas/errors.hpp"
#include "exitnas/macmodel.hpp"
#include "exitnas/serialization.hpp"

namespace exitnas {

namespace {

constexpr std::uint64_t kInitialStream = 0x1417;
constexpr std::uint64_t kEvolveStream = 0xe701;
constexpr std::uint64_t kSurrogateStream = 0x5a77;
constexpr std::uint64_t kEvalStream = 0xe7a1;

using Encoding = std::vector<int>;

std::string_view to_string(ObjectiveForm f) {
  return f == ObjectiveForm::displayed ? "displayed" : "raw";
}

ObjectiveForm objective_form_from_string(const std::string& s) {
  if (s == "displayed") return ObjectiveForm::displayed;
  if (s == "raw") return ObjectiveForm::raw;
  throw ConfigError("objective_form: expected \"displayed\" or \"raw\", got \"" + s + "\"");
}

struct Fitness {
  std::vector<std::size_t> rank;
  std::vector<double> crowding;
};

Fitness fitness(std::span<const ObjectiveVector> pts) {
  Fitness f;
  f.rank.assign(pts.size(), 0);
  f.crowding.assign(pts.size(), 0.0);
  auto fronts = nondominated_sort(pts);
  for (std::size_t r = 0; r < fronts.size(); ++r) {
    auto cd = crowding_distance(pts, fronts[r]);
    for (std::size_t i = 0; i < fronts[r].size(); ++i) {
      f.rank[fronts[r][i]] = r;
      f.crowding[fronts[r][i]] = cd[i];
    }
  }
  return f;
}

std::size_t tournament(const Fitness& f, Rng& rng) {
  std::size_t a = uniform_index(rng, f.rank.size());
  std::size_t b = uniform_index(rng, f.rank.size());
  if (f.rank[a] != f.rank[b]) return f.rank[a] < f.rank[b] ? a : b;
  if (f.crowding[a] != f.crowding[b]) return f.crowding[a] > f.crowding[b] ? a : b;
  return std::min(a, b);
}

/// NSGA-II environmental selection: whole fronts, then the most crowded-apart
/// members of the first front that does not fit.
std::vector<std::size_t> survivors(std::span<const ObjectiveVector> pts, std::size_t n) {
  std::vector<std::size_t> out;
  for (const auto& front : nondominated_sort(pts)) {
    if (out.size() + front.size() <= n) {
      out.insert(out.end(), front.begin(), front.end());
      continue;
    }
    auto cd = crowding_distance(pts, front);
    std::vector<std::size_t> order(front.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return cd[a] > cd[b]; });
    for (std::size_t i = 0; out.size() < n; ++i) out.push_back(front[order[i]]);
    break;
  }
  return out;
}

class Variation {
public:
  Variation(const SearchConfig& cfg, const SearchSpace& space, const std::set<Encoding>& seen)
      : cfg_(cfg), space_(space), seen_(seen) {}

  /// Appends up to `count` offspring of `parents` to `pool`, skipping any
  /// encoding already evaluated or already pooled.
  void breed(const std::vector<Genome>& parents, const Fitness& fit, std::size_t count,
             std::vector<Genome>& pool, std::set<Encoding>& pooled, Rng& rng) const {
    std::size_t target = pool.size() + count;
    std::size_t attempts = 0;
    const std::size_t max_attempts = 50 * count + 100;
    while (pool.size() < target && attempts < max_attempts) {
      ++attempts;
      const Genome& a = parents[tournament(fit, rng)];
      const Genome& b = parents[tournament(fit, rng)];
      auto children = bernoulli(rng, cfg_.crossover_probability) ? crossover(a, b, space_, rng)
                                                                 : std::pair{a, b};
      for (Genome* child : {&children.first, &children.second}) {
        if (pool.size() >= target) break;
        *child = mutate(*child, space_, cfg_.mutation_probability, rng);
        admit(*child, pool, pooled);
      }
    }
    for (attempts = 0; pool.size() < target && attempts < max_attempts; ++attempts)
      admit(sample_genome(space_, rng), pool, pooled);
  }

private:
  void admit(const Genome& g, std::vector<Genome>& pool, std::set<Encoding>& pooled) const {
    Encoding e = encode(g, space_);
    if (seen_.contains(e) || pooled.contains(e)) return;
    pooled.insert(std::move(e));
    pool.push_back(g);
  }

  const SearchConfig& cfg_;
  const SearchSpace& space_;
  const std::set<Encoding>& seen_;
};

struct Outcome {
  std::optional<EvaluationResult> result;
  std::string error;
};

std::vector<Outcome> evaluate_batch(const std::vector<Genome>& batch,
                                    const std::vector<std::uint64_t>& seeds, Evaluator& evaluator,
                                    const SearchConfig& cfg) {
  std::vector<Outcome> out(batch.size());
  auto run_one = [&](std::size_t i) {
    for (int attempt = 0; attempt <= cfg.evaluator_retries; ++attempt) {
      try {
        out[i].result = evaluator.evaluate(batch[i], seeds[i]);
        out[i].error.clear();
        return;
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(cfg.eval_threads), batch.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < batch.size(); ++i) run_one(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  for (std::size_t t = 0; t < threads; ++t)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < batch.size(); i = next++) run_one(i);
    });
  for (auto& w : workers) w.join();
  return out;
}

ArchiveEntry make_entry(const Genome& g, EvaluationResult r, const SearchSpace& space,
                        const SearchConfig& cfg, int iteration) {
  r.trace.check();
  MacProfile prof = profile(g, space);
  if (prof.exit_positions != r.trace.exit_positions)
    throw MalformedTrace("exit_positions", "trace columns do not match the genome's enabled exits");
  TuneResult t = tune(r.trace, prof, cfg.tuner(space), column_thresholds(r.trace, g.thresholds));

  ArchiveEntry e;
  e.genome = g;
  e.genome.thresholds = to_threshold_vector(r.trace, t.thresholds);
  e.genome_id = genome_id(encode(e.genome, space));
  e.measured_error = 1.0 - t.policy.accuracy;
  e.measured_average_macs = t.policy.average_macs;
  e.final_exit_error = r.measured_error;
  e.objective = t.objective;
  e.approximate_tuning = t.approximate;
  e.iteration = iteration;
  for (std::size_t c = 0; c < t.thresholds.size(); ++c)
    if (t.thresholds[c] < 1.0) e.utilization[r.trace.exit_positions[c]] = t.policy.utilization[c];
  e.utilization[kNumExitPositions] = t.policy.utilization.back();
  e.trace = std::make_shared<const EvalTrace>(std::move(r.trace));
  return e;
}

class Runner {
public:
  Runner(SearchState& state, Evaluator& evaluator, const SearchHooks& hooks)
      : st_(state), evaluator_(evaluator), hooks_(hooks) {
    for (const auto& e : st_.archive) seen_.insert(encode(e.genome, st_.space));
  }

  void run() {
    if (st_.completed_iterations < 0) {
      initial();
      st_.completed_iterations = 0;
      checkpoint();
    }
    while (!st_.finished()) {
      if (hooks_.stop_after_iteration && st_.completed_iterations >= *hooks_.stop_after_iteration)
        return;
      int it = st_.completed_iterations + 1;
      iterate(it);
      st_.completed_iterations = it;
      checkpoint();
    }
  }

private:
  void log(std::string msg) {
    if (hooks_.on_log) hooks_.on_log(msg);
    st_.log.push_back(std::move(msg));
  }

  void checkpoint() {
    if (hooks_.on_checkpoint) hooks_.on_checkpoint(st_);
  }

  void initial() {
    const auto& cfg = st_.config;
    Rng rng(derive_seed(cfg.seed, kInitialStream));
    std::vector<Genome> batch;
    std::set<Encoding> pooled;
    const std::size_t want = static_cast<std::size_t>(cfg.initial_population);
    for (std::size_t attempts = 0; batch.size() < want && attempts < 1000 * want + 1000; ++attempts) {
      Genome g = sample_genome(st_.space, rng);
      Encoding e = encode(g, st_.space);
      if (seen_.contains(e) || !pooled.insert(std::move(e)).second) continue;
      batch.push_back(std::move(g));
    }
    if (batch.size() < want)
      log("initial population: search space exhausted after " + std::to_string(batch.size()) +
          " distinct genomes");
    evaluate_and_archive(batch, 0);
    if (st_.archive.empty() && !batch.empty())
      throw EvaluatorUnavailable("every evaluation of the initial population failed");
  }

  void iterate(int it) {
    const auto& cfg = st_.config;
    std::vector<SurrogateSample> samples;
    samples.reserve(st_.archive.size());
    for (const auto& e : st_.archive)
      samples.push_back({e.genome, e.measured_error, e.measured_average_macs});
    SurrogateHyper hyper = cfg.surrogate;
    hyper.seed = derive_seed(derive_seed(cfg.seed, kSurrogateStream), static_cast<std::uint64_t>(it));
    st_.surrogate = SurrogatePair::fit(st_.space, samples, hyper);
    const SurrogatePair& sur = *st_.surrogate;

    Rng rng(derive_seed(derive_seed(cfg.seed, kEvolveStream), static_cast<std::uint64_t>(it)));
    Variation variation(cfg, st_.space, seen_);

    std::vector<Genome> parents;
    std::vector<ObjectiveVector> parent_obj;
    for (const auto& e : st_.archive) {
      parents.push_back(e.genome);
      parent_obj.push_back(objective_pair(e.measured_error, e.measured_average_macs, cfg));
    }
    const std::size_t pool_size = static_cast<std::size_t>(cfg.offspring_pool);
    std::vector<Genome> pool;
    std::set<Encoding> pooled;
    variation.breed(parents, fitness(parent_obj), pool_size, pool, pooled, rng);

    auto score = [&](const std::vector<Genome>& gs) {
      std::vector<ObjectiveVector> out;
      out.reserve(gs.size());
      for (const auto& g : gs) out.push_back(objectives(g, sur, cfg));
      return out;
    };

    std::vector<ObjectiveVector> pool_obj = score(pool);
    for (int gen = 0; gen < cfg.pool_generations && !pool.empty(); ++gen) {
      std::vector<Genome> merged = pool;
      variation.breed(pool, fitness(pool_obj), pool_size, merged, pooled, rng);
      auto merged_obj = score(merged);
      std::vector<Genome> next;
      std::vector<ObjectiveVector> next_obj;
      for (std::size_t i : survivors(merged_obj, pool_size)) {
        next.push_back(std::move(merged[i]));
        next_obj.push_back(merged_obj[i]);
      }
      pool = std::move(next);
      pool_obj = std::move(next_obj);
    }

    int k = std::min<int>(cfg.per_iteration_evals, static_cast<int>(pool.size()));
    if (k < cfg.per_iteration_evals)
      log("iteration " + std::to_string(it) + ": only " + std::to_string(k) +
          " unevaluated candidates available");
    std::vector<Genome> batch;
    if (k > 0)
      for (std::size_t i : select_candidates(pool_obj, k)) batch.push_back(pool[i]);
    evaluate_and_archive(batch, it);
  }

  void evaluate_and_archive(const std::vector<Genome>& batch, int iteration) {
    const auto& cfg = st_.config;
    std::vector<std::uint64_t> seeds;
    for (const auto& g : batch)
      seeds.push_back(derive_seed(derive_seed(cfg.seed, kEvalStream), genome_id(encode(g, st_.space))));
    auto outcomes = evaluate_batch(batch, seeds, evaluator_, cfg);

    std::size_t failures = 0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      seen_.insert(encode(batch[i], st_.space));
      std::string error = outcomes[i].error;
      if (outcomes[i].result) {
        try {
          ArchiveEntry e = make_entry(batch[i], std::move(*outcomes[i].result), st_.space, cfg, iteration);
          seen_.insert(encode(e.genome, st_.space));
          st_.archive.push_back(std::move(e));
          continue;
        } catch (const std::exception& ex) {
          error = ex.what();
        }
      }
      ++failures;
      ++st_.failed_evaluations;
      std::ostringstream msg;
      msg << "iteration " << iteration << ": skipped candidate " << std::hex
          << genome_id(encode(batch[i], st_.space)) << std::dec << ": " << error;
      log(msg.str());
    }
    if (!batch.empty() && failures == batch.size() && iteration > 0)
      throw EvaluatorUnavailable("every evaluation of iteration " + std::to_string(iteration) +
                                 " failed");
  }

  SearchState& st_;
  Evaluator& evaluator_;
  const SearchHooks& hooks_;
  std::set<Encoding> seen_;
};

template <class T>
void get_if(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) it->get_to(out);
}

} // namespace

void SearchConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& what) {
    throw ConfigError(field + ": " + what);
  };
  if (!(target_macs > 0.0) || !std::isfinite(target_macs)) fail("target_macs", "must be > 0");
  if (!(beta >= 0.0) || !std::isfinite(beta)) fail("beta", "must be >= 0");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) fail("gamma", "must be >= 0");
  if (iterations < 0) fail("iterations", "must be >= 0");
  if (initial_population < 2) fail("initial_population", "must be >= 2");
  if (per_iteration_evals < 1) fail("per_iteration_evals", "must be >= 1");
  if (training_epochs < 1) fail("training_epochs", "must be >= 1");
  if (!(loss_weight > 0.0)) fail("loss_weight", "must be > 0");
  if (offspring_pool < per_iteration_evals)
    fail("offspring_pool", "must be >= per_iteration_evals");
  if (pool_generations < 0) fail("pool_generations", "must be >= 0");
  if (!(crossover_probability >= 0.0 && crossover_probability <= 1.0))
    fail("crossover_probability", "must be in [0, 1]");
  if (!(mutation_probability >= 0.0 && mutation_probability <= 1.0))
    fail("mutation_probability", "must be in [0, 1]");
  if (!(tuner_max_evaluations >= 1.0)) fail("tuner_max_evaluations", "must be >= 1");
  if (evaluator_retries < 0) fail("evaluator_retries", "must be >= 0");
  if (eval_threads < 1) fail("eval_threads", "must be >= 1");
  if (surrogate.epochs < 1) fail("surrogate_epochs", "must be >= 1");
  if (!(surrogate.learning_rate > 0.0)) fail("surrogate_learning_rate", "must be > 0");
  if (surrogate.batch_size < 1) fail("surrogate_batch_size", "must be >= 1");
  if (surrogate.hidden_layers.empty() ||
      std::any_of(surrogate.hidden_layers.begin(), surrogate.hidden_layers.end(),
                  [](int h) { return h < 1; }))
    fail("surrogate_hidden_layers", "must be a non-empty list of positive sizes");
}

TunerConfig SearchConfig::tuner(const SearchSpace& space) const {
  TunerConfig t;
  t.gamma = gamma;
  t.target_macs = target_macs * 1e6;
  t.grid = space.threshold_grid;
  t.max_evaluations = tuner_max_evaluations;
  return t;
}

bool SearchConfig::operator==(const SearchConfig& o) const {
  nlohmann::json a = *this, b = o;
  return a == b;
}

void to_json(nlohmann::json& j, const SearchConfig& c) {
  j = nlohmann::json{
      {"target_macs", c.target_macs},
      {"beta", c.beta},
      {"gamma", c.gamma},
      {"iterations", c.iterations},
      {"initial_population", c.initial_population},
      {"per_iteration_evals", c.per_iteration_evals},
      {"training_epochs", c.training_epochs},
      {"loss_weight", c.loss_weight},
      {"dataset", c.dataset},
      {"seed", c.seed},
      {"offspring_pool", c.offspring_pool},
      {"pool_generations", c.pool_generations},
      {"crossover_probability", c.crossover_probability},
      {"mutation_probability", c.mutation_probability},
      {"tuner_max_evaluations", c.tuner_max_evaluations},
      {"evaluator_retries", c.evaluator_retries},
      {"eval_threads", c.eval_threads},
      {"objective_form", to_string(c.objective_form)},
      {"surrogate_hidden_layers", c.surrogate.hidden_layers},
      {"surrogate_learning_rate", c.surrogate.learning_rate},
      {"surrogate_epochs", c.surrogate.epochs},
      {"surrogate_full_batch_below", c.surrogate.full_batch_below},
      {"surrogate_batch_size", c.surrogate.batch_size},
      {"surrogate_one_hot", c.surrogate.one_hot},
  };
}

void from_json(const nlohmann::json& j, SearchConfig& c) {
  c = SearchConfig{};
  get_if(j, "target_macs", c.target_macs);
  get_if(j, "beta", c.beta);
  get_if(j, "gamma", c.gamma);
  get_if(j, "iterations", c.iterations);
  get_if(j, "initial_population", c.initial_population);
  get_if(j, "per_iteration_evals", c.per_iteration_evals);
  get_if(j, "training_epochs", c.training_epochs);
  get_if(j, "loss_weight", c.loss_weight);
  get_if(j, "dataset", c.dataset);
  get_if(j, "seed", c.seed);
  get_if(j, "offspring_pool", c.offspring_pool);
  get_if(j, "pool_generations", c.pool_generations);
  get_if(j, "crossover_probability", c.crossover_probability);
  get_if(j, "mutation_probability", c.mutation_probability);
  get_if(j, "tuner_max_evaluations", c.tuner_max_evaluations);
  get_if(j, "evaluator_retries", c.evaluator_retries);
  get_if(j, "eval_threads", c.eval_threads);
  if (auto it = j.find("objective_form"); it != j.end())
    c.objective_form = objective_form_from_string(it->get<std::string>());
  get_if(j, "surrogate_hidden_layers", c.surrogate.hidden_layers);
  get_if(j, "surrogate_learning_rate", c.surrogate.learning_rate);
  get_if(j, "surrogate_epochs", c.surrogate.epochs);
  get_if(j, "surrogate_full_batch_below", c.surrogate.full_batch_below);
  get_if(j, "surrogate_batch_size", c.surrogate.batch_size);
  get_if(j, "surrogate_one_hot", c.surrogate.one_hot);
}

bool ArchiveEntry::same_measurement(const ArchiveEntry& o) const {
  return genome == o.genome && genome_id == o.genome_id && measured_error == o.measured_error &&
         measured_average_macs == o.measured_average_macs && final_exit_error == o.final_exit_error &&
         objective == o.objective && approximate_tuning == o.approximate_tuning &&
         iteration == o.iteration && utilization == o.utilization;
}

void to_json(nlohmann::json& j, const ArchiveEntry& e) {
  nlohmann::json util = nlohmann::json::array();
  for (const auto& u : e.utilization) util.push_back(u ? nlohmann::json(*u) : nlohmann::json());
  std::ostringstream id;
  id << std::hex << e.genome_id;
  j = nlohmann::json{{"genome", e.genome},
                     {"genome_id", id.str()},
                     {"measured_error", e.measured_error},
                     {"measured_average_macs", e.measured_average_macs},
                     {"final_exit_error", e.final_exit_error},
                     {"objective", e.objective},
                     {"approximate_tuning", e.approximate_tuning},
                     {"iteration", e.iteration},
                     {"utilization", std::move(util)}};
}

void from_json(const nlohmann::json& j, ArchiveEntry& e) {
  e = ArchiveEntry{};
  j.at("genome").get_to(e.genome);
  e.genome_id = std::stoull(j.at("genome_id").get<std::string>(), nullptr, 16);
  j.at("measured_error").get_to(e.measured_error);
  j.at("measured_average_macs").get_to(e.measured_average_macs);
  get_if(j, "final_exit_error", e.final_exit_error);
  get_if(j, "objective", e.objective);
  get_if(j, "approximate_tuning", e.approximate_tuning);
  j.at("iteration").get_to(e.iteration);
  const auto& util = j.at("utilization");
  if (!util.is_array() || util.size() != e.utilization.size())
    throw DecodeError("archive entry: utilization must have " +
                      std::to_string(e.utilization.size()) + " entries");
  for (std::size_t i = 0; i < util.size(); ++i)
    if (!util[i].is_null()) e.utilization[i] = util[i].get<double>();
}

double macs_error(double predicted_macs, double target_macs) {
  if (!(target_macs > 0.0)) throw ContractViolation("macs_error: target_macs must be > 0");
  return std::abs(predicted_macs - target_macs) / target_macs;
}

ObjectiveVector objective_pair(double error, double average_macs, const SearchConfig& cfg) {
  if (cfg.objective_form == ObjectiveForm::raw) return {error, average_macs / 1e6};
  double me = macs_error(average_macs, cfg.target_macs * 1e6);
  return {error + cfg.beta * me, me};
}

ObjectiveVector objectives(const Genome& g, const SurrogatePair& s, const SearchConfig& cfg) {
  SurrogatePrediction p = s.predict(g);
  return objective_pair(p.error, p.macs, cfg);
}

std::vector<std::size_t> pareto_front(const std::vector<ArchiveEntry>& archive) {
  std::vector<ObjectiveVector> pts;
  pts.reserve(archive.size());
  for (const auto& e : archive) pts.push_back({e.measured_error, e.measured_average_macs});
  auto fronts = nondominated_sort(pts);
  return fronts.empty() ? std::vector<std::size_t>{} : fronts.front();
}

std::optional<std::size_t> best_entry(const std::vector<ArchiveEntry>& archive) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < archive.size(); ++i)
    if (!best || archive[i].objective > archive[*best].objective) best = i;
  return best;
}

SearchState initial_state(const SearchConfig& cfg, const SearchSpace& space) {
  cfg.validate();
  space.validate();
  SearchState st;
  st.config = cfg;
  st.space = space;
  return st;
}

void continue_search(SearchState& state, Evaluator& evaluator, const SearchHooks& hooks) {
  state.config.validate();
  state.space.validate();
  Runner(state, evaluator, hooks).run();
}

SearchState run_search(const SearchConfig& cfg, const SearchSpace& space, Evaluator& evaluator,
                       const SearchHooks& hooks) {
  SearchState st = initial_state(cfg, space);
  continue_search(st, evaluator, hooks);
  return st;
}

std::uint64_t config_hash(const SearchConfig& cfg, const SearchSpace& space) {
  std::string doc = nlohmann::json{{"config", cfg}, {"space", space}}.dump();
  return fnv1a({reinterpret_cast<const unsigned char*>(doc.data()), doc.size()});
}

nlohmann::json checkpoint_json(const SearchState& st) {
  std::ostringstream hash;
  hash << std::hex << config_hash(st.config, st.space);
  nlohmann::json j{{"version", kCheckpointVersion},
                   {"config_hash", hash.str()},
                   {"seed", st.config.seed},
                   {"config", st.config},
                   {"space", st.space},
                   {"completed_iterations", st.completed_iterations},
                   {"failed_evaluations", st.failed_evaluations},
                   {"archive", st.archive},
                   {"log", st.log}};
  j["surrogate"] = st.surrogate ? nlohmann::json(*st.surrogate) : nlohmann::json();
  return j;
}

SearchState state_from_checkpoint(const nlohmann::json& j) {
  SearchState st;
  try {
    if (!j.is_object()) throw StateError("checkpoint is not a JSON object");
    int version = j.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw StateError("checkpoint version " + std::to_string(version) + " is not supported");
    j.at("config").get_to(st.config);
    j.at("space").get_to(st.space);
    std::ostringstream hash;
    hash << std::hex << config_hash(st.config, st.space);
    if (j.at("config_hash").get<std::string>() != hash.str())
      throw StateError("checkpoint config hash " + j.at("config_hash").get<std::string>() +
                       " does not match its configuration (" + hash.str() + ")");
    if (j.at("seed").get<std::uint64_t>() != st.config.seed)
      throw StateError("checkpoint seed does not match its configuration");
    j.at("completed_iterations").get_to(st.completed_iterations);
    get_if(j, "failed_evaluations", st.failed_evaluations);
    j.at("archive").get_to(st.archive);
    get_if(j, "log", st.log);
    if (const auto& s = j.at("surrogate"); !s.is_null()) st.surrogate = s.get<SurrogatePair>();
    st.config.validate();
    st.space.validate();
    if (st.completed_iterations < -1 || st.completed_iterations > st.config.iterations)
      throw StateError("checkpoint completed_iterations out of range");
    for (const auto& e : st.archive)
      if (!is_valid(e.genome, st.space))
        throw StateError("checkpoint archive holds a genome invalid for its search space");
  } catch (const StateError&) {
    throw;
  } catch (const std::exception& e) {
    throw StateError(std::string("corrupted checkpoint: ") + e.what());
  }
  return st;
}

} // namespace exitnas
