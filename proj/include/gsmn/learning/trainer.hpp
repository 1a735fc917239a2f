#pragma once

#include <fstream>
#include <nlohmann/json.hpp>

#include "gsmn/dataset.hpp"
#include "gsmn/learning/expert.hpp"
#include "gsmn/learning/losses.hpp"
#include "gsmn/model/policy.hpp"

namespace gsmn::learn {

struct LossStats {
  double action = 0.0;
  double percept = 0.0;
  double lang = 0.0;
  double ground = 0.0;
  double plan = 0.0;
  int steps = 0;

  LossStats& operator+=(const LossStats& o) {
    action += o.action * o.steps;
    percept += o.percept * o.steps;
    lang += o.lang * o.steps;
    ground += o.ground * o.steps;
    plan += o.plan * o.steps;
    steps += o.steps;
    return *this;
  }
  void finish() {
    if (steps == 0) return;
    action /= steps;
    percept /= steps;
    lang /= steps;
    ground /= steps;
    plan /= steps;
  }
};

// Builds the full differentiable episode loss: mean action distance over the
// recorded steps plus the lambda-weighted auxiliary objectives.
template <typename T>
nn::Node<T>* episode_loss(nn::Graph<T>& g, model::PolicyNet<T>& net, const sim::EpisodeRecord& episode,
                          const world::EnvironmentSpec& env, const world::LandmarkPool& pool,
                          const world::TaskSpec& task, const LossWeights& w, uint64_t truth_seed,
                          LossStats* stats = nullptr) {
  require(!episode.steps.empty(), "episode_loss: empty episode");
  auto st = net.start_episode(g, episode.tokens);
  Rng truth_rng(derive_seed(truth_seed, "aux_truth"));
  const int instr_side = int(task.side);

  std::vector<nn::Node<T>*> action_terms, percept_terms, lang_terms, ground_terms, plan_terms;
  for (const sim::EpisodeStep& step : episode.steps) {
    require(!step.image.empty(), "episode_loss: step has no image frame");
    const auto sv = net.step(g, st, net.image_tensor(step.image), step.observed_pose);
    action_terms.push_back(action_loss_var(g, sv, step.expert, w));
    const StepTruth truth =
        build_step_truth(env, pool, task, step.true_pose, step.observed_pose, net.config(), truth_rng);
    const auto aux = aux_losses(g, net, st, sv, truth, task.target_class, instr_side);
    if (aux.percept) percept_terms.push_back(aux.percept);
    if (aux.lang) lang_terms.push_back(aux.lang);
    if (aux.ground) ground_terms.push_back(aux.ground);
    if (aux.plan) plan_terms.push_back(aux.plan);
  }

  const T inv_n = T(1) / T(action_terms.size());
  auto mean_of = [&](const std::vector<nn::Node<T>*>& terms) -> nn::Node<T>* {
    if (terms.empty()) return nullptr;
    // Missing steps contribute zero: divide by the full step count.
    return nn::add_scalars(g, terms, std::vector<T>(terms.size(), inv_n));
  };

  nn::Node<T>* action = mean_of(action_terms);
  nn::Node<T>* percept = mean_of(percept_terms);
  nn::Node<T>* lang = mean_of(lang_terms);
  nn::Node<T>* ground = mean_of(ground_terms);
  nn::Node<T>* plan = mean_of(plan_terms);

  std::vector<nn::Node<T>*> parts{action};
  std::vector<T> weights{T(1)};
  if (percept) {
    parts.push_back(percept);
    weights.push_back(T(w.lambda_v));
  }
  if (lang) {
    parts.push_back(lang);
    weights.push_back(T(w.lambda_l));
  }
  if (ground) {
    parts.push_back(ground);
    weights.push_back(T(w.lambda_g));
  }
  if (plan) {
    parts.push_back(plan);
    weights.push_back(T(w.lambda_p));
  }
  if (stats) {
    stats->steps = int(episode.steps.size());
    stats->action = double(action->value[0]);
    stats->percept = percept ? double(percept->value[0]) : 0.0;
    stats->lang = lang ? double(lang->value[0]) : 0.0;
    stats->ground = ground ? double(ground->value[0]) : 0.0;
    stats->plan = plan ? double(plan->value[0]) : 0.0;
  }
  return nn::add_scalars(g, parts, weights);
}

// Bounded-size aggregated dataset: the fixed-memory half of the training
// algorithm. Size never exceeds the cap after any mutation.
class ReplayDataset {
 public:
  explicit ReplayDataset(size_t cap) : cap_(cap) {}

  size_t size() const { return episodes_.size(); }
  size_t cap() const { return cap_; }
  const sim::EpisodeRecord& operator[](size_t i) const { return episodes_[i]; }

  void seed_from(std::vector<sim::EpisodeRecord> source, size_t n, Rng& rng) {
    episodes_.clear();
    n = std::min(n, source.size());
    for (size_t i = 0; i < n; ++i) {
      const size_t j = i + rng.uniform_int(source.size() - i);
      std::swap(source[i], source[j]);
      episodes_.push_back(std::move(source[i]));
    }
    check();
  }

  void discard(size_t n, Rng& rng) {
    for (size_t k = 0; k < n && !episodes_.empty(); ++k) {
      const size_t i = rng.uniform_int(episodes_.size());
      episodes_[i] = std::move(episodes_.back());
      episodes_.pop_back();
    }
    check();
  }

  void append(sim::EpisodeRecord episode) {
    episodes_.push_back(std::move(episode));
    check();
  }

 private:
  void check() const {
    require(episodes_.size() <= cap_, "ReplayDataset: capacity invariant violated");
  }

  size_t cap_;
  std::vector<sim::EpisodeRecord> episodes_;
};

struct TrainConfig {
  int supervised_epochs = 30;
  int dagger_iterations = 60;   // K
  int collect_size = 300;       // N_s, expert episodes for supervised pretraining
  int replay_cap = 200;         // N
  int dagger_discard = 20;      // N_d
  double beta0 = 0.9;
  nn::AdamConfig adam;
  LossWeights loss;
  ExpertConfig expert;
  sim::AgentConfig agent;
  sim::EpisodeOptions episode;
  uint64_t seed = 1;
};

// Append-only structured-text training log, one JSON line per epoch.
class TrainLog {
 public:
  TrainLog() = default;
  explicit TrainLog(const std::filesystem::path& path) {
    if (!path.empty()) out_.open(path, std::ios::app);
  }

  void write(const std::string& stage, int iteration, double beta, size_t dataset_size,
             const LossStats& s, double dev_success = -1.0) {
    nlohmann::json j{{"stage", stage},       {"iteration", iteration}, {"beta", beta},
                     {"dataset_size", dataset_size}, {"action_loss", s.action}, {"percept_loss", s.percept},
                     {"lang_loss", s.lang},  {"ground_loss", s.ground}, {"plan_loss", s.plan}};
    if (dev_success >= 0.0) j["dev_success"] = dev_success;
    if (out_.is_open()) out_ << j.dump() << "\n" << std::flush;
    if (echo) std::fprintf(stderr, "%s\n", j.dump().c_str());
  }

  bool echo = false;

 private:
  std::ofstream out_;
};

class Trainer {
 public:
  Trainer(model::PolicyNet<float>& net, const world::Dataset& data, const TrainConfig& cfg)
      : net_(net), data_(data), cfg_(cfg), adam_(net.parameters(), cfg.adam) {}

  // Expert rollouts over the training tasks (task i -> episode i, truncated
  // or cycled to n episodes).
  std::vector<sim::EpisodeRecord> collect_expert_dataset(int n) {
    std::vector<sim::EpisodeRecord> out;
    out.reserve(size_t(n));
    for (int i = 0; i < n; ++i) {
      const world::TaskRecord& rec = data_.train[size_t(i) % data_.train.size()];
      out.push_back(run_with(nullptr, rec, int(size_t(i) % data_.train.size()),
                             derive_seed(cfg_.seed, "collect_sup", uint64_t(i))));
    }
    return out;
  }

  // One pass of gradient updates over a list of episodes, shuffled.
  LossStats train_epoch(const std::vector<const sim::EpisodeRecord*>& episodes, uint64_t shuffle_seed) {
    std::vector<size_t> order(episodes.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(shuffle_seed, "shuffle"));
    for (size_t i = 0; i + 1 < order.size(); ++i) {
      const size_t j = i + rng.uniform_int(order.size() - i);
      std::swap(order[i], order[j]);
    }
    LossStats total;
    for (size_t idx : order) {
      const sim::EpisodeRecord& ep = *episodes[idx];
      require(ep.task_index >= 0 && size_t(ep.task_index) < data_.train.size(),
              "train_epoch: episode lost its task reference");
      const world::TaskRecord& rec = data_.train[size_t(ep.task_index)];
      nn::Graph<float> g;
      LossStats stats;
      auto* loss = episode_loss<float>(g, net_, ep, rec.env, data_.pool, rec.task, cfg_.loss,
                                       derive_seed(cfg_.seed, "truth", idx), &stats);
      if (!std::isfinite(double(loss->value[0])))
        throw NumericError("train_epoch: non-finite loss on episode of task " +
                           std::to_string(ep.task_index));
      adam_.zero_grad();
      g.backward(loss);
      adam_.step();
      total += stats;
    }
    total.finish();
    return total;
  }

  void train_supervised(const std::vector<sim::EpisodeRecord>& dstar, int epochs, TrainLog& log,
                        const std::function<double(int)>& dev_eval = nullptr) {
    std::vector<const sim::EpisodeRecord*> ptrs;
    for (const auto& e : dstar) ptrs.push_back(&e);
    for (int epoch = 0; epoch < epochs; ++epoch) {
      const LossStats s = train_epoch(ptrs, derive_seed(cfg_.seed, "sup_epoch", uint64_t(epoch)));
      log.write("supervised", epoch, 1.0, dstar.size(), s, dev_eval ? dev_eval(epoch) : -1.0);
    }
  }

  // Fixed-memory dataset-aggregation loop. Per iteration: discard, decay the
  // expert mixture, collect under the mixture, aggregate, one training epoch.
  void daggerfm(ReplayDataset& replay, TrainLog& log, const std::function<double(int)>& dev_eval = nullptr) {
    for (int i = 1; i <= cfg_.dagger_iterations; ++i) {
      Rng rng(derive_seed(cfg_.seed, "dagger", uint64_t(i)));
      replay.discard(size_t(cfg_.dagger_discard), rng);
      const double beta = std::pow(cfg_.beta0, double(i));
      for (int c = 0; c < cfg_.dagger_discard; ++c) {
        const int task_idx = int(rng.uniform_int(data_.train.size()));
        const world::TaskRecord& rec = data_.train[size_t(task_idx)];
        const bool use_expert = rng.uniform() < beta;
        model::NetPolicy net_policy(net_);
        replay.append(run_with(use_expert ? nullptr : &net_policy, rec, task_idx,
                               derive_seed(cfg_.seed, "collect_dagger", uint64_t(i) * 1000 + uint64_t(c))));
        require(replay.size() <= replay.cap(), "daggerfm: replay exceeded its cap");
      }
      std::vector<const sim::EpisodeRecord*> ptrs;
      for (size_t k = 0; k < replay.size(); ++k) ptrs.push_back(&replay[k]);
      const LossStats s = train_epoch(ptrs, derive_seed(cfg_.seed, "dagger_epoch", uint64_t(i)));
      log.write("dagger", i, beta, replay.size(), s, dev_eval ? dev_eval(i) : -1.0);
    }
  }

  sim::EpisodeRecord run_with(sim::Policy* policy, const world::TaskRecord& rec, int task_index,
                              uint64_t noise_seed) {
    const std::vector<int> tokens = vocab_.encode(rec.task.instruction);
    sim::ExpertLabeler labeler = [&](const Pose& pose) {
      return expert_action(pose, rec.demo, cfg_.expert);
    };
    sim::EpisodeOptions opt = cfg_.episode;
    opt.noise_seed = noise_seed;
    ExpertPolicy expert(rec.demo, cfg_.expert);
    sim::Policy& actor = policy ? *policy : static_cast<sim::Policy&>(expert);
    sim::EpisodeRecord ep = sim::run_episode(actor, rec.env, data_.pool, rec.task, tokens,
                                             net_.config().camera, cfg_.agent, labeler, opt);
    ep.task_index = task_index;
    return ep;
  }

  const model::Vocab& vocab() const { return vocab_; }

 private:
  model::PolicyNet<float>& net_;
  const world::Dataset& data_;
  TrainConfig cfg_;
  nn::Adam<float> adam_;
  model::Vocab vocab_ = model::Vocab::build(data_.pool);
};

}  // namespace gsmn::learn
