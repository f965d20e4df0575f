#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "mlfed/action.hpp"
#include "mlfed/episode.hpp"
#include "mlfed/environment.hpp"
#include "mlfed/error.hpp"
#include "mlfed/mlp.hpp"
#include "mlfed/rng.hpp"

namespace mlfed {

// l2-nearest non-zero binary vector to a proto-action in (0,1)^N:
// per-coordinate rounding at 0.5, with the all-zero result replaced by the
// single largest coordinate (ties: lowest index). Equals the exhaustive
// argmin over all 2^N - 1 non-zero binary vectors.
inline Action nearest_binary_action(const Eigen::VectorXd& proto) {
    const int n = static_cast<int>(proto.size());
    if (n < 1) throw Error("BadAction", "empty proto-action");
    Action a(n, 0);
    bool any = false;
    for (int i = 0; i < n; ++i) {
        a[i] = proto(i) >= 0.5 ? 1 : 0;
        any = any || a[i] == 1;
    }
    if (!any) {
        int best = 0;
        for (int i = 1; i < n; ++i) {
            if (proto(i) > proto(best)) best = i;
        }
        a[best] = 1;
    }
    return a;
}

struct SacHyperparams {
    double gamma = 0.9;
    double alpha = 0.2;   // fixed entropy coefficient
    double rho = 0.995;   // target-network polyak factor
    double lr = 1e-4;
    int batch_size = 1000;
    int update_every = 50;
    int updates_per_round = 50;
    int start_steps = 1000;  // uniform-random proto-actions before the policy takes over
    std::size_t buffer_capacity = 1000000;
    int hidden1 = 256;
    int hidden2 = 256;

    void validate() const {
        if (!(gamma >= 0.0 && gamma < 1.0)) throw Error("BadConfig", "gamma not in [0,1)");
        if (alpha < 0.0) throw Error("BadConfig", "alpha must be >= 0");
        if (!(rho > 0.0 && rho < 1.0)) throw Error("BadConfig", "rho not in (0,1)");
        if (!(lr > 0.0)) throw Error("BadConfig", "lr must be > 0");
        if (batch_size < 1 || update_every < 1 || updates_per_round < 0 || start_steps < 0) {
            throw Error("BadConfig", "non-positive training cadence");
        }
        if (buffer_capacity < 1) throw Error("BadConfig", "buffer capacity must be >= 1");
        if (hidden1 < 1 || hidden2 < 1) throw Error("BadConfig", "hidden sizes must be >= 1");
    }

    nlohmann::json to_json() const {
        return {{"gamma", gamma},
                {"alpha", alpha},
                {"rho", rho},
                {"lr", lr},
                {"batch_size", batch_size},
                {"update_every", update_every},
                {"updates_per_round", updates_per_round},
                {"start_steps", start_steps},
                {"buffer_capacity", buffer_capacity},
                {"hidden1", hidden1},
                {"hidden2", hidden2}};
    }

    static SacHyperparams from_json(const nlohmann::json& j) {
        SacHyperparams hp;
        hp.gamma = j.value("gamma", hp.gamma);
        hp.alpha = j.value("alpha", hp.alpha);
        hp.rho = j.value("rho", hp.rho);
        hp.lr = j.value("lr", hp.lr);
        hp.batch_size = j.value("batch_size", hp.batch_size);
        hp.update_every = j.value("update_every", hp.update_every);
        hp.updates_per_round = j.value("updates_per_round", hp.updates_per_round);
        hp.start_steps = j.value("start_steps", hp.start_steps);
        hp.buffer_capacity = j.value("buffer_capacity", hp.buffer_capacity);
        hp.hidden1 = j.value("hidden1", hp.hidden1);
        hp.hidden2 = j.value("hidden2", hp.hidden2);
        hp.validate();
        return hp;
    }
};

struct Transition {
    Eigen::VectorXd state;
    Eigen::VectorXd next_state;
    Action action;               // binary, as executed
    Eigen::VectorXd proto;       // continuous policy output; critics consume this
    double reward = 0.0;
    double done = 0.0;
};

struct Batch {
    Eigen::MatrixXd s, a_proto, a_bin, s2;
    Eigen::VectorXd r, d;
    Eigen::Index size() const { return s.rows(); }
};

// Fixed-capacity ring with uniform sampling (with replacement).
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity < 1) throw Error("BadConfig", "buffer capacity must be >= 1");
    }

    void store(Transition t) {
        if (data_.size() < capacity_) {
            data_.push_back(std::move(t));
        } else {
            data_[head_] = std::move(t);
            head_ = (head_ + 1) % capacity_;
        }
    }

    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t storage_index) const { return data_[storage_index]; }

    Batch sample(int batch_size, Rng& rng) const {
        if (data_.empty()) throw Error("EmptyBuffer", "cannot sample from an empty buffer");
        const int state_dim = static_cast<int>(data_[0].state.size());
        const int n = static_cast<int>(data_[0].action.size());
        Batch b;
        b.s.resize(batch_size, state_dim);
        b.s2.resize(batch_size, state_dim);
        b.a_proto.resize(batch_size, n);
        b.a_bin.resize(batch_size, n);
        b.r.resize(batch_size);
        b.d.resize(batch_size);
        for (int row = 0; row < batch_size; ++row) {
            const auto& t = data_[rng.uniform_index(data_.size())];
            b.s.row(row) = t.state.transpose();
            b.s2.row(row) = t.next_state.transpose();
            b.a_proto.row(row) = t.proto.transpose();
            for (int i = 0; i < n; ++i) b.a_bin(row, i) = t.action[i];
            b.r(row) = t.reward;
            b.d(row) = t.done;
        }
        return b;
    }

    nlohmann::json to_json() const {
        nlohmann::json arr = nlohmann::json::array();
        // oldest-first so reload rebuilds the same ring state
        const std::size_t n = data_.size();
        for (std::size_t k = 0; k < n; ++k) {
            const Transition& t = data_[(head_ + k) % n];
            arr.push_back(
                {{"s", std::vector<double>(t.state.data(), t.state.data() + t.state.size())},
                 {"s2", std::vector<double>(t.next_state.data(),
                                            t.next_state.data() + t.next_state.size())},
                 {"a", t.action},
                 {"proto", std::vector<double>(t.proto.data(), t.proto.data() + t.proto.size())},
                 {"r", t.reward},
                 {"d", t.done}});
        }
        return {{"capacity", capacity_}, {"items", std::move(arr)}};
    }

    static ReplayBuffer from_json(const nlohmann::json& j) {
        ReplayBuffer buf(j.at("capacity").get<std::size_t>());
        for (const auto& item : j.at("items")) {
            Transition t;
            const auto s = item.at("s").get<std::vector<double>>();
            const auto s2 = item.at("s2").get<std::vector<double>>();
            const auto proto = item.at("proto").get<std::vector<double>>();
            t.state = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
            t.next_state =
                Eigen::Map<const Eigen::VectorXd>(s2.data(), static_cast<Eigen::Index>(s2.size()));
            t.proto = Eigen::Map<const Eigen::VectorXd>(proto.data(),
                                                        static_cast<Eigen::Index>(proto.size()));
            t.action = item.at("a").get<Action>();
            t.reward = item.at("r").get<double>();
            t.done = item.at("d").get<double>();
            buf.store(std::move(t));
        }
        return buf;
    }

private:
    std::size_t capacity_;
    std::size_t head_ = 0;  // next eviction slot once full
    std::vector<Transition> data_;
};

struct PolicyOutput {
    Eigen::VectorXd mean;
    Eigen::VectorXd log_std;
    Eigen::VectorXd pre_squash;  // u, before the tanh squash
    Eigen::VectorXd action;      // proto-action in (0,1)^N
    double log_prob = 0.0;
};

namespace detail {

constexpr double kLogStdMin = -20.0;
constexpr double kLogStdMax = 2.0;
constexpr double kLog2 = 0.6931471805599453094;
constexpr double kHalfLog2Pi = 0.9189385332046727418;

inline double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

// log(1 - tanh(u)^2), computed stably
inline double log_one_minus_tanh_sq(double u) {
    return 2.0 * (kLog2 - u - softplus(-2.0 * u));
}

}  // namespace detail

// Log-density of the squashed sample a = (tanh(u)+1)/2 under the diagonal
// Gaussian N(mean, exp(log_std)^2): Gaussian log-pdf of u minus the
// change-of-variables term log|da/du| = log(1-tanh(u)^2) - log(2).
inline double squashed_log_prob(const Eigen::VectorXd& mean, const Eigen::VectorXd& log_std,
                                const Eigen::VectorXd& u) {
    double lp = 0.0;
    for (Eigen::Index i = 0; i < mean.size(); ++i) {
        const double sigma = std::exp(log_std(i));
        const double z = (u(i) - mean(i)) / sigma;
        lp += -0.5 * z * z - log_std(i) - detail::kHalfLog2Pi;
        lp -= detail::log_one_minus_tanh_sq(u(i)) - detail::kLog2;
    }
    return lp;
}

// Per-epoch training log row.
struct EpochStats {
    int epoch = 0;
    double test_ap50 = 0.0;  // percent
    double test_map = 0.0;   // percent
    double episode_cost = 0.0;
    std::vector<long> selection_counts;
    double critic_loss = 0.0;
    double actor_objective = 0.0;
    double wall_seconds = 0.0;
};

// Soft actor-critic over a combinatorial provider-selection space: a
// squashed-Gaussian actor emits proto-actions in (0,1)^N, the nearest
// non-zero binary vector is executed, and twin critics with polyak targets
// score (state, proto-action) pairs.
class SacAgent {
public:
    SacAgent(int state_dim, int n_providers, SacHyperparams hp, std::uint64_t init_seed,
             std::uint64_t explore_seed)
        : state_dim_(state_dim),
          n_(n_providers),
          hp_(hp),
          actor_(state_dim, hp.hidden1, hp.hidden2, 2 * n_providers),
          q1_(state_dim + n_providers, hp.hidden1, hp.hidden2, 1),
          q2_(state_dim + n_providers, hp.hidden1, hp.hidden2, 1),
          q1_targ_(state_dim + n_providers, hp.hidden1, hp.hidden2, 1),
          q2_targ_(state_dim + n_providers, hp.hidden1, hp.hidden2, 1),
          adam_actor_(actor_.param_count(), hp.lr),
          adam_q1_(q1_.param_count(), hp.lr),
          adam_q2_(q2_.param_count(), hp.lr),
          buffer_(hp.buffer_capacity),
          explore_rng_(explore_seed) {
        hp_.validate();
        if (state_dim < 1 || n_providers < 1) throw Error("BadConfig", "agent dimensions");
        Rng init_rng(init_seed);
        actor_.init_uniform_fanin(init_rng, 0.01);  // start near the 0.5 midpoint
        q1_.init_uniform_fanin(init_rng);
        q2_.init_uniform_fanin(init_rng);
        q1_targ_.set_params_flat(q1_.params_flat());
        q2_targ_.set_params_flat(q2_.params_flat());
    }

    int state_dim() const { return state_dim_; }
    int n_providers() const { return n_; }
    const SacHyperparams& hyperparams() const { return hp_; }
    std::int64_t total_steps() const { return total_steps_; }
    ReplayBuffer& buffer() { return buffer_; }
    const ReplayBuffer& buffer() const { return buffer_; }
    Mlp& actor() { return actor_; }
    Mlp& q1() { return q1_; }
    Mlp& q2() { return q2_; }
    Mlp& q1_target() { return q1_targ_; }
    Mlp& q2_target() { return q2_targ_; }
    Rng& explore_rng() { return explore_rng_; }

    PolicyOutput policy_forward(const Eigen::VectorXd& state, bool deterministic, Rng& rng) const {
        if (state.size() != state_dim_ || !state.allFinite()) {
            throw Error("NonFiniteState", "policy input must be a finite vector of the state dim");
        }
        const Eigen::MatrixXd out = actor_.apply(state.transpose());
        PolicyOutput po;
        po.mean = out.row(0).head(n_).transpose();
        po.log_std = out.row(0)
                         .tail(n_)
                         .cwiseMax(detail::kLogStdMin)
                         .cwiseMin(detail::kLogStdMax)
                         .transpose();
        po.pre_squash = po.mean;
        if (!deterministic) {
            for (int i = 0; i < n_; ++i) {
                po.pre_squash(i) += std::exp(po.log_std(i)) * rng.normal();
            }
        }
        po.action = ((po.pre_squash.array().tanh() + 1.0) / 2.0).matrix();
        po.log_prob = squashed_log_prob(po.mean, po.log_std, po.pre_squash);
        return po;
    }

    Action act(const Eigen::VectorXd& state, bool deterministic, Rng& rng) const {
        return nearest_binary_action(policy_forward(state, deterministic, rng).action);
    }

    // Eq.-style critic target: y = r + gamma*(1-d)*(min_j Qtarg_j(s', a') -
    // alpha*log pi(a'|s')) with a' freshly sampled from the current policy.
    Eigen::VectorXd q_target(const Batch& batch, Rng& rng) const {
        if (batch.size() < 1) throw Error("BadConfig", "empty batch");
        const PolicySample ps = sample_policy_batch(batch.s2, rng);
        Eigen::MatrixXd q_in(batch.size(), state_dim_ + n_);
        q_in << batch.s2, ps.action;
        const Eigen::VectorXd t1 = q1_targ_.apply(q_in).col(0);
        const Eigen::VectorXd t2 = q2_targ_.apply(q_in).col(0);
        const Eigen::VectorXd min_q = t1.cwiseMin(t2);
        return (batch.r.array() +
                hp_.gamma * (1.0 - batch.d.array()) *
                    (min_q.array() - hp_.alpha * ps.log_prob.array()))
            .matrix();
    }

    // One gradient step on each critic against the detached target; returns
    // the mean of the two pre-step MSE losses.
    double update_critics(const Batch& batch, const Eigen::VectorXd& y) {
        Eigen::MatrixXd q_in(batch.size(), state_dim_ + n_);
        q_in << batch.s, batch.a_proto;
        const double inv_b = 1.0 / static_cast<double>(batch.size());

        double loss_sum = 0.0;
        for (Mlp* critic : {&q1_, &q2_}) {
            Adam& adam = critic == &q1_ ? adam_q1_ : adam_q2_;
            critic->zero_grad();
            const Eigen::VectorXd q = critic->forward(q_in).col(0);
            const Eigen::VectorXd diff = q - y;
            const double loss = diff.squaredNorm() * inv_b;
            if (!std::isfinite(loss)) throw Error("NonFiniteGradient", "critic loss is not finite");
            loss_sum += loss;
            critic->backward(2.0 * inv_b * diff);
            adam.step(*critic);
        }
        return 0.5 * loss_sum;
    }

    // One ascent step on the actor objective
    // J = mean_b [ min_i Q_i(s, a_theta(s)) - alpha * log pi(a_theta(s)|s) ],
    // differentiated through the reparameterized squashed sample. Critic
    // parameters are left untouched. Returns the pre-step objective.
    double update_actor(const Batch& batch, Rng& rng) {
        const Eigen::Index b = batch.size();
        const double inv_b = 1.0 / static_cast<double>(b);

        actor_.zero_grad();
        const PolicySample ps = sample_policy_batch(batch.s, rng, &actor_);

        Eigen::MatrixXd q_in(b, state_dim_ + n_);
        q_in << batch.s, ps.action;
        const Eigen::VectorXd v1 = q1_.forward(q_in).col(0);
        const Eigen::VectorXd v2 = q2_.forward(q_in).col(0);

        // route gradients through the per-sample minimum critic
        Eigen::MatrixXd sel1 = Eigen::MatrixXd::Zero(b, 1);
        Eigen::MatrixXd sel2 = Eigen::MatrixXd::Zero(b, 1);
        for (Eigen::Index row = 0; row < b; ++row) {
            (v1(row) <= v2(row) ? sel1 : sel2)(row, 0) = 1.0;
        }
        const Eigen::MatrixXd din1 = q1_.backward(sel1);
        const Eigen::MatrixXd din2 = q2_.backward(sel2);
        q1_.zero_grad();  // critics stay frozen during the actor step
        q2_.zero_grad();
        const Eigen::MatrixXd dq_da = (din1 + din2).rightCols(n_);

        const double objective =
            inv_b * (v1.cwiseMin(v2).sum() - hp_.alpha * ps.log_prob.sum());
        if (!std::isfinite(objective)) {
            throw Error("NonFiniteGradient", "actor objective is not finite");
        }

        // d(-J)/d[mean | log_std_raw]; hard clamp zeroes the log-std path
        Eigen::MatrixXd dout(b, 2 * n_);
        for (Eigen::Index row = 0; row < b; ++row) {
            for (int i = 0; i < n_; ++i) {
                const double t = ps.tanh_u(row, i);
                const double sech2 = 1.0 - t * t;
                const double se = ps.stddev(row, i) * ps.eps(row, i);
                const double q_path = dq_da(row, i) * 0.5 * sech2;
                const double d_mu = inv_b * (q_path - hp_.alpha * 2.0 * t);
                const double raw = ps.log_std_raw(row, i);
                const bool clamped = raw <= detail::kLogStdMin || raw >= detail::kLogStdMax;
                const double d_ls =
                    clamped ? 0.0
                            : inv_b * (q_path * se - hp_.alpha * (-1.0 + 2.0 * t * se));
                dout(row, i) = -d_mu;
                dout(row, n_ + i) = -d_ls;
            }
        }
        actor_.backward(dout);
        adam_actor_.step(actor_);
        return objective;
    }

    void polyak_targets() {
        polyak_update(q1_targ_, q1_, hp_.rho);
        polyak_update(q2_targ_, q2_, hp_.rho);
    }

    using EpochCallback = std::function<void(const EpochStats&)>;

    // Off-policy training loop: act (uniform proto-actions for the first
    // start_steps), map to the nearest binary action, step, store, and every
    // update_every steps run updates_per_round rounds of target/critic/actor/
    // polyak updates. A deterministic-policy test episode runs at each
    // epoch end.
    void train(Environment& env, const Environment& test_env, int epochs, int steps_per_epoch,
               const EpochCallback& on_epoch) {
        if (env.n_providers() != n_ || env.feature_dim() != state_dim_) {
            throw Error("BadConfig", "environment does not match agent dimensions");
        }
        if (epochs < 1 || steps_per_epoch < 1) throw Error("BadConfig", "epochs/steps must be >= 1");

        if (!episode_active_) {
            obs_ = to_vector(env.reset());
            episode_active_ = true;
        }

        for (int epoch = 0; epoch < epochs; ++epoch) {
            const auto t0 = std::chrono::steady_clock::now();
            double critic_loss_sum = 0.0;
            double actor_obj_sum = 0.0;
            long update_count = 0;

            for (int step = 0; step < steps_per_epoch; ++step) {
                Eigen::VectorXd proto(n_);
                if (total_steps_ < hp_.start_steps) {
                    for (int i = 0; i < n_; ++i) proto(i) = explore_rng_.uniform();
                } else {
                    proto = policy_forward(obs_, false, explore_rng_).action;
                }
                const Action action = nearest_binary_action(proto);
                const StepOutcome out = env.step(action);

                Transition t;
                t.state = obs_;
                t.next_state = to_vector(out.next_state);
                t.action = action;
                t.proto = proto;
                t.reward = out.reward;
                t.done = out.done ? 1.0 : 0.0;
                buffer_.store(std::move(t));

                obs_ = to_vector(out.next_state);
                if (out.done) obs_ = to_vector(env.reset());
                ++total_steps_;

                if (total_steps_ >= hp_.start_steps && total_steps_ % hp_.update_every == 0) {
                    for (int round = 0; round < hp_.updates_per_round; ++round) {
                        const Batch batch = buffer_.sample(hp_.batch_size, explore_rng_);
                        const Eigen::VectorXd y = q_target(batch, explore_rng_);
                        critic_loss_sum += update_critics(batch, y);
                        actor_obj_sum += update_actor(batch, explore_rng_);
                        polyak_targets();
                        ++update_count;
                    }
                }
            }

            ++epochs_done_;
            EpochStats stats;
            stats.epoch = epochs_done_;
            const EpisodeReport report = test_episode(test_env);
            stats.test_ap50 = 100.0 * report.summary.ap50;
            stats.test_map = 100.0 * report.summary.map;
            stats.episode_cost = report.episode_cost;
            stats.selection_counts = report.selection_counts;
            stats.critic_loss = update_count > 0 ? critic_loss_sum / update_count : 0.0;
            stats.actor_objective = update_count > 0 ? actor_obj_sum / update_count : 0.0;
            stats.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (on_epoch) on_epoch(stats);
        }
    }

    // Deterministic-policy pass over the trace in order.
    EpisodeReport test_episode(const Environment& test_env) const {
        Rng unused(0);
        return run_episode(test_env, [this, &unused](std::size_t, const std::vector<double>& f) {
            return act(to_vector(f), true, unused);
        });
    }

    int epochs_done() const { return epochs_done_; }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["version"] = 1;
        j["state_dim"] = state_dim_;
        j["n_providers"] = n_;
        j["hyperparams"] = hp_.to_json();
        j["actor"] = actor_.to_json();
        j["q1"] = q1_.to_json();
        j["q2"] = q2_.to_json();
        j["q1_targ"] = q1_targ_.to_json();
        j["q2_targ"] = q2_targ_.to_json();
        j["adam_actor"] = adam_actor_.to_json();
        j["adam_q1"] = adam_q1_.to_json();
        j["adam_q2"] = adam_q2_.to_json();
        j["explore_rng"] = explore_rng_.serialize();
        j["total_steps"] = total_steps_;
        j["epochs_done"] = epochs_done_;
        j["episode_active"] = episode_active_;
        j["obs"] = std::vector<double>(obs_.data(), obs_.data() + obs_.size());
        j["buffer"] = buffer_.to_json();
        return j;
    }

    static SacAgent from_json(const nlohmann::json& j) {
        if (j.value("version", 0) != 1) throw Error("CheckpointMismatch", "unknown checkpoint version");
        SacAgent agent(j.at("state_dim").get<int>(), j.at("n_providers").get<int>(),
                       SacHyperparams::from_json(j.at("hyperparams")), 0, 0);
        agent.actor_ = Mlp::from_json(j.at("actor"));
        agent.q1_ = Mlp::from_json(j.at("q1"));
        agent.q2_ = Mlp::from_json(j.at("q2"));
        agent.q1_targ_ = Mlp::from_json(j.at("q1_targ"));
        agent.q2_targ_ = Mlp::from_json(j.at("q2_targ"));
        agent.adam_actor_ = Adam::from_json(j.at("adam_actor"));
        agent.adam_q1_ = Adam::from_json(j.at("adam_q1"));
        agent.adam_q2_ = Adam::from_json(j.at("adam_q2"));
        agent.explore_rng_.deserialize(j.at("explore_rng").get<std::string>());
        agent.total_steps_ = j.at("total_steps").get<std::int64_t>();
        agent.epochs_done_ = j.at("epochs_done").get<int>();
        agent.episode_active_ = j.at("episode_active").get<bool>();
        const auto obs = j.at("obs").get<std::vector<double>>();
        agent.obs_ = to_vector(obs);
        agent.buffer_ = ReplayBuffer::from_json(j.at("buffer"));
        return agent;
    }

private:
    struct PolicySample {
        Eigen::MatrixXd mean, log_std_raw, log_std, stddev, eps, u, tanh_u, action;
        Eigen::VectorXd log_prob;
    };

    static Eigen::VectorXd to_vector(const std::vector<double>& v) {
        return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }

    // Batched reparameterized sample. When `cache_net` is the actor, the
    // forward pass caches activations so the caller can backpropagate.
    PolicySample sample_policy_batch(const Eigen::MatrixXd& states, Rng& rng,
                                     Mlp* cache_net = nullptr) const {
        const Eigen::Index b = states.rows();
        const Eigen::MatrixXd out =
            cache_net ? cache_net->forward(states) : actor_.apply(states);
        PolicySample ps;
        ps.mean = out.leftCols(n_);
        ps.log_std_raw = out.rightCols(n_);
        ps.log_std = ps.log_std_raw.cwiseMax(detail::kLogStdMin).cwiseMin(detail::kLogStdMax);
        ps.stddev = ps.log_std.array().exp();
        ps.eps.resize(b, n_);
        for (Eigen::Index row = 0; row < b; ++row) {
            for (int i = 0; i < n_; ++i) ps.eps(row, i) = rng.normal();
        }
        ps.u = ps.mean + ps.stddev.cwiseProduct(ps.eps);
        ps.tanh_u = ps.u.array().tanh();
        ps.action = (ps.tanh_u.array() + 1.0) / 2.0;
        ps.log_prob.resize(b);
        for (Eigen::Index row = 0; row < b; ++row) {
            double lp = 0.0;
            for (int i = 0; i < n_; ++i) {
                lp += -0.5 * ps.eps(row, i) * ps.eps(row, i) - ps.log_std(row, i) -
                      detail::kHalfLog2Pi;
                lp -= detail::log_one_minus_tanh_sq(ps.u(row, i)) - detail::kLog2;
            }
            ps.log_prob(row) = lp;
        }
        return ps;
    }

    int state_dim_;
    int n_;
    SacHyperparams hp_;
    Mlp actor_, q1_, q2_, q1_targ_, q2_targ_;
    Adam adam_actor_, adam_q1_, adam_q2_;
    ReplayBuffer buffer_;
    Rng explore_rng_;

    Eigen::VectorXd obs_;
    bool episode_active_ = false;
    std::int64_t total_steps_ = 0;
    int epochs_done_ = 0;
};

}  // namespace mlfed
