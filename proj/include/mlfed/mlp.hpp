#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "mlfed/error.hpp"
#include "mlfed/rng.hpp"

namespace mlfed {

// Fully connected network with two ReLU hidden layers and a linear output.
// Forward caches activations for one manual backward pass; gradients
// accumulate until zero_grad(). Rows are samples.
class Mlp {
public:
    Mlp(int in, int h1, int h2, int out)
        : in_(in), h1_(h1), h2_(h2), out_(out),
          w1_(Eigen::MatrixXd::Zero(h1, in)), b1_(Eigen::VectorXd::Zero(h1)),
          w2_(Eigen::MatrixXd::Zero(h2, h1)), b2_(Eigen::VectorXd::Zero(h2)),
          w3_(Eigen::MatrixXd::Zero(out, h2)), b3_(Eigen::VectorXd::Zero(out)),
          gw1_(Eigen::MatrixXd::Zero(h1, in)), gb1_(Eigen::VectorXd::Zero(h1)),
          gw2_(Eigen::MatrixXd::Zero(h2, h1)), gb2_(Eigen::VectorXd::Zero(h2)),
          gw3_(Eigen::MatrixXd::Zero(out, h2)), gb3_(Eigen::VectorXd::Zero(out)) {
        if (in < 1 || h1 < 1 || h2 < 1 || out < 1) throw Error("BadConfig", "mlp layer sizes");
    }

    int input_dim() const { return in_; }
    int output_dim() const { return out_; }

    // uniform fan-in init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)); the final
    // layer may be scaled down to start near the output origin
    void init_uniform_fanin(Rng& rng, double final_layer_scale = 1.0) {
        auto fill = [&rng](Eigen::MatrixXd& w, Eigen::VectorXd& b, double scale) {
            const double k = scale / std::sqrt(static_cast<double>(w.cols()));
            for (Eigen::Index r = 0; r < w.rows(); ++r) {
                for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-k, k);
            }
            for (Eigen::Index r = 0; r < b.size(); ++r) b(r) = rng.uniform(-k, k);
        };
        fill(w1_, b1_, 1.0);
        fill(w2_, b2_, 1.0);
        fill(w3_, b3_, final_layer_scale);
    }

    // forward with caching for a subsequent backward()
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x) {
        x_ = x;
        z1_ = (x * w1_.transpose()).rowwise() + b1_.transpose();
        a1_ = z1_.cwiseMax(0.0);
        z2_ = (a1_ * w2_.transpose()).rowwise() + b2_.transpose();
        a2_ = z2_.cwiseMax(0.0);
        return (a2_ * w3_.transpose()).rowwise() + b3_.transpose();
    }

    // inference-only forward; leaves caches and gradients untouched
    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
        Eigen::MatrixXd a = ((x * w1_.transpose()).rowwise() + b1_.transpose()).cwiseMax(0.0);
        a = ((a * w2_.transpose()).rowwise() + b2_.transpose()).cwiseMax(0.0);
        return (a * w3_.transpose()).rowwise() + b3_.transpose();
    }

    // dy: gradient of the loss wrt the forward output (same shape).
    // Accumulates parameter gradients and returns the input gradient.
    Eigen::MatrixXd backward(const Eigen::MatrixXd& dy) {
        gw3_ += dy.transpose() * a2_;
        gb3_ += dy.colwise().sum().transpose();
        Eigen::MatrixXd dz2 =
            (dy * w3_).cwiseProduct((z2_.array() > 0.0).cast<double>().matrix());
        gw2_ += dz2.transpose() * a1_;
        gb2_ += dz2.colwise().sum().transpose();
        Eigen::MatrixXd dz1 =
            (dz2 * w2_).cwiseProduct((z1_.array() > 0.0).cast<double>().matrix());
        gw1_ += dz1.transpose() * x_;
        gb1_ += dz1.colwise().sum().transpose();
        return dz1 * w1_;
    }

    void zero_grad() {
        gw1_.setZero();
        gb1_.setZero();
        gw2_.setZero();
        gb2_.setZero();
        gw3_.setZero();
        gb3_.setZero();
    }

    int param_count() const {
        return static_cast<int>(w1_.size() + b1_.size() + w2_.size() + b2_.size() + w3_.size() +
                                b3_.size());
    }

    Eigen::VectorXd params_flat() const {
        Eigen::VectorXd v(param_count());
        Eigen::Index at = 0;
        for (const auto* m : {&w1_, &w2_, &w3_}) {
            v.segment(at, m->size()) = Eigen::Map<const Eigen::VectorXd>(m->data(), m->size());
            at += m->size();
        }
        for (const auto* b : {&b1_, &b2_, &b3_}) {
            v.segment(at, b->size()) = *b;
            at += b->size();
        }
        return v;
    }

    void set_params_flat(const Eigen::VectorXd& v) {
        if (v.size() != param_count()) throw Error("BadConfig", "parameter vector size mismatch");
        Eigen::Index at = 0;
        for (auto* m : {&w1_, &w2_, &w3_}) {
            Eigen::Map<Eigen::VectorXd>(m->data(), m->size()) = v.segment(at, m->size());
            at += m->size();
        }
        for (auto* b : {&b1_, &b2_, &b3_}) {
            *b = v.segment(at, b->size());
            at += b->size();
        }
    }

    Eigen::VectorXd grads_flat() const {
        Eigen::VectorXd v(param_count());
        Eigen::Index at = 0;
        for (const auto* m : {&gw1_, &gw2_, &gw3_}) {
            v.segment(at, m->size()) = Eigen::Map<const Eigen::VectorXd>(m->data(), m->size());
            at += m->size();
        }
        for (const auto* b : {&gb1_, &gb2_, &gb3_}) {
            v.segment(at, b->size()) = *b;
            at += b->size();
        }
        return v;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["shape"] = {in_, h1_, h2_, out_};
        const Eigen::VectorXd flat = params_flat();
        j["params"] = std::vector<double>(flat.data(), flat.data() + flat.size());
        return j;
    }

    static Mlp from_json(const nlohmann::json& j) {
        const auto shape = j.at("shape").get<std::vector<int>>();
        if (shape.size() != 4) throw Error("CheckpointMismatch", "mlp shape must have 4 entries");
        Mlp net(shape[0], shape[1], shape[2], shape[3]);
        const auto params = j.at("params").get<std::vector<double>>();
        net.set_params_flat(Eigen::Map<const Eigen::VectorXd>(params.data(),
                                                              static_cast<Eigen::Index>(params.size())));
        return net;
    }

private:
    int in_, h1_, h2_, out_;
    Eigen::MatrixXd w1_;
    Eigen::VectorXd b1_;
    Eigen::MatrixXd w2_;
    Eigen::VectorXd b2_;
    Eigen::MatrixXd w3_;
    Eigen::VectorXd b3_;

    Eigen::MatrixXd gw1_;
    Eigen::VectorXd gb1_;
    Eigen::MatrixXd gw2_;
    Eigen::VectorXd gb2_;
    Eigen::MatrixXd gw3_;
    Eigen::VectorXd gb3_;

    Eigen::MatrixXd x_, z1_, a1_, z2_, a2_;
};

// Adam on a network's flat parameter vector.
class Adam {
public:
    Adam(int n_params, double lr)
        : lr_(lr), m_(Eigen::VectorXd::Zero(n_params)), v_(Eigen::VectorXd::Zero(n_params)) {}

    void step(Mlp& net) {
        const Eigen::VectorXd g = net.grads_flat();
        if (!g.allFinite()) throw Error("NonFiniteGradient", "adam step received non-finite gradients");
        ++t_;
        m_ = beta1_ * m_ + (1.0 - beta1_) * g;
        v_ = beta2_ * v_ + (1.0 - beta2_) * g.cwiseProduct(g);
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        const Eigen::VectorXd update =
            (m_ / bc1).cwiseQuotient(((v_ / bc2).cwiseSqrt().array() + eps_).matrix());
        net.set_params_flat(net.params_flat() - lr_ * update);
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["t"] = t_;
        j["lr"] = lr_;
        j["m"] = std::vector<double>(m_.data(), m_.data() + m_.size());
        j["v"] = std::vector<double>(v_.data(), v_.data() + v_.size());
        return j;
    }

    static Adam from_json(const nlohmann::json& j) {
        const auto m = j.at("m").get<std::vector<double>>();
        Adam adam(static_cast<int>(m.size()), j.at("lr").get<double>());
        adam.t_ = j.at("t").get<long>();
        adam.m_ = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
        const auto v = j.at("v").get<std::vector<double>>();
        adam.v_ = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
        return adam;
    }

private:
    double lr_;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double eps_ = 1e-8;
    long t_ = 0;
    Eigen::VectorXd m_, v_;
};

// Eq.-style exponential target update: target <- rho*target + (1-rho)*main.
inline void polyak_update(Mlp& target, const Mlp& main, double rho) {
    if (!(rho >= 0.0 && rho <= 1.0)) throw Error("BadConfig", "polyak factor not in [0,1]");
    target.set_params_flat(rho * target.params_flat() + (1.0 - rho) * main.params_flat());
}

}  // namespace mlfed
