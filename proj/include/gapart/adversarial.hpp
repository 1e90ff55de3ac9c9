#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gapart/types.hpp"

namespace gapart {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Per-point features at one decoder resolution.
struct FeatureMap {
  Eigen::MatrixXd features;  // N x K
  int layer_id = 1;          // 1..3
};

// Focal weighting state for part-level domain discrimination:
// weight(d, p) = alpha[d][p] * (1 - acc[d][p])^gamma.
struct FocalConfig {
  std::map<std::pair<int, int>, double> alpha;  // (domain, part class) -> weight
  std::map<std::pair<int, int>, double> acc;    // running mean accuracy
  double gamma = 2.0;
  double acc_decay = 0.9;  // exponential moving average factor

  double weight(int domain, int part_class) const;  // throws ConfigError
  void update_acc(int domain, int part_class, double batch_accuracy);

  // Uniform alpha = 1, acc = 0 over the given label ranges.
  static FocalConfig uniform(int num_domains, int num_classes, double gamma);
};

// 2-layer perceptron domain classifier (tanh hidden layer, softmax output)
// with explicit forward/backward, sitting behind a gradient reversal layer.
struct TinyClassifier {
  Eigen::MatrixXd w1;  // hidden x in
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // domains x hidden
  Eigen::VectorXd b2;
  double grl_lambda = 0.3;

  int in_dim() const { return static_cast<int>(w1.cols()); }
  int num_domains() const { return static_cast<int>(w2.rows()); }

  Eigen::VectorXd logits(const Eigen::VectorXd& x) const;

  // Softmax cross-entropy of one sample; optionally accumulates weight
  // gradients (scaled by `weight`) and returns dL/dx (unscaled by GRL).
  struct Grads {
    Eigen::MatrixXd w1, w2;
    Eigen::VectorXd b1, b2;
    void setZero(const TinyClassifier& c);
    void axpy(double a, const Grads& g);
  };
  double ce_loss(const Eigen::VectorXd& x, int domain, double weight = 1.0,
                 Grads* grads = nullptr, Eigen::VectorXd* dx = nullptr) const;

  void step(const Grads& grads, double lr);

  static TinyClassifier init_random(int in, int hidden, int domains,
                                    std::uint64_t seed, double grl_lambda = 0.3);
};

// Gradient reversal: identity forward, backward(g) = -lambda * g.
Eigen::VectorXd grl_backward(const Eigen::VectorXd& upstream_grad,
                             double lambda = 0.3);

struct PooledFeatures {
  Eigen::MatrixXd pooled;        // M'_s x K, mean over proposal points
  std::vector<int> kept;         // indices into the input proposal list
  std::vector<int> domains;      // domain label per kept proposal
  std::vector<int> part_classes; // semantic label per kept proposal
};

// Mean-pools per-point features over each proposal with score > s_thre.
PooledFeatures query_proposal_features(const FeatureMap& f,
                                       const std::vector<Proposal>& proposals,
                                       double s_thre = 0.09);

struct LossValue {
  double value = 0.0;
  bool empty_input = false;  // warning flag: no proposals above threshold
};

// (1/M'_s) * sum CE(D(F_i), d_i). Optional outputs: classifier-weight
// gradients and per-proposal feature gradients through the GRL
// (i.e. -lambda * dL/dF).
LossValue loss_Q_adv(const Eigen::MatrixXd& pooled,
                     const std::vector<int>& domains,
                     const TinyClassifier& classifier,
                     TinyClassifier::Grads* grads = nullptr,
                     Eigen::MatrixXd* feature_grads_through_grl = nullptr);

double focal_weight(const FocalConfig& cfg, int domain, int part_class);

// (1/M'_s) * sum w_{d_i}^{p_i} * CE(D(F_i), d_i).
LossValue loss_QB_adv(const Eigen::MatrixXd& pooled,
                      const std::vector<int>& domains,
                      const std::vector<int>& part_classes,
                      const FocalConfig& cfg, const TinyClassifier& classifier,
                      TinyClassifier::Grads* grads = nullptr,
                      Eigen::MatrixXd* feature_grads_through_grl = nullptr);

struct LayerInput {
  Eigen::MatrixXd pooled;
  std::vector<int> domains;
  std::vector<int> part_classes;
};

// Multi-resolution combinations: sum_l w_l * per-layer loss.
LossValue loss_QR_adv(const std::array<LayerInput, 3>& layers,
                      const std::array<const TinyClassifier*, 3>& classifiers,
                      const std::array<double, 3>& layer_weights);
LossValue loss_QRB_adv(const std::array<LayerInput, 3>& layers,
                       const std::array<const TinyClassifier*, 3>& classifiers,
                       const FocalConfig& cfg,
                       const std::array<double, 3>& layer_weights);

// Reference segmentation losses (documented formulas; not trained here).
double loss_semantic_ce(const Eigen::MatrixXd& logits,
                        const std::vector<int>& labels);
double loss_offset_l1(const std::vector<Vec3>& predicted_offsets,
                      const std::vector<Vec3>& target_offsets);
double loss_score_regression(const std::vector<double>& predicted_scores,
                             const std::vector<double>& target_ious);

// ---------------------------------------------------------------------------
// Desk-scale adversarial training demo.

struct AdvDemoConfig {
  int num_domains = 3;
  int num_classes = 3;
  double grl_lambda = 0.3;
  // The demo runs at desk scale, so the adversarial term is kept at full
  // strength and focal damping is off by default; otherwise the domain
  // classifiers saturate on the separable toy data and the reversed
  // gradient vanishes before it can shape the features.
  double gamma = 0.0;
  std::array<double, 3> layer_weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  double cls_loss_weight = 1.0;  // multiplier on the adversarial term
  int epochs = 200;
  int train_samples = 512;
  int test_samples = 512;
  int batch_size = 32;
  double lr = 0.15;
  std::uint64_t seed = 0;
};

struct AdvDemoEpoch {
  double qrb_loss = 0.0;
  double domain_acc = 0.0;  // domain classifier accuracy (layer 3)
  double task_acc = 0.0;
};

struct AdvDemoReport {
  std::vector<AdvDemoEpoch> epochs;
  double probe_domain_acc = 0.0;  // linear probe on frozen features, test split
  double final_task_acc = 0.0;    // task head accuracy, test split
};

// Trains a small feature extractor + per-layer domain classifiers with GRL
// on a linearly separable synthetic multi-domain set. Deterministic under
// cfg.seed. Throws on degenerate configs (< 2 domains or < 2 classes).
AdvDemoReport adv_demo_train(const AdvDemoConfig& cfg);

}  // namespace gapart
