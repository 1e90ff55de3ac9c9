#include "gapart/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace gapart {

double FocalConfig::weight(int domain, int part_class) const {
  const auto key = std::make_pair(domain, part_class);
  const auto ita = alpha.find(key);
  const auto itc = acc.find(key);
  if (ita == alpha.end() || itc == acc.end())
    throw ConfigError("focal config missing (domain=" + std::to_string(domain) +
                      ", class=" + std::to_string(part_class) + ")");
  return ita->second * std::pow(1.0 - itc->second, gamma);
}

void FocalConfig::update_acc(int domain, int part_class, double batch_accuracy) {
  auto& a = acc[{domain, part_class}];
  a = acc_decay * a + (1.0 - acc_decay) * batch_accuracy;
}

FocalConfig FocalConfig::uniform(int num_domains, int num_classes, double gamma) {
  FocalConfig cfg;
  cfg.gamma = gamma;
  for (int d = 0; d < num_domains; ++d)
    for (int p = 0; p < num_classes; ++p) {
      cfg.alpha[{d, p}] = 1.0;
      cfg.acc[{d, p}] = 0.0;
    }
  return cfg;
}

double focal_weight(const FocalConfig& cfg, int domain, int part_class) {
  return cfg.weight(domain, part_class);
}

Eigen::VectorXd grl_backward(const Eigen::VectorXd& upstream_grad, double lambda) {
  return -lambda * upstream_grad;
}

void TinyClassifier::Grads::setZero(const TinyClassifier& c) {
  w1 = Eigen::MatrixXd::Zero(c.w1.rows(), c.w1.cols());
  b1 = Eigen::VectorXd::Zero(c.b1.size());
  w2 = Eigen::MatrixXd::Zero(c.w2.rows(), c.w2.cols());
  b2 = Eigen::VectorXd::Zero(c.b2.size());
}

void TinyClassifier::Grads::axpy(double a, const Grads& g) {
  w1 += a * g.w1;
  b1 += a * g.b1;
  w2 += a * g.w2;
  b2 += a * g.b2;
}

Eigen::VectorXd TinyClassifier::logits(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd h = ((w1 * x) + b1).array().tanh();
  return w2 * h + b2;
}

double TinyClassifier::ce_loss(const Eigen::VectorXd& x, int domain,
                               double weight, Grads* grads,
                               Eigen::VectorXd* dx) const {
  const Eigen::VectorXd a1 = (w1 * x) + b1;
  const Eigen::VectorXd h = a1.array().tanh();
  Eigen::VectorXd z = w2 * h + b2;
  const double zmax = z.maxCoeff();
  const Eigen::VectorXd ez = (z.array() - zmax).exp();
  const double sum = ez.sum();
  const double loss = -(z(domain) - zmax - std::log(sum));

  if (grads || dx) {
    Eigen::VectorXd dz = ez / sum;  // softmax
    dz(domain) -= 1.0;
    const Eigen::VectorXd dh = w2.transpose() * dz;
    const Eigen::VectorXd da1 =
        dh.array() * (1.0 - h.array() * h.array());
    if (grads) {
      grads->w2 += weight * dz * h.transpose();
      grads->b2 += weight * dz;
      grads->w1 += weight * da1 * x.transpose();
      grads->b1 += weight * da1;
    }
    if (dx) *dx = weight * (w1.transpose() * da1);
  }
  return weight * loss;
}

void TinyClassifier::step(const Grads& grads, double lr) {
  w1 -= lr * grads.w1;
  b1 -= lr * grads.b1;
  w2 -= lr * grads.w2;
  b2 -= lr * grads.b2;
}

TinyClassifier TinyClassifier::init_random(int in, int hidden, int domains,
                                           std::uint64_t seed, double grl_lambda) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  TinyClassifier c;
  const double s1 = 1.0 / std::sqrt(static_cast<double>(in));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  c.w1 = Eigen::MatrixXd::NullaryExpr(hidden, in, [&] { return s1 * gauss(rng); });
  c.b1 = Eigen::VectorXd::Zero(hidden);
  c.w2 = Eigen::MatrixXd::NullaryExpr(domains, hidden, [&] { return s2 * gauss(rng); });
  c.b2 = Eigen::VectorXd::Zero(domains);
  c.grl_lambda = grl_lambda;
  return c;
}

PooledFeatures query_proposal_features(const FeatureMap& f,
                                       const std::vector<Proposal>& proposals,
                                       double s_thre) {
  PooledFeatures out;
  std::vector<Eigen::VectorXd> rows;
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    const Proposal& p = proposals[i];
    if (!(p.score > s_thre) || p.point_indices.empty()) continue;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(f.features.cols());
    for (int idx : p.point_indices) {
      if (idx < 0 || idx >= f.features.rows())
        throw std::out_of_range("proposal index outside feature map");
      mean += f.features.row(idx).transpose();
    }
    mean /= static_cast<double>(p.point_indices.size());
    rows.push_back(std::move(mean));
    out.kept.push_back(static_cast<int>(i));
    out.domains.push_back(p.domain_label.value_or(0));
    out.part_classes.push_back(p.semantic_label);
  }
  out.pooled.resize(static_cast<int>(rows.size()), f.features.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.pooled.row(static_cast<int>(i)) = rows[i].transpose();
  return out;
}

namespace {

LossValue weighted_ce_mean(const Eigen::MatrixXd& pooled,
                           const std::vector<int>& domains,
                           const std::vector<double>& weights,
                           const TinyClassifier& classifier,
                           TinyClassifier::Grads* grads,
                           Eigen::MatrixXd* feature_grads_through_grl) {
  const int m = static_cast<int>(pooled.rows());
  if (static_cast<int>(domains.size()) != m)
    throw std::invalid_argument("domains size does not match pooled features");
  LossValue out;
  if (m == 0) {
    out.empty_input = true;
    if (feature_grads_through_grl) feature_grads_through_grl->resize(0, pooled.cols());
    return out;
  }
  if (grads) grads->setZero(classifier);
  if (feature_grads_through_grl)
    feature_grads_through_grl->resize(m, pooled.cols());

  TinyClassifier::Grads local;
  if (grads) local.setZero(classifier);
  double total = 0.0;
  const double inv_m = 1.0 / static_cast<double>(m);
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd dx;
    total += classifier.ce_loss(pooled.row(i).transpose(), domains[i],
                                weights[i] * inv_m, grads,
                                feature_grads_through_grl ? &dx : nullptr);
    if (feature_grads_through_grl)
      feature_grads_through_grl->row(i) =
          grl_backward(dx, classifier.grl_lambda).transpose();
  }
  out.value = total;
  return out;
}

}  // namespace

LossValue loss_Q_adv(const Eigen::MatrixXd& pooled,
                     const std::vector<int>& domains,
                     const TinyClassifier& classifier,
                     TinyClassifier::Grads* grads,
                     Eigen::MatrixXd* feature_grads_through_grl) {
  const std::vector<double> weights(pooled.rows(), 1.0);
  return weighted_ce_mean(pooled, domains, weights, classifier, grads,
                          feature_grads_through_grl);
}

LossValue loss_QB_adv(const Eigen::MatrixXd& pooled,
                      const std::vector<int>& domains,
                      const std::vector<int>& part_classes,
                      const FocalConfig& cfg, const TinyClassifier& classifier,
                      TinyClassifier::Grads* grads,
                      Eigen::MatrixXd* feature_grads_through_grl) {
  if (part_classes.size() != domains.size())
    throw std::invalid_argument("part_classes size does not match domains");
  std::vector<double> weights(pooled.rows());
  for (int i = 0; i < static_cast<int>(pooled.rows()); ++i)
    weights[i] = cfg.weight(domains[i], part_classes[i]);
  return weighted_ce_mean(pooled, domains, weights, classifier, grads,
                          feature_grads_through_grl);
}

LossValue loss_QR_adv(const std::array<LayerInput, 3>& layers,
                      const std::array<const TinyClassifier*, 3>& classifiers,
                      const std::array<double, 3>& layer_weights) {
  LossValue out;
  out.empty_input = true;
  for (int l = 0; l < 3; ++l) {
    const LossValue v = loss_Q_adv(layers[l].pooled, layers[l].domains,
                                   *classifiers[l]);
    out.value += layer_weights[l] * v.value;
    out.empty_input = out.empty_input && v.empty_input;
  }
  return out;
}

LossValue loss_QRB_adv(const std::array<LayerInput, 3>& layers,
                       const std::array<const TinyClassifier*, 3>& classifiers,
                       const FocalConfig& cfg,
                       const std::array<double, 3>& layer_weights) {
  LossValue out;
  out.empty_input = true;
  for (int l = 0; l < 3; ++l) {
    const LossValue v =
        loss_QB_adv(layers[l].pooled, layers[l].domains, layers[l].part_classes,
                    cfg, *classifiers[l]);
    out.value += layer_weights[l] * v.value;
    out.empty_input = out.empty_input && v.empty_input;
  }
  return out;
}

double loss_semantic_ce(const Eigen::MatrixXd& logits,
                        const std::vector<int>& labels) {
  if (static_cast<int>(labels.size()) != logits.rows())
    throw std::invalid_argument("labels size does not match logits");
  if (labels.empty()) return 0.0;
  double total = 0.0;
  for (int i = 0; i < logits.rows(); ++i) {
    const Eigen::VectorXd z = logits.row(i).transpose();
    const double zmax = z.maxCoeff();
    total -= z(labels[i]) - zmax - std::log((z.array() - zmax).exp().sum());
  }
  return total / static_cast<double>(labels.size());
}

double loss_offset_l1(const std::vector<Vec3>& predicted_offsets,
                      const std::vector<Vec3>& target_offsets) {
  if (predicted_offsets.size() != target_offsets.size())
    throw std::invalid_argument("offset count mismatch");
  if (predicted_offsets.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < predicted_offsets.size(); ++i)
    total += (predicted_offsets[i] - target_offsets[i]).lpNorm<1>();
  return total / static_cast<double>(predicted_offsets.size());
}

double loss_score_regression(const std::vector<double>& predicted_scores,
                             const std::vector<double>& target_ious) {
  if (predicted_scores.size() != target_ious.size())
    throw std::invalid_argument("score count mismatch");
  if (predicted_scores.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < predicted_scores.size(); ++i) {
    const double d = predicted_scores[i] - target_ious[i];
    total += d * d;
  }
  return total / static_cast<double>(predicted_scores.size());
}

// ---------------------------------------------------------------------------
// Desk-scale demo.

namespace {

struct Sample {
  Eigen::VectorXd x;
  int part_class;  // 0-based
  int domain;      // 0-based
};

std::vector<Sample> make_synthetic(int n, int num_classes, int num_domains,
                                   std::mt19937_64& rng) {
  // Class and domain each get dedicated, linearly separable input dims.
  const int dim = num_classes + num_domains + 2;
  std::normal_distribution<double> noise(0.0, 0.3);
  std::uniform_int_distribution<int> pick_c(0, num_classes - 1);
  std::uniform_int_distribution<int> pick_d(0, num_domains - 1);
  std::vector<Sample> out(n);
  for (Sample& s : out) {
    s.part_class = pick_c(rng);
    s.domain = pick_d(rng);
    s.x = Eigen::VectorXd::Zero(dim);
    s.x(s.part_class) = 2.0;
    s.x(num_classes + s.domain) = 2.0;
    for (int j = 0; j < dim; ++j) s.x(j) += noise(rng);
  }
  return out;
}

// Feature extractor: two tanh layers plus a linear output. Taps after each
// layer provide the three "resolutions" for the multi-layer loss.
struct Extractor {
  Eigen::MatrixXd e1, e2, e3;
  Eigen::VectorXd c1, c2, c3;

  struct Activations {
    Eigen::VectorXd h1, h2, f;
  };
  Activations forward(const Eigen::VectorXd& x) const {
    Activations a;
    a.h1 = ((e1 * x) + c1).array().tanh();
    a.h2 = ((e2 * a.h1) + c2).array().tanh();
    a.f = e3 * a.h2 + c3;
    return a;
  }

  struct Grads {
    Eigen::MatrixXd e1, e2, e3;
    Eigen::VectorXd c1, c2, c3;
    void setZero(const Extractor& e) {
      e1 = Eigen::MatrixXd::Zero(e.e1.rows(), e.e1.cols());
      e2 = Eigen::MatrixXd::Zero(e.e2.rows(), e.e2.cols());
      e3 = Eigen::MatrixXd::Zero(e.e3.rows(), e.e3.cols());
      c1 = Eigen::VectorXd::Zero(e.c1.size());
      c2 = Eigen::VectorXd::Zero(e.c2.size());
      c3 = Eigen::VectorXd::Zero(e.c3.size());
    }
  };

  // Accumulates parameter gradients given upstream gradients at the three
  // taps (any may be zero-sized meaning zero).
  void backward(const Eigen::VectorXd& x, const Activations& a,
                const Eigen::VectorXd& df, const Eigen::VectorXd& dh2_tap,
                const Eigen::VectorXd& dh1_tap, Grads* g) const {
    g->e3 += df * a.h2.transpose();
    g->c3 += df;
    Eigen::VectorXd dh2 = e3.transpose() * df;
    if (dh2_tap.size()) dh2 += dh2_tap;
    const Eigen::VectorXd da2 =
        dh2.array() * (1.0 - a.h2.array() * a.h2.array());
    g->e2 += da2 * a.h1.transpose();
    g->c2 += da2;
    Eigen::VectorXd dh1 = e2.transpose() * da2;
    if (dh1_tap.size()) dh1 += dh1_tap;
    const Eigen::VectorXd da1 =
        dh1.array() * (1.0 - a.h1.array() * a.h1.array());
    g->e1 += da1 * x.transpose();
    g->c1 += da1;
  }

  void step(const Grads& g, double lr) {
    e1 -= lr * g.e1;
    c1 -= lr * g.c1;
    e2 -= lr * g.e2;
    c2 -= lr * g.c2;
    e3 -= lr * g.e3;
    c3 -= lr * g.c3;
  }

  static Extractor init_random(int in, int h1, int h2, int out,
                               std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto mat = [&](int r, int c) {
      const double s = 1.0 / std::sqrt(static_cast<double>(c));
      Eigen::MatrixXd m(r, c);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = s * gauss(rng);
      return m;
    };
    Extractor e;
    e.e1 = mat(h1, in);
    e.c1 = Eigen::VectorXd::Zero(h1);
    e.e2 = mat(h2, h1);
    e.c2 = Eigen::VectorXd::Zero(h2);
    e.e3 = mat(out, h2);
    e.c3 = Eigen::VectorXd::Zero(out);
    return e;
  }
};

// Multinomial logistic regression trained by full-batch gradient descent.
double linear_probe_accuracy(const std::vector<Eigen::VectorXd>& train_x,
                             const std::vector<int>& train_y,
                             const std::vector<Eigen::VectorXd>& test_x,
                             const std::vector<int>& test_y, int num_labels) {
  const int dim = static_cast<int>(train_x[0].size());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(num_labels, dim);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(num_labels);
  const double lr = 0.5;
  const int iters = 300;
  const double inv_n = 1.0 / static_cast<double>(train_x.size());
  for (int it = 0; it < iters; ++it) {
    Eigen::MatrixXd gw = Eigen::MatrixXd::Zero(num_labels, dim);
    Eigen::VectorXd gb = Eigen::VectorXd::Zero(num_labels);
    for (std::size_t i = 0; i < train_x.size(); ++i) {
      Eigen::VectorXd z = w * train_x[i] + b;
      z.array() -= z.maxCoeff();
      Eigen::VectorXd p = z.array().exp();
      p /= p.sum();
      p(train_y[i]) -= 1.0;
      gw += inv_n * p * train_x[i].transpose();
      gb += inv_n * p;
    }
    w -= lr * gw;
    b -= lr * gb;
  }
  int correct = 0;
  for (std::size_t i = 0; i < test_x.size(); ++i) {
    int pred;
    (w * test_x[i] + b).maxCoeff(&pred);
    correct += pred == test_y[i];
  }
  return static_cast<double>(correct) / static_cast<double>(test_x.size());
}

}  // namespace

AdvDemoReport adv_demo_train(const AdvDemoConfig& cfg) {
  if (cfg.num_domains < 2)
    throw std::invalid_argument("adversarial demo needs >= 2 domains");
  if (cfg.num_classes < 2)
    throw std::invalid_argument("adversarial demo needs >= 2 part classes");
  if (cfg.epochs < 0) throw std::invalid_argument("negative epoch count");

  std::mt19937_64 rng(cfg.seed);
  const auto train = make_synthetic(cfg.train_samples, cfg.num_classes,
                                    cfg.num_domains, rng);
  const auto test =
      make_synthetic(cfg.test_samples, cfg.num_classes, cfg.num_domains, rng);

  const int in_dim = static_cast<int>(train[0].x.size());
  const int h1 = 16, h2 = 16, feat = 8;
  Extractor ext = Extractor::init_random(in_dim, h1, h2, feat, rng);
  std::array<TinyClassifier, 3> dom = {
      TinyClassifier::init_random(h1, 16, cfg.num_domains, rng(), cfg.grl_lambda),
      TinyClassifier::init_random(h2, 16, cfg.num_domains, rng(), cfg.grl_lambda),
      TinyClassifier::init_random(feat, 16, cfg.num_domains, rng(), cfg.grl_lambda)};
  // Task head: linear softmax classifier over final features.
  TinyClassifier task =
      TinyClassifier::init_random(feat, 16, cfg.num_classes, rng(), 0.0);

  FocalConfig focal =
      FocalConfig::uniform(cfg.num_domains, cfg.num_classes, cfg.gamma);
  // Start from a neutral accuracy estimate so early focal weights are not
  // saturated at alpha.
  for (auto& [k, v] : focal.acc) v = 1.0 / cfg.num_domains;

  AdvDemoReport report;

  auto evaluate = [&](const std::vector<Sample>& data, double* task_acc,
                      double* dom_acc) {
    int tc = 0, dc = 0;
    for (const Sample& s : data) {
      const auto a = ext.forward(s.x);
      int pred;
      task.logits(a.f).maxCoeff(&pred);
      tc += pred == s.part_class;
      dom[2].logits(a.f).maxCoeff(&pred);
      dc += pred == s.domain;
    }
    if (task_acc) *task_acc = static_cast<double>(tc) / data.size();
    if (dom_acc) *dom_acc = static_cast<double>(dc) / data.size();
  };

  std::vector<int> perm(train.size());
  std::iota(perm.begin(), perm.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), rng);
    double epoch_qrb = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < perm.size();
         start += cfg.batch_size, ++batches) {
      const std::size_t stop = std::min(perm.size(), start + cfg.batch_size);
      const double inv_b = 1.0 / static_cast<double>(stop - start);

      Extractor::Grads ge;
      ge.setZero(ext);
      std::array<TinyClassifier::Grads, 3> gd;
      for (int l = 0; l < 3; ++l) gd[l].setZero(dom[l]);
      TinyClassifier::Grads gt;
      gt.setZero(task);

      double batch_qrb = 0.0;
      std::map<std::pair<int, int>, std::pair<int, int>> dp_hits;  // correct, total
      for (std::size_t bi = start; bi < stop; ++bi) {
        const Sample& s = train[perm[bi]];
        const auto a = ext.forward(s.x);
        const std::array<const Eigen::VectorXd*, 3> taps = {&a.h1, &a.h2, &a.f};

        // Task loss on final features.
        Eigen::VectorXd df;
        task.ce_loss(a.f, s.part_class, inv_b, &gt, &df);

        // Adversarial losses at the three taps. The classifier descends its
        // CE; the extractor receives the GRL-reversed gradient.
        std::array<Eigen::VectorXd, 3> tap_grads;
        const double w_focal = focal.weight(s.domain, s.part_class);
        for (int l = 0; l < 3; ++l) {
          const double w =
              cfg.cls_loss_weight * cfg.layer_weights[l] * w_focal * inv_b;
          Eigen::VectorXd dx;
          batch_qrb += dom[l].ce_loss(*taps[l], s.domain, w, &gd[l], &dx);
          tap_grads[l] = grl_backward(dx, cfg.grl_lambda);
        }
        df += tap_grads[2];
        ext.backward(s.x, a, df, tap_grads[1], tap_grads[0], &ge);

        int pred;
        dom[2].logits(a.f).maxCoeff(&pred);
        auto& hits = dp_hits[{s.domain, s.part_class}];
        hits.first += pred == s.domain;
        hits.second += 1;
      }
      ext.step(ge, cfg.lr);
      for (int l = 0; l < 3; ++l) dom[l].step(gd[l], cfg.lr);
      task.step(gt, cfg.lr);
      for (const auto& [key, hits] : dp_hits)
        focal.update_acc(key.first, key.second,
                         static_cast<double>(hits.first) / hits.second);
      epoch_qrb += batch_qrb / cfg.cls_loss_weight;  // report the raw QRB value
    }
    AdvDemoEpoch ep;
    ep.qrb_loss = epoch_qrb / std::max(1, batches);
    evaluate(train, &ep.task_acc, &ep.domain_acc);
    report.epochs.push_back(ep);
  }

  // Frozen-feature linear probe for residual domain information.
  std::vector<Eigen::VectorXd> ftr, fte;
  std::vector<int> dtr, dte;
  for (const Sample& s : train) {
    ftr.push_back(ext.forward(s.x).f);
    dtr.push_back(s.domain);
  }
  for (const Sample& s : test) {
    fte.push_back(ext.forward(s.x).f);
    dte.push_back(s.domain);
  }
  report.probe_domain_acc =
      linear_probe_accuracy(ftr, dtr, fte, dte, cfg.num_domains);
  evaluate(test, &report.final_task_acc, nullptr);
  return report;
}

}  // namespace gapart
