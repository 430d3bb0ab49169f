#pragma once

#include <Eigen/Dense>
#include <vector>

#include "graphbd/graph.hpp"
#include "graphbd/model.hpp"

namespace graphbd {

// Adam with bias correction; step() applies one update in place.
class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8);
  void step(std::vector<Eigen::MatrixXd>& params,
            const std::vector<Eigen::MatrixXd>& grads);

 private:
  double lr_, beta1_, beta2_, eps_;
  int steps_ = 0;
  std::vector<Eigen::MatrixXd> m_, v_;
};

struct TrainResult {
  std::vector<double> loss_history;  // one mean cross-entropy value per epoch
};

// Whole-graph minibatch training on every graph in `data`, driven by the
// model's own config (epochs, batch size, learning rate, seed).
TrainResult train(GnnModel& model, const GraphDataset& data);

// Transductive node training: the full graph is visible every step, the loss
// covers train-mask nodes only.
TrainResult train(GnnModel& model, const NodeTaskDataset& data);

}  // namespace graphbd
