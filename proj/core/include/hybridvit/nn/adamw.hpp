#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

namespace hybridvit::nn {

struct AdamWOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 5e-2;
};

/// Adam with decoupled weight decay.
///
/// Parameters that do not require gradients, or that received no gradient
/// this step, are left untouched (no decay either), so frozen tensors keep
/// their exact bytes.
class AdamW {
 public:
  using NamedTensor = std::pair<std::string, torch::Tensor>;

  AdamW(std::vector<NamedTensor> params, AdamWOptions options);

  void zero_grad();
  void step();

  double lr() const noexcept { return options_.lr; }
  void set_lr(double lr) { options_.lr = lr; }
  const AdamWOptions& options() const noexcept { return options_; }
  int64_t step_count() const noexcept { return steps_; }

  /// Moments as named tensors (`exp_avg.<name>`, `exp_avg_sq.<name>`),
  /// plus per-parameter step counters in `steps.<name>`.
  std::vector<NamedTensor> state() const;
  void load_state(const std::vector<NamedTensor>& tensors, int64_t step_count);

 private:
  struct Slot {
    std::string name;
    torch::Tensor param;
    torch::Tensor exp_avg;
    torch::Tensor exp_avg_sq;
    int64_t steps = 0;
  };
  std::vector<Slot> slots_;
  AdamWOptions options_;
  int64_t steps_ = 0;
};

}  // namespace hybridvit::nn
