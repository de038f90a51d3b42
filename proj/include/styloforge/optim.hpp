#pragma once

#include <string>

#include "styloforge/dense.hpp"
#include "styloforge/model.hpp"
#include "styloforge/objective.hpp"

namespace styloforge {

struct AdamHyper {
  double lr_peak = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// AdamW moment accumulators shaped like ModelParams plus the step counter.
struct OptState {
  Mat m_embedding, v_embedding;
  Mat m_projection, v_projection;
  Vec m_bias, v_bias;
  long long t = 0;
  AdamHyper hyper;
};

OptState init_opt_state(const ModelParams& params, const AdamHyper& hyper);

/// Warmup-stable-decay schedule: linear ramp over the first warmup_steps,
/// flat peak, linear ramp down over the last decay_steps.
struct WsdSchedule {
  long long total_steps = 0;
  long long warmup_steps = 0;
  long long decay_steps = 0;
  double lr_peak = 1e-4;
};

double wsd_lr(const WsdSchedule& sched, long long step);

/// One decoupled-weight-decay Adam update. Decay applies to embedding and
/// projection but not the bias.
void adamw_step(OptState& state, ModelParams& params, const ParamGrads& grads, double lr);

/// Resume file: magic "MOPT", u32 version=1, u32 V, u32 d, u32 o, u64 t,
/// then m and v for embedding/projection/bias as row-major f32.
void save_opt_state(const OptState& state, const std::string& path);
OptState load_opt_state(const std::string& path, const AdamHyper& hyper);

}  // namespace styloforge
