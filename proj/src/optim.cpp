#include "styloforge/optim.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "styloforge/error.hpp"

namespace styloforge {

OptState init_opt_state(const ModelParams& params, const AdamHyper& hyper) {
  if (!(hyper.beta1 > 0.0 && hyper.beta1 < 1.0 && hyper.beta2 > 0.0 && hyper.beta2 < 1.0))
    raise(ErrorCode::ConfigError, "optim betas must lie in (0,1)");
  OptState s;
  s.m_embedding = Mat::Zero(params.embedding.rows(), params.embedding.cols());
  s.v_embedding = Mat::Zero(params.embedding.rows(), params.embedding.cols());
  s.m_projection = Mat::Zero(params.projection.rows(), params.projection.cols());
  s.v_projection = Mat::Zero(params.projection.rows(), params.projection.cols());
  s.m_bias = Vec::Zero(params.bias.size());
  s.v_bias = Vec::Zero(params.bias.size());
  s.hyper = hyper;
  return s;
}

double wsd_lr(const WsdSchedule& sched, long long step) {
  if (step < 0 || step > sched.total_steps)
    raise(ErrorCode::StepOutOfRange,
          "step " + std::to_string(step) + " outside [0, " + std::to_string(sched.total_steps) + "]");
  if (sched.warmup_steps + sched.decay_steps > sched.total_steps)
    raise(ErrorCode::ConfigError, "warmup + decay exceed total steps");

  if (sched.warmup_steps > 0 && step <= sched.warmup_steps)
    return sched.lr_peak * static_cast<double>(step) / static_cast<double>(sched.warmup_steps);
  const long long decay_start = sched.total_steps - sched.decay_steps;
  if (sched.decay_steps > 0 && step > decay_start)
    return sched.lr_peak * static_cast<double>(sched.total_steps - step) /
           static_cast<double>(sched.decay_steps);
  return sched.lr_peak;
}

namespace {

template <typename Dense>
void adamw_update(Dense& theta, Dense& m, Dense& v, const Dense& g, const AdamHyper& h,
                  long long t, double lr, bool decay) {
  if (theta.rows() != g.rows() || theta.cols() != g.cols())
    raise(ErrorCode::ShapeMismatch, "gradient shape does not match parameters");
  if (!g.allFinite()) raise(ErrorCode::NonFiniteGradient, "non-finite gradient entry");
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
  m = h.beta1 * m + (1.0 - h.beta1) * g;
  v.array() = h.beta2 * v.array() + (1.0 - h.beta2) * g.array().square();
  // decay is decoupled and computed against the incoming parameters
  const double keep = decay ? 1.0 - lr * h.weight_decay : 1.0;
  theta.array() =
      keep * theta.array() - lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + h.eps);
}

}  // namespace

void adamw_step(OptState& state, ModelParams& params, const ParamGrads& grads, double lr) {
  if (lr < 0.0) raise(ErrorCode::ConfigError, "learning rate must be >= 0");
  state.t += 1;
  adamw_update(params.embedding, state.m_embedding, state.v_embedding, grads.d_embedding,
               state.hyper, state.t, lr, /*decay=*/true);
  adamw_update(params.projection, state.m_projection, state.v_projection, grads.d_projection,
               state.hyper, state.t, lr, /*decay=*/true);
  adamw_update(params.bias, state.m_bias, state.v_bias, grads.d_bias, state.hyper, state.t, lr,
               /*decay=*/false);
}

namespace {

constexpr char kOptMagic[4] = {'M', 'O', 'P', 'T'};
constexpr uint32_t kOptVersion = 1;

void write_u32(std::ofstream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u64(std::ofstream& out, uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
uint32_t read_u32(std::ifstream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
uint64_t read_u64(std::ifstream& in) {
  uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_mat(std::ofstream& out, const Mat& m) {
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) {
      float f = static_cast<float>(m(r, c));
      out.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
}
void write_vec(std::ofstream& out, const Vec& v) {
  for (int i = 0; i < v.size(); ++i) {
    float f = static_cast<float>(v(i));
    out.write(reinterpret_cast<const char*>(&f), sizeof(f));
  }
}
void read_mat(std::ifstream& in, Mat& m) {
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) {
      float f = 0;
      in.read(reinterpret_cast<char*>(&f), sizeof(f));
      m(r, c) = static_cast<double>(f);
    }
}
void read_vec(std::ifstream& in, Vec& v) {
  for (int i = 0; i < v.size(); ++i) {
    float f = 0;
    in.read(reinterpret_cast<char*>(&f), sizeof(f));
    v(i) = static_cast<double>(f);
  }
}

}  // namespace

void save_opt_state(const OptState& state, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoError, "cannot write optimizer state " + path);
  out.write(kOptMagic, 4);
  write_u32(out, kOptVersion);
  write_u32(out, static_cast<uint32_t>(state.m_embedding.rows()));
  write_u32(out, static_cast<uint32_t>(state.m_embedding.cols()));
  write_u32(out, static_cast<uint32_t>(state.m_projection.rows()));
  write_u64(out, static_cast<uint64_t>(state.t));
  write_mat(out, state.m_embedding);
  write_mat(out, state.m_projection);
  write_vec(out, state.m_bias);
  write_mat(out, state.v_embedding);
  write_mat(out, state.v_projection);
  write_vec(out, state.v_bias);
  if (!out) raise(ErrorCode::IoError, "short write on optimizer state " + path);
}

OptState load_opt_state(const std::string& path, const AdamHyper& hyper) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoError, "cannot open optimizer state " + path);
  char magic[4] = {};
  in.read(magic, 4);
  if (std::memcmp(magic, kOptMagic, 4) != 0)
    raise(ErrorCode::FormatError, "bad optimizer-state magic in " + path);
  if (read_u32(in) != kOptVersion)
    raise(ErrorCode::FormatError, "unsupported optimizer-state version");
  uint32_t v = read_u32(in), d = read_u32(in), o = read_u32(in);
  OptState s;
  s.hyper = hyper;
  s.t = static_cast<long long>(read_u64(in));
  s.m_embedding.resize(v, d);
  s.m_projection.resize(o, d);
  s.m_bias.resize(o);
  s.v_embedding.resize(v, d);
  s.v_projection.resize(o, d);
  s.v_bias.resize(o);
  read_mat(in, s.m_embedding);
  read_mat(in, s.m_projection);
  read_vec(in, s.m_bias);
  read_mat(in, s.v_embedding);
  read_mat(in, s.v_projection);
  read_vec(in, s.v_bias);
  if (!in) raise(ErrorCode::FormatError, "truncated optimizer state " + path);
  return s;
}

}  // namespace styloforge
