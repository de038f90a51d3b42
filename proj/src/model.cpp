#include "styloforge/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <vector>

#include <json.hpp>

#include "styloforge/error.hpp"

namespace styloforge {

using nlohmann::json;

ModelParams init_params(int vocab_size, int dim, int out_dim, uint64_t seed) {
  if (vocab_size < 1 || dim < 2 || out_dim < 2)
    raise(ErrorCode::BadDims, "need vocab_size >= 1 and dims >= 2");

  std::mt19937_64 rng(seed);
  ModelParams p;
  p.embedding.resize(vocab_size, dim);
  p.projection.resize(out_dim, dim);
  p.bias = Vec::Zero(out_dim);

  const double e_bound = 1.0 / std::sqrt(static_cast<double>(dim));
  const double w_bound = 1.0 / std::sqrt(static_cast<double>(out_dim));
  std::uniform_real_distribution<double> e_draw(-e_bound, e_bound);
  std::uniform_real_distribution<double> w_draw(-w_bound, w_bound);
  // row-major fill order so a seed pins the exact parameter bytes
  for (int r = 0; r < p.embedding.rows(); ++r)
    for (int c = 0; c < p.embedding.cols(); ++c) p.embedding(r, c) = e_draw(rng);
  for (int r = 0; r < p.projection.rows(); ++r)
    for (int c = 0; c < p.projection.cols(); ++c) p.projection(r, c) = w_draw(rng);
  return p;
}

Vec encode_document(const ModelParams& params, const TokenSeq& seq) {
  if (seq.ids.empty()) raise(ErrorCode::EmptyText, "cannot encode an empty token sequence");

  Vec pooled = Vec::Zero(params.dim());
  for (int id : seq.ids) {
    if (id < 0 || id >= params.vocab_size())
      raise(ErrorCode::TokenOutOfRange,
            "token id " + std::to_string(id) + " >= V=" + std::to_string(params.vocab_size()));
    pooled += params.embedding.row(id).transpose();
  }
  pooled /= static_cast<double>(seq.ids.size());

  Vec v = params.projection * pooled + params.bias;
  double norm = v.norm();
  if (norm < 1e-12)
    raise(ErrorCode::DegenerateEmbedding, "pre-normalization vector has near-zero norm");
  return v / norm;
}

namespace {

constexpr char kCheckpointMagic[4] = {'M', 'A', 'R', 'C'};
constexpr uint32_t kCheckpointVersion = 1;

void write_u32(std::ofstream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t read_u32(std::ifstream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_f32_rowmajor(std::ofstream& out, const Mat& m) {
  std::vector<float> buf(static_cast<size_t>(m.rows()) * m.cols());
  size_t k = 0;
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) buf[k++] = static_cast<float>(m(r, c));
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

void write_f32_vec(std::ofstream& out, const Vec& v) {
  std::vector<float> buf(static_cast<size_t>(v.size()));
  for (int i = 0; i < v.size(); ++i) buf[i] = static_cast<float>(v(i));
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

void read_f32_rowmajor(std::ifstream& in, Mat& m) {
  std::vector<float> buf(static_cast<size_t>(m.rows()) * m.cols());
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  size_t k = 0;
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) m(r, c) = static_cast<double>(buf[k++]);
}

void read_f32_vec(std::ifstream& in, Vec& v) {
  std::vector<float> buf(static_cast<size_t>(v.size()));
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  for (int i = 0; i < v.size(); ++i) v(i) = static_cast<double>(buf[i]);
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path,
                     const CheckpointMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorCode::IoError, "cannot write checkpoint " + path);
  out.write(kCheckpointMagic, 4);
  write_u32(out, kCheckpointVersion);
  write_u32(out, static_cast<uint32_t>(params.vocab_size()));
  write_u32(out, static_cast<uint32_t>(params.dim()));
  write_u32(out, static_cast<uint32_t>(params.out_dim()));
  write_f32_rowmajor(out, params.embedding);
  write_f32_rowmajor(out, params.projection);
  write_f32_vec(out, params.bias);
  if (!out) raise(ErrorCode::IoError, "short write on checkpoint " + path);

  json sidecar = {{"step", meta.step}, {"val_loss", meta.val_loss},
                  {"config_hash", meta.config_hash}};
  std::ofstream side(path + ".json", std::ios::binary);
  if (!side) raise(ErrorCode::IoError, "cannot write checkpoint sidecar " + path + ".json");
  side << sidecar.dump(2) << '\n';
}

ModelParams load_checkpoint(const std::string& path, CheckpointMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::IoError, "cannot open checkpoint " + path);
  char magic[4] = {};
  in.read(magic, 4);
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0)
    raise(ErrorCode::FormatError, "bad checkpoint magic in " + path);
  uint32_t version = read_u32(in);
  if (version != kCheckpointVersion)
    raise(ErrorCode::FormatError, "unsupported checkpoint version " + std::to_string(version));
  uint32_t v = read_u32(in), d = read_u32(in), o = read_u32(in);

  ModelParams params;
  params.embedding.resize(v, d);
  params.projection.resize(o, d);
  params.bias.resize(o);
  read_f32_rowmajor(in, params.embedding);
  read_f32_rowmajor(in, params.projection);
  read_f32_vec(in, params.bias);
  if (!in) raise(ErrorCode::FormatError, "truncated checkpoint " + path);

  if (meta) {
    std::ifstream side(path + ".json", std::ios::binary);
    if (side) {
      json obj;
      try {
        side >> obj;
        meta->step = obj.value("step", 0LL);
        meta->val_loss = obj.value("val_loss", 0.0);
        meta->config_hash = obj.value("config_hash", std::string());
      } catch (const json::exception&) {
        raise(ErrorCode::FormatError, "bad checkpoint sidecar " + path + ".json");
      }
    }
  }
  return params;
}

}  // namespace styloforge
