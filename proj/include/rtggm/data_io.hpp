#pragma once

#include <string>
#include <variant>
#include <vector>

#include "rtggm/model.hpp"

namespace rtggm {

// In-memory dataset: one example per row. Count data stores dense count
// vectors over the vocabulary.
struct DataBatch {
  Kind kind = Kind::Real;
  Eigen::MatrixXd rows;

  Eigen::Index size() const { return rows.rows(); }
  Eigen::Index dim() const { return rows.cols(); }
  Eigen::VectorXd example(Eigen::Index i) const { return rows.row(i).transpose(); }
};

// IDX (ubyte) reader: magic 0x00 0x00 0x08 <ndims>, big-endian u32 dims,
// then raw bytes. Values are scaled to [0,1]. Items become rows; remaining
// dimensions are flattened. Errors carry the byte offset.
DataBatch load_idx(const std::string& path);

// Bag-of-words text reader: one document per line of `word:count` pairs
// separated by whitespace; word ids are 0-based and must be < vocab.
// Errors carry the 1-based line number.
DataBatch load_bow(const std::string& path, int vocab);

// Comma-separated numeric reader: one example per line, consistent column
// count. Errors carry the 1-based line number.
DataBatch load_csv(const std::string& path);

// Copy with entries thresholded to {0,1} (x >= threshold -> 1).
DataBatch binarize(const DataBatch& batch, double threshold = 0.5);

// Per-layer initialization maps for a feed-forward rectified-linear network:
// weights[l] is (hidden x visible) and biases[l] has the hidden width.
struct ReluInit {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Checkpoint container (binary, little-endian, magic "RTGM", version 1).
// Record tags: 0 = single model, 1 = deep stack, 2 = rectifier init maps.
// Floating-point arrays round-trip bit-exactly.
using Checkpoint = std::variant<ModelParams, DeepModel, ReluInit>;

void save_checkpoint(const std::string& path, const ModelParams& model);
void save_checkpoint(const std::string& path, const DeepModel& deep);
void save_checkpoint(const std::string& path, const ReluInit& relu);

// Reads any record type; validates models on load (rejects d <= 0 etc.) and
// reports truncation with the byte offset at which the file ran out.
Checkpoint load_checkpoint(const std::string& path);

// Typed loaders; throw if the file holds a different record type.
ModelParams load_model(const std::string& path);
DeepModel load_deep(const std::string& path);
ReluInit load_relu_init(const std::string& path);

}  // namespace rtggm
