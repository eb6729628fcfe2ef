#include "rtggm/data_io.hpp"

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rtggm {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class ByteReader {
 public:
  ByteReader(std::string data, std::string origin)
      : data_(std::move(data)), origin_(std::move(origin)) {}

  const unsigned char* take(std::size_t k, const char* what) {
    if (pos_ + k > data_.size()) {
      std::ostringstream os;
      os << origin_ << ": truncated at byte " << data_.size() << " (needed " << k
         << " bytes for " << what << " at offset " << pos_ << ")";
      fail(os.str());
    }
    const auto* p = reinterpret_cast<const unsigned char*>(data_.data()) + pos_;
    pos_ += k;
    return p;
  }

  std::uint8_t u8(const char* what) { return *take(1, what); }

  std::uint16_t u16le(const char* what) {
    const auto* p = take(2, what);
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }

  std::uint32_t u32le(const char* what) {
    const auto* p = take(4, what);
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
  }

  std::uint32_t u32be(const char* what) {
    const auto* p = take(4, what);
    return (static_cast<std::uint32_t>(p[0]) << 24) |
           (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
  }

  double f64le(const char* what) {
    const auto* p = take(8, what);
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
    return std::bit_cast<double>(bits);
  }

  void read_f64_block(double* out, std::size_t count, const char* what) {
    for (std::size_t i = 0; i < count; ++i) out[i] = f64le(what);
  }

  bool at_end() const { return pos_ == data_.size(); }
  std::size_t pos() const { return pos_; }
  std::size_t size() const { return data_.size(); }
  const std::string& origin() const { return origin_; }

 private:
  std::string data_;
  std::string origin_;
  std::size_t pos_ = 0;
};

class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16le(std::uint16_t v) {
    buf_.push_back(static_cast<char>(v & 0xff));
    buf_.push_back(static_cast<char>((v >> 8) & 0xff));
  }
  void u32le(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f64le(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  }
  void raw(const char* p, std::size_t k) { buf_.append(p, k); }

  void write_to(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("cannot open " + path + " for writing");
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) fail("failed writing " + path);
  }

 private:
  std::string buf_;
};

constexpr char kMagic[4] = {'R', 'T', 'G', 'M'};
constexpr std::uint32_t kVersion = 1;

void write_header(ByteWriter& w, std::uint8_t tag) {
  w.raw(kMagic, 4);
  w.u32le(kVersion);
  w.u8(tag);
}

void write_model_record(ByteWriter& w, const ModelParams& model) {
  const auto n = static_cast<std::uint32_t>(model.n());
  const auto m = static_cast<std::uint32_t>(model.m());
  w.u8(static_cast<std::uint8_t>(model.kind));
  w.u32le(model.kind == Kind::Count ? n : 0u);
  w.u32le(n);
  w.u32le(m);
  for (Eigen::Index i = 0; i < model.W.rows(); ++i)
    for (Eigen::Index j = 0; j < model.W.cols(); ++j) w.f64le(model.W(i, j));
  for (Eigen::Index i = 0; i < model.a.size(); ++i) w.f64le(model.a[i]);
  for (Eigen::Index j = 0; j < model.d.size(); ++j) w.f64le(model.d[j]);
  for (Eigen::Index i = 0; i < model.b.size(); ++i) w.f64le(model.b[i]);
  for (Eigen::Index j = 0; j < model.c.size(); ++j) w.f64le(model.c[j]);
}

ModelParams read_model_record(ByteReader& r) {
  ModelParams model;
  const std::uint8_t kind = r.u8("kind");
  if (kind > 4) fail(r.origin() + ": unknown model kind byte " + std::to_string(kind));
  model.kind = static_cast<Kind>(kind);
  const std::uint32_t vocab = r.u32le("vocab");
  const std::uint32_t n = r.u32le("n");
  const std::uint32_t m = r.u32le("m");
  if (n == 0 || m == 0) fail(r.origin() + ": zero model dimension");
  if (model.kind == Kind::Count && vocab != n)
    fail(r.origin() + ": count model vocab field does not match n");
  if (model.kind != Kind::Count && vocab != 0)
    fail(r.origin() + ": nonzero vocab field for non-count kind");
  model.W.resize(n, m);
  model.a.resize(n);
  model.d.resize(m);
  model.b.resize(n);
  model.c.resize(m);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < m; ++j) model.W(i, j) = r.f64le("W");
  r.read_f64_block(model.a.data(), n, "a");
  r.read_f64_block(model.d.data(), m, "d");
  r.read_f64_block(model.b.data(), n, "b");
  r.read_f64_block(model.c.data(), m, "c");
  try {
    model.validate();
  } catch (const std::exception& e) {
    fail(r.origin() + ": invalid model record: " + e.what());
  }
  return model;
}

}  // namespace

DataBatch load_idx(const std::string& path) {
  ByteReader r(read_file(path), path);
  const auto* magic = r.take(4, "magic");
  if (magic[0] != 0 || magic[1] != 0) fail(path + ": bad magic (not an idx file)");
  if (magic[2] != 0x08) fail(path + ": unsupported idx element type (only ubyte supported)");
  const int ndims = magic[3];
  if (ndims < 1 || ndims > 4) fail(path + ": unsupported idx rank");
  std::uint64_t items = 0, row = 1;
  for (int k = 0; k < ndims; ++k) {
    const std::uint32_t dim = r.u32be("dimension size");
    if (k == 0)
      items = dim;
    else
      row *= dim;
  }
  if (ndims == 1) row = 1;
  const auto* bytes = r.take(items * row, "pixel data");
  if (!r.at_end()) fail(path + ": trailing bytes after pixel data");
  DataBatch batch;
  batch.kind = Kind::Real;
  batch.rows.resize(static_cast<Eigen::Index>(items), static_cast<Eigen::Index>(row));
  for (std::uint64_t i = 0; i < items; ++i)
    for (std::uint64_t j = 0; j < row; ++j)
      batch.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          static_cast<double>(bytes[i * row + j]) / 255.0;
  return batch;
}

DataBatch load_bow(const std::string& path, int vocab) {
  if (vocab < 1) throw std::invalid_argument("load_bow: vocab must be >= 1");
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  std::vector<Eigen::VectorXd> docs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(vocab);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        fail(path + ":" + std::to_string(lineno) + ": expected word:count, got '" + tok + "'");
      int word = -1;
      long count = -1;
      try {
        std::size_t used = 0;
        word = std::stoi(tok.substr(0, colon), &used);
        if (used != colon) throw std::invalid_argument("");
        const std::string cs = tok.substr(colon + 1);
        count = std::stol(cs, &used);
        if (used != cs.size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        fail(path + ":" + std::to_string(lineno) + ": malformed pair '" + tok + "'");
      }
      if (word < 0 || word >= vocab)
        fail(path + ":" + std::to_string(lineno) + ": word id " + std::to_string(word) +
             " outside vocabulary of size " + std::to_string(vocab));
      if (count < 0)
        fail(path + ":" + std::to_string(lineno) + ": negative count");
      x[word] += static_cast<double>(count);
    }
    docs.push_back(std::move(x));
  }
  DataBatch batch;
  batch.kind = Kind::Count;
  batch.rows.resize(static_cast<Eigen::Index>(docs.size()), vocab);
  for (std::size_t i = 0; i < docs.size(); ++i)
    batch.rows.row(static_cast<Eigen::Index>(i)) = docs[i].transpose();
  return batch;
}

DataBatch load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
          ++used;
        if (used != cell.size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        fail(path + ":" + std::to_string(lineno) + ": not a number: '" + cell + "'");
      }
    }
    if (row.empty()) fail(path + ":" + std::to_string(lineno) + ": empty row");
    if (width == 0)
      width = row.size();
    else if (row.size() != width)
      fail(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(width) +
           " columns, got " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(path + ": no data rows");
  DataBatch batch;
  batch.kind = Kind::Real;
  batch.rows.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j)
      batch.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return batch;
}

DataBatch binarize(const DataBatch& batch, double threshold) {
  DataBatch out;
  out.kind = Kind::Binary;
  out.rows = (batch.rows.array() >= threshold).cast<double>();
  return out;
}

void save_checkpoint(const std::string& path, const ModelParams& model) {
  model.validate();
  ByteWriter w;
  write_header(w, 0);
  write_model_record(w, model);
  w.write_to(path);
}

void save_checkpoint(const std::string& path, const DeepModel& deep) {
  deep.validate();
  if (deep.layers.size() > 0xffff) fail("too many layers");
  ByteWriter w;
  write_header(w, 1);
  w.u16le(static_cast<std::uint16_t>(deep.layers.size()));
  for (const auto& layer : deep.layers) write_model_record(w, layer);
  w.write_to(path);
}

void save_checkpoint(const std::string& path, const ReluInit& relu) {
  if (relu.weights.size() != relu.biases.size())
    throw std::invalid_argument("relu init: weights/biases layer count mismatch");
  if (relu.weights.empty()) throw std::invalid_argument("relu init: no layers");
  ByteWriter w;
  write_header(w, 2);
  w.u16le(static_cast<std::uint16_t>(relu.weights.size()));
  for (std::size_t l = 0; l < relu.weights.size(); ++l) {
    const auto& wt = relu.weights[l];
    const auto& bs = relu.biases[l];
    if (bs.size() != wt.rows())
      throw std::invalid_argument("relu init: bias width does not match weight rows");
    w.u32le(static_cast<std::uint32_t>(wt.rows()));
    w.u32le(static_cast<std::uint32_t>(wt.cols()));
    for (Eigen::Index i = 0; i < wt.rows(); ++i)
      for (Eigen::Index j = 0; j < wt.cols(); ++j) w.f64le(wt(i, j));
    for (Eigen::Index i = 0; i < bs.size(); ++i) w.f64le(bs[i]);
  }
  w.write_to(path);
}

Checkpoint load_checkpoint(const std::string& path) {
  ByteReader r(read_file(path), path);
  const auto* magic = r.take(4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) fail(path + ": bad magic (not a checkpoint)");
  const std::uint32_t version = r.u32le("version");
  if (version != kVersion)
    fail(path + ": unsupported checkpoint version " + std::to_string(version));
  const std::uint8_t tag = r.u8("record tag");
  Checkpoint out;
  switch (tag) {
    case 0:
      out = read_model_record(r);
      break;
    case 1: {
      DeepModel deep;
      const std::uint16_t layers = r.u16le("layer count");
      if (layers == 0) fail(path + ": deep record with zero layers");
      deep.layers.reserve(layers);
      for (std::uint16_t l = 0; l < layers; ++l) deep.layers.push_back(read_model_record(r));
      try {
        deep.validate();
      } catch (const std::exception& e) {
        fail(path + ": invalid deep record: " + e.what());
      }
      out = std::move(deep);
      break;
    }
    case 2: {
      ReluInit relu;
      const std::uint16_t layers = r.u16le("layer count");
      if (layers == 0) fail(path + ": rectifier-init record with zero layers");
      for (std::uint16_t l = 0; l < layers; ++l) {
        const std::uint32_t rows = r.u32le("weight rows");
        const std::uint32_t cols = r.u32le("weight cols");
        if (rows == 0 || cols == 0) fail(path + ": zero layer dimension");
        Eigen::MatrixXd wt(rows, cols);
        for (std::uint32_t i = 0; i < rows; ++i)
          for (std::uint32_t j = 0; j < cols; ++j) wt(i, j) = r.f64le("weight");
        Eigen::VectorXd bs(rows);
        r.read_f64_block(bs.data(), rows, "bias");
        relu.weights.push_back(std::move(wt));
        relu.biases.push_back(std::move(bs));
      }
      out = std::move(relu);
      break;
    }
    default:
      fail(path + ": unknown record tag " + std::to_string(tag));
  }
  if (!r.at_end())
    fail(path + ": trailing bytes at offset " + std::to_string(r.pos()));
  return out;
}

ModelParams load_model(const std::string& path) {
  Checkpoint cp = load_checkpoint(path);
  if (auto* m = std::get_if<ModelParams>(&cp)) return std::move(*m);
  fail(path + ": checkpoint does not hold a single model record");
}

DeepModel load_deep(const std::string& path) {
  Checkpoint cp = load_checkpoint(path);
  if (auto* d = std::get_if<DeepModel>(&cp)) return std::move(*d);
  fail(path + ": checkpoint does not hold a deep stack record");
}

ReluInit load_relu_init(const std::string& path) {
  Checkpoint cp = load_checkpoint(path);
  if (auto* r = std::get_if<ReluInit>(&cp)) return std::move(*r);
  fail(path + ": checkpoint does not hold a rectifier-init record");
}

}  // namespace rtggm
