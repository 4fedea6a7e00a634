#ifndef XLQA_TEXT_EMBEDDING_H_
#define XLQA_TEXT_EMBEDDING_H_

#include <string>
#include <unordered_map>
#include <vector>

#include "xlqa/autodiff/tensor.h"
#include "xlqa/text/vocab.h"

namespace xlqa::text {

using VectorMap = std::unordered_map<std::string, std::vector<ad::Real>>;

// Pretrained word vectors: one row per vocabulary id, pad and unk rows zero.
struct EmbeddingTable {
  ad::Tensor matrix;  // [V, d]
  bool frozen = true;

  std::size_t rows() const { return matrix.dim(0); }
  std::size_t dim() const { return matrix.dim(1); }
  std::span<const ad::Real> row(int id) const {
    return matrix.values().subspan(static_cast<std::size_t>(id) * dim(), dim());
  }
};

struct EmbeddingBuild {
  EmbeddingTable table;
  std::size_t found = 0;
  // found / (non-special vocabulary entries); 1.0 for an empty vocabulary.
  double coverage = 1.0;
};

// Reads "word f1 ... fd" lines. A leading "count dim" header line is
// skipped. When `keep` is given only its entries are retained.
VectorMap read_embedding_file(const std::string& path, std::size_t* dim_out,
                              const Vocabulary* keep = nullptr);
void write_embedding_file(const VectorMap& vectors, const std::vector<std::string>& order,
                          const std::string& path);

EmbeddingBuild build_embedding_table(const Vocabulary& vocab, const VectorMap& vectors,
                                     std::size_t dim);

}  // namespace xlqa::text

#endif  // XLQA_TEXT_EMBEDDING_H_
