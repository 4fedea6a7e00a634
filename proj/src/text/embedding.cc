#include "xlqa/text/embedding.h"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "xlqa/common/error.h"

namespace xlqa::text {

VectorMap read_embedding_file(const std::string& path, std::size_t* dim_out,
                              const Vocabulary* keep) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open embedding file " + path);
  VectorMap out;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string word;
    fields >> word;
    std::vector<ad::Real> v;
    double x;
    while (fields >> x) v.push_back(static_cast<ad::Real>(x));
    if (!fields.eof()) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": non-numeric vector entry");
    }
    if (line_no == 1 && v.size() == 1 &&
        word.find_first_not_of("0123456789") == std::string::npos) {
      continue;  // "count dim" header
    }
    if (v.empty()) throw ParseError(path + ":" + std::to_string(line_no) + ": empty vector");
    if (dim == 0) dim = v.size();
    if (v.size() != dim) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(dim) + " values, got " + std::to_string(v.size()));
    }
    if (keep && !keep->contains(word)) continue;
    out.emplace(word, std::move(v));
  }
  if (dim_out) *dim_out = dim;
  return out;
}

void write_embedding_file(const VectorMap& vectors, const std::vector<std::string>& order,
                          const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << std::setprecision(17);
  for (const std::string& w : order) {
    auto it = vectors.find(w);
    if (it == vectors.end()) continue;
    out << w;
    for (ad::Real x : it->second) out << ' ' << x;
    out << '\n';
  }
}

EmbeddingBuild build_embedding_table(const Vocabulary& vocab, const VectorMap& vectors,
                                     std::size_t dim) {
  if (dim == 0) throw ContractError("embedding dimension must be positive");
  std::vector<ad::Real> m(vocab.size() * dim, ad::Real(0));
  EmbeddingBuild build;
  for (std::size_t id = 2; id < vocab.size(); ++id) {
    auto it = vectors.find(vocab.entry(static_cast<int>(id)));
    if (it == vectors.end()) continue;
    if (it->second.size() != dim) throw ContractError("embedding vector width mismatch");
    std::copy(it->second.begin(), it->second.end(), m.begin() + id * dim);
    ++build.found;
  }
  const std::size_t words = vocab.size() - 2;
  build.coverage = words ? static_cast<double>(build.found) / static_cast<double>(words) : 1.0;
  build.table.matrix = ad::Tensor({vocab.size(), dim}, std::move(m));
  build.table.frozen = true;
  return build;
}

}  // namespace xlqa::text
