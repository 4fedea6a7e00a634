#include "xlqa/train/assets.h"

#include "xlqa/xling/pipeline.h"

namespace xlqa::train {

Assets build_assets(const Corpus& corpus, const text::VectorMap& tgt_vectors, std::size_t dim,
                    const xling::BilingualLexicon* lexicon) {
  Assets a;
  for (const text::Dataset* d : {&corpus.src_train, &corpus.tgt_train, &corpus.tgt_dev, &corpus.src_heldout}) {
    LanguageAssets& la = d->language == Language::kSrc ? a.src : a.tgt;
    text::extend_word_vocabulary(la.words, *d);
    text::extend_char_vocabulary(la.chars, *d);
  }
  a.tgt.table = text::build_embedding_table(a.tgt.words, tgt_vectors, dim).table;
  if (lexicon && a.src.words.size() > 2) {
    a.src.table = xling::remap_shared_embeddings(a.src.words, *lexicon, tgt_vectors, dim).table;
  }
  return a;
}

}  // namespace xlqa::train
