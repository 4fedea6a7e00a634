#ifndef XLQA_TRAIN_ASSETS_H_
#define XLQA_TRAIN_ASSETS_H_

#include "xlqa/train/trainer.h"
#include "xlqa/xling/lexicon.h"

namespace xlqa::train {

// Vocabularies over every dataset of the corpus, the target table from
// `tgt_vectors`, and (when a lexicon is given) the source table remapped
// through it.
Assets build_assets(const Corpus& corpus, const text::VectorMap& tgt_vectors, std::size_t dim,
                    const xling::BilingualLexicon* lexicon);

}  // namespace xlqa::train

#endif  // XLQA_TRAIN_ASSETS_H_
