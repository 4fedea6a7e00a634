// A synthetic corpus small enough for trainer tests to run in seconds.
#ifndef XLQA_TESTS_TINY_CORPUS_H_
#define XLQA_TESTS_TINY_CORPUS_H_

#include "xlqa/synth/synthbench.h"
#include "xlqa/train/assets.h"
#include "xlqa/train/trainer.h"

namespace xlqa::testing {

inline synth::SynthSpec tiny_spec() {
  synth::SynthSpec s;
  s.vocab_size = 60;
  s.n_source = 40;
  s.n_target = 20;
  s.n_dev = 10;
  s.n_src_heldout = 10;
  s.min_clauses = 2;
  s.max_clauses = 3;
  s.pairs_per_doc = 1;
  s.templates = 2;
  s.embedding_dim = 8;
  return s;
}

struct TinySetup {
  synth::SynthCorpus synth;
  train::Corpus corpus;
  train::Assets assets;
  train::TrainerConfig cfg;
  model::HyperParams hp;
  adversary::DiscriminatorConfig dcfg;

  TinySetup() : synth(synth::generate(tiny_spec())) {
    corpus.src_train = synth.source;
    corpus.tgt_train = synth.target;
    corpus.tgt_dev = synth.dev;
    corpus.src_heldout = synth.src_heldout;
    assets = train::build_assets(corpus, synth.tgt_vectors, synth.dim, &synth.lexicon);
    cfg.batch_size = 4;
    cfg.k = 2;
    cfg.max_steps = 1000;
    cfg.eval_every = 5;
    cfg.lambda.peak = 0.5;
    cfg.lambda.ramp_steps = 1;
    hp = model::HyperParams::desk();
    hp.hidden = 8;
    hp.char_dim = 4;
    hp.model_blocks = 1;
    dcfg.input_dim = hp.hidden;
    dcfg.filters = 4;
    dcfg.blocks = 2;
  }

  train::TrainerConfig with(train::TrainMode mode, train::Variant v) const {
    auto c = cfg;
    c.mode = mode;
    c.variant = v;
    return c;
  }
};

}  // namespace xlqa::testing

#endif  // XLQA_TESTS_TINY_CORPUS_H_
