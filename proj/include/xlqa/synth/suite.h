#ifndef XLQA_SYNTH_SUITE_H_
#define XLQA_SYNTH_SUITE_H_

#include <functional>
#include <string>
#include <vector>

#include "xlqa/adversary/discriminator.h"
#include "xlqa/model/qanet.h"
#include "xlqa/synth/synthbench.h"
#include "xlqa/train/trainer.h"

namespace xlqa::synth {

struct SuiteRow {
  std::string name;
  train::TrainMode mode = train::TrainMode::kTargetOnly;
  train::Variant variant = train::Variant::kNone;
  bool with_mt = false;
  double target_fraction = 1.0;
  double em = 0.0;
  double f1 = 0.0;
  double step0_f1 = 0.0;
  double d_accuracy = 0.0;  // NaN without a discriminator
  long long steps = 0;
  long long best_step = 0;
  double seconds = 0.0;
  std::vector<train::LogRow> log;
};

// Desk calibration: the four core rows finish in well under 30 minutes on
// one core. Character features are off since synthbench word forms carry no
// sub-word signal.
inline train::TrainerConfig desk_trainer() {
  train::TrainerConfig t;
  t.k = 1;
  t.max_steps = 1500;
  t.eval_every = 250;
  t.patience = 4;
  t.lambda.ramp_steps = 750;
  return t;
}

inline model::HyperParams desk_hyper() {
  model::HyperParams hp = model::HyperParams::desk();
  hp.use_chars = false;
  return hp;
}

inline adversary::DiscriminatorConfig desk_discriminator() {
  adversary::DiscriminatorConfig d;
  d.filters = 32;
  d.blocks = 2;
  return d;
}

struct SuiteConfig {
  train::TrainerConfig trainer = desk_trainer();  // mode and variant are set per row
  model::HyperParams hyper = desk_hyper();
  adversary::DiscriminatorConfig discriminator = desk_discriminator();
  std::vector<std::string> rows = {"target-only", "dependent", "gan-ch", "gan-en"};
  std::function<void(const std::string& row, const train::LogRow&)> on_row;
};

// One named experiment row:
//   target-only          tgt stack on the target set
//   dependent            two stacks, shared independent layers, no D
//   gan-ch / gan-en      adversarial variants
//   mt+gan-ch            gan-ch with the record-translated source added to
//                        the target set
//   gan-ch@F / target-only@F  the same with the first F share of targets
SuiteRow run_row(const SynthCorpus& corpus, const SuiteConfig& cfg, const std::string& row);

std::vector<SuiteRow> run_transfer_suite(const SynthSpec& spec, const SuiteConfig& cfg);

std::string suite_csv(const std::vector<SuiteRow>& rows);

}  // namespace xlqa::synth

#endif  // XLQA_SYNTH_SUITE_H_
