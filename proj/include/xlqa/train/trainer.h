#ifndef XLQA_TRAIN_TRAINER_H_
#define XLQA_TRAIN_TRAINER_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xlqa/adversary/discriminator.h"
#include "xlqa/autodiff/params.h"
#include "xlqa/eval/evalkit.h"
#include "xlqa/model/qanet.h"
#include "xlqa/text/batch.h"
#include "xlqa/text/embedding.h"
#include "xlqa/text/vocab.h"
#include "xlqa/train/checkpoint.h"
#include "xlqa/train/optim.h"

namespace xlqa::train {

enum class TrainMode { kTargetOnly, kJointShuffled, kAdversarial };
// Which dependent stack receives the adversarial gradient.
enum class Variant { kNone, kGanCh, kGanEn };

std::string_view mode_name(TrainMode m);
TrainMode parse_mode(std::string_view s);
std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view s);
std::string_view ramp_name(RampShape r);
RampShape parse_ramp(std::string_view s);

struct TrainerConfig {
  TrainMode mode = TrainMode::kAdversarial;
  Variant variant = Variant::kNone;
  int k = 5;
  std::size_t batch_size = 24;
  double lr = 1e-3;
  double d_lr = 1e-3;
  LambdaSchedule lambda;
  double l2 = 3e-7;
  double clip_norm = 5.0;
  double ema_decay = 0.999;
  long long max_steps = 60000;
  long long eval_every = 500;
  int patience = 10;
  // Held-out examples per language used for the discriminator accuracy.
  std::size_t dacc_examples = 200;
  std::uint64_t seed = 1;

  void validate() const;
};

// Text-level data of a run. In joint-shuffled mode the source examples must
// already be in the target language.
struct Corpus {
  text::Dataset src_train;
  text::Dataset tgt_train;
  text::Dataset tgt_dev;
  text::Dataset src_heldout;
};

struct LanguageAssets {
  text::Vocabulary words;
  text::Vocabulary chars;
  text::EmbeddingTable table;
};

struct Assets {
  LanguageAssets src;
  LanguageAssets tgt;
};

struct StepMetrics {
  long long step = 0;  // QA updates completed after this iteration
  double l_qa = 0.0;
  double l_dis = std::numeric_limits<double>::quiet_NaN();
  double lambda_g = 0.0;
  int d_updates = 0;
  int qa_updates = 0;
};

struct LogRow {
  long long step = 0;
  double l_qa = std::numeric_limits<double>::quiet_NaN();
  double l_dis = std::numeric_limits<double>::quiet_NaN();
  double lambda_g = std::numeric_limits<double>::quiet_NaN();
  double dev_em = std::numeric_limits<double>::quiet_NaN();
  double dev_f1 = std::numeric_limits<double>::quiet_NaN();
};

std::string log_header();
std::string log_line(const LogRow& row);
void write_log_csv(const std::vector<LogRow>& rows, const std::string& path);

struct DevResult {
  double em = 0.0;
  double f1 = 0.0;
  eval::Predictions predictions;
};

struct TrainResult {
  double best_em = 0.0;
  double best_f1 = 0.0;
  long long best_step = 0;
  long long steps = 0;
  bool stopped_early = false;
  double step0_f1 = 0.0;
  // NaN when no discriminator was trained or no held-out data exists.
  double d_accuracy = std::numeric_limits<double>::quiet_NaN();
  std::vector<LogRow> log;
};

class Trainer {
 public:
  Trainer(const TrainerConfig& cfg, const model::HyperParams& hp, const adversary::DiscriminatorConfig& dcfg,
          const Corpus& corpus, const Assets& assets);
  ~Trainer();
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  // One iteration: k discriminator updates (adversarial variants) then one
  // QA update.
  StepMetrics step();

  // Trains until `until_step` (or cfg.max_steps when negative) or early
  // stop; dev evaluation every eval_every steps, and at step 0.
  TrainResult run(long long until_step = -1, const std::function<void(const LogRow&)>& on_row = {});

  // Dev EM/F1 with EMA weights.
  DevResult evaluate_dev();
  // Predictions for any dataset of the given language, EMA weights.
  eval::Predictions predict(const text::Dataset& data, bool use_ema = true);
  // Share of held-out q/d sequences D labels correctly (raw weights).
  double discriminator_accuracy();

  Checkpoint to_checkpoint() const;
  // Restores parameters and optimizer/EMA/stream state. Parameter shapes
  // must match (StateError otherwise).
  void restore(const Checkpoint& ckpt);
  // Loads the best EMA snapshot (or current EMA) into the parameters.
  void load_best_weights();

  void set_config_text(std::string text) { config_text_ = std::move(text); }

  long long current_step() const { return step_; }
  const TrainerConfig& config() const { return cfg_; }
  ad::ParameterStore& store() { return store_; }
  model::QANet& model() { return *model_; }
  adversary::Discriminator* discriminator() { return disc_.get(); }
  const std::vector<NamedParam>& qa_params() const { return qa_params_; }
  const std::vector<NamedParam>& d_params() const { return d_params_; }
  const TrainResult& progress() const { return result_; }

 private:
  struct Stream {
    const text::EncodedDataset* data = nullptr;
    std::uint64_t id = 0;
    long long consumed = 0;  // batches (epoch streams) or items (cyclic)
    bool cyclic = false;
    long long cached_epoch = -1;
    std::vector<std::size_t> order;
  };

  std::vector<std::size_t> next_indices(Stream& s);
  const std::vector<std::size_t>& epoch_order(Stream& s, long long epoch);
  double discriminator_step(int j);
  double qa_step(double lambda_g);
  std::vector<NamedParam> collect(std::initializer_list<ad::GroupId> groups) const;
  void snapshot_best();

  TrainerConfig cfg_;
  model::HyperParams hp_;
  ad::ParameterStore store_;
  std::unique_ptr<model::QANet> model_;
  std::unique_ptr<adversary::Discriminator> disc_;
  Adam qa_opt_;
  Adam d_opt_;
  Ema ema_;
  std::vector<NamedParam> qa_params_;
  std::vector<NamedParam> d_params_;

  const text::Dataset* dev_ = nullptr;
  Corpus corpus_;
  text::EncodedDataset enc_src_, enc_tgt_, enc_dev_, enc_heldout_;
  Assets assets_;
  Stream qa_tgt_, qa_src_, d_tgt_, d_src_;

  long long step_ = 0;
  int evals_since_best_ = 0;
  bool stopped_ = false;
  bool step0_done_ = false;
  std::map<std::string, std::vector<Real>> best_snapshot_;
  TrainResult result_;
  std::string config_text_;
};

// Deterministic 64-bit mixing of (seed, a, b).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace xlqa::train

#endif  // XLQA_TRAIN_TRAINER_H_
