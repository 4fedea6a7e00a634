#include <algorithm>
#include <filesystem>

#include "doctest.h"
#include "support/eval_fixtures.h"
#include "xlqa/eval/evalkit.h"
#include "xlqa/text/example.h"

using namespace xlqa;
using namespace xlqa::eval;

TEST_CASE("normalization") {
  CHECK(normalize_answer("The Late 19th Century.", Language::kSrc) == "late 19th century");
  CHECK(normalize_answer("19世紀晚期。", Language::kTgt) == "19世紀晚期");
  CHECK(normalize_answer("", Language::kSrc).empty());
  CHECK(normalize_answer("19 世紀", Language::kTgt) == "19世紀");
  CHECK(normalize_answer("  an  apple ", Language::kSrc) == "apple");
}

TEST_CASE("f1 parts of the prefix case") {
  const auto p = f1_parts("19世紀", "19世紀晚期", Language::kTgt);
  CHECK(p.precision == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(std::abs(p.f1 - 0.8) < 1e-9);
}

TEST_CASE("hand-scored fixtures") {
  for (const auto& fx : testing::eval_fixtures()) {
    Predictions preds{{"x", fx.prediction}};
    const auto r = evaluate(preds, {GoldEntry{"x", fx.golds}}, fx.lang);
    INFO(fx.name);
    CHECK(std::abs(r.exact_match - 100.0 * fx.em) < 1e-9);
    CHECK(std::abs(r.f1 - 100.0 * fx.f1) < 1e-9);
  }
}

TEST_CASE("aggregation and missing predictions") {
  std::vector<GoldEntry> gold = {{"a", {"19世紀晚期"}}, {"b", {"19世紀晚期"}}, {"c", {"晚期"}}};
  Predictions preds{{"a", "19世紀晚期"}, {"b", "19世紀"}};
  const auto r = evaluate(preds, gold, Language::kTgt);
  CHECK(r.missing == 1);
  CHECK(r.scored == 2);
  CHECK(std::abs(r.f1 - 100.0 * (1.0 + 0.8 + 0.0) / 3.0) < 1e-9);
  CHECK(std::abs(r.exact_match - 100.0 / 3.0) < 1e-9);
  Predictions two{{"a", "19世紀晚期"}, {"b", "19世紀"}};
  const auto r2 = evaluate(two, std::vector<GoldEntry>{gold[0], gold[1]}, Language::kTgt);
  CHECK(std::abs(r2.f1 - 90.0) < 1e-9);
  for (const auto& e : r.per_example) CHECK(e.em <= e.f1);
}

TEST_CASE("gold as prediction scores 100") {
  std::vector<GoldEntry> gold;
  Predictions preds;
  for (const auto& fx : testing::eval_fixtures()) {
    if (fx.lang != Language::kTgt || fx.golds[0].empty()) continue;
    const std::string id = "g" + std::to_string(gold.size());
    gold.push_back({id, fx.golds});
    preds[id] = fx.golds.back();
  }
  const auto r = evaluate(preds, gold, Language::kTgt);
  CHECK(r.exact_match == 100.0);
  CHECK(r.f1 == 100.0);
}

TEST_CASE("prediction and report files") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto p = (dir / "xlqa_preds_test.json").string();
  Predictions preds{{"a", "19世紀晚期"}, {"b", "x \"y\""}};
  write_predictions(preds, p);
  CHECK(read_predictions(p) == preds);
  const auto r = evaluate(preds, {GoldEntry{"a", {"19世紀晚期"}}}, Language::kTgt);
  const std::string json = report_to_json(r);
  CHECK(json.find("\"exact_match\"") != std::string::npos);
  CHECK(json.find("\"per_example\"") != std::string::npos);
  std::filesystem::remove(p);
}
