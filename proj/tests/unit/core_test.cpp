#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "fcp/dataset.hpp"
#include "fcp/errors.hpp"
#include "fcp/rng.hpp"
#include "fcp/sequence.hpp"
#include "support/fixtures.hpp"

namespace fcp {
namespace {

using testing::feedback;
using testing::noiseless_env;

const Vocabulary& vocab() { return noiseless_env().vocab(); }

TEST(Vocabulary, SpecialsAreDistinctAndReserved) {
  std::set<std::uint32_t> ids{Vocabulary::kPad.id, Vocabulary::kBos.id, Vocabulary::kEos.id, Vocabulary::kEfOpen.id,
                              Vocabulary::kEfClose.id};
  EXPECT_EQ(ids.size(), 5u);
  EXPECT_EQ(vocab().id("<EF>"), Vocabulary::kEfOpen);
  EXPECT_EQ(vocab().id("</EF>"), Vocabulary::kEfClose);
  EXPECT_THROW(vocab().id("zebra-crossing"), ContractViolation);
}

TEST(Vocabulary, HashDependsOnWordOrder) {
  Vocabulary a({"x", "y"});
  Vocabulary b({"y", "x"});
  Vocabulary c({"x", "y"});
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(a.hash(), c.hash());
}

TEST(WrapContext, PlacesFeedbackBeforeInstruction) {
  auto c = feedback(noiseless_env(), "correct and clear ; concise and coherent reasoning .");
  auto x = make_sequence(vocab(), Role::kInstruction, "3 + 4 mod 10 = ?");
  auto ctx = wrap_context(c, x);
  EXPECT_EQ(ctx.role(), Role::kContext);
  EXPECT_EQ(ctx.size(), c.size() + x.size() + 2);
  EXPECT_EQ(render(vocab(), ctx), "<EF> correct and clear ; concise and coherent reasoning . </EF> 3 + 4 mod 10 = ?");
}

TEST(WrapContext, EmptyFeedbackIsTheNullCondition) {
  auto x = make_sequence(vocab(), Role::kInstruction, "3 + 4 mod 10 = ?");
  auto ctx = wrap_context(TokenSequence(Role::kFeedback, {}), x);
  EXPECT_EQ(render(vocab(), ctx), "<EF> </EF> 3 + 4 mod 10 = ?");
  auto back = unwrap_context(ctx);
  EXPECT_TRUE(back.feedback.empty());
  EXPECT_EQ(back.instruction, x);
}

TEST(WrapContext, RejectsRoleMismatch) {
  auto x = make_sequence(vocab(), Role::kInstruction, "3 + 4 mod 10 = ?");
  EXPECT_THROW(wrap_context(x, x), ContractViolation);
  auto c = feedback(noiseless_env(), "that is wrong .");
  EXPECT_THROW(wrap_context(c, c), ContractViolation);
}

TEST(WrapContext, RoundTripsRandomPairs) {
  Rng rng(11);
  const auto n = static_cast<std::uint32_t>(vocab().size());
  for (int i = 0; i < 1000; ++i) {
    std::vector<Token> c, x;
    for (std::size_t k = rng.index(8); k > 0; --k) c.push_back(Token{Vocabulary::kNumSpecials + static_cast<std::uint32_t>(rng.index(n - Vocabulary::kNumSpecials))});
    for (std::size_t k = 1 + rng.index(8); k > 0; --k) x.push_back(Token{Vocabulary::kNumSpecials + static_cast<std::uint32_t>(rng.index(n - Vocabulary::kNumSpecials))});
    TokenSequence cs(Role::kFeedback, c), xs(Role::kInstruction, x);
    auto back = unwrap_context(wrap_context(cs, xs));
    ASSERT_EQ(back.feedback, cs);
    ASSERT_EQ(back.instruction, xs);
  }
}

TEST(UnwrapContext, RejectsMalformedMarkers) {
  const Token a = vocab().id("correct"), q = vocab().id("?");
  const Token open = Vocabulary::kEfOpen, close = Vocabulary::kEfClose;
  EXPECT_THROW(unwrap_context(TokenSequence(Role::kContext, {open, a, q})), MalformedContext);
  EXPECT_THROW(unwrap_context(TokenSequence(Role::kContext, {close, a, open, q})), MalformedContext);
  EXPECT_THROW(unwrap_context(TokenSequence(Role::kContext, {open, a, close, close, q})), MalformedContext);
  EXPECT_THROW(unwrap_context(TokenSequence(Role::kContext, {a, open, close, q})), MalformedContext);
}

TEST(ScoredFeedback, ValidatesScoreRange) {
  auto c = feedback(noiseless_env(), "that is wrong .");
  EXPECT_THROW(ScoredFeedback(c, FeedbackStyle::kUser, 1.5), ContractViolation);
  EXPECT_THROW(ScoredFeedback(c, FeedbackStyle::kUser, -0.1), ContractViolation);
  EXPECT_NO_THROW(ScoredFeedback(c, FeedbackStyle::kUser, std::nullopt));
}

Dataset random_dataset(std::size_t n, std::uint64_t seed) {
  const auto& env = noiseless_env();
  Rng rng(seed);
  Dataset d;
  auto fbs = env.all_feedback(FeedbackStyle::kReviewer);
  for (std::size_t i = 0; i < n; ++i) {
    auto x = env.generate_instruction(TaskKind::kModularArithmetic, 9, rng);
    auto rs = env.tasks().enumerate_responses(x);
    auto& o = rs[rng.index(rs.size())];
    std::optional<double> score;
    if (rng.index(3) != 0) score = static_cast<double>(rng.index(21)) / 20.0;
    d.triples.push_back({x.instruction, o,
                         ScoredFeedback(fbs[rng.index(fbs.size())], rng.index(2) ? FeedbackStyle::kUser : FeedbackStyle::kReviewer, score)});
  }
  return d;
}

TEST(Serialization, EmptyDatasetWritesNothing) {
  std::ostringstream out;
  serialize_dataset(Dataset{}, vocab(), out);
  EXPECT_TRUE(out.str().empty());
}

TEST(Serialization, RoundTripsRandomDataset) {
  auto d = random_dataset(100, 5);
  std::stringstream s;
  serialize_dataset(d, vocab(), s);
  auto back = deserialize_dataset(s, vocab());
  EXPECT_EQ(back, d);
}

TEST(Serialization, RoundTripsOnlineProvenance) {
  auto d = random_dataset(10, 6);
  d.provenance = Provenance::online_round(7);
  std::stringstream s;
  serialize_dataset(d, vocab(), s);
  EXPECT_NE(s.str().find("\"round\":7"), std::string::npos);
  EXPECT_EQ(deserialize_dataset(s, vocab()), d);
}

TEST(Serialization, AbsentScoreIsOmittedAndRestored) {
  const auto& env = noiseless_env();
  Dataset d;
  d.triples.push_back({make_sequence(vocab(), Role::kInstruction, "3 + 4 mod 10 = ?"),
                       make_sequence(vocab(), Role::kResponse, "7 <eos>"),
                       ScoredFeedback(feedback(env, "looks right to me ."), FeedbackStyle::kUser, std::nullopt)});
  std::stringstream s;
  serialize_dataset(d, vocab(), s);
  EXPECT_EQ(s.str(), "{\"x\":\"3 + 4 mod 10 = ?\",\"o\":\"7 <eos>\",\"c\":\"looks right to me .\",\"style\":\"user\"}\n");
  auto back = deserialize_dataset(s, vocab());
  ASSERT_EQ(back.size(), 1u);
  EXPECT_FALSE(back.triples[0].feedback.score_present());
  EXPECT_EQ(back, d);
}

TEST(Serialization, DistinctDatasetsGiveDistinctBytes) {
  auto a = random_dataset(20, 8);
  auto b = a;
  b.triples[3].feedback = ScoredFeedback(b.triples[3].feedback.text(), b.triples[3].feedback.style(), 0.123);
  std::ostringstream sa, sb;
  serialize_dataset(a, vocab(), sa);
  serialize_dataset(b, vocab(), sb);
  EXPECT_NE(sa.str(), sb.str());
}

TEST(Serialization, ReportsLineNumbersAndUnknownStyles) {
  std::istringstream bad_style(
      "{\"x\":\"3 + 4 mod 10 = ?\",\"o\":\"7 <eos>\",\"c\":\"that is wrong .\",\"style\":\"user\"}\n"
      "{\"x\":\"3 + 4 mod 10 = ?\",\"o\":\"7 <eos>\",\"c\":\"that is wrong .\",\"style\":\"critic\"}\n");
  try {
    deserialize_dataset(bad_style, vocab());
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream garbage("not json\n");
  EXPECT_THROW(deserialize_dataset(garbage, vocab()), ParseError);
}

TEST(Rng, DerivedSeedsSeparateStagesAndWorkers) {
  EXPECT_NE(derive_seed(1, "collect", 0), derive_seed(1, "collect", 1));
  EXPECT_NE(derive_seed(1, "collect", 0), derive_seed(1, "bootstrap", 0));
  EXPECT_EQ(derive_seed(1, "collect", 3), derive_seed(1, "collect", 3));
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.uniform(), b.uniform());
}

}  // namespace
}  // namespace fcp
