#include "asrdec/tokenizer.h"

#include <gtest/gtest.h>

#include <string>
#include <vector>

namespace asrdec {
namespace {

const std::string kM = TokenInventory::kWordMarker;

// One merge slot on "aa ab": both candidate pairs occur once, the
// lexicographically first pair (marked "a", "a") must win the tie.
TEST(Tokenizer, TrainSingleMergeTieBreak) {
  auto inv = TokenInventory::Train({"aa ab"}, 8);
  ASSERT_EQ(inv.vocab_size(), 8);
  // specials, then sorted alphabet {a, b, marked-a}, then the merge result
  EXPECT_EQ(inv.token(0), "<blank>");
  EXPECT_EQ(inv.token(1), "<s>");
  EXPECT_EQ(inv.token(2), "</s>");
  EXPECT_EQ(inv.token(3), "<unk>");
  EXPECT_EQ(inv.token(4), "a");
  EXPECT_EQ(inv.token(5), "b");
  EXPECT_EQ(inv.token(6), kM + "a");
  EXPECT_EQ(inv.token(7), kM + "aa");
  ASSERT_EQ(inv.merges().size(), 1u);
  EXPECT_EQ(inv.merges()[0].first, kM + "a");
  EXPECT_EQ(inv.merges()[0].second, "a");
}

TEST(Tokenizer, EncodeAppliesMerges) {
  auto inv = TokenInventory::Train({"aa ab"}, 8);
  EXPECT_EQ(inv.Encode("aa ab"), (std::vector<int>{7, 6, 5}));
  EXPECT_EQ(inv.Encode("aa"), (std::vector<int>{7}));
  EXPECT_EQ(inv.Encode("ba"), (std::vector<int>{3, 4}));  // marked b unseen
}

TEST(Tokenizer, HighFrequencyPairWinsOverLexicographic) {
  // "bc" appears 3 times inside words, the marked pairs once each, so the
  // first merge must be the unmarked (b, c) despite sorting later.
  auto inv = TokenInventory::Train({"abc abc abc zb"},
                                   4 + 5 /*alphabet*/ + 1 /*merge*/);
  ASSERT_GE(inv.merges().size(), 1u);
  EXPECT_EQ(inv.merges()[0].first, "b");
  EXPECT_EQ(inv.merges()[0].second, "c");
}

TEST(Tokenizer, DecodeRoundTripAndSpecials) {
  auto inv = TokenInventory::Train({"aa ab"}, 8);
  EXPECT_EQ(inv.Decode(inv.Encode("aa ab")), "aa ab");
  // blank/bos/eos are dropped silently
  EXPECT_EQ(inv.Decode({1, 7, 0, 0, 2}), "aa");
  EXPECT_EQ(inv.Decode({}), "");
}

TEST(Tokenizer, DecodeRejectsOutOfRangeIds) {
  auto inv = TokenInventory::Train({"aa ab"}, 8);
  EXPECT_THROW(inv.Decode({7, 99}), std::out_of_range);
  EXPECT_THROW(inv.Decode({-1}), std::out_of_range);
}

TEST(Tokenizer, TrainRejectsTooSmallVocab) {
  // minimum here is 4 specials + 3 alphabet symbols = 7
  EXPECT_THROW(TokenInventory::Train({"aa ab"}, 6), std::invalid_argument);
  EXPECT_THROW(TokenInventory::Train({}, 100), std::invalid_argument);
  EXPECT_THROW(TokenInventory::Train({"   "}, 100), std::invalid_argument);
}

TEST(Tokenizer, TrainStopsWhenNoPairsLeft) {
  // Single one-character word: nothing to merge, vocab stays at minimum.
  auto inv = TokenInventory::Train({"a"}, 50);
  EXPECT_EQ(inv.vocab_size(), 5);  // specials + marked a
  EXPECT_TRUE(inv.merges().empty());
}

TEST(Tokenizer, SerializeParseRoundTrip) {
  auto inv = TokenInventory::Train({"abab abc cab"}, 14);
  auto back = TokenInventory::Parse(inv.Serialize());
  EXPECT_EQ(back.tokens(), inv.tokens());
  EXPECT_EQ(back.merges(), inv.merges());
  EXPECT_EQ(back.Encode("abab cab"), inv.Encode("abab cab"));
}

TEST(Tokenizer, ParseRejectsMalformedInput) {
  EXPECT_THROW(TokenInventory::Parse(""), std::runtime_error);
  EXPECT_THROW(TokenInventory::Parse("BPE v2 4\n"), std::runtime_error);
  EXPECT_THROW(TokenInventory::Parse("BPE v1 9\n<blank>\n"), std::runtime_error);
}

TEST(Tokenizer, Utf8AlphabetSurvivesRoundTrip) {
  const std::string he = "h\xc3\xa9", hee = "h\xc3\xa9\xc3\xa9";
  auto inv = TokenInventory::Train({hee + " " + he}, 10);
  EXPECT_EQ(inv.Decode(inv.Encode(he + " " + hee)), he + " " + hee);
}

}  // namespace
}  // namespace asrdec
