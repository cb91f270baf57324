#include <gtest/gtest.h>

#include <map>

#include "gazequiz/engine.hpp"
#include "gazequiz/error.hpp"
#include "gazequiz/rng.hpp"
#include "fixtures.hpp"

using namespace gazequiz;

namespace {

const char* kWords = "さくらもち\nひまわり\nかたつむり\nあさがお\nともだち\nなつやすみ\n";

template <typename E>
std::vector<E> effects_of(const Step& step) {
  std::vector<E> out;
  for (const auto& e : step.effects) {
    if (const auto* p = std::get_if<E>(&e)) out.push_back(*p);
  }
  return out;
}

std::size_t count_kind(const std::vector<SessionEvent>& log, EventKind kind) {
  return static_cast<std::size_t>(std::count_if(log.begin(), log.end(), [&](const SessionEvent& e) { return e.kind == kind; }));
}

class Game {
 public:
  explicit Game(GameConfig config = {}, Mode mode = Mode::gamified, std::uint64_t seed = 5)
      : engine(fixtures::make_engine(kWords, config)) {
    const std::vector<std::string> players =
        mode == Mode::gamified ? std::vector<std::string>{"alice", "bob"} : std::vector<std::string>{"solo"};
    s = engine->start_session("s1", players, mode, seed, 0, &last);
  }

  Step act(const std::string& actor, Action a, std::int64_t dt = 100) {
    t += dt;
    last = engine->apply(s, Input{t, actor, std::move(a)});
    return last;
  }
  Step tick_to(std::int64_t at) {
    t = at;
    last = engine->apply(s, Input{t, "system", action::Tick{}});
    return last;
  }

  std::string q() const { return s.questioner_id(); }
  std::string a() const { return s.answerer_id(); }

  /// Plays one hidden letter from await_capture_trigger to the next phase.
  void play_letter(bool mark = true) {
    act(q(), action::TriggerCapture{});
    tick_to(s.countdown_deadline_ms);
    act("capture", action::CaptureResult{"cap-" + std::to_string(++captures), false}, 0);
    act(q(), action::Approve{});
    if (mark) act(a(), action::Mark{{0, 0}});
    act(a(), action::Ready{});
  }

  void play_word(bool correct) {
    if (s.phase == Phase::briefing) {
      act("alice", action::Ready{});
      act("bob", action::Ready{});
    }
    act(a(), action::Ready{});
    for (std::size_t i = 0; i < s.word->hidden_positions.size(); ++i) play_letter();
    act(a(), action::Answer{correct ? s.word->word() : "ちがう"});
  }

  std::shared_ptr<const Engine> engine;
  GameSession s;
  Step last;
  std::int64_t t = 0;
  int captures = 0;
};

}  // namespace

TEST(Engine, StartAssignsFirstWord) {
  Game g;
  EXPECT_EQ(g.s.phase, Phase::briefing);
  EXPECT_EQ(g.s.word_index, 0);
  ASSERT_EQ(g.last.events.size(), 2u);
  EXPECT_EQ(g.last.events[0].kind, EventKind::game_started);
  EXPECT_EQ(g.last.events[1].kind, EventKind::word_assigned);
  EXPECT_EQ(effects_of<effect::PromptWord>(g.last).size(), 1u);
  EXPECT_EQ(g.q(), "alice");
  EXPECT_EQ(g.s.word->hidden_positions.size(), 3u);
}

TEST(Engine, StartValidatesPlayers) {
  const auto engine = fixtures::make_engine(kWords);
  EXPECT_THROW(engine->start_session("s", {"a"}, Mode::gamified, 1, 0), Error);
  EXPECT_THROW(engine->start_session("s", {"a", "a"}, Mode::gamified, 1, 0), Error);
  EXPECT_THROW(engine->start_session("s", {"a", "system"}, Mode::gamified, 1, 0), Error);
  EXPECT_THROW(engine->start_session("s", {"a", "b"}, Mode::standard, 1, 0), Error);
}

TEST(Engine, TriggerStartsThreeSecondCountdownThenRequestsCapture) {
  Game g;
  g.act("alice", action::Ready{});
  g.act("bob", action::Ready{});
  g.act(g.a(), action::Ready{});
  ASSERT_EQ(g.s.phase, Phase::await_capture_trigger);
  const Step step = g.act(g.q(), action::TriggerCapture{});
  EXPECT_EQ(g.s.phase, Phase::countdown);
  const auto cd = effects_of<effect::StartCountdown>(step);
  ASSERT_EQ(cd.size(), 1u);
  EXPECT_DOUBLE_EQ(cd[0].seconds, 3.0);
  EXPECT_EQ(cd[0].deadline_ms, g.t + 3000);

  EXPECT_TRUE(effects_of<effect::RequestCapture>(g.tick_to(g.t + 2999)).empty());
  EXPECT_EQ(g.s.phase, Phase::countdown);
  const auto req = effects_of<effect::RequestCapture>(g.tick_to(g.s.countdown_deadline_ms));
  ASSERT_EQ(req.size(), 1u);
  EXPECT_EQ(req[0].target.letter_id, g.s.word->letter_ids[0]);
  EXPECT_FALSE(req[0].target.stimulus_xy_mm.has_value());
  EXPECT_EQ(g.s.phase, Phase::capturing);
}

TEST(Engine, CountdownCompletesOnAnyLaterInput) {
  Game g;
  g.act("alice", action::Ready{});
  g.act("bob", action::Ready{});
  g.act(g.a(), action::Ready{});
  g.act(g.q(), action::TriggerCapture{});
  // a stray approve after the deadline: the clock advances first, then it is rejected
  const GameSession before = g.s;
  EXPECT_THROW(g.engine->apply(g.s, Input{g.t + 5000, g.q(), action::Approve{}}), ProtocolViolation);
  EXPECT_EQ(g.s, before);
}

TEST(Engine, RejectRetakesSameLetterWithoutPersisting) {
  Game g;
  g.act("alice", action::Ready{});
  g.act("bob", action::Ready{});
  g.act(g.a(), action::Ready{});
  g.act(g.q(), action::TriggerCapture{});
  g.tick_to(g.s.countdown_deadline_ms);
  g.act("capture", action::CaptureResult{"c1", false});
  EXPECT_EQ(g.s.phase, Phase::await_approval);
  const Step step = g.act(g.q(), action::Reject{});
  EXPECT_EQ(g.s.phase, Phase::await_capture_trigger);
  EXPECT_EQ(g.s.word->letter_cursor, 0u);
  EXPECT_TRUE(effects_of<effect::PersistSample>(step).empty());
  ASSERT_EQ(effects_of<effect::DiscardCapture>(step).size(), 1u);
  EXPECT_EQ(effects_of<effect::DiscardCapture>(step)[0].capture_id, "c1");
}

TEST(Engine, NoFaceReturnsToTrigger) {
  Game g;
  g.act("alice", action::Ready{});
  g.act("bob", action::Ready{});
  g.act(g.a(), action::Ready{});
  g.act(g.q(), action::TriggerCapture{});
  g.tick_to(g.s.countdown_deadline_ms);
  g.act("capture", action::CaptureResult{"c1", true});
  EXPECT_EQ(g.s.phase, Phase::await_capture_trigger);
  EXPECT_TRUE(g.s.pending_capture_id.empty());
}

TEST(Engine, ApprovalPersistsAndPresents) {
  Game g;
  g.act("alice", action::Ready{});
  g.act("bob", action::Ready{});
  g.act(g.a(), action::Ready{});
  g.act(g.q(), action::TriggerCapture{});
  g.tick_to(g.s.countdown_deadline_ms);
  g.act("capture", action::CaptureResult{"c1", false});
  const Step step = g.act(g.q(), action::Approve{});
  ASSERT_EQ(effects_of<effect::PersistSample>(step).size(), 1u);
  ASSERT_EQ(effects_of<effect::PresentImage>(step).size(), 1u);
  EXPECT_EQ(g.s.phase, Phase::answerer_marking);
  const Step mark = g.act(g.a(), action::Mark{{12.5, -30}});
  ASSERT_EQ(effects_of<effect::RecordMark>(mark).size(), 1u);
  EXPECT_EQ(g.s.word->marks[0], (Point2{12.5, -30}));
}

TEST(Engine, CorrectAnswerScoresAndRolesAlternate) {
  Game g;
  g.play_word(true);
  EXPECT_EQ(g.s.phase, Phase::reveal);
  EXPECT_EQ(g.s.score, 1);
  const auto res = effects_of<effect::ShowResult>(g.last);
  ASSERT_EQ(res.size(), 1u);
  EXPECT_TRUE(res[0].correct);

  const Step next = g.act(g.a(), action::Proceed{});
  EXPECT_EQ(effects_of<effect::SwitchRoles>(next).size(), 1u);
  EXPECT_EQ(g.q(), "bob");
  EXPECT_EQ(g.s.word_index, 1);
  EXPECT_EQ(g.s.phase, Phase::answerer_review);

  g.play_word(false);
  EXPECT_EQ(g.s.score, 1);
  const Step end = g.act(g.a(), action::Proceed{});
  EXPECT_EQ(g.s.phase, Phase::finished);
  EXPECT_EQ(g.s.finish_reason, "completed");
  ASSERT_EQ(effects_of<effect::EndSession>(end).size(), 1u);
  std::vector<std::string> words;
  for (const auto& e : g.s.log) {
    if (e.kind == EventKind::word_assigned) words.push_back(e.payload["word"].get<std::string>());
  }
  ASSERT_EQ(words.size(), 2u);
  EXPECT_NE(words[0], words[1]);
}

TEST(Engine, AnswerIsComparedAfterNormalization) {
  GameConfig config;
  config.min_letters = 4;
  const auto engine = fixtures::make_engine("ともだち\n", config);
  for (const auto& [answer, correct] : std::vector<std::pair<std::string, bool>>{
           {"ともだち", true}, {"とも\xE3\x81\x9F\xE3\x82\x99ち", true}, {"ともたち", false}}) {
    GameSession s = engine->start_session("n", {"a", "b"}, Mode::gamified, 1, 0);
    std::int64_t t = 0;
    auto act = [&](const std::string& who, Action act) { engine->apply(s, Input{++t, who, std::move(act)}); };
    act("a", action::Ready{});
    act("b", action::Ready{});
    act("b", action::Ready{});
    for (int i = 0; i < 3; ++i) {
      act("a", action::TriggerCapture{});
      t = s.countdown_deadline_ms;
      act("capture", action::CaptureResult{"c" + std::to_string(i), false});
      act("a", action::Approve{});
      act("b", action::Ready{});
    }
    act("b", action::Answer{answer});
    EXPECT_EQ(*s.word->correct, correct) << answer;
  }
}

TEST(Engine, ClueRevealedExactlyOnceWhenThresholdCrossed) {
  Game g;
  g.act("alice", action::Ready{});
  g.act("bob", action::Ready{});
  g.act(g.a(), action::Ready{});
  for (int i = 0; i < 3; ++i) g.play_letter();
  ASSERT_EQ(g.s.phase, Phase::answering);
  const std::int64_t start = g.s.word->answering_started_ms;
  EXPECT_TRUE(effects_of<effect::RevealClue>(g.tick_to(start + 29'999)).empty());
  const auto clue = effects_of<effect::RevealClue>(g.tick_to(start + 30'000));
  ASSERT_EQ(clue.size(), 1u);
  EXPECT_EQ(clue[0].index, g.s.word->question.first_letter_clue_index);
  EXPECT_EQ(clue[0].glyph, g.s.word->question.entry.glyphs[clue[0].index]);
  EXPECT_TRUE(effects_of<effect::RevealClue>(g.tick_to(start + 40'000)).empty());
  g.act(g.a(), action::Answer{"ちがう"});
  EXPECT_EQ(count_kind(g.s.log, EventKind::clue_revealed), 1u);
}

TEST(Engine, NoClueWhenAnsweredEarly) {
  Game g;
  g.act("alice", action::Ready{});
  g.act("bob", action::Ready{});
  g.act(g.a(), action::Ready{});
  for (int i = 0; i < 3; ++i) g.play_letter();
  g.act(g.a(), action::Answer{g.s.word->word()}, 5000);
  EXPECT_EQ(count_kind(g.s.log, EventKind::clue_revealed), 0u);
}

TEST(Engine, TimeLimitForcesReveal) {
  Game g;
  g.act("alice", action::Ready{});
  g.act("bob", action::Ready{});
  g.act(g.a(), action::Ready{});
  for (int i = 0; i < 3; ++i) g.play_letter();
  const std::int64_t start = g.s.word->answering_started_ms;
  const Step step = g.tick_to(start + 60'000);
  EXPECT_EQ(g.s.phase, Phase::reveal);
  EXPECT_FALSE(*g.s.word->correct);
  EXPECT_EQ(effects_of<effect::RevealClue>(step).size(), 1u);
  EXPECT_EQ(count_kind(g.s.log, EventKind::timeout), 1u);
  EXPECT_THROW(g.act(g.a(), action::Answer{"おそい"}), ProtocolViolation);
}

TEST(Engine, ViolationsLeaveSessionUntouched) {
  Game g;
  const GameSession before = g.s;
  EXPECT_THROW(g.engine->apply(g.s, Input{10, "alice", action::TriggerCapture{}}), ProtocolViolation);
  EXPECT_THROW(g.engine->apply(g.s, Input{10, "mallory", action::Ready{}}), ProtocolViolation);
  EXPECT_THROW(g.engine->apply(g.s, Input{10, "capture", action::CaptureResult{"x", false}}), ProtocolViolation);
  EXPECT_THROW(g.engine->apply(g.s, Input{10, "alice", action::Abandon{}}), ProtocolViolation);
  EXPECT_THROW(g.engine->apply(g.s, Input{-1, "alice", action::Ready{}}), ProtocolViolation);
  EXPECT_EQ(g.s, before);

  g.act("alice", action::Ready{});
  g.act("bob", action::Ready{});
  // only the answerer confirms review
  try {
    g.act(g.q(), action::Ready{});
    FAIL();
  } catch (const ProtocolViolation& v) {
    EXPECT_EQ(v.code(), ErrorCode::ProtocolViolation);
  }
}

TEST(Engine, AbandonFinishesAndDiscardsPending) {
  Game g;
  g.act("alice", action::Ready{});
  g.act("bob", action::Ready{});
  g.act(g.a(), action::Ready{});
  g.act(g.q(), action::TriggerCapture{});
  g.tick_to(g.s.countdown_deadline_ms);
  g.act("capture", action::CaptureResult{"c1", false});
  const Step step = g.act("server", action::Abandon{});
  EXPECT_EQ(g.s.phase, Phase::finished);
  EXPECT_EQ(g.s.finish_reason, "abandoned");
  EXPECT_EQ(effects_of<effect::DiscardCapture>(step).size(), 1u);
  EXPECT_THROW(g.act("alice", action::Ready{}), ProtocolViolation);
}

TEST(Engine, StandardModeRunsConfiguredStimuli) {
  GameConfig config;
  Game g(config, Mode::standard, 9);
  EXPECT_EQ(g.s.phase, Phase::await_trigger);
  std::size_t requests = 0;
  std::vector<Point2> positions;
  for (int i = 0; i < 50; ++i) {
    const Step shown = g.act("solo", action::TriggerCapture{});
    const auto stim = effects_of<effect::ShowStimulus>(shown);
    ASSERT_EQ(stim.size(), 1u);
    positions.push_back(stim[0].position_mm);
    EXPECT_LE(std::abs(stim[0].position_mm.x), 300.0);
    EXPECT_LE(std::abs(stim[0].position_mm.y), 150.0);
    const auto req = effects_of<effect::RequestCapture>(g.tick_to(g.s.countdown_deadline_ms));
    requests += req.size();
    ASSERT_EQ(req.size(), 1u);
    EXPECT_EQ(req[0].target.stimulus_xy_mm, stim[0].position_mm);
    EXPECT_FALSE(req[0].target.letter_id.has_value());
    const Step done = g.act("capture", action::CaptureResult{"c" + std::to_string(i), false}, 0);
    EXPECT_EQ(effects_of<effect::PersistSample>(done).size(), 1u);
  }
  EXPECT_EQ(requests, 50u);
  EXPECT_EQ(g.s.phase, Phase::finished);
  EXPECT_EQ(count_kind(g.s.log, EventKind::capture_approved), 50u);

  Game again(config, Mode::standard, 9);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(effects_of<effect::ShowStimulus>(again.act("solo", action::TriggerCapture{}))[0].position_mm, positions[i]);
    again.tick_to(again.s.countdown_deadline_ms);
    again.act("capture", action::CaptureResult{"c" + std::to_string(i), false}, 0);
  }
}

TEST(Engine, StandardStimulusHelper) {
  Game g({}, Mode::standard, 3);
  auto [next, step] = g.engine->standard_stimulus(g.s, 50, "solo");
  EXPECT_EQ(next.phase, Phase::countdown);
  EXPECT_EQ(next.stimuli_shown, 1);
  EXPECT_THROW(g.engine->standard_stimulus(next, 60, "solo"), ProtocolViolation);
  Game gam;
  EXPECT_THROW(gam.engine->standard_stimulus(gam.s, 10, "alice"), ProtocolViolation);
}

TEST(EngineReplay, FinishedGameReplaysToIdenticalState) {
  Game g;
  g.play_word(true);
  g.act(g.a(), action::Proceed{});
  g.play_word(false);
  g.act(g.a(), action::Proceed{});
  EXPECT_EQ(g.engine->replay(g.s.log), g.s);
}

TEST(EngineReplay, EmptyLogIsFreshSession) { EXPECT_EQ(fixtures::make_engine(kWords)->replay({}), GameSession{}); }

TEST(EngineReplay, PrefixesMatchPrefixRuns) {
  Game g;
  std::vector<std::pair<std::size_t, GameSession>> checkpoints;
  auto mark = [&] { checkpoints.emplace_back(g.s.log.size(), g.s); };
  mark();
  g.act("alice", action::Ready{});
  mark();
  g.act("bob", action::Ready{});
  mark();
  g.act(g.a(), action::Ready{});
  mark();
  g.act(g.q(), action::TriggerCapture{});
  mark();
  g.tick_to(g.s.countdown_deadline_ms);
  mark();
  g.act("capture", action::CaptureResult{"c1", false});
  mark();
  g.act(g.q(), action::Approve{});
  mark();
  for (const auto& [n, state] : checkpoints) {
    const std::vector<SessionEvent> prefix(g.s.log.begin(), g.s.log.begin() + static_cast<std::ptrdiff_t>(n));
    EXPECT_EQ(g.engine->replay(prefix), state) << n;
  }
}

TEST(EngineReplay, CorruptionReportsIndex) {
  Game g;
  g.play_word(true);
  auto log = g.s.log;
  log[5].payload["letter_id"] = "r0c0";
  if (log[5].kind != EventKind::capture_triggered) GTEST_SKIP();
  try {
    g.engine->replay(log);
    FAIL();
  } catch (const ReplayError& e) {
    EXPECT_EQ(e.index(), 5u);
  }

  auto dropped = g.s.log;
  dropped.erase(dropped.begin() + 3);
  EXPECT_THROW(g.engine->replay(dropped), ReplayError);

  auto bad_first = g.s.log;
  bad_first.erase(bad_first.begin());
  try {
    g.engine->replay(bad_first);
    FAIL();
  } catch (const ReplayError& e) {
    EXPECT_EQ(e.index(), 0u);
  }
}

namespace {

/// Random inputs, legal or not, until the game ends. Returns the number of
/// rejected inputs.
int fuzz_game(Game& g, Rng& rng, std::size_t* persisted = nullptr) {
  int rejected = 0;
  for (int step = 0; step < 5000 && g.s.phase != Phase::finished; ++step) {
    const std::string who = rng.bernoulli(0.5) ? g.q() : g.a();
    Action a;
    switch (rng.uniform_index(10)) {
      case 0: a = action::Ready{}; break;
      case 1: a = action::TriggerCapture{}; break;
      case 2: a = action::Approve{}; break;
      case 3: a = action::Reject{}; break;
      case 4: a = action::Mark{{rng.uniform(-300, 300), rng.uniform(-150, 150)}}; break;
      case 5: a = action::Answer{rng.bernoulli(0.5) && g.s.word ? g.s.word->word() : "ちがう"}; break;
      case 6: a = action::Proceed{}; break;
      case 7: a = action::Tick{}; break;
      case 8: a = action::CaptureResult{"c" + std::to_string(step), rng.bernoulli(0.2)}; break;
      default: a = action::Ready{}; break;
    }
    const std::string actor = std::holds_alternative<action::CaptureResult>(a) ? "capture"
                              : std::holds_alternative<action::Tick>(a)         ? "system"
                                                                                 : who;
    const std::int64_t t = g.t + static_cast<std::int64_t>(rng.uniform_index(8000));
    const GameSession before = g.s;
    try {
      g.last = g.engine->apply(g.s, Input{t, actor, a});
      g.t = t;
      for (const auto& e : g.last.effects) {
        if (persisted != nullptr && std::holds_alternative<effect::PersistSample>(e)) ++*persisted;
        if (std::holds_alternative<effect::RequestCapture>(e)) {
          EXPECT_EQ(before.phase, Phase::countdown);
          EXPECT_GE(t, before.countdown_deadline_ms);
        }
      }
    } catch (const ProtocolViolation&) {
      EXPECT_EQ(g.s, before);
      ++rejected;
    }
  }
  return rejected;
}

}  // namespace

TEST(EngineProperties, FuzzedGamesTerminateAndReplay) {
  Rng rng(41);
  for (int game = 0; game < 1000; ++game) {
    Game g({}, Mode::gamified, rng.next());
    fuzz_game(g, rng);
    ASSERT_EQ(g.s.phase, Phase::finished) << game;
    EXPECT_LE(g.s.word_index, 1);
    EXPECT_EQ(g.engine->replay(g.s.log), g.s) << game;

    // exactly-once clue, alternation, approvals
    std::map<int, int> clues;
    int word = -1;
    std::string last_questioner;
    for (const auto& e : g.s.log) {
      if (e.kind == EventKind::word_assigned) {
        word = e.payload["word_index"].get<int>();
        const auto questioner = e.payload["questioner"].get<std::string>();
        EXPECT_NE(questioner, last_questioner);
        last_questioner = questioner;
      }
      if (e.kind == EventKind::clue_revealed) ++clues[word];
    }
    for (const auto& [w, n] : clues) EXPECT_EQ(n, 1) << w;
  }
}

TEST(EngineProperties, PersistOnlyWithApproval) {
  Rng rng(42);
  for (int game = 0; game < 200; ++game) {
    Game g({}, Mode::gamified, rng.next());
    std::size_t persisted = 0;
    fuzz_game(g, rng, &persisted);
    std::size_t approvals = 0;
    for (const auto& e : g.s.log) approvals += e.kind == EventKind::capture_approved ? 1 : 0;
    EXPECT_EQ(persisted, approvals) << game;
  }
}
