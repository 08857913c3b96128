#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "stepsearch/errors.hpp"
#include "stepsearch/grammar.hpp"
#include "stepsearch/rng.hpp"

using namespace stepsearch;

TEST_SUITE_BEGIN("grammar");

TEST_CASE("minimal final answer parses") {
  const auto p = fixtures::make_problem();
  const auto step = parse_step("<step><final_answer>A</final_answer></step>", p);
  REQUIRE(step.has_value());
  CHECK(step->kind == StepKind::FinalAnswer);
  CHECK(step->option == 0);
}

TEST_CASE("worked action step parses with tool, input and observation") {
  const auto p = fixtures::make_problem();
  const std::string text =
      "<step> <thought>The question turns on what rights a coastal state holds over the "
      "zone, so the convention text is needed.</thought> <action>retriever</action> "
      "<action_input>Exclusive Economic Zone Territorial Sovereignty</action_input> "
      "<observation>Under the law of the sea convention, a coastal state does not hold "
      "territorial sovereignty over its exclusive economic zone; it holds sovereign rights "
      "over the natural resources of the zone.</observation> </step>";
  const auto step = parse_step(text, p);
  REQUIRE(step.has_value());
  CHECK(step->kind == StepKind::Action);
  CHECK(step->tool == "retriever");
  CHECK(step->input == "Exclusive Economic Zone Territorial Sovereignty");
  REQUIRE(step->observation.has_value());
  CHECK(step->observation->find("sovereign rights") != std::string::npos);
  CHECK(!step->text.empty());  // thought preamble retained
}

TEST_CASE("unbalanced tag is unparsable") {
  const auto p = fixtures::make_problem();
  CHECK(!parse_step("<step><thought>x</step>", p).has_value());
}

TEST_CASE("assorted malformed inputs are unparsable") {
  const auto p = fixtures::make_problem();
  CHECK(!parse_step("", p));
  CHECK(!parse_step("plain text", p));
  CHECK(!parse_step("<step></step>", p));
  CHECK(!parse_step("<step><unknown>x</unknown></step>", p));
  CHECK(!parse_step("<step><thought>a</thought><thought>b</thought></step>", p));
  CHECK(!parse_step("<step><action>tool</action></step>", p));             // missing input
  CHECK(!parse_step("<step><observation>o</observation></step>", p));      // orphan observation
  CHECK(!parse_step("<step><final_answer>E</final_answer></step>", p));    // outside options
  CHECK(!parse_step("<step><final_answer>AB</final_answer></step>", p));   // not one letter
  CHECK(!parse_step("<step><final_answer>yes</final_answer></step>", p));  // prose in answer
  CHECK(!parse_step("<step><proposal>A</proposal></step> <step><proposal>B</proposal></step>",
                    p));  // two steps
  CHECK(!parse_step("<step><step><thought>x</thought></step></step>", p));  // nested step
  CHECK(!parse_step("<step>words<thought>x</thought></step>", p));          // stray text
}

TEST_CASE("proposal letters extracted from prose, ambiguity rejected") {
  const auto p = fixtures::make_problem();
  auto step = parse_step("<step><proposal>I guess the answer might be A.</proposal></step>", p);
  REQUIRE(step.has_value());
  CHECK(step->kind == StepKind::Proposal);
  CHECK(step->option == 0);

  CHECK(parse_step("<step><proposal>b</proposal></step>", p)->option == 1);  // lowercase
  CHECK(parse_step("<step><proposal>  C  </proposal></step>", p)->option == 2);
  CHECK(!parse_step("<step><proposal>A or B</proposal></step>", p));  // two letters
  CHECK(!parse_step("<step><proposal>nothing here</proposal></step>", p));
  // 'D' inside a word is not standalone
  CHECK(parse_step("<step><proposal>iDea says D</proposal></step>", p)->option == 3);
}

TEST_CASE("tag case is accepted on parse, lowercase on serialize") {
  const auto p = fixtures::make_problem();
  const auto step = parse_step("<STEP><FINAL_ANSWER>a</FINAL_ANSWER></STEP>", p);
  REQUIRE(step.has_value());
  CHECK(step->option == 0);
  CHECK(serialize_step(*step) == "<step><final_answer>A</final_answer></step>");
}

TEST_CASE("serialization canonical forms") {
  CHECK(serialize_step(Step::final_answer(0)) == "<step><final_answer>A</final_answer></step>");
  CHECK(serialize_step(Step::proposal(2)) == "<step><proposal>C</proposal></step>");
  CHECK(serialize_step(Step::thought("x")) == "<step><thought>x</thought></step>");
  CHECK(serialize_step(Step::action("retriever", "q")) ==
        "<step><action>retriever</action> <action_input>q</action_input></step>");
  CHECK(serialize_step(Step::action("retriever", "q", "obs")) ==
        "<step><action>retriever</action> <action_input>q</action_input> "
        "<observation>obs</observation></step>");
}

TEST_CASE("content escaping round-trips angle brackets") {
  const auto p = fixtures::make_problem();
  const Step s = Step::thought("compare a < b & c > d");
  const std::string text = serialize_step(s);
  CHECK(text.find("&lt;") != std::string::npos);
  const auto back = parse_step(text, p);
  REQUIRE(back.has_value());
  CHECK(*back == s);
}

TEST_CASE("round trip: parse(serialize(s)) == s") {
  const auto p = fixtures::make_problem();
  const std::vector<Step> steps = {
      Step::proposal(3),
      Step::thought("some analysis with unicode \xE6\xB3\x95\xE5\xBE\x8B text"),
      Step::action("retriever", "zone rights", "body of the retrieved article"),
      Step::action("retriever", "pending query"),  // no observation yet
      Step::action("retriever", "q", "obs", "preamble thought"),
      Step::final_answer(1),
  };
  for (const Step& s : steps) {
    const auto back = parse_step(serialize_step(s), p);
    REQUIRE(back.has_value());
    CHECK(*back == s);
  }
}

TEST_CASE("worked trajectory is a parse/serialize fixed point") {
  const auto p = fixtures::make_problem();
  const auto traj = parse_trajectory(fixtures::worked_trajectory_text(), p.option_count());
  REQUIRE(traj.has_value());
  CHECK(traj->size() == 7);
  CHECK(traj->terminal());
  const std::string once = serialize_trajectory(*traj);
  const auto again = parse_trajectory(once, p.option_count());
  REQUIRE(again.has_value());
  CHECK(serialize_trajectory(*again) == once);
  REQUIRE(again->size() == traj->size());
  for (size_t i = 0; i < traj->size(); ++i) CHECK(again->steps[i] == traj->steps[i]);
}

TEST_CASE("empty observation is kept distinct from no observation") {
  const auto p = fixtures::make_problem();
  const Step none = Step::action("retriever", "q");
  const Step empty = Step::action("retriever", "q", std::string{});
  CHECK(!(none == empty));
  const auto back = parse_step(serialize_step(empty), p);
  REQUIRE(back.has_value());
  CHECK(*back == empty);
}

TEST_CASE("trajectory validity rules") {
  Trajectory t;
  t.steps = {Step::proposal(0), Step::final_answer(0)};
  CHECK(t.valid(16));
  CHECK(t.terminal());

  Trajectory middle;
  middle.steps = {Step::final_answer(0), Step::thought("after the end")};
  CHECK(!middle.valid(16));

  Trajectory too_long;
  for (int i = 0; i < 17; ++i) too_long.steps.push_back(Step::thought("t"));
  CHECK(!too_long.valid(16));
  CHECK(too_long.valid(0));  // length check disabled

  CHECK(!parse_trajectory(
      "<step><final_answer>A</final_answer></step> <step><thought>x</thought></step>", 4));
}

TEST_CASE("non-thought terminal detection") {
  auto traj = [](std::vector<Step> steps) {
    Trajectory t;
    t.steps = std::move(steps);
    return t;
  };
  const Step p0 = Step::proposal(0);
  const Step act = Step::action("retriever", "q", "obs");
  const Step th = Step::thought("bridge");
  const Step fa = Step::final_answer(0);

  CHECK(is_non_thought_terminal(traj({p0, act, fa})));
  CHECK(!is_non_thought_terminal(traj({p0, act, th, fa})));
  CHECK(!is_non_thought_terminal(traj({p0, th, fa})));
  CHECK(is_non_thought_terminal(traj({fa})));
  CHECK(is_non_thought_terminal(traj({p0, th, act, fa})));  // thought precedes the action
  CHECK_THROWS_AS((void)is_non_thought_terminal(traj({p0, th})), NotTerminal);
}

TEST_CASE("exhaustive three-step patterns match the definition") {
  // every {proposal,thought,action} pair before a final answer, checked by hand:
  // non-thought iff no thought strictly after the last action
  const Step kinds[] = {Step::proposal(0), Step::thought("t"),
                        Step::action("retriever", "q", "obs")};
  const bool is_thought[] = {false, true, false};
  const bool is_action[] = {false, false, true};
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      Trajectory t;
      t.steps = {kinds[a], kinds[b], Step::final_answer(0)};
      int last_action = -1;
      if (is_action[a]) last_action = 0;
      if (is_action[b]) last_action = 1;
      bool expect = true;
      for (int i = last_action + 1; i < 2; ++i)
        if (is_thought[i == 0 ? a : b]) expect = false;
      CHECK(is_non_thought_terminal(t) == expect);
    }
  }
}

TEST_CASE("option letter bijection") {
  for (int i = 0; i < 26; ++i) {
    const char letter = option_letter(i);
    REQUIRE(option_index(letter).has_value());
    CHECK(*option_index(letter) == i);
    CHECK(*option_index(static_cast<char>(letter + 32)) == i);  // lowercase
  }
  CHECK(!option_index('?').has_value());
}

TEST_CASE("fuzzed mutations never crash and never produce invalid steps") {
  const auto p = fixtures::make_problem();
  std::vector<std::string> seeds = {
      serialize_step(Step::proposal(0)),
      serialize_step(Step::thought("analysis of the rule")),
      serialize_step(Step::action("retriever", "zone rights", "retrieved text")),
      serialize_step(Step::final_answer(2)),
      fixtures::worked_trajectory_text(),
  };
  Rng rng(2024);
  int parsed = 0;
  for (int iter = 0; iter < 2000; ++iter) {
    std::string text = seeds[static_cast<size_t>(rng.uniform_int((int)seeds.size()))];
    const int edits = 1 + rng.uniform_int(4);
    for (int e = 0; e < edits && !text.empty(); ++e) {
      switch (rng.uniform_int(4)) {
        case 0: {  // delete a range
          const size_t at = static_cast<size_t>(rng.uniform_int((int)text.size()));
          const size_t len = 1 + static_cast<size_t>(rng.uniform_int(8));
          text.erase(at, len);
          break;
        }
        case 1: {  // transpose two characters
          const size_t a = static_cast<size_t>(rng.uniform_int((int)text.size()));
          const size_t b = static_cast<size_t>(rng.uniform_int((int)text.size()));
          std::swap(text[a], text[b]);
          break;
        }
        case 2: {  // insert junk
          const size_t at = static_cast<size_t>(rng.uniform_int((int)text.size()));
          text.insert(at, "<x>");
          break;
        }
        default: {  // duplicate a slice
          const size_t at = static_cast<size_t>(rng.uniform_int((int)text.size()));
          text.insert(at, text.substr(at, 5));
          break;
        }
      }
    }
    const auto step = parse_step(text, p);
    if (step) {
      ++parsed;
      // whatever parses must re-serialize to a parsable equal step
      const auto again = parse_step(serialize_step(*step), p);
      REQUIRE(again.has_value());
      CHECK(*again == *step);
    }
  }
  CHECK(parsed > 0);  // some mutations survive, most do not
}

TEST_SUITE_END();
