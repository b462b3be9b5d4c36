#include <gtest/gtest.h>

#include "procmine/flow.hpp"
#include "procmine/html.hpp"
#include "procmine/ingest.hpp"
#include "support/errors.hpp"
#include "support/fixtures.hpp"
#include "support/graph_match.hpp"

using namespace procmine;

namespace {

Procedure procedure_of(const std::string& list_html) {
  const auto cands = extract_list_candidates(scrub_template(parse_document(list_html, "t.html")), 1);
  return procedure_from_candidate(cands.at(0));
}

using Members = std::vector<BlockMember>;

Members first_block(const Procedure& p, const BlockRules& rules = {}) {
  const auto points = extract_decision_points(p);
  return extract_decision_block(p, points.at(0), rules).members;
}

void expect_conserved(const FlowGraph& g, const Procedure& p) {
  std::map<std::pair<std::size_t, std::size_t>, int> seen;
  for (const auto& n : g.nodes) {
    if (n.role == NodeRole::Sentence) ++seen[{n.step, n.sentence}];
  }
  std::size_t total = 0;
  for (const auto& step : p.steps) {
    for (std::size_t s = 0; s < step.sentences.size(); ++s) {
      EXPECT_EQ((seen[{step.index, s}]), 1) << "step " << step.index << " sentence " << s;
      ++total;
    }
  }
  EXPECT_EQ(seen.size(), total);
}

constexpr auto T = Branch::True;
constexpr auto F = Branch::False;

}  // namespace

TEST(Blocks, RestOfStepByDefault) {
  const auto p = procedure_of(
      "<ol><li>If the light is blinking, replace the battery. Close the cover.</li><li>Restart the node.</li></ol>");
  EXPECT_EQ(first_block(p), (Members{{0, 1, T}}));
}

TEST(Blocks, NoteStopsTheBlock) {
  const auto p = procedure_of(
      "<ol><li>If the light is blinking, replace the battery. Note: this takes an hour. Close the cover.</li></ol>");
  EXPECT_TRUE(first_block(p).empty());
  BlockRules r;
  r.note = false;
  EXPECT_EQ(first_block(p, r), (Members{{0, 1, T}, {0, 2, T}}));
}

TEST(Blocks, ParagraphBoundaryStopsTheBlock) {
  const auto p = procedure_of(
      "<ol><li><p>If the light is blinking, replace the battery. Close the cover.</p><p>Restart the node.</p></li></ol>");
  EXPECT_EQ(first_block(p), (Members{{0, 1, T}}));
  BlockRules r;
  r.substructure = false;
  EXPECT_EQ(first_block(p, r), (Members{{0, 1, T}, {0, 2, T}}));
}

TEST(Blocks, ParallelNextStepIsAbsorbedAsFalse) {
  const auto p = procedure_of(
      "<ol><li>If the slot status is missing, switch it off.</li><li>If the slot status is failed, restart the "
      "node. Check the log.</li><li>Close the cover.</li></ol>");
  const auto points = extract_decision_points(p);
  const auto block = extract_decision_block(p, points.at(0));
  EXPECT_EQ(block.absorbed_steps, (std::vector<std::size_t>{1}));
  EXPECT_EQ(block.members, (Members{{1, 0, F}, {1, 1, F}}));
  BlockRules r;
  r.overlap = false;
  EXPECT_TRUE(first_block(p, r).empty());
}

TEST(Blocks, DissimilarNextStepIsNotAbsorbed) {
  const auto p = procedure_of(
      "<ol><li>If the slot status is missing, switch it off.</li><li>If the cover is open, close it.</li></ol>");
  EXPECT_TRUE(first_block(p).empty());
}

TEST(Blocks, BaselineIsRestOfStep) {
  const auto p = procedure_of(
      "<ol><li><p>If the light is blinking, replace the battery. Note: wait.</p><p>Close the cover.</p></li>"
      "<li>If the light is blinking again, call support.</li></ol>");
  EXPECT_EQ(first_block(p, BlockRules::baseline()), (Members{{0, 1, T}, {0, 2, T}}));
}

TEST(Blocks, OtherwiseSwitchesToFalse) {
  const auto p = procedure_of(
      "<ol><li>If the light is blinking, replace the battery. Close the cover. Otherwise, restart the node. Check "
      "the log.</li></ol>");
  EXPECT_EQ(first_block(p), (Members{{0, 1, T}, {0, 2, F}, {0, 3, F}}));
}

TEST(Blocks, MembersFollowTheDecisionMonotonically) {
  const auto p = procedure_of(
      "<ol><li>If the slot status is missing, switch it off. Wait. If the slot status is failed, restart. Close "
      "it.</li><li>Done.</li></ol>");
  for (const auto& b : extract_all_blocks(p)) {
    bool seen_false = false;
    for (const auto& m : b.members) {
      EXPECT_TRUE(m.step > b.decision.step_index ||
                  (m.step == b.decision.step_index && m.sentence > b.decision.sentence_index));
      if (m.branch == F) seen_false = true;
      if (seen_false) EXPECT_EQ(m.branch, F);
    }
  }
}

TEST(Graph, PlainChain) {
  const auto p = procedure_of("<ol><li>Open the panel. Remove the drive.</li><li>Close the panel.</li></ol>");
  const auto g = build_flow_graph(p, {});
  const graph_match::Pattern want{{{NodeKind::Instruction, "open the panel"},
                                   {NodeKind::Instruction, "remove the drive"},
                                   {NodeKind::Instruction, "close the panel"}},
                                  {{0, 1, EdgeLabel::Next}, {1, 2, EdgeLabel::Next}},
                                  0};
  EXPECT_TRUE(graph_match::isomorphic(g, want)) << graph_match::describe(g);
  EXPECT_TRUE(validate_flow_graph(g).empty());
  expect_conserved(g, p);
}

TEST(Graph, DecisionWithBlock) {
  const auto p = procedure_of(
      "<ol><li>If the light is blinking, replace the battery. Close the cover.</li><li>Restart the node.</li></ol>");
  const auto g = build_flow_graph(p, extract_all_blocks(p));
  const graph_match::Pattern want{{{NodeKind::Decision, "the light is blinking"},
                                   {NodeKind::Instruction, "replace the battery"},
                                   {NodeKind::Instruction, "close the cover"},
                                   {NodeKind::Instruction, "restart the node"}},
                                  {{0, 1, EdgeLabel::True},
                                   {1, 2, EdgeLabel::Next},
                                   {2, 3, EdgeLabel::Next},
                                   {0, 3, EdgeLabel::False}},
                                  0};
  EXPECT_TRUE(graph_match::isomorphic(g, want)) << graph_match::describe(g);
  EXPECT_TRUE(validate_flow_graph(g).empty());
  expect_conserved(g, p);
  for (const auto& n : g.nodes) {
    if (n.kind == NodeKind::Decision) {
      EXPECT_EQ(n.question, "Is the light blinking?");
      EXPECT_EQ(n.yes_branch, Branch::True);
    }
  }
}

TEST(Graph, ElseBranch) {
  const auto p = procedure_of(
      "<ol><li>If the light is blinking, replace the battery. Otherwise, restart the node.</li><li>Close the "
      "cover.</li></ol>");
  const auto g = build_flow_graph(p, extract_all_blocks(p));
  const graph_match::Pattern want{{{NodeKind::Decision, "the light is blinking"},
                                   {NodeKind::Instruction, "replace the battery"},
                                   {NodeKind::Instruction, "restart the node"},
                                   {NodeKind::Instruction, "close the cover"}},
                                  {{0, 1, EdgeLabel::True},
                                   {0, 2, EdgeLabel::False},
                                   {1, 3, EdgeLabel::Next},
                                   {2, 3, EdgeLabel::Next}},
                                  0};
  EXPECT_TRUE(graph_match::isomorphic(g, want)) << graph_match::describe(g);
}

TEST(Graph, NestedDecisionIsReachedOnlyThroughTrue) {
  const auto p = procedure_of(
      "<ol><li>If the power supply error LED is off, check the cables. If the error is not automatically fixed "
      "after 2 minutes, replace the system board.</li><li>Close the cover.</li></ol>");
  const auto blocks = extract_all_blocks(p);
  ASSERT_EQ(blocks.size(), 2u);
  const auto g = build_flow_graph(p, blocks);
  const graph_match::Pattern want{{{NodeKind::Decision, "power supply error LED is off"},
                                   {NodeKind::Instruction, "check the cables"},
                                   {NodeKind::Decision, "not automatically fixed"},
                                   {NodeKind::Instruction, "replace the system board"},
                                   {NodeKind::Instruction, "close the cover"}},
                                  {{0, 1, EdgeLabel::True},
                                   {1, 2, EdgeLabel::Next},
                                   {2, 3, EdgeLabel::True},
                                   {2, 4, EdgeLabel::False},
                                   {3, 4, EdgeLabel::Next},
                                   {0, 4, EdgeLabel::False}},
                                  0};
  EXPECT_TRUE(graph_match::isomorphic(g, want)) << graph_match::describe(g);
  EXPECT_TRUE(validate_flow_graph(g).empty());
}

TEST(Graph, InconsistentBlocksAreRejected) {
  const auto p = procedure_of(
      "<ol><li>If the light is blinking, replace the battery. Close the cover. Restart the node.</li></ol>");
  auto block = extract_all_blocks(p).at(0);
  auto gap = block;
  gap.members = {{0, 2, T}};
  EXPECT_ERROR_CODE(build_flow_graph(p, {gap}), ErrorCode::InconsistentBlocks);
  auto flip = block;
  flip.members = {{0, 1, F}, {0, 2, T}};
  EXPECT_ERROR_CODE(build_flow_graph(p, {flip}), ErrorCode::InconsistentBlocks);
  auto outside = block;
  outside.members = {{3, 0, T}};
  EXPECT_ERROR_CODE(build_flow_graph(p, {outside}), ErrorCode::InconsistentBlocks);
  EXPECT_ERROR_CODE(build_flow_graph(p, {block, block}), ErrorCode::InconsistentBlocks);
}

TEST(Graph, BlocksMustNest) {
  const auto p = procedure_of(
      "<ol><li>If the light is blinking, replace the battery. Close the cover. If the fan is loud, clean it. Wait. "
      "Restart.</li></ol>");
  auto blocks = extract_all_blocks(p);
  ASSERT_EQ(blocks.size(), 2u);
  ASSERT_EQ(blocks[1].decision.sentence_index, 2u);
  blocks[0].members = {{0, 1, T}, {0, 2, T}, {0, 3, T}, {0, 4, T}};
  blocks[1].members = {{0, 3, T}};
  EXPECT_NO_THROW(build_flow_graph(p, blocks));
  blocks[0].members = {{0, 1, T}};
  blocks[1].members = {{0, 3, T}, {0, 4, T}};
  EXPECT_NO_THROW(build_flow_graph(p, blocks));  // disjoint
  // The second decision sits inside the first block but its members run past it.
  blocks[0].members = {{0, 1, T}, {0, 2, T}, {0, 3, T}};
  blocks[1].members = {{0, 3, T}, {0, 4, T}};
  EXPECT_ERROR_CODE(build_flow_graph(p, blocks), ErrorCode::InconsistentBlocks);
}

// A nested conditional whose own block would absorb a parallel next step is clipped to the
// enclosing block.
TEST(Blocks, NestedBlockIsClippedToItsParent) {
  const auto p = procedure_of(
      "<ol><li>If the slot status is missing, switch it off. If the fan is loud, clean it.</li><li>If the fan is "
      "quiet, wait.</li><li>Close the cover.</li></ol>");
  const auto blocks = extract_all_blocks(p);
  ASSERT_EQ(blocks.size(), 3u);
  EXPECT_EQ(blocks[0].members, (Members{{0, 1, T}}));
  EXPECT_TRUE(blocks[1].members.empty());
  EXPECT_TRUE(blocks[1].absorbed_steps.empty());
  const auto g = build_flow_graph(p, blocks);
  EXPECT_TRUE(validate_flow_graph(g).empty());
  expect_conserved(g, p);
}

TEST(Graph, ValidatorCatchesCyclesAndStrays) {
  const auto p = procedure_of("<ol><li>Open the panel.</li><li>Close the panel.</li></ol>");
  auto g = build_flow_graph(p, {});
  ASSERT_TRUE(validate_flow_graph(g).empty());
  auto cyclic = g;
  cyclic.edges.push_back({1, 0, EdgeLabel::Next});
  EXPECT_FALSE(validate_flow_graph(cyclic).empty());
  auto stray = g;
  stray.nodes.push_back({2, NodeKind::Instruction, "orphan"});
  EXPECT_FALSE(validate_flow_graph(stray).empty());
  EXPECT_FALSE(validate_flow_graph(FlowGraph{}).empty());
}

TEST(Graph, JsonRoundTrip) {
  const auto p = procedure_of(
      "<ol><li>If the light is blinking, replace the battery. Otherwise, restart the node.</li><li>Close the "
      "cover.</li></ol>");
  auto g = build_flow_graph(p, extract_all_blocks(p));
  g.doc_url = "docs/x.html";
  g.node_path = {1, 2};
  const auto j = flow_graph_to_json(g);
  EXPECT_EQ(j.at("version"), 1);
  EXPECT_EQ(j.at("source").at("url"), "docs/x.html");
  const auto back = flow_graph_from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(flow_graph_to_json(back), j);
  EXPECT_ERROR_CODE(flow_graph_from_json(nlohmann::json{{"version", 1}}), ErrorCode::SchemaError);
}

TEST(Questions, InvertedWithAdverbMoved) {
  const auto q = generate_question("you already have the IBM Digital Analytics subgroup", false, false);
  EXPECT_EQ(q.text, "Do you have the IBM Digital Analytics subgroup already?");
  EXPECT_EQ(q.yes_branch, T);
  EXPECT_EQ(q.no_branch, F);
}

TEST(Questions, NegationRemovedFlipsBranches) {
  const auto q = generate_question("the LEDs do not show a fault on the power supplies or batteries", true, false);
  EXPECT_EQ(q.text, "Do the LEDs show a fault on the power supplies or batteries?");
  EXPECT_EQ(q.yes_branch, F);
  EXPECT_EQ(q.no_branch, T);
}

TEST(Questions, UnlessFlipsBranches) {
  const auto q = generate_question("both nodes in the I/O group are online", false, true);
  EXPECT_EQ(q.text, "Are both nodes in the I/O group online?");
  EXPECT_EQ(q.yes_branch, F);
}

TEST(Questions, FallbackTemplateKeepsNegation) {
  const auto q = generate_question("both node canisters continue to report this error", false, false);
  EXPECT_EQ(q.text, "Is the following true: both node canisters continue to report this error?");
  EXPECT_EQ(q.yes_branch, T);
  EXPECT_EQ(generate_question("booted yes shown", false, true).yes_branch, F);
}

// The SDK page walks through: question, delete, create subgroup, then the next step.
TEST(Graph, SdkPageFlow) {
  const auto doc = scrub_template(parse_document(fixtures::read("pages/sdk_integration.html"), "sdk.html"));
  const ListCandidate* steps = nullptr;
  const auto cands = extract_list_candidates(doc, 1);
  for (const auto& c : cands) {
    if (c.list_kind == ListKind::Ordered && !steps) steps = &c;
  }
  ASSERT_NE(steps, nullptr);
  const auto g = mine_flow(*steps);
  EXPECT_TRUE(validate_flow_graph(g).empty());
  expect_conserved(g, procedure_from_candidate(*steps));
  const FlowNode* decision = nullptr;
  for (const auto& n : g.nodes) {
    if (n.kind == NodeKind::Decision && n.text.find("subgroup") != std::string::npos) decision = &n;
  }
  ASSERT_NE(decision, nullptr);
  EXPECT_EQ(decision->question, "Do you have the IBM Digital Analytics subgroup already?");
  auto follow = [&](int from, EdgeLabel label) {
    for (const auto& e : g.edges) {
      if (e.from == from && e.label == label) return e.to;
    }
    return -1;
  };
  const int effect = follow(decision->id, EdgeLabel::True);
  ASSERT_GE(effect, 0);
  EXPECT_NE(g.nodes[effect].text.find("delete everything"), std::string::npos);
  const int member = follow(effect, EdgeLabel::Next);
  ASSERT_GE(member, 0);
  EXPECT_NE(g.nodes[member].text.find("Create a subgroup"), std::string::npos);
  const int after = follow(member, EdgeLabel::Next);
  ASSERT_GE(after, 0);
  EXPECT_EQ(follow(decision->id, EdgeLabel::False), after);
  EXPECT_NE(g.nodes[after].text.find("Drag the library"), std::string::npos);
}
