#pragma once

#include <array>
#include <string>
#include <vector>

#include "aliaslab/tensor.hpp"

namespace aliaslab {

// Three-state maze. Episodes start in X3 and run for two decisions; from X3
// the agent reaches X1 (right) or X2 (left) and any action leads back to X3.
enum class MazeState : int { X1 = 0, X2 = 1, X3 = 2 };
enum class MazeAction : int { Right = 0, Left = 1 };

// Compound two-token actions for the sequential maze, token order fixed:
// rr, rl, ll, lr. Token 0 = right, 1 = left.
enum class SeqAction : int { RR = 0, RL = 1, LL = 2, LR = 3 };

enum class RewardFn { base, inverted_x1, r1, r2, r3 };

inline bool is_sequential(RewardFn fn) { return fn == RewardFn::r1 || fn == RewardFn::r2 || fn == RewardFn::r3; }

inline std::string to_string(RewardFn fn) {
  switch (fn) {
    case RewardFn::base: return "base";
    case RewardFn::inverted_x1: return "inverted_x1";
    case RewardFn::r1: return "r1";
    case RewardFn::r2: return "r2";
    case RewardFn::r3: return "r3";
  }
  return "?";
}

inline std::array<double, 3> maze_observation(MazeState s) {
  std::array<double, 3> obs{0.0, 0.0, 0.0};
  obs[static_cast<size_t>(s)] = 1.0;
  return obs;
}

struct MazeTransition {
  MazeState next;
  double reward;
};

namespace detail {
// Rows X1, X2, X3; columns right, left.
inline constexpr double kBaseReward[3][2] = {{0.7, -1.0}, {1.0, -1.3}, {-0.5, -0.7}};
// Rows X1, X2, X3; columns rr, rl, ll, lr.
inline constexpr double kSeqReward[3][3][4] = {
    // R1: optimal first token differs between x1 and x2
    {{-1.0, -1.0, 0.7, 0.7}, {1.0, 1.0, -1.3, -1.3}, {-0.5, -0.5, -0.7, -0.7}},
    // R2: x1 and x2 share the full optimal action
    {{0.7, 0.7, -1.0, -1.0}, {1.0, 1.0, -1.3, -1.3}, {-0.5, -0.5, -0.7, -0.7}},
    // R3: x1 and x2 share only the first optimal token
    {{0.7, -1.0, -1.0, -1.0}, {-1.3, 1.0, -1.3, -1.3}, {-0.5, -0.5, -0.7, -0.7}},
};
}  // namespace detail

inline MazeTransition maze_step(MazeState s, MazeAction a, RewardFn fn = RewardFn::base) {
  detail::require(fn == RewardFn::base || fn == RewardFn::inverted_x1,
                  "maze_step: atomic maze uses base or inverted_x1 rewards");
  const int si = static_cast<int>(s);
  const int ai = static_cast<int>(a);
  double r = detail::kBaseReward[si][ai];
  if (fn == RewardFn::inverted_x1 && s == MazeState::X1) r = detail::kBaseReward[si][1 - ai];
  const MazeState next = s == MazeState::X3 ? (a == MazeAction::Right ? MazeState::X1 : MazeState::X2)
                                            : MazeState::X3;
  return {next, r};
}

inline MazeTransition seq_maze_step(MazeState s, SeqAction a, RewardFn fn) {
  detail::require(is_sequential(fn), "seq_maze_step: reward function must be r1, r2 or r3");
  const int table = static_cast<int>(fn) - static_cast<int>(RewardFn::r1);
  const double r = detail::kSeqReward[table][static_cast<int>(s)][static_cast<int>(a)];
  MazeState next = MazeState::X3;
  if (s == MazeState::X3) next = (a == SeqAction::RR || a == SeqAction::RL) ? MazeState::X1 : MazeState::X2;
  return {next, r};
}

inline int seq_first_token(SeqAction a) { return (a == SeqAction::RR || a == SeqAction::RL) ? 0 : 1; }
inline int seq_second_token(SeqAction a) { return (a == SeqAction::RR || a == SeqAction::LR) ? 0 : 1; }
inline SeqAction seq_action_from_tokens(int t1, int t2) {
  if (t1 == 0) return t2 == 0 ? SeqAction::RR : SeqAction::RL;
  return t2 == 1 ? SeqAction::LL : SeqAction::LR;
}

struct OptimalReturn {
  double value = 0.0;
  std::vector<int> actions;  // per-step action index (MazeAction or SeqAction)
};

// Exhaustively enumerates every two-step action sequence from X3 and returns
// the maximum undiscounted return. Ties resolve to the first sequence in
// enumeration order.
inline OptimalReturn maze_optimal_return(RewardFn fn) {
  const int n = is_sequential(fn) ? 4 : 2;
  OptimalReturn best;
  best.value = -1e300;
  for (int a1 = 0; a1 < n; ++a1) {
    for (int a2 = 0; a2 < n; ++a2) {
      MazeTransition t1 = is_sequential(fn) ? seq_maze_step(MazeState::X3, static_cast<SeqAction>(a1), fn)
                                            : maze_step(MazeState::X3, static_cast<MazeAction>(a1), fn);
      MazeTransition t2 = is_sequential(fn) ? seq_maze_step(t1.next, static_cast<SeqAction>(a2), fn)
                                            : maze_step(t1.next, static_cast<MazeAction>(a2), fn);
      const double total = t1.reward + t2.reward;
      if (total > best.value) {
        best.value = total;
        best.actions = {a1, a2};
      }
    }
  }
  return best;
}

struct AliasedPolicy {
  MazeAction merged_action;  // preferred action when x1 and x2 are aliased
  MazeAction x3_action;
  double merged_q_right = 0.0;
  double merged_q_left = 0.0;
  double greedy_return = 0.0;  // actual 2-step return of the induced policy
};

// McCallum's construction: merge x1 and x2 into a single north-facing state
// weighted by visitation, compute tabular expected returns on the abstracted
// MDP, and read off the greedy policy.
inline AliasedPolicy aliased_value_oracle(double p1, double p2) {
  detail::require(p1 >= 0.0 && p2 >= 0.0, "aliased_value_oracle: weights must be non-negative");
  const double z = p1 + p2;
  detail::require(z > 0.0, "aliased_value_oracle: weights must not both be zero");
  AliasedPolicy out;
  out.merged_q_right = (p1 * detail::kBaseReward[0][0] + p2 * detail::kBaseReward[1][0]) / z;
  out.merged_q_left = (p1 * detail::kBaseReward[0][1] + p2 * detail::kBaseReward[1][1]) / z;
  out.merged_action = out.merged_q_right >= out.merged_q_left ? MazeAction::Right : MazeAction::Left;
  // Both x3 actions reach the merged state, so its value cancels and x3's
  // preference reduces to the immediate reward row.
  out.x3_action = detail::kBaseReward[2][0] >= detail::kBaseReward[2][1] ? MazeAction::Right : MazeAction::Left;
  MazeTransition t1 = maze_step(MazeState::X3, out.x3_action);
  MazeTransition t2 = maze_step(t1.next, out.merged_action);
  out.greedy_return = t1.reward + t2.reward;
  return out;
}

}  // namespace aliaslab
