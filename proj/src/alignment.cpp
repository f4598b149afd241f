#include "ccsel/alignment.hpp"

#include <algorithm>

#include "ccsel/errors.hpp"

namespace ccsel {

AlignmentResult align(const std::vector<std::string> &reference,
                      const std::vector<std::string> &hypothesis) {
  const std::size_t R = reference.size();
  const std::size_t H = hypothesis.size();

  // dp[i][j] = minimal edits aligning reference[0..i) with hypothesis[0..j).
  std::vector<std::vector<std::size_t>> dp(R + 1,
                                           std::vector<std::size_t>(H + 1));
  for (std::size_t i = 0; i <= R; ++i) dp[i][0] = i;
  for (std::size_t j = 0; j <= H; ++j) dp[0][j] = j;
  for (std::size_t i = 1; i <= R; ++i) {
    for (std::size_t j = 1; j <= H; ++j) {
      const std::size_t sub_cost =
          dp[i - 1][j - 1] + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
      dp[i][j] = std::min({sub_cost, dp[i - 1][j] + 1, dp[i][j - 1] + 1});
    }
  }

  // Backtrace with the tie order Match > Substitute > Delete > Insert.
  AlignmentResult res;
  std::size_t i = R, j = H;
  std::vector<EditOp> rev;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && reference[i - 1] == hypothesis[j - 1] &&
        dp[i][j] == dp[i - 1][j - 1]) {
      rev.push_back({EditKind::Match, i - 1, j - 1});
      --i;
      --j;
    } else if (i > 0 && j > 0 && dp[i][j] == dp[i - 1][j - 1] + 1 &&
               reference[i - 1] != hypothesis[j - 1]) {
      rev.push_back({EditKind::Substitute, i - 1, j - 1});
      --i;
      --j;
    } else if (i > 0 && dp[i][j] == dp[i - 1][j] + 1) {
      rev.push_back({EditKind::Delete, i - 1, std::nullopt});
      --i;
    } else {
      rev.push_back({EditKind::Insert, std::nullopt, j - 1});
      --j;
    }
  }
  res.ops.assign(rev.rbegin(), rev.rend());

  res.correct_flags.assign(H, false);
  res.dels_before.assign(H, 0);
  std::size_t pending_dels = 0;
  for (const auto &op : res.ops) {
    switch (op.kind) {
      case EditKind::Match:
        ++res.n_match;
        res.correct_flags[*op.hyp_index] = true;
        res.dels_before[*op.hyp_index] += pending_dels;
        pending_dels = 0;
        break;
      case EditKind::Substitute:
        ++res.n_sub;
        res.dels_before[*op.hyp_index] += pending_dels;
        pending_dels = 0;
        break;
      case EditKind::Insert:
        ++res.n_ins;
        res.dels_before[*op.hyp_index] += pending_dels;
        pending_dels = 0;
        break;
      case EditKind::Delete:
        ++res.n_del;
        ++pending_dels;
        break;
    }
  }
  // Trailing deletions attach to the final hypothesis position.
  if (pending_dels > 0 && H > 0) res.dels_before[H - 1] += pending_dels;
  return res;
}

double wer(const AlignmentResult &result, std::size_t ref_len) {
  if (result.n_match + result.n_sub + result.n_del != ref_len) {
    throw DataError("wer: counts inconsistent with ref_len");
  }
  const std::size_t errors = result.n_sub + result.n_del + result.n_ins;
  if (ref_len == 0) {
    return static_cast<double>(result.n_ins);
  }
  return static_cast<double>(errors) / static_cast<double>(ref_len);
}

std::vector<double> cumulative_labels(const AlignmentResult &result,
                                      bool count_deletions) {
  const std::size_t n_words = result.correct_flags.size();
  if (n_words == 0) {
    throw DataError("cumulative_labels: empty hypothesis has no labels");
  }
  std::vector<double> labels(n_words);
  double correct = 0.0;
  double dels = 0.0;
  for (std::size_t n = 0; n < n_words; ++n) {
    if (result.correct_flags[n]) correct += 1.0;
    dels += static_cast<double>(result.dels_before[n]);
    double y = (correct - (count_deletions ? dels : 0.0)) /
               static_cast<double>(n + 1);
    labels[n] = std::clamp(y, 0.0, 1.0);
  }
  return labels;
}

}  // namespace ccsel
