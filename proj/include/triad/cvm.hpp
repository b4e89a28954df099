#pragma once

namespace triad::cvm {

enum class Decision { defect, normal };
enum class Rationale { consensus, trusted_query, adopted_opposite };

struct ModelOpinion {
    Decision decision;
    double normal_score_query = 0.0;      // word-predict score for "normal" on the query
    double normal_score_reference = 0.0;  // same model, reference image scored as query
};

struct Verdict {
    Decision decision;
    Rationale rationale;
};

/// Combine the zero-shot and one-shot opinions. Consensus wins outright; on
/// disagreement the model saying "normal" is checked against its own reference
/// score, never against the other model's scores. A tie trusts the query.
Verdict vote(const ModelOpinion& zero, const ModelOpinion& one);

}  // namespace triad::cvm
